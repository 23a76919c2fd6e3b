//! Dual-certificate machinery: tangent-space restricted isometry reports,
//! the golfing construction of approximate dual certificates, and the
//! deterministic upgrade ("putting") to an exact certificate.

mod golfing;
mod putting;
mod rip;

pub use golfing::{golfing_construct, validate_approx_certificate, CertificateReport, GolfingTrace};
pub use putting::{putting, validate_exact_certificate, ExactCertificate};
pub use rip::{rip_on_tangent, rip_on_tangent_dense, rip_on_tangent_iterative, RipMethod, RipReport};
