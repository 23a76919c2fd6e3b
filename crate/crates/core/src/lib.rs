//! Numerical laboratory for low-rank matrix recovery.
//!
//! The crate is organized around five pieces:
//!
//! * [`operators`] — measurement ensembles (Gaussian, entry sampling, blind
//!   deconvolution, lifted phase retrieval, demixing) with exact
//!   apply/adjoint pairs and deterministic seeding.
//! * [`geometry`] — tangent spaces, coherence, descent-cone membership and
//!   sampling, conic singular value / Gaussian width / small-ball
//!   estimators, and the pinching-dilation toolkit.
//! * [`solvers`] — first-order splitting solvers for constrained
//!   nuclear-norm minimization, PSD l1 fitting, and sum-of-nuclear-norms
//!   demixing.
//! * [`certificates`] — tangent-space restricted isometry reports, the
//!   golfing construction of approximate dual certificates, and the
//!   deterministic upgrade to an exact certificate.
//! * [`harness`] — reproducible CLI experiments writing CSV.

pub mod error;
pub mod kv;
pub mod mat;
pub mod rng;
pub mod util;

pub mod linalg;

pub mod operators;

pub mod geometry;

pub mod solvers;

pub mod certificates;

pub mod harness;

pub use error::{Error, Result};
pub use mat::{DenseMatrix, ScalarField, C64};
