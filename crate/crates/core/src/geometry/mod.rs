//! Descent-cone geometry, tangent spaces, and the pinching toolkit.

mod cones;
mod smallball;
mod tangent;
mod toolkit;
mod width;

pub use cones::{
    descent_direction_test, effective_rank_check, min_conic_singular_value_estimate,
    sample_descent_direction, ConeSample, MEMBERSHIP_TOL,
};
pub use smallball::{small_ball_estimates, SmallBallEstimates};
pub use tangent::{coherence, BlockTangentSpace, SvdFactors, TangentProjector, TangentSpace};
pub use toolkit::{blind_deconv_incoherence, dilation, pinch_check, sign_matrix, signal_incoherence};
pub use width::{gaussian_width_estimate, DescentConeSampler, MatrixSetSampler, SingletonSampler, SphereSampler};
