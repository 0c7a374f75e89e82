//! LWE → EDCP → S|LWE>^phase, the `E` enumeration driver, and the sample
//! generation slice of the quantized iterative reduction.

mod edcp;
mod guess;
mod regev;
mod tails;

pub use edcp::{
    center_distribution_params, decode_lwe, dense_residual, edcp_sigma_c, edcp_to_slwe_phase,
    kernel_trivial, CenterLaw, EdcpHidden, EdcpParams, EdcpSample, EdcpSampler, BALL_CAP,
};
pub use guess::{
    amplitude_for_guess, guess_e_driver, GuessOutcome, PhaseSolver, SievePhaseSolver, Verifier,
};
pub use regev::{
    gaussian_width_distance, regev_a_law, regev_generate_sample, width_grid, RegevParams,
    RegevSampleRecord, SMOOTHING_EPSILON,
};
pub use tails::{
    default_epsilon, verify_tail_bounds, SkippedPoint, TailPoint, TailReport,
};
