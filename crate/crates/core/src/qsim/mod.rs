//! Dense pure-state simulation over labeled multi-register domains.
//!
//! Amplitudes are stored row-major with register 0 varying slowest. Mixed states
//! arise only from measurements and are kept as [`Ensemble`]s of pure branches.

mod ops;
mod register;
mod state;

pub use ops::{
    apply_relabel_phase, apply_unitary, l2_distance_up_to_phase, measure, measure_in_basis,
    measure_out, overlap, qft, qft_inverse, rejection_sample, trace_distance_pure,
    RejectionOutcome, Unitary,
};
pub use register::{Register, RegisterShape, DEFAULT_DIMENSION_CAP};
pub use state::{Ensemble, PureState};
