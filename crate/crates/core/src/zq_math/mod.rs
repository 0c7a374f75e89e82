//! Modular arithmetic, Gaussian functions, discrete Gaussian sampling, the
//! amplitude DFT, CRT and small lattice helpers.

mod crt;
mod dft;
mod gaussian;
mod grid;
mod lattice;
mod linalg;
mod modular;
mod sampling;

pub use crt::crt_combine;
pub use dft::{dft_amplitude, fold_table, IntTable};
pub use gaussian::{
    cutoff_radius, rho, rho_cov, rho_s, rho_s_vec, symmetric_eigenvalues, CovarianceSpec,
    GaussianParam, TRUNCATION_RATIO,
};
pub use grid::CosetGrid;
pub use lattice::{
    dual_sum_excluding_origin, lambda1_inf_check, lambda1_l2, smoothing_parameter, SmallLattice,
    LAMBDA1_ENUMERATION_CAP,
};
pub use linalg::{solve_mod, solve_prime_power, ZMatrix};
pub use modular::{
    center_mod, dot_mod, gcd, is_prime, mod_inverse, prime_power_factors, reduce_mod,
    round_half_up, round_to_multiple, Modulus,
};
pub use sampling::{sample_index, DiscreteGaussianTable};
