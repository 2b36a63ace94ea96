//! Kac-Rice expected counts of critical points, their large-`N` limit and
//! exponential rates.

mod count;
mod restriction;

pub use count::{
    default_rho_mode, energy_variance, expected_count, laplace_count_limit, ln_prefactor,
    log_integrand, p_overlap_energy, rate_from_integral, CountResult, GammaTransform,
    QuadratureSpec, RateFit, XRange, MIN_COUNT_N,
};
pub use restriction::{IntervalSet, RestrictionSet};
