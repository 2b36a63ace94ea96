//! GOE layer: Hermite functions, the averaged spectral density `rho_N`,
//! shifted-determinant identities and sampling.

mod density;
mod hermite;
mod sample;

pub use density::{
    density_parts, ln_shifted_det_mean, rho, rho_asymptotic, rho_exact, rho_exact_with, semicircle,
    shifted_det_mean, DensityMode, DensityParts, JnMethod, DEFAULT_ASYMPTOTIC_DELTA, MAX_EXACT_N,
};
pub use hermite::{
    erfcx, hermite_bundle, hermite_phi, integral_phi, ln_integral_phi_even, tail_integral,
    HermiteBundle, MAX_HERMITE_DEGREE,
};
pub use sample::{
    det_second_moment_check, draw_rng, ln_abs_det, mc_shifted_det, sample_goe, sample_goe_spectrum,
    sample_goe_spectrum_draw, GoeSpec, McEstimate, MAX_MC_N, MAX_MC_SAMPLES, MAX_SAMPLE_N,
};
