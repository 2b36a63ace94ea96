//! Mixtures, thresholds and the variational problem for the annealed count.

mod mixture;
mod system;
mod variational;

pub use mixture::{MixedModel, MAX_DEGREE};
pub use system::{
    solve_system_numeric, system_residual, BranchFailure, SystemRoot, SystemSolution,
};
pub use variational::{
    annealed_rate, big_f, big_g, classify_and_maximize, eta_of, f_hessian, hessian_f_at_max, phi,
    phi_second, threshold_hc, tilde_f, trivial_predictions, MaxHessian, MaximizerReport, Regime,
    SystemCoefficients, TrivialPredictions,
};
