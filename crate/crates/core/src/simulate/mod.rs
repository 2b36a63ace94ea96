//! Finite-N disorder samples of `H^h_N`, exact derivatives in a frame adapted
//! to the configuration, and a multistart critical-point census.
//!
//! The field direction `u` is the first standard basis vector.

mod field;
mod finder;
mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use field::{
    canonical_frame, derivative_check, eval_field, eval_field_in_frame, sample_field,
    sample_field_draw, DegreeTensor, DerivativeCheck, EvalResult, FieldSample, MAX_TENSOR_ENTRIES,
};
pub use finder::{
    find_critical_points, run_census, CriticalPoint, FinderOptions, FinderOutcome, StartFailure,
};
pub use report::{
    covariance_selftest, landscape_report, ArgmaxStats, CovarianceRow, LandscapeReport, MeanSd,
    PredictionDeltas,
};

/// Independent generator keyed by `(seed, sample, start, purpose)`.
pub(crate) fn task_rng(seed: u64, sample: u64, start: u64, purpose: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, v) in key.chunks_exact_mut(8).zip([seed, sample, start, purpose]) {
        chunk.copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
