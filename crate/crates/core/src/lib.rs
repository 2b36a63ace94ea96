//! Critical points of mixed p-spin spherical Hamiltonians with a
//! deterministic external field.
//!
//! * [`model`]: mixtures, thresholds, the exponent `F` and its maximizers.
//! * [`goe`]: GOE spectral density via Hermite functions, sampling and
//!   determinant identities.
//! * [`kacrice`]: exact expected critical-point counts by quadrature.
//! * [`simulate`]: finite-N disorder samples and critical-point search.

pub mod acceptance;
pub mod error;
pub mod goe;
pub mod kacrice;
pub mod model;
pub mod quadrature;
pub mod scaled;
pub mod simulate;

pub use error::{Error, Result};
pub use scaled::ScaledValue;
