//! Averaged spectral density `rho_N` of `GOE_N(1/N)`, exactly through
//! Hermite functions and asymptotically outside the bulk, plus the expected
//! absolute determinant of a shifted GOE matrix.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;

use libm::lgamma as ln_gamma;
use serde::{Serialize, Serializer};

use super::hermite::{integral_phi, tail_bundle, MAX_HERMITE_DEGREE};
use crate::error::{Error, Result};
use crate::model::phi;
use crate::quadrature::adaptive_gk;
use crate::scaled::ScaledValue;

/// Largest `N` for the exact Hermite evaluation.
pub const MAX_EXACT_N: usize = 2000;

/// Default distance `delta` from the bulk edge, `|x| >= sqrt 2 (1 + delta)`,
/// required by the asymptotic density.
pub const DEFAULT_ASYMPTOTIC_DELTA: f64 = 0.05;

/// How `J_N` enters the exact density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JnMethod {
    /// Tail integral `int_y^inf phi_N` carried along the Hermite recurrence.
    #[default]
    Recurrence,
    /// Adaptive Gauss-Kronrod on panels of width `pi / sqrt(2N)`.
    Quadrature,
}

/// Which evaluation of `rho_N` to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    ExactHermite,
    /// Leading-order large-`N` form, refused within `sqrt 2 (1 + delta)`.
    Asymptotic {
        delta: f64,
    },
}

impl DensityMode {
    pub fn asymptotic() -> Self {
        DensityMode::Asymptotic {
            delta: DEFAULT_ASYMPTOTIC_DELTA,
        }
    }

    /// Smallest `|x|` at which the mode may be evaluated.
    pub fn min_abs_x(&self) -> f64 {
        match self {
            DensityMode::ExactHermite => 0.0,
            DensityMode::Asymptotic { delta } => SQRT_2 * (1.0 + delta),
        }
    }
}

impl fmt::Display for DensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityMode::ExactHermite => f.write_str("exact"),
            DensityMode::Asymptotic { delta } => write!(f, "asymptotic(delta={delta})"),
        }
    }
}

impl Serialize for DensityMode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("GOE dimension must be positive".into()));
    }
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge(format!(
            "exact density limited to N <= {MAX_EXACT_N}, got {n}"
        )));
    }
    debug_assert!(n < MAX_HERMITE_DEGREE);
    Ok(())
}

/// `T_N(y)` by adaptive quadrature of `phi_N` over `[y, Y]`; the integrand is
/// normalized by `phi_N` at the larger of `y` and the turning point.
fn tail_by_quadrature(n: usize, y: f64) -> Result<ScaledValue> {
    let turning = (2.0 * n as f64 + 1.0).sqrt();
    let anchor = y.max(turning);
    let reference = super::hermite::hermite_phi(n, anchor)?.abs();
    let upper = anchor + 15.0;
    let width = PI / (2.0 * n as f64).sqrt();
    let panels = ((upper - y) / width).ceil().max(1.0) as usize;
    let (v, _) = adaptive_gk(
        |t| {
            let p = super::hermite::hermite_phi(n, t).expect("degree checked");
            (p / reference).to_f64()
        },
        y,
        upper,
        panels,
        1e-300,
        1e-13,
        64 * panels + 1000,
    )?;
    Ok(reference.scale(v))
}

/// The three pieces of `sqrt N rho_N(x) = A_N + S_N + alpha_N`.
#[derive(Debug, Clone, Copy)]
pub struct DensityParts {
    pub a: ScaledValue,
    pub s: ScaledValue,
    pub alpha: ScaledValue,
}

pub fn density_parts(n: usize, x: f64, method: JnMethod) -> Result<DensityParts> {
    check_n(n)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("density argument {x} is not finite")));
    }
    let nf = n as f64;
    // rho_N is even; J_N and phi_{N-1} have matching parity so S_N is even too
    let y = nf.sqrt() * x.abs();
    let tb = tail_bundle(n, y);
    let tail = match method {
        JnMethod::Recurrence => tb.tail,
        JnMethod::Quadrature => tail_by_quadrature(n, y)?,
    };
    let a = tb
        .phi
        .powi(2)
        .scale(nf)
        .sub((tb.phi_prev * tb.phi_next).scale((nf * (nf + 1.0)).sqrt()));
    let j = integral_phi(n).scale(0.5).sub(tail);
    let s = (tb.phi_prev * j).scale((nf / 2.0).sqrt());
    let alpha = if n % 2 == 1 {
        tb.phi_prev / integral_phi(n - 1)
    } else {
        ScaledValue::ZERO
    };
    Ok(DensityParts { a, s, alpha })
}

/// Exact `rho_N(x)` with `J_N` from the tail recurrence.
pub fn rho_exact(n: usize, x: f64) -> Result<ScaledValue> {
    rho_exact_with(n, x, JnMethod::Recurrence)
}

pub fn rho_exact_with(n: usize, x: f64, method: JnMethod) -> Result<ScaledValue> {
    let p = density_parts(n, x, method)?;
    let sum = p.a.add(p.s).add(p.alpha);
    let v = sum.scale(1.0 / (n as f64).sqrt());
    if v.signum() < 0.0 {
        let mut largest = p.a.abs();
        for t in [p.s.abs(), p.alpha.abs()] {
            if t.cmp_abs(largest).is_gt() {
                largest = t;
            }
        }
        // rounding noise from the cancellation is clamped to zero
        if (sum.abs() / largest).to_f64() <= 1e-12 {
            return Ok(ScaledValue::ZERO);
        }
        return Err(Error::Numerical(format!(
            "negative density {v} at N={n}, x={x}"
        )));
    }
    Ok(v)
}

/// Leading-order `rho_N(x)` outside the bulk, `|x| >= sqrt 2 (1 + delta)`.
pub fn rho_asymptotic(n: usize, x: f64, delta: f64) -> Result<ScaledValue> {
    if n == 0 {
        return Err(Error::Domain("GOE dimension must be positive".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!(
            "edge margin delta = {delta} must be >= 0"
        )));
    }
    let ax = x.abs();
    if !(ax >= SQRT_2 * (1.0 + delta)) || !ax.is_finite() || (delta == 0.0 && ax == SQRT_2) {
        return Err(Error::Domain(format!(
            "asymptotic density needs |x| >= sqrt 2 (1 + {delta}), got {x}"
        )));
    }
    let nf = n as f64;
    let r = (x * x - 2.0).sqrt();
    let ln = nf * phi(x, 0)
        - (2.0 * (PI * nf).sqrt()).ln()
        - 0.25 * (x * x - 2.0).ln()
        - 0.5 * (ax + r).ln();
    Ok(ScaledValue::exp(ln))
}

/// Density in the requested mode.
pub fn rho(n: usize, x: f64, mode: DensityMode) -> Result<ScaledValue> {
    match mode {
        DensityMode::ExactHermite => rho_exact(n, x),
        DensityMode::Asymptotic { delta } => rho_asymptotic(n, x, delta),
    }
}

/// `ln E|det(x I_{N-1} + GOE_{N-1}(1/N))|` from the density identity
/// `sqrt 2 N^{-(N-2)/2} Gamma(N/2) e^{N x^2 / 2} rho_N(x)`.
pub fn ln_shifted_det_mean(n: usize, x: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "shifted determinant needs N >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let r = rho_exact(n, x)?;
    Ok(0.5 * LN_2 - 0.5 * (nf - 2.0) * nf.ln() + ln_gamma(nf / 2.0) + 0.5 * nf * x * x + r.ln())
}

pub fn shifted_det_mean(n: usize, x: f64) -> Result<ScaledValue> {
    Ok(ScaledValue::exp(ln_shifted_det_mean(n, x)?))
}

/// Semicircle density `sqrt(2 - x^2) / pi` of the `GOE_N(1/N)` limit.
pub fn semicircle(x: f64) -> f64 {
    if x.abs() >= SQRT_2 {
        0.0
    } else {
        (2.0 - x * x).sqrt() / PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: f64) -> f64 {
        (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn one_by_one_is_standard_gaussian() {
        for i in 0..=80 {
            let x = -4.0 + 0.1 * i as f64;
            let r = rho_exact(1, x).unwrap().to_f64();
            assert!((r - gauss(x)).abs() <= 1e-8, "x={x}");
        }
    }

    #[test]
    fn two_by_two_at_origin() {
        let r = rho_exact(2, 0.0).unwrap().to_f64();
        assert!((r - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn christoffel_darboux_matches_sum() {
        for n in [1usize, 2, 3, 17, 64] {
            for x in [0.0, 0.4, 1.1, 1.6, 3.0] {
                let y = (n as f64).sqrt() * x;
                let mut sum = ScaledValue::ZERO;
                for k in 0..n {
                    sum = sum.add(super::super::hermite::hermite_phi(k, y).unwrap().powi(2));
                }
                let a = density_parts(n, x, JnMethod::Recurrence).unwrap().a;
                let rel = (a.sub(sum) / sum).abs().to_f64();
                assert!(rel < 1e-11, "n={n} x={x}: {rel}");
            }
        }
    }

    #[test]
    fn jn_routes_agree() {
        for n in [1usize, 2, 5, 40, 201] {
            for x in [0.0, 0.3, 1.2, 1.5, 2.5] {
                let a = rho_exact_with(n, x, JnMethod::Recurrence).unwrap();
                let b = rho_exact_with(n, x, JnMethod::Quadrature).unwrap();
                let rel = (a.sub(b) / a).abs().to_f64();
                assert!(rel < 1e-9, "n={n} x={x}: {rel}");
            }
        }
    }

    #[test]
    fn far_tail_is_representable() {
        let r = rho_exact(2000, 6.0).unwrap();
        assert!(r.to_f64() == 0.0 && !r.is_zero());
        let ln_ratio = r.ln() - 2000.0 * phi(6.0, 0);
        assert!(ln_ratio.abs() < 10.0);
    }

    #[test]
    fn asymptotic_refuses_bulk() {
        assert!(rho_asymptotic(100, 1.45, 0.05).is_err());
        assert!(rho_asymptotic(100, 1.0, 0.0).is_err());
        assert_eq!(
            rho_asymptotic(100, 2.0, 0.05).unwrap(),
            rho_asymptotic(100, -2.0, 0.05).unwrap()
        );
    }

    #[test]
    fn shifted_det_small_cases() {
        let v0 = shifted_det_mean(2, 0.0).unwrap().to_f64();
        assert!((v0 - 1.0 / PI.sqrt()).abs() < 1e-13);
        // folded Gaussian mean with mu = 1, sigma^2 = 1/2
        let s = 0.5f64.sqrt();
        let folded = s * (2.0 / PI).sqrt() * (-1.0f64).exp()
            + (1.0 - libm::erfc(1.0 / (s * std::f64::consts::SQRT_2)));
        let v1 = shifted_det_mean(2, 1.0).unwrap().to_f64();
        assert!((v1 - folded).abs() < 1e-12);
        assert!((v1 - 1.0502545).abs() < 1e-7);
        assert!(shifted_det_mean(1, 0.0).is_err());
    }
}
