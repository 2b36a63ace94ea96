//! Hermite functions `phi_n(y) = (2^n n! sqrt(pi))^{-1/2} H_n(y) e^{-y^2/2}`
//! and their tail integrals `T_n(y) = int_y^inf phi_n`, evaluated by forward
//! recurrence with a shared binary exponent.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::{erfc, lgamma as ln_gamma};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scaled::ScaledValue;

/// Largest degree accepted by [`hermite_phi`].
pub const MAX_HERMITE_DEGREE: usize = 2001;

// Rescale the carried values once any of them leaves [2^-RESCALE, 2^RESCALE].
const RESCALE: i32 = 600;

/// `pi^{-1/4}`
pub(crate) fn pi_quarter_inv() -> f64 {
    PI.powf(-0.25)
}

/// Scaled complementary error function `erfc(z) e^{z^2}` for `z >= 0`.
pub fn erfcx(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z <= 8.0 {
        erfc(z) * (z * z).exp()
    } else {
        // asymptotic series, truncation error below 1e-16 for z > 8
        let w = 1.0 / (2.0 * z * z);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..20 {
            term *= -((2 * k - 1) as f64) * w;
            sum += term;
        }
        sum / (z * PI.sqrt())
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_HERMITE_DEGREE {
        return Err(Error::TooLarge(format!(
            "Hermite degree {n} exceeds {MAX_HERMITE_DEGREE}"
        )));
    }
    Ok(())
}

/// Running state of the recurrences at a fixed `y >= 0`.
struct Recurrence {
    y: f64,
    k: usize,
    // phi_{k-1}, phi_k, T_{k-1}, T_k, all multiplied by 2^-shift / e^{-y^2/2}
    phi_prev: f64,
    phi_cur: f64,
    tail_prev: f64,
    tail_cur: f64,
    shift: i64,
}

impl Recurrence {
    /// State at `k = 1`; `phi_{-1}` and `T_{-1}` are zero placeholders.
    fn start(y: f64) -> Self {
        debug_assert!(y >= 0.0);
        let c = pi_quarter_inv();
        let phi0 = c;
        let phi1 = SQRT_2 * y * c;
        let tail0 = c * (PI / 2.0).sqrt() * erfcx(y * FRAC_1_SQRT_2);
        let tail1 = SQRT_2 * phi0;
        Self {
            y,
            k: 1,
            phi_prev: phi0,
            phi_cur: phi1,
            tail_prev: tail0,
            tail_cur: tail1,
            shift: 0,
        }
    }

    fn step(&mut self) {
        let k = self.k as f64;
        let a = (2.0 / (k + 1.0)).sqrt();
        let b = (k / (k + 1.0)).sqrt();
        let phi_next = self.y * a * self.phi_cur - b * self.phi_prev;
        let tail_next = b * self.tail_prev + a * self.phi_cur;
        self.phi_prev = self.phi_cur;
        self.phi_cur = phi_next;
        self.tail_prev = self.tail_cur;
        self.tail_cur = tail_next;
        self.k += 1;
        let big = self
            .phi_cur
            .abs()
            .max(self.phi_prev.abs())
            .max(self.tail_cur.abs())
            .max(self.tail_prev.abs());
        if big > 2f64.powi(RESCALE) || (big < 2f64.powi(-RESCALE) && big > 0.0) {
            let e = big.log2().floor() as i32;
            let f = 2f64.powi(-e);
            self.phi_prev *= f;
            self.phi_cur *= f;
            self.tail_prev *= f;
            self.tail_cur *= f;
            self.shift += i64::from(e);
        }
    }

    fn advance_to(&mut self, k: usize) {
        while self.k < k {
            self.step();
        }
    }

    fn unscale(&self, v: f64) -> ScaledValue {
        ScaledValue::from_f64(v).ldexp(self.shift) * ScaledValue::exp(-0.5 * self.y * self.y)
    }
}

/// `phi_{n-1}, phi_n, phi_{n+1}` at one argument.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HermiteBundle {
    pub n: usize,
    pub x: f64,
    pub phi_prev: ScaledValue,
    pub phi: ScaledValue,
    pub phi_next: ScaledValue,
}

impl HermiteBundle {
    /// `|phi_{n+1} - (x sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1})| / |phi_{n+1}|`
    pub fn recurrence_residual(&self) -> f64 {
        let n = self.n as f64;
        let pred = self
            .phi
            .scale(self.x * (2.0 / (n + 1.0)).sqrt())
            .sub(self.phi_prev.scale((n / (n + 1.0)).sqrt()));
        let diff = self.phi_next.sub(pred);
        if self.phi_next.is_zero() {
            return diff.abs().to_f64();
        }
        (diff / self.phi_next).abs().to_f64()
    }
}

fn parity_sign(v: ScaledValue, n: usize, negative: bool) -> ScaledValue {
    if negative && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Hermite function `phi_n(x)` with exact parity.
pub fn hermite_phi(n: usize, x: f64) -> Result<ScaledValue> {
    Ok(hermite_bundle(n, x)?.phi)
}

/// `phi_{n-1}, phi_n, phi_{n+1}` at `x` (`phi_{-1} = 0`).
pub fn hermite_bundle(n: usize, x: f64) -> Result<HermiteBundle> {
    check_degree(n)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("Hermite argument {x} is not finite")));
    }
    let neg = x < 0.0;
    let y = x.abs();
    let mut r = Recurrence::start(y);
    let (prev, cur, next) = if n == 0 {
        (
            ScaledValue::ZERO,
            r.unscale(r.phi_prev),
            r.unscale(r.phi_cur),
        )
    } else {
        r.advance_to(n);
        let prev = r.unscale(r.phi_prev);
        let cur = r.unscale(r.phi_cur);
        r.step();
        (prev, cur, r.unscale(r.phi_cur))
    };
    Ok(HermiteBundle {
        n,
        x,
        phi_prev: if n == 0 {
            prev
        } else {
            parity_sign(prev, n - 1, neg)
        },
        phi: parity_sign(cur, n, neg),
        phi_next: parity_sign(next, n + 1, neg),
    })
}

/// `ln int_R phi_n` for even `n`; odd `n` integrate to zero.
pub fn ln_integral_phi_even(n: usize) -> f64 {
    assert!(n % 2 == 0, "odd Hermite functions integrate to zero");
    let m = (n / 2) as f64;
    0.5 * (2.0 * PI).ln() + 0.5 * ln_gamma(2.0 * m + 1.0)
        - m * std::f64::consts::LN_2
        - ln_gamma(m + 1.0)
        - 0.25 * PI.ln()
}

/// `int_R phi_n` as a scaled value (zero for odd `n`, positive otherwise).
pub fn integral_phi(n: usize) -> ScaledValue {
    if n % 2 == 1 {
        ScaledValue::ZERO
    } else {
        ScaledValue::exp(ln_integral_phi_even(n))
    }
}

/// Everything the density needs at one point: `phi_{n-1}, phi_n, phi_{n+1}`
/// and `T_n` at `y >= 0`.
pub(crate) struct TailBundle {
    pub phi_prev: ScaledValue,
    pub phi: ScaledValue,
    pub phi_next: ScaledValue,
    pub tail: ScaledValue,
}

pub(crate) fn tail_bundle(n: usize, y: f64) -> TailBundle {
    debug_assert!(n >= 1 && y >= 0.0);
    let mut r = Recurrence::start(y);
    r.advance_to(n);
    let phi_prev = r.unscale(r.phi_prev);
    let phi = r.unscale(r.phi_cur);
    let tail = r.unscale(r.tail_cur);
    r.step();
    TailBundle {
        phi_prev,
        phi,
        phi_next: r.unscale(r.phi_cur),
        tail,
    }
}

/// Tail integral `T_n(y) = int_y^inf phi_n(t) dt` for any real `y`.
pub fn tail_integral(n: usize, y: f64) -> Result<ScaledValue> {
    check_degree(n)?;
    if !y.is_finite() {
        return Err(Error::Domain(format!(
            "tail integral bound {y} is not finite"
        )));
    }
    let t = if n == 0 {
        let r = Recurrence::start(y.abs());
        r.unscale(r.tail_prev)
    } else {
        tail_bundle(n, y.abs()).tail
    };
    if y >= 0.0 || n % 2 == 1 {
        Ok(t)
    } else {
        Ok(integral_phi(n).sub(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gk;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn small_degree_values() {
        assert!(close(
            hermite_phi(0, 0.0).unwrap().to_f64(),
            0.7511255444649425,
            1e-15
        ));
        assert_eq!(hermite_phi(1, 0.0).unwrap().to_f64(), 0.0);
        let want = -2.0 / (8.0 * PI.sqrt()).sqrt();
        assert!(close(hermite_phi(2, 0.0).unwrap().to_f64(), want, 1e-15));
        assert!(hermite_phi(2002, 0.0).is_err());
    }

    #[test]
    fn parity_is_exact() {
        for n in [0, 1, 2, 7, 50, 301] {
            for x in [0.3, 1.7, 12.0, 31.0] {
                let p = hermite_phi(n, x).unwrap();
                let m = hermite_phi(n, -x).unwrap();
                let s = if n % 2 == 0 { p } else { -p };
                assert_eq!(s, m);
            }
        }
    }

    #[test]
    fn matches_explicit_polynomials() {
        // H_3 = 8y^3 - 12y, H_4 = 16y^4 - 48y^2 + 12
        for y in [-2.5, -0.4, 0.0, 0.9, 3.3] {
            let w = (-y * y / 2.0f64).exp() * pi_quarter_inv();
            let p3 = (8.0 * y * y * y - 12.0 * y) / (8.0f64 * 6.0).sqrt() * w;
            let p4 = (16.0 * y.powi(4) - 48.0 * y * y + 12.0) / (16.0f64 * 24.0).sqrt() * w;
            assert!((hermite_phi(3, y).unwrap().to_f64() - p3).abs() < 1e-14);
            assert!((hermite_phi(4, y).unwrap().to_f64() - p4).abs() < 1e-14);
        }
    }

    #[test]
    fn bundle_recurrence_residual() {
        for n in [1, 10, 200, 2000] {
            for x in [0.5, 20.0, 70.0] {
                let b = hermite_bundle(n, x).unwrap();
                assert!(b.recurrence_residual() <= 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn orthonormality() {
        for n in [0usize, 1, 5, 20, 100] {
            let lim = (2.0 * n as f64 + 1.0).sqrt() + 12.0;
            let (v, _) = adaptive_gk(
                |t| hermite_phi(n, t).unwrap().to_f64().powi(2),
                -lim,
                lim,
                4 * (n + 4),
                1e-14,
                1e-12,
                100_000,
            )
            .unwrap();
            assert!((v - 1.0).abs() <= 1e-8, "n={n}: {v}");
        }
    }

    #[test]
    fn integrals_of_even_functions_are_positive() {
        // int phi_2 = pi^{1/4}
        assert!(close(integral_phi(2).to_f64(), PI.powf(0.25), 1e-14));
        for n in [0usize, 2, 4, 10, 40] {
            let lim = (2.0 * n as f64 + 1.0).sqrt() + 12.0;
            let (v, _) = adaptive_gk(
                |t| hermite_phi(n, t).unwrap().to_f64(),
                -lim,
                lim,
                4 * (n + 4),
                1e-14,
                1e-12,
                100_000,
            )
            .unwrap();
            assert!(close(integral_phi(n).to_f64(), v, 1e-10), "n={n}");
        }
    }

    #[test]
    fn tail_integrals_match_quadrature() {
        for n in [0usize, 1, 2, 9, 60] {
            for y in [-3.0, -0.5, 0.0, 0.7, 2.0, 6.0] {
                let lim = (2.0 * n as f64 + 1.0).sqrt() + 14.0;
                let (v, _) = adaptive_gk(
                    |t| hermite_phi(n, t).unwrap().to_f64(),
                    y,
                    lim,
                    4 * (n + 4),
                    1e-15,
                    1e-12,
                    100_000,
                )
                .unwrap();
                let t = tail_integral(n, y).unwrap().to_f64();
                assert!((t - v).abs() <= 1e-10, "n={n} y={y}: {t} vs {v}");
            }
        }
    }

    #[test]
    fn erfcx_reference_values() {
        let refs = [
            (0.5, 0.61569034419292587487),
            (2.0, 0.25539567631050574387),
            (5.0, 0.11070463773306862637),
            (7.9, 0.070857477367396994944),
            (8.1, 0.06913392017734351029),
            (12.0, 0.04685422101489376262),
            (30.0, 0.018795888861416751497),
        ];
        for (z, want) in refs {
            assert!(
                (erfcx(z) - want).abs() <= 1e-13 * want,
                "z={z}: {}",
                (erfcx(z) - want) / want
            );
        }
        assert!(erfcx(1e6) > 0.0);
    }
}
