//! Numerical enumeration of the critical points of `F` in `(eta, gamma)`
//! coordinates on the quadrant `eta >= 0, 0 <= gamma < 1`.
//!
//! Two branches are searched separately. Outside the bulk (`eta >= sqrt 2`)
//! the first equation is squared, `eta` is eliminated and the remaining
//! scalar equation in `gamma` is squared once more; every root of the
//! squared form is checked against the unsquared equations. Inside the bulk
//! the first equation is linear, `eta = (A/B) gamma`.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use super::variational::SystemCoefficients;
use super::MixedModel;
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;
const GRID: usize = 2048;

/// A solution `(eta, gamma)` of the critical-point system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemRoot {
    pub eta: f64,
    pub gamma: f64,
    pub residual: f64,
}

/// Branch that failed to produce a verified root, with its best residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchFailure {
    pub branch: &'static str,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSolution {
    pub roots: Vec<SystemRoot>,
    pub failures: Vec<BranchFailure>,
}

/// Residuals of both equations at `(eta, gamma)`.
pub fn system_residual(c: &SystemCoefficients, eta: f64, gamma: f64) -> (f64, f64) {
    let rhs1 = if eta.abs() >= SQRT_2 {
        (eta * eta - 2.0).sqrt()
    } else {
        0.0
    };
    let r1 = c.big_a * gamma - c.big_b * eta - rhs1;
    let r2 = c.big_c * gamma + c.big_a * eta - gamma / (1.0 - gamma * gamma);
    (r1, r2)
}

fn max_residual(c: &SystemCoefficients, eta: f64, gamma: f64) -> f64 {
    let (r1, r2) = system_residual(c, eta, gamma);
    r1.abs().max(r2.abs())
}

/// Bracket sign changes of `f` on a uniform grid of `(lo, hi)`, then refine
/// each bracket by bisection and polish with Newton steps on `f`.
fn bracketed_roots<F>(f: F, lo: f64, hi: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let mut roots = Vec::new();
    let step = (hi - lo) / GRID as f64;
    let mut a = lo + step * 1e-6;
    let mut fa = f(a);
    for i in 1..=GRID {
        let b = if i == GRID {
            hi - step * 1e-6
        } else {
            lo + step * i as f64
        };
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb.is_finite() && fa.is_finite() {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let fm = f(m);
                if fm == 0.0 || (r - l) < 1e-15 {
                    l = m;
                    r = m;
                    break;
                }
                if fm.signum() == fl.signum() {
                    l = m;
                    fl = fm;
                } else {
                    r = m;
                }
            }
            let mut g = 0.5 * (l + r);
            for _ in 0..4 {
                let d = 1e-7 * g.max(1e-3);
                let df = (f(g + d) - f(g - d)) / (2.0 * d);
                if df == 0.0 || !df.is_finite() {
                    break;
                }
                let next = g - f(g) / df;
                if !(next > a && next < b) {
                    break;
                }
                g = next;
            }
            roots.push(g);
        }
        a = b;
        fa = fb;
    }
    roots
}

/// All critical points of `F` in `[0, inf) x [0, 1)` found numerically.
pub fn solve_system_numeric(model: &MixedModel, h: f64) -> Result<SystemSolution> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!(
            "field strength {h} must be finite and >= 0"
        )));
    }
    let c = SystemCoefficients::new(model, h);
    let mut roots = vec![SystemRoot {
        eta: 0.0,
        gamma: 0.0,
        residual: 0.0,
    }];
    let mut failures = Vec::new();

    // Outside the bulk.
    if h == 0.0 {
        // A = C = 0 forces gamma = 0, and then -B eta = sqrt(eta^2 - 2).
        let eta = (2.0 / (1.0 - c.big_b * c.big_b)).sqrt();
        if c.big_b <= 0.0 {
            let res = max_residual(&c, eta, 0.0);
            if res <= RESIDUAL_TOL * (1.0 + eta) {
                roots.push(SystemRoot {
                    eta,
                    gamma: 0.0,
                    residual: res,
                });
            } else {
                failures.push(BranchFailure {
                    branch: "outer",
                    residual: res,
                });
            }
        }
    } else {
        let r = c.big_r;
        // Squared and cleared of denominators; the cubic and quadratic terms
        // in s = gamma^2 cancel.
        let squared = |g: f64| {
            let s = g * g;
            (s + 2.0 * r) * (1.0 - s).powi(2) - s * (r - 1.0 + s).powi(2)
        };
        for g in bracketed_roots(squared, 0.0, 1.0) {
            let lhs = (1.0 + 2.0 * r / (g * g)).sqrt();
            let rhs = r / (1.0 - g * g) - 1.0;
            if rhs < 0.0 || (lhs - rhs).abs() > 1e-8 * lhs {
                continue;
            }
            let eta = (-(c.big_b / c.big_a) * g + (2.0 * r + g * g).sqrt() / c.big_a) / r;
            if eta < SQRT_2 {
                continue;
            }
            // The first equation was squared as well: its left side must be >= 0.
            if c.big_a * g - c.big_b * eta < 0.0 {
                continue;
            }
            let res = max_residual(&c, eta, g);
            if res <= RESIDUAL_TOL * (1.0 + eta) {
                roots.push(SystemRoot {
                    eta,
                    gamma: g,
                    residual: res,
                });
            } else {
                failures.push(BranchFailure {
                    branch: "outer",
                    residual: res,
                });
            }
        }
    }

    // Inside the bulk, nonzero gamma.
    if h > 0.0 && c.big_b != 0.0 {
        let k = c.big_c + c.big_a * c.big_a / c.big_b;
        let reduced = |g: f64| k - 1.0 / (1.0 - g * g);
        for g in bracketed_roots(reduced, 0.0, 1.0) {
            let eta = c.big_a / c.big_b * g;
            if !(0.0..=SQRT_2).contains(&eta) {
                continue;
            }
            let res = max_residual(&c, eta, g);
            if res <= RESIDUAL_TOL * (1.0 + eta) {
                roots.push(SystemRoot {
                    eta,
                    gamma: g,
                    residual: res,
                });
            } else {
                failures.push(BranchFailure {
                    branch: "inner",
                    residual: res,
                });
            }
        }
    }

    roots.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    // at h = h_c both branches meet at eta = sqrt 2
    roots.dedup_by(|b, a| (a.eta - b.eta).abs() < 1e-9 && (a.gamma - b.gamma).abs() < 1e-9);
    Ok(SystemSolution { roots, failures })
}
