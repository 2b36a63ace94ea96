//! Multistart Riemannian Newton search for critical points on the sphere.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::field::{eval_field, sample_field_draw, EvalResult, FieldSample};
use super::task_rng;
use crate::error::{Error, Result};
use crate::model::MixedModel;

const PURPOSE_START: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinderOptions {
    /// Number of uniform random starts `K`, in addition to `+u` and `-u`.
    pub starts: usize,
    /// Convergence when the spherical gradient norm is at most `tol * N`.
    pub tol: f64,
    /// Two points are the same when `sigma_i . sigma_j > dedup_cos`.
    pub dedup_cos: f64,
    pub max_iter: usize,
}

impl Default for FinderOptions {
    fn default() -> Self {
        Self {
            starts: 64,
            tol: 1e-9,
            dedup_cos: 1.0 - 1e-8,
            max_iter: 500,
        }
    }
}

/// A converged critical point of `H^h_N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub sigma: Vec<f64>,
    /// `H^h_N(sigma) / N`
    pub energy: f64,
    /// `sigma . u`
    pub overlap: f64,
    /// `d_r H_N(sigma) / N`, field excluded
    pub radial: f64,
    /// Number of negative eigenvalues of the spherical Hessian.
    pub index: usize,
    /// Largest eigenvalue of the spherical Hessian divided by `N`.
    pub lambda_max: f64,
    /// Norm of the spherical gradient.
    pub grad_norm: f64,
    /// Some Hessian eigenvalue lies within `1e-8 N` of zero.
    pub marginal: bool,
}

impl CriticalPoint {
    fn from_eval(ev: &EvalResult, eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> Self {
        let n = ev.sigma.len() as f64;
        let index = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        let marginal = eig.eigenvalues.iter().any(|l| l.abs() <= 1e-8 * n);
        Self {
            sigma: ev.sigma.iter().copied().collect(),
            energy: ev.value / n,
            overlap: ev.overlap,
            radial: ev.radial / n,
            index,
            lambda_max: eig.eigenvalues.max() / n,
            grad_norm: ev.grad_norm(),
            marginal,
        }
    }

    /// FNV-1a over the bit patterns of `sigma`, as 16 hex digits.
    pub fn sigma_hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.sigma {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }
}

/// A start that did not converge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartFailure {
    pub start: usize,
    pub reason: String,
}

/// All points found for one disorder sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinderOutcome {
    pub seed: u64,
    pub sample: u64,
    /// Sorted by energy, highest first.
    pub points: Vec<CriticalPoint>,
    /// No new point was found in the last `K / 2` starts.
    pub saturated: bool,
    pub failures: Vec<StartFailure>,
}

impl FinderOutcome {
    /// Exactly two points, one of index 0 and one of index `N - 1`.
    pub fn is_two_extremal(&self, n: usize) -> bool {
        let mut idx: Vec<usize> = self.points.iter().map(|p| p.index).collect();
        idx.sort_unstable();
        idx == [0, n - 1]
    }
}

/// Search strategy of one start. `Ascent` and `Descent` only take
/// eigenvalue-shifted Newton steps and so end at local extrema; `Free` takes
/// plain Newton steps whenever they shrink the gradient, which also reaches
/// saddles, and falls back to the given direction otherwise.
#[derive(Clone, Copy)]
enum Mode {
    Ascent,
    Descent,
    Free(f64),
}

impl Mode {
    fn sign(self) -> f64 {
        match self {
            Mode::Ascent => 1.0,
            Mode::Descent => -1.0,
            Mode::Free(s) => s,
        }
    }
}

fn retract(sigma: &DVector<f64>, tangent: &DMatrix<f64>, d: &DVector<f64>) -> DVector<f64> {
    (sigma + tangent * d).normalize()
}

/// Largest tangent step, in radians.
const MAX_STEP: f64 = 0.5;
/// Plain Newton steps must shrink the gradient norm by this factor.
const MERIT_FACTOR: f64 = 0.9;
/// Iterations after which a free start commits to its fallback direction.
const FREE_BUDGET: usize = 40;

fn cap(d: DVector<f64>) -> DVector<f64> {
    let n = d.norm();
    if n > MAX_STEP {
        d * (MAX_STEP / n)
    } else {
        d
    }
}

/// Runs the safeguarded Newton iteration from one start.
fn descend(
    sample: &FieldSample,
    h: f64,
    start: DVector<f64>,
    mode: Mode,
    opts: &FinderOptions,
) -> std::result::Result<CriticalPoint, String> {
    let n = sample.n as f64;
    let tol = opts.tol * n;
    let floor = 1e-3 * n;
    let mut sigma = start;
    let mut ev = eval_field(sample, h, &sigma).map_err(|e| e.to_string())?;
    let mut mode = mode;
    for iter in 0..opts.max_iter {
        if iter == FREE_BUDGET {
            if let Mode::Free(s) = mode {
                mode = if s > 0.0 { Mode::Ascent } else { Mode::Descent };
            }
        }
        let g = ev.sph_grad.clone();
        let gn = g.norm();
        let eig = ev.sph_hess.clone().symmetric_eigen();
        if gn <= tol {
            return Ok(CriticalPoint::from_eval(&ev, &eig));
        }
        let tangent = ev.tangent_basis();
        let coeffs = eig.eigenvectors.transpose() * &g;
        let in_eigenbasis = |f: &dyn Fn(f64, f64) -> f64| {
            &eig.eigenvectors
                * DVector::from_iterator(
                    coeffs.len(),
                    coeffs
                        .iter()
                        .zip(eig.eigenvalues.iter())
                        .map(|(&c, &l)| f(c, l)),
                )
        };
        let s = mode.sign();
        let newton = (eig
            .eigenvalues
            .iter()
            .all(|l| l.abs() > f64::EPSILON * floor))
        .then(|| cap(in_eigenbasis(&|c, l| -c / l)));
        let shifted = cap(in_eigenbasis(&|c, l| s * c / l.abs().max(floor)));
        let gradient = cap(&g * (s * MAX_STEP / gn));

        // Ascent and descent starts move uphill (downhill) first; plain
        // Newton judged by the gradient norm is the fallback that settles
        // the last digits, where energy differences drown in rounding.
        let mut plan: Vec<(DVector<f64>, bool)> = Vec::with_capacity(3);
        if let (Mode::Free(_), Some(d)) = (mode, &newton) {
            plan.push((d.clone(), true));
        }
        plan.push((shifted, false));
        plan.push((gradient, false));
        if let (Mode::Ascent | Mode::Descent, Some(d)) = (mode, newton) {
            plan.push((d, true));
        }

        let mut moved = false;
        'plan: for (dir, by_merit) in plan {
            let slope = g.dot(&dir) * s;
            if !by_merit && !(slope > 0.0) {
                continue;
            }
            let mut t = 1.0;
            for _ in 0..if by_merit { 8 } else { 40 } {
                let trial = retract(&sigma, &tangent, &(&dir * t));
                let tev = eval_field(sample, h, &trial).map_err(|e| e.to_string())?;
                let ok = if by_merit {
                    tev.grad_norm() < MERIT_FACTOR * gn
                } else {
                    s * (tev.value - ev.value) >= 1e-4 * t * slope
                };
                if ok {
                    sigma = trial;
                    ev = tev;
                    moved = true;
                    break 'plan;
                }
                t *= 0.5;
            }
        }
        if !moved {
            return Err(format!("line search stalled at gradient norm {gn:e}"));
        }
    }
    Err(format!(
        "no convergence in {} iterations (gradient norm {:e})",
        opts.max_iter,
        ev.grad_norm()
    ))
}

fn is_known(points: &[CriticalPoint], p: &CriticalPoint, dedup_cos: f64) -> bool {
    points.iter().any(|q| {
        q.sigma
            .iter()
            .zip(&p.sigma)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            > dedup_cos
    })
}

fn uniform_start(n: usize, seed: u64, sample: u64, start: usize) -> DVector<f64> {
    let mut rng = task_rng(seed, sample, start as u64, PURPOSE_START);
    loop {
        let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Searches for critical points of `H^h_N` from `+u`, `-u` and `K` uniform
/// starts, then once more from the antipode of every point found. Points are
/// deduplicated and classified by Hessian inertia. The result is a lower
/// bound on the full set.
pub fn find_critical_points(
    sample: &FieldSample,
    h: f64,
    opts: &FinderOptions,
    seed: u64,
) -> Result<FinderOutcome> {
    if opts.starts < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 random starts, got {}",
            opts.starts
        )));
    }
    if !(opts.tol > 0.0) || !(opts.dedup_cos < 1.0) || opts.max_iter == 0 {
        return Err(Error::Domain("finder tolerances out of range".into()));
    }
    let n = sample.n;
    let total = opts.starts + 2;
    let results: Vec<std::result::Result<CriticalPoint, String>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let (start, mode) = match k {
                0 => (
                    DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 }),
                    Mode::Ascent,
                ),
                1 => (
                    DVector::from_fn(n, |i, _| if i == 0 { -1.0 } else { 0.0 }),
                    Mode::Descent,
                ),
                _ => (
                    uniform_start(n, seed, sample.sample, k),
                    match k % 4 {
                        0 => Mode::Ascent,
                        1 => Mode::Descent,
                        2 => Mode::Free(1.0),
                        _ => Mode::Free(-1.0),
                    },
                ),
            };
            descend(sample, h, start, mode, opts)
        })
        .collect();

    let mut points: Vec<CriticalPoint> = Vec::new();
    let mut last_new = 0;
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => {
                if !is_known(&points, &p, opts.dedup_cos) {
                    points.push(p);
                    last_new = k;
                }
            }
            Err(reason) => failures.push(StartFailure { start: k, reason }),
        }
    }
    let saturated = last_new < total - opts.starts / 2;

    // Odd mixtures satisfy H^h(-sigma) = -H^h(sigma), so antipodes of found
    // points are natural extra starts; for other mixtures they are just starts.
    let antipodal: Vec<std::result::Result<CriticalPoint, String>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let start = -DVector::from_column_slice(&p.sigma);
            let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
            descend(sample, h, start, Mode::Free(sign), opts)
        })
        .collect();
    for (i, r) in antipodal.into_iter().enumerate() {
        match r {
            Ok(p) => {
                if !is_known(&points, &p, opts.dedup_cos) {
                    points.push(p);
                }
            }
            Err(reason) => failures.push(StartFailure {
                start: total + i,
                reason,
            }),
        }
    }
    points.sort_by(|a, b| b.energy.total_cmp(&a.energy));
    Ok(FinderOutcome {
        seed,
        sample: sample.sample,
        points,
        saturated,
        failures,
    })
}

/// Samples `samples` disorder draws of `seed` and runs the finder on each.
pub fn run_census(
    model: &MixedModel,
    h: f64,
    n: usize,
    samples: usize,
    seed: u64,
    opts: &FinderOptions,
) -> Result<Vec<FinderOutcome>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let field = sample_field_draw(model, n, seed, s)?;
            find_critical_points(&field, h, opts, seed)
        })
        .collect()
}
