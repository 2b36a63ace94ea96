//! Aggregates over disorder samples and the covariance self-test.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{sample_field_draw, FieldSample};
use super::finder::FinderOutcome;
use crate::error::{Error, Result};
use crate::model::{annealed_rate, trivial_predictions, MixedModel, Regime, TrivialPredictions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl MeanSd {
    pub fn of(v: &[f64]) -> Self {
        let k = v.len() as f64;
        let mean = v.iter().sum::<f64>() / k;
        let sd = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            sd,
            count: v.len(),
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

/// Statistics of the highest-energy point across samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgmaxStats {
    pub energy: MeanSd,
    pub overlap: MeanSd,
    /// `x + h gamma`, the radial derivative of `H^h_N` per site
    pub radial_h: MeanSd,
    pub lambda_max: MeanSd,
}

/// Sample mean minus the limiting prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionDeltas {
    pub energy: f64,
    pub overlap: f64,
    pub radial_h: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub model: MixedModel,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub regime: Regime,
    pub samples: Vec<FinderOutcome>,
    /// Number of points found -> number of samples.
    pub count_distribution: BTreeMap<usize, usize>,
    /// Fraction of samples with exactly one point of index 0 and one of index `N - 1`.
    pub two_extremal_fraction: f64,
    pub saturated_samples: usize,
    /// Saturated samples with fewer than two points.
    pub floor_violations: usize,
    /// `None` when no sample produced a point.
    pub argmax: Option<ArgmaxStats>,
    pub predictions: Option<TrivialPredictions>,
    pub deltas: Option<PredictionDeltas>,
    /// Limiting `(1/N) ln E[#points]`, attached below the threshold.
    pub annealed_rate: Option<f64>,
}

pub fn landscape_report(
    samples: Vec<FinderOutcome>,
    model: &MixedModel,
    h: f64,
    n: usize,
) -> Result<LandscapeReport> {
    if samples.is_empty() {
        return Err(Error::Domain(
            "landscape report needs at least one sample".into(),
        ));
    }
    let regime = Regime::classify(model, h)?;
    let mut count_distribution = BTreeMap::new();
    for s in &samples {
        *count_distribution.entry(s.points.len()).or_insert(0) += 1;
    }
    let two = samples.iter().filter(|s| s.is_two_extremal(n)).count();
    let saturated_samples = samples.iter().filter(|s| s.saturated).count();
    let floor_violations = samples
        .iter()
        .filter(|s| s.saturated && s.points.len() < 2)
        .count();

    let tops: Vec<_> = samples.iter().filter_map(|s| s.points.first()).collect();
    let argmax = (!tops.is_empty()).then(|| {
        let col = |f: &dyn Fn(&super::CriticalPoint) -> f64| -> MeanSd {
            MeanSd::of(&tops.iter().map(|p| f(p)).collect::<Vec<_>>())
        };
        ArgmaxStats {
            energy: col(&|p| p.energy),
            overlap: col(&|p| p.overlap),
            radial_h: col(&|p| p.radial + h * p.overlap),
            lambda_max: col(&|p| p.lambda_max),
        }
    });

    let (predictions, rate) = if regime == Regime::Trivial {
        (Some(trivial_predictions(model, h)?), None)
    } else {
        (None, Some(annealed_rate(model, h)?))
    };
    let deltas = match (&predictions, &argmax) {
        (Some(p), Some(a)) => Some(PredictionDeltas {
            energy: a.energy.mean - p.gs_energy,
            overlap: a.overlap.mean - p.overlap,
            radial_h: a.radial_h.mean - p.radial_h,
            lambda_max: a.lambda_max.mean - p.lambda_max,
        }),
        _ => None,
    };
    Ok(LandscapeReport {
        model: model.clone(),
        h,
        n,
        regime,
        two_extremal_fraction: two as f64 / samples.len() as f64,
        count_distribution,
        saturated_samples,
        floor_violations,
        argmax,
        predictions,
        deltas,
        annealed_rate: rate,
        samples,
    })
}

/// One covariance entry at `sigma = e_N`: sample mean of a product, its
/// standard error and the exact value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceRow {
    pub quantity: String,
    pub empirical: f64,
    pub exact: f64,
    pub se: f64,
}

impl CovarianceRow {
    /// `|empirical - exact| / se`
    pub fn z(&self) -> f64 {
        (self.empirical - self.exact).abs() / self.se
    }
}

/// Derivatives of `H_N` at `e_N` used by the self-test: value, the first two
/// tangent derivatives, Hessian entries on those two directions and the
/// radial derivative.
struct Probe {
    h: f64,
    d1: f64,
    d2: f64,
    d11: f64,
    d12: f64,
    d22: f64,
    dr: f64,
}

fn probe(sample: &FieldSample) -> Result<Probe> {
    let n = sample.n;
    let sigma = DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
    let (h, g, hess) = sample.derivatives(&sigma)?;
    Ok(Probe {
        h,
        d1: g[0],
        d2: g[1],
        d11: hess[(0, 0)],
        d12: hess[(0, 1)],
        d22: hess[(1, 1)],
        dr: g[n - 1],
    })
}

/// Estimates the covariances of `H_N` and its derivatives at `e_N` in the
/// frame `e_1, ..., e_N` from `samples` independent disorder draws.
///
/// Rows cover every entry of the covariance table, with the Kronecker
/// structure probed on both diagonal and off-diagonal index pairs.
pub fn covariance_selftest(
    model: &MixedModel,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CovarianceRow>> {
    if n < 3 {
        return Err(Error::Domain(format!(
            "covariance self-test needs N >= 3, got {n}"
        )));
    }
    if samples < 2 {
        return Err(Error::Domain(
            "covariance self-test needs at least 2 samples".into(),
        ));
    }
    let probes: Vec<Probe> = (0..samples as u64)
        .into_par_iter()
        .map(|s| sample_field_draw(model, n, seed, s).and_then(|f| probe(&f)))
        .collect::<Result<_>>()?;
    let nn = n as f64;
    let (xi, xp, xpp) = (model.xi(), model.xi_p(), model.xi_pp());
    let row = |quantity: &str, f: &dyn Fn(&Probe) -> f64, exact: f64| {
        let v: Vec<f64> = probes.iter().map(f).collect();
        let s = MeanSd::of(&v);
        CovarianceRow {
            quantity: quantity.to_string(),
            empirical: s.mean,
            exact,
            se: s.se(),
        }
    };
    Ok(vec![
        row("E[H H]", &|p| p.h * p.h, nn * xi),
        row("E[d1H H]", &|p| p.d1 * p.h, 0.0),
        row("E[d11H H]", &|p| p.d11 * p.h, 0.0),
        row("E[d1H d1H]", &|p| p.d1 * p.d1, nn * xp),
        row("E[d1H d2H]", &|p| p.d1 * p.d2, 0.0),
        row("E[d11H d1H]", &|p| p.d11 * p.d1, 0.0),
        row("E[d11H d11H]", &|p| p.d11 * p.d11, 2.0 * nn * xpp),
        row("E[d12H d12H]", &|p| p.d12 * p.d12, nn * xpp),
        row("E[d11H d22H]", &|p| p.d11 * p.d22, 0.0),
        row("E[drH drH]", &|p| p.dr * p.dr, nn * (xp + xpp)),
        row("E[H drH]", &|p| p.h * p.dr, nn * xp),
        row("E[d1H drH]", &|p| p.d1 * p.dr, 0.0),
        row("E[d11H drH]", &|p| p.d11 * p.dr, 0.0),
    ])
}
