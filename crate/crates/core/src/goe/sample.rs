//! GOE sampling and Monte Carlo estimates of shifted determinants.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest dimension for dense eigenvalue solves.
pub const MAX_SAMPLE_N: usize = 4000;
/// Largest matrix size (`N - 1`) for Monte Carlo determinants.
pub const MAX_MC_N: usize = 60;
pub const MAX_MC_SAMPLES: usize = 1_000_000;

/// `GOE_N(a)`: symmetric, off-diagonal variance `a / 2`, diagonal variance `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoeSpec {
    pub n: usize,
    pub a: f64,
}

impl GoeSpec {
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("GOE dimension must be positive".into()));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!(
                "GOE variance parameter {a} must be positive"
            )));
        }
        Ok(Self { n, a })
    }

    /// `GOE_N(1/N)`.
    pub fn normalized(n: usize) -> Result<Self> {
        Self::new(n, 1.0 / n as f64)
    }
}

/// Independent generator for draw `draw` of a run seeded by `seed`.
pub fn draw_rng(seed: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

/// One `GOE_N(a)` matrix from stream `draw` of `seed`.
pub fn sample_goe(spec: GoeSpec, seed: u64, draw: u64) -> DMatrix<f64> {
    let mut rng = draw_rng(seed, draw);
    let n = spec.n;
    let off = (spec.a / 2.0).sqrt();
    let diag = spec.a.sqrt();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        m[(i, i)] = diag * z;
        for j in (i + 1)..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            m[(i, j)] = off * z;
            m[(j, i)] = off * z;
        }
    }
    m
}

/// Eigenvalues of draw `draw`, sorted descending.
pub fn sample_goe_spectrum_draw(spec: GoeSpec, seed: u64, draw: u64) -> Result<Vec<f64>> {
    if spec.n > MAX_SAMPLE_N {
        return Err(Error::TooLarge(format!(
            "dense GOE spectrum limited to N <= {MAX_SAMPLE_N}, got {}",
            spec.n
        )));
    }
    let m = sample_goe(spec, seed, draw);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue in GOE draw".into()));
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Eigenvalues of one `GOE_N(a)` draw, sorted descending.
pub fn sample_goe_spectrum(spec: GoeSpec, seed: u64) -> Result<Vec<f64>> {
    sample_goe_spectrum_draw(spec, seed, 0)
}

/// `ln |det m|` via LU; `-inf` for a singular matrix.
pub fn ln_abs_det(m: DMatrix<f64>) -> f64 {
    let lu = m.lu();
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

fn check_mc(n: usize, samples: usize) -> Result<()> {
    if n < 2 || n - 1 > MAX_MC_N {
        return Err(Error::Domain(format!(
            "Monte Carlo determinant needs 2 <= N <= {}, got {n}",
            MAX_MC_N + 1
        )));
    }
    if !(2..=MAX_MC_SAMPLES).contains(&samples) {
        return Err(Error::Domain(format!(
            "sample count {samples} outside [2, {MAX_MC_SAMPLES}]"
        )));
    }
    Ok(())
}

/// `|det(x I_{N-1} + GOE_{N-1}(1/N))|` for each draw, in draw order.
fn shifted_dets(n: usize, x: f64, samples: usize, seed: u64) -> Vec<f64> {
    let spec = GoeSpec {
        n: n - 1,
        a: 1.0 / n as f64,
    };
    (0..samples as u64)
        .into_par_iter()
        .map(|d| {
            let mut m = sample_goe(spec, seed, d);
            for i in 0..n - 1 {
                m[(i, i)] += x;
            }
            ln_abs_det(m).exp()
        })
        .collect()
}

fn mean_se(v: &[f64]) -> McEstimate {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
    McEstimate {
        mean,
        se: (var / k).sqrt(),
        samples: v.len(),
    }
}

/// Monte Carlo `E|det(x I_{N-1} + GOE_{N-1}(1/N))|`.
pub fn mc_shifted_det(n: usize, x: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    check_mc(n, samples)?;
    Ok(mean_se(&shifted_dets(n, x, samples, seed)))
}

/// Empirical `E[det^2] / E[|det|]^2` for the shifted matrix.
pub fn det_second_moment_check(n: usize, x: f64, samples: usize, seed: u64) -> Result<f64> {
    check_mc(n, samples)?;
    if !(x > std::f64::consts::SQRT_2) {
        return Err(Error::Domain(format!(
            "second-moment check expects a shift outside the bulk, got x = {x}"
        )));
    }
    let d = shifted_dets(n, x, samples, seed);
    let k = d.len() as f64;
    let m1 = d.iter().sum::<f64>() / k;
    let m2 = d.iter().map(|v| v * v).sum::<f64>() / k;
    Ok(m2 / (m1 * m1))
}
