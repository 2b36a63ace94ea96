//! Disorder tensors, exact contractions and the sigma-adapted frame.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::task_rng;
use crate::error::{Error, Result};
use crate::model::MixedModel;

/// Upper bound on `N^P`, the entry count of the largest disorder tensor.
pub const MAX_TENSOR_ENTRIES: u64 = 100_000_000;

/// RNG purpose tag for disorder draws.
pub(crate) const PURPOSE_FIELD: u64 = 0;

/// One degree of the Hamiltonian: `scale * sum_i J[i] sigma_{i_1} ... sigma_{i_p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeTensor {
    pub p: u32,
    /// `sqrt(N a_p)`
    pub scale: f64,
    /// Row-major `N^p` entries, i.i.d. standard normal, not symmetrized.
    pub entries: Vec<f64>,
}

/// A sampled Hamiltonian `H_N` with covariance `N xi(sigma . sigma')`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub model: MixedModel,
    pub n: usize,
    pub seed: u64,
    pub sample: u64,
    pub tensors: Vec<DegreeTensor>,
}

/// Sample number 0 of `seed`.
pub fn sample_field(model: &MixedModel, n: usize, seed: u64) -> Result<FieldSample> {
    sample_field_draw(model, n, seed, 0)
}

/// Sample number `sample` of `seed`; each `(seed, sample)` pair has its own stream.
pub fn sample_field_draw(
    model: &MixedModel,
    n: usize,
    seed: u64,
    sample: u64,
) -> Result<FieldSample> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    let top = model.max_degree();
    (n as u64)
        .checked_pow(top)
        .filter(|&e| e <= MAX_TENSOR_ENTRIES)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "N^p = {n}^{top} exceeds the tensor bound {MAX_TENSOR_ENTRIES}"
            ))
        })?;
    let mut rng = task_rng(seed, sample, 0, PURPOSE_FIELD);
    let tensors = model
        .coeffs()
        .iter()
        .map(|(&p, &a)| DegreeTensor {
            p,
            scale: (n as f64 * a).sqrt(),
            entries: (0..n.pow(p))
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        })
        .collect();
    Ok(FieldSample {
        model: model.clone(),
        n,
        seed,
        sample,
        tensors,
    })
}

impl FieldSample {
    /// The same sample with every disorder entry negated.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.tensors {
            t.entries.iter_mut().for_each(|v| *v = -*v);
        }
        out
    }

    /// `H_N(sigma)` together with its Euclidean gradient and Hessian.
    pub fn derivatives(&self, sigma: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let n = self.n;
        if sigma.len() != n {
            return Err(Error::Domain(format!(
                "configuration has length {}, sample dimension is {n}",
                sigma.len()
            )));
        }
        let s = sigma.as_slice();
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for t in &self.tensors {
            let p = t.p as usize;
            if p == 1 {
                let g = DVector::from_column_slice(&t.entries) * t.scale;
                value += g.dot(sigma);
                grad += g;
                continue;
            }
            // Sum over ordered pairs of index roles (r, s): contract every other
            // role with sigma. Euler's identity then gives gradient and value.
            let mut hp = DMatrix::zeros(n, n);
            for r in 0..p {
                for q in (r + 1)..p {
                    let m = contract_except(&t.entries, n, p, r, q, s);
                    for i in 0..n {
                        for j in 0..n {
                            let v = m[i * n + j];
                            hp[(i, j)] += v;
                            hp[(j, i)] += v;
                        }
                    }
                }
            }
            hp *= t.scale;
            let gp = &hp * sigma / (p - 1) as f64;
            value += gp.dot(sigma) / p as f64;
            grad += gp;
            hess += hp;
        }
        Ok((value, grad, hess))
    }
}

/// Contracts a row-major `N^p` tensor with `sigma` in every role except
/// `keep_a < keep_b`, returning the `N x N` result row-major in `(keep_a, keep_b)`.
fn contract_except(
    entries: &[f64],
    n: usize,
    p: usize,
    keep_a: usize,
    keep_b: usize,
    sigma: &[f64],
) -> Vec<f64> {
    let mut cur: Vec<f64> = entries.to_vec();
    let mut order = p;
    // Highest role first so that lower role positions stay put.
    for role in (0..p).rev() {
        if role == keep_a || role == keep_b {
            continue;
        }
        let inner = n.pow((order - 1 - role) as u32);
        let outer = cur.len() / (n * inner);
        let mut next = vec![0.0; outer * inner];
        for o in 0..outer {
            let src = &cur[o * n * inner..(o + 1) * n * inner];
            let dst = &mut next[o * inner..(o + 1) * inner];
            for (i, &si) in sigma.iter().enumerate() {
                let row = &src[i * inner..(i + 1) * inner];
                for (d, &v) in dst.iter_mut().zip(row) {
                    *d += si * v;
                }
            }
        }
        cur = next;
        order -= 1;
    }
    cur
}

/// Orthonormal basis (as columns) with last column `sigma` and first column
/// along the tangent part of `u = e_1`.
pub fn canonical_frame(sigma: &DVector<f64>) -> DMatrix<f64> {
    let n = sigma.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let push = |cols: &mut Vec<DVector<f64>>, mut v: DVector<f64>| -> bool {
        for _ in 0..2 {
            let proj: Vec<f64> = cols.iter().map(|c| c.dot(&v)).collect();
            for (c, d) in cols.iter().zip(proj) {
                v.axpy(-d, c, 1.0);
            }
            let sp = sigma.dot(&v);
            v.axpy(-sp, sigma, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v / norm);
            true
        } else {
            false
        }
    };
    for k in 0..n {
        if cols.len() == n - 1 {
            break;
        }
        push(
            &mut cols,
            DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 }),
        );
    }
    cols.push(sigma.clone());
    DMatrix::from_columns(&cols)
}

/// Value and derivatives of `H^h_N(sigma) = H_N(sigma) + N h sigma_1` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub sigma: DVector<f64>,
    /// `H^h_N(sigma)`
    pub value: f64,
    /// `H_N(sigma)`
    pub value_noh: f64,
    /// `sigma . u`
    pub overlap: f64,
    /// Euclidean gradient of `H_N`.
    pub euclid_grad: DVector<f64>,
    /// Euclidean Hessian of `H_N`.
    pub euclid_hess: DMatrix<f64>,
    /// Columns `e_1, ..., e_N` with `e_N = sigma`.
    pub frame: DMatrix<f64>,
    /// Tangent components of the gradient of `H^h_N`.
    pub sph_grad: DVector<f64>,
    /// `e_N . grad H_N`, field excluded.
    pub radial: f64,
    /// Tangent block of the Hessian minus `(radial + N h overlap) I`.
    pub sph_hess: DMatrix<f64>,
}

impl EvalResult {
    pub fn grad_norm(&self) -> f64 {
        self.sph_grad.norm()
    }

    /// `d_r H^h_N`
    pub fn radial_h(&self, h: f64) -> f64 {
        self.radial + self.sigma.len() as f64 * h * self.overlap
    }

    /// Tangent columns of the frame.
    pub fn tangent_basis(&self) -> DMatrix<f64> {
        let n = self.frame.ncols();
        self.frame.columns(0, n - 1).into_owned()
    }
}

fn normalized(sample: &FieldSample, sigma: &DVector<f64>) -> Result<DVector<f64>> {
    if sigma.len() != sample.n {
        return Err(Error::Domain(format!(
            "configuration has length {}, sample dimension is {}",
            sigma.len(),
            sample.n
        )));
    }
    let norm = sigma.norm();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::Domain(format!(
            "configuration has norm {norm}, expected 1"
        )));
    }
    Ok(sigma / norm)
}

pub fn eval_field(sample: &FieldSample, h: f64, sigma: &DVector<f64>) -> Result<EvalResult> {
    let sigma = normalized(sample, sigma)?;
    let frame = canonical_frame(&sigma);
    eval_in_frame(sample, h, frame)
}

/// Like [`eval_field`] but in a caller-supplied orthonormal frame whose last
/// column is the configuration.
pub fn eval_field_in_frame(
    sample: &FieldSample,
    h: f64,
    frame: DMatrix<f64>,
) -> Result<EvalResult> {
    let n = sample.n;
    if frame.nrows() != n || frame.ncols() != n {
        return Err(Error::Domain(format!(
            "frame is {}x{}, sample dimension is {n}",
            frame.nrows(),
            frame.ncols()
        )));
    }
    let defect = (frame.transpose() * &frame - DMatrix::identity(n, n)).amax();
    if defect > 1e-10 {
        return Err(Error::Domain(format!(
            "frame is not orthonormal (defect {defect:e})"
        )));
    }
    eval_in_frame(sample, h, frame)
}

fn eval_in_frame(sample: &FieldSample, h: f64, frame: DMatrix<f64>) -> Result<EvalResult> {
    let n = sample.n;
    let sigma = frame.column(n - 1).into_owned();
    let (value_noh, euclid_grad, euclid_hess) = sample.derivatives(&sigma)?;
    let nh = n as f64 * h;
    let overlap = sigma[0];
    let tangent = frame.columns(0, n - 1);
    let mut field_grad = euclid_grad.clone();
    field_grad[0] += nh;
    let sph_grad = tangent.transpose() * &field_grad;
    let radial = sigma.dot(&euclid_grad);
    let mut sph_hess = tangent.transpose() * &euclid_hess * tangent;
    let shift = radial + nh * overlap;
    for i in 0..n - 1 {
        sph_hess[(i, i)] -= shift;
    }
    // Exact symmetry regardless of rounding in the triple product.
    let sph_hess = (&sph_hess + sph_hess.transpose()) * 0.5;
    Ok(EvalResult {
        value: value_noh + nh * overlap,
        value_noh,
        overlap,
        euclid_grad,
        euclid_hess,
        frame,
        sph_grad,
        radial,
        sph_hess,
        sigma,
    })
}

/// Relative discrepancies between analytic spherical derivatives and central
/// differences along the great circle through `sigma` in direction `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub grad_rel_err: f64,
    pub hess_rel_err: f64,
}

/// `v` must be a unit tangent vector at `sigma` (ambient coordinates).
pub fn derivative_check(
    sample: &FieldSample,
    h: f64,
    sigma: &DVector<f64>,
    v: &DVector<f64>,
    step: f64,
) -> Result<DerivativeCheck> {
    let ev = eval_field(sample, h, sigma)?;
    let n = sample.n;
    let sigma = &ev.sigma;
    let v = v - sigma * sigma.dot(v);
    let v = v.normalize();
    let tangent = ev.tangent_basis();
    let vc = tangent.transpose() * &v;
    let nh = n as f64 * h;

    let energy = |t: f64| -> Result<(f64, DVector<f64>, DVector<f64>)> {
        let p = sigma * t.cos() + &v * t.sin();
        let (val, mut g, _) = sample.derivatives(&p)?;
        g[0] += nh;
        let val = val + nh * p[0];
        // Projected gradient at the moved point, read in the fixed tangent basis.
        let proj = &g - &p * p.dot(&g);
        Ok((val, proj, p))
    };
    let (fp, gp, _) = energy(step)?;
    let (fm, gm, _) = energy(-step)?;

    let dir_fd = (fp - fm) / (2.0 * step);
    let dir_an = ev.sph_grad.dot(&vc);
    let grad_rel_err = (dir_fd - dir_an).abs() / ev.grad_norm().max(f64::MIN_POSITIVE);

    let hv_fd = tangent.transpose() * ((gp - gm) / (2.0 * step));
    let hv_an = &ev.sph_hess * &vc;
    let scale = hv_an.norm().max(1e-3 * ev.sph_hess.norm());
    let hess_rel_err = (hv_fd - hv_an).norm() / scale.max(f64::MIN_POSITIVE);
    Ok(DerivativeCheck {
        grad_rel_err,
        hess_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: Vec<f64>) -> DVector<f64> {
        DVector::from_vec(v).normalize()
    }

    #[test]
    fn deterministic_and_bounded() {
        let m: MixedModel = "3:1".parse().unwrap();
        let a = sample_field(&m, 5, 9).unwrap();
        assert_eq!(a, sample_field(&m, 5, 9).unwrap());
        assert_ne!(a, sample_field_draw(&m, 5, 9, 1).unwrap());
        assert_eq!(a.tensors[0].entries.len(), 125);
        assert!(matches!(sample_field(&m, 500, 0), Err(Error::TooLarge(_))));
    }

    #[test]
    fn two_spin_matches_hand_contraction() {
        let m = MixedModel::pure(2, 0.7).unwrap();
        let s = sample_field(&m, 3, 4).unwrap();
        let j = DMatrix::from_row_slice(3, 3, &s.tensors[0].entries);
        let sym = (&j + j.transpose()) * 0.5;
        let c = (3.0 * 0.7f64).sqrt();
        let sigma = unit(vec![0.3, -0.5, 0.8]);
        let (val, g, hess) = s.derivatives(&sigma).unwrap();
        assert!((val - c * sigma.dot(&(&sym * &sigma))).abs() < 1e-12);
        assert!((g - &sym * &sigma * (2.0 * c)).amax() < 1e-12);
        assert!((hess - &sym * (2.0 * c)).amax() < 1e-12);

        let ev = eval_field(&s, 0.0, &sigma).unwrap();
        let hand = &sym * &sigma * (2.0 * c);
        let tangent_part = &hand - &sigma * sigma.dot(&hand);
        assert!((ev.sph_grad.norm() - tangent_part.norm()).abs() < 1e-10);
        assert!((ev.radial - sigma.dot(&hand)).abs() < 1e-10);
    }

    #[test]
    fn frame_is_adapted() {
        let sigma = unit(vec![0.4, 0.1, -0.7, 0.2, 0.5]);
        let f = canonical_frame(&sigma);
        assert!((f.transpose() * &f - DMatrix::identity(5, 5)).amax() < 1e-12);
        assert_eq!(f.column(4).into_owned(), sigma);
        // u = e_1 lies in span{e_1, e_N}
        let u = DVector::from_fn(5, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let res = &u - f.column(0) * f.column(0).dot(&u) - f.column(4) * f.column(4).dot(&u);
        assert!(res.norm() < 1e-12);
        // sigma = +-u still yields a frame
        let g = canonical_frame(&u);
        assert!((g.transpose() * &g - DMatrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn mixed_derivatives_match_differences() {
        let m: MixedModel = "1:0.3,2:0.5,4:0.4".parse().unwrap();
        let s = sample_field(&m, 6, 1).unwrap();
        let sigma = unit(vec![0.2, -0.4, 0.1, 0.6, -0.3, 0.5]);
        let v = unit(vec![1.0, 0.5, -0.2, 0.3, 0.9, -0.4]);
        let c = derivative_check(&s, 0.8, &sigma, &v, 1e-5).unwrap();
        assert!(c.grad_rel_err < 1e-7, "{c:?}");
        assert!(c.hess_rel_err < 1e-6, "{c:?}");
    }

    #[test]
    fn rejects_bad_input() {
        let m: MixedModel = "3:1".parse().unwrap();
        let s = sample_field(&m, 4, 0).unwrap();
        assert!(eval_field(&s, 1.0, &DVector::from_vec(vec![1.0, 0.0, 0.0])).is_err());
        assert!(eval_field(&s, 1.0, &DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0])).is_err());
    }
}
