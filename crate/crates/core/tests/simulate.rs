use std::f64::consts::SQRT_2;

use landscape_core::model::MixedModel;
use landscape_core::simulate::{
    canonical_frame, covariance_selftest, derivative_check, eval_field, eval_field_in_frame,
    find_critical_points, landscape_report, run_census, sample_field, sample_field_draw,
    FinderOptions, MeanSd,
};
use landscape_core::Error;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    gaussian_vector(rng, n).normalize()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / k, b.iter().sum::<f64>() / k);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn tangent_derivatives_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (xi, n, h) in [
        ("3:1", 9usize, 2.0),
        ("1:0.3,2:0.5,3:1,4:0.25", 7, 1.3),
        ("2:1,5:0.2", 5, 0.4),
    ] {
        let m: MixedModel = xi.parse().unwrap();
        let sample = sample_field(&m, n, 11).unwrap();
        let sigma = random_unit(&mut rng, n);
        for _ in 0..5 {
            let v = gaussian_vector(&mut rng, n);
            let c = derivative_check(&sample, h, &sigma, &v, 1e-5).unwrap();
            assert!(c.grad_rel_err <= 1e-5, "{xi}: gradient {}", c.grad_rel_err);
            assert!(c.hess_rel_err <= 1e-4, "{xi}: Hessian {}", c.hess_rel_err);
        }
    }
}

#[test]
fn second_frame_gives_same_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m: MixedModel = "2:0.4,3:1".parse().unwrap();
    let n = 12;
    let sample = sample_field(&m, n, 2).unwrap();
    let sigma = random_unit(&mut rng, n);
    let a = eval_field(&sample, 0.9, &sigma).unwrap();

    // rotate the tangent columns of the canonical frame by a random orthogonal matrix
    let g = DMatrix::from_fn(n - 1, n - 1, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    let base = canonical_frame(&a.sigma);
    let rotated = base.columns(0, n - 1) * q;
    let mut frame = base.clone();
    frame.columns_mut(0, n - 1).copy_from(&rotated);
    let b = eval_field_in_frame(&sample, 0.9, frame).unwrap();

    let scale = a.sph_hess.amax();
    assert!((a.value - b.value).abs() <= 1e-10 * a.value.abs().max(1.0));
    assert!((a.radial - b.radial).abs() <= 1e-10 * a.radial.abs().max(1.0));
    assert!((a.grad_norm() - b.grad_norm()).abs() <= 1e-10 * a.grad_norm().max(1.0));
    let spectrum = |h: &DMatrix<f64>| {
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    };
    for (x, y) in spectrum(&a.sph_hess).iter().zip(spectrum(&b.sph_hess)) {
        assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
    }
    assert_eq!(a.sph_hess, a.sph_hess.transpose());
    let defect = (a.frame.transpose() * &a.frame - DMatrix::identity(n, n)).amax();
    assert!(defect <= 1e-12);
    assert!(
        (a.frame.column(n - 1).dot(&a.euclid_grad) - a.radial).abs()
            <= 1e-12 * a.radial.abs().max(1.0)
    );
}

#[test]
fn field_and_disorder_sign_flip_negates_energies() {
    let m: MixedModel = "2:0.5,3:1".parse().unwrap();
    let n = 10;
    let h = 1.2;
    let opts = FinderOptions {
        starts: 32,
        ..FinderOptions::default()
    };
    let sample = sample_field(&m, n, 21).unwrap();
    let flipped = sample.negated();
    let a = find_critical_points(&sample, h, &opts, 4).unwrap();
    let b = find_critical_points(&flipped, -h, &opts, 4).unwrap();
    let (amax, amin) = (a.points[0].energy, a.points.last().unwrap().energy);
    let (bmax, bmin) = (b.points[0].energy, b.points.last().unwrap().energy);
    assert!((amax + bmin).abs() < 1e-9 * amax.abs());
    assert!((amin + bmax).abs() < 1e-9 * amin.abs());
    // same configuration, opposite function
    for p in &a.points {
        let s = DVector::from_column_slice(&p.sigma);
        let x = eval_field(&sample, h, &s).unwrap();
        let y = eval_field(&flipped, -h, &s).unwrap();
        assert!((x.value + y.value).abs() < 1e-12 * x.value.abs().max(1.0));
        assert!((x.sph_grad.clone() + &y.sph_grad).amax() < 1e-12 * n as f64);
    }
}

#[test]
fn census_respects_postconditions() {
    let m = MixedModel::pure(3, 1.0).unwrap();
    let n = 10;
    let opts = FinderOptions {
        starts: 32,
        ..FinderOptions::default()
    };
    for h in [0.6, 2.0] {
        let samples = run_census(&m, h, n, 8, 3, &opts).unwrap();
        for s in &samples {
            assert!(s.failures.is_empty(), "h={h}: {:?}", s.failures);
            let idx: Vec<usize> = s.points.iter().map(|p| p.index).collect();
            assert!(idx.contains(&0) && idx.contains(&(n - 1)), "h={h}: {idx:?}");
            assert!(s.points.windows(2).all(|w| w[0].energy >= w[1].energy));
            for p in &s.points {
                let norm = p.sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12);
                assert!(p.grad_norm <= opts.tol * n as f64);
                // all N - 1 tangent eigenvalues negative exactly at local maxima
                assert_eq!(p.index == n - 1, p.lambda_max < 0.0);
            }
        }
        let report = landscape_report(samples, &m, h, n).unwrap();
        assert_eq!(report.floor_violations, 0);
        assert!(report.count_distribution.keys().all(|&c| c >= 2));
    }
}

#[test]
fn strong_field_aligns_argmax() {
    let m = MixedModel::pure(3, 1.0).unwrap();
    let opts = FinderOptions::default();
    let samples = run_census(&m, 10.0, 16, 20, 9, &opts).unwrap();
    let report = landscape_report(samples, &m, 10.0, 16).unwrap();
    let overlap = report.argmax.unwrap().overlap.mean;
    assert!((overlap - 10.0 / 103f64.sqrt()).abs() < 0.05, "{overlap}");
}

#[test]
fn gradient_is_independent_of_value_radial_and_hessian() {
    let m: MixedModel = "1:0.3,2:0.5,3:1".parse().unwrap();
    let n = 8;
    let draws = 2000;
    let sigma = DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
    let evals: Vec<_> = (0..draws as u64)
        .into_par_iter()
        .map(|d| eval_field(&sample_field_draw(&m, n, 41, d).unwrap(), 0.0, &sigma).unwrap())
        .collect();
    let col = |f: &dyn Fn(&landscape_core::simulate::EvalResult) -> f64| -> Vec<f64> {
        evals.iter().map(f).collect()
    };
    let se = 1.0 / (draws as f64).sqrt();
    for i in [0usize, 3] {
        let g = col(&|e| e.sph_grad[i]);
        let others = [
            col(&|e| e.value),
            col(&|e| e.radial),
            col(&|e| e.sph_hess[(0, 0)]),
            col(&|e| e.sph_hess[(i, i)]),
            col(&|e| e.sph_hess[(1, 2)]),
        ];
        for o in &others {
            let r = correlation(&g, o);
            assert!(r.abs() < 5.0 * se, "component {i}: correlation {r}");
        }
    }
}

#[test]
fn tangent_hessian_edge_matches_semicircle() {
    // The tangent block of the Euclidean Hessian is sqrt(N xi'') times a
    // matrix with unit off-diagonal variance, whose top eigenvalue is near 2 sqrt(N).
    let m: MixedModel = "2:0.5,3:1".parse().unwrap();
    let n = 100;
    let sigma = DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
    let tops: Vec<f64> = (0..50u64)
        .map(|d| {
            let s = sample_field_draw(&m, n, 6, d).unwrap();
            let e = eval_field(&s, 0.0, &sigma).unwrap();
            let block = e.tangent_basis().transpose() * &e.euclid_hess * e.tangent_basis();
            let top = block.symmetric_eigenvalues().max();
            top / (n as f64 * (2.0 * m.xi_pp()).sqrt())
        })
        .collect();
    let mean = MeanSd::of(&tops).mean;
    assert!((mean - SQRT_2).abs() < 0.1, "{mean}");
}

#[test]
fn energy_variance_matches_covariance() {
    let m = MixedModel::pure(3, 1.0).unwrap();
    let n = 10;
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let sq: Vec<f64> = (0..2000u64)
        .into_par_iter()
        .map(|d| {
            let s = sample_field_draw(&m, n, 13, d).unwrap();
            eval_field(&s, 0.0, &e1).unwrap().value_noh.powi(2)
        })
        .collect();
    let s = MeanSd::of(&sq);
    assert!(
        (s.mean - 10.0).abs() < 5.0 * s.se(),
        "{} +- {}",
        s.mean,
        s.se()
    );
}

#[test]
fn covariance_table_small_mixture() {
    let m: MixedModel = "1:0.5,2:1,3:1".parse().unwrap();
    let rows = covariance_selftest(&m, 6, 1500, 77).unwrap();
    for r in &rows {
        assert!(
            r.z() < 5.0,
            "{}: {} vs {} (se {})",
            r.quantity,
            r.empirical,
            r.exact,
            r.se
        );
    }
}

#[test]
fn sampling_and_search_are_deterministic() {
    let m: MixedModel = "2:1,3:0.5".parse().unwrap();
    let a = sample_field(&m, 7, 99).unwrap();
    let b = sample_field(&m, 7, 99).unwrap();
    for (x, y) in a.tensors.iter().zip(&b.tensors) {
        assert!(x
            .entries
            .iter()
            .zip(&y.entries)
            .all(|(u, v)| u.to_bits() == v.to_bits()));
    }
    assert_ne!(
        a.tensors[0].entries,
        sample_field(&m, 7, 100).unwrap().tensors[0].entries
    );
    let opts = FinderOptions {
        starts: 16,
        ..FinderOptions::default()
    };
    let r1 = find_critical_points(&a, 0.5, &opts, 3).unwrap();
    let r2 = find_critical_points(&b, 0.5, &opts, 3).unwrap();
    assert_eq!(
        serde_json::to_string(&r1).unwrap(),
        serde_json::to_string(&r2).unwrap()
    );
}

#[test]
fn rejects_invalid_inputs() {
    assert!("1:1".parse::<MixedModel>().is_err());
    let cubic = MixedModel::pure(3, 1.0).unwrap();
    assert!(matches!(
        sample_field(&cubic, 500, 0),
        Err(Error::TooLarge(_))
    ));
    let s = sample_field(&cubic, 4, 0).unwrap();
    assert!(eval_field(&s, 1.0, &DVector::from_element(4, 1.0)).is_err());
    assert!(eval_field(&s, 1.0, &DVector::from_element(3, 0.5)).is_err());
    let few = FinderOptions {
        starts: 1,
        ..FinderOptions::default()
    };
    assert!(find_critical_points(&s, 1.0, &few, 0).is_err());
}
