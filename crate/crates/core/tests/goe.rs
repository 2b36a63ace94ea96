use std::f64::consts::{PI, SQRT_2};

use landscape_core::goe::{
    hermite_phi, mc_shifted_det, rho, rho_asymptotic, rho_exact, sample_goe_spectrum_draw,
    semicircle, shifted_det_mean, DensityMode, GoeSpec,
};
use landscape_core::model::phi;
use landscape_core::quadrature::adaptive_gk;
use proptest::prelude::*;
use rayon::prelude::*;

fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let mut g = |x: f64| f(x);
    adaptive_gk(&mut g, lo, hi, panels, 1e-13, 1e-12, 50_000)
        .unwrap()
        .0
}

#[test]
fn density_integrates_to_one() {
    for n in [1usize, 2, 5, 10, 50, 200] {
        let panels = 8 * ((n as f64).sqrt() as usize + 2);
        let v = integrate(|x| rho_exact(n, x).unwrap().to_f64(), -6.0, 6.0, panels);
        assert!((v - 1.0).abs() < 1e-6, "N={n}: {v}");
    }
}

#[test]
fn hermite_functions_are_normalized() {
    for n in [0usize, 1, 5, 20, 100] {
        let v = integrate(
            |x| hermite_phi(n, x).unwrap().to_f64().powi(2),
            -25.0,
            25.0,
            200,
        );
        assert!((v - 1.0).abs() < 1e-8, "n={n}: {v}");
    }
}

proptest! {
    #[test]
    fn density_is_even(n in 1usize..300, x in -5.0f64..5.0) {
        let a = rho_exact(n, x).unwrap();
        let b = rho_exact(n, -x).unwrap();
        prop_assert!((a.ln() - b.ln()).abs() < 1e-12 || (a.to_f64() - b.to_f64()).abs() < 1e-300);
    }

    #[test]
    fn asymptotic_form_is_even(n in 10usize..3000, x in 1.6f64..6.0) {
        let a = rho_asymptotic(n, x, 0.05).unwrap();
        let b = rho_asymptotic(n, -x, 0.05).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn shifted_determinant_identity_by_monte_carlo() {
    for n in [2usize, 4, 8] {
        for x in [0.0, 0.5, 1.5, 2.5] {
            let exact = shifted_det_mean(n, x).unwrap().to_f64();
            let mc = mc_shifted_det(n, x, 100_000, 17 + n as u64).unwrap();
            let z = (mc.mean - exact).abs() / mc.se;
            assert!(
                z < 3.0,
                "N={n}, x={x}: exact {exact}, MC {} +- {}",
                mc.mean,
                mc.se
            );
        }
    }
}

#[test]
fn large_deviation_sandwich() {
    let (n, eps) = (200usize, 0.05);
    let nf = n as f64;
    for i in 0..=160 {
        let x = -4.0 + 0.05 * i as f64;
        let l = rho_exact(n, x).unwrap().ln();
        let p = phi(x, 0);
        assert!(
            nf * p * (1.0 + eps) - nf * eps <= l,
            "lower bound fails at {x}"
        );
        assert!(
            l <= nf * p * (1.0 - eps) + nf * eps,
            "upper bound fails at {x}"
        );
    }
}

#[test]
fn density_at_origin_matches_semicircle() {
    let r = rho_exact(200, 0.0).unwrap().to_f64();
    assert!((r / (SQRT_2 / PI) - 1.0).abs() < 0.02, "{r}");
    assert_eq!(semicircle(0.0), SQRT_2 / PI);
    assert_eq!(semicircle(1.5), 0.0);
}

#[test]
fn one_by_one_is_gaussian() {
    for i in 0..=800 {
        let x = -4.0 + 0.01 * i as f64;
        let g = (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
        assert!((rho_exact(1, x).unwrap().to_f64() - g).abs() < 1e-8);
    }
}

#[test]
fn asymptotic_density_tracks_exact_outside_bulk() {
    let exact = rho_exact(100, 1.6).unwrap().to_f64();
    let asym = rho_asymptotic(100, 1.6, 0.05).unwrap().to_f64();
    assert!((asym / exact - 1.0).abs() < 0.05, "{asym} vs {exact}");
    assert!(rho(100, 1.0, DensityMode::asymptotic()).is_err());
}

#[test]
fn sampled_spectrum_follows_semicircle() {
    let n = 500;
    let spec = GoeSpec::normalized(n).unwrap();
    let bins = 50;
    let (lo, hi) = (-1.6, 1.6);
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let draws = 100u64;
    let spectra: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|d| sample_goe_spectrum_draw(spec, 5, d).unwrap())
        .collect();
    for ev in spectra.into_iter().flatten() {
        let k = ((ev - lo) / w).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    let total = (n * draws as usize) as f64;
    let mut worst: f64 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let a = lo + k as f64 * w;
        let expected = integrate(semicircle, a, a + w, 1) / w;
        worst = worst.max((c as f64 / (total * w) - expected).abs());
    }
    assert!(worst < 0.02, "max histogram deviation {worst}");
}

#[test]
fn top_eigenvalue_concentrates_at_edge() {
    let spec = GoeSpec::normalized(200).unwrap();
    let tops: Vec<f64> = (0..50)
        .map(|d| sample_goe_spectrum_draw(spec, 9, d).unwrap()[0])
        .collect();
    let mean = tops.iter().sum::<f64>() / tops.len() as f64;
    assert!((mean - SQRT_2).abs() < 0.1, "{mean}");
}

#[test]
fn single_entry_moments() {
    // GOE_1(a) is N(0, a)
    let spec = GoeSpec::new(1, 2.5).unwrap();
    let v: Vec<f64> = (0..20_000)
        .map(|d| sample_goe_spectrum_draw(spec, 3, d).unwrap()[0])
        .collect();
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| x * x).sum::<f64>() / k - mean * mean;
    assert!(mean.abs() < 5.0 * (2.5 / k).sqrt());
    assert!((var - 2.5).abs() < 5.0 * 2.5 * (2.0 / k).sqrt());
}
