//! Closed-form quantities of the variational problem behind the annealed
//! critical-point count: the GOE rate function `Phi`, the exponent `F`,
//! its maximizers in each regime, thresholds and limiting predictions.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use super::MixedModel;
use crate::error::{Error, Result};

/// Field strength threshold `sqrt(xi'' - xi')`, or `None` when
/// `xi'' < xi'` and every `h >= 0` is in the trivial regime.
pub fn threshold_hc(model: &MixedModel) -> Option<f64> {
    let d = model.xi_pp() - model.xi_p();
    (d >= 0.0).then(|| d.sqrt())
}

/// Large-deviation rate of a GOE eigenvalue outside the bulk (`order = 0`)
/// and its derivative (`order = 1`). Both vanish on `[-sqrt 2, sqrt 2]`.
pub fn phi(x: f64, order: u8) -> f64 {
    let ax = x.abs();
    if ax <= SQRT_2 {
        return 0.0;
    }
    let s = (x * x - 2.0).sqrt();
    match order {
        0 => -ax * s / 2.0 + ((ax + s) / SQRT_2).ln(),
        1 => -s * x.signum(),
        _ => panic!("phi supports order 0 or 1, got {order}"),
    }
}

/// Second derivative of `phi`, defined away from `|x| = sqrt 2`.
pub fn phi_second(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SQRT_2 {
        0.0
    } else {
        -ax / (x * x - 2.0).sqrt()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.abs() < 1.0) {
        return Err(Error::Domain(format!("overlap {gamma} outside (-1, 1)")));
    }
    Ok(())
}

/// The Gaussian part `G(x, gamma)` of the Kac-Rice exponent.
pub fn big_g(model: &MixedModel, h: f64, x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    Ok(
        0.5 * (1.0 - gamma * gamma).ln() + h * h * gamma * gamma / (2.0 * xp)
            - x * x / (2.0 * (xp + xpp))
            + (x + h * gamma).powi(2) / (4.0 * xpp),
    )
}

/// `eta = (x + h gamma) / sqrt(2 xi'')`, the argument of the GOE density.
pub fn eta_of(model: &MixedModel, h: f64, x: f64, gamma: f64) -> f64 {
    (x + h * gamma) / (2.0 * model.xi_pp()).sqrt()
}

/// Exponent `F = G + Phi(eta)` of the integrand.
pub fn big_f(model: &MixedModel, h: f64, x: f64, gamma: f64) -> Result<f64> {
    Ok(big_g(model, h, x, gamma)? + phi(eta_of(model, h, x, gamma), 0))
}

/// `F` in the coordinates `(eta, gamma)`.
pub fn tilde_f(model: &MixedModel, h: f64, eta: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let a = model.ratio();
    let ht = h / (2.0 * model.xi_pp()).sqrt();
    Ok(
        0.5 * (1.0 - gamma * gamma).ln() + ht * ht * gamma * gamma / a
            - (eta - ht * gamma).powi(2) / (1.0 + a)
            + eta * eta / 2.0
            + phi(eta, 0),
    )
}

/// Hessian of `F` at `(x, gamma)` as `[[F_xx, F_xg], [F_xg, F_gg]]`.
/// Not defined on the curve `|eta| = sqrt 2`.
pub fn f_hessian(model: &MixedModel, h: f64, x: f64, gamma: f64) -> Result<[[f64; 2]; 2]> {
    check_gamma(gamma)?;
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    let d2 = phi_second(eta_of(model, h, x, gamma));
    let g2 = gamma * gamma;
    let fxx = ((xp - xpp) / (xp + xpp) + d2) / (2.0 * xpp);
    let fgg = -(1.0 + g2) / (1.0 - g2).powi(2) + h * h / (2.0 * xpp) * (1.0 + 2.0 * xpp / xp + d2);
    let fxg = h / (2.0 * xpp) * (1.0 + d2);
    Ok([[fxx, fxg], [fxg, fgg]])
}

/// Which maximizer of `F` applies for a given `(model, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Trivial,
    NontrivialUpper,
    NontrivialLower,
    DegenerateLine,
}

impl Regime {
    pub fn classify(model: &MixedModel, h: f64) -> Result<Self> {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!(
                "field strength {h} must be finite and >= 0"
            )));
        }
        let gap = model.xi_pp() - model.xi_p();
        if h * h > gap {
            return Ok(Regime::Trivial);
        }
        // h^2 <= gap forces gap >= 0, hence a <= 1.
        let a = model.ratio();
        if a < 1.0 {
            if h > a.sqrt() * gap.sqrt() {
                Ok(Regime::NontrivialUpper)
            } else {
                Ok(Regime::NontrivialLower)
            }
        } else {
            Ok(Regime::DegenerateLine)
        }
    }

    /// The inequality that defines the regime.
    pub fn condition(self) -> &'static str {
        match self {
            Regime::Trivial => "h^2 > xi'' - xi'",
            Regime::NontrivialUpper => "a < 1 and sqrt(a) h_c < h <= h_c",
            Regime::NontrivialLower => "a < 1 and h <= sqrt(a) h_c",
            Regime::DegenerateLine => "a = 1 and h = 0",
        }
    }
}

/// Derived constants of the critical-point system of `F` in `(eta, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemCoefficients {
    pub h_tilde: f64,
    pub a: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub big_c: f64,
    /// `(1 - B^2) / A^2`; infinite when `h = 0`.
    pub big_r: f64,
    /// `xi'' h^2 / (xi' (xi'' - xi'))`, present only when `xi'' > xi'`.
    pub big_h: Option<f64>,
}

impl SystemCoefficients {
    pub fn new(model: &MixedModel, h: f64) -> Self {
        let (xp, xpp) = (model.xi_p(), model.xi_pp());
        let h_tilde = h / (2.0 * xpp).sqrt();
        let a = xp / xpp;
        let big_a = 2.0 * h_tilde / (1.0 + a);
        let big_b = (1.0 - a) / (1.0 + a);
        let big_c = 2.0 * h_tilde * h_tilde / ((1.0 + a) * a);
        let big_r = if h > 0.0 {
            (1.0 - big_b * big_b) / (big_a * big_a)
        } else {
            f64::INFINITY
        };
        let big_h = (xpp > xp).then(|| xpp * h * h / (xp * (xpp - xp)));
        Self {
            h_tilde,
            a,
            big_a,
            big_b,
            big_c,
            big_r,
            big_h,
        }
    }
}

/// Maximizer of `F` (positive branch) and the maximal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximizerReport {
    pub regime: Regime,
    /// `None` on the degenerate line, where the maximum is not isolated.
    pub maximizer_x: Option<f64>,
    pub maximizer_gamma: Option<f64>,
    pub maximizer_eta: Option<f64>,
    pub f_max: f64,
    pub unique: bool,
}

pub fn classify_and_maximize(model: &MixedModel, h: f64) -> Result<MaximizerReport> {
    let regime = Regime::classify(model, h)?;
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    let report = match regime {
        Regime::Trivial => {
            let s = (xp + h * h).sqrt();
            let gamma = h / s;
            let x = (xp + xpp) / s;
            let eta = (xp + xpp + h * h) / (2.0 * xpp * (xp + h * h)).sqrt();
            MaximizerReport {
                regime,
                maximizer_x: Some(x),
                maximizer_gamma: Some(gamma),
                maximizer_eta: Some(eta),
                f_max: h * h / (2.0 * xp) - 0.5 * (xpp / xp).ln(),
                unique: true,
            }
        }
        Regime::NontrivialUpper => {
            let gap = xpp - xp;
            let gamma = ((xpp * h * h - xp * gap) / xpp).sqrt() / h;
            let eta = h * gamma * (2.0 * xpp).sqrt() / gap;
            let x = h * gamma * (xp + xpp) / gap;
            let big_h = xpp * h * h / (xp * gap);
            MaximizerReport {
                regime,
                maximizer_x: Some(x),
                maximizer_gamma: Some(gamma),
                maximizer_eta: Some(eta),
                f_max: 0.5 * (big_h - 1.0 - big_h.ln()),
                unique: true,
            }
        }
        Regime::NontrivialLower => MaximizerReport {
            regime,
            maximizer_x: Some(0.0),
            maximizer_gamma: Some(0.0),
            maximizer_eta: Some(0.0),
            f_max: 0.0,
            unique: true,
        },
        Regime::DegenerateLine => MaximizerReport {
            regime,
            maximizer_x: None,
            maximizer_gamma: None,
            maximizer_eta: None,
            f_max: 0.0,
            unique: false,
        },
    };
    Ok(report)
}

/// Limit of `(1/N) ln E[#critical points]`.
pub fn annealed_rate(model: &MixedModel, h: f64) -> Result<f64> {
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    Ok(match Regime::classify(model, h)? {
        Regime::Trivial => 0.0,
        Regime::NontrivialUpper => {
            let r = h * h / (xpp - xp);
            0.5 * (r - 1.0 - r.ln())
        }
        Regime::NontrivialLower | Regime::DegenerateLine => {
            0.5 * (xpp / xp).ln() - h * h / (2.0 * xp)
        }
    })
}

/// Limiting properties of the global maximizer above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrivialPredictions {
    /// `H^h(sigma*) / N`
    pub gs_energy: f64,
    /// `sigma* . u`
    pub overlap: f64,
    /// `d_r H^h(sigma*) / N`
    pub radial_h: f64,
    /// `d_r H(sigma*) / N`, field excluded
    pub radial_noh: f64,
    /// top eigenvalue of the spherical Hessian at `sigma*`, per site
    pub lambda_max: f64,
}

/// Relative slack accepted at the boundary `h^2 = xi'' - xi'`, where the
/// predictions are still defined by continuity.
const BOUNDARY_RTOL: f64 = 1e-12;

pub fn trivial_predictions(model: &MixedModel, h: f64) -> Result<TrivialPredictions> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!(
            "field strength {h} must be finite and >= 0"
        )));
    }
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    let gap = xpp - xp;
    if h * h < gap * (1.0 - BOUNDARY_RTOL) {
        return Err(Error::Regime(format!(
            "predictions need h^2 >= xi'' - xi' (h^2 = {}, xi'' - xi' = {gap})",
            h * h
        )));
    }
    let s = (xp + h * h).sqrt();
    let radial_h = (xp + xpp + h * h) / s;
    Ok(TrivialPredictions {
        gs_energy: s,
        overlap: h / s,
        radial_h,
        radial_noh: (xp + xpp) / s,
        lambda_max: 2.0 * xpp.sqrt() - radial_h,
    })
}

/// Hessian of `F` at the trivial-regime maximizer together with the
/// closed-form determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxHessian {
    pub matrix: [[f64; 2]; 2],
    pub det_closed_form: f64,
}

impl MaxHessian {
    pub fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

pub fn hessian_f_at_max(model: &MixedModel, h: f64) -> Result<MaxHessian> {
    let rep = classify_and_maximize(model, h)?;
    if rep.regime != Regime::Trivial {
        return Err(Error::Regime(format!(
            "Hessian at the maximizer needs the trivial regime, got {:?}",
            rep.regime
        )));
    }
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    let x = rep.maximizer_x.unwrap();
    let gamma = rep.maximizer_gamma.unwrap();
    let matrix = f_hessian(model, h, x, gamma)?;
    let h2 = h * h;
    let det_closed_form = 2.0 * (xp + h2).powi(3) / ((h2 + xp - xpp) * xp * xp * (xp + xpp));
    Ok(MaxHessian {
        matrix,
        det_closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic() -> MixedModel {
        MixedModel::pure(3, 1.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn thresholds() {
        assert!(close(threshold_hc(&cubic()).unwrap(), 3f64.sqrt(), 1e-15));
        assert_eq!(threshold_hc(&MixedModel::pure(2, 1.0).unwrap()), Some(0.0));
        assert_eq!(threshold_hc(&"1:1,2:1".parse().unwrap()), None);
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(SQRT_2, 0), 0.0);
        assert_eq!(phi(1.0, 0), 0.0);
        assert_eq!(phi(1.0, 1), 0.0);
        assert!(close(phi(2.0, 0), -SQRT_2 + (1.0 + SQRT_2).ln(), 1e-15));
        assert!(close(phi(2.0, 0), -0.5328399, 1e-7));
        assert_eq!(phi(-2.0, 0), phi(2.0, 0));
        assert_eq!(phi(-2.0, 1), -phi(2.0, 1));
    }

    #[test]
    fn phi_bounds_and_derivative() {
        let mut x = -8.0;
        while x <= 8.0 {
            let v = phi(x, 0);
            assert!(v <= 0.0);
            assert!(v >= -x * x / 2.0);
            if (x.abs() - SQRT_2).abs() > 1e-3 {
                let d = 1e-5;
                let fd = (phi(x + d, 0) - phi(x - d, 0)) / (2.0 * d);
                assert!(
                    (fd - phi(x, 1)).abs() <= 1e-6,
                    "x={x}: {fd} vs {}",
                    phi(x, 1)
                );
            }
            x += 0.0137;
        }
    }

    #[test]
    fn f_at_origin_vanishes() {
        for (m, h) in [
            (cubic(), 0.0),
            (cubic(), 2.7),
            ("1:0.3,2:1,4:0.2".parse().unwrap(), 1.1),
        ] {
            assert_eq!(big_f(&m, h, 0.0, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn f_domain_error() {
        assert!(matches!(
            big_f(&cubic(), 1.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(big_f(&cubic(), 1.0, 0.0, -1.2).is_err());
        assert!(big_f(&cubic(), 1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn f_at_trivial_maximizer() {
        let m = cubic();
        let rep = classify_and_maximize(&m, 2.0).unwrap();
        let f = big_f(
            &m,
            2.0,
            rep.maximizer_x.unwrap(),
            rep.maximizer_gamma.unwrap(),
        )
        .unwrap();
        assert!(close(f, 4.0 / 6.0 - 0.5 * 2f64.ln(), 1e-12));
        assert!(close(f, 0.3200931, 1e-7));
    }

    #[test]
    fn maximizer_examples() {
        let m = cubic();
        let r = classify_and_maximize(&m, 2.0).unwrap();
        assert_eq!(r.regime, Regime::Trivial);
        assert!(close(r.maximizer_x.unwrap(), 3.4016803, 1e-7));
        assert!(close(r.maximizer_gamma.unwrap(), 0.7559289, 1e-7));
        assert!(close(r.maximizer_eta.unwrap(), 13.0 / 84f64.sqrt(), 1e-15));
        assert!(close(r.maximizer_eta.unwrap(), 1.4184163, 1e-7));
        assert!(close(r.f_max, 0.3200931, 1e-7));

        let r = classify_and_maximize(&m, 1.5).unwrap();
        assert_eq!(r.regime, Regime::NontrivialUpper);
        assert!(close(r.maximizer_gamma.unwrap(), 0.5773503, 1e-7));
        assert!(close(r.maximizer_x.unwrap(), 2.5980762, 1e-7));
        assert!(close(r.maximizer_eta.unwrap(), 1.0, 1e-12));
        assert!(close(r.f_max, 0.0472674, 1e-7));

        let r = classify_and_maximize(&m, 1.0).unwrap();
        assert_eq!(r.regime, Regime::NontrivialLower);
        assert_eq!(r.maximizer_x, Some(0.0));
        assert_eq!(r.f_max, 0.0);

        let r = classify_and_maximize(&MixedModel::pure(2, 1.0).unwrap(), 0.0).unwrap();
        assert_eq!(r.regime, Regime::DegenerateLine);
        assert!(!r.unique);
        assert_eq!(r.maximizer_x, None);
        assert_eq!(r.f_max, 0.0);

        assert!(classify_and_maximize(&m, -0.1).is_err());
    }

    #[test]
    fn threshold_boundary_is_upper() {
        // at h = h_c with a < 1 the two maximizer families meet at eta = sqrt 2
        let m = cubic();
        let hc = threshold_hc(&m).unwrap();
        let r = classify_and_maximize(&m, hc).unwrap();
        assert_eq!(r.regime, Regime::NontrivialUpper);
        assert!(close(r.maximizer_eta.unwrap(), SQRT_2, 1e-12));
    }

    #[test]
    fn rate_examples() {
        let m = cubic();
        assert!(close(
            annealed_rate(&m, 0.0).unwrap(),
            0.5 * 2f64.ln(),
            1e-15
        ));
        assert!(close(annealed_rate(&m, 0.0).unwrap(), 0.3465736, 1e-7));
        assert!(close(annealed_rate(&m, 1.5).unwrap(), 0.0188410, 1e-7));
        assert_eq!(annealed_rate(&m, 2.0).unwrap(), 0.0);
        assert!(annealed_rate(&m, -1.0).is_err());
    }

    #[test]
    fn rate_continuity() {
        for m in [
            cubic(),
            "2:0.5,3:1,5:0.25".parse().unwrap(),
            "1:0.2,4:1".parse().unwrap(),
        ] {
            let hc = threshold_hc(&m).unwrap();
            let h1 = m.ratio().sqrt() * hc;
            for hb in [h1, hc] {
                let lo = annealed_rate(&m, hb * (1.0 - 1e-11)).unwrap();
                let hi = annealed_rate(&m, hb * (1.0 + 1e-11)).unwrap();
                assert!((lo - hi).abs() <= 1e-9, "jump at {hb}: {lo} vs {hi}");
            }
            assert!(annealed_rate(&m, hc).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn prediction_examples() {
        let m = cubic();
        let p = trivial_predictions(&m, 2.0).unwrap();
        assert!(close(p.gs_energy, 7f64.sqrt(), 1e-15));
        assert!(close(p.overlap, 0.7559289, 1e-7));
        assert!(close(p.radial_h, 13.0 / 7f64.sqrt(), 1e-14));
        assert!(close(p.lambda_max, -0.0145587, 1e-7));
        let p = trivial_predictions(&m, 3f64.sqrt()).unwrap();
        assert!(p.lambda_max.abs() < 1e-14);
        let p = trivial_predictions(&m, 10.0).unwrap();
        assert!(close(p.overlap, 10.0 / 103f64.sqrt(), 1e-15));
        assert!(matches!(
            trivial_predictions(&m, 1.5),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn hessian_examples() {
        let m = cubic();
        let hm = hessian_f_at_max(&m, 2.0).unwrap();
        assert!(close(hm.det_closed_form, 686.0 / 81.0, 1e-12));
        assert!(close(hm.matrix[0][0], -10.0 / 9.0, 1e-12));
        assert!((hm.det() - hm.det_closed_form).abs() <= 1e-10 * hm.det_closed_form);
        assert!(hessian_f_at_max(&m, 1.5).is_err());
    }

    #[test]
    fn hessian_matches_finite_differences() {
        for (spec, h) in [
            ("3:1", 2.0),
            ("2:1,3:0.5", 2.5),
            ("1:1,2:1", 0.3),
            ("2:0.7,4:0.4", 3.0),
        ] {
            let m: MixedModel = spec.parse().unwrap();
            let hm = hessian_f_at_max(&m, h).unwrap();
            let r = classify_and_maximize(&m, h).unwrap();
            let (x, g) = (r.maximizer_x.unwrap(), r.maximizer_gamma.unwrap());
            let f = |x: f64, g: f64| big_f(&m, h, x, g).unwrap();
            let d = 1e-4;
            let fxx = (f(x + d, g) - 2.0 * f(x, g) + f(x - d, g)) / (d * d);
            let fgg = (f(x, g + d) - 2.0 * f(x, g) + f(x, g - d)) / (d * d);
            // eta* sits close to the sqrt 2 edge where Phi has large higher
            // derivatives; the four-point mixed stencil needs a smaller step.
            let d = 2e-5;
            let fxg = (f(x + d, g + d) - f(x + d, g - d) - f(x - d, g + d) + f(x - d, g - d))
                / (4.0 * d * d);
            for (fd, an) in [
                (fxx, hm.matrix[0][0]),
                (fgg, hm.matrix[1][1]),
                (fxg, hm.matrix[0][1]),
            ] {
                assert!(
                    (fd - an).abs() <= 1e-5 * an.abs().max(1.0),
                    "{spec}: {fd} vs {an}"
                );
            }
        }
    }

    fn arb_model() -> impl Strategy<Value = MixedModel> {
        (
            proptest::collection::vec((1u32..=8, 0.01f64..3.0), 0..4),
            2u32..=8,
            0.05f64..3.0,
        )
            .prop_map(|(mut v, p, a)| {
                v.retain(|(q, _)| *q != p);
                v.sort_by_key(|e| e.0);
                v.dedup_by_key(|e| e.0);
                v.push((p, a));
                MixedModel::new(v).unwrap()
            })
    }

    proptest! {
        #[test]
        fn exactly_one_regime(m in arb_model(), h in 0.0f64..6.0) {
            let r = Regime::classify(&m, h).unwrap();
            let gap = m.xi_pp() - m.xi_p();
            let a = m.ratio();
            let tags = [
                h * h > gap,
                h * h <= gap && a < 1.0 && h > a.sqrt() * gap.sqrt(),
                h * h <= gap && a < 1.0 && h <= a.sqrt() * gap.sqrt(),
                h * h <= gap && a >= 1.0,
            ];
            prop_assert_eq!(tags.iter().filter(|t| **t).count(), 1);
            let idx = match r {
                Regime::Trivial => 0,
                Regime::NontrivialUpper => 1,
                Regime::NontrivialLower => 2,
                Regime::DegenerateLine => 3,
            };
            prop_assert!(tags[idx]);
        }

        #[test]
        fn rate_composition(m in arb_model(), h in 0.0f64..6.0) {
            let rep = classify_and_maximize(&m, h).unwrap();
            let composed = if rep.regime == Regime::Trivial {
                0.0
            } else {
                0.5 * (m.xi_pp() / m.xi_p()).ln() - h * h / (2.0 * m.xi_p()) + rep.f_max
            };
            let rate = annealed_rate(&m, h).unwrap();
            prop_assert!((rate - composed).abs() <= 1e-12 * (1.0 + rate.abs()));
            // in the trivial regime the composition gives 0 as well
            if rep.regime == Regime::Trivial {
                let c = 0.5 * (m.xi_pp() / m.xi_p()).ln() - h * h / (2.0 * m.xi_p()) + rep.f_max;
                prop_assert!(c.abs() <= 1e-12 * (1.0 + h * h));
            }
            prop_assert!(rep.f_max >= 0.0);
        }

        #[test]
        fn tilde_f_symmetry(m in arb_model(), h in 0.0f64..4.0, eta in -5.0f64..5.0, g in -0.99f64..0.99) {
            let a = tilde_f(&m, h, eta, g).unwrap();
            let b = tilde_f(&m, h, -eta, -g).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn f_matches_tilde_f(m in arb_model(), h in 0.0f64..4.0, x in -8.0f64..8.0, g in -0.99f64..0.99) {
            let f = big_f(&m, h, x, g).unwrap();
            let ft = tilde_f(&m, h, eta_of(&m, h, x, g), g).unwrap();
            prop_assert!((f - ft).abs() <= 1e-10 * (1.0 + f.abs()));
        }

        #[test]
        fn maximizer_value_and_eta(m in arb_model(), h in 0.0f64..6.0) {
            let rep = classify_and_maximize(&m, h).unwrap();
            if let (Some(x), Some(g)) = (rep.maximizer_x, rep.maximizer_gamma) {
                let f = big_f(&m, h, x, g).unwrap();
                prop_assert!((f - rep.f_max).abs() <= 1e-12 * (1.0 + f.abs()));
            }
            if rep.regime == Regime::Trivial {
                let eta = rep.maximizer_eta.unwrap();
                prop_assert!(eta >= SQRT_2);
                let (xp, xpp) = (m.xi_p(), m.xi_pp());
                let rhs = (xp + h * h - xpp).powi(2) / (2.0 * xpp * (xp + h * h));
                prop_assert!((eta * eta - 2.0 - rhs).abs() <= 1e-12 * (1.0 + rhs));
                let p = trivial_predictions(&m, h).unwrap();
                prop_assert!((p.radial_h - (p.radial_noh + h * p.overlap)).abs() <= 1e-12 * p.radial_h);
                let y = xp * p.radial_noh / (xp + xpp) + h * p.overlap;
                prop_assert!((p.gs_energy - y).abs() <= 1e-12 * p.gs_energy);
                prop_assert!(p.lambda_max <= 1e-12);
            }
        }
    }
}
