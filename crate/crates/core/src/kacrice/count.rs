//! Exact expected number of critical points as a two-dimensional integral
//! over overlap `gamma` and radial derivative `x`, evaluated in log domain.
//!
//! The integral is computed in the coordinates `(eta, t)` with
//! `eta = (x + h gamma) / sqrt(2 xi'')` and, by default, `gamma = tanh t`.
//! In these coordinates the integrand factors as
//! `exp(c(eta) + r(t) - N (eta - h~ gamma)^2 / (1 + a))`, so `rho_N` is
//! evaluated once per `eta` node and reused by every `gamma` row.

use std::f64::consts::{PI, SQRT_2};

use libm::lgamma as ln_gamma;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::restriction::{IntervalSet, RestrictionSet};
use crate::error::{Error, Result};
use crate::goe::{erfcx, rho_asymptotic, rho_exact, DensityMode, MAX_EXACT_N};
use crate::model::{big_g, classify_and_maximize, hessian_f_at_max, MixedModel, Regime};
use crate::quadrature::{gauss_legendre, log_add, pairwise_log_sum_exp};

/// Smallest dimension accepted by [`expected_count`].
pub const MIN_COUNT_N: usize = 4;

// Log-scale margin below which the integrand is treated as negligible when
// sizing the integration window.
const WINDOW_MARGIN: f64 = 60.0;
// Added to every error estimate to account for summation rounding.
const ERROR_FLOOR: f64 = 1e-12;

/// Range of the radial variable `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum XRange {
    /// Derived from the Gaussian envelope of the exponent.
    Auto,
    Explicit {
        lo: f64,
        hi: f64,
    },
}

/// Parametrization of the overlap direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GammaTransform {
    Identity,
    /// `gamma = tanh t`, which maps the endpoints `+-1` to infinity.
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub x_range: XRange,
    pub gamma_transform: GammaTransform,
    /// Multiplies the default `eta` panel width.
    pub eta_panel_scale: f64,
    /// Multiplies the default `gamma` (or `t`) panel width.
    pub gamma_panel_scale: f64,
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Target for the estimated relative error of the count.
    pub rel_tol: f64,
    /// Number of panel halvings tried before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            x_range: XRange::Auto,
            gamma_transform: GammaTransform::Tanh,
            eta_panel_scale: 1.0,
            gamma_panel_scale: 1.0,
            nodes_per_panel: 10,
            rel_tol: 1e-6,
            max_refinements: 3,
        }
    }
}

/// Expected (restricted) number of critical points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountResult {
    pub model: MixedModel,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub restriction: RestrictionSet,
    pub rho_mode: DensityMode,
    pub log_value: f64,
    /// `None` when `exp(log_value)` leaves the `f64` range.
    pub value: Option<f64>,
    /// Estimated relative error, `|Delta log_value|` between the last two
    /// panel refinements plus a rounding floor.
    pub error_estimate: f64,
}

/// `rho_N` mode used by default: exact up to `N = 400`.
pub fn default_rho_mode(n: usize) -> DensityMode {
    if n <= 400 {
        DensityMode::ExactHermite
    } else {
        DensityMode::asymptotic()
    }
}

/// Mean of the per-site energy given `(x, gamma)`.
fn energy_mean(model: &MixedModel, h: f64, x: f64, gamma: f64) -> f64 {
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    xp * x / (xp + xpp) + h * gamma
}

/// Conditional variance coefficient `J^2` of the energy; zero for pure models.
pub fn energy_variance(model: &MixedModel) -> f64 {
    if model.is_pure() {
        return 0.0;
    }
    let (x0, xp, xpp) = (model.xi(), model.xi_p(), model.xi_pp());
    ((x0 * (xp + xpp) - xp * xp) / (xp + xpp)).max(0.0)
}

/// `ln P(Z > z)` for a standard normal `Z`.
fn ln_upper_tail(z: f64) -> f64 {
    if z == f64::INFINITY {
        f64::NEG_INFINITY
    } else if z == f64::NEG_INFINITY {
        0.0
    } else if z < 0.0 {
        (-0.5 * libm::erfc(-z / SQRT_2)).ln_1p()
    } else {
        (0.5 * erfcx(z / SQRT_2)).ln() - 0.5 * z * z
    }
}

/// `ln P(lo <= Z <= hi)`.
fn ln_normal_interval(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return f64::NEG_INFINITY;
    }
    // work on the side of the median where the tails are small
    let (a, b) = if lo + hi > 0.0 { (lo, hi) } else { (-hi, -lo) };
    let la = ln_upper_tail(a);
    let lb = ln_upper_tail(b);
    if lb == f64::NEG_INFINITY {
        return la;
    }
    la + (-(lb - la).exp()).ln_1p()
}

fn ln_p_overlap_energy(
    model: &MixedModel,
    h: f64,
    n: usize,
    x: f64,
    gamma: f64,
    e: &IntervalSet,
) -> f64 {
    if e.is_real_line() {
        return 0.0;
    }
    let mean = energy_mean(model, h, x, gamma);
    let j2 = energy_variance(model);
    if j2 == 0.0 {
        return if e.contains(mean) {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }
    let sd = (j2 / n as f64).sqrt();
    let terms: Vec<f64> = e
        .intervals()
        .iter()
        .map(|&(lo, hi)| ln_normal_interval((lo - mean) / sd, (hi - mean) / sd))
        .collect();
    terms.into_iter().fold(f64::NEG_INFINITY, log_add).min(0.0)
}

/// Conditional probability that the per-site energy lies in `e` given radial
/// derivative `x` and overlap `gamma`, at dimension `n`.
pub fn p_overlap_energy(
    model: &MixedModel,
    h: f64,
    n: usize,
    x: f64,
    gamma: f64,
    e: &IntervalSet,
) -> Result<f64> {
    if !(gamma.abs() <= 1.0) {
        return Err(Error::Domain(format!("overlap {gamma} outside [-1, 1]")));
    }
    Ok(ln_p_overlap_energy(model, h, n, x, gamma, e).exp())
}

fn check_inputs(model: &MixedModel, h: f64, n: usize) -> Result<()> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!(
            "field strength {h} must be finite and >= 0"
        )));
    }
    if n < MIN_COUNT_N {
        return Err(Error::Domain(format!(
            "expected counts need N >= {MIN_COUNT_N}, got {n}"
        )));
    }
    let _ = model;
    Ok(())
}

/// How `rho_N` is obtained at each `eta`, after validating the mode.
#[derive(Debug, Clone, Copy)]
struct DensityPlan {
    n: usize,
    mode: DensityMode,
    // exact evaluation allowed inside the asymptotic mode's excluded zone
    bulk_fallback: bool,
}

impl DensityPlan {
    fn new(model: &MixedModel, h: f64, n: usize, mode: DensityMode) -> Result<Self> {
        match mode {
            DensityMode::ExactHermite => {
                if n > MAX_EXACT_N {
                    return Err(Error::TooLarge(format!(
                        "exact density limited to N <= {MAX_EXACT_N}, got {n}"
                    )));
                }
                Ok(Self {
                    n,
                    mode,
                    bulk_fallback: false,
                })
            }
            DensityMode::Asymptotic { .. } => {
                let rep = classify_and_maximize(model, h)?;
                let outside = rep.regime == Regime::Trivial
                    && rep.maximizer_eta.is_some_and(|e| e >= mode.min_abs_x());
                Ok(Self {
                    n,
                    mode,
                    bulk_fallback: outside,
                })
            }
        }
    }

    fn ln_rho(&self, eta: f64) -> Result<f64> {
        match self.mode {
            DensityMode::ExactHermite => Ok(rho_exact(self.n, eta)?.ln()),
            DensityMode::Asymptotic { delta } => {
                if eta.abs() >= self.mode.min_abs_x() {
                    Ok(rho_asymptotic(self.n, eta, delta)?.ln())
                } else if self.bulk_fallback {
                    // the maximizer is outside the bulk, so this region only
                    // needs a rough density
                    Ok(rho_exact(self.n.min(MAX_EXACT_N), eta)?.ln())
                } else {
                    Err(Error::Domain(format!(
                        "asymptotic density refused: the integrand's maximizer is not outside \
                         |eta| >= {:.6}; use the exact mode",
                        self.mode.min_abs_x()
                    )))
                }
            }
        }
    }
}

/// `ln` of the integrand `e^{N G}(1 - gamma^2)^{-3/2} rho_N(eta) p_{x,gamma}(E)`.
#[allow(clippy::too_many_arguments)]
pub fn log_integrand(
    model: &MixedModel,
    h: f64,
    n: usize,
    x: f64,
    gamma: f64,
    e: &IntervalSet,
    mode: DensityMode,
) -> Result<f64> {
    check_inputs(model, h, n)?;
    let g = big_g(model, h, x, gamma)?;
    let plan = DensityPlan::new(model, h, n, mode)?;
    let eta = (x + h * gamma) / (2.0 * model.xi_pp()).sqrt();
    let lp = ln_p_overlap_energy(model, h, n, x, gamma, e);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(n as f64 * g - 1.5 * (1.0 - gamma * gamma).ln() + plan.ln_rho(eta)? + lp)
}

/// `ln` of the constant in front of the double integral.
pub fn ln_prefactor(model: &MixedModel, h: f64, n: usize) -> f64 {
    let nf = n as f64;
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    -nf * h * h / (2.0 * xp) + 0.5 * (nf - 1.0) * (xpp / xp).ln() + (2.0 * nf).ln()
        - 0.5 * (PI * (xp + xpp)).ln()
        + ln_gamma(nf / 2.0)
        - ln_gamma((nf - 1.0) / 2.0)
}

/// Solves `d^2 = (1 + a)(1 + ln max(1, sqrt2 (c + d)) + m / N)` by fixed point.
fn eta_half_width(a: f64, c: f64, n: usize) -> f64 {
    let mut d = 1.0;
    for _ in 0..50 {
        d = ((1.0 + a) * (1.0 + (SQRT_2 * (c + d)).max(1.0).ln() + WINDOW_MARGIN / n as f64))
            .sqrt();
    }
    d
}

/// Everything that does not change with the panel width.
struct Setup<'a> {
    model: &'a MixedModel,
    h: f64,
    n: usize,
    restriction: &'a RestrictionSet,
    quad: &'a QuadratureSpec,
    plan: DensityPlan,
    a: f64,
    h_tilde: f64,
    sqrt_2xpp: f64,
    eta_lo: f64,
    eta_hi: f64,
    // radial restriction intersected with the explicit x-range
    x_allowed: IntervalSet,
    pure_energy: bool,
    smooth_energy: bool,
    t_max: f64,
}

impl<'a> Setup<'a> {
    fn new(
        model: &'a MixedModel,
        h: f64,
        n: usize,
        restriction: &'a RestrictionSet,
        quad: &'a QuadratureSpec,
        mode: DensityMode,
    ) -> Result<Self> {
        check_inputs(model, h, n)?;
        if !(quad.eta_panel_scale > 0.0 && quad.gamma_panel_scale > 0.0)
            || quad.nodes_per_panel == 0
        {
            return Err(Error::Domain(
                "quadrature panel scales and node counts must be positive".into(),
            ));
        }
        if !(quad.rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance {} must be positive",
                quad.rel_tol
            )));
        }
        let plan = DensityPlan::new(model, h, n, mode)?;
        let (xp, xpp) = (model.xi_p(), model.xi_pp());
        let a = xp / xpp;
        let sqrt_2xpp = (2.0 * xpp).sqrt();
        let h_tilde = h / sqrt_2xpp;
        let (eta_lo, eta_hi, x_allowed) = match quad.x_range {
            XRange::Auto => {
                let d = eta_half_width(a, h_tilde, n);
                (-(h_tilde + d), h_tilde + d, restriction.radial.clone())
            }
            XRange::Explicit { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Domain(format!(
                        "invalid explicit x-range [{lo}, {hi}]"
                    )));
                }
                let window = IntervalSet::new([(lo, hi)])?;
                (
                    (lo - h) / sqrt_2xpp,
                    (hi + h) / sqrt_2xpp,
                    restriction.radial.intersect(&window),
                )
            }
        };
        // rows with (N - 1)/2 ln(1 - gamma^2) + N C below -margin are dropped
        let c =
            h_tilde * h_tilde / a + 1.0 + (SQRT_2 * eta_hi.abs().max(eta_lo.abs())).max(1.0).ln();
        let nf = n as f64;
        let ln_s = -2.0 * (nf * c + WINDOW_MARGIN) / (nf - 1.0);
        let t_max = -0.5 * ln_s + (1.0 + (1.0 - ln_s.exp()).sqrt()).ln();
        let pure_energy = energy_variance(model) == 0.0 && !restriction.energy.is_real_line();
        let smooth_energy = energy_variance(model) > 0.0 && !restriction.energy.is_real_line();
        Ok(Self {
            model,
            h,
            n,
            restriction,
            quad,
            plan,
            a,
            h_tilde,
            sqrt_2xpp,
            eta_lo,
            eta_hi,
            x_allowed,
            pure_energy,
            smooth_energy,
            t_max,
        })
    }

    /// Allowed `eta` for the row at `gamma`.
    fn eta_allowed(&self, gamma: f64) -> IntervalSet {
        let mut xs = self.x_allowed.clone();
        if self.pure_energy {
            let (xp, xpp) = (self.model.xi_p(), self.model.xi_pp());
            let k = (xp + xpp) / xp;
            xs = xs.intersect(&self.restriction.energy.affine(k, -k * self.h * gamma));
        }
        xs.affine(1.0 / self.sqrt_2xpp, self.h * gamma / self.sqrt_2xpp)
    }

    fn row_is_unrestricted(&self) -> bool {
        self.x_allowed.is_real_line() && !self.pure_energy
    }

    /// Gamma nodes as `(gamma, ln(1 - gamma^2), ln weight)`.
    fn gamma_nodes(&self, scale: f64, gl: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64, f64)> {
        let width = self.quad.gamma_panel_scale * scale * 0.25 / (self.n as f64).sqrt();
        let mut out = Vec::new();
        match self.quad.gamma_transform {
            GammaTransform::Tanh => {
                for (lo, hi) in self.restriction.gamma.clip(-1.0, 1.0) {
                    let tl = if lo <= -1.0 {
                        -self.t_max
                    } else {
                        lo.atanh().max(-self.t_max)
                    };
                    let th = if hi >= 1.0 {
                        self.t_max
                    } else {
                        hi.atanh().min(self.t_max)
                    };
                    for (t, w) in panel_nodes(tl, th, width, gl) {
                        let ch = t.cosh();
                        // 1 - tanh^2 t = sech^2 t, exact for large |t|
                        let ln_s = -2.0 * ch.ln();
                        out.push((t.tanh(), ln_s, w.ln() + ln_s));
                    }
                }
            }
            GammaTransform::Identity => {
                let g_max = self.t_max.tanh();
                for (lo, hi) in self.restriction.gamma.clip(-g_max, g_max) {
                    for (g, w) in panel_nodes(lo, hi, width, gl) {
                        out.push((g, ((1.0 - g) * (1.0 + g)).ln(), w.ln()));
                    }
                }
            }
        }
        out
    }

    fn eta_width(&self, scale: f64) -> f64 {
        let nf = self.n as f64;
        self.quad.eta_panel_scale * scale * (0.25 / nf.sqrt()).min(2.2 / nf)
    }

    /// `ln` of the count at one panel resolution.
    fn evaluate(&self, scale: f64) -> Result<f64> {
        let gl = gauss_legendre(self.quad.nodes_per_panel);
        let nf = self.n as f64;
        let width = self.eta_width(scale);
        let panels = ((self.eta_hi - self.eta_lo) / width).ceil().max(1.0) as usize;
        let pw = (self.eta_hi - self.eta_lo) / panels as f64;
        let bounds: Vec<f64> = (0..=panels).map(|i| self.eta_lo + pw * i as f64).collect();
        // c(eta) = N eta^2 / 2 + ln rho_N(eta) on the shared grid
        let shared: Vec<(f64, f64, f64)> = panel_nodes(self.eta_lo, self.eta_hi, width, &gl)
            .into_par_iter()
            .map(|(eta, w)| Ok((eta, w.ln(), 0.5 * nf * eta * eta + self.plan.ln_rho(eta)?)))
            .collect::<Result<_>>()?;
        let k = gl.0.len();
        let gammas = self.gamma_nodes(scale, &gl);
        let rows: Vec<f64> = gammas
            .par_iter()
            .map(|&(gamma, ln_s, ln_w)| {
                let row = self.row(gamma, &shared, &bounds, k, &gl)?;
                // N G carries N/2 ln(1 - gamma^2); the kernel adds -3/2 of it
                Ok(
                    row + nf * (0.5 * ln_s + self.h_tilde * self.h_tilde * gamma * gamma / self.a)
                        - 1.5 * ln_s
                        + ln_w,
                )
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_log_sum_exp(&rows)
            + ln_prefactor(self.model, self.h, self.n)
            + self.sqrt_2xpp.ln())
    }

    fn cross(&self, eta: f64, gamma: f64) -> f64 {
        -(self.n as f64) * (eta - self.h_tilde * gamma).powi(2) / (1.0 + self.a)
    }

    fn energy_term(&self, eta: f64, gamma: f64) -> f64 {
        if !self.smooth_energy {
            return 0.0;
        }
        let x = self.sqrt_2xpp * eta - self.h * gamma;
        ln_p_overlap_energy(
            self.model,
            self.h,
            self.n,
            x,
            gamma,
            &self.restriction.energy,
        )
    }

    fn row(
        &self,
        gamma: f64,
        shared: &[(f64, f64, f64)],
        bounds: &[f64],
        k: usize,
        gl: &(Vec<f64>, Vec<f64>),
    ) -> Result<f64> {
        let nf = self.n as f64;
        let mut terms: Vec<f64> = Vec::with_capacity(shared.len());
        if self.row_is_unrestricted() {
            for &(eta, lw, c) in shared {
                terms.push(c + lw + self.cross(eta, gamma) + self.energy_term(eta, gamma));
            }
        } else {
            let allowed = self.eta_allowed(gamma);
            for (p, win) in bounds.windows(2).enumerate() {
                let pieces = allowed.clip(win[0], win[1]);
                if pieces.len() == 1 && pieces[0] == (win[0], win[1]) {
                    for &(eta, lw, c) in &shared[p * k..(p + 1) * k] {
                        terms.push(c + lw + self.cross(eta, gamma) + self.energy_term(eta, gamma));
                    }
                    continue;
                }
                for (lo, hi) in pieces {
                    for (eta, w) in panel_nodes(lo, hi, hi - lo, gl) {
                        let c = 0.5 * nf * eta * eta + self.plan.ln_rho(eta)?;
                        terms.push(
                            c + w.ln() + self.cross(eta, gamma) + self.energy_term(eta, gamma),
                        );
                    }
                }
            }
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        Ok(max + s.ln())
    }
}

/// Gauss-Legendre nodes and weights of a composite rule on `[lo, hi]` with
/// equal panels no wider than `width`.
fn panel_nodes(lo: f64, hi: f64, width: f64, gl: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    if !(hi > lo) {
        return Vec::new();
    }
    let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
    let pw = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * gl.0.len());
    for p in 0..panels {
        let a = lo + pw * p as f64;
        let c = a + 0.5 * pw;
        for (x, w) in gl.0.iter().zip(&gl.1) {
            out.push((c + 0.5 * pw * x, 0.5 * pw * w));
        }
    }
    out
}

/// Expected number of critical points with `(gamma, x, y)` in `restriction`.
pub fn expected_count(
    model: &MixedModel,
    h: f64,
    n: usize,
    restriction: &RestrictionSet,
    quad: &QuadratureSpec,
    mode: DensityMode,
) -> Result<CountResult> {
    let setup = Setup::new(model, h, n, restriction, quad, mode)?;
    let mut scale = 1.0;
    let mut prev = setup.evaluate(scale)?;
    for _ in 0..=quad.max_refinements {
        scale *= 0.5;
        let next = setup.evaluate(scale)?;
        let err = if prev == next {
            ERROR_FLOOR
        } else if prev.is_finite() && next.is_finite() {
            (next - prev).abs() + ERROR_FLOOR
        } else {
            f64::INFINITY
        };
        if next == f64::NEG_INFINITY && prev == f64::NEG_INFINITY {
            return Ok(finish(model, h, n, restriction, mode, next, ERROR_FLOOR));
        }
        if err <= quad.rel_tol {
            return Ok(finish(model, h, n, restriction, mode, next, err));
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "expected count did not reach relative tolerance {} after {} refinements",
        quad.rel_tol, quad.max_refinements
    )))
}

fn finish(
    model: &MixedModel,
    h: f64,
    n: usize,
    restriction: &RestrictionSet,
    mode: DensityMode,
    log_value: f64,
    err: f64,
) -> CountResult {
    let v = log_value.exp();
    CountResult {
        model: model.clone(),
        h,
        n,
        restriction: restriction.clone(),
        rho_mode: mode,
        log_value,
        value: (v.is_finite() && (v > 0.0 || log_value == f64::NEG_INFINITY)).then_some(v),
        error_estimate: err,
    }
}

/// Closed-form large-`N` limit of the count in the trivial regime,
/// assembled from the maximizer, the edge terms of `rho_N` and the Hessian
/// determinant of `F`. It equals 2 identically.
pub fn laplace_count_limit(model: &MixedModel, h: f64) -> Result<f64> {
    let rep = classify_and_maximize(model, h)?;
    if rep.regime != Regime::Trivial {
        return Err(Error::Regime(format!(
            "Laplace limit needs the trivial regime, got {:?}",
            rep.regime
        )));
    }
    let hess = hessian_f_at_max(model, h)?;
    let (xp, xpp) = (model.xi_p(), model.xi_pp());
    let g = rep.maximizer_gamma.expect("trivial regime has a maximizer");
    let eta = rep.maximizer_eta.expect("trivial regime has a maximizer");
    let r = eta * eta - 2.0;
    let num = 2.0 * SQRT_2 * xp.sqrt() * (1.0 - g * g).powf(-1.5);
    let den =
        xpp.sqrt() * (xp + xpp).sqrt() * r.powf(0.25) * (eta + r.sqrt()).sqrt() * hess.det().sqrt();
    Ok(num / den)
}

/// Per-`N` values and the fitted exponential rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    /// Coefficient of `1/N`.
    pub c: f64,
    /// Coefficient of `ln N / N`.
    pub d: f64,
    pub counts: Vec<CountResult>,
    /// `(1/N) ln E[count]` for each `N`.
    pub per_site: Vec<f64>,
}

/// Fits `(1/N) ln E[count] = rate + c/N + d ln N / N` by least squares.
pub fn rate_from_integral(
    model: &MixedModel,
    h: f64,
    ns: &[usize],
    quad: &QuadratureSpec,
    mode: Option<DensityMode>,
) -> Result<RateFit> {
    if ns.len() < 3 {
        return Err(Error::Domain(
            "rate fit needs at least three dimensions".into(),
        ));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "dimension list must be strictly ascending".into(),
        ));
    }
    let full = RestrictionSet::full();
    let counts: Vec<CountResult> = ns
        .iter()
        .map(|&n| {
            expected_count(
                model,
                h,
                n,
                &full,
                quad,
                mode.unwrap_or_else(|| default_rho_mode(n)),
            )
        })
        .collect::<Result<_>>()?;
    let per_site: Vec<f64> = counts.iter().map(|c| c.log_value / c.n as f64).collect();
    let design = DMatrix::from_fn(ns.len(), 3, |i, j| {
        let nf = ns[i] as f64;
        match j {
            0 => 1.0,
            1 => 1.0 / nf,
            _ => nf.ln() / nf,
        }
    });
    let rhs = DVector::from_vec(per_site.clone());
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(format!("rate fit failed: {e}")))?;
    Ok(RateFit {
        rate: coef[0],
        c: coef[1],
        d: coef[2],
        counts,
        per_site,
    })
}
