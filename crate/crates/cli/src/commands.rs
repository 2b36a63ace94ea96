use landscape_core::acceptance::{run_criterion, ACCEPTANCE_SEED};
use landscape_core::goe::{ln_shifted_det_mean, mc_shifted_det, rho};
use landscape_core::kacrice::{expected_count, rate_from_integral, QuadratureSpec, RestrictionSet};
use landscape_core::model::{
    annealed_rate, classify_and_maximize, threshold_hc, trivial_predictions, MixedModel, Regime,
};
use landscape_core::simulate::{
    covariance_selftest, landscape_report, run_census, FinderOptions, LandscapeReport,
};
use serde_json::{json, Map, Value};

use crate::args::{
    Command, FieldArgs, GoeDetArgs, GoeRhoArgs, HcArgs, KacriceArgs, RateArgs, RhoMode,
    SimulateArgs, SimulateMode, VerifyArgs,
};
use crate::error::CliError;
use crate::output::{format_sig, Cell, Line, Report};

pub fn dispatch(cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::Hc(a) => hc(a),
        Command::Rate(a) => rate(a),
        Command::Predict(a) => predict(a),
        Command::Maximize(a) => maximize(a),
        Command::Kacrice(a) => kacrice(a),
        Command::GoeRho(a) => goe_rho(a),
        Command::GoeDet(a) => goe_det(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    }
}

fn model_cell(m: &MixedModel) -> Cell {
    m.to_string().into()
}

fn regime_cell(r: Regime) -> Cell {
    format!("{r:?}").into()
}

fn rho_mode_cell(mode: RhoMode) -> Cell {
    match mode {
        RhoMode::Auto => "auto".into(),
        RhoMode::Fixed(m) => m.to_string().into(),
    }
}

fn hc(a: &HcArgs) -> Result<Report, CliError> {
    let mut r = Report::new("hc", &["model", "hc"]);
    r.row(vec![model_cell(&a.xi), threshold_hc(&a.xi).into()]);
    r.scalar = true;
    Ok(r)
}

fn rate(a: &RateArgs) -> Result<Report, CliError> {
    let hs = match a.h_grid {
        Some(g) => g.points(),
        None => vec![a.h],
    };
    if !a.fit_n.is_empty() && a.fit_n.len() < 3 {
        return Err(CliError::Usage(
            "--fit-n needs at least three dimensions".into(),
        ));
    }
    let fixed_mode = match a.rho_mode {
        RhoMode::Auto => None,
        RhoMode::Fixed(m) => Some(m),
    };
    let fit_list = (!a.fit_n.is_empty()).then(|| {
        a.fit_n
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    });
    let mut r = Report::new(
        "rate",
        &[
            "model",
            "h",
            "regime",
            "rate",
            "fitted_rate",
            "fit_n",
            "rho_mode",
        ],
    );
    for h in hs {
        let regime = Regime::classify(&a.xi, h)?;
        let fitted = match &fit_list {
            Some(_) => Some(
                rate_from_integral(&a.xi, h, &a.fit_n, &QuadratureSpec::default(), fixed_mode)?
                    .rate,
            ),
            None => None,
        };
        r.row(vec![
            model_cell(&a.xi),
            h.into(),
            regime_cell(regime),
            annealed_rate(&a.xi, h)?.into(),
            fitted.into(),
            fit_list.clone().map_or(Cell::Null, Cell::from),
            if fit_list.is_some() {
                rho_mode_cell(a.rho_mode)
            } else {
                Cell::Null
            },
        ]);
    }
    Ok(r)
}

fn predict(a: &FieldArgs) -> Result<Report, CliError> {
    let p = trivial_predictions(&a.xi, a.h)?;
    let mut r = Report::new(
        "predict",
        &[
            "model",
            "h",
            "regime",
            "gs_energy",
            "overlap",
            "radial",
            "radial_noh",
            "lambda_max",
        ],
    );
    r.row(vec![
        model_cell(&a.xi),
        a.h.into(),
        regime_cell(Regime::classify(&a.xi, a.h)?),
        p.gs_energy.into(),
        p.overlap.into(),
        p.radial_h.into(),
        p.radial_noh.into(),
        p.lambda_max.into(),
    ]);
    Ok(r)
}

fn maximize(a: &FieldArgs) -> Result<Report, CliError> {
    let m = classify_and_maximize(&a.xi, a.h)?;
    let mut r = Report::new(
        "maximize",
        &[
            "model",
            "h",
            "regime",
            "condition",
            "maximizer_x",
            "maximizer_gamma",
            "maximizer_eta",
            "f_max",
            "unique",
            "annealed_rate",
            "hc",
        ],
    );
    r.row(vec![
        model_cell(&a.xi),
        a.h.into(),
        regime_cell(m.regime),
        m.regime.condition().into(),
        m.maximizer_x.into(),
        m.maximizer_gamma.into(),
        m.maximizer_eta.into(),
        m.f_max.into(),
        m.unique.into(),
        annealed_rate(&a.xi, a.h)?.into(),
        threshold_hc(&a.xi).into(),
    ]);
    Ok(r)
}

fn kacrice(a: &KacriceArgs) -> Result<Report, CliError> {
    if !(a.rel_tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--rel-tol must be positive, got {}",
            a.rel_tol
        )));
    }
    if !(1..=64).contains(&a.nodes) {
        return Err(CliError::Usage(format!(
            "--nodes must be in 1..=64, got {}",
            a.nodes
        )));
    }
    let restriction = RestrictionSet::new(a.gamma.clone(), a.radial.clone(), a.energy.clone())?;
    let quad = QuadratureSpec {
        rel_tol: a.rel_tol,
        nodes_per_panel: a.nodes,
        max_refinements: a.max_refinements,
        ..QuadratureSpec::default()
    };
    let c = expected_count(
        &a.xi,
        a.h,
        a.n,
        &restriction,
        &quad,
        a.rho_mode.resolve(a.n),
    )?;
    let mut r = Report::new(
        "kacrice",
        &[
            "model",
            "h",
            "N",
            "restriction",
            "rho_mode",
            "log_value",
            "value",
            "error_estimate",
        ],
    );
    r.row(vec![
        model_cell(&c.model),
        c.h.into(),
        c.n.into(),
        c.restriction.to_string().into(),
        c.rho_mode.to_string().into(),
        c.log_value.into(),
        c.value.into(),
        c.error_estimate.into(),
    ]);
    Ok(r)
}

fn goe_rho(a: &GoeRhoArgs) -> Result<Report, CliError> {
    let xs = match a.x_grid {
        Some(g) => g.points(),
        None => vec![a.x],
    };
    let mode = a.rho_mode.resolve(a.n);
    let mut r = Report::new("goe-rho", &["N", "x", "rho_mode", "rho", "ln_rho"]);
    for x in xs {
        let v = rho(a.n, x, mode)?;
        r.row(vec![
            a.n.into(),
            x.into(),
            mode.to_string().into(),
            v.to_f64().into(),
            v.ln().into(),
        ]);
    }
    Ok(r)
}

fn goe_det(a: &GoeDetArgs) -> Result<Report, CliError> {
    let ln_exact = ln_shifted_det_mean(a.n, a.x)?;
    let (mc_mean, mc_se, seed) = if a.samples > 0 {
        let mc = mc_shifted_det(a.n, a.x, a.samples, a.seed)?;
        (Cell::Num(mc.mean), Cell::Num(mc.se), Cell::Int(a.seed))
    } else {
        (Cell::Null, Cell::Null, Cell::Null)
    };
    let mut r = Report::new(
        "goe-det",
        &[
            "N", "x", "exact", "ln_exact", "mc_mean", "mc_se", "samples", "seed",
        ],
    );
    r.row(vec![
        a.n.into(),
        a.x.into(),
        ln_exact.exp().into(),
        ln_exact.into(),
        mc_mean,
        mc_se,
        a.samples.into(),
        seed,
    ]);
    Ok(r)
}

fn simulate(a: &SimulateArgs) -> Result<Report, CliError> {
    match a.mode {
        SimulateMode::Census => census(a),
        SimulateMode::Covariance => covariance(a),
    }
}

fn census(a: &SimulateArgs) -> Result<Report, CliError> {
    let opts = FinderOptions {
        starts: a.starts,
        tol: a.tol,
        dedup_cos: a.dedup_cos,
        max_iter: a.max_iter,
    };
    let samples = run_census(&a.xi, a.h, a.n, a.samples, a.seed, &opts)?;
    let report = landscape_report(samples, &a.xi, a.h, a.n)?;

    let mut r = Report::new(
        "simulate",
        &[
            "sigma_hash",
            "energy",
            "overlap",
            "radial",
            "index",
            "lambda_max",
            "grad_norm",
        ],
    );
    r.preamble.push(format!(
        "model={} h={} N={} seed={} samples={} starts={} tol={} dedup_cos={} max_iter={}",
        a.xi,
        format_sig(a.h, 9),
        a.n,
        a.seed,
        a.samples,
        a.starts,
        format_sig(a.tol, 9),
        format_sig(a.dedup_cos, 9),
        a.max_iter
    ));
    for s in &report.samples {
        r.lines.push(Line::Comment(format!(
            "sample={} points={} saturated={} failed_starts={}",
            s.sample,
            s.points.len(),
            s.saturated,
            s.failures.len()
        )));
        for p in &s.points {
            r.row(vec![
                p.sigma_hash().into(),
                p.energy.into(),
                p.overlap.into(),
                p.radial.into(),
                p.index.into(),
                p.lambda_max.into(),
                p.grad_norm.into(),
            ]);
        }
    }
    r.lines
        .extend(summary_lines(&report).into_iter().map(Line::Comment));

    let mut rec = Map::new();
    rec.insert("seed".into(), json!(a.seed));
    rec.insert("starts".into(), json!(a.starts));
    rec.insert("tol".into(), json!(a.tol));
    rec.insert("dedup_cos".into(), json!(a.dedup_cos));
    rec.insert("max_iter".into(), json!(a.max_iter));
    if let Value::Object(fields) = serde_json::to_value(&report)? {
        rec.extend(fields);
    }
    r.json_records = Some(vec![Value::Object(rec)]);
    Ok(r)
}

fn summary_lines(rep: &LandscapeReport) -> Vec<String> {
    let dist: Vec<String> = rep
        .count_distribution
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    let mut out = vec![
        format!("regime={:?}", rep.regime),
        format!("count_distribution={}", dist.join(" ")),
        format!(
            "two_extremal_fraction={} saturated_samples={} floor_violations={}",
            format_sig(rep.two_extremal_fraction, 9),
            rep.saturated_samples,
            rep.floor_violations
        ),
    ];
    if let Some(a) = &rep.argmax {
        let pred = rep.predictions;
        let line = |name: &str, m: &landscape_core::simulate::MeanSd, p: Option<f64>| {
            let mut s = format!(
                "argmax {name} mean={} sd={}",
                format_sig(m.mean, 9),
                format_sig(m.sd, 9)
            );
            if let Some(p) = p {
                s.push_str(&format!(" prediction={}", format_sig(p, 9)));
            }
            s
        };
        out.push(line("energy", &a.energy, pred.map(|p| p.gs_energy)));
        out.push(line("overlap", &a.overlap, pred.map(|p| p.overlap)));
        out.push(line("radial_h", &a.radial_h, pred.map(|p| p.radial_h)));
        out.push(line(
            "lambda_max",
            &a.lambda_max,
            pred.map(|p| p.lambda_max),
        ));
    }
    if let Some(rate) = rep.annealed_rate {
        out.push(format!("annealed_rate={}", format_sig(rate, 9)));
    }
    out
}

fn covariance(a: &SimulateArgs) -> Result<Report, CliError> {
    let rows = covariance_selftest(&a.xi, a.n, a.samples, a.seed)?;
    let mut r = Report::new(
        "simulate",
        &[
            "model",
            "N",
            "samples",
            "seed",
            "quantity",
            "empirical",
            "exact",
            "se",
            "z",
        ],
    );
    for row in rows {
        r.row(vec![
            model_cell(&a.xi),
            a.n.into(),
            a.samples.into(),
            a.seed.into(),
            row.quantity.clone().into(),
            row.empirical.into(),
            row.exact.into(),
            row.se.into(),
            row.z().into(),
        ]);
    }
    Ok(r)
}

fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    if let Some(bad) = a.suites.iter().find(|&&s| !(1..=10).contains(&s)) {
        return Err(CliError::Usage(format!(
            "no acceptance criterion {bad}; valid ids are 1..=10"
        )));
    }
    let mut r = Report::new(
        "verify",
        &[
            "criterion",
            "title",
            "seed",
            "check",
            "measured",
            "target",
            "tolerance",
            "passed",
            "known_gap",
        ],
    );
    let mut text = format!("acceptance seed {ACCEPTANCE_SEED}\n");
    let mut records = Vec::new();
    let mut failing = Vec::new();
    for &id in &a.suites {
        let rep = run_criterion(id)?;
        text.push_str(&rep.to_string());
        if !rep.acceptable() {
            failing.push(id.to_string());
        }
        for c in &rep.checks {
            r.row(vec![
                (id as u64).into(),
                rep.title.clone().into(),
                ACCEPTANCE_SEED.into(),
                c.name.clone().into(),
                c.measured.into(),
                c.target.into(),
                c.tolerance.into(),
                c.passed.into(),
                c.known_gap.into(),
            ]);
        }
        let mut rec = Map::new();
        rec.insert("seed".into(), json!(ACCEPTANCE_SEED));
        if let Value::Object(fields) = serde_json::to_value(&rep)? {
            rec.extend(fields);
        }
        records.push(Value::Object(rec));
    }
    let verdict = if failing.is_empty() {
        "all criteria passed".to_string()
    } else {
        format!("failing criteria: {}", failing.join(", "))
    };
    text.push_str(&verdict);
    text.push('\n');
    r.text = Some(text);
    r.json_records = Some(records);
    if !failing.is_empty() {
        r.failure = Some(verdict);
    }
    Ok(r)
}
