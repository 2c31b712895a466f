//! Dispatch of a [`RunConfig`] to the library operations.

use crate::config::{parse_path, Command, RunConfig};
use crate::report::{num, Record, Report};
use crate::suites;
use anyhow::{anyhow, Result};
use btq_core::fit::{fit_loglog, PowerFit};
use btq_core::fixed_point::{
    gaussian_fixed_point_oracle, geometric_identity, kernel_fixed_point_oracle, leading_coeff_isolated, splitting_residual,
    FixedPointDatum,
};
use btq_core::linalg::{c, RMat};
use btq_core::quadrature::QuadratureSpec;
use btq_core::symplectic::{CompatibleStructure, StructurePath};
use btq_core::torus::{approx_theorem_check, trace_study, AffineMap, GridRule};
use btq_core::transport::{barmut_check, mut_identity_residual, transport_factors, MutVariant, PathDiscretization};
use btq_core::Complex64;
use serde_json::{json, Map, Value};
use std::time::Instant;

fn cnum(z: Complex64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

pub fn fit_json(f: &PowerFit) -> Value {
    json!({
        "slope": num(f.slope),
        "intercept": num(f.intercept),
        "rms": num(f.rms),
        "slope_stderr": num(f.slope_stderr),
        "slope_ci95": [num(f.slope - 1.96 * f.slope_stderr), num(f.slope + 1.96 * f.slope_stderr)],
    })
}

fn core<T>(suite: &str, name: &str, r: btq_core::Result<T>, records: &mut Vec<Record>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            records.push(Record::error(suite, name, 0.0, &e.to_string()));
            None
        }
    }
}

struct Out {
    records: Vec<Record>,
    extra: Map<String, Value>,
    table: Option<(Vec<String>, Vec<Vec<String>>)>,
    suite_seconds: Vec<(String, f64)>,
}

impl Out {
    fn new() -> Self {
        Self { records: Vec::new(), extra: Map::new(), table: None, suite_seconds: Vec::new() }
    }
}

/// Run a configuration. `Err` means a usage problem (bad descriptor or
/// missing argument); numerical failures are failed records.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let disc = match cfg.steps {
        Some(s) => PathDiscretization::new(s).map_err(|e| anyhow!("--steps: {e}"))?,
        None => PathDiscretization::default(),
    };
    let rule = cfg.grid.map(GridRule::Fixed).unwrap_or_default();
    let mut out = match cfg.command {
        Command::Verify => {
            let mut o = Out::new();
            (o.records, o.suite_seconds) = suites::timed_all(cfg.seed, &disc);
            o
        }
        Command::Transport => transport(cfg, &disc)?,
        Command::Coeff => coeff(cfg, &disc)?,
        Command::Oracle => oracle(cfg, &disc)?,
        Command::Trace => trace(cfg, rule, &disc)?,
        Command::Approx => approx(cfg, rule, &disc)?,
    };
    if let Some(tol) = cfg.tol {
        for r in &mut out.records {
            r.override_tol(tol);
        }
    }
    Ok(Report {
        command: cfg.command.name().to_string(),
        config: cfg.echo(),
        records: out.records,
        extra: out.extra,
        table: out.table,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        suite_seconds: out.suite_seconds,
    })
}

fn transport(cfg: &RunConfig, disc: &PathDiscretization) -> Result<Out> {
    let path = parse_path(cfg.path.as_deref().unwrap_or("scaling:1.0"))?;
    let t = cfg.t;
    let mut o = Out::new();
    let r = &mut o.records;
    if let Some(f) = core("transport", "factors", transport_factors(&path, t, disc), r) {
        o.extra.insert("mu".into(), cnum(f.mu));
        o.extra.insert("tau_k".into(), cnum(f.tau_k));
        o.extra.insert("det_pi_bar".into(), cnum(f.det_pi_bar));
        o.extra.insert("g0".into(), cnum(f.g0));
        r.push(Record::check("transport", "canonical_line", f.canonical_residual(), 1e-7));
        r.push(Record::check("transport", "g0", f.g0_residual(), 1e-7));
    }
    let spec = QuadratureSpec::for_dim(path.n());
    for (name, v) in [("mut", MutVariant::Mut), ("tilmut", MutVariant::Tilmut)] {
        if let Some(x) = core("transport", name, mut_identity_residual(&path, t, disc, v, &spec), r) {
            r.push(Record::check("transport", name, x, 1e-5));
        }
    }
    if let Some(x) = core("transport", "barmut", barmut_check(&path, t, disc), r) {
        r.push(Record::check("transport", "barmut", x, 1e-7));
    }
    Ok(o)
}

fn datum(cfg: &RunConfig) -> Result<btq_core::Result<FixedPointDatum>> {
    let m = cfg.map.ok_or_else(|| anyhow!("--map is required"))?;
    let dphi = RMat::from_row_slice(2, 2, &m);
    Ok(CompatibleStructure::from_modulus(cfg.tau).and_then(|j0| FixedPointDatum::new(dphi, c(1.0, 0.0), j0)))
}

fn coeff(cfg: &RunConfig, disc: &PathDiscretization) -> Result<Out> {
    let mut o = Out::new();
    let r = &mut o.records;
    let Some(d) = core("coeff", "datum", datum(cfg)?, r) else { return Ok(o) };
    if let Some(a) = core("coeff", "a0", leading_coeff_isolated(&d, disc), r) {
        o.extra.insert("a0".into(), cnum(a.value));
        o.extra.insert("sign_class".into(), json!(a.sign_class));
        o.extra.insert(
            "branch".into(),
            json!({ "samples": a.branch.samples.len(), "max_arg_increment": num(a.branch.max_arg_increment()) }),
        );
    }
    if let Some(g) = core("coeff", "geometric_identity", geometric_identity(&d, disc), r) {
        r.push(Record::check("coeff", "geometric_identity", g.residual(), 1e-6).with("uninverted", num(g.uninverted_residual())));
    }
    if let Some(s) = core("coeff", "splitting_operator", splitting_residual(&d), r) {
        r.push(Record::check("coeff", "splitting_operator", s, 1e-10));
    }
    Ok(o)
}

fn oracle(cfg: &RunConfig, disc: &PathDiscretization) -> Result<Out> {
    let mut o = Out::new();
    let r = &mut o.records;
    let Some(d) = core("oracle", "datum", datum(cfg)?, r) else { return Ok(o) };
    let spec = QuadratureSpec::for_dim(d.n());
    let Some(a) = core("oracle", "a0", leading_coeff_isolated(&d, disc), r) else { return Ok(o) };
    o.extra.insert("a0".into(), cnum(a.value));
    if let Some(g) = core("oracle", "gaussian", gaussian_fixed_point_oracle(&d, disc, &spec), r) {
        o.extra.insert("gaussian_oracle".into(), cnum(g));
        r.push(Record::check("oracle", "gaussian", (g - a.value).norm() / a.value.norm(), 1e-6));
    }
    if let Some(k) = core("oracle", "kernel", kernel_fixed_point_oracle(&d, disc, &spec), r) {
        o.extra.insert("kernel_oracle".into(), cnum(k));
        r.push(Record::check("oracle", "kernel", (k - a.value).norm() / a.value.norm(), 1e-6));
    }
    Ok(o)
}

fn trace(cfg: &RunConfig, rule: GridRule, disc: &PathDiscretization) -> Result<Out> {
    let map = AffineMap::linear(cfg.integer_map()?).map_err(|e| anyhow!("--map: {e}"))?;
    let mut o = Out::new();
    let r = &mut o.records;
    let Some(s) = core("trace", "study", trace_study(&map, cfg.tau, &cfg.p_list, rule, disc), r) else { return Ok(o) };
    let header = ["p", "re_trace", "im_trace", "re_pred", "im_pred", "abs_residual"];
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for pt in &s.points {
        r.push(Record::check("trace", &format!("unitarity[p={}]", pt.p), pt.unitarity_defect, 1e-6));
        rows.push(vec![
            pt.p.to_string(),
            pt.trace.re.to_string(),
            pt.trace.im.to_string(),
            pt.prediction.re.to_string(),
            pt.prediction.im.to_string(),
            pt.residual.norm().to_string(),
        ]);
        points.push(json!({ "p": pt.p, "trace": cnum(pt.trace), "prediction": cnum(pt.prediction), "abs_residual": num(pt.residual.norm()) }));
    }
    o.extra.insert("points".into(), Value::Array(points));
    o.extra.insert("fit".into(), s.fit.as_ref().map(fit_json).unwrap_or(Value::Null));
    o.table = Some((header.iter().map(|h| h.to_string()).collect(), rows));
    Ok(o)
}

fn approx(cfg: &RunConfig, rule: GridRule, disc: &PathDiscretization) -> Result<Out> {
    let path: StructurePath = parse_path(cfg.path.as_deref().unwrap_or("segment:i,2i"))?;
    let mut o = Out::new();
    let r = &mut o.records;
    let Some(mu1) = core("approx", "mu", btq_core::transport::mu(&path, 1.0, disc), r) else { return Ok(o) };
    o.extra.insert("mu1".into(), cnum(mu1));
    let Some(dev) = core("approx", "deviation", approx_theorem_check(&cfg.p_list, &path, rule, disc, None), r) else {
        return Ok(o);
    };
    let Some(ctl) = core("approx", "control", approx_theorem_check(&cfg.p_list, &path, rule, disc, Some(c(1.0, 0.0))), r)
    else {
        return Ok(o);
    };
    let ps: Vec<f64> = dev.iter().map(|d| d.p as f64).collect();
    let fit = |ys: Vec<f64>, name: &str, lo: f64, hi: f64, r: &mut Vec<Record>| match fit_loglog(&ps, &ys) {
        Ok(f) => {
            r.push(Record::within("approx", name, f.slope, lo, hi).with("fit", fit_json(&f)));
        }
        Err(e) => r.push(Record::error("approx", name, 0.0, &e.to_string())),
    };
    fit(dev.iter().map(|d| d.deviation).collect(), "slope", -1.3, -0.8, r);
    if (mu1 - c(1.0, 0.0)).norm() > 1e-12 {
        fit(ctl.iter().map(|d| d.deviation).collect(), "control_slope", -0.3, 0.3, r);
    }
    let rows = dev.iter().zip(&ctl).map(|(d, k)| vec![d.p.to_string(), d.deviation.to_string(), k.deviation.to_string()]).collect();
    o.table = Some((vec!["p".into(), "deviation".into(), "control_deviation".into()], rows));
    Ok(o)
}
