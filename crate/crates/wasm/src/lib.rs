//! Browser bindings. Every export takes a JSON document and returns a JSON
//! string; curves come back as `log10` values with `null` for zero.

use fixlab::analysis;
use fixlab::bounds::{self, LowerVariant, Side};
use fixlab::experiment::{self, ExperimentConfig, RunSpec};
use fixlab::{iterations, LabError, Result, Scheme};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const LOG10_E: f64 = std::f64::consts::LOG10_E;

fn log10_of_ln(ln: &[f64]) -> Vec<Option<f64>> {
    ln.iter().map(|v| v.is_finite().then_some(v * LOG10_E)).collect()
}

#[derive(Serialize)]
struct Curve {
    label: String,
    log10: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct BoundCurves {
    scheme: Scheme,
    curves: Vec<Curve>,
    notes: Vec<String>,
}

/// Bound products and, when the run has roles and `x0`, the observed
/// `r_{n+1}`, all indexed by `n = 0..horizon`.
pub fn bound_curves_json(run: &str) -> Result<String> {
    let spec: RunSpec = serde_json::from_str(run)?;
    if spec.horizon == 0 {
        return Err(LabError::InvalidConfig(vec!["horizon must be at least 1".into()]));
    }
    let n = spec.horizon - 1;
    let (p, a, b) = (&spec.params, &spec.schedule_a, &spec.schedule_b);
    let mut requests = vec![("upper", Side::Upper, LowerVariant::Paper)];
    if spec.scheme == Scheme::IG {
        requests.push(("lower (paper)", Side::Lower, LowerVariant::Paper));
        requests.push(("lower (safe)", Side::Lower, LowerVariant::Safe));
    } else {
        requests.push(("lower", Side::Lower, LowerVariant::Paper));
    }
    let mut out = BoundCurves { scheme: spec.scheme, curves: vec![], notes: vec![] };
    for (label, side, variant) in requests {
        match bounds::bound_series(spec.scheme, side, variant, p, a, b, n) {
            Ok(s) => out.curves.push(Curve { label: label.into(), log10: log10_of_ln(&s.ln_cumulative) }),
            Err(e @ LabError::Precondition { .. }) => out.notes.push(format!("{label}: {e}")),
            Err(e) => return Err(e),
        }
    }
    if let Some(config) = spec.scheme_config()? {
        let traj = iterations::run(&config)?;
        out.curves.push(Curve { label: "observed r".into(), log10: log10_of_ln(&traj.ln_ratios()[1..]) });
    }
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct Comparison {
    ratio: Vec<Option<f64>>,
    envelope: Vec<Option<f64>>,
    verdict: serde_json::Value,
}

/// Ratio series `R_n` of two runs, the bound envelope and the theorem verdict.
pub fn compare_json(pair: &str) -> Result<String> {
    let [sa, sb]: [RunSpec; 2] = serde_json::from_str(pair)?;
    let need = |s: &RunSpec| {
        s.scheme_config()?.ok_or_else(|| LabError::InvalidConfig(vec!["both runs need roles and x0".into()]))
    };
    let (ca, cb) = (need(&sa)?, need(&sb)?);
    let (ta, tb) = (iterations::run(&ca)?, iterations::run(&cb)?);
    let shared =
        (ca.schedule_a == cb.schedule_a && ca.schedule_b == cb.schedule_b).then_some((&ca.schedule_a, &ca.schedule_b));
    let report = analysis::compare(&ta, &tb, &experiment::merged_params(&sa, &sb), shared, 0.0)?;
    let out = Comparison {
        ratio: log10_of_ln(&report.ratio.ln_values),
        envelope: log10_of_ln(&report.ln_envelope),
        verdict: report.verdict_json(),
    };
    Ok(serde_json::to_string(&out)?)
}

/// Convergence verdicts for the IG or G bound products of one run.
pub fn classify_json(run: &str) -> Result<String> {
    let spec: RunSpec = serde_json::from_str(run)?;
    let doc = serde_json::json!({ "run": spec });
    let out = experiment::classify(&ExperimentConfig::from_json(&doc.to_string())?)?;
    Ok(out.json.unwrap_or_default())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn bound_curves(run: &str) -> std::result::Result<String, JsError> {
    js(bound_curves_json(run))
}

#[wasm_bindgen]
pub fn compare(pair: &str) -> std::result::Result<String, JsError> {
    js(compare_json(pair))
}

#[wasm_bindgen]
pub fn classify(run: &str) -> std::result::Result<String, JsError> {
    js(classify_json(run))
}
