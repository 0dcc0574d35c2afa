//! JSON experiment documents and the five operations driven from them:
//! simulate, bounds, compare, classify and probe.
//!
//! Each operation returns its file contents as strings together with a short
//! summary, so the command-line front end only handles I/O and exit codes.

use serde::{Deserialize, Serialize};

use crate::analysis::{self, Answer, ConvergenceVerdict};
use crate::bounds::{self, BoundSeries, LowerVariant, ProbeReport, SandwichMark, Side};
use crate::error::{LabError, Result};
use crate::iterations::{self, Roles, Scheme, SchemeConfig, SchemeParams};
use crate::mappings::{self, DomainSpec};
use crate::schedules::ScheduleSpec;
use crate::table::{self, Csv};

/// Named role assignments that are resolved against the run's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    WitnessUpper,
    WitnessLower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RolesSpec {
    Witness(Witness),
    Explicit(Box<Roles>),
}

/// A run description. `roles` and `x0` may be left out when only bound
/// series or verdicts are wanted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub scheme: Scheme,
    #[serde(default)]
    pub roles: Option<RolesSpec>,
    #[serde(default)]
    pub params: SchemeParams,
    #[serde(default)]
    pub schedule_a: ScheduleSpec,
    #[serde(default)]
    pub schedule_b: ScheduleSpec,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub horizon: usize,
}

impl RunSpec {
    /// The full scheme config, or `None` without roles and start point.
    pub fn scheme_config(&self) -> Result<Option<SchemeConfig>> {
        let (Some(roles), Some(x0)) = (&self.roles, &self.x0) else {
            return Ok(None);
        };
        let roles = match roles {
            RolesSpec::Explicit(r) => (**r).clone(),
            RolesSpec::Witness(w) => {
                let domain = DomainSpec::unit_half(x0.len().max(1));
                match w {
                    Witness::WitnessUpper => mappings::witness_upper(self.scheme, &self.params, &domain)?,
                    Witness::WitnessLower => mappings::witness_lower(self.scheme, &self.params, &domain)?,
                }
            }
        };
        let config = SchemeConfig {
            scheme: self.scheme,
            roles,
            params: self.params,
            schedule_a: self.schedule_a.clone(),
            schedule_b: self.schedule_b.clone(),
            x0: x0.clone(),
            horizon: self.horizon,
        };
        config.validate()?;
        Ok(Some(config))
    }

    fn require_config(&self) -> Result<SchemeConfig> {
        self.scheme_config()?
            .ok_or_else(|| LabError::InvalidConfig(vec!["this operation needs both roles and x0".into()]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRequest {
    pub side: Side,
    #[serde(default)]
    pub variant: Option<LowerVariant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSettings {
    pub samples: usize,
    pub seed: u64,
    pub grid: Option<usize>,
    pub variant: LowerVariant,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings { samples: 1000, seed: 0, grid: None, variant: LowerVariant::Paper }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<String>,
    pub json: Option<String>,
}

/// Top-level experiment document: either a single `run` or a `compare` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub run: Option<RunSpec>,
    #[serde(default)]
    pub compare: Option<[RunSpec; 2]>,
    /// Explicit bound requests. When absent, every side applicable to the
    /// scheme is computed and precondition failures are skipped rather than
    /// reported as errors.
    #[serde(default)]
    pub bounds: Option<Vec<BoundRequest>>,
    #[serde(default)]
    pub probe: ProbeSettings,
    /// Errors at or below `zero_tol · e_0` count as reaching the fixed point.
    #[serde(default)]
    pub zero_tol: f64,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        match (&config.run, &config.compare) {
            (Some(_), None) | (None, Some(_)) => Ok(config),
            _ => Err(LabError::InvalidConfig(vec!["give exactly one of `run` or `compare`".into()])),
        }
    }

    fn single(&self) -> Result<&RunSpec> {
        self.run.as_ref().ok_or_else(|| LabError::InvalidConfig(vec!["this operation needs a `run` entry".into()]))
    }
}

/// What an operation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub summary: String,
    /// A probe found a run undershooting the lower bound.
    pub violation: bool,
}

/// Pretty JSON with object keys in sorted order.
pub fn stable_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("json value prints");
    s.push('\n');
    s
}

pub fn simulate(config: &ExperimentConfig) -> Result<Output> {
    let run = config.single()?.require_config()?;
    let traj = iterations::run(&run)?;
    let ln_r = *traj.ln_ratios().last().expect("r_0 always present");
    let r = *traj.ratios().last().expect("r_0 always present");
    Ok(Output {
        csv: Some(traj.to_csv()),
        json: None,
        summary: format!("{} N={}: r_N = {r:e}, ln r_N = {ln_r}", run.scheme, run.horizon),
        violation: false,
    })
}

fn requests_for(scheme: Scheme, explicit: &Option<Vec<BoundRequest>>) -> (Vec<BoundRequest>, bool) {
    match explicit {
        Some(list) => (list.clone(), true),
        None => {
            let mut v = vec![BoundRequest { side: Side::Upper, variant: None }];
            if scheme == Scheme::IG {
                v.push(BoundRequest { side: Side::Lower, variant: Some(LowerVariant::Paper) });
                v.push(BoundRequest { side: Side::Lower, variant: Some(LowerVariant::Safe) });
            } else {
                v.push(BoundRequest { side: Side::Lower, variant: None });
            }
            (v, false)
        }
    }
}

#[derive(Default)]
struct BoundColumns {
    upper: Option<BoundSeries>,
    lower_paper: Option<BoundSeries>,
    lower_safe: Option<BoundSeries>,
    notes: Vec<String>,
}

fn collect_bounds(spec: &RunSpec, explicit: &Option<Vec<BoundRequest>>, n: usize) -> Result<BoundColumns> {
    let (requests, strict) = requests_for(spec.scheme, explicit);
    let mut cols = BoundColumns::default();
    for req in requests {
        let variant = req.variant.unwrap_or_default();
        match bounds::bound_series(spec.scheme, req.side, variant, &spec.params, &spec.schedule_a, &spec.schedule_b, n)
        {
            Ok(s) => match (req.side, variant) {
                (Side::Upper, _) => cols.upper = Some(s),
                (Side::Lower, LowerVariant::Safe) if spec.scheme == Scheme::IG => cols.lower_safe = Some(s),
                (Side::Lower, _) => cols.lower_paper = Some(s),
            },
            Err(e) if !strict && e.kind() == crate::error::ErrorKind::Precondition => {
                cols.notes.push(format!("skipped {} bound ({variant}): {e}", req.side));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(cols)
}

fn bound_cells(s: &Option<BoundSeries>, n: usize) -> (String, String) {
    match s {
        Some(s) => (table::num(s.value(n)), s.valid[n].to_string()),
        None => (String::new(), String::new()),
    }
}

/// Per-index bound table with the observed ratio and sandwich marks.
pub fn bounds_table(config: &ExperimentConfig, grid: Option<usize>) -> Result<Output> {
    let spec = config.single()?;
    if spec.horizon == 0 {
        return Err(LabError::InvalidConfig(vec!["bounds need horizon >= 1".into()]));
    }
    let n = spec.horizon - 1;
    let cols = collect_bounds(spec, &config.bounds, n)?;
    let ln_r = match spec.scheme_config()? {
        Some(cfg) => Some(iterations::run(&cfg)?.ln_ratios()),
        None => None,
    };
    let grid = grid.or(config.probe.grid);
    let oracle = match grid {
        Some(g) => Some((
            bounds::oracle_extreme_1d(
                spec.scheme,
                &spec.params,
                &spec.schedule_a,
                &spec.schedule_b,
                n,
                Side::Upper,
                g,
            )?,
            bounds::oracle_extreme_1d(
                spec.scheme,
                &spec.params,
                &spec.schedule_a,
                &spec.schedule_b,
                n,
                Side::Lower,
                g,
            )?,
        )),
        None => None,
    };
    let marks = ln_r.as_ref().map(|ln_r| {
        let main = bounds::sandwich(ln_r, cols.upper.as_ref(), cols.lower_paper.as_ref());
        let safe = bounds::sandwich(ln_r, None, cols.lower_safe.as_ref());
        main.into_iter()
            .zip(safe.into_iter().chain(std::iter::repeat(SandwichMark::Inside)))
            .map(|(m, s)| if !m.is_violation() && s.is_violation() { s } else { m })
            .collect::<Vec<_>>()
    });

    let mut header = vec![
        "n",
        "r_next",
        "upper",
        "lower_paper",
        "lower_safe",
        "upper_valid",
        "lower_paper_valid",
        "lower_safe_valid",
    ];
    if oracle.is_some() {
        header.extend(["oracle_upper", "oracle_lower"]);
    }
    header.push("sandwich");
    let mut csv = Csv::new(&header);
    let mut violations = 0;
    for k in 0..=n {
        let (u, uv) = bound_cells(&cols.upper, k);
        let (lp, lpv) = bound_cells(&cols.lower_paper, k);
        let (ls, lsv) = bound_cells(&cols.lower_safe, k);
        let r = ln_r.as_ref().map_or(String::new(), |l| table::num(l[k + 1].exp()));
        let mut row = vec![k.to_string(), r, u, lp, ls, uv, lpv, lsv];
        if let Some((ou, ol)) = &oracle {
            row.push(table::num(ou.ln_values[k].exp()));
            row.push(table::num(ol.ln_values[k].exp()));
        }
        let mark = marks.as_ref().map(|m| m[k]);
        if mark.is_some_and(SandwichMark::is_violation) {
            violations += 1;
        }
        row.push(mark.map_or(String::new(), |m| m.to_string()));
        csv.row(&row);
    }
    let mut summary = format!("{} bounds for n = 0..={n}", spec.scheme);
    if marks.is_some() {
        summary.push_str(&format!(", {violations} sandwich violation(s)"));
    }
    for note in &cols.notes {
        summary.push_str(&format!("\n{note}"));
    }
    Ok(Output { csv: Some(csv.finish()), json: None, summary, violation: false })
}

/// Constants for a comparison "A faster than B": α from A, β from whichever
/// side runs G, κ₁ from whichever side runs IG.
pub fn merged_params(a: &RunSpec, b: &RunSpec) -> SchemeParams {
    let mut p = a.params;
    if a.scheme != Scheme::G && b.scheme == Scheme::G {
        p.beta1 = b.params.beta1;
        p.beta2 = b.params.beta2;
    }
    if b.scheme == Scheme::IG {
        p.kappa1 = b.params.kappa1;
    }
    p
}

pub fn compare(config: &ExperimentConfig) -> Result<Output> {
    let [sa, sb] = config
        .compare
        .as_ref()
        .ok_or_else(|| LabError::InvalidConfig(vec!["compare needs a `compare` pair".into()]))?;
    let (ca, cb) = (sa.require_config()?, sb.require_config()?);
    let mut mismatched = Vec::new();
    if ca.x0 != cb.x0 {
        mismatched.push("x0");
    }
    if ca.fixed_point() != cb.fixed_point() {
        mismatched.push("fixed point");
    }
    if ca.domain() != cb.domain() {
        mismatched.push("domain");
    }
    if ca.horizon != cb.horizon {
        mismatched.push("horizon");
    }
    if !mismatched.is_empty() {
        return Err(LabError::InvalidConfig(vec![format!(
            "compared runs must share x0, fixed point, domain and horizon; they differ in {}",
            mismatched.join(", ")
        )]));
    }
    let ta = iterations::run(&ca)?;
    let tb = iterations::run(&cb)?;
    let shared =
        (ca.schedule_a == cb.schedule_a && ca.schedule_b == cb.schedule_b).then_some((&ca.schedule_a, &ca.schedule_b));
    let params = merged_params(sa, sb);
    let report = analysis::compare(&ta, &tb, &params, shared, config.zero_tol)?;
    let mut summary = format!(
        "{} vs {}: R_N = {:e}, conclusion {}",
        ca.scheme,
        cb.scheme,
        report.empirical.final_ratio,
        serde_json::to_value(report.conclusion()).expect("conclusion serializes").as_str().unwrap_or_default()
    );
    if shared.is_none() {
        summary.push_str("\nschedules differ between the runs; no theorem check applies");
    }
    Ok(Output {
        csv: Some(report.to_csv()),
        json: Some(stable_json(&report.verdict_json())),
        summary,
        violation: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ClassifyEntry {
    #[serde(flatten)]
    verdict: ConvergenceVerdict,
    /// First index with `U_n < 1e−6` among the first 10⁵ indices.
    #[serde(skip_serializing_if = "Option::is_none")]
    crossing_below_1e_6: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ClassifyReport {
    verdicts: Vec<ClassifyEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corollary: Option<ConvergenceVerdict>,
    skipped: Vec<String>,
}

const CROSSING_SCAN: usize = 100_000;

pub fn classify(config: &ExperimentConfig) -> Result<Output> {
    let spec = config.single()?;
    let (p, a, b) = (&spec.params, &spec.schedule_a, &spec.schedule_b);
    if !matches!(spec.scheme, Scheme::IG | Scheme::G) {
        return Err(LabError::UnsupportedScheme(format!("{} (classify supports IG and G)", spec.scheme)));
    }
    let (requests, strict) = match &config.bounds {
        Some(list) => (list.iter().map(|r| r.side).collect::<Vec<_>>(), true),
        None => (vec![Side::Upper, Side::Lower], false),
    };
    let mut report = ClassifyReport { verdicts: vec![], corollary: None, skipped: vec![] };
    for side in requests {
        let result = match (spec.scheme, side) {
            (Scheme::IG, Side::Upper) => analysis::classify_ueb_ig(p, a, b),
            (Scheme::IG, Side::Lower) => analysis::classify_leb_ig(p, a, b),
            (_, Side::Upper) => analysis::classify_ueb_g(p, a, b),
            (_, Side::Lower) => analysis::classify_leb_g(p, a, b),
        };
        let verdict = match result {
            Ok(v) => v,
            Err(e) if !strict && e.kind() == crate::error::ErrorKind::Precondition => {
                report.skipped.push(format!("{side}: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let crossing = if side == Side::Upper && verdict.converges_to_zero == Answer::Yes {
            let s = bounds::bound_series(spec.scheme, Side::Upper, LowerVariant::Paper, p, a, b, CROSSING_SCAN)?;
            analysis::crossing_index(&s, 1e-6)
        } else {
            None
        };
        report.verdicts.push(ClassifyEntry { verdict, crossing_below_1e_6: crossing });
    }
    if spec.scheme == Scheme::G {
        report.corollary = Some(analysis::corollary_g_equivalence(p, a, b)?);
    }
    let summary = report
        .verdicts
        .iter()
        .map(|e| {
            let v = serde_json::to_value(e.verdict.converges_to_zero).expect("answer serializes");
            format!("{} {}: {}", spec.scheme, e.verdict.bound_side, v.as_str().unwrap_or_default())
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Output { csv: None, json: Some(stable_json(&report)), summary, violation: false })
}

/// Runs the lower-bound probe; `samples` and `seed` override the document.
pub fn probe(config: &ExperimentConfig, samples: Option<usize>, seed: Option<u64>) -> Result<Output> {
    let spec = config.single()?;
    if spec.horizon == 0 {
        return Err(LabError::InvalidConfig(vec!["probe needs horizon >= 1".into()]));
    }
    let settings = config.probe;
    let report: ProbeReport = bounds::probe_lower_violation(
        spec.scheme,
        &spec.params,
        &spec.schedule_a,
        &spec.schedule_b,
        spec.horizon - 1,
        samples.unwrap_or(settings.samples),
        seed.unwrap_or(settings.seed),
        settings.variant,
    )?;
    let summary = match &report.counterexample {
        Some(cx) => format!(
            "violation: r_{} = {:e} < L_{} = {:e} ({} sample {})",
            cx.index + 1,
            cx.ratio,
            cx.index,
            cx.bound,
            match cx.phase {
                bounds::ProbePhase::Vertex => "vertex",
                bounds::ProbePhase::Random => "random",
            },
            cx.sample
        ),
        None => format!("no violation in {} vertex and {} random samples", report.vertices, report.samples),
    };
    Ok(Output { csv: None, violation: report.counterexample.is_some(), json: Some(stable_json(&report)), summary })
}
