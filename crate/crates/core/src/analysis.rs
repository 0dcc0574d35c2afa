//! Convergence classification of the bound products and convergence-rate
//! comparison between schemes.
//!
//! Classifiers reduce "the bound tends to zero" to the divergence of a
//! weighted series of schedule terms and decide it symbolically. Comparison
//! checks evaluate the sufficient conditions under which one scheme beats
//! another, and [`compare`] puts the empirical error ratio next to them.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundSeries, LowerVariant, Side};
use crate::error::{LabError, Result};
use crate::iterations::{Scheme, SchemeParams, Trajectory};
use crate::schedules::{
    classify_affine_series, classify_product_series, classify_series, classify_weighted_combination, gap_schedule,
    ScheduleSpec, SeriesRef, SeriesVerdict, SignedVerdict, Verdict, WeightedSeries, ZERO_SNAP,
};
use crate::table::{self, Csv};

/// Number of leading indices scanned when taking an infimum over a schedule.
pub const EXTREMUM_SCAN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

/// One series or guard that contributed to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub term: String,
    pub verdict: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub scheme: Scheme,
    pub bound_side: Side,
    pub converges_to_zero: Answer,
    pub condition_trace: Vec<TraceEntry>,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Divergent => "divergent",
        Verdict::Convergent => "convergent",
        Verdict::AllZero => "all-zero",
        Verdict::Unknown => "unknown",
    }
}

fn trace(term: impl Into<String>, v: &SeriesVerdict) -> TraceEntry {
    TraceEntry { term: term.into(), verdict: verdict_name(v.verdict).into(), rationale: v.rationale.clone() }
}

fn answer_divergent(v: &SeriesVerdict) -> Answer {
    match v.verdict {
        Verdict::Divergent => Answer::Yes,
        Verdict::Convergent | Verdict::AllZero => Answer::No,
        Verdict::Unknown => Answer::Unknown,
    }
}

fn weighted(terms: &[(f64, SeriesRef)]) -> Result<SeriesVerdict> {
    let list: Vec<WeightedSeries> =
        terms.iter().map(|(w, s)| WeightedSeries { weight: *w, series: s.clone() }).collect();
    classify_weighted_combination(&list)
}

fn describe_terms(terms: &[(f64, SeriesRef)]) -> String {
    terms.iter().map(|(w, s)| format!("{w}*[{}]", s.describe())).collect::<Vec<_>>().join(" + ")
}

/// An exactly zero factor makes the product vanish whatever the series does.
/// Beyond the irregular prefix every family is monotone, so a zero can only
/// sit in the first few indices.
fn zero_factor_index(a: &ScheduleSpec, b: &ScheduleSpec, factor: impl Fn(f64, f64) -> f64) -> Option<usize> {
    let scan = a.irregular_prefix().max(b.irregular_prefix()) + 2;
    (0..=scan).find(|&k| factor(a.value_at(k), b.value_at(k)) == 0.0)
}

fn upper_verdict(
    scheme: Scheme,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
    terms: &[(f64, SeriesRef)],
    factor: impl Fn(f64, f64) -> f64,
) -> Result<ConvergenceVerdict> {
    if let Some(k) = zero_factor_index(a, b, factor) {
        return Ok(ConvergenceVerdict {
            scheme,
            bound_side: Side::Upper,
            converges_to_zero: Answer::Yes,
            condition_trace: vec![TraceEntry {
                term: format!("factor f_{k}"),
                verdict: "zero".into(),
                rationale: format!("factor {k} vanishes, so the product is 0 from there on"),
            }],
        });
    }
    let v = weighted(terms)?;
    Ok(ConvergenceVerdict {
        scheme,
        bound_side: Side::Upper,
        converges_to_zero: answer_divergent(&v),
        condition_trace: vec![trace(describe_terms(terms), &v)],
    })
}

/// `U^IG_n → 0` iff `(1−α₁)Σa + (1−α₁)Σ(1−b) + (1−α₂)Σb = ∞`.
pub fn classify_ueb_ig(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<ConvergenceVerdict> {
    params.validate(Scheme::IG)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let terms = [
        (1.0 - a1, SeriesRef::Schedule(a.clone())),
        (1.0 - a1, SeriesRef::OneMinus(b.clone())),
        (1.0 - a2, SeriesRef::Schedule(b.clone())),
    ];
    upper_verdict(Scheme::IG, a, b, &terms, |ak, bk| (1.0 - (1.0 - a1) * ak) * (a1 + (a2 - a1) * bk))
}

/// `U^G_n → 0` iff `(1−α₁)Σa + (1−α₂)Σb + (1−β₁)Σ(1−a) + (1−β₂)Σ(1−b) = ∞`.
pub fn classify_ueb_g(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<ConvergenceVerdict> {
    params.validate(Scheme::G)?;
    let p = *params;
    let terms = [
        (1.0 - p.alpha1, SeriesRef::Schedule(a.clone())),
        (1.0 - p.alpha2, SeriesRef::Schedule(b.clone())),
        (1.0 - p.beta1, SeriesRef::OneMinus(a.clone())),
        (1.0 - p.beta2, SeriesRef::OneMinus(b.clone())),
    ];
    upper_verdict(Scheme::G, a, b, &terms, |ak, bk| {
        (p.beta1 + (p.alpha1 - p.beta1) * ak) * (p.beta2 + (p.alpha2 - p.beta2) * bk)
    })
}

fn require_sup(s: &ScheduleSpec, name: &str, threshold: f64, strict: bool) -> Result<()> {
    let sup = s.sup();
    let ok = if strict { sup < threshold } else { sup <= threshold + ZERO_SNAP };
    if ok {
        Ok(())
    } else {
        Err(LabError::precondition(
            format!("{name}_n {} {threshold}", if strict { "<" } else { "<=" }),
            Some(s.argsup()),
            format!("supremum of {name} is {sup}"),
        ))
    }
}

fn lower_verdict(scheme: Scheme, min_kappa: f64, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<ConvergenceVerdict> {
    if min_kappa < 1.0 {
        return Ok(ConvergenceVerdict {
            scheme,
            bound_side: Side::Lower,
            converges_to_zero: Answer::Yes,
            condition_trace: vec![TraceEntry {
                term: "kappa".into(),
                verdict: "below-one".into(),
                rationale: format!("every factor is at most {min_kappa} < 1"),
            }],
        });
    }
    let terms = [(1.0, SeriesRef::Schedule(a.clone())), (1.0, SeriesRef::Schedule(b.clone()))];
    let v = weighted(&terms)?;
    Ok(ConvergenceVerdict {
        scheme,
        bound_side: Side::Lower,
        converges_to_zero: answer_divergent(&v),
        condition_trace: vec![trace("sum (a_n + b_n)", &v)],
    })
}

/// `L^IG_n → 0` always when `κ₁ < 1`; for `κ₁ = 1` iff `Σ(a+b) = ∞`.
pub fn classify_leb_ig(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<ConvergenceVerdict> {
    params.validate(Scheme::IG)?;
    let (k1, a2) = (params.kappa1, params.alpha2);
    require_sup(a, "a", 1.0 / (1.0 + k1), true)?;
    require_sup(b, "b", k1 / (k1 + a2), true)?;
    lower_verdict(Scheme::IG, k1, a, b)
}

/// `L^G_n → 0` always when `min(κ₁, κ₂) < 1`; otherwise iff `Σ(a+b) = ∞`.
pub fn classify_leb_g(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<ConvergenceVerdict> {
    params.validate(Scheme::G)?;
    let p = *params;
    require_sup(a, "a", p.kappa1 / (p.kappa1 + p.alpha1), false)?;
    require_sup(b, "b", p.kappa2 / (p.kappa2 + p.alpha2), false)?;
    lower_verdict(Scheme::G, p.kappa1.min(p.kappa2), a, b)
}

/// Whether G iterates reach the fixed point when `κ₁ = κ₂ = 1` and
/// `α₁, α₂ ∈ (0, 1)`: they do iff `Σ(a+b) = ∞`. Outside those hypotheses the
/// answer is `unknown` with the failed hypothesis in the trace.
pub fn corollary_g_equivalence(
    params: &SchemeParams,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
) -> Result<ConvergenceVerdict> {
    let p = *params;
    let unknown = |why: String| ConvergenceVerdict {
        scheme: Scheme::G,
        bound_side: Side::Lower,
        converges_to_zero: Answer::Unknown,
        condition_trace: vec![TraceEntry { term: "hypotheses".into(), verdict: "fails".into(), rationale: why }],
    };
    if let Err(e) = params.validate(Scheme::G) {
        return Ok(unknown(e.to_string()));
    }
    let open = |v: f64| 0.0 < v && v < 1.0;
    if !open(p.alpha1) || !open(p.alpha2) {
        return Ok(unknown(format!("needs alpha1, alpha2 in (0, 1), got {} and {}", p.alpha1, p.alpha2)));
    }
    if p.kappa1 != 1.0 || p.kappa2 != 1.0 {
        return Ok(unknown(format!("needs kappa1 = kappa2 = 1, got {} and {}", p.kappa1, p.kappa2)));
    }
    for (s, name, thr) in [(a, "a", 1.0 / (1.0 + p.alpha1)), (b, "b", 1.0 / (1.0 + p.alpha2))] {
        if require_sup(s, name, thr, false).is_err() {
            return Ok(unknown(format!("needs {name}_n <= {thr}, supremum is {}", s.sup())));
        }
    }
    lower_verdict(Scheme::G, 1.0, a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

impl Status {
    fn of_series(v: &SeriesVerdict) -> Status {
        match v.verdict {
            Verdict::Divergent => Status::Holds,
            Verdict::Convergent | Verdict::AllZero => Status::Fails,
            Verdict::Unknown => Status::Unknown,
        }
    }

    fn of_signed(v: SignedVerdict) -> Status {
        match v {
            SignedVerdict::PlusInfinity => Status::Holds,
            SignedVerdict::Unknown => Status::Unknown,
            SignedVerdict::MinusInfinity | SignedVerdict::Finite => Status::Fails,
        }
    }

    fn of_bool(b: bool) -> Status {
        if b {
            Status::Holds
        } else {
            Status::Fails
        }
    }

    fn all(items: impl IntoIterator<Item = Status>) -> Status {
        items.into_iter().fold(Status::Holds, |acc, s| match (acc, s) {
            (Status::Fails, _) | (_, Status::Fails) => Status::Fails,
            (Status::Unknown, _) | (_, Status::Unknown) => Status::Unknown,
            _ => Status::Holds,
        })
    }

    fn any(items: impl IntoIterator<Item = Status>) -> Status {
        items.into_iter().fold(Status::Fails, |acc, s| match (acc, s) {
            (Status::Holds, _) | (_, Status::Holds) => Status::Holds,
            (Status::Unknown, _) | (_, Status::Unknown) => Status::Unknown,
            _ => Status::Fails,
        })
    }
}

fn signed_name(v: SignedVerdict) -> &'static str {
    match v {
        SignedVerdict::PlusInfinity => "+inf",
        SignedVerdict::MinusInfinity => "-inf",
        SignedVerdict::Finite => "finite",
        SignedVerdict::Unknown => "undecided",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Condition {
    fn new(name: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Condition { name: name.into(), status, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Constants {
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    Faster,
    NotEstablished,
}

/// Outcome of checking one sufficient condition for faster convergence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub theorem: String,
    pub constants: Constants,
    pub conditions: Vec<Condition>,
    pub conclusion: Conclusion,
}

impl TheoremCheck {
    fn conclude(theorem: &str, constants: Constants, conditions: Vec<Condition>) -> Self {
        let conclusion = if conditions.iter().all(|c| c.status == Status::Holds) {
            Conclusion::Faster
        } else {
            Conclusion::NotEstablished
        };
        TheoremCheck { theorem: theorem.into(), constants, conditions, conclusion }
    }
}

/// `inf_k f(a_k, b_k)` over the scanned prefix and the limit pair.
pub fn schedule_infimum(a: &ScheduleSpec, b: &ScheduleSpec, f: impl Fn(f64, f64) -> f64) -> f64 {
    let scan = EXTREMUM_SCAN.max(a.irregular_prefix()).max(b.irregular_prefix());
    (0..=scan).map(|k| f(a.value_at(k), b.value_at(k))).fold(f(a.limit(), b.limit()), f64::min)
}

fn nondegenerate(params: &SchemeParams) -> Condition {
    let s = params.alpha1 + params.alpha2;
    Condition::new("0 < alpha1 + alpha2 < 2", Status::of_bool(0.0 < s && s < 2.0), format!("alpha1 + alpha2 = {s}"))
}

fn series_condition(name: &str, v: &SeriesVerdict) -> Condition {
    Condition::new(name, Status::of_series(v), format!("{}: {}", verdict_name(v.verdict), v.rationale))
}

/// Hypothesis groups shared by the IG-vs-I and IG-vs-IM checks: group i) is
/// `α₂ < 1, Σb = ∞`; group ii) is `α₁ < 1, α₂ = 1` plus `second`.
fn hypothesis_groups(params: &SchemeParams, b: &ScheduleSpec, second: Vec<(String, Status)>) -> Condition {
    let sb = classify_series(b);
    let g1 = Status::all([Status::of_bool(params.alpha2 < 1.0), Status::of_series(&sb)]);
    let mut g2_parts = vec![Status::of_bool(params.alpha1 < 1.0 && params.alpha2 == 1.0)];
    g2_parts.extend(second.iter().map(|(_, s)| *s));
    let g2 = Status::all(g2_parts);
    let second_desc: Vec<String> = second.iter().map(|(n, s)| format!("{n}: {s:?}")).collect();
    Condition::new(
        "hypothesis group i) or ii)",
        Status::any([g1, g2]),
        format!(
            "group i) {g1:?} (alpha2 < 1, sum b_n {}); group ii) {g2:?} (alpha1 < 1, alpha2 = 1, {})",
            verdict_name(sb.verdict),
            second_desc.join(", ")
        )
        .to_lowercase(),
    )
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// IG faster than I, with `δ* = inf_k[1 − b_k − α₂b_k(1 − a_k + α₁a_k)]`.
pub fn check_ig_vs_i(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<TheoremCheck> {
    params.validate(Scheme::IG)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let delta = schedule_infimum(a, b, |ak, bk| 1.0 - bk - a2 * bk * (1.0 - ak + a1 * ak));
    let mut conditions = vec![
        nondegenerate(params),
        Condition::new("delta* > 0", Status::of_bool(delta > 0.0), format!("delta* = {delta}")),
    ];
    if delta > 0.0 {
        let cb = a1 - a2 - (1.0 + a2) / delta;
        let v = classify_affine_series(1.0 - a1, 1.0 - a1, a, cb, b);
        conditions.push(Condition::new(
            "sum [(1-a1)(a_k+1) + (a1-a2-(1+a2)/delta*) b_k] = +inf",
            Status::of_signed(v),
            format!("terms {} + {}*a_k + {cb}*b_k sum to {}", 1.0 - a1, 1.0 - a1, signed_name(v)),
        ));
    } else {
        conditions.push(Condition::new("sum [...] = +inf", Status::Unknown, "requires delta* > 0"));
    }
    let s1 = classify_affine_series(1.0, 1.0, a, -1.0, b);
    let s2 = classify_product_series(a, b);
    conditions.push(hypothesis_groups(
        params,
        b,
        vec![("sum (a-b+1)".into(), Status::of_signed(s1)), ("sum a*b".into(), Status::of_series(&s2))],
    ));
    Ok(TheoremCheck::conclude("IG faster than I", Constants { delta: finite(delta), ..Default::default() }, conditions))
}

/// IG faster than IM, with `ε* = inf(1 − a − α₁a)`, `τ* = inf(1 − b − α₂b)`.
pub fn check_ig_vs_im(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<TheoremCheck> {
    params.validate(Scheme::IG)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    let eps = schedule_infimum(a, b, |ak, _| 1.0 - ak - a1 * ak);
    let tau = schedule_infimum(a, b, |_, bk| 1.0 - bk - a2 * bk);
    let mut conditions = vec![
        nondegenerate(params),
        Condition::new(
            "epsilon* > 0 and tau* > 0",
            Status::of_bool(eps > 0.0 && tau > 0.0),
            format!("epsilon* = {eps}, tau* = {tau}"),
        ),
    ];
    if eps > 0.0 && tau > 0.0 {
        let et = eps * tau;
        let (c0, cb) = (1.0 - a1 / et, (a1 - a2) / et);
        let v = classify_affine_series(c0, 1.0 - a1, a, cb, b);
        conditions.push(Condition::new(
            "sum [(1-a1)a_k + (a1-a2)/(eps tau) b_k + 1 - a1/(eps tau)] = +inf",
            Status::of_signed(v),
            format!("terms {c0} + {}*a_k + {cb}*b_k sum to {}", 1.0 - a1, signed_name(v)),
        ));
    } else {
        conditions.push(Condition::new("sum [...] = +inf", Status::Unknown, "requires epsilon*, tau* > 0"));
    }
    let sa = classify_series(a);
    let s1 = classify_affine_series(1.0, 1.0, a, -1.0, b);
    conditions.push(hypothesis_groups(
        params,
        b,
        vec![("sum a".into(), Status::of_series(&sa)), ("sum (a-b+1)".into(), Status::of_signed(s1))],
    ));
    Ok(TheoremCheck::conclude(
        "IG faster than IM",
        Constants { epsilon: finite(eps), tau: finite(tau), ..Default::default() },
        conditions,
    ))
}

fn range_condition(s: &ScheduleSpec, name: &str, threshold: f64, strict: bool) -> Condition {
    let sup = s.sup();
    let ok = if strict { sup < threshold } else { sup <= threshold + ZERO_SNAP };
    let op = if strict { "<" } else { "<=" };
    Condition::new(
        format!("{name}_n {op} {threshold}"),
        Status::of_bool(ok),
        format!("threshold {threshold}, supremum of {name}_n is {sup}"),
    )
}

fn gap_or_fail(s: &ScheduleSpec, threshold: f64) -> Option<ScheduleSpec> {
    if threshold.is_finite() {
        gap_schedule(s, threshold).ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GComparisons {
    pub vs_i: TheoremCheck,
    pub vs_im: TheoremCheck,
}

/// `(1−β₁)/(1−β₁+2α₁)` and `(1−β₂)/(1−β₂+2α₂)`.
pub fn g_vs_i_thresholds(params: &SchemeParams) -> (f64, f64) {
    let p = params;
    ((1.0 - p.beta1) / (1.0 - p.beta1 + 2.0 * p.alpha1), (1.0 - p.beta2) / (1.0 - p.beta2 + 2.0 * p.alpha2))
}

/// G faster than I (via `Σb* = ∞`) and than IM (via `Σ(a*+b*) = ∞`), where
/// `a*`, `b*` are the gaps below the strict range thresholds.
pub fn check_g_vs_i_im(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<GComparisons> {
    params.validate(Scheme::G)?;
    let (ta, tb) = g_vs_i_thresholds(params);
    let ranges = [range_condition(a, "a", ta, true), range_condition(b, "b", tb, true)];
    let a_gap = gap_or_fail(a, ta);
    let b_gap = gap_or_fail(b, tb);
    let missing = |what: &str| Condition::new(what, Status::Fails, "gap schedule undefined: the range is violated");

    let mut vs_i = ranges.to_vec();
    vs_i.push(match &b_gap {
        Some(g) => series_condition("sum b*_n = +inf", &classify_series(g)),
        None => missing("sum b*_n = +inf"),
    });
    let mut vs_im = ranges.to_vec();
    vs_im.push(match (&a_gap, &b_gap) {
        (Some(ga), Some(gb)) => series_condition(
            "sum (a*_n + b*_n) = +inf",
            &weighted(&[(1.0, SeriesRef::Schedule(ga.clone())), (1.0, SeriesRef::Schedule(gb.clone()))])?,
        ),
        _ => missing("sum (a*_n + b*_n) = +inf"),
    });
    Ok(GComparisons {
        vs_i: TheoremCheck::conclude("G faster than I", Constants::default(), vs_i),
        vs_im: TheoremCheck::conclude("G faster than IM", Constants::default(), vs_im),
    })
}

/// `(1−β₁)/(1−β₁+2α₁)` and `(κ₁−β₂)/(κ₁−β₂+2α₂)`.
pub fn g_vs_ig_thresholds(params: &SchemeParams) -> (f64, f64) {
    let p = params;
    ((1.0 - p.beta1) / (1.0 - p.beta1 + 2.0 * p.alpha1), (p.kappa1 - p.beta2) / (p.kappa1 - p.beta2 + 2.0 * p.alpha2))
}

/// G faster than IG when the two gap series below the thresholds sum to `+∞`.
/// Requires `β₂ ≤ κ₁ ≤ α₁` with the five constants in `(0, 1]`.
pub fn check_g_vs_ig(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<TheoremCheck> {
    let p = *params;
    for (name, v) in
        [("alpha1", p.alpha1), ("kappa1", p.kappa1), ("alpha2", p.alpha2), ("beta1", p.beta1), ("beta2", p.beta2)]
    {
        if !(v > 0.0 && v <= 1.0) {
            return Err(LabError::InvalidParams(format!("{name} = {v} must lie in (0, 1]")));
        }
    }
    if !(p.beta2 <= p.kappa1 && p.kappa1 <= p.alpha1) {
        return Err(LabError::InvalidParams(format!(
            "needs beta2 <= kappa1 <= alpha1, got {} , {} , {}",
            p.beta2, p.kappa1, p.alpha1
        )));
    }
    a.validate()?;
    b.validate()?;
    let (ta, tb) = g_vs_ig_thresholds(params);
    let mut conditions = vec![range_condition(a, "a", ta, false), range_condition(b, "b", tb, false)];
    conditions.push(match (gap_or_fail(a, ta), gap_or_fail(b, tb)) {
        (Some(ga), Some(gb)) => series_condition(
            "sum (a-gap) + sum (b-gap) = +inf",
            &weighted(&[(1.0, SeriesRef::Schedule(ga)), (1.0, SeriesRef::Schedule(gb))])?,
        ),
        _ => Condition::new(
            "sum (a-gap) + sum (b-gap) = +inf",
            Status::Fails,
            "gap schedule undefined: the range is violated",
        ),
    });
    Ok(TheoremCheck::conclude("G faster than IG", Constants::default(), conditions))
}

/// Which singular convention produced `R_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Singular {
    Regular,
    /// Both errors at or below `zero_tol·e_0`; `R_n = 0`.
    BothAtFixedPoint,
    /// Only the second error at or below `zero_tol·e_0`; `R_n = 1`.
    DenominatorAtFixedPoint,
}

impl Singular {
    pub fn as_str(self) -> &'static str {
        match self {
            Singular::Regular => "regular",
            Singular::BothAtFixedPoint => "both-at-fixed-point",
            Singular::DenominatorAtFixedPoint => "denominator-at-fixed-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSeries {
    pub values: Vec<f64>,
    /// `ln R_n`; stays finite after both errors underflow.
    pub ln_values: Vec<f64>,
    pub singular: Vec<Singular>,
}

/// `R_n = ‖x_n − x*‖ / ‖u_n − x*‖` for two runs from the same start.
pub fn ratio_series(a: &Trajectory, b: &Trajectory, zero_tol: f64) -> Result<RatioSeries> {
    if a.fixed_point != b.fixed_point {
        return Err(LabError::Mismatch("trajectories have different fixed points".into()));
    }
    if a.points[0] != b.points[0] {
        return Err(LabError::Mismatch("trajectories start from different x0".into()));
    }
    if a.points.len() != b.points.len() {
        return Err(LabError::Mismatch(format!("horizons differ: {} vs {}", a.horizon(), b.horizon())));
    }
    if zero_tol.is_nan() || zero_tol < 0.0 {
        return Err(LabError::InvalidParams(format!("zero_tol must be >= 0, got {zero_tol}")));
    }
    let cut = zero_tol.ln() + a.ln_errors[0];
    let mut out = RatioSeries { values: vec![], ln_values: vec![], singular: vec![] };
    for (la, lb) in a.ln_errors.iter().zip(&b.ln_errors) {
        let (zero_a, zero_b) = (*la <= cut, *lb <= cut);
        let (s, ln_r) = match (zero_a, zero_b) {
            (true, true) => (Singular::BothAtFixedPoint, f64::NEG_INFINITY),
            (false, true) => (Singular::DenominatorAtFixedPoint, 0.0),
            _ => (Singular::Regular, la - lb),
        };
        out.values.push(ln_r.exp());
        out.ln_values.push(ln_r);
        out.singular.push(s);
    }
    Ok(out)
}

/// `env_n = U^A_{n−1} / L^B_{n−1}` with `env_0 = 1`, in log domain;
/// `+∞` where the lower bound is invalid.
pub fn envelope(upper: &BoundSeries, lower: &BoundSeries, len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            if n == 0 {
                0.0
            } else if lower.valid[n - 1] {
                upper.ln_cumulative[n - 1] - lower.ln_cumulative[n - 1]
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// The upper bound of the faster candidate and the lower bound of the
/// slower one, as used by the comparison envelope.
pub fn envelope_bounds(
    a: Scheme,
    b: Scheme,
    params: &SchemeParams,
    sa: &ScheduleSpec,
    sb: &ScheduleSpec,
    n: usize,
) -> Result<(BoundSeries, BoundSeries)> {
    let upper = bounds::bound_series(a, Side::Upper, LowerVariant::Safe, params, sa, sb, n)?;
    let lower = match b {
        Scheme::IG => bounds::leb_ig_flagged(params, sa, sb, n)?,
        other => bounds::bound_series(other, Side::Lower, LowerVariant::Safe, params, sa, sb, n)?,
    };
    Ok((upper, lower))
}

/// The theorem check that applies to "A faster than B", if any.
pub fn applicable_check(
    a: Scheme,
    b: Scheme,
    params: &SchemeParams,
    sa: &ScheduleSpec,
    sb: &ScheduleSpec,
) -> Result<Option<TheoremCheck>> {
    Ok(match (a, b) {
        (Scheme::IG, Scheme::I) => Some(check_ig_vs_i(params, sa, sb)?),
        (Scheme::IG, Scheme::IM) => Some(check_ig_vs_im(params, sa, sb)?),
        (Scheme::G, Scheme::I) => Some(check_g_vs_i_im(params, sa, sb)?.vs_i),
        (Scheme::G, Scheme::IM) => Some(check_g_vs_i_im(params, sa, sb)?.vs_im),
        (Scheme::G, Scheme::IG) => Some(check_g_vs_ig(params, sa, sb)?),
        _ => None,
    })
}

/// How the observed ratio behaved against the envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Empirical {
    pub final_ratio: f64,
    pub final_ln_ratio: f64,
    pub decreased: bool,
    /// `ln R_n ≤ ln env_n + 1e−9·n` wherever the envelope is defined.
    pub within_envelope: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scheme_a: Scheme,
    pub scheme_b: Scheme,
    pub ratio: RatioSeries,
    /// `ln env_n`; empty when no bound pair applies.
    pub ln_envelope: Vec<f64>,
    pub check: Option<TheoremCheck>,
    pub empirical: Empirical,
}

impl ComparisonReport {
    pub fn conclusion(&self) -> Conclusion {
        self.check.as_ref().map_or(Conclusion::NotEstablished, |c| c.conclusion)
    }

    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["n", "R_n", "envelope_n", "singular_flag"]);
        for n in 0..self.ratio.values.len() {
            let env = self.ln_envelope.get(n).map_or(String::new(), |l| table::num(l.exp()));
            csv.row(&[
                n.to_string(),
                table::num(self.ratio.values[n]),
                env,
                self.ratio.singular[n].as_str().to_string(),
            ]);
        }
        csv.finish()
    }

    /// `{theorem, constants, conditions, conclusion, empirical}` with keys in
    /// sorted order.
    pub fn verdict_json(&self) -> serde_json::Value {
        let mut v = match &self.check {
            Some(c) => serde_json::to_value(c).expect("check serializes"),
            None => serde_json::json!({
                "theorem": format!("{} faster than {}", self.scheme_a, self.scheme_b),
                "constants": Constants::default(),
                "conditions": [],
                "conclusion": Conclusion::NotEstablished,
            }),
        };
        v["empirical"] = serde_json::to_value(&self.empirical).expect("empirical serializes");
        v
    }
}

/// Ratio series of two runs, plus the bound envelope and the applicable
/// theorem check when both runs share the schedules `(a_n, b_n)`. `params`
/// carries the constants of both runs.
pub fn compare(
    a: &Trajectory,
    b: &Trajectory,
    params: &SchemeParams,
    schedules: Option<(&ScheduleSpec, &ScheduleSpec)>,
    zero_tol: f64,
) -> Result<ComparisonReport> {
    let ratio = ratio_series(a, b, zero_tol)?;
    let len = ratio.values.len();
    let n_bounds = len.saturating_sub(2);
    let mut ln_envelope = Vec::new();
    let mut check = None;
    if let Some((sa, sb)) = schedules {
        if a.scheme.is_two_step() && b.scheme.is_two_step() && len >= 2 {
            if let Ok((u, l)) = envelope_bounds(a.scheme, b.scheme, params, sa, sb, n_bounds) {
                ln_envelope = envelope(&u, &l, len);
            }
        }
        check = applicable_check(a.scheme, b.scheme, params, sa, sb)?;
    }
    let within_envelope = (!ln_envelope.is_empty()).then(|| {
        ratio
            .ln_values
            .iter()
            .zip(&ln_envelope)
            .enumerate()
            .all(|(n, (r, e))| !e.is_finite() || *r <= e + bounds::RATIO_SLACK * n.max(1) as f64)
    });
    let last = len - 1;
    let empirical = Empirical {
        final_ratio: ratio.values[last],
        final_ln_ratio: ratio.ln_values[last],
        decreased: ratio.ln_values[last] < ratio.ln_values[0],
        within_envelope,
    };
    Ok(ComparisonReport { scheme_a: a.scheme, scheme_b: b.scheme, ratio, ln_envelope, check, empirical })
}

/// First index with a bound value below `threshold`.
pub fn crossing_index(series: &BoundSeries, threshold: f64) -> Option<usize> {
    let ln_t = threshold.ln();
    series.ln_cumulative.iter().position(|l| *l < ln_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iterations::{run, scalar_config, scalar_roles};

    fn c(v: f64) -> ScheduleSpec {
        ScheduleSpec::constant(v)
    }

    fn p(a1: f64, a2: f64) -> SchemeParams {
        SchemeParams { alpha1: a1, alpha2: a2, ..Default::default() }
    }

    #[test]
    fn upper_ig_classifier() {
        let h = ScheduleSpec::harmonic();
        assert_eq!(classify_ueb_ig(&p(1.0, 1.0), &h, &h).unwrap().converges_to_zero, Answer::No);
        assert_eq!(classify_ueb_ig(&p(0.5, 0.8), &h, &h).unwrap().converges_to_zero, Answer::Yes);
        assert_eq!(classify_ueb_ig(&p(1.0, 0.5), &h, &c(0.0)).unwrap().converges_to_zero, Answer::No);
        // α₁ = 0 with a_0 = 1 zeroes the first factor.
        let v = classify_ueb_ig(&p(0.0, 1.0), &ScheduleSpec::Geometric { c: 1.0, r: 0.5 }, &c(1.0)).unwrap();
        assert_eq!(v.converges_to_zero, Answer::Yes);
        assert_eq!(v.condition_trace[0].verdict, "zero");
    }

    #[test]
    fn lower_classifiers() {
        let geo = ScheduleSpec::Geometric { c: 0.25, r: 0.5 };
        let k = |k1: f64| SchemeParams { kappa1: k1, alpha1: 1.0, alpha2: 0.5, ..Default::default() };
        assert_eq!(classify_leb_ig(&k(0.9), &c(0.1), &c(0.1)).unwrap().converges_to_zero, Answer::Yes);
        assert_eq!(classify_leb_ig(&k(1.0), &geo, &geo).unwrap().converges_to_zero, Answer::No);
        let h = ScheduleSpec::Power { c: 0.4, p: 1.0, q: 1.0 };
        assert_eq!(classify_leb_ig(&k(1.0), &h, &c(0.0)).unwrap().converges_to_zero, Answer::Yes);
        assert!(classify_leb_ig(&k(0.5), &c(0.7), &c(0.0)).is_err());

        let g = SchemeParams { kappa1: 1.0, kappa2: 1.0, alpha1: 0.5, alpha2: 0.5, ..Default::default() };
        let sq = ScheduleSpec::Power { c: 1.0, p: 2.0, q: 2.0 };
        assert_eq!(classify_leb_g(&g, &sq, &sq).unwrap().converges_to_zero, Answer::No);
        assert_eq!(corollary_g_equivalence(&g, &sq, &sq).unwrap().converges_to_zero, Answer::No);
        let h = ScheduleSpec::Power { c: 0.5, p: 1.0, q: 1.0 };
        assert_eq!(corollary_g_equivalence(&g, &h, &h).unwrap().converges_to_zero, Answer::Yes);
        let g1 = SchemeParams { alpha1: 1.0, ..g };
        assert_eq!(corollary_g_equivalence(&g1, &h, &h).unwrap().converges_to_zero, Answer::Unknown);
    }

    #[test]
    fn upper_g_classifier() {
        let h = ScheduleSpec::harmonic();
        assert_eq!(classify_ueb_g(&SchemeParams::default(), &h, &h).unwrap().converges_to_zero, Answer::No);
        let q = SchemeParams { alpha1: 0.5, alpha2: 0.5, ..Default::default() };
        assert_eq!(classify_ueb_g(&q, &c(0.0), &c(0.0)).unwrap().converges_to_zero, Answer::No);
        assert_eq!(classify_ueb_g(&q, &h, &c(0.0)).unwrap().converges_to_zero, Answer::Yes);
    }

    #[test]
    fn ig_vs_i_example() {
        let chk = check_ig_vs_i(&p(0.5, 0.5), &c(0.2), &c(0.2)).unwrap();
        assert!((chk.constants.delta.unwrap() - 0.71).abs() < 1e-15);
        assert_eq!(chk.conclusion, Conclusion::Faster);
        assert!(chk.conditions[2].detail.contains("+inf"));

        let none = check_ig_vs_i(&p(0.5, 0.5), &c(0.2), &c(0.0)).unwrap();
        assert_eq!(none.conclusion, Conclusion::NotEstablished);
        assert_eq!(none.conditions[3].status, Status::Fails);

        let edge = check_ig_vs_i(&p(0.5, 0.0), &c(0.2), &c(1.0)).unwrap();
        assert_eq!(edge.constants.delta, Some(0.0));
        assert_eq!(edge.conditions[1].status, Status::Fails);
    }

    #[test]
    fn ig_vs_im_example() {
        let chk = check_ig_vs_im(&p(0.5, 0.5), &c(0.2), &c(0.2)).unwrap();
        assert!((chk.constants.epsilon.unwrap() - 0.7).abs() < 1e-15);
        assert!((chk.constants.tau.unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(chk.conclusion, Conclusion::Faster);

        let bad = check_ig_vs_im(&p(1.0, 0.5), &c(1.0), &c(0.2)).unwrap();
        assert_eq!(bad.constants.epsilon, Some(-1.0));
        assert_eq!(bad.conclusion, Conclusion::NotEstablished);

        let g2 = check_ig_vs_im(&p(0.5, 1.0), &ScheduleSpec::harmonic(), &c(0.0)).unwrap();
        let groups = g2.conditions.last().unwrap();
        assert_eq!(groups.status, Status::Holds, "{}", groups.detail);
    }

    #[test]
    fn g_vs_i_thresholds_and_gaps() {
        let g = SchemeParams { beta1: 0.5, beta2: 0.8, alpha1: 0.5, alpha2: 0.6, ..Default::default() };
        let (_, tb) = g_vs_i_thresholds(&g);
        assert!((tb - 1.0 / 7.0).abs() < 1e-15);
        let factor = |b: f64| (g.beta2 + (g.alpha2 - g.beta2) * b) / (1.0 - (1.0 + g.alpha2) * b);
        assert!((factor(tb) - 1.0).abs() < 1e-12);

        let at = check_g_vs_i_im(&g, &c(0.1), &c(1.0 / 7.0)).unwrap();
        assert_eq!(at.vs_i.conclusion, Conclusion::NotEstablished);
        assert_eq!(at.vs_i.conditions[2].status, Status::Fails);

        let below = check_g_vs_i_im(&g, &c(0.1), &c(0.1)).unwrap();
        assert_eq!(below.vs_i.conclusion, Conclusion::Faster);
        assert_eq!(below.vs_im.conclusion, Conclusion::Faster);

        let over = check_g_vs_i_im(&g, &c(0.1), &c(0.2)).unwrap();
        assert_eq!(over.vs_i.conditions[1].status, Status::Fails);
        assert!(over.vs_i.conditions[1].detail.contains("0.14285714285714"));
    }

    #[test]
    fn g_vs_ig_example() {
        let g = SchemeParams { beta1: 0.5, alpha1: 0.5, kappa1: 0.5, beta2: 0.3, alpha2: 0.5, kappa2: 0.0 };
        let (ta, _) = g_vs_ig_thresholds(&g);
        assert!((ta - 1.0 / 3.0).abs() < 1e-15);
        let chk = check_g_vs_ig(&g, &c(0.2), &c(0.0)).unwrap();
        assert_eq!(chk.conclusion, Conclusion::Faster);
        let ga = gap_schedule(&c(0.2), ta).unwrap();
        assert!((ga.value_at(0) - 2.0 / 15.0).abs() < 1e-15);

        let collapse = SchemeParams { beta2: 0.5, ..g };
        assert_eq!(g_vs_ig_thresholds(&collapse).1, 0.0);
        assert_eq!(check_g_vs_ig(&collapse, &c(0.2), &c(0.0)).unwrap().conclusion, Conclusion::Faster);
        assert_eq!(check_g_vs_ig(&collapse, &c(0.2), &c(0.1)).unwrap().conclusion, Conclusion::NotEstablished);

        assert!(check_g_vs_ig(&SchemeParams { beta2: 0.6, ..g }, &c(0.2), &c(0.0)).is_err());
    }

    fn picard(coef: f64, horizon: usize) -> Trajectory {
        let cfg = scalar_config(
            Scheme::Picard,
            scalar_roles(coef, None, None, None).unwrap(),
            SchemeParams::default(),
            c(0.0),
            c(0.0),
            0.4,
            horizon,
        );
        run(&cfg).unwrap()
    }

    #[test]
    fn ratio_conventions() {
        let r = ratio_series(&picard(0.5, 2), &picard(0.8, 2), 0.0).unwrap();
        assert!((r.values[2] - 0.390625).abs() < 1e-15);
        let zero = picard(0.0, 3);
        let r = ratio_series(&zero, &zero, 1e-12).unwrap();
        assert_eq!(r.values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.singular[1], Singular::BothAtFixedPoint);
        let r = ratio_series(&picard(0.5, 3), &zero, 1e-12).unwrap();
        assert_eq!(r.values[1..], [1.0; 3]);
        assert_eq!(r.singular[2], Singular::DenominatorAtFixedPoint);
        assert!(ratio_series(&picard(0.5, 3), &picard(0.5, 4), 0.0).is_err());
    }

    #[test]
    fn comparison_of_ig_and_i_witnesses() {
        let params = p(0.5, 0.5);
        let roles = scalar_roles(0.5, Some(0.5), None, None).unwrap();
        let mk = |scheme| scalar_config(scheme, roles.clone(), params, c(0.2), c(0.2), 0.4, 20);
        let ig = run(&mk(Scheme::IG)).unwrap();
        let i = run(&mk(Scheme::I)).unwrap();
        let rep = compare(&ig, &i, &params, Some((&c(0.2), &c(0.2))), 0.0).unwrap();
        assert!(rep.ratio.values[20] < 1e-5);
        assert!((rep.ratio.values[1] - 0.45 / 0.89).abs() < 1e-15);
        assert_eq!(rep.conclusion(), Conclusion::Faster);
        assert_eq!(rep.empirical.within_envelope, Some(true));
        let json = rep.verdict_json().to_string();
        assert!(json.starts_with("{\"conclusion\":\"faster\",\"conditions\""), "{json}");
        assert_eq!(rep.to_csv().lines().next().unwrap(), "n,R_n,envelope_n,singular_flag");
    }

    #[test]
    fn envelope_for_g_vs_ig_uses_the_triangle_bracket() {
        let g = SchemeParams { beta1: 0.5, alpha1: 0.5, kappa1: 0.5, beta2: 0.3, alpha2: 0.5, kappa2: 0.0 };
        let (_, l) = envelope_bounds(Scheme::G, Scheme::IG, &g, &c(0.2), &c(0.1), 3).unwrap();
        assert!((l.factors[0] - (1.0 - 1.5 * 0.2) * (0.5 - 0.1)).abs() < 1e-15);
        assert!(l.valid.iter().all(|v| *v));
    }
}
