//! Upper and lower error-bound products for the two-step schemes, plus two
//! independent checks on them: an exhaustive 1-D oracle over scalar
//! coefficient grids and a randomized probe for lower-bound undershoots.
//!
//! A bound series holds `B_n = ∏_{k≤n} f_k`, which brackets
//! `r_{n+1} = ‖x_{n+1} − x*‖ / ‖x_0 − x*‖`. Products are accumulated as sums
//! of logarithms. A factor `≤ 0` invalidates the series from its index on;
//! such entries report the value 0.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::iterations::{self, Roles, Scheme, SchemeConfig, SchemeParams};
use crate::mappings::{self, norm, DomainSpec, MappingSpec, NonexpansiveClass};
use crate::schedules::{ScheduleSpec, ZERO_SNAP};
use crate::table::{self, Csv};

/// Relative slack of the sandwich and probe comparisons.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        })
    }
}

/// Which first bracket the IG lower bound uses: `1 − (1+κ₁)a` as published,
/// or `1 − (1+α₁)a`, which follows from the triangle inequality for every
/// member of the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerVariant {
    #[default]
    Paper,
    Safe,
}

impl fmt::Display for LowerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LowerVariant::Paper => "paper",
            LowerVariant::Safe => "safe",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSeries {
    pub scheme: Scheme,
    pub side: Side,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<LowerVariant>,
    /// `f_0 ..= f_N`.
    pub factors: Vec<f64>,
    /// `ln B_n`; `−∞` once the series is invalid.
    pub ln_cumulative: Vec<f64>,
    pub valid: Vec<bool>,
}

impl BoundSeries {
    fn from_factors(scheme: Scheme, side: Side, variant: Option<LowerVariant>, factors: Vec<f64>) -> Self {
        let mut ln_cumulative = Vec::with_capacity(factors.len());
        let mut valid = Vec::with_capacity(factors.len());
        let mut acc = 0.0;
        let mut ok = true;
        for &f in &factors {
            ok = ok && f > 0.0;
            if ok {
                acc += f.ln();
            }
            ln_cumulative.push(if ok { acc } else { f64::NEG_INFINITY });
            valid.push(ok);
        }
        BoundSeries { scheme, side, variant, factors, ln_cumulative, valid }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn value(&self, n: usize) -> f64 {
        self.ln_cumulative[n].exp()
    }

    pub fn values(&self) -> Vec<f64> {
        self.ln_cumulative.iter().map(|l| l.exp()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["n", "factor", "bound_value", "ln_bound", "valid"]);
        for n in 0..self.len() {
            csv.row(&[
                n.to_string(),
                table::num(self.factors[n]),
                table::num(self.value(n)),
                table::num(self.ln_cumulative[n]),
                self.valid[n].to_string(),
            ]);
        }
        csv.finish()
    }
}

fn checked(scheme: Scheme, params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec) -> Result<()> {
    params.validate(scheme)?;
    a.validate()?;
    b.validate()
}

fn series<F>(
    scheme: Scheme,
    side: Side,
    variant: Option<LowerVariant>,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
    n: usize,
    f: F,
) -> BoundSeries
where
    F: Fn(f64, f64) -> f64,
{
    let factors = (0..=n).map(|k| f(a.value_at(k), b.value_at(k))).collect();
    BoundSeries::from_factors(scheme, side, variant, factors)
}

/// First index `k ≤ n` where `holds(value_k)` fails; NaN thresholds fail.
fn first_failure(s: &ScheduleSpec, n: usize, holds: impl Fn(f64) -> bool) -> Option<(usize, f64)> {
    (0..=n).map(|k| (k, s.value_at(k))).find(|&(_, v)| !holds(v))
}

fn require(s: &ScheduleSpec, n: usize, name: &str, threshold: f64, strict: bool) -> Result<()> {
    let holds = |v: f64| if strict { v < threshold } else { v <= threshold + ZERO_SNAP };
    match first_failure(s, n, holds) {
        None => Ok(()),
        Some((k, v)) => Err(LabError::precondition(
            format!("{name}_k {} {threshold}", if strict { "<" } else { "<=" }),
            Some(k),
            format!("{name}_{k} = {v}"),
        )),
    }
}

/// `∏ [1−(1−α₁)a_k]·[α₁+(α₂−α₁)b_k]`.
pub fn ueb_ig(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::IG, params, a, b)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    Ok(series(Scheme::IG, Side::Upper, None, a, b, n, |ak, bk| (1.0 - (1.0 - a1) * ak) * (a1 + (a2 - a1) * bk)))
}

/// `∏ [1−(1+c)a_k]·[κ₁−(κ₁+α₂)b_k]` with `c = κ₁` (paper) or `c = α₁` (safe).
///
/// Both variants require `a_k < 1/(1+κ₁)` and `b_k < κ₁/(κ₁+α₂)`; the safe
/// variant also requires `a_k ≤ 1/(1+α₁)`.
pub fn leb_ig(
    params: &SchemeParams,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
    n: usize,
    variant: LowerVariant,
) -> Result<BoundSeries> {
    checked(Scheme::IG, params, a, b)?;
    let (k1, a1, a2) = (params.kappa1, params.alpha1, params.alpha2);
    require(a, n, "a", 1.0 / (1.0 + k1), true)?;
    require(b, n, "b", k1 / (k1 + a2), true)?;
    let c = match variant {
        LowerVariant::Paper => k1,
        LowerVariant::Safe => {
            require(a, n, "a", 1.0 / (1.0 + a1), false)?;
            a1
        }
    };
    Ok(series(Scheme::IG, Side::Lower, Some(variant), a, b, n, |ak, bk| (1.0 - (1.0 + c) * ak) * (k1 - (k1 + a2) * bk)))
}

/// Safe IG lower factors without the precondition checks; positivity is
/// left to the validity flags.
pub fn leb_ig_flagged(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::IG, params, a, b)?;
    let (k1, a1, a2) = (params.kappa1, params.alpha1, params.alpha2);
    Ok(series(Scheme::IG, Side::Lower, Some(LowerVariant::Safe), a, b, n, |ak, bk| {
        (1.0 - (1.0 + a1) * ak) * (k1 - (k1 + a2) * bk)
    }))
}

/// `∏ [β₁+(α₁−β₁)a_k]·[β₂+(α₂−β₂)b_k]`.
pub fn ueb_g(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::G, params, a, b)?;
    let p = *params;
    Ok(series(Scheme::G, Side::Upper, None, a, b, n, |ak, bk| {
        (p.beta1 + (p.alpha1 - p.beta1) * ak) * (p.beta2 + (p.alpha2 - p.beta2) * bk)
    }))
}

/// `∏ [κ₁−(κ₁+α₁)a_k]·[κ₂−(κ₂+α₂)b_k]`, requiring `a_k ≤ κ₁/(κ₁+α₁)` and
/// `b_k ≤ κ₂/(κ₂+α₂)`.
pub fn leb_g(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::G, params, a, b)?;
    let p = *params;
    require(a, n, "a", p.kappa1 / (p.kappa1 + p.alpha1), false)?;
    require(b, n, "b", p.kappa2 / (p.kappa2 + p.alpha2), false)?;
    Ok(series(Scheme::G, Side::Lower, None, a, b, n, |ak, bk| {
        (p.kappa1 - (p.kappa1 + p.alpha1) * ak) * (p.kappa2 - (p.kappa2 + p.alpha2) * bk)
    }))
}

/// `∏ 1−b_k+α₂b_k[1−(1−α₁)a_k]`.
pub fn ueb_i(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::I, params, a, b)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    Ok(series(Scheme::I, Side::Upper, None, a, b, n, |ak, bk| 1.0 - bk + a2 * bk * (1.0 - (1.0 - a1) * ak)))
}

/// `∏ 1−b_k−α₂b_k[1−(1−α₁)a_k]`.
pub fn leb_i(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::I, params, a, b)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    Ok(series(Scheme::I, Side::Lower, None, a, b, n, |ak, bk| 1.0 - bk - a2 * bk * (1.0 - (1.0 - a1) * ak)))
}

/// `∏ [1−(1−α₁)a_k][1−(1−α₂)b_k]`.
pub fn ueb_im(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::IM, params, a, b)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    Ok(series(Scheme::IM, Side::Upper, None, a, b, n, |ak, bk| (1.0 - (1.0 - a1) * ak) * (1.0 - (1.0 - a2) * bk)))
}

/// `∏ [1−(1+α₂)b_k][1−(1+α₁)a_k]`.
pub fn leb_im(params: &SchemeParams, a: &ScheduleSpec, b: &ScheduleSpec, n: usize) -> Result<BoundSeries> {
    checked(Scheme::IM, params, a, b)?;
    let (a1, a2) = (params.alpha1, params.alpha2);
    Ok(series(Scheme::IM, Side::Lower, None, a, b, n, |ak, bk| (1.0 - (1.0 + a2) * bk) * (1.0 - (1.0 + a1) * ak)))
}

/// The bound for any two-step scheme and side; `variant` only affects IG
/// lower bounds.
pub fn bound_series(
    scheme: Scheme,
    side: Side,
    variant: LowerVariant,
    params: &SchemeParams,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
    n: usize,
) -> Result<BoundSeries> {
    match (scheme, side) {
        (Scheme::IG, Side::Upper) => ueb_ig(params, a, b, n),
        (Scheme::IG, Side::Lower) => leb_ig(params, a, b, n, variant),
        (Scheme::G, Side::Upper) => ueb_g(params, a, b, n),
        (Scheme::G, Side::Lower) => leb_g(params, a, b, n),
        (Scheme::I, Side::Upper) => ueb_i(params, a, b, n),
        (Scheme::I, Side::Lower) => leb_i(params, a, b, n),
        (Scheme::IM, Side::Upper) => ueb_im(params, a, b, n),
        (Scheme::IM, Side::Lower) => leb_im(params, a, b, n),
        (other, _) => Err(LabError::UnsupportedScheme(other.to_string())),
    }
}

/// How `r_{n+1}` sits relative to the bounds at index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SandwichMark {
    Inside,
    TightUpper,
    TightLower,
    Tight,
    UpperViolation,
    LowerViolation,
}

impl SandwichMark {
    pub fn is_violation(self) -> bool {
        matches!(self, SandwichMark::UpperViolation | SandwichMark::LowerViolation)
    }
}

impl fmt::Display for SandwichMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SandwichMark::Inside => "inside",
            SandwichMark::TightUpper => "tight-upper",
            SandwichMark::TightLower => "tight-lower",
            SandwichMark::Tight => "tight",
            SandwichMark::UpperViolation => "upper-violation",
            SandwichMark::LowerViolation => "lower-violation",
        })
    }
}

/// `ln r_{n+1} > ln U_n + ln(1 + slack)`.
pub fn exceeds_upper(ln_r: f64, ln_u: f64) -> bool {
    ln_r > ln_u + RATIO_SLACK.ln_1p()
}

/// `ln r_{n+1} < ln L_n + ln(1 − slack)`; needs a valid lower bound.
pub fn undershoots_lower(ln_r: f64, ln_l: f64) -> bool {
    ln_l.is_finite() && ln_r < ln_l + (-RATIO_SLACK).ln_1p()
}

/// Classifies `ln r_{n+1}` (`ln_ratios[n + 1]`) against each supplied bound.
/// Equality counts as tight within `1e−9·(n+1)` in log domain.
pub fn sandwich(ln_ratios: &[f64], upper: Option<&BoundSeries>, lower: Option<&BoundSeries>) -> Vec<SandwichMark> {
    let len = ln_ratios.len().saturating_sub(1);
    let len = [upper, lower].iter().flatten().map(|s| s.len()).fold(len, usize::min);
    (0..len)
        .map(|n| {
            let ln_r = ln_ratios[n + 1];
            let tol = RATIO_SLACK * (n + 1) as f64;
            let close = |ln_b: f64| ln_b == ln_r || (ln_r - ln_b).abs() <= tol;
            let mut tight_u = false;
            let mut tight_l = false;
            if let Some(u) = upper {
                let ln_u = u.ln_cumulative[n];
                if exceeds_upper(ln_r, ln_u) {
                    return SandwichMark::UpperViolation;
                }
                tight_u = close(ln_u);
            }
            if let Some(l) = lower {
                let ln_l = l.ln_cumulative[n];
                if undershoots_lower(ln_r, ln_l) {
                    return SandwichMark::LowerViolation;
                }
                tight_l = l.valid[n] && close(ln_l);
            }
            match (tight_u, tight_l) {
                (true, true) => SandwichMark::Tight,
                (true, false) => SandwichMark::TightUpper,
                (false, true) => SandwichMark::TightLower,
                (false, false) => SandwichMark::Inside,
            }
        })
        .collect()
}

/// Per-index extremes of the 1-D ratio over a coefficient grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleExtremes {
    pub side: Side,
    /// Extreme of `ln |r_{n+1}|` for `n = 0..=N`.
    pub ln_values: Vec<f64>,
    /// Coefficients `[t1, t2, s1, s2]` attaining each extreme; unused roles are 0.
    pub argext: Vec<[f64; 4]>,
}

impl OracleExtremes {
    pub fn values(&self) -> Vec<f64> {
        self.ln_values.iter().map(|l| l.exp()).collect()
    }
}

fn grid_values(class: NonexpansiveClass, grid: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid);
    for i in 0..grid {
        let v = if i + 1 == grid {
            class.alpha
        } else {
            class.kappa + (class.alpha - class.kappa) * i as f64 / (grid - 1) as f64
        };
        out.push(v);
        out.push(-v);
    }
    out
}

/// One-step multiplier of a 1-D run with scalar maps `c = [t1, t2, s1, s2]`,
/// written out per scheme independently of [`iterations::step`].
fn multiplier(scheme: Scheme, a: f64, b: f64, c: &[f64; 4]) -> f64 {
    let [t1, t2, s1, s2] = *c;
    let y = 1.0 - a + a * t1;
    match scheme {
        Scheme::Picard => t1,
        Scheme::Mann => y,
        Scheme::I => (1.0 - b) + b * t2 * y,
        Scheme::IM => y * (1.0 - b + b * t2),
        Scheme::IG => y * ((1.0 - b) * t1 + b * t2),
        Scheme::G => ((1.0 - a) * s1 + a * t1) * ((1.0 - b) * s2 + b * t2),
    }
}

fn role_candidates(
    scheme: Scheme,
    params: &SchemeParams,
    per_role: impl Fn(NonexpansiveClass) -> Vec<f64>,
) -> Result<[Vec<f64>; 4]> {
    let classes = scheme.role_classes(params)?;
    let opt = |c: Option<NonexpansiveClass>| c.map(&per_role).unwrap_or_else(|| vec![0.0]);
    Ok([per_role(classes.t1), opt(classes.t2), opt(classes.s1), opt(classes.s2)])
}

fn for_each_assignment(candidates: &[Vec<f64>; 4], mut visit: impl FnMut(&[f64; 4])) {
    for &t1 in &candidates[0] {
        for &t2 in &candidates[1] {
            for &s1 in &candidates[2] {
                for &s2 in &candidates[3] {
                    visit(&[t1, t2, s1, s2]);
                }
            }
        }
    }
}

/// Brute-force max (upper) or min (lower) of `|r_{n+1}|` over every 1-D
/// scalar assignment with each role coefficient in `±{κ, κ+Δ, …, α}`.
pub fn oracle_extreme_1d(
    scheme: Scheme,
    params: &SchemeParams,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
    n: usize,
    side: Side,
    grid: usize,
) -> Result<OracleExtremes> {
    if grid < 3 {
        return Err(LabError::InvalidParams(format!("oracle grid must be >= 3, got {grid}")));
    }
    params.validate(scheme)?;
    let candidates = role_candidates(scheme, params, |c| grid_values(c, grid))?;
    let av = a.values(n + 1);
    let bv = b.values(n + 1);
    let init = match side {
        Side::Upper => f64::NEG_INFINITY,
        Side::Lower => f64::INFINITY,
    };
    let mut best = vec![init; n + 1];
    let mut arg = vec![[f64::NAN; 4]; n + 1];
    for_each_assignment(&candidates, |c| {
        let mut acc = 0.0;
        for k in 0..=n {
            acc += multiplier(scheme, av[k], bv[k], c).abs().ln();
            let better = match side {
                Side::Upper => acc > best[k],
                Side::Lower => acc < best[k],
            };
            if better {
                best[k] = acc;
                arg[k] = *c;
            }
        }
    });
    Ok(OracleExtremes { side, ln_values: best, argext: arg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbePhase {
    /// Scalar maps at the ends of each class interval, with both signs.
    Vertex,
    /// Seeded random class members in dimension 1 or 2.
    Random,
}

/// A run that undershoots the lower bound, with everything needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub phase: ProbePhase,
    /// Position within its phase. For random samples this is also the
    /// ChaCha8 stream id under `seed`.
    pub sample: usize,
    pub seed: u64,
    pub index: usize,
    pub ratio: f64,
    pub bound: f64,
    pub ln_ratio: f64,
    pub ln_bound: f64,
    pub config: SchemeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub scheme: Scheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<LowerVariant>,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub vertices: usize,
    pub counterexample: Option<Counterexample>,
}

/// Searches class-conforming assignments for `r_{n+1} < L_n·(1 − 1e−9)`.
///
/// All vertex assignments are tried first, then `samples` random ones. The
/// reported counterexample is the first in that order, independent of how
/// the random phase is scheduled across threads.
#[allow(clippy::too_many_arguments)]
pub fn probe_lower_violation(
    scheme: Scheme,
    params: &SchemeParams,
    a: &ScheduleSpec,
    b: &ScheduleSpec,
    n: usize,
    samples: usize,
    seed: u64,
    variant: LowerVariant,
) -> Result<ProbeReport> {
    if samples == 0 {
        return Err(LabError::InvalidParams("probe needs at least one sample".into()));
    }
    let lower = bound_series(scheme, Side::Lower, variant, params, a, b, n)?;
    let ctx = ProbeCtx { scheme, params: *params, a, b, n, seed, lower: &lower };

    let vertices = role_candidates(scheme, params, |c| {
        let mut v = vec![c.alpha, c.kappa, -c.alpha, -c.kappa];
        let mut seen: Vec<f64> = Vec::new();
        v.retain(|x| {
            let fresh = !seen.iter().any(|s| s.to_bits() == x.to_bits());
            seen.push(*x);
            fresh
        });
        v
    })?;
    let mut assignments = Vec::new();
    for_each_assignment(&vertices, |c| assignments.push(*c));

    let mut found = None;
    for (i, c) in assignments.iter().enumerate() {
        if let Some(cx) = ctx.vertex(i, c)? {
            found = Some(cx);
            break;
        }
    }
    if found.is_none() {
        found = ctx.random_phase(samples)?;
    }
    Ok(ProbeReport {
        scheme,
        variant: (scheme == Scheme::IG).then_some(variant),
        horizon: n,
        samples,
        seed,
        vertices: assignments.len(),
        counterexample: found,
    })
}

struct ProbeCtx<'a> {
    scheme: Scheme,
    params: SchemeParams,
    a: &'a ScheduleSpec,
    b: &'a ScheduleSpec,
    n: usize,
    seed: u64,
    lower: &'a BoundSeries,
}

impl ProbeCtx<'_> {
    fn config(&self, roles: Roles, x0: Vec<f64>) -> SchemeConfig {
        SchemeConfig {
            scheme: self.scheme,
            roles,
            params: self.params,
            schedule_a: self.a.clone(),
            schedule_b: self.b.clone(),
            x0,
            horizon: self.n + 1,
        }
    }

    fn check(&self, phase: ProbePhase, sample: usize, config: SchemeConfig) -> Result<Option<Counterexample>> {
        let traj = iterations::run(&config)?;
        let ln_r = traj.ln_ratios();
        for k in 0..=self.n {
            let ln_l = self.lower.ln_cumulative[k];
            if undershoots_lower(ln_r[k + 1], ln_l) {
                return Ok(Some(Counterexample {
                    phase,
                    sample,
                    seed: self.seed,
                    index: k,
                    ratio: ln_r[k + 1].exp(),
                    bound: ln_l.exp(),
                    ln_ratio: ln_r[k + 1],
                    ln_bound: ln_l,
                    config,
                }));
            }
        }
        Ok(None)
    }

    fn vertex(&self, i: usize, c: &[f64; 4]) -> Result<Option<Counterexample>> {
        let domain = DomainSpec::unit_half(1);
        let mk = |v: f64| MappingSpec::scaling(v, &domain);
        let roles = match self.scheme {
            Scheme::G => Roles { t1: mk(c[0])?, t2: Some(mk(c[1])?), s1: Some(mk(c[2])?), s2: Some(mk(c[3])?) },
            _ => Roles { t1: mk(c[0])?, t2: Some(mk(c[1])?), s1: None, s2: None },
        };
        self.check(ProbePhase::Vertex, i, self.config(roles, vec![0.8 * domain.radius()]))
    }

    fn random(&self, i: usize) -> Result<Option<Counterexample>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let domain = DomainSpec::unit_half(1 + i % 2);
        let roles = mappings::random_roles(self.scheme, &self.params, &domain, &mut rng)?;
        let x0 = loop {
            let x = domain.sample(&mut rng);
            if norm(&x) > 1e-6 {
                break x;
            }
        };
        self.check(ProbePhase::Random, i, self.config(roles, x0))
    }

    #[cfg(feature = "parallel")]
    fn random_phase(&self, samples: usize) -> Result<Option<Counterexample>> {
        use rayon::prelude::*;
        (0..samples).into_par_iter().find_map_first(|i| self.random(i).transpose()).transpose()
    }

    #[cfg(not(feature = "parallel"))]
    fn random_phase(&self, samples: usize) -> Result<Option<Counterexample>> {
        for i in 0..samples {
            if let Some(cx) = self.random(i)? {
                return Ok(Some(cx));
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> ScheduleSpec {
        ScheduleSpec::constant(v)
    }

    fn ig(a1: f64, a2: f64, k1: f64) -> SchemeParams {
        SchemeParams { alpha1: a1, alpha2: a2, kappa1: k1, ..Default::default() }
    }

    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() < 1e-15
    }

    #[test]
    fn upper_ig_examples() {
        let u = ueb_ig(&ig(1.0, 1.0, 0.0), &ScheduleSpec::harmonic(), &c(0.3), 40).unwrap();
        assert!(u.values().iter().all(|v| *v == 1.0));
        let u = ueb_ig(&ig(0.5, 0.8, 0.0), &c(0.5), &c(0.25), 0).unwrap();
        assert!(close(u.value(0), 0.43125));
        let u = ueb_ig(&ig(0.3, 0.9, 0.0), &c(0.0), &c(1.0), 2).unwrap();
        assert!(close(u.value(2), 0.729));
    }

    #[test]
    fn lower_ig_examples() {
        let p = ig(0.9, 0.8, 0.6);
        let l = leb_ig(&p, &c(0.2), &c(0.2), 0, LowerVariant::Paper).unwrap();
        assert!(close(l.value(0), 0.2176));

        let p = ig(0.6, 0.8, 0.6);
        let paper = leb_ig(&p, &c(0.1), &c(0.05), 10, LowerVariant::Paper).unwrap();
        let safe = leb_ig(&p, &c(0.1), &c(0.05), 10, LowerVariant::Safe).unwrap();
        assert_eq!(paper.factors, safe.factors);

        let l = leb_ig(&ig(0.9, 0.5, 0.7), &c(0.0), &c(0.0), 4, LowerVariant::Paper).unwrap();
        assert!((l.value(4) - 0.7_f64.powi(5)).abs() < 1e-15);

        let p = ig(1.0, 0.0, 0.5);
        let l = leb_ig(&p, &c(0.45), &c(0.0), 0, LowerVariant::Paper).unwrap();
        assert!(close(l.value(0), 0.1625));
    }

    #[test]
    fn lower_ig_preconditions_name_the_index() {
        let p = ig(0.9, 0.8, 0.6);
        let a = ScheduleSpec::Explicit { values: vec![0.1, 0.1, 0.7], tail: 0.1 };
        match leb_ig(&p, &a, &c(0.1), 5, LowerVariant::Paper).unwrap_err() {
            LabError::Precondition { index, .. } => assert_eq!(index, Some(2)),
            e => panic!("{e}"),
        }
        // 0.55 passes the paper check but not a_k <= 1/(1+α₁).
        let p = ig(1.0, 0.8, 0.6);
        assert!(leb_ig(&p, &c(0.55), &c(0.1), 3, LowerVariant::Paper).is_ok());
        assert!(leb_ig(&p, &c(0.55), &c(0.1), 3, LowerVariant::Safe).is_err());
        // κ₁ = α₂ = 0 gives a 0/0 threshold, which never holds.
        assert!(leb_ig(&ig(0.5, 0.0, 0.0), &c(0.1), &c(0.0), 3, LowerVariant::Paper).is_err());
    }

    #[test]
    fn g_examples() {
        let p = SchemeParams { beta1: 0.9, alpha1: 0.5, beta2: 0.8, alpha2: 0.6, ..Default::default() };
        assert!(close(ueb_g(&p, &c(0.5), &c(0.5), 0).unwrap().value(0), 0.49));
        let p = SchemeParams { beta1: 0.7, alpha1: 0.7, beta2: 0.4, alpha2: 0.4, ..Default::default() };
        let u = ueb_g(&p, &ScheduleSpec::harmonic(), &c(0.9), 3).unwrap();
        assert!((u.value(3) - 0.28_f64.powi(4)).abs() < 1e-15);

        let p = SchemeParams { kappa1: 0.8, alpha1: 0.4, kappa2: 0.9, alpha2: 0.3, ..Default::default() };
        assert!(close(leb_g(&p, &c(0.25), &c(0.5), 0).unwrap().value(0), 0.15));
        let edge = leb_g(&p, &c(0.8 / 1.2), &c(0.5), 3).unwrap();
        assert!(edge.values().iter().all(|v| *v == 0.0));

        let p = SchemeParams { kappa1: 1.0, kappa2: 1.0, ..Default::default() };
        assert!(close(leb_g(&p, &c(0.25), &c(0.25), 0).unwrap().value(0), 0.25));
        assert!(leb_g(&p, &c(0.6), &c(0.25), 0).is_err());
    }

    #[test]
    fn i_and_im_examples() {
        let p = ig(0.5, 0.5, 0.0);
        assert!(close(leb_i(&p, &c(0.2), &c(0.2), 0).unwrap().value(0), 0.71));
        let l = leb_im(&ig(0.5, 0.7, 0.0), &ScheduleSpec::harmonic(), &c(0.0), 3).unwrap();
        for k in 0..=3 {
            assert!(close(l.factors[k], 1.0 - 1.5 / (k as f64 + 1.0)));
        }
        let u = ueb_im(&ig(1.0, 1.0, 0.0), &ScheduleSpec::harmonic(), &c(0.6), 20).unwrap();
        assert!(u.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn nonpositive_factor_poisons_the_tail() {
        let p = ig(0.5, 0.5, 0.0);
        let b = ScheduleSpec::Explicit { values: vec![0.1, 1.0], tail: 0.1 };
        let l = leb_im(&p, &c(0.0), &b, 4).unwrap();
        assert_eq!(l.valid, vec![true, false, false, false, false]);
        assert_eq!(l.values()[1..], [0.0; 4]);
        assert!(l.to_csv().lines().nth(2).unwrap().ends_with(",,false"));
    }

    #[test]
    fn oracle_examples() {
        let o = oracle_extreme_1d(Scheme::IG, &ig(0.5, 0.8, 0.0), &c(0.5), &c(0.25), 0, Side::Upper, 5).unwrap();
        assert!((o.values()[0] - 0.43125).abs() < 1e-15);
        assert_eq!(o.argext[0][..2], [0.5, 0.8]);

        let p = SchemeParams { kappa1: 0.8, alpha1: 0.4, kappa2: 0.9, alpha2: 0.3, beta1: 1.0, beta2: 1.0 };
        let o = oracle_extreme_1d(Scheme::G, &p, &c(0.25), &c(0.5), 0, Side::Lower, 3).unwrap();
        assert!((o.values()[0] - 0.15).abs() < 1e-15);

        let o = oracle_extreme_1d(Scheme::IG, &ig(1.0, 0.0, 0.5), &c(0.45), &c(0.0), 0, Side::Lower, 9).unwrap();
        assert!((o.values()[0] - 0.1).abs() < 1e-12);
        assert_eq!(o.argext[0][0], -1.0);
        assert!(oracle_extreme_1d(Scheme::IG, &ig(1.0, 0.0, 0.5), &c(0.45), &c(0.0), 0, Side::Lower, 2).is_err());
    }

    #[test]
    fn sandwich_marks() {
        let p = ig(0.5, 0.8, 0.0);
        let roles = mappings::witness_upper(Scheme::IG, &p, &DomainSpec::unit_half(1)).unwrap();
        let cfg = iterations::scalar_config(Scheme::IG, roles, p, ScheduleSpec::harmonic(), c(0.25), 0.4, 30);
        let t = iterations::run(&cfg).unwrap();
        let u = ueb_ig(&p, &cfg.schedule_a, &cfg.schedule_b, 29).unwrap();
        let marks = sandwich(&t.ln_ratios(), Some(&u), None);
        assert_eq!(marks.len(), 30);
        assert!(marks.iter().all(|m| *m == SandwichMark::TightUpper));
    }

    #[test]
    fn probe_finds_the_published_counterexample_first() {
        let p = ig(1.0, 0.0, 0.5);
        let r = probe_lower_violation(Scheme::IG, &p, &c(0.45), &c(0.0), 0, 1, 7, LowerVariant::Paper).unwrap();
        let cx = r.counterexample.unwrap();
        assert_eq!(cx.phase, ProbePhase::Vertex);
        assert_eq!(cx.config.roles.t1.lipschitz_interval(), (1.0, 1.0));
        assert!((cx.ratio - 0.1).abs() < 1e-15 && (cx.bound - 0.1625).abs() < 1e-15);
        let rerun = iterations::run(&cx.config).unwrap();
        assert!((rerun.ratios()[1] - 0.1).abs() < 1e-15);
        assert_eq!(cx.config.roles.t1.apply(&[0.4]).unwrap(), vec![-0.4]);

        let r = probe_lower_violation(Scheme::IG, &p, &c(0.45), &c(0.0), 0, 200, 7, LowerVariant::Safe).unwrap();
        assert!(r.counterexample.is_none());
    }

    fn ctx_roles(ctx: &ProbeCtx<'_>, i: usize) -> Roles {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        rng.set_stream(i as u64);
        mappings::random_roles(ctx.scheme, &ctx.params, &DomainSpec::unit_half(1), &mut rng).unwrap()
    }

    #[test]
    fn probe_is_reproducible() {
        let p = ig(0.9, 0.6, 0.3);
        let a = ScheduleSpec::Power { c: 0.3, p: 1.0, q: 1.0 };
        let r1 = probe_lower_violation(Scheme::IG, &p, &a, &c(0.1), 8, 300, 11, LowerVariant::Safe).unwrap();
        let r2 = probe_lower_violation(Scheme::IG, &p, &a, &c(0.1), 8, 300, 11, LowerVariant::Safe).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.counterexample.is_none());

        let lower = leb_ig(&p, &a, &c(0.1), 8, LowerVariant::Safe).unwrap();
        let ctx = ProbeCtx { scheme: Scheme::IG, params: p, a: &a, b: &c(0.1), n: 8, seed: 11, lower: &lower };
        let draw = |i| iterations::run(&ctx.config(Roles { ..ctx_roles(&ctx, i) }, vec![0.1])).unwrap();
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }
}
