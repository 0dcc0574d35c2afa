//! Parameter schedules (a_n), (b_n) in [0, 1] and symbolic series verdicts.
//!
//! Each built-in family has a known limit and a known asymptotic deviation
//! from that limit (exactly constant eventually, geometrically small, or of
//! order n^{-q}). Series verdicts for sums, complements, gaps and affine or
//! product combinations of schedules are decided from that profile; a finite
//! partial sum is reported alongside for orientation only.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Number of terms in the numeric partial-sum probe.
pub const N_PROBE: usize = 1_000_000;
/// Magnitudes at or below this are treated as zero when classifying limits
/// and when checking `value <= threshold` style preconditions.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ScheduleSpec {
    /// `c`
    Constant { c: f64 },
    /// `c / (n + p)^q`
    Power {
        c: f64,
        #[serde(default = "one")]
        p: f64,
        #[serde(default = "one")]
        q: f64,
    },
    /// `c r^n`
    Geometric { c: f64, r: f64 },
    /// The listed values, then `tail` forever.
    Explicit { values: Vec<f64>, tail: f64 },
    /// `threshold − base(n)`.
    Gap { threshold: f64, base: Box<ScheduleSpec> },
}

fn one() -> f64 {
    1.0
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Constant { c: 0.0 }
    }
}

/// How a schedule approaches its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Equal to the limit from some index on.
    Exact,
    /// Deviation decays geometrically.
    Geometric,
    /// Deviation behaves like `coef · n^{-q}`.
    Power { coef: f64, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    pub limit: f64,
    pub tail: Tail,
}

impl Asymptotics {
    fn scaled(self, w: f64) -> Asymptotics {
        Asymptotics {
            limit: w * self.limit,
            tail: match self.tail {
                Tail::Power { coef, q } => Tail::Power { coef: w * coef, q },
                t => t,
            },
        }
    }
}

impl ScheduleSpec {
    pub fn constant(c: f64) -> Self {
        ScheduleSpec::Constant { c }
    }

    /// `1 / (n + 1)`.
    pub fn harmonic() -> Self {
        ScheduleSpec::Power { c: 1.0, p: 1.0, q: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(LabError::InvalidSchedule(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match self {
            ScheduleSpec::Constant { c } => unit("constant c", *c),
            ScheduleSpec::Power { c, p, q } => {
                unit("power c", *c)?;
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(LabError::InvalidSchedule(format!("power p must be >= 1, got {p}")));
                }
                if !(q.is_finite() && *q >= 0.0) {
                    return Err(LabError::InvalidSchedule(format!("power q must be >= 0, got {q}")));
                }
                Ok(())
            }
            ScheduleSpec::Geometric { c, r } => {
                unit("geometric c", *c)?;
                if !(r.is_finite() && (0.0..1.0).contains(r)) {
                    return Err(LabError::InvalidSchedule(format!("geometric r must lie in [0, 1), got {r}")));
                }
                Ok(())
            }
            ScheduleSpec::Explicit { values, tail } => {
                for (i, v) in values.iter().enumerate() {
                    unit(&format!("explicit value #{i}"), *v)?;
                }
                unit("explicit tail", *tail)
            }
            ScheduleSpec::Gap { threshold, base } => {
                base.validate()?;
                if threshold - base.sup() < -ZERO_SNAP || threshold - base.inf() > 1.0 + ZERO_SNAP {
                    return Err(LabError::InvalidSchedule(format!(
                        "gap {threshold} - base leaves [0, 1] (base ranges over [{}, {}])",
                        base.inf(),
                        base.sup()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn value_at(&self, n: usize) -> f64 {
        match self {
            ScheduleSpec::Constant { c } => *c,
            ScheduleSpec::Power { c, p, q } => c / (n as f64 + p).powf(*q),
            ScheduleSpec::Geometric { c, r } => c * r.powi(n.min(i32::MAX as usize) as i32),
            ScheduleSpec::Explicit { values, tail } => values.get(n).copied().unwrap_or(*tail),
            ScheduleSpec::Gap { threshold, base } => (threshold - base.value_at(n)).max(0.0),
        }
    }

    /// First `len` terms.
    pub fn values(&self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.value_at(n)).collect()
    }

    /// Supremum over all n; attained for every family.
    pub fn sup(&self) -> f64 {
        match self {
            ScheduleSpec::Constant { c } => *c,
            ScheduleSpec::Power { c, p, q } => c / p.powf(*q),
            ScheduleSpec::Geometric { c, .. } => *c,
            ScheduleSpec::Explicit { values, tail } => values.iter().copied().fold(*tail, f64::max),
            ScheduleSpec::Gap { threshold, base } => (threshold - base.inf()).max(0.0),
        }
    }

    /// Infimum over all n, including the limit.
    pub fn inf(&self) -> f64 {
        match self {
            ScheduleSpec::Constant { c } => *c,
            ScheduleSpec::Power { c, q, .. } => {
                if *q > 0.0 {
                    0.0
                } else {
                    *c
                }
            }
            ScheduleSpec::Geometric { .. } => 0.0,
            ScheduleSpec::Explicit { values, tail } => values.iter().copied().fold(*tail, f64::min),
            ScheduleSpec::Gap { threshold, base } => (threshold - base.sup()).max(0.0),
        }
    }

    /// First index where `value_at` attains [`Self::sup`].
    pub fn argsup(&self) -> usize {
        match self {
            ScheduleSpec::Explicit { values, tail } => {
                let s = self.sup();
                values.iter().position(|v| *v == s).unwrap_or_else(|| {
                    debug_assert_eq!(*tail, s);
                    values.len()
                })
            }
            _ => 0,
        }
    }

    pub fn limit(&self) -> f64 {
        self.asymptotics().limit
    }

    /// Number of leading terms that can differ from the family's regular
    /// pattern; scanning this prefix plus a couple of indices catches every
    /// exceptional term value.
    pub fn irregular_prefix(&self) -> usize {
        match self {
            ScheduleSpec::Explicit { values, .. } => values.len(),
            ScheduleSpec::Gap { base, .. } => base.irregular_prefix(),
            _ => 0,
        }
    }

    pub fn asymptotics(&self) -> Asymptotics {
        match self {
            ScheduleSpec::Constant { c } => Asymptotics { limit: *c, tail: Tail::Exact },
            ScheduleSpec::Power { c, q, .. } => {
                if *q == 0.0 {
                    Asymptotics { limit: *c, tail: Tail::Exact }
                } else if *c == 0.0 {
                    Asymptotics { limit: 0.0, tail: Tail::Exact }
                } else {
                    Asymptotics { limit: 0.0, tail: Tail::Power { coef: *c, q: *q } }
                }
            }
            ScheduleSpec::Geometric { c, r } => {
                Asymptotics { limit: 0.0, tail: if *c == 0.0 || *r == 0.0 { Tail::Exact } else { Tail::Geometric } }
            }
            ScheduleSpec::Explicit { tail, .. } => Asymptotics { limit: *tail, tail: Tail::Exact },
            ScheduleSpec::Gap { threshold, base } => {
                let b = base.asymptotics().scaled(-1.0);
                Asymptotics { limit: threshold + b.limit, tail: b.tail }
            }
        }
    }

    /// Whether every term equals `v` (within [`ZERO_SNAP`]).
    pub fn is_identically(&self, v: f64) -> bool {
        let near = |x: f64| (x - v).abs() <= ZERO_SNAP;
        match self {
            ScheduleSpec::Constant { c } => near(*c),
            ScheduleSpec::Power { c, q, .. } => near(*c) && (*q == 0.0 || *c == 0.0),
            ScheduleSpec::Geometric { c, .. } => *c == 0.0 && near(0.0),
            ScheduleSpec::Explicit { values, tail } => near(*tail) && values.iter().all(|x| near(*x)),
            ScheduleSpec::Gap { threshold, base } => base.is_identically(threshold - v),
        }
    }

    /// `Σ_{n < terms} value_at(n)`.
    pub fn partial_sum(&self, terms: usize) -> f64 {
        (0..terms).map(|n| self.value_at(n)).sum()
    }

    pub fn describe(&self) -> String {
        match self {
            ScheduleSpec::Constant { c } => format!("constant {c}"),
            ScheduleSpec::Power { c, p, q } => format!("{c}/(n+{p})^{q}"),
            ScheduleSpec::Geometric { c, r } => format!("{c}*{r}^n"),
            ScheduleSpec::Explicit { values, tail } => format!("explicit {values:?} then {tail}"),
            ScheduleSpec::Gap { threshold, base } => format!("{threshold} - ({})", base.describe()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Divergent,
    Convergent,
    AllZero,
    Unknown,
}

/// Verdict on a series of nonnegative terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    pub rationale: String,
    pub partial_sum_probe: f64,
}

impl SeriesVerdict {
    pub fn diverges(&self) -> bool {
        self.verdict == Verdict::Divergent
    }
}

/// `Σ_n schedule(n)`.
pub fn classify_series(schedule: &ScheduleSpec) -> SeriesVerdict {
    let probe = schedule.partial_sum(N_PROBE);
    let (verdict, rationale) = if schedule.is_identically(0.0) {
        (Verdict::AllZero, "every term is zero".to_string())
    } else {
        nonnegative_verdict(schedule.asymptotics(), &schedule.describe())
    };
    SeriesVerdict { verdict, rationale, partial_sum_probe: probe }
}

fn nonnegative_verdict(asym: Asymptotics, what: &str) -> (Verdict, String) {
    if asym.limit > ZERO_SNAP {
        return (Verdict::Divergent, format!("terms of {what} tend to {} > 0", asym.limit));
    }
    match asym.tail {
        Tail::Exact => (Verdict::Convergent, format!("terms of {what} are eventually zero")),
        Tail::Geometric => (Verdict::Convergent, format!("terms of {what} decay geometrically")),
        Tail::Power { coef, q } if coef > 0.0 && q <= 1.0 => {
            (Verdict::Divergent, format!("terms of {what} behave like {coef} n^-{q} with q <= 1"))
        }
        Tail::Power { q, .. } if q > 1.0 => (Verdict::Convergent, format!("terms of {what} are O(n^-{q}) with q > 1")),
        Tail::Power { .. } => (Verdict::Unknown, format!("no symbolic rule for {what}")),
    }
}

/// A nonnegative series built from a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "series", content = "schedule", rename_all = "kebab-case")]
pub enum SeriesRef {
    Schedule(ScheduleSpec),
    OneMinus(ScheduleSpec),
}

impl SeriesRef {
    fn asymptotics(&self) -> Asymptotics {
        match self {
            SeriesRef::Schedule(s) => s.asymptotics(),
            SeriesRef::OneMinus(s) => {
                let a = s.asymptotics().scaled(-1.0);
                Asymptotics { limit: 1.0 + a.limit, tail: a.tail }
            }
        }
    }

    fn is_all_zero(&self) -> bool {
        match self {
            SeriesRef::Schedule(s) => s.is_identically(0.0),
            SeriesRef::OneMinus(s) => s.is_identically(1.0),
        }
    }

    fn value_at(&self, n: usize) -> f64 {
        match self {
            SeriesRef::Schedule(s) => s.value_at(n),
            SeriesRef::OneMinus(s) => 1.0 - s.value_at(n),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SeriesRef::Schedule(s) => format!("sum {}", s.describe()),
            SeriesRef::OneMinus(s) => format!("sum 1 - ({})", s.describe()),
        }
    }

    pub fn classify(&self) -> SeriesVerdict {
        let probe = (0..N_PROBE).map(|n| self.value_at(n)).sum();
        let (verdict, rationale) = if self.is_all_zero() {
            (Verdict::AllZero, format!("every term of {} is zero", self.describe()))
        } else {
            nonnegative_verdict(self.asymptotics(), &self.describe())
        };
        SeriesVerdict { verdict, rationale, partial_sum_probe: probe }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSeries {
    pub weight: f64,
    pub series: SeriesRef,
}

/// `Σ_i w_i Σ_n s_i(n)` with `w_i >= 0`: divergent iff some positively
/// weighted addend diverges.
pub fn classify_weighted_combination(terms: &[WeightedSeries]) -> Result<SeriesVerdict> {
    if let Some(t) = terms.iter().find(|t| !(t.weight >= 0.0 && t.weight.is_finite())) {
        return Err(LabError::InvalidParams(format!("weights must be >= 0, got {}", t.weight)));
    }
    let mut probe = 0.0;
    let mut unknown = None;
    let mut divergent = None;
    let mut any_nonzero = false;
    for (i, t) in terms.iter().enumerate() {
        if t.weight == 0.0 {
            continue;
        }
        let v = t.series.classify();
        probe += t.weight * v.partial_sum_probe;
        match v.verdict {
            Verdict::Divergent if divergent.is_none() => {
                divergent = Some(format!("term #{i} ({}) diverges: {}", t.series.describe(), v.rationale))
            }
            Verdict::Unknown if unknown.is_none() => unknown = Some(v.rationale),
            _ => {}
        }
        if v.verdict != Verdict::AllZero {
            any_nonzero = true;
        }
    }
    let (verdict, rationale) = match (divergent, unknown) {
        (Some(why), _) => (Verdict::Divergent, why),
        (None, Some(why)) => (Verdict::Unknown, why),
        (None, None) if any_nonzero => (Verdict::Convergent, "every positively weighted addend converges".to_string()),
        (None, None) => (Verdict::Convergent, "the combination is identically zero".to_string()),
    };
    Ok(SeriesVerdict { verdict, rationale, partial_sum_probe: probe })
}

/// Verdict on whether a possibly sign-indefinite series sums to `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignedVerdict {
    PlusInfinity,
    MinusInfinity,
    Finite,
    Unknown,
}

fn combine_tails(parts: &[(f64, Tail)]) -> Option<Tail> {
    let powers: Vec<(f64, f64)> = parts
        .iter()
        .filter_map(|(w, t)| match t {
            Tail::Power { coef, q } if w * coef != 0.0 => Some((w * coef, *q)),
            _ => None,
        })
        .collect();
    if let Some(qmin) = powers.iter().map(|p| p.1).reduce(f64::min) {
        let coef: f64 = powers.iter().filter(|p| p.1 == qmin).map(|p| p.0).sum();
        let scale: f64 = powers.iter().filter(|p| p.1 == qmin).map(|p| p.0.abs()).sum();
        if coef.abs() <= 1e-12 * scale {
            return None;
        }
        return Some(Tail::Power { coef, q: qmin });
    }
    if parts.iter().any(|(w, t)| *w != 0.0 && *t == Tail::Geometric) {
        Some(Tail::Geometric)
    } else {
        Some(Tail::Exact)
    }
}

fn signed_from(asym: Option<Asymptotics>) -> SignedVerdict {
    let Some(asym) = asym else {
        return SignedVerdict::Unknown;
    };
    if asym.limit > ZERO_SNAP {
        return SignedVerdict::PlusInfinity;
    }
    if asym.limit < -ZERO_SNAP {
        return SignedVerdict::MinusInfinity;
    }
    match asym.tail {
        Tail::Exact | Tail::Geometric => SignedVerdict::Finite,
        Tail::Power { q, .. } if q > 1.0 => SignedVerdict::Finite,
        Tail::Power { coef, .. } if coef > 0.0 => SignedVerdict::PlusInfinity,
        Tail::Power { .. } => SignedVerdict::MinusInfinity,
    }
}

/// `Σ_n [c0 + ca·a_n + cb·b_n]`.
pub fn classify_affine_series(c0: f64, ca: f64, a: &ScheduleSpec, cb: f64, b: &ScheduleSpec) -> SignedVerdict {
    let (aa, ab) = (a.asymptotics(), b.asymptotics());
    let limit = c0 + ca * aa.limit + cb * ab.limit;
    let tail = combine_tails(&[(ca, aa.tail), (cb, ab.tail)]);
    signed_from(tail.map(|tail| Asymptotics { limit, tail }))
}

/// `Σ_n a_n b_n`.
pub fn classify_product_series(a: &ScheduleSpec, b: &ScheduleSpec) -> SeriesVerdict {
    let probe = (0..N_PROBE).map(|n| a.value_at(n) * b.value_at(n)).sum();
    let what = format!("({})*({})", a.describe(), b.describe());
    if a.is_identically(0.0) || b.is_identically(0.0) {
        return SeriesVerdict {
            verdict: Verdict::AllZero,
            rationale: format!("every term of {what} is zero"),
            partial_sum_probe: probe,
        };
    }
    let (aa, ab) = (a.asymptotics(), b.asymptotics());
    let za = aa.limit.abs() <= ZERO_SNAP;
    let zb = ab.limit.abs() <= ZERO_SNAP;
    let asym = match (za, zb) {
        (false, false) => Asymptotics { limit: aa.limit * ab.limit, tail: Tail::Exact },
        (false, true) => ab.scaled(aa.limit),
        (true, false) => aa.scaled(ab.limit),
        (true, true) => {
            let tail = match (aa.tail, ab.tail) {
                (Tail::Exact, _) | (_, Tail::Exact) => Tail::Exact,
                (Tail::Geometric, _) | (_, Tail::Geometric) => Tail::Geometric,
                (Tail::Power { coef: c1, q: q1 }, Tail::Power { coef: c2, q: q2 }) => {
                    Tail::Power { coef: c1 * c2, q: q1 + q2 }
                }
            };
            Asymptotics { limit: 0.0, tail }
        }
    };
    let (verdict, rationale) = nonnegative_verdict(asym, &what);
    SeriesVerdict { verdict, rationale, partial_sum_probe: probe }
}

/// `threshold − a_n` as a schedule; requires `a_n <= threshold` for all n.
pub fn gap_schedule(schedule: &ScheduleSpec, threshold: f64) -> Result<ScheduleSpec> {
    schedule.validate()?;
    let sup = schedule.sup();
    if sup.is_nan() || threshold.is_nan() || sup > threshold + ZERO_SNAP {
        return Err(LabError::precondition(
            "schedule <= threshold",
            Some(schedule.argsup()),
            format!("supremum {sup} of {} exceeds threshold {threshold}", schedule.describe()),
        ));
    }
    let gap = |v: f64| {
        let g = threshold - v;
        if g.abs() <= ZERO_SNAP {
            0.0
        } else {
            g
        }
    };
    let out = match schedule {
        ScheduleSpec::Constant { c } => ScheduleSpec::Constant { c: gap(*c) },
        ScheduleSpec::Power { c, q, .. } if *q == 0.0 => ScheduleSpec::Constant { c: gap(*c) },
        ScheduleSpec::Explicit { values, tail } => {
            ScheduleSpec::Explicit { values: values.iter().map(|v| gap(*v)).collect(), tail: gap(*tail) }
        }
        other => ScheduleSpec::Gap { threshold, base: Box::new(other.clone()) },
    };
    out.validate()?;
    Ok(out)
}

/// `(x/(x+1), ln(1+x), x)`, ordered for every `x > -1`.
pub fn log_sandwich(x: f64) -> (f64, f64, f64) {
    (x / (x + 1.0), x.ln_1p(), x)
}

/// Partial sums of `a_n` and `a_n / (1 − u_n a_n)` up to `terms`, plus the
/// margin `m = min (1 − u_n a_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSums {
    pub plain: f64,
    pub weighted: f64,
    pub margin: f64,
}

pub fn weighted_partial_sums(a: &ScheduleSpec, u: &ScheduleSpec, terms: usize) -> Result<WeightedSums> {
    let empty = WeightedSums { plain: 0.0, weighted: 0.0, margin: f64::INFINITY };
    Ok(weighted_prefix_sums(a, u, terms)?.last().copied().unwrap_or(empty))
}

/// Every prefix `N = 1..=terms` of [`weighted_partial_sums`], with the margin
/// taken over that prefix.
pub fn weighted_prefix_sums(a: &ScheduleSpec, u: &ScheduleSpec, terms: usize) -> Result<Vec<WeightedSums>> {
    let mut acc = WeightedSums { plain: 0.0, weighted: 0.0, margin: f64::INFINITY };
    let mut out = Vec::with_capacity(terms);
    for n in 0..terms {
        let (an, un) = (a.value_at(n), u.value_at(n));
        let denom = 1.0 - un * an;
        if denom <= 0.0 {
            return Err(LabError::precondition("1 - u_n a_n > 0", Some(n), format!("1 - {un}*{an} = {denom}")));
        }
        acc.margin = acc.margin.min(denom);
        acc.plain += an;
        acc.weighted += an / denom;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(c: f64, p: f64, q: f64) -> ScheduleSpec {
        ScheduleSpec::Power { c, p, q }
    }

    #[test]
    fn term_values() {
        assert_eq!(ScheduleSpec::harmonic().value_at(3), 0.25);
        assert_eq!(ScheduleSpec::constant(0.2).value_at(17), 0.2);
        assert_eq!(ScheduleSpec::Geometric { c: 0.5, r: 0.5 }.value_at(2), 0.125);
        let e = ScheduleSpec::Explicit { values: vec![0.3, 0.1], tail: 0.7 };
        assert_eq!(e.values(4), vec![0.3, 0.1, 0.7, 0.7]);
    }

    #[test]
    fn validation_catches_out_of_range_families() {
        assert!(ScheduleSpec::constant(1.2).validate().is_err());
        assert!(power(1.0, 0.5, 1.0).validate().is_err());
        assert!(ScheduleSpec::Geometric { c: 0.5, r: 1.0 }.validate().is_err());
        assert!(ScheduleSpec::Explicit { values: vec![-0.1], tail: 0.0 }.validate().is_err());
        assert!(power(1.0, 1.0, 0.0).validate().is_ok());
    }

    #[test]
    fn basic_series_verdicts() {
        let h = classify_series(&ScheduleSpec::harmonic());
        assert_eq!(h.verdict, Verdict::Divergent);
        assert!(h.partial_sum_probe > 14.0);
        assert_eq!(classify_series(&power(1.0, 1.0, 2.0)).verdict, Verdict::Convergent);
        assert_eq!(classify_series(&ScheduleSpec::constant(0.0)).verdict, Verdict::AllZero);
        assert_eq!(classify_series(&ScheduleSpec::constant(0.3)).verdict, Verdict::Divergent);
        assert_eq!(classify_series(&power(0.5, 3.0, 0.5)).verdict, Verdict::Divergent);
        assert_eq!(classify_series(&ScheduleSpec::Geometric { c: 0.9, r: 0.99 }).verdict, Verdict::Convergent);
        let e = ScheduleSpec::Explicit { values: vec![0.5, 0.5], tail: 0.0 };
        assert_eq!(classify_series(&e).verdict, Verdict::Convergent);
        let e = ScheduleSpec::Explicit { values: vec![0.0], tail: 0.2 };
        assert_eq!(classify_series(&e).verdict, Verdict::Divergent);
    }

    #[test]
    fn weighted_combination_rules() {
        let terms = vec![
            WeightedSeries { weight: 0.5, series: SeriesRef::Schedule(ScheduleSpec::harmonic()) },
            WeightedSeries { weight: 0.5, series: SeriesRef::OneMinus(ScheduleSpec::constant(1.0)) },
            WeightedSeries { weight: 0.2, series: SeriesRef::Schedule(ScheduleSpec::constant(1.0)) },
        ];
        let v = classify_weighted_combination(&terms).unwrap();
        assert_eq!(v.verdict, Verdict::Divergent);

        let zero: Vec<_> = terms.iter().map(|t| WeightedSeries { weight: 0.0, ..t.clone() }).collect();
        assert_eq!(classify_weighted_combination(&zero).unwrap().verdict, Verdict::Convergent);

        let geo = vec![WeightedSeries {
            weight: 1.0,
            series: SeriesRef::Schedule(ScheduleSpec::Geometric { c: 1.0, r: 0.5 }),
        }];
        assert_eq!(classify_weighted_combination(&geo).unwrap().verdict, Verdict::Convergent);

        let bad = vec![WeightedSeries { weight: -1.0, series: SeriesRef::Schedule(ScheduleSpec::harmonic()) }];
        assert!(classify_weighted_combination(&bad).is_err());
    }

    #[test]
    fn complements_of_families() {
        let c = |s: ScheduleSpec| SeriesRef::OneMinus(s).classify().verdict;
        assert_eq!(c(ScheduleSpec::constant(0.9)), Verdict::Divergent);
        assert_eq!(c(ScheduleSpec::constant(1.0)), Verdict::AllZero);
        assert_eq!(c(ScheduleSpec::harmonic()), Verdict::Divergent);
        assert_eq!(c(ScheduleSpec::Explicit { values: vec![0.5], tail: 1.0 }), Verdict::Convergent);
    }

    #[test]
    fn gap_schedules() {
        let thr = 0.1 / (0.1 + 1.0);
        let err = gap_schedule(&ScheduleSpec::constant(0.1), thr).unwrap_err();
        assert!(matches!(err, LabError::Precondition { .. }));

        let g = gap_schedule(&ScheduleSpec::constant(0.05), thr).unwrap();
        assert!((g.value_at(0) - (1.0 / 11.0 - 0.05)).abs() < 1e-15);
        assert!((g.value_at(0) - 0.040_909_090_909_090_91).abs() < 1e-12);
        assert_eq!(classify_series(&g).verdict, Verdict::Divergent);

        let g = gap_schedule(&ScheduleSpec::constant(thr), thr).unwrap();
        assert_eq!(classify_series(&g).verdict, Verdict::AllZero);

        let g = gap_schedule(&ScheduleSpec::harmonic(), 1.0).unwrap();
        assert_eq!(g.value_at(1), 0.5);
        assert_eq!(classify_series(&g).verdict, Verdict::Divergent);
    }

    #[test]
    fn affine_series_signs() {
        let k = ScheduleSpec::constant(0.2);
        assert_eq!(classify_affine_series(0.6, 0.0, &k, -1.5 / 0.71, &k), SignedVerdict::PlusInfinity);
        assert_eq!(classify_affine_series(-0.1, 0.0, &k, 0.0, &k), SignedVerdict::MinusInfinity);
        assert_eq!(classify_affine_series(0.0, 1.0, &k, -1.0, &k), SignedVerdict::Finite);
        let h = ScheduleSpec::harmonic();
        assert_eq!(classify_affine_series(0.0, 1.0, &h, 0.0, &k), SignedVerdict::PlusInfinity);
        assert_eq!(classify_affine_series(0.0, -2.0, &h, 0.0, &k), SignedVerdict::MinusInfinity);
        // leading n^-1 terms cancel exactly: undecided
        assert_eq!(classify_affine_series(0.0, 1.0, &h, -1.0, &h), SignedVerdict::Unknown);
    }

    #[test]
    fn product_series() {
        let h = ScheduleSpec::harmonic();
        assert_eq!(classify_product_series(&h, &h).verdict, Verdict::Convergent);
        assert_eq!(classify_product_series(&h, &ScheduleSpec::constant(0.5)).verdict, Verdict::Divergent);
        let root = power(1.0, 1.0, 0.5);
        assert_eq!(classify_product_series(&root, &root).verdict, Verdict::Divergent);
        assert_eq!(classify_product_series(&h, &ScheduleSpec::constant(0.0)).verdict, Verdict::AllZero);
    }

    #[test]
    fn log_sandwich_orders() {
        for x in [-0.9, -0.5, 0.0, 0.3, 5.0, 10.0] {
            let (lo, mid, hi) = log_sandwich(x);
            assert!(lo <= mid + 1e-15 && mid <= hi + 1e-15);
        }
    }

    #[test]
    fn weighted_sums_need_positive_margin() {
        let a = ScheduleSpec::constant(1.0);
        let u = ScheduleSpec::constant(1.0);
        assert!(weighted_partial_sums(&a, &u, 3).is_err());
        let s = weighted_partial_sums(&ScheduleSpec::harmonic(), &ScheduleSpec::constant(0.5), 10).unwrap();
        assert!(s.plain <= s.weighted && s.weighted <= s.plain / s.margin);
    }
}
