//! The iteration schemes and their recorded trajectories.
//!
//! With `a = a_n`, `b = b_n`:
//!
//! | scheme | intermediate                | next iterate                  |
//! |--------|-----------------------------|-------------------------------|
//! | PICARD | –                           | `T x`                         |
//! | MANN   | –                           | `(1−a) x + a T x`             |
//! | I      | `y = (1−a) x + a T₁ x`      | `(1−b) x + b T₂ y`            |
//! | IM     | `y = (1−a) x + a T₁ x`      | `(1−b) y + b T₂ y`            |
//! | IG     | `y = (1−a) x + a T₁ x`      | `(1−b) T₁ y + b T₂ y`         |
//! | G      | `y = (1−a) S₁ x + a T₁ x`   | `(1−b) S₂ y + b T₂ y`         |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mappings::{self, norm, norm_diff, DomainSpec, MappingSpec, NonexpansiveClass};
use crate::schedules::ScheduleSpec;
use crate::table::{self, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "PICARD")]
    Picard,
    #[serde(rename = "MANN")]
    Mann,
    I,
    IM,
    IG,
    G,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Picard => "PICARD",
            Scheme::Mann => "MANN",
            Scheme::I => "I",
            Scheme::IM => "IM",
            Scheme::IG => "IG",
            Scheme::G => "G",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PICARD" => Ok(Scheme::Picard),
            "MANN" => Ok(Scheme::Mann),
            "I" => Ok(Scheme::I),
            "IM" => Ok(Scheme::IM),
            "IG" => Ok(Scheme::IG),
            "G" => Ok(Scheme::G),
            _ => Err(LabError::UnsupportedScheme(s.to_string())),
        }
    }
}

impl Scheme {
    pub fn is_two_step(self) -> bool {
        matches!(self, Scheme::I | Scheme::IM | Scheme::IG | Scheme::G)
    }

    /// Declared class of each role.
    pub fn role_classes(self, p: &SchemeParams) -> Result<RoleClasses> {
        let class = NonexpansiveClass::new;
        Ok(match self {
            Scheme::Picard | Scheme::Mann => {
                RoleClasses { t1: class(p.kappa1, p.alpha1)?, t2: None, s1: None, s2: None }
            }
            Scheme::I | Scheme::IM | Scheme::IG => {
                RoleClasses { t1: class(p.kappa1, p.alpha1)?, t2: Some(class(p.kappa2, p.alpha2)?), s1: None, s2: None }
            }
            Scheme::G => RoleClasses {
                t1: class(0.0, p.alpha1)?,
                t2: Some(class(0.0, p.alpha2)?),
                s1: Some(class(p.kappa1, p.beta1)?),
                s2: Some(class(p.kappa2, p.beta2)?),
            },
        })
    }
}

/// Class moduli shared by the schemes. For I/IM/IG, `(κ₁, α₁)` and
/// `(κ₂, α₂)` describe T₁ and T₂. For G they describe S₁ ∈ 𝒩_{κ₁,β₁},
/// S₂ ∈ 𝒩_{κ₂,β₂}, T₁ ∈ 𝒩_{α₁}, T₂ ∈ 𝒩_{α₂}. PICARD and MANN read
/// `(κ₁, α₁)` for their single map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams { alpha1: 1.0, alpha2: 1.0, beta1: 1.0, beta2: 1.0, kappa1: 0.0, kappa2: 0.0 }
    }
}

impl SchemeParams {
    /// Range and ordering constraints. The strict sum conditions
    /// (`0 < α₁+α₂ < 2` for IG, `0 < α₁+α₂+β₁+β₂ < 4` for G) only exclude
    /// degenerate cases and are reported by [`Self::is_nondegenerate`].
    pub fn validate(&self, scheme: Scheme) -> Result<()> {
        let problems = self.problems(scheme);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidParams(problems.join("; ")))
        }
    }

    fn problems(&self, scheme: Scheme) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                out.push(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        match scheme {
            Scheme::G => {
                if self.kappa1 > self.beta1 {
                    out.push(format!("kappa1 = {} exceeds beta1 = {}", self.kappa1, self.beta1));
                }
                if self.kappa2 > self.beta2 {
                    out.push(format!("kappa2 = {} exceeds beta2 = {}", self.kappa2, self.beta2));
                }
            }
            Scheme::Picard | Scheme::Mann => {
                if self.kappa1 > self.alpha1 {
                    out.push(format!("kappa1 = {} exceeds alpha1 = {}", self.kappa1, self.alpha1));
                }
            }
            _ => {
                if self.kappa1 > self.alpha1 {
                    out.push(format!("kappa1 = {} exceeds alpha1 = {}", self.kappa1, self.alpha1));
                }
                if self.kappa2 > self.alpha2 {
                    out.push(format!("kappa2 = {} exceeds alpha2 = {}", self.kappa2, self.alpha2));
                }
            }
        }
        out
    }

    pub fn is_nondegenerate(&self, scheme: Scheme) -> bool {
        match scheme {
            Scheme::IG | Scheme::I | Scheme::IM => {
                let s = self.alpha1 + self.alpha2;
                0.0 < s && s < 2.0
            }
            Scheme::G => {
                let s = self.alpha1 + self.alpha2 + self.beta1 + self.beta2;
                0.0 < s && s < 4.0
            }
            _ => true,
        }
    }
}

/// `(t1, t2, s1, s2)` as required by a scheme.
type RoleRefs<'a> = (&'a MappingSpec, Option<&'a MappingSpec>, Option<&'a MappingSpec>, Option<&'a MappingSpec>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleClasses {
    pub t1: NonexpansiveClass,
    pub t2: Option<NonexpansiveClass>,
    pub s1: Option<NonexpansiveClass>,
    pub s2: Option<NonexpansiveClass>,
}

/// Mapping assignment. PICARD and MANN use `t1` as their map `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roles {
    #[serde(alias = "t")]
    pub t1: MappingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<MappingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<MappingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<MappingSpec>,
}

impl Roles {
    pub fn iter(&self) -> impl Iterator<Item = &MappingSpec> {
        std::iter::once(&self.t1).chain(self.t2.iter()).chain(self.s1.iter()).chain(self.s2.iter())
    }

    fn named(&self) -> Vec<(&'static str, &MappingSpec)> {
        let mut v = vec![("t1", &self.t1)];
        v.extend(self.t2.iter().map(|m| ("t2", m)));
        v.extend(self.s1.iter().map(|m| ("s1", m)));
        v.extend(self.s2.iter().map(|m| ("s2", m)));
        v
    }

    fn required(&self, scheme: Scheme) -> Result<RoleRefs<'_>> {
        let missing = |r: &str| LabError::InvalidConfig(vec![format!("scheme {scheme} needs role {r}")]);
        match scheme {
            Scheme::Picard | Scheme::Mann => Ok((&self.t1, None, None, None)),
            Scheme::I | Scheme::IM | Scheme::IG => {
                Ok((&self.t1, Some(self.t2.as_ref().ok_or_else(|| missing("t2"))?), None, None))
            }
            Scheme::G => Ok((
                &self.t1,
                Some(self.t2.as_ref().ok_or_else(|| missing("t2"))?),
                Some(self.s1.as_ref().ok_or_else(|| missing("s1"))?),
                Some(self.s2.as_ref().ok_or_else(|| missing("s2"))?),
            )),
        }
    }
}

/// One scheme run: roles, parameters, schedules, start point and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub roles: Roles,
    #[serde(default)]
    pub params: SchemeParams,
    #[serde(default)]
    pub schedule_a: ScheduleSpec,
    #[serde(default)]
    pub schedule_b: ScheduleSpec,
    pub x0: Vec<f64>,
    pub horizon: usize,
}

impl SchemeConfig {
    pub fn fixed_point(&self) -> &[f64] {
        self.roles.t1.fixed_point()
    }

    pub fn domain(&self) -> &DomainSpec {
        self.roles.t1.domain()
    }

    /// Checks every config invariant and lists all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut problems = self.params.problems(self.scheme);
        for (name, s) in [("schedule_a", &self.schedule_a), ("schedule_b", &self.schedule_b)] {
            if let Err(e) = s.validate() {
                problems.push(format!("{name}: {e}"));
            }
        }
        if let Err(e) = self.roles.required(self.scheme) {
            problems.push(e.to_string());
        }
        let domain = self.domain();
        let xstar = self.fixed_point();
        for (name, m) in self.roles.named() {
            if m.domain() != domain {
                problems.push(format!("role {name} lives on a different domain than t1"));
            }
            if m.fixed_point() != xstar {
                problems.push(format!("role {name} does not share the fixed point of t1"));
            }
        }
        if problems.is_empty() {
            if let Ok(classes) = self.scheme.role_classes(&self.params) {
                let declared = [
                    ("t1", Some(&self.roles.t1), Some(classes.t1)),
                    ("t2", self.roles.t2.as_ref(), classes.t2),
                    ("s1", self.roles.s1.as_ref(), classes.s1),
                    ("s2", self.roles.s2.as_ref(), classes.s2),
                ];
                for (name, m, c) in declared {
                    if let (Some(m), Some(c)) = (m, c) {
                        if !c.admits(m.lipschitz_interval()) {
                            let (lo, hi) = m.lipschitz_interval();
                            problems.push(format!(
                                "role {name} has Lipschitz interval [{lo}, {hi}] outside its class [{}, {}]",
                                c.kappa, c.alpha
                            ));
                        }
                    }
                }
            }
        }
        if self.x0.len() != domain.dimension() {
            problems.push(format!("x0 has {} coordinates, domain dimension is {}", self.x0.len(), domain.dimension()));
        } else {
            if !domain.contains(&self.x0) {
                problems.push("x0 must lie in the domain ball".to_string());
            }
            if norm_diff(&self.x0, xstar) == 0.0 {
                problems.push("x0 must differ from the fixed point (x0 != x*)".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(problems))
        }
    }
}

fn blend(wu: f64, u: &[f64], wv: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(x, y)| wu * x + wv * y).collect()
}

/// One step of `scheme` with the role maps supplied by `apply`. Shared by
/// [`step`] (maps on points) and [`run`] (linear parts on displacements).
fn advance<F>(scheme: Scheme, a: f64, b: f64, x: &[f64], apply: F) -> Result<(Option<Vec<f64>>, Vec<f64>)>
where
    F: Fn(Role, &[f64]) -> Result<Vec<f64>>,
{
    Ok(match scheme {
        Scheme::Picard => (None, apply(Role::T1, x)?),
        Scheme::Mann => (None, blend(1.0 - a, x, a, &apply(Role::T1, x)?)),
        Scheme::I => {
            let y = blend(1.0 - a, x, a, &apply(Role::T1, x)?);
            let next = blend(1.0 - b, x, b, &apply(Role::T2, &y)?);
            (Some(y), next)
        }
        Scheme::IM => {
            let y = blend(1.0 - a, x, a, &apply(Role::T1, x)?);
            let next = blend(1.0 - b, &y, b, &apply(Role::T2, &y)?);
            (Some(y), next)
        }
        Scheme::IG => {
            let y = blend(1.0 - a, x, a, &apply(Role::T1, x)?);
            let next = blend(1.0 - b, &apply(Role::T1, &y)?, b, &apply(Role::T2, &y)?);
            (Some(y), next)
        }
        Scheme::G => {
            let y = blend(1.0 - a, &apply(Role::S1, x)?, a, &apply(Role::T1, x)?);
            let next = blend(1.0 - b, &apply(Role::S2, &y)?, b, &apply(Role::T2, &y)?);
            (Some(y), next)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    T1,
    T2,
    S1,
    S2,
}

fn role_map(roles: &Roles, role: Role) -> Result<&MappingSpec> {
    let missing = |r: &str| LabError::InvalidConfig(vec![format!("role {r} is not assigned")]);
    match role {
        Role::T1 => Ok(&roles.t1),
        Role::T2 => roles.t2.as_ref().ok_or_else(|| missing("t2")),
        Role::S1 => roles.s1.as_ref().ok_or_else(|| missing("s1")),
        Role::S2 => roles.s2.as_ref().ok_or_else(|| missing("s2")),
    }
}

/// `(y_n, x_{n+1})` from `x_n`; `y_n` is `None` for PICARD and MANN.
pub fn step(config: &SchemeConfig, x: &[f64], n: usize) -> Result<(Option<Vec<f64>>, Vec<f64>)> {
    config.domain().check(x)?;
    let a = config.schedule_a.value_at(n);
    let b = config.schedule_b.value_at(n);
    advance(config.scheme, a, b, x, |role, p| role_map(&config.roles, role)?.apply(p))
}

/// Recorded run of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub fixed_point: Vec<f64>,
    /// `x_0 ..= x_N`.
    pub points: Vec<Vec<f64>>,
    /// `y_0 .. y_{N−1}`; empty for PICARD and MANN.
    pub intermediates: Vec<Vec<f64>>,
    /// `e_n = ‖x_n − x*‖`.
    pub errors: Vec<f64>,
    /// `ln e_n`, finite even where `e_n` underflows.
    pub ln_errors: Vec<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.points.len() - 1
    }

    /// `r_n = e_n / e_0`, from the log scale once `e_n` is no longer a
    /// normal float.
    pub fn ratios(&self) -> Vec<f64> {
        let e0 = self.errors[0];
        self.errors
            .iter()
            .zip(self.ln_ratios())
            .map(|(e, ln_r)| if e.is_normal() { e / e0 } else { ln_r.exp() })
            .collect()
    }

    pub fn ln_ratios(&self) -> Vec<f64> {
        let l0 = self.ln_errors[0];
        self.ln_errors.iter().map(|l| l - l0).collect()
    }

    pub fn to_csv(&self) -> String {
        let dim = self.fixed_point.len();
        let mut header = vec!["n".to_string()];
        header.extend((0..dim).map(|i| format!("x_{i}")));
        header.extend(["e_n", "r_n", "ln_r_n"].map(String::from));
        let mut csv = Csv::new(&header);
        let ln_r = self.ln_ratios();
        let ratios = self.ratios();
        for (n, point) in self.points.iter().enumerate() {
            let mut row = vec![n.to_string()];
            row.extend(point.iter().map(|v| table::num(*v)));
            row.push(table::num(self.errors[n]));
            row.push(table::num(ratios[n]));
            row.push(table::num(ln_r[n]));
            csv.row(&row);
        }
        csv.finish()
    }
}

/// Displacements are rescaled to unit length once they drop below this.
const RESCALE_BELOW: f64 = 1e-200;

/// Runs `config.horizon` steps from `x0`.
///
/// Every map is affine about the shared fixed point, so each step is linear in
/// the displacement `x − x*`. The run iterates the displacement and keeps a
/// separate log-scale, which lets `ln e_n` stay exact long after `e_n` itself
/// underflows.
pub fn run(config: &SchemeConfig) -> Result<Trajectory> {
    config.validate()?;
    let xstar = config.fixed_point().to_vec();
    let domain = config.domain();
    let linear = |role: Role, d: &[f64]| -> Result<Vec<f64>> { Ok(role_map(&config.roles, role)?.apply_linear(d)) };

    let at = |scale: f64, d: &[f64]| -> Vec<f64> { xstar.iter().zip(d).map(|(c, v)| c + scale.exp() * v).collect() };

    let mut disp: Vec<f64> = config.x0.iter().zip(&xstar).map(|(x, c)| x - c).collect();
    let mut log_scale = 0.0_f64;
    let n_steps = config.horizon;
    let mut traj = Trajectory {
        scheme: config.scheme,
        fixed_point: xstar.clone(),
        points: Vec::with_capacity(n_steps + 1),
        intermediates: Vec::new(),
        errors: Vec::with_capacity(n_steps + 1),
        ln_errors: Vec::with_capacity(n_steps + 1),
    };
    let record = |traj: &mut Trajectory, scale: f64, d: &[f64]| {
        let len = norm(d);
        let ln_e = scale + len.ln();
        traj.points.push(at(scale, d));
        traj.errors.push(if scale == 0.0 { len } else { ln_e.exp() });
        traj.ln_errors.push(ln_e);
    };
    record(&mut traj, log_scale, &disp);

    for n in 0..n_steps {
        let a = config.schedule_a.value_at(n);
        let b = config.schedule_b.value_at(n);
        let (y, next) = advance(config.scheme, a, b, &disp, linear)?;
        if let Some(y) = y {
            traj.intermediates.push(at(log_scale, &y));
        }
        disp = next;
        let len = norm(&disp);
        if len > 0.0 && len < RESCALE_BELOW {
            log_scale += len.ln();
            disp.iter_mut().for_each(|v| *v /= len);
        }
        record(&mut traj, log_scale, &disp);
    }

    for p in traj.points.iter().chain(&traj.intermediates) {
        debug_assert!(domain.distance_from_center(p) <= domain.radius() * (1.0 + 1e-9));
        if domain.distance_from_center(p) > domain.radius() * (1.0 + 1e-9) {
            return Err(LabError::DomainViolation {
                distance: domain.distance_from_center(p),
                radius: domain.radius(),
            });
        }
    }
    Ok(traj)
}

/// `r_n = e_n / e_0` for `n = 0..=N`.
pub fn error_ratio_series(traj: &Trajectory) -> Vec<f64> {
    traj.ratios()
}

/// Convenience for the common 1-D setup on `B(0, 1/2)`.
pub fn scalar_config(
    scheme: Scheme,
    roles: Roles,
    params: SchemeParams,
    schedule_a: ScheduleSpec,
    schedule_b: ScheduleSpec,
    x0: f64,
    horizon: usize,
) -> SchemeConfig {
    SchemeConfig { scheme, roles, params, schedule_a, schedule_b, x0: vec![x0], horizon }
}

/// Scaling roles in 1-D from plain coefficients `[t1, t2, s1, s2]`.
pub fn scalar_roles(t1: f64, t2: Option<f64>, s1: Option<f64>, s2: Option<f64>) -> Result<Roles> {
    let d = DomainSpec::unit_half(1);
    let mk = |c: f64| MappingSpec::scaling(c, &d);
    Ok(Roles { t1: mk(t1)?, t2: t2.map(mk).transpose()?, s1: s1.map(mk).transpose()?, s2: s2.map(mk).transpose()? })
}

pub use mappings::lift_scalings;
