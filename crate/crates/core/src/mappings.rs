//! Domain ball, (κ, α)-nonexpansive classes and the concrete affine mapping
//! families used for every role (T, T₁, T₂, S₁, S₂) of the schemes.
//!
//! Every mapping is affine about its fixed point, `T(x) = x* + L(x − x*)`,
//! with `L` a scalar, a scaled plane rotation or a square matrix. For these
//! kinds the tight Lipschitz interval `[σ_min(L), σ_max(L)]` is known exactly,
//! so class membership can be decided without sampling; `verify_class` still
//! offers the sampled check as an independent confirmation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::iterations::{Roles, Scheme, SchemeParams};

/// Relative slack when deciding whether a point lies in the domain ball.
pub const DOMAIN_TOL: f64 = 1e-12;
/// Absolute slack on the two-sided Lipschitz inequality.
pub const CLASS_SLACK: f64 = 1e-10;

/// Closed ball `B(center, radius)` in `R^dimension`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    dimension: usize,
    radius: f64,
    center: Vec<f64>,
}

impl DomainSpec {
    pub fn new(dimension: usize, radius: f64, center: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(LabError::InvalidMapping("dimension must be at least 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(LabError::InvalidMapping(format!("radius must be positive, got {radius}")));
        }
        if center.len() != dimension || center.iter().any(|c| !c.is_finite()) {
            return Err(LabError::InvalidMapping(format!("center must hold {dimension} finite coordinates")));
        }
        Ok(DomainSpec { dimension, radius, center })
    }

    /// Ball of radius 1/2 about the origin.
    pub fn unit_half(dimension: usize) -> Self {
        DomainSpec { dimension: dimension.max(1), radius: 0.5, center: vec![0.0; dimension.max(1)] }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn distance_from_center(&self, point: &[f64]) -> f64 {
        norm_diff(point, &self.center)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension && self.distance_from_center(point) <= self.radius * (1.0 + DOMAIN_TOL)
    }

    pub(crate) fn check(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dimension {
            return Err(LabError::Mismatch(format!(
                "point has {} coordinates, domain dimension is {}",
                point.len(),
                self.dimension
            )));
        }
        let distance = self.distance_from_center(point);
        if distance <= self.radius * (1.0 + DOMAIN_TOL) {
            Ok(())
        } else {
            Err(LabError::DomainViolation { distance, radius: self.radius })
        }
    }

    /// Uniform sample from the ball.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dimension;
        loop {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = norm(&dir);
            if len < 1e-300 {
                continue;
            }
            let u: f64 = rng.random();
            let r = self.radius * u.powf(1.0 / d as f64);
            return dir.iter().zip(&self.center).map(|(x, c)| c + r * x / len).collect();
        }
    }
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::unit_half(1)
    }
}

/// The class 𝒩_{κ,α}: κ‖ξ−η‖ ≤ ‖Tξ−Tη‖ ≤ α‖ξ−η‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonexpansiveClass {
    pub kappa: f64,
    pub alpha: f64,
}

impl NonexpansiveClass {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) || !(0.0..=1.0).contains(&alpha) || kappa > alpha {
            return Err(LabError::InvalidParams(format!(
                "class requires 0 <= kappa <= alpha <= 1, got kappa={kappa}, alpha={alpha}"
            )));
        }
        Ok(NonexpansiveClass { kappa, alpha })
    }

    /// Whether an exact Lipschitz interval lies inside the class interval.
    pub fn admits(&self, interval: (f64, f64)) -> bool {
        interval.0 >= self.kappa - CLASS_SLACK && interval.1 <= self.alpha + CLASS_SLACK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MappingKind {
    Scaling { coeff: f64 },
    RotationScaling { coeff: f64, theta: f64 },
    Affine { matrix: DMatrix<f64> },
}

/// A self-map of the domain ball, affine about `fixed_point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMapping", into = "RawMapping")]
pub struct MappingSpec {
    kind: MappingKind,
    fixed_point: Vec<f64>,
    domain: DomainSpec,
    interval: (f64, f64),
}

impl MappingSpec {
    /// `T(x) = center + c (x − center)`.
    pub fn scaling(coeff: f64, domain: &DomainSpec) -> Result<Self> {
        Self::build(MappingKind::Scaling { coeff }, domain.center.clone(), domain.clone())
    }

    /// Scaling about an off-center fixed point; accepted only when the image
    /// of the ball provably stays inside it.
    pub fn scaling_about(coeff: f64, fixed_point: Vec<f64>, domain: &DomainSpec) -> Result<Self> {
        Self::build(MappingKind::Scaling { coeff }, fixed_point, domain.clone())
    }

    /// `T(x) = center + c R_θ (x − center)` in the plane.
    pub fn rotation_scaling(coeff: f64, theta: f64, domain: &DomainSpec) -> Result<Self> {
        Self::build(MappingKind::RotationScaling { coeff, theta }, domain.center.clone(), domain.clone())
    }

    /// `T(x) = center + M (x − center)` with `σ_max(M) <= 1`.
    pub fn affine(matrix: DMatrix<f64>, domain: &DomainSpec) -> Result<Self> {
        Self::build(MappingKind::Affine { matrix }, domain.center.clone(), domain.clone())
    }

    fn build(kind: MappingKind, fixed_point: Vec<f64>, domain: DomainSpec) -> Result<Self> {
        let dim = domain.dimension;
        if fixed_point.len() != dim {
            return Err(LabError::InvalidMapping(format!(
                "fixed point has {} coordinates, domain dimension is {dim}",
                fixed_point.len()
            )));
        }
        let interval = match &kind {
            MappingKind::Scaling { coeff } => {
                if !(coeff.is_finite() && (-1.0..=1.0).contains(coeff)) {
                    return Err(LabError::InvalidMapping(format!(
                        "scaling coefficient must lie in [-1, 1], got {coeff}"
                    )));
                }
                (coeff.abs(), coeff.abs())
            }
            MappingKind::RotationScaling { coeff, theta } => {
                if dim != 2 {
                    return Err(LabError::InvalidMapping("rotation_scaling is defined in dimension 2 only".into()));
                }
                if !(coeff.is_finite() && (-1.0..=1.0).contains(coeff)) || !theta.is_finite() {
                    return Err(LabError::InvalidMapping(format!(
                        "rotation_scaling needs coeff in [-1, 1] and finite theta, got {coeff}, {theta}"
                    )));
                }
                (coeff.abs(), coeff.abs())
            }
            MappingKind::Affine { matrix } => {
                if matrix.nrows() != dim || matrix.ncols() != dim {
                    return Err(LabError::InvalidMapping(format!(
                        "affine matrix must be {dim}x{dim}, got {}x{}",
                        matrix.nrows(),
                        matrix.ncols()
                    )));
                }
                if matrix.iter().any(|v| !v.is_finite()) {
                    return Err(LabError::InvalidMapping("affine matrix has non-finite entries".into()));
                }
                let (lo, hi) = singular_extremes(matrix);
                if hi > 1.0 + 1e-12 {
                    return Err(LabError::InvalidMapping(format!("affine matrix has sigma_max = {hi} > 1")));
                }
                (lo, hi.min(1.0))
            }
        };

        let offset = norm_diff(&fixed_point, &domain.center);
        if offset > 0.0 {
            match kind {
                MappingKind::Scaling { .. } => {
                    let reach = interval.1 * (domain.radius + offset) + offset;
                    if reach > domain.radius * (1.0 + DOMAIN_TOL) {
                        return Err(LabError::InvalidMapping(format!(
                            "off-center fixed point at distance {offset}: image reaches {reach} > radius {}",
                            domain.radius
                        )));
                    }
                }
                _ => {
                    return Err(LabError::InvalidMapping(
                        "only scaling maps may have a fixed point away from the ball center".into(),
                    ))
                }
            }
        }

        Ok(MappingSpec { kind, fixed_point, domain, interval })
    }

    pub fn kind(&self) -> &MappingKind {
        &self.kind
    }

    pub fn fixed_point(&self) -> &[f64] {
        &self.fixed_point
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension
    }

    /// Exact `[κ_T, α_T]`.
    pub fn lipschitz_interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `T(point)`; the point must lie in the domain ball.
    pub fn apply(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(point)?;
        let disp: Vec<f64> = point.iter().zip(&self.fixed_point).map(|(p, f)| p - f).collect();
        let image: Vec<f64> = self.apply_linear(&disp).iter().zip(&self.fixed_point).map(|(d, f)| f + d).collect();
        self.domain.check(&image)?;
        Ok(image)
    }

    /// The linear part `L` applied to a displacement from the fixed point.
    pub fn apply_linear(&self, disp: &[f64]) -> Vec<f64> {
        match &self.kind {
            MappingKind::Scaling { coeff } => disp.iter().map(|d| coeff * d).collect(),
            MappingKind::RotationScaling { coeff, theta } => {
                let (s, c) = theta.sin_cos();
                vec![coeff * (c * disp[0] - s * disp[1]), coeff * (s * disp[0] + c * disp[1])]
            }
            MappingKind::Affine { matrix } => {
                let n = matrix.nrows();
                (0..n).map(|i| (0..n).map(|j| matrix[(i, j)] * disp[j]).sum()).collect()
            }
        }
    }

    /// Returns the same map with a different fixed point and domain; used
    /// when lifting 1-D witness scalings to a higher-dimensional ball.
    pub(crate) fn scaling_coefficient(&self) -> Option<f64> {
        match self.kind {
            MappingKind::Scaling { coeff } => Some(coeff),
            _ => None,
        }
    }
}

/// Smallest and largest singular value of a square matrix.
pub fn singular_extremes(matrix: &DMatrix<f64>) -> (f64, f64) {
    if matrix.nrows() == 1 {
        let v = matrix[(0, 0)].abs();
        return (v, v);
    }
    let sv = matrix.clone().singular_values();
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    (lo, hi)
}

/// Euclidean norm without intermediate underflow of the squares.
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.hypot(*x))
}

pub(crate) fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.hypot(x - y))
}

/// Result of the sampled two-sided Lipschitz check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Samples `sample_count` pairs uniformly in the ball and compares
/// `‖Tξ−Tη‖` against `κ‖ξ−η‖` and `α‖ξ−η‖` with slack [`CLASS_SLACK`].
pub fn verify_class(
    mapping: &MappingSpec,
    class: NonexpansiveClass,
    sample_count: usize,
    seed: u64,
) -> Result<ClassReport> {
    if sample_count == 0 {
        return Err(LabError::InvalidParams("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = mapping.domain();
    let mut report =
        ClassReport { samples: sample_count, min_ratio: f64::INFINITY, max_ratio: 0.0, lower_ok: true, upper_ok: true };
    let mut drawn = 0;
    while drawn < sample_count {
        let xi = domain.sample(&mut rng);
        let eta = domain.sample(&mut rng);
        let gap = norm_diff(&xi, &eta);
        if gap == 0.0 {
            continue;
        }
        drawn += 1;
        let image_gap = norm_diff(&mapping.apply(&xi)?, &mapping.apply(&eta)?);
        let ratio = image_gap / gap;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
        if image_gap < class.kappa * gap - CLASS_SLACK {
            report.lower_ok = false;
        }
        if image_gap > class.alpha * gap + CLASS_SLACK {
            report.upper_ok = false;
        }
    }
    Ok(report)
}

fn two_step_only(scheme: Scheme) -> Result<()> {
    match scheme {
        Scheme::I | Scheme::IM | Scheme::IG | Scheme::G => Ok(()),
        other => Err(LabError::UnsupportedScheme(other.to_string())),
    }
}

fn scalings(domain: &DomainSpec, coeffs: [Option<f64>; 4]) -> Result<Roles> {
    let make = |c: Option<f64>| c.map(|c| MappingSpec::scaling(c, domain)).transpose();
    Ok(Roles {
        t1: make(coeffs[0])?.expect("t1 is always assigned"),
        t2: make(coeffs[1])?,
        s1: make(coeffs[2])?,
        s2: make(coeffs[3])?,
    })
}

/// Scaling maps attaining equality with the scheme's upper bound.
pub fn witness_upper(scheme: Scheme, params: &SchemeParams, domain: &DomainSpec) -> Result<Roles> {
    two_step_only(scheme)?;
    params.validate(scheme)?;
    let p = params;
    match scheme {
        Scheme::G => scalings(domain, [Some(p.alpha1), Some(p.alpha2), Some(p.beta1), Some(p.beta2)]),
        _ => scalings(domain, [Some(p.alpha1), Some(p.alpha2), None, None]),
    }
}

/// Scaling maps attaining equality with the implemented lower bound.
///
/// IG uses `T₁ = −κ₁·, T₂ = +α₂·` and G uses `S = κ·, T = −α·`; with these
/// signs each sub-step multiplier equals the corresponding lower factor.
pub fn witness_lower(scheme: Scheme, params: &SchemeParams, domain: &DomainSpec) -> Result<Roles> {
    two_step_only(scheme)?;
    params.validate(scheme)?;
    let p = params;
    let coeffs = match scheme {
        Scheme::IG => [Some(-p.kappa1), Some(p.alpha2), None, None],
        Scheme::G => [Some(-p.alpha1), Some(-p.alpha2), Some(p.kappa1), Some(p.kappa2)],
        Scheme::I => [Some(p.alpha1), Some(-p.alpha2), None, None],
        Scheme::IM => [Some(-p.alpha1), Some(-p.alpha2), None, None],
        _ => unreachable!(),
    };
    scalings(domain, coeffs)
}

/// A random map whose exact Lipschitz interval lies in the class interval:
/// a signed scaling in 1-D, `U diag(s) Vᵀ` with random orthogonal factors
/// otherwise.
pub fn random_in_class(class: NonexpansiveClass, domain: &DomainSpec, seed: u64) -> Result<MappingSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_in_class_with(class, domain, &mut rng)
}

pub fn random_in_class_with<R: Rng + ?Sized>(
    class: NonexpansiveClass,
    domain: &DomainSpec,
    rng: &mut R,
) -> Result<MappingSpec> {
    let span = class.alpha - class.kappa;
    let mut modulus = || (class.kappa + span * rng.random::<f64>()).clamp(class.kappa, class.alpha);
    let d = domain.dimension;
    if d == 1 {
        let m = modulus();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return MappingSpec::scaling(sign * m, domain);
    }
    let s: Vec<f64> = (0..d).map(|_| modulus()).collect();
    let u = random_orthogonal(d, rng);
    let v = random_orthogonal(d, rng);
    let matrix = &u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose();
    MappingSpec::affine(matrix, domain)
}

fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        if (0..d).any(|i| r[(i, i)].abs() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..d {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        return q;
    }
}

/// Class-conforming random maps for every role of a two-step scheme.
pub fn random_roles<R: Rng + ?Sized>(
    scheme: Scheme,
    params: &SchemeParams,
    domain: &DomainSpec,
    rng: &mut R,
) -> Result<Roles> {
    let classes = scheme.role_classes(params)?;
    let mut pick = |c: Option<NonexpansiveClass>| c.map(|c| random_in_class_with(c, domain, &mut *rng)).transpose();
    Ok(Roles {
        t1: pick(Some(classes.t1))?.expect("t1 class present"),
        t2: pick(classes.t2)?,
        s1: pick(classes.s1)?,
        s2: pick(classes.s2)?,
    })
}

/// Re-centres 1-D witness scalings on a ball of another dimension.
pub fn lift_scalings(roles: &Roles, domain: &DomainSpec) -> Result<Roles> {
    let lift = |m: &MappingSpec| -> Result<MappingSpec> {
        let c = m
            .scaling_coefficient()
            .ok_or_else(|| LabError::InvalidMapping("only scaling maps can be lifted".into()))?;
        MappingSpec::scaling(c, domain)
    };
    Ok(Roles {
        t1: lift(&roles.t1)?,
        t2: roles.t2.as_ref().map(lift).transpose()?,
        s1: roles.s1.as_ref().map(lift).transpose()?,
        s2: roles.s2.as_ref().map(lift).transpose()?,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawCoeff {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMapping {
    kind: String,
    coeff: RawCoeff,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<Vec<f64>>,
}

impl TryFrom<RawMapping> for MappingSpec {
    type Error = LabError;

    fn try_from(raw: RawMapping) -> Result<Self> {
        let dim = raw
            .dim
            .or_else(|| raw.fixed_point.as_ref().map(Vec::len))
            .or_else(|| raw.center.as_ref().map(Vec::len))
            .or(match &raw.coeff {
                RawCoeff::Rows(rows) => Some(rows.len()),
                RawCoeff::Scalar(_) => None,
            })
            .or(if raw.kind == "rotation_scaling" { Some(2) } else { None })
            .unwrap_or(1);
        let domain =
            DomainSpec::new(dim, raw.radius.unwrap_or(0.5), raw.center.clone().unwrap_or_else(|| vec![0.0; dim]))?;
        let fixed_point = raw.fixed_point.clone().unwrap_or_else(|| domain.center.clone());
        let kind = match (raw.kind.as_str(), raw.coeff) {
            ("scaling", RawCoeff::Scalar(coeff)) => MappingKind::Scaling { coeff },
            ("rotation_scaling", RawCoeff::Scalar(coeff)) => MappingKind::RotationScaling {
                coeff,
                theta: raw.theta.ok_or_else(|| LabError::InvalidMapping("rotation_scaling requires theta".into()))?,
            },
            ("affine", RawCoeff::Rows(rows)) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(LabError::InvalidMapping("affine coeff must be a square matrix".into()));
                }
                MappingKind::Affine { matrix: DMatrix::from_fn(n, n, |i, j| rows[i][j]) }
            }
            ("affine", RawCoeff::Scalar(c)) if dim == 1 => {
                MappingKind::Affine { matrix: DMatrix::from_element(1, 1, c) }
            }
            (kind, _) => {
                return Err(LabError::InvalidMapping(format!("unknown kind {kind:?} or coeff shape not matching it")))
            }
        };
        MappingSpec::build(kind, fixed_point, domain)
    }
}

impl From<MappingSpec> for RawMapping {
    fn from(m: MappingSpec) -> Self {
        let (kind, coeff, theta) = match m.kind {
            MappingKind::Scaling { coeff } => ("scaling", RawCoeff::Scalar(coeff), None),
            MappingKind::RotationScaling { coeff, theta } => ("rotation_scaling", RawCoeff::Scalar(coeff), Some(theta)),
            MappingKind::Affine { matrix } => {
                let rows = (0..matrix.nrows()).map(|i| (0..matrix.ncols()).map(|j| matrix[(i, j)]).collect()).collect();
                ("affine", RawCoeff::Rows(rows), None)
            }
        };
        let default_center = m.domain.center.iter().all(|c| *c == 0.0);
        RawMapping {
            kind: kind.to_string(),
            coeff,
            theta,
            fixed_point: Some(m.fixed_point),
            dim: Some(m.domain.dimension),
            radius: (m.domain.radius != 0.5).then_some(m.domain.radius),
            center: (!default_center).then_some(m.domain.center),
        }
    }
}
