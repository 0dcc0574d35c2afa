#![allow(dead_code)]

use fixlab::mappings::{self, DomainSpec};
use fixlab::{ScheduleSpec, Scheme, SchemeConfig, SchemeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TWO_STEP: [Scheme; 4] = [Scheme::I, Scheme::IM, Scheme::IG, Scheme::G];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A built-in schedule with every term in `[0, cap]`.
pub fn random_schedule(rng: &mut ChaCha8Rng, cap: f64) -> ScheduleSpec {
    let c = cap * rng.random::<f64>();
    match rng.random_range(0..4) {
        0 => ScheduleSpec::Constant { c },
        1 => ScheduleSpec::Power { c, p: 1.0 + 3.0 * rng.random::<f64>(), q: 2.0 * rng.random::<f64>() },
        2 => ScheduleSpec::Geometric { c, r: 0.99 * rng.random::<f64>() },
        _ => {
            let values = (0..rng.random_range(1..6)).map(|_| cap * rng.random::<f64>()).collect();
            ScheduleSpec::Explicit { values, tail: c }
        }
    }
}

/// Class moduli for `scheme`; `κ` is drawn below its partner so the classes
/// are never empty. With `lower_margin`, `κ ≥ 0.1` keeps lower bounds alive.
pub fn random_params(rng: &mut ChaCha8Rng, scheme: Scheme, lower_margin: bool) -> SchemeParams {
    let mut u = || 0.05 + 0.95 * rng.random::<f64>();
    let (alpha1, alpha2, beta1, beta2) = (u(), u(), u(), u());
    let (s1, s2) = (u(), u());
    let (k1, k2) = if scheme == Scheme::G { (beta1, beta2) } else { (alpha1, alpha2) };
    let kappa = |top: f64, s: f64| if lower_margin { top * (0.1 + 0.9 * s) } else { top * s };
    SchemeParams { alpha1, alpha2, beta1, beta2, kappa1: kappa(k1, s1), kappa2: kappa(k2, s2) }
}

/// A ball with random centre and radius in dimension 1 to 3.
pub fn random_domain(rng: &mut ChaCha8Rng) -> DomainSpec {
    let d = rng.random_range(1..=3);
    let center = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    DomainSpec::new(d, rng.random_range(0.1..2.0), center).unwrap()
}

pub fn random_start(rng: &mut ChaCha8Rng, domain: &DomainSpec) -> Vec<f64> {
    loop {
        let x = domain.sample(rng);
        if domain.distance_from_center(&x) > 1e-3 * domain.radius() {
            return x;
        }
    }
}

pub struct Caps {
    pub a: f64,
    pub b: f64,
}

/// Schedule caps that keep the G lower factors non-negative.
pub fn g_lower_caps(p: &SchemeParams) -> Caps {
    Caps { a: p.kappa1 / (p.kappa1 + p.alpha1), b: p.kappa2 / (p.kappa2 + p.alpha2) }
}

/// A random class-conforming run; `caps` bounds the schedules.
pub fn random_run(
    rng: &mut ChaCha8Rng,
    scheme: Scheme,
    params: SchemeParams,
    caps: Caps,
    horizon: usize,
) -> SchemeConfig {
    let domain = random_domain(rng);
    let roles = mappings::random_roles(scheme, &params, &domain, rng).unwrap();
    SchemeConfig {
        scheme,
        roles,
        params,
        schedule_a: random_schedule(rng, caps.a),
        schedule_b: random_schedule(rng, caps.b),
        x0: random_start(rng, &domain),
        horizon,
    }
}

pub fn unit_caps() -> Caps {
    Caps { a: 1.0, b: 1.0 }
}
