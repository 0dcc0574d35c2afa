//! Two-step fixed-point iterations for (κ, α)-nonexpansive mappings.
//!
//! The crate models the mapping classes on a closed Euclidean ball, runs the
//! Picard, Mann, I, IM, IG and G schemes, computes the optimal upper and lower
//! error-bound products for the two-step schemes, classifies their convergence
//! from the parameter schedules, and compares convergence rates through the
//! ratio of error norms.
//!
//! Every bound has an independent check next to it: a brute-force 1-D oracle
//! over scalar coefficient assignments, and a randomized probe that searches
//! class-conforming mappings for runs undershooting a claimed lower bound.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod iterations;
pub mod mappings;
pub mod schedules;
pub mod table;

pub use error::{LabError, Result};
pub use iterations::{Roles, Scheme, SchemeConfig, SchemeParams, Trajectory};
pub use mappings::{DomainSpec, MappingSpec, NonexpansiveClass};
pub use schedules::ScheduleSpec;
