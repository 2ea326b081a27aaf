//! Closed-form covariate shift measures for the Gaussian experiment.
//!
//! The source and target distributions are summarized by their 3σ circles:
//! `A` of radius 3 centred at the origin and `B` of radius `3τ` centred at
//! `μ_t·𝟙`, so the centres are `√2·μ_t = 6δ` apart.

use std::f64::consts::PI;
use std::fmt;

use crate::simulate::{target_params, ShiftSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShiftConfig {
    Inside,
    Partial,
    Outside,
}

impl ShiftConfig {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Inside => "inside",
            Self::Partial => "partial",
            Self::Outside => "outside",
        }
    }
}

impl fmt::Display for ShiftConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inside is tested first, so the tangent case `2δ = 1 − τ` is inside.
/// Inputs within this distance of a tangency count as tangent, so decimal
/// grid values such as `δ = 0.35, τ = 0.3` land on the boundary.
const TANGENCY_TOL: f64 = 1e-12;

pub fn classify(shift: ShiftSpec) -> ShiftConfig {
    let (d, t) = (shift.delta(), shift.tau());
    if 2.0 * d <= 1.0 - t + TANGENCY_TOL {
        ShiftConfig::Inside
    } else if 2.0 * d >= 1.0 + t - TANGENCY_TOL {
        ShiftConfig::Outside
    } else {
        ShiftConfig::Partial
    }
}

pub fn kl(shift: ShiftSpec) -> f64 {
    let (d, t) = (shift.delta(), shift.tau());
    d * d + t * t - (t.powi(4)).ln() - 1.0
}

/// Areas of the two 3σ circles and of their intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleOverlap {
    pub area_source: f64,
    pub area_target: f64,
    pub intersection: f64,
}

impl CircleOverlap {
    pub fn union(&self) -> f64 {
        self.area_source + self.area_target - self.intersection
    }
}

/// Radicand of the lens triangle term. Nonnegative exactly when the circles
/// partially overlap.
pub fn lens_radicand(shift: ShiftSpec) -> f64 {
    let (big, small, dist) = radii_and_distance(shift);
    ((big + small).powi(2) - dist * dist) * (dist * dist - (big - small).powi(2))
}

fn radii_and_distance(shift: ShiftSpec) -> (f64, f64, f64) {
    let (mu_t, sigma_t) = target_params(shift);
    (3.0, 3.0 * sigma_t, 2f64.sqrt() * mu_t)
}

pub fn overlap(shift: ShiftSpec) -> CircleOverlap {
    let (big, small, dist) = radii_and_distance(shift);
    let area_source = PI * big * big;
    let area_target = PI * small * small;
    let intersection = match classify(shift) {
        ShiftConfig::Inside => area_target,
        ShiftConfig::Outside => 0.0,
        ShiftConfig::Partial => {
            // dist > 0 here: δ = 0 with τ ≤ 1 is always inside.
            let c1 = big * big
                * ((dist * dist + big * big - small * small) / (2.0 * dist * big))
                    .clamp(-1.0, 1.0)
                    .acos();
            let c2 = small * small
                * ((dist * dist + small * small - big * big) / (2.0 * dist * small))
                    .clamp(-1.0, 1.0)
                    .acos();
            let c3 = 0.5 * lens_radicand(shift).max(0.0).sqrt();
            (c1 + c2 - c3).clamp(0.0, area_target)
        }
    };
    CircleOverlap {
        area_source,
        area_target,
        intersection,
    }
}

/// Jaccard distance `1 − |A∩B| / |A∪B|`.
pub fn jaccard(shift: ShiftSpec) -> f64 {
    let o = overlap(shift);
    1.0 - o.intersection / o.union()
}

/// Novelty factor: half of one plus the fraction of `B` outside `A` minus
/// the fraction inside, which reduces to `1 − |A∩B| / |B|`.
pub fn novelty(shift: ShiftSpec) -> f64 {
    let o = overlap(shift);
    let n = ((o.area_target - o.intersection) - o.intersection) / o.area_target;
    (n + 1.0) / 2.0
}
