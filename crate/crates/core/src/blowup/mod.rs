//! Parallel sections over horizontal rays, their blowup times, and the
//! completed connection that wraps sections around through infinity.

mod ergodic;
mod full;

pub use ergodic::{
    check_bounds, ergodic_counts, estimate_constants, ragged_count, sample_ray, sample_rays,
    BoundCheck, BoundReport, CountSummary, ErgodicConstants, RaggedRectangle,
};
pub use full::{full_transport, full_transport_east, full_transport_path, Unrolled};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::Scene;
use crate::sweep::{Heading, SectionEvent, Sweep};
use crate::transport::{prong_at, FiberValue};

/// A horizontal ray starting at `base` at suspension time `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub base: [f64; 2],
    #[serde(default)]
    pub tau: f64,
}

impl Ray {
    pub fn new(base: [f64; 2]) -> Self {
        Ray { base, tau: 0.0 }
    }

    pub fn at(base: [f64; 2], tau: f64) -> Self {
        Ray { base, tau }
    }

    /// The point `distance` along the ray in the given heading.
    pub fn point(&self, heading: Heading, distance: f64) -> [f64; 2] {
        [self.base[0] + heading.sign() * distance, self.base[1]]
    }

    pub(crate) fn sweep<'a>(&self, scene: &'a Scene, heading: Heading) -> Sweep<'a> {
        Sweep::new(scene, self.tau, self.base, heading)
    }
}

fn check_base(scene: &Scene, ray: &Ray) -> Result<()> {
    match prong_at(scene, ray.tau, ray.base) {
        Some((_, h)) if h.abs() <= scene.tolerances.event => Err(Error::BaseOnSingularity),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlowupDirection {
    PlusInfinity,
    MinusInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TraceStatus {
    AliveAt(f64),
    BlownUp {
        t_max: f64,
        error_bound: f64,
        direction: BlowupDirection,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionTrace {
    pub start_value: f64,
    pub events: Vec<SectionEvent>,
    pub status: TraceStatus,
    /// `(t, value)` at the start, after every event, and at the end.
    pub samples: Vec<(f64, f64)>,
}

impl SectionTrace {
    pub fn t_max(&self) -> Option<f64> {
        match self.status {
            TraceStatus::BlownUp { t_max, .. } => Some(t_max),
            TraceStatus::AliveAt(_) => None,
        }
    }

    pub fn max_abs_value(&self) -> f64 {
        self.samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max)
    }
}

/// Pushes the section through `x` eastward up to `horizon`, logging every event.
pub fn advance_section(scene: &Scene, ray: &Ray, x: f64, horizon: f64) -> Result<SectionTrace> {
    advance_section_toward(scene, ray, Heading::East, x, horizon)
}

pub fn advance_section_toward(
    scene: &Scene,
    ray: &Ray,
    heading: Heading,
    x: f64,
    horizon: f64,
) -> Result<SectionTrace> {
    check_base(scene, ray)?;
    let mut events = Vec::new();
    let end = ray
        .sweep(scene, heading)
        .run(x, horizon, Some(&mut events))?;
    let mut samples = vec![(0.0, x)];
    samples.extend(events.iter().map(|e| (e.time, e.value_after)));
    let status = if end.blown {
        TraceStatus::BlownUp {
            t_max: end.distance,
            error_bound: scene.tolerances.tail_constant / scene.tolerances.blowup_threshold,
            direction: if end.value > 0.0 {
                BlowupDirection::PlusInfinity
            } else {
                BlowupDirection::MinusInfinity
            },
        }
    } else {
        samples.push((end.distance, end.value));
        TraceStatus::AliveAt(end.distance)
    };
    Ok(SectionTrace {
        start_value: x,
        events,
        status,
        samples,
    })
}

/// Blowup time of the section through `x`, travelling in `heading`.
///
/// Sections blow up only on the side they are magnified on: positive values
/// eastward and negative values westward. Infinity blows up immediately.
pub fn t_max(scene: &Scene, ray: &Ray, heading: Heading, x: FiberValue) -> Result<f64> {
    check_base(scene, ray)?;
    t_max_unchecked(scene, ray, heading, x)
}

pub(crate) fn t_max_unchecked(
    scene: &Scene,
    ray: &Ray,
    heading: Heading,
    x: FiberValue,
) -> Result<f64> {
    let v = match x {
        FiberValue::Inf => return Ok(0.0),
        FiberValue::Finite(v) => v,
    };
    if v == 0.0 || v.signum() != heading.sign() || !scene.has_magnifying_orbit() {
        return Ok(f64::INFINITY);
    }
    let end = ray.sweep(scene, heading).run(v, f64::INFINITY, None)?;
    debug_assert!(end.blown);
    Ok(end.distance)
}

pub fn t_max_east(scene: &Scene, ray: &Ray, x: FiberValue) -> Result<f64> {
    t_max(scene, ray, Heading::East, x)
}

pub fn t_max_west(scene: &Scene, ray: &Ray, x: FiberValue) -> Result<f64> {
    t_max(scene, ray, Heading::West, x)
}

/// Finds `x > 0` with `t_max_east(x) = target` by bisection on `ln x`.
pub fn invert_t_max(scene: &Scene, ray: &Ray, target: f64, tol: f64) -> Result<f64> {
    check_base(scene, ray)?;
    if !scene.has_magnifying_orbit() {
        return Err(Error::NoMagnifyingOrbit);
    }
    let f = |x: f64| t_max_unchecked(scene, ray, Heading::East, FiberValue::Finite(x));
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    // Small x blows up late, large x early.
    while f(lo)? <= target {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(Error::BisectionFailure { lo, hi });
        }
    }
    while f(hi)? > target {
        hi *= 2.0;
        if hi > scene.tolerances.blowup_threshold {
            return Err(Error::BisectionFailure { lo, hi });
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let t = f(mid)?;
        if (t - target).abs() <= tol || hi / lo < 1.0 + 1e-15 {
            return Ok(mid);
        }
        if t > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
