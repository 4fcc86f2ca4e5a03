//! The completed connection: sections that blow up re-enter from the other
//! end of the fiber, so transport acts on the fiber circle.
//!
//! Past the blowup time the section is the one coming back from the opposite
//! infinity; it is found by matching its reverse blowup time.

use serde::{Deserialize, Serialize};

use super::{t_max_unchecked, Ray};
use crate::error::{Error, Result};
use crate::surface::Scene;
use crate::sweep::Heading;
use crate::transport::{cross_value, CompiledPath, FiberValue, Step};

/// A point of the fiber circle lifted to the line.
///
/// Finite values with `wraps = w` lie in the open interval `(w, w + 1)` of the
/// lift; infinity with `wraps = w` sits at the integer `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unrolled {
    pub wraps: i64,
    pub value: FiberValue,
}

impl Unrolled {
    pub fn new(value: impl Into<FiberValue>) -> Self {
        Unrolled {
            wraps: 0,
            value: value.into(),
        }
    }

    pub fn lift(&self) -> f64 {
        let w = self.wraps as f64;
        match self.value {
            FiberValue::Finite(x) => w + x.atan() / std::f64::consts::PI + 0.5,
            FiberValue::Inf => w,
        }
    }
}

/// Transport of `x` a distance `t` along the ray in `heading` under the completed connection.
pub fn full_transport(
    scene: &Scene,
    ray: &Ray,
    heading: Heading,
    x: Unrolled,
    t: f64,
) -> Result<Unrolled> {
    if t <= 0.0 {
        return Ok(x);
    }
    let eps = scene.tolerances.event;
    let d = heading.sign() as i64;
    let tm = t_max_unchecked(scene, ray, heading, x.value)?;
    // Crossing infinity moves the lift up going east and down going west.
    let wraps_after = match x.value {
        FiberValue::Inf => {
            if heading == Heading::East {
                x.wraps
            } else {
                x.wraps - 1
            }
        }
        FiberValue::Finite(_) => x.wraps + d,
    };
    if t < tm - eps {
        let v = x.value.finite().expect("finite before blowup");
        let end = ray.sweep(scene, heading).run(v, t, None)?;
        return Ok(Unrolled {
            wraps: x.wraps,
            value: FiberValue::Finite(end.value),
        });
    }
    if (t - tm).abs() <= eps {
        // Infinity sits at the top of the interval reached going east.
        return Ok(Unrolled {
            wraps: x.wraps + d.max(0),
            value: FiberValue::Inf,
        });
    }
    let far = Ray::at(ray.point(heading, t), ray.tau);
    let y = reentry_value(scene, &far, heading.reversed(), t - tm)?;
    Ok(Unrolled {
        wraps: wraps_after,
        value: FiberValue::Finite(y),
    })
}

pub fn full_transport_east(scene: &Scene, ray: &Ray, x: FiberValue, t: f64) -> Result<FiberValue> {
    Ok(full_transport(scene, ray, Heading::East, Unrolled::new(x), t)?.value)
}

/// The value at `ray.base` whose section, run in `back`, blows up after exactly `target`.
///
/// Going back west the section must be negative; going back east, positive.
fn reentry_value(scene: &Scene, ray: &Ray, back: Heading, target: f64) -> Result<f64> {
    let sign = back.sign();
    let tol = scene.tolerances.bisection;
    let f = |m: f64| t_max_unchecked(scene, ray, back, FiberValue::Finite(sign * m));
    // t_max decreases in magnitude m; bracket with lo slow and hi fast.
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while f(lo)? <= target {
        lo /= 2.0;
        if lo < 1e-200 {
            return Err(Error::BisectionFailure {
                lo: sign * lo,
                hi: sign * hi,
            });
        }
    }
    while f(hi)? > target {
        hi *= 2.0;
        if hi >= scene.tolerances.blowup_threshold {
            // Re-entry so close to the blowup that the value is beyond the threshold.
            return Ok(sign * hi);
        }
    }
    for _ in 0..400 {
        if hi - lo <= tol * hi.max(1.0) {
            break;
        }
        let mid = if hi / lo > 2.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo < fhi {
        return Err(Error::BisectionFailure {
            lo: sign * lo,
            hi: sign * hi,
        });
    }
    Ok(sign * 0.5 * (lo + hi))
}

/// Transports `x` along a compiled path under the completed connection.
pub fn full_transport_path(scene: &Scene, path: &CompiledPath, x: Unrolled) -> Result<Unrolled> {
    let mut u = x;
    for step in &path.steps {
        match *step {
            Step::Scale(f) => {
                if let FiberValue::Finite(v) = u.value {
                    u.value = FiberValue::Finite(v * f);
                }
            }
            Step::Shift(dy) => {
                if let FiberValue::Finite(v) = u.value {
                    u.value = FiberValue::Finite(v - dy);
                }
            }
            Step::Cross {
                h,
                alpha,
                direction,
            } => u.value = cross_value(alpha, h, direction, u.value),
            Step::Sweep {
                tau,
                base,
                heading,
                distance,
                ..
            } => {
                u = full_transport(scene, &Ray::at(base, tau), heading, u, distance)?;
            }
        }
    }
    Ok(u)
}
