//! Event-driven sweep of a fiber value along a horizontal ray.
//!
//! The sweep runs in a moving frame `diag(λ^k, λ^-k)` composed with a lattice
//! translation, both of which preserve the developed singularity set. The
//! frame is rescaled whenever the tracked value leaves `[1/λ, λ]`, so slabs
//! stay of unit size and coordinates stay O(1) even deep in a cascade.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::{flow_scaled_lattice, for_each_singularity, Scene, SingularityHit, Window};

/// One application of the pushing rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionEvent {
    /// Distance travelled along the ray.
    pub time: f64,
    pub hit: SingularityHit,
    pub value_before: f64,
    pub value_after: f64,
    pub factor_applied: f64,
}

impl SectionEvent {
    /// Height of the singularity above the ray base.
    pub fn height(&self, base_north: f64) -> f64 {
        self.hit.position[1] - base_north
    }
}

/// Horizontal direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    East,
    West,
}

impl Heading {
    pub fn sign(self) -> f64 {
        match self {
            Heading::East => 1.0,
            Heading::West => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Heading::East => Heading::West,
            Heading::West => Heading::East,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SweepEnd {
    /// Distance covered; the blowup time when `blown`.
    pub distance: f64,
    /// Value at the end, or at the threshold crossing when `blown`.
    pub value: f64,
    pub blown: bool,
    pub events: u64,
}

pub(crate) struct Sweep<'a> {
    pub scene: &'a Scene,
    pub tau: f64,
    pub base: [f64; 2],
    pub heading: Heading,
    /// Exclude singularities this close to the start (true units).
    pub start_exclusion: f64,
    /// Exclude singularities this close to the end (true units).
    pub end_exclusion: f64,
}

impl<'a> Sweep<'a> {
    pub fn new(scene: &'a Scene, tau: f64, base: [f64; 2], heading: Heading) -> Self {
        let tol = scene.tolerances.event;
        Sweep {
            scene,
            tau,
            base,
            heading,
            start_exclusion: tol,
            end_exclusion: tol,
        }
    }

    /// Pushes `value` along the ray for `limit` (possibly infinite).
    pub fn run(
        &self,
        value: f64,
        limit: f64,
        mut sink: Option<&mut Vec<SectionEvent>>,
    ) -> Result<SweepEnd> {
        let scene = self.scene;
        let tol = scene.tolerances.event;
        let big = scene.tolerances.blowup_threshold;
        let l = scene.lambda();
        let d = self.heading.sign();
        let alive = |distance, value, events| SweepEnd {
            distance,
            value,
            blown: false,
            events,
        };
        if value == 0.0 || limit <= 0.0 {
            return Ok(alive(limit.max(0.0), value, 0));
        }
        if value.abs() > big {
            return Ok(SweepEnd {
                distance: 0.0,
                value,
                blown: true,
                events: 0,
            });
        }
        // Values moving against the magnifying side only shrink.
        if limit.is_infinite() && value.signum() != d {
            return Ok(alive(f64::INFINITY, value, 0));
        }

        let alphas: Vec<f64> = scene.orbits.iter().map(|o| o.slope.alpha).collect();
        let tau = self.tau.rem_euclid(1.0);
        let dev = flow_scaled_lattice(scene, tau);
        let inv = dev.inverse();

        let mut k: i32 = 0;
        let mut b = self.base;
        let mut v = value;
        let mut travelled = 0.0f64;
        let mut excl = self.start_exclusion;
        let mut events = 0u64;
        let mut steps = 0u64;
        let mut hits: Vec<SingularityHit> = Vec::new();
        let true_start = self.base;

        loop {
            steps += 1;
            if steps + events > scene.tolerances.max_events {
                return Err(Error::Stalled(scene.tolerances.max_events));
            }
            while v.abs() > l {
                k += 1;
                b = [b[0] * l, b[1] / l];
                v /= l;
            }
            if v == 0.0 {
                return Ok(alive(limit, 0.0, events));
            }
            while v.abs() < 1.0 / l {
                k -= 1;
                b = [b[0] / l, b[1] * l];
                v *= l;
            }
            let n = inv.apply(b);
            let shift = dev.apply([n[0].round(), n[1].round()]);
            b = [b[0] - shift[0], b[1] - shift[1]];

            let scale = l.powi(k);
            let remaining = (limit - travelled) * scale;
            let last = remaining <= 1.0;
            let width = if last { remaining } else { 1.0 };
            let end_excl = if last {
                self.end_exclusion * scale
            } else {
                0.0
            };
            let (x0, x1) = match self.heading {
                Heading::East => (b[0] + excl, b[0] + width - end_excl),
                Heading::West => (b[0] - width + end_excl, b[0] - excl),
            };
            // Tall enough for any value reached before the next rescale.
            let (y0, y1) = if v > 0.0 {
                (b[1], b[1] + l * l)
            } else {
                (b[1] - l * l, b[1])
            };
            hits.clear();
            if x1 > x0 {
                for_each_singularity(scene, tau, &Window::new(x0, x1, y0, y1), |h| {
                    if alphas[h.orbit] != 1.0 {
                        hits.push(h)
                    }
                });
            }
            let along = |h: &SingularityHit| d * (h.position[0] - b[0]);
            hits.sort_by(|p, q| along(p).total_cmp(&along(q)));

            let mut restart_at: Option<f64> = None;
            let mut i = 0;
            while i < hits.len() {
                let lead = along(&hits[i]);
                let mut j = i + 1;
                while j < hits.len() && along(&hits[j]) - lead <= tol {
                    j += 1;
                }
                let batch = &mut hits[i..j];
                batch.sort_by(|p, q| {
                    (p.position[1] - b[1])
                        .abs()
                        .total_cmp(&(q.position[1] - b[1]).abs())
                });
                let before = v;
                for hit in batch.iter() {
                    let h = hit.position[1] - b[1];
                    let relevant = if v > 0.0 {
                        h > 0.0 && h < v
                    } else {
                        h < 0.0 && h > v
                    };
                    if !relevant {
                        continue;
                    }
                    let alpha = alphas[hit.orbit];
                    let factor = if v.signum() == d { alpha } else { 1.0 / alpha };
                    let after = h + factor * (v - h);
                    events += 1;
                    if let Some(sink) = sink.as_deref_mut() {
                        let t = travelled + along(hit) / scale;
                        sink.push(SectionEvent {
                            time: t,
                            hit: SingularityHit {
                                position: [true_start[0] + d * t, true_start[1] + h * scale],
                                ..*hit
                            },
                            value_before: v * scale,
                            value_after: after * scale,
                            factor_applied: factor,
                        });
                    }
                    v = after;
                }
                if v != before {
                    if v.abs() * scale > big {
                        return Ok(SweepEnd {
                            distance: travelled + lead / scale,
                            value: v * scale,
                            blown: true,
                            events,
                        });
                    }
                    if v.abs() > l || v.abs() < 1.0 / l {
                        restart_at = Some(lead);
                        break;
                    }
                }
                i = j;
            }
            match restart_at {
                Some(offset) => {
                    travelled += offset / scale;
                    b[0] += d * offset;
                    excl = tol;
                }
                None => {
                    if last {
                        return Ok(alive(limit, v * scale, events));
                    }
                    travelled += width / scale;
                    b[0] += d * width;
                    excl = 0.0;
                }
            }
        }
    }
}
