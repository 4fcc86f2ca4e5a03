//! Counting magnifying singularities in rectangles and the blowup-time bounds
//! that follow from uniform density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{t_max_unchecked, Ray};
use crate::error::{Error, Result};
use crate::surface::{for_each_singularity, Scene, Window};
use crate::sweep::Heading;
use crate::transport::FiberValue;

/// The rectangle swept north by `[x0, x0 + length)` at height `y0` for `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaggedRectangle {
    pub x0: f64,
    pub y0: f64,
    pub length: f64,
    pub height: f64,
}

impl RaggedRectangle {
    pub fn area(&self) -> f64 {
        self.length * self.height
    }

    fn window(&self) -> Window {
        Window::new(
            self.x0,
            self.x0 + self.length,
            self.y0,
            self.y0 + self.height,
        )
    }
}

/// Number of magnifying singularities in the rectangle, and its area.
pub fn ragged_count(scene: &Scene, rect: &RaggedRectangle) -> Result<(usize, f64)> {
    if rect.height <= 0.0 || rect.length <= 0.0 {
        return Ok((0, 0.0));
    }
    let predicted = rect.area() * scene.density();
    if predicted > scene.tolerances.window_cap {
        return Err(Error::WindowTooLarge {
            predicted,
            cap: scene.tolerances.window_cap,
        });
    }
    let mut count = 0;
    for_each_singularity(scene, 0.0, &rect.window(), |h| {
        count += h.magnifying as usize
    });
    Ok((count, rect.area()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicConstants {
    pub kappa: f64,
    pub a_star_estimate: f64,
    pub a_kappa_estimate: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "c")]
    pub small_c: f64,
    pub sample_count: usize,
}

/// Inflation applied to the sampled maxima.
const SAFETY: f64 = 1.5;

/// Random base point in the fundamental parallelogram `D [0,1)²`.
fn random_point(scene: &Scene, rng: &mut ChaCha8Rng) -> [f64; 2] {
    scene.eigen.dev.apply([rng.gen::<f64>(), rng.gen::<f64>()])
}

/// Width in `[1, λ)`; any rectangle is equivalent to one of these under the monodromy.
fn random_width(scene: &Scene, rng: &mut ChaCha8Rng) -> f64 {
    scene.lambda().powf(rng.gen::<f64>())
}

/// Height of the first magnifying singularity above `[x0, x0 + w)` at `y0`.
fn first_hit_height(scene: &Scene, x0: f64, y0: f64, w: f64) -> f64 {
    let mut reach = 4.0 / w;
    loop {
        let mut best = f64::INFINITY;
        for_each_singularity(scene, 0.0, &Window::new(x0, x0 + w, y0, y0 + reach), |h| {
            if h.magnifying {
                best = best.min(h.position[1] - y0);
            }
        });
        if best.is_finite() {
            return best;
        }
        reach *= 2.0;
    }
}

/// Estimates the density constants by seeded random sampling.
///
/// `A*` is the largest empty rectangle found, inflated by 1.5. `A_κ` is the
/// smallest area on a fine grid above which every sampled rectangle has fewer
/// than `2κA` magnifying singularities, inflated likewise.
pub fn estimate_constants(scene: &Scene, samples: usize, seed: u64) -> Result<ErgodicConstants> {
    let alpha_min = scene.alpha_min.ok_or(Error::NoMagnifyingOrbit)?;
    let kappa = scene.kappa;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut empty_max = 0.0f64;
    for _ in 0..samples {
        let b = random_point(scene, &mut rng);
        let w = random_width(scene, &mut rng);
        empty_max = empty_max.max(w * first_hit_height(scene, b[0], b[1], w));
    }
    let a_star = SAFETY * empty_max;

    // (area, count) with log-uniform areas in [1/4, 64].
    let mut counted = Vec::with_capacity(samples);
    for _ in 0..samples {
        let b = random_point(scene, &mut rng);
        let w = random_width(scene, &mut rng);
        let area = 0.25 * 256f64.powf(rng.gen::<f64>());
        let rect = RaggedRectangle {
            x0: b[0],
            y0: b[1],
            length: w,
            height: area / w,
        };
        counted.push((area, ragged_count(scene, &rect)?.0 as f64));
    }
    // Smallest grid area past which no sample violates count < 2κA.
    let worst = counted
        .iter()
        .filter(|(a, n)| *n >= 2.0 * kappa * a)
        .map(|(a, _)| *a)
        .fold(0.25f64, f64::max);
    let a_kappa = SAFETY * (worst * 8.0).ceil() / 8.0;

    let big_c = 2.0 * a_star / (1.0 - 2.0 / (1.0 + alpha_min));
    let small_c = a_kappa / scene.alpha_max.powf(2.0 * kappa * a_kappa);
    Ok(ErgodicConstants {
        kappa,
        a_star_estimate: a_star,
        a_kappa_estimate: a_kappa,
        big_c,
        small_c,
        sample_count: samples,
    })
}

/// A ray with base uniform in the fundamental domain, off every prong.
pub fn sample_ray(scene: &Scene, rng: &mut ChaCha8Rng) -> Ray {
    loop {
        let b = random_point(scene, rng);
        if !prong_at_within(scene, b, 1e-8) {
            return Ray::new(b);
        }
    }
}

fn prong_at_within(scene: &Scene, b: [f64; 2], tol: f64) -> bool {
    let reach = scene.tolerances.prong_search_height;
    let mut found = false;
    for_each_singularity(
        scene,
        0.0,
        &Window::new(b[0] - tol, b[0] + tol, b[1] - reach, b[1] + reach),
        |_| found = true,
    );
    found
}

/// `n` rays from a seeded generator.
pub fn sample_rays(scene: &Scene, n: usize, seed: u64) -> Vec<Ray> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_ray(scene, &mut rng)).collect()
}

/// Count statistics for rectangles of one area at random placements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub area: f64,
    pub placements: usize,
    pub mean_ratio: f64,
    /// Largest `|count / area - κ|` over the placements.
    pub worst_deviation: f64,
}

/// Places rectangles of each area with widths in `[1, λ)` at random bases.
pub fn ergodic_counts(
    scene: &Scene,
    areas: &[f64],
    placements: usize,
    seed: u64,
) -> Result<Vec<CountSummary>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(areas.len());
    for &area in areas {
        let (mut sum, mut worst) = (0.0f64, 0.0f64);
        for _ in 0..placements {
            let b = random_point(scene, &mut rng);
            let w = random_width(scene, &mut rng);
            let rect = RaggedRectangle {
                x0: b[0],
                y0: b[1],
                length: w,
                height: area / w,
            };
            let (n, a) = ragged_count(scene, &rect)?;
            let ratio = n as f64 / a;
            sum += ratio;
            worst = worst.max((ratio - scene.kappa).abs());
        }
        out.push(CountSummary {
            area,
            placements,
            mean_ratio: if placements > 0 {
                sum / placements as f64
            } else {
                0.0
            },
            worst_deviation: worst,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub s: f64,
    pub ray: usize,
    pub x: f64,
    pub t_max: f64,
    pub bound: f64,
    /// `true` for the `t_max < C/S` check, `false` for `t_max >= c/S`.
    pub upper: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
    pub violations: usize,
}

/// Checks `t_max < C/S` above `S` and `t_max >= c/S` below it on random rays.
pub fn check_bounds(
    scene: &Scene,
    constants: &ErgodicConstants,
    s_grid: &[f64],
    rays_per_s: usize,
    seed: u64,
) -> Result<BoundReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for &s in s_grid {
        for ray_index in 0..rays_per_s {
            let ray = sample_ray(scene, &mut rng);
            for (factor, upper) in [
                (1.5, true),
                (3.0, true),
                (10.0, true),
                (0.0, false),
                (0.5, false),
                (0.9, false),
            ] {
                let x = factor * s;
                let t = t_max_unchecked(scene, &ray, Heading::East, FiberValue::Finite(x))?;
                let (bound, ok) = if upper {
                    let b = constants.big_c / s;
                    (b, t < b)
                } else {
                    let b = constants.small_c / s;
                    (b, t >= b)
                };
                checks.push(BoundCheck {
                    s,
                    ray: ray_index,
                    x,
                    t_max: t,
                    bound,
                    upper,
                    ok,
                });
            }
        }
    }
    let violations = checks.iter().filter(|c| !c.ok).count();
    Ok(BoundReport { checks, violations })
}
