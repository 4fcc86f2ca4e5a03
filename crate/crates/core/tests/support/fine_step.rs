//! Independent fine-step simulator for eastward blowup times.
//!
//! Works in true developed coordinates with no frame rescaling. The ray is
//! marched in chunks; inside a chunk every lattice point is found by a direct
//! scan of integer columns, and prong crossings are applied in east order.
//! The reported blowup time is the end of the `dt` step in which the value
//! first exceeds `cutoff`.

#![allow(dead_code)]

use holonomy_core::Scene;

pub struct FineStep {
    dev: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    points: Vec<([f64; 2], f64)>,
    pub dt: f64,
    pub cutoff: f64,
}

fn apply(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

impl FineStep {
    pub fn new(scene: &Scene, tau: f64) -> Self {
        let m = &scene.matrix;
        let (a, b, d) = (m.a as f64, m.b as f64, m.d as f64);
        let tr = a + d;
        let lam = (tr + (tr * tr - 4.0).sqrt()) / 2.0;
        // Eigenvectors from the first row: (b, mu - a).
        let unit = |x: f64, y: f64| {
            let n = (x * x + y * y).sqrt();
            [x / n, y / n]
        };
        let mut u = unit(b, lam - a);
        if u[0] < 0.0 {
            u = [-u[0], -u[1]];
        }
        let s0 = unit(b, 1.0 / lam - a);
        let det = s0[0] * u[1] - s0[1] * u[0];
        let s = [s0[0] / det, s0[1] / det];
        // dev = [s u]^-1 with det [s u] = 1, then flow scaling.
        let (fe, fn_) = (lam.powf(-tau), lam.powf(tau));
        let dev = [[u[1] * fe, -u[0] * fe], [-s[1] * fn_, s[0] * fn_]];
        let inv = [[s[0] / fe, u[0] / fn_], [s[1] / fe, u[1] / fn_]];
        let points = scene
            .orbits
            .iter()
            .flat_map(|o| {
                let alpha = o.slope.alpha;
                o.spec.points.iter().map(move |p| {
                    (
                        [p.x as f64 / p.den as f64, p.y as f64 / p.den as f64],
                        alpha,
                    )
                })
            })
            .collect();
        FineStep {
            dev,
            inv,
            points,
            dt: 1e-4,
            cutoff: 1e5,
        }
    }

    /// Lattice points (position, alpha) in `[x0, x1) × (y0, y1]`.
    pub fn scan(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<([f64; 2], f64)> {
        let corners = [
            apply(&self.inv, [x0, y0]),
            apply(&self.inv, [x0, y1]),
            apply(&self.inv, [x1, y0]),
            apply(&self.inv, [x1, y1]),
        ];
        let lo0 = corners.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
        let hi0 = corners
            .iter()
            .map(|c| c[0])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = Vec::new();
        for &(off, alpha) in &self.points {
            for i in (lo0 - off[0]).floor() as i64..=(hi0 - off[0]).ceil() as i64 {
                let w0 = i as f64 + off[0];
                // Column w0: east = dev00 w0 + dev01 w1, north = dev10 w0 + dev11 w1.
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for (row, a, b) in [(0, x0, x1), (1, y0, y1)] {
                    let k = self.dev[row][1];
                    let base = self.dev[row][0] * w0;
                    let (t0, t1) = ((a - base) / k, (b - base) / k);
                    lo = lo.max(t0.min(t1));
                    hi = hi.min(t0.max(t1));
                }
                if lo > hi {
                    continue;
                }
                for j in (lo - off[1]).floor() as i64 - 1..=(hi - off[1]).ceil() as i64 + 1 {
                    let p = apply(&self.dev, [w0, j as f64 + off[1]]);
                    if p[0] >= x0 && p[0] < x1 && p[1] > y0 && p[1] <= y1 {
                        out.push((p, alpha));
                    }
                }
            }
        }
        out
    }

    /// Blowup time of the eastward section through `x > 0`, or `None` past `horizon`.
    pub fn tmax_east(&self, base: [f64; 2], x: f64, horizon: f64) -> Option<f64> {
        self.tmax(base, x, horizon, 1.0)
    }

    /// Blowup time of the westward section through `x < 0`.
    pub fn tmax_west(&self, base: [f64; 2], x: f64, horizon: f64) -> Option<f64> {
        self.tmax(base, x, horizon, -1.0)
    }

    // `sign` is +1 for east with positive values, -1 for west with negative ones.
    fn tmax(&self, base: [f64; 2], x: f64, horizon: f64, sign: f64) -> Option<f64> {
        let mut v = x * sign;
        let mut t = 0.0f64;
        while t < horizon {
            let height = (4.0 * v).max(4.0);
            let width = (64.0 / v.max(1.0)).min(1.0);
            let mut hits = if sign > 0.0 {
                self.scan(base[0] + t, base[0] + t + width, base[1], base[1] + height)
            } else {
                self.scan(base[0] - t - width, base[0] - t, base[1] - height, base[1])
            };
            hits.sort_by(|a, b| (sign * a.0[0]).total_cmp(&(sign * b.0[0])));
            let mut restarted = false;
            for (p, alpha) in hits {
                let h = sign * (p[1] - base[1]);
                let at = sign * (p[0] - base[0]);
                if at <= t || !(h > 0.0 && h < v) || alpha == 1.0 {
                    continue;
                }
                v = h + alpha * (v - h);
                if v > self.cutoff {
                    return Some((at / self.dt).ceil() * self.dt);
                }
                if v > height {
                    t = at;
                    restarted = true;
                    break;
                }
            }
            if !restarted {
                t += width;
            }
        }
        None
    }
}
