//! The punctured Anosov torus in developing coordinates.
//!
//! A [`Scene`] is a hyperbolic integer monodromy together with a list of
//! punctured periodic orbits and their surgery slopes. Everything downstream
//! works in the developed plane, where east is the contracting (stable)
//! direction and north the expanding (unstable) one. At suspension-flow time
//! `tau` the developed picture is `diag(λ^-tau, λ^tau) · D`, and the set of
//! developed singularities is invariant under integer shifts of `tau`.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// A real 2×2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn inverse(&self) -> Mat2 {
        let d = self.det();
        let m = &self.0;
        Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// Integer monodromy acting on column vectors of the torus `R²/Z²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl MonodromyMatrix {
    /// Validates determinant 1 and trace at least 3.
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self> {
        let out = MonodromyMatrix {
            a: m[0][0],
            b: m[0][1],
            c: m[1][0],
            d: m[1][1],
        };
        let (trace, det) = (out.trace(), out.det());
        if det != 1 || trace < 3 {
            return Err(Error::NonHyperbolic { trace, det });
        }
        Ok(out)
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn as_mat2(&self) -> Mat2 {
        Mat2([
            [self.a as f64, self.b as f64],
            [self.c as f64, self.d as f64],
        ])
    }

    /// Image of a rational point, reduced mod 1.
    pub fn apply_mod1(&self, p: &RationalPoint) -> RationalPoint {
        let den = p.den as i128;
        let (x, y) = (p.x as i128, p.y as i128);
        let nx = (self.a as i128 * x + self.b as i128 * y).rem_euclid(den);
        let ny = (self.c as i128 * x + self.d as i128 * y).rem_euclid(den);
        RationalPoint::new(nx as i64, ny as i64, p.den)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A point of the torus with exact rational coordinates `(x/den, y/den)` in `[0,1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    pub x: i64,
    pub y: i64,
    pub den: i64,
}

impl RationalPoint {
    /// Reduces mod 1 and to lowest common terms.
    pub fn new(x: i64, y: i64, den: i64) -> Self {
        assert!(den > 0, "denominator must be positive");
        let (x, y) = (x.rem_euclid(den), y.rem_euclid(den));
        let g = gcd(gcd(x, y), den).max(1);
        RationalPoint {
            x: x / g,
            y: y / g,
            den: den / g,
        }
    }

    /// Parses a pair of `"num/den"` strings (a bare integer is also accepted).
    pub fn parse(coords: [&str; 2]) -> Result<Self> {
        let (xn, xd) = parse_rational(coords[0])?;
        let (yn, yd) = parse_rational(coords[1])?;
        let den = xd
            .checked_mul(yd)
            .map(|m| m / gcd(xd, yd))
            .ok_or_else(|| Error::BadRational(coords.join(",")))?;
        Ok(RationalPoint::new(xn * (den / xd), yn * (den / yd), den))
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [
            self.x as f64 / self.den as f64,
            self.y as f64 / self.den as f64,
        ]
    }
}

impl std::fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}/{}, {}/{})", self.x, self.den, self.y, self.den)
    }
}

fn parse_rational(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::BadRational(s.to_string());
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let den: i64 = den.parse().map_err(|_| bad())?;
    if den <= 0 {
        return Err(bad());
    }
    Ok((num, den))
}

/// Stretch factor and the normalized developing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenStructure {
    pub lambda: f64,
    pub unstable_dir: [f64; 2],
    pub stable_dir: [f64; 2],
    /// Maps lattice coordinates to `(east, north)`; determinant 1.
    pub dev: Mat2,
    pub dev_inv: Mat2,
}

impl EigenStructure {
    pub fn of(m: &MonodromyMatrix) -> Self {
        let t = m.trace() as f64;
        let lambda = (t + (t * t - 4.0).sqrt()) / 2.0;
        let eigvec = |mu: f64| -> [f64; 2] {
            // (A - mu I) v = 0; use the better-conditioned row.
            let (a, b, c, d) = (m.a as f64, m.b as f64, m.c as f64, m.d as f64);
            let v = if b.abs() >= c.abs() {
                [b, mu - a]
            } else {
                [mu - d, c]
            };
            let n = v[0].hypot(v[1]);
            [v[0] / n, v[1] / n]
        };
        let mut u = eigvec(lambda);
        if u[0] < 0.0 || (u[0] == 0.0 && u[1] < 0.0) {
            u = [-u[0], -u[1]];
        }
        let s0 = eigvec(1.0 / lambda);
        // det [s u] = 1 with u fixed.
        let scale = 1.0 / (s0[0] * u[1] - s0[1] * u[0]);
        let s = [s0[0] * scale, s0[1] * scale];
        let columns = Mat2([[s[0], u[0]], [s[1], u[1]]]);
        EigenStructure {
            lambda,
            unstable_dir: u,
            stable_dir: s0,
            dev: columns.inverse(),
            dev_inv: columns,
        }
    }
}

/// A punctured periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpec {
    pub points: Vec<RationalPoint>,
    pub period: usize,
    pub prongs: u32,
    pub omega: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeSpec {
    pub p: i64,
    pub q: i64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub spec: OrbitSpec,
    pub slope: SlopeSpec,
}

impl Orbit {
    pub fn magnifying(&self) -> bool {
        self.slope.q > 0
    }

    /// Degeneracy slope `(0; k / gcd(omega, k))`.
    pub fn degeneracy_q(&self) -> i64 {
        let k = self.spec.prongs as i64;
        k / gcd(self.spec.omega, k)
    }
}

/// A developed singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityHit {
    pub position: [f64; 2],
    pub orbit: usize,
    pub magnifying: bool,
}

/// Orbit point in lattice coordinates, precomputed for enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Seed {
    pub offset: [f64; 2],
    pub orbit: usize,
    pub magnifying: bool,
}

/// Input for one orbit of [`build_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitInput {
    pub point: RationalPoint,
    pub omega: i64,
    pub slope: (i64, i64),
    pub prongs: u32,
}

impl OrbitInput {
    pub fn new(point: RationalPoint, omega: i64, slope: (i64, i64)) -> Self {
        OrbitInput {
            point,
            omega,
            slope,
            prongs: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub matrix: MonodromyMatrix,
    pub eigen: EigenStructure,
    pub orbits: Vec<Orbit>,
    pub alpha_max: f64,
    pub alpha_min: Option<f64>,
    pub kappa: f64,
    /// All supplied slopes had `p < 0` and were reflected to `p > 0`.
    pub reflected: bool,
    pub tolerances: Tolerances,
    #[serde(skip)]
    seeds: Vec<Seed>,
}

/// Builds a scene, expanding each orbit and normalizing slope signs.
pub fn build_scene(matrix: [[i64; 2]; 2], orbits: &[OrbitInput]) -> Result<Scene> {
    let matrix = MonodromyMatrix::new(matrix)?;
    let eigen = EigenStructure::of(&matrix);

    let nonzero_signs: Vec<i64> = orbits
        .iter()
        .filter(|o| o.slope.1 != 0)
        .map(|o| o.slope.0.signum())
        .collect();
    for (i, o) in orbits.iter().enumerate() {
        if o.slope.0 == 0 {
            return Err(Error::ZeroSlope { orbit: i });
        }
        if o.slope.1 < 0 {
            return Err(Error::SceneFile(format!(
                "orbit {i}: q must be nonnegative"
            )));
        }
        if o.prongs == 0 || o.prongs % 2 != 0 {
            return Err(Error::OddProngs { prongs: o.prongs });
        }
    }
    if nonzero_signs.iter().any(|&s| s > 0) && nonzero_signs.iter().any(|&s| s < 0) {
        return Err(Error::MixedSigns);
    }
    let reflected = !nonzero_signs.is_empty() && nonzero_signs.iter().all(|&s| s < 0);

    let mut built = Vec::with_capacity(orbits.len());
    for o in orbits {
        let points = expand_orbit(&matrix, o.point)?;
        let period = points.len();
        let p = o.slope.0.abs();
        let q = o.slope.1;
        let alpha = eigen.lambda.powf((period as i64 * q) as f64 / p as f64);
        built.push(Orbit {
            spec: OrbitSpec {
                points,
                period,
                prongs: o.prongs,
                omega: o.omega,
            },
            slope: SlopeSpec { p, q, alpha },
        });
    }
    for i in 0..built.len() {
        for j in i + 1..built.len() {
            let first = &built[i].spec.points;
            if built[j].spec.points.iter().any(|p| first.contains(p)) {
                return Err(Error::OverlappingOrbits {
                    first: i,
                    second: j,
                });
            }
        }
    }

    let alpha_max = built.iter().map(|o| o.slope.alpha).fold(1.0, f64::max);
    let alpha_min = built
        .iter()
        .filter(|o| o.magnifying())
        .map(|o| o.slope.alpha)
        .reduce(f64::min);
    let kappa = built
        .iter()
        .filter(|o| o.magnifying())
        .map(|o| o.spec.period as f64)
        .sum();
    let seeds = seeds_for(&built);
    Ok(Scene {
        matrix,
        eigen,
        orbits: built,
        alpha_max,
        alpha_min,
        kappa,
        reflected,
        tolerances: Tolerances::default(),
        seeds,
    })
}

fn seeds_for(orbits: &[Orbit]) -> Vec<Seed> {
    orbits
        .iter()
        .enumerate()
        .flat_map(|(i, o)| {
            let magnifying = o.magnifying();
            o.spec.points.iter().map(move |p| Seed {
                offset: p.to_f64(),
                orbit: i,
                magnifying,
            })
        })
        .collect()
}

fn expand_orbit(m: &MonodromyMatrix, start: RationalPoint) -> Result<Vec<RationalPoint>> {
    let cap = (start.den as u128 * start.den as u128 + 1).min(1 << 24) as usize;
    let mut points = vec![start];
    let mut cur = m.apply_mod1(&start);
    while cur != start {
        if points.len() >= cap {
            return Err(Error::NotPeriodic {
                point: start.to_string(),
            });
        }
        points.push(cur);
        cur = m.apply_mod1(&cur);
    }
    Ok(points)
}

impl Scene {
    pub fn lambda(&self) -> f64 {
        self.eigen.lambda
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    /// Total number of punctures per unit developed area.
    pub fn density(&self) -> f64 {
        self.orbits.iter().map(|o| o.spec.period as f64).sum()
    }

    pub fn has_magnifying_orbit(&self) -> bool {
        self.orbits.iter().any(Orbit::magnifying)
    }

    pub fn orbit(&self, index: usize) -> Result<&Orbit> {
        self.orbits.get(index).ok_or(Error::NoSuchOrbit(index))
    }

    pub(crate) fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    /// Developed position of the first point of an orbit at `tau = 0`.
    pub fn orbit_representative(&self, index: usize) -> Result<[f64; 2]> {
        let o = self.orbit(index)?;
        Ok(self.eigen.dev.apply(o.spec.points[0].to_f64()))
    }

    /// Parses the scene JSON format.
    pub fn from_json(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| {
            Error::SceneFile(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        file.build()
    }
}

/// On-disk scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub matrix: [[i64; 2]; 2],
    pub orbits: Vec<SceneFileOrbit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFileOrbit {
    pub point: [String; 2],
    pub omega: i64,
    pub slope: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prongs: Option<u32>,
}

impl SceneFile {
    pub fn build(&self) -> Result<Scene> {
        let inputs = self
            .orbits
            .iter()
            .map(|o| {
                let point = RationalPoint::parse([&o.point[0], &o.point[1]])?;
                Ok(OrbitInput {
                    point,
                    omega: o.omega,
                    slope: (o.slope[0], o.slope[1]),
                    prongs: o.prongs.unwrap_or(2),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        build_scene(self.matrix, &inputs)
    }
}

/// Outcome of [`validate_slope`]. Parity failure is advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub orbit: usize,
    pub closes: bool,
    pub warning: Option<String>,
    pub degeneracy_slope: (i64, i64),
    pub fiber_slope: bool,
    pub alpha: f64,
}

/// Checks `p ≡ ω q (mod k)` and reports the degeneracy slope.
pub fn validate_slope(index: usize, orbit: &OrbitSpec, slope: &SlopeSpec) -> SlopeReport {
    let k = orbit.prongs as i64;
    let closes = (slope.p - orbit.omega * slope.q).rem_euclid(k) == 0;
    let warning = (!closes).then(|| {
        format!(
            "orbit {index}: slope ({};{}) does not satisfy p = omega*q mod {k} with omega = {}",
            slope.p, slope.q, orbit.omega
        )
    });
    SlopeReport {
        orbit: index,
        closes,
        warning,
        degeneracy_slope: (0, k / gcd(orbit.omega, k)),
        fiber_slope: slope.q == 0,
        alpha: if slope.q == 0 { 1.0 } else { slope.alpha },
    }
}

/// Axis-aligned window `[x0, x1) × (y0, y1]` in developed coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Window { x0, x1, y0, y1 }
    }

    pub fn centered(center: [f64; 2], half_width: f64, half_height: f64) -> Self {
        Window::new(
            center[0] - half_width,
            center[0] + half_width,
            center[1] - half_height,
            center[1] + half_height,
        )
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] <= self.y1
    }

    pub fn translated(&self, by: [f64; 2]) -> Self {
        Window::new(
            self.x0 + by[0],
            self.x1 + by[0],
            self.y0 + by[1],
            self.y1 + by[1],
        )
    }
}

/// The developing transform `diag(λ^-tau, λ^tau) · D`.
pub fn flow_scaled_lattice(scene: &Scene, tau: f64) -> Mat2 {
    let l = scene.lambda();
    Mat2::diag(l.powf(-tau), l.powf(tau)).mul(&scene.eigen.dev)
}

/// Singularities inside `window` at suspension time 0, sorted by east then north.
pub fn singularities_in_window(scene: &Scene, window: &Window) -> Result<Vec<SingularityHit>> {
    singularities_in_window_at(scene, 0.0, window)
}

pub fn singularities_in_window_at(
    scene: &Scene,
    tau: f64,
    window: &Window,
) -> Result<Vec<SingularityHit>> {
    let predicted = window.area() * scene.density();
    if predicted > scene.tolerances.window_cap {
        return Err(Error::WindowTooLarge {
            predicted,
            cap: scene.tolerances.window_cap,
        });
    }
    let mut hits = Vec::new();
    for_each_singularity(scene, tau, window, |h| hits.push(h));
    hits.sort_by(|a, b| {
        a.position[0]
            .total_cmp(&b.position[0])
            .then(a.position[1].total_cmp(&b.position[1]))
    });
    Ok(hits)
}

/// Visits every singularity in `window` (no ordering, no cap).
///
/// Long thin windows are first squared up by the symmetry
/// `diag(λ^k, λ^-k)`, which preserves the developed singularity set.
pub(crate) fn for_each_singularity(
    scene: &Scene,
    tau: f64,
    window: &Window,
    mut visit: impl FnMut(SingularityHit),
) {
    let width = window.x1 - window.x0;
    let height = window.y1 - window.y0;
    if !(width > 0.0 && height > 0.0) {
        return;
    }
    let l = scene.lambda();
    let k = ((height / width).ln() / (2.0 * l.ln())).round() as i32;
    let (sx, sy) = (l.powi(k), l.powi(-k));
    let frame = Window::new(
        window.x0 * sx,
        window.x1 * sx,
        window.y0 * sy,
        window.y1 * sy,
    );
    let dev = flow_scaled_lattice(scene, tau);
    let inv = dev.inverse();
    let corners = [
        inv.apply([frame.x0, frame.y0]),
        inv.apply([frame.x0, frame.y1]),
        inv.apply([frame.x1, frame.y0]),
        inv.apply([frame.x1, frame.y1]),
    ];
    let lo = |i: usize| corners.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
    let hi = |i: usize| {
        corners
            .iter()
            .map(|c| c[i])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (min, max) = ([lo(0), lo(1)], [hi(0), hi(1)]);
    // Scan along the shorter extent of the bounding box.
    let scan = if max[0] - min[0] <= max[1] - min[1] {
        0
    } else {
        1
    };
    let other = 1 - scan;
    let m = &dev.0;
    for seed in scene.seeds() {
        let p = seed.offset;
        let first = (min[scan] - p[scan]).ceil() as i64;
        let last = (max[scan] - p[scan]).floor() as i64;
        for v in first..=last {
            let ws = v as f64 + p[scan];
            // east = m[0][scan]*ws + m[0][other]*wo, likewise north.
            let mut range = (min[other], max[other]);
            for (row, (a, b)) in [(0usize, (frame.x0, frame.x1)), (1, (frame.y0, frame.y1))] {
                let coef = m[row][other];
                let base = m[row][scan] * ws;
                if coef.abs() > 1e-300 {
                    let (t0, t1) = ((a - base) / coef, (b - base) / coef);
                    range.0 = range.0.max(t0.min(t1));
                    range.1 = range.1.min(t0.max(t1));
                }
            }
            if range.0 > range.1 + 1e-9 {
                continue;
            }
            let first_o = (range.0 - p[other] - 1e-9).ceil() as i64;
            let last_o = (range.1 - p[other] + 1e-9).floor() as i64;
            for u in first_o..=last_o {
                let mut w = [0.0; 2];
                w[scan] = ws;
                w[other] = u as f64 + p[other];
                let pos = dev.apply(w);
                if frame.contains(pos) {
                    visit(SingularityHit {
                        position: [pos[0] / sx, pos[1] / sy],
                        orbit: seed.orbit,
                        magnifying: seed.magnifying,
                    });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig8() -> Scene {
        build_scene(
            [[2, 1], [1, 1]],
            &[OrbitInput::new(RationalPoint::new(0, 0, 1), 1, (5, 1))],
        )
        .unwrap()
    }

    /// Largest root of t² - tr·t + 1 by bisection on [1, tr].
    fn char_poly_root(tr: f64) -> f64 {
        let f = |t: f64| t * t - tr * t + 1.0;
        let (mut lo, mut hi) = (1.0, tr);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn figure_eight_stretch_factor() {
        let s = fig8();
        let oracle = char_poly_root(3.0);
        assert!((s.lambda() - oracle).abs() < 1e-14);
        assert!((s.lambda() - 2.618_033_988_7).abs() < 1e-10);
    }

    #[test]
    fn parabolic_rejected() {
        let err = build_scene(
            [[1, 1], [0, 1]],
            &[OrbitInput::new(RationalPoint::new(0, 0, 1), 1, (5, 1))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonHyperbolic { trace: 2, .. }));
    }

    #[test]
    fn half_point_orbit_has_period_three() {
        let s = build_scene(
            [[2, 1], [1, 1]],
            &[OrbitInput::new(RationalPoint::new(1, 1, 2), 1, (5, 1))],
        )
        .unwrap();
        let pts = &s.orbits[0].spec.points;
        assert_eq!(
            pts,
            &vec![
                RationalPoint::new(1, 1, 2),
                RationalPoint::new(1, 0, 2),
                RationalPoint::new(0, 1, 2)
            ]
        );
        assert_eq!(s.orbits[0].spec.period, 3);
    }

    #[test]
    fn conjugation_identity() {
        for m in [
            [[2, 1], [1, 1]],
            [[3, 1], [2, 1]],
            [[5, 2], [2, 1]],
            [[1, 1], [1, 2]],
        ] {
            let s = build_scene(m, &[]).unwrap();
            let l = s.lambda();
            let phi = s.matrix.as_mat2();
            let conj = s.eigen.dev.mul(&phi).mul(&s.eigen.dev_inv);
            assert!(conj.max_abs_diff(&Mat2::diag(1.0 / l, l)) < 1e-12, "{m:?}");
            assert!((s.eigen.dev.det() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_rules() {
        let o = |p, q| OrbitInput::new(RationalPoint::new(0, 0, 1), 1, (p, q));
        let o2 = |p, q| OrbitInput::new(RationalPoint::new(1, 1, 2), 1, (p, q));
        assert_eq!(
            build_scene([[2, 1], [1, 1]], &[o(5, 1), o2(-3, 1)]).unwrap_err(),
            Error::MixedSigns
        );
        assert_eq!(
            build_scene([[2, 1], [1, 1]], &[o(0, 1)]).unwrap_err(),
            Error::ZeroSlope { orbit: 0 }
        );
        let s = build_scene([[2, 1], [1, 1]], &[o(-5, 1), o2(3, 0)]).unwrap();
        assert!(s.reflected);
        assert_eq!(s.orbits[0].slope.p, 5);
        // Fiber slopes carry no sign.
        let s = build_scene([[2, 1], [1, 1]], &[o(5, 1), o2(-3, 0)]).unwrap();
        assert!(!s.reflected);
        assert_eq!(s.alpha_min, Some(s.orbits[0].slope.alpha));
        assert_eq!(s.kappa, 1.0);
    }

    #[test]
    fn slope_validation() {
        let s = fig8();
        let o = &s.orbits[0];
        let r = validate_slope(0, &o.spec, &o.slope);
        assert!(r.closes && r.warning.is_none());
        assert_eq!(r.degeneracy_slope, (0, 2));

        let mut spec = o.spec.clone();
        spec.omega = 0;
        let r = validate_slope(0, &spec, &o.slope);
        assert!(!r.closes && r.warning.is_some());
        assert_eq!(r.degeneracy_slope, (0, 1));

        let fiber = SlopeSpec {
            p: 1,
            q: 0,
            alpha: 1.0,
        };
        let r = validate_slope(0, &o.spec, &fiber);
        assert!(r.fiber_slope);
        assert_eq!(r.alpha, 1.0);
    }

    #[test]
    fn meridian_dilation_identity() {
        let s = build_scene(
            [[2, 1], [1, 1]],
            &[
                OrbitInput::new(RationalPoint::new(0, 0, 1), 1, (5, 1)),
                OrbitInput::new(RationalPoint::new(1, 1, 2), 1, (7, 3)),
            ],
        )
        .unwrap();
        for o in &s.orbits {
            let m = o.spec.period as f64;
            let (p, q) = (o.slope.p as f64, o.slope.q as f64);
            let v = s.lambda().powf(m * q) * o.slope.alpha.powf(-p);
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn origin_window() {
        let s = fig8();
        let hits = singularities_in_window(&s, &Window::centered([0.0, 0.0], 0.1, 0.1)).unwrap();
        assert_eq!(hits.len(), 1);
        assert!(hits[0].position[0].abs() < 1e-15 && hits[0].position[1].abs() < 1e-15);
        assert!(
            singularities_in_window(&s, &Window::new(1.0, 1.0, 0.0, 5.0))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn window_cap() {
        let s = fig8();
        let err = singularities_in_window(&s, &Window::new(0.0, 1e4, 0.0, 1e4)).unwrap_err();
        assert!(matches!(err, Error::WindowTooLarge { .. }));
    }

    #[test]
    fn flow_scaling() {
        let s = fig8();
        assert_eq!(flow_scaled_lattice(&s, 0.0), s.eigen.dev);
        let one = flow_scaled_lattice(&s, 1.0);
        let l = s.lambda();
        for j in 0..2 {
            assert!((one.0[0][j] * l - s.eigen.dev.0[0][j]).abs() < 1e-12);
            assert!((one.0[1][j] / l - s.eigen.dev.0[1][j]).abs() < 1e-12);
        }
        let back = Mat2::diag(l.powf(1.0), l.powf(-1.0)).mul(&one);
        assert!(back.max_abs_diff(&s.eigen.dev) < 1e-12);
    }

    #[test]
    fn scene_json_round_trip() {
        let text = r#"{"matrix": [[2,1],[1,1]], "orbits": [{"point": ["0/1","0/1"], "omega": 1, "slope": [5,1]}]}"#;
        let s = Scene::from_json(text).unwrap();
        assert_eq!(s, fig8());
        let err = Scene::from_json("{\"matrix\": [[2,1],\n [1,1]], ").unwrap_err();
        assert!(matches!(err, Error::SceneFile(ref m) if m.contains("line 2")));
    }
}
