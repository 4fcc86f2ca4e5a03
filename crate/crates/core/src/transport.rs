//! Partial parallel transport along polygonal paths in the developed plane.
//!
//! A fiber value is the signed north offset from the base point to the tracked
//! point. North and flow arcs act by translation and dilation; east arcs push
//! the value past the prongs they cross, and each crossing dilates the part of
//! the fiber beyond the singularity.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::surface::{flow_scaled_lattice, for_each_singularity, Scene, SingularityHit, Window};
use crate::sweep::{Heading, Sweep};

/// A point of the fiber line, or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberValue {
    Finite(f64),
    Inf,
}

impl FiberValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            FiberValue::Finite(x) => Some(x),
            FiberValue::Inf => None,
        }
    }

    pub fn is_inf(self) -> bool {
        self == FiberValue::Inf
    }

    /// Angle on the fiber circle in `(-π, π]`, with infinity at `π`.
    pub fn angle(self) -> f64 {
        match self {
            FiberValue::Finite(x) => 2.0 * x.atan(),
            FiberValue::Inf => std::f64::consts::PI,
        }
    }

    /// Distance on the fiber circle, measured by angle.
    pub fn circular_distance(self, other: FiberValue) -> f64 {
        let tau = std::f64::consts::TAU;
        let d = (self.angle() - other.angle()).rem_euclid(tau);
        d.min(tau - d)
    }
}

impl From<f64> for FiberValue {
    fn from(x: f64) -> Self {
        FiberValue::Finite(x)
    }
}

impl std::fmt::Display for FiberValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiberValue::Finite(x) => write!(f, "{x}"),
            FiberValue::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for FiberValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FiberValue::Finite(x) => s.serialize_f64(*x),
            FiberValue::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for FiberValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(FiberValue::Finite(x)),
            Raw::Word(w) if w.eq_ignore_ascii_case("inf") => Ok(FiberValue::Inf),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("bad fiber value {w:?}"))),
        }
    }
}

/// Which side of an unstable prong the base point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideTag {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub value: FiberValue,
    pub side: Option<SideTag>,
}

impl FiberPoint {
    pub fn new(value: impl Into<FiberValue>) -> Self {
        FiberPoint {
            value: value.into(),
            side: None,
        }
    }

    pub fn with_side(value: impl Into<FiberValue>, side: SideTag) -> Self {
        FiberPoint {
            value: value.into(),
            side: Some(side),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossDirection {
    #[serde(rename = "LR", alias = "LeftToRight")]
    LeftToRight,
    #[serde(rename = "RL", alias = "RightToLeft")]
    RightToLeft,
}

impl CrossDirection {
    pub fn reversed(self) -> Self {
        match self {
            CrossDirection::LeftToRight => CrossDirection::RightToLeft,
            CrossDirection::RightToLeft => CrossDirection::LeftToRight,
        }
    }
}

/// A generator arc. Serialized as `{"east": 2.5}`, `{"cross": "LR"}` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Move {
    East(f64),
    North(f64),
    Flow(f64),
    Cross(CrossDirection),
}

impl Move {
    pub fn inverse(self) -> Move {
        match self {
            Move::East(d) => Move::East(-d),
            Move::North(d) => Move::North(-d),
            Move::Flow(d) => Move::Flow(-d),
            Move::Cross(c) => Move::Cross(c.reversed()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub base: [f64; 2],
    #[serde(default)]
    pub tau: f64,
    pub moves: Vec<Move>,
}

impl PathSpec {
    pub fn new(base: [f64; 2], tau: f64, moves: Vec<Move>) -> Self {
        PathSpec { base, tau, moves }
    }

    /// Geometric endpoint `(base, tau)`, ignoring legality.
    pub fn endpoint(&self, lambda: f64) -> ([f64; 2], f64) {
        let (mut b, mut tau) = (self.base, self.tau);
        for m in &self.moves {
            match *m {
                Move::East(d) => b[0] += d,
                Move::North(d) => b[1] += d,
                Move::Flow(dt) => {
                    b = [b[0] * lambda.powf(-dt), b[1] * lambda.powf(dt)];
                    tau += dt;
                }
                Move::Cross(_) => {}
            }
        }
        (b, tau)
    }

    /// The reversed path, starting where this one ends.
    pub fn inverse(&self, lambda: f64) -> PathSpec {
        let (base, tau) = self.endpoint(lambda);
        PathSpec {
            base,
            tau,
            moves: self.moves.iter().rev().map(|m| m.inverse()).collect(),
        }
    }

    pub fn then(mut self, other: &PathSpec) -> PathSpec {
        self.moves.extend_from_slice(&other.moves);
        self
    }
}

/// Geometric state carried along a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub base: [f64; 2],
    pub tau: f64,
    pub side: Option<SideTag>,
}

/// The singularity whose unstable prong passes through `base`, with its relative height.
pub fn prong_at(scene: &Scene, tau: f64, base: [f64; 2]) -> Option<(SingularityHit, f64)> {
    let tol = scene.tolerances.event;
    let reach = scene.tolerances.prong_search_height;
    let window = Window::new(
        base[0] - tol,
        base[0] + tol,
        base[1] - reach,
        base[1] + reach,
    );
    let mut best: Option<(SingularityHit, f64)> = None;
    for_each_singularity(scene, tau, &window, |hit| {
        let h = hit.position[1] - base[1];
        if best.is_none_or(|(_, b)| h.abs() < b.abs()) {
            best = Some((hit, h));
        }
    });
    best
}

/// Finite values dilate by `λ^dt`; infinity is fixed.
pub fn transport_flow(scene: &Scene, dt: f64, x: FiberValue) -> FiberValue {
    match x {
        FiberValue::Finite(v) => FiberValue::Finite(v * scene.lambda().powf(dt)),
        FiberValue::Inf => FiberValue::Inf,
    }
}

/// Moves the base north by `dy`, keeping the tracked point fixed.
pub fn transport_north(
    scene: &Scene,
    state: &PathState,
    dy: f64,
    x: FiberValue,
) -> Result<FiberValue> {
    check_vertical_clear(scene, state, dy)?;
    Ok(match x {
        FiberValue::Finite(v) => FiberValue::Finite(v - dy),
        FiberValue::Inf => FiberValue::Inf,
    })
}

fn check_vertical_clear(scene: &Scene, state: &PathState, dy: f64) -> Result<()> {
    if dy == 0.0 {
        return Ok(());
    }
    let tol = scene.tolerances.event;
    let [e, n] = state.base;
    let (lo, hi) = if dy > 0.0 { (n, n + dy) } else { (n + dy, n) };
    let window = Window::new(e - tol, e + tol, lo - tol, hi + tol);
    let mut blocked = None;
    for_each_singularity(scene, state.tau, &window, |hit| {
        let y = hit.position[1];
        if y > lo - tol && y < hi + tol && blocked.is_none() {
            blocked = Some(hit.position);
        }
    });
    match blocked {
        Some([east, north]) => Err(Error::PathThroughSingularity { east, north }),
        None => Ok(()),
    }
}

fn check_horizontal_clear(scene: &Scene, state: &PathState, dx: f64) -> Result<()> {
    let tol = scene.tolerances.event;
    let [e, n] = state.base;
    let (lo, hi) = if dx > 0.0 { (e, e + dx) } else { (e + dx, e) };
    let window = Window::new(lo - tol, hi + tol, n - tol, n + tol);
    let mut blocked = None;
    for_each_singularity(scene, state.tau, &window, |hit| {
        if blocked.is_none() {
            blocked = Some(hit.position);
        }
    });
    match blocked {
        Some([east, north]) => Err(Error::PathThroughSingularity { east, north }),
        None => Ok(()),
    }
}

/// Type 2 arc: the identity, valid only across a singularity-free rectangle.
pub fn transport_east_clear(
    scene: &Scene,
    state: &PathState,
    dx: f64,
    x: FiberValue,
) -> Result<FiberValue> {
    let v = match x {
        FiberValue::Finite(v) if v != 0.0 && dx != 0.0 => v,
        _ => return Ok(x),
    };
    let tol = scene.tolerances.event;
    let [e, n] = state.base;
    let (lo, hi) = if dx > 0.0 { (e, e + dx) } else { (e + dx, e) };
    let (y0, y1) = if v > 0.0 { (n, n + v) } else { (n + v, n) };
    let mut height = None;
    for_each_singularity(
        scene,
        state.tau,
        &Window::new(lo + tol, hi - tol, y0, y1),
        |hit| {
            let h = hit.position[1] - n;
            if h.abs() > tol && (h - v).abs() > tol && height.is_none() {
                height = Some(h);
            }
        },
    );
    match height {
        Some(height) => Err(Error::RectangleNotClear { height }),
        None => Ok(x),
    }
}

/// Type 3 arc: crossing the prong of a singularity at relative height `h`.
pub fn transport_prong_cross(
    scene: &Scene,
    orbit: usize,
    h: f64,
    direction: CrossDirection,
    x: FiberPoint,
) -> Result<FiberPoint> {
    let alpha = scene.orbit(orbit)?.slope.alpha;
    let side = match direction {
        CrossDirection::LeftToRight => SideTag::Right,
        CrossDirection::RightToLeft => SideTag::Left,
    };
    Ok(FiberPoint {
        value: cross_value(alpha, h, direction, x.value),
        side: Some(side),
    })
}

pub(crate) fn cross_value(
    alpha: f64,
    h: f64,
    direction: CrossDirection,
    x: FiberValue,
) -> FiberValue {
    let v = match x {
        FiberValue::Finite(v) => v,
        FiberValue::Inf => return FiberValue::Inf,
    };
    let beyond = if h > 0.0 { v > h } else { v < h };
    if !beyond {
        return x;
    }
    // LR magnifies north of a north singularity and shrinks south of a south one.
    let factor = match (direction, h > 0.0) {
        (CrossDirection::LeftToRight, true) | (CrossDirection::RightToLeft, false) => alpha,
        _ => 1.0 / alpha,
    };
    FiberValue::Finite(h + factor * (v - h))
}

/// One precomputed step of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Step {
    Scale(f64),
    Shift(f64),
    Cross {
        h: f64,
        alpha: f64,
        direction: CrossDirection,
    },
    Sweep {
        tau: f64,
        base: [f64; 2],
        heading: Heading,
        distance: f64,
        /// Singularity sitting exactly at the end of the sweep, if any.
        landing: bool,
    },
}

/// A legal path with all geometric checks done once.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPath {
    pub(crate) steps: Vec<Step>,
    pub start: PathState,
    pub end: PathState,
}

impl CompiledPath {
    pub fn compile(scene: &Scene, path: &PathSpec, side: Option<SideTag>) -> Result<Self> {
        let l = scene.lambda();
        let mut state = PathState {
            base: path.base,
            tau: path.tau,
            side: None,
        };
        if prong_at(scene, state.tau, state.base).is_some() {
            state.side = Some(side.unwrap_or(SideTag::Left));
        }
        let start = state;
        let mut steps = Vec::new();
        for m in &path.moves {
            match *m {
                Move::Flow(dt) => {
                    steps.push(Step::Scale(l.powf(dt)));
                    state.base = [state.base[0] * l.powf(-dt), state.base[1] * l.powf(dt)];
                    state.tau += dt;
                }
                Move::North(dy) => {
                    check_vertical_clear(scene, &state, dy)?;
                    steps.push(Step::Shift(dy));
                    state.base[1] += dy;
                }
                Move::Cross(direction) => {
                    let (hit, h) =
                        prong_at(scene, state.tau, state.base).ok_or(Error::NotOnProng {
                            east: state.base[0],
                            north: state.base[1],
                        })?;
                    let expected = match direction {
                        CrossDirection::LeftToRight => SideTag::Left,
                        CrossDirection::RightToLeft => SideTag::Right,
                    };
                    if h.abs() <= scene.tolerances.event {
                        return Err(Error::BaseOnSingularity);
                    }
                    if state.side != Some(expected) {
                        return Err(Error::NotOnProng {
                            east: state.base[0],
                            north: state.base[1],
                        });
                    }
                    steps.push(Step::Cross {
                        h,
                        alpha: scene.orbits[hit.orbit].slope.alpha,
                        direction,
                    });
                    state.side = Some(expected_after(direction));
                }
                Move::East(dx) => {
                    if dx == 0.0 {
                        continue;
                    }
                    check_horizontal_clear(scene, &state, dx)?;
                    let heading = if dx > 0.0 {
                        Heading::East
                    } else {
                        Heading::West
                    };
                    let facing = match heading {
                        Heading::East => SideTag::Left,
                        Heading::West => SideTag::Right,
                    };
                    if state.side == Some(facing) {
                        let (hit, h) =
                            prong_at(scene, state.tau, state.base).ok_or(Error::NotOnProng {
                                east: state.base[0],
                                north: state.base[1],
                            })?;
                        steps.push(Step::Cross {
                            h,
                            alpha: scene.orbits[hit.orbit].slope.alpha,
                            direction: match heading {
                                Heading::East => CrossDirection::LeftToRight,
                                Heading::West => CrossDirection::RightToLeft,
                            },
                        });
                    }
                    let start_base = state.base;
                    state.base[0] += dx;
                    let landing = prong_at(scene, state.tau, state.base).is_some();
                    steps.push(Step::Sweep {
                        tau: state.tau,
                        base: start_base,
                        heading,
                        distance: dx.abs(),
                        landing,
                    });
                    state.side = landing.then_some(match heading {
                        Heading::East => SideTag::Left,
                        Heading::West => SideTag::Right,
                    });
                }
            }
        }
        Ok(CompiledPath {
            steps,
            start,
            end: state,
        })
    }

    /// Partial transport: a finite value whose section blows up is an error.
    pub fn transport(&self, scene: &Scene, x: FiberValue) -> Result<FiberValue> {
        let mut v = match x {
            FiberValue::Finite(v) => v,
            FiberValue::Inf => return Ok(FiberValue::Inf),
        };
        for step in &self.steps {
            v = match *step {
                Step::Scale(f) => v * f,
                Step::Shift(dy) => v - dy,
                Step::Cross {
                    h,
                    alpha,
                    direction,
                } => cross_value(alpha, h, direction, v.into())
                    .finite()
                    .expect("finite stays finite"),
                Step::Sweep {
                    tau,
                    base,
                    heading,
                    distance,
                    ..
                } => {
                    let end = Sweep::new(scene, tau, base, heading).run(v, distance, None)?;
                    if end.blown {
                        return Err(Error::Blowup {
                            distance: end.distance,
                            east: base[0] + heading.sign() * end.distance,
                        });
                    }
                    end.value
                }
            };
        }
        Ok(FiberValue::Finite(v))
    }

    pub fn transport_point(&self, scene: &Scene, x: FiberValue) -> Result<FiberPoint> {
        Ok(FiberPoint {
            value: self.transport(scene, x)?,
            side: self.end.side,
        })
    }
}

fn expected_after(direction: CrossDirection) -> SideTag {
    match direction {
        CrossDirection::LeftToRight => SideTag::Right,
        CrossDirection::RightToLeft => SideTag::Left,
    }
}

/// Transports one fiber point along a path.
pub fn transport_path(scene: &Scene, path: &PathSpec, x: FiberPoint) -> Result<FiberPoint> {
    CompiledPath::compile(scene, path, x.side)?.transport_point(scene, x.value)
}

/// Result of transporting samples around a closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub pairs: Vec<(FiberValue, FiberValue)>,
    pub max_deviation: f64,
    pub inf_fixed: bool,
}

/// Checks that a path closes up in the bundle.
///
/// The end may differ from the start by a whole number of flow periods and a
/// lattice translation, since both preserve the developed singularity set.
/// Returns the integer lattice shift and the number of periods.
pub fn check_closed(scene: &Scene, path: &PathSpec) -> Result<([i64; 2], i64)> {
    let tol = scene.tolerances.event;
    let (end, tau) = path.endpoint(scene.lambda());
    let not_closed = Error::NotClosed {
        east: end[0],
        north: end[1],
        tau,
    };
    let periods = (tau - path.tau).round();
    if (tau - path.tau - periods).abs() > tol {
        return Err(not_closed);
    }
    let dev = flow_scaled_lattice(scene, path.tau);
    let delta = [end[0] - path.base[0], end[1] - path.base[1]];
    let n = dev.inverse().apply(delta);
    let n = [n[0].round(), n[1].round()];
    let back = dev.apply(n);
    let scale = delta[0].abs().max(delta[1].abs()).max(1.0);
    if (back[0] - delta[0]).abs() > tol * scale || (back[1] - delta[1]).abs() > tol * scale {
        return Err(not_closed);
    }
    Ok(([n[0] as i64, n[1] as i64], periods as i64))
}

/// Transports samples around a closed loop and reports the deviation from identity.
pub fn loop_monodromy(
    scene: &Scene,
    path: &PathSpec,
    side: Option<SideTag>,
    samples: &[FiberValue],
) -> Result<LoopReport> {
    check_closed(scene, path)?;
    let compiled = CompiledPath::compile(scene, path, side)?;
    let mut pairs = Vec::with_capacity(samples.len());
    let mut max_deviation = 0.0f64;
    let mut inf_fixed = true;
    for &x in samples {
        let out = compiled.transport(scene, x)?;
        match (x, out) {
            (FiberValue::Finite(a), FiberValue::Finite(b)) => {
                max_deviation = max_deviation.max((a - b).abs())
            }
            (FiberValue::Inf, o) => inf_fixed &= o.is_inf(),
            _ => max_deviation = f64::INFINITY,
        }
        pairs.push((x, out));
    }
    Ok(LoopReport {
        pairs,
        max_deviation,
        inf_fixed,
    })
}
