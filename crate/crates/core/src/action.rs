//! Monodromy of closed loops under the completed connection, sampled on the
//! fiber circle: meridians of the filled orbits, the degeneracy-slope
//! dilation, relation words, and the step decomposition along a line.

use serde::{Deserialize, Serialize};

use crate::blowup::{full_transport, full_transport_path, t_max, Ray, Unrolled};
use crate::error::{Error, Result};
use crate::surface::{for_each_singularity, Scene, Window};
use crate::sweep::Heading;
use crate::transport::{
    check_closed, CompiledPath, CrossDirection, FiberValue, Move, PathSpec, SideTag,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopClass {
    Filling(usize),
    Wall(usize),
    Commutator,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopWord {
    pub name: String,
    pub path: PathSpec,
    /// Side of the prong the base sits on, when it sits on one.
    pub side: Option<SideTag>,
    pub classification: LoopClass,
}

/// A circle map known at finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledHomeo {
    pub sample_in: Vec<FiberValue>,
    pub sample_out: Vec<FiberValue>,
    /// Lifted images; the lift of each input has `wraps = 0`.
    pub lifted_out: Vec<Unrolled>,
    pub max_deviation_from_identity: f64,
    /// Net number of times the images went around past infinity.
    pub wraparound: i64,
}

impl SampledHomeo {
    /// Images of inputs in lift order keep their circular order.
    pub fn preserves_circular_order(&self) -> bool {
        let mut order: Vec<usize> = (0..self.sample_in.len()).collect();
        order.sort_by(|&i, &j| {
            Unrolled::new(self.sample_in[i])
                .lift()
                .total_cmp(&Unrolled::new(self.sample_in[j]).lift())
        });
        let lifts: Vec<f64> = order.iter().map(|&i| self.lifted_out[i].lift()).collect();
        lifts.windows(2).all(|w| w[0] <= w[1])
            && lifts
                .last()
                .zip(lifts.first())
                .is_none_or(|(l, f)| l - f <= 1.0)
    }
}

/// `n` evenly spaced values in `[-r, r]`, followed by infinity.
pub fn standard_samples(n: usize, r: f64) -> Vec<FiberValue> {
    let mut out: Vec<FiberValue> = (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.5
            };
            FiberValue::Finite(-r + 2.0 * r * t)
        })
        .collect();
    out.push(FiberValue::Inf);
    out
}

fn deviation(x: FiberValue, out: &Unrolled) -> f64 {
    match (x, out.value) {
        (FiberValue::Finite(a), FiberValue::Finite(b)) if out.wraps == 0 => (a - b).abs(),
        _ => x.circular_distance(out.value),
    }
}

/// Samples the completed-connection monodromy of a closed loop.
pub fn sample_loop(scene: &Scene, word: &LoopWord, samples: &[FiberValue]) -> Result<SampledHomeo> {
    check_closed(scene, &word.path)?;
    let compiled = CompiledPath::compile(scene, &word.path, word.side)?;
    if compiled.end.side != compiled.start.side {
        let (end, tau) = word.path.endpoint(scene.lambda());
        return Err(Error::NotClosed {
            east: end[0],
            north: end[1],
            tau,
        });
    }
    sample_compiled(scene, &compiled, samples)
}

fn sample_compiled(
    scene: &Scene,
    compiled: &CompiledPath,
    samples: &[FiberValue],
) -> Result<SampledHomeo> {
    let mut lifted_out = Vec::with_capacity(samples.len());
    let mut max_dev = 0.0f64;
    let mut wraparound = 0i64;
    for &x in samples {
        let input = Unrolled::new(x);
        let out = full_transport_path(scene, compiled, input)?;
        max_dev = max_dev.max(deviation(x, &out));
        let w = (out.lift() - input.lift()).round() as i64;
        if w.abs() > wraparound.abs() {
            wraparound = w;
        }
        lifted_out.push(out);
    }
    Ok(SampledHomeo {
        sample_in: samples.to_vec(),
        sample_out: lifted_out.iter().map(|u| u.value).collect(),
        lifted_out,
        max_deviation_from_identity: max_dev,
        wraparound,
    })
}

/// The meridian of an orbit: a clockwise walk of `p` turns round one of its
/// singularities, crossing a prong twice per turn, followed by `q` trips
/// around the orbit under the flow.
pub fn meridian_loop(scene: &Scene, orbit: usize, hug_radius: f64) -> Result<LoopWord> {
    let o = scene.orbit(orbit)?;
    let c = scene.orbit_representative(orbit)?;
    let r = hug_radius;
    let delta = r / 2.0;
    if r.is_nan() || r <= 0.0 {
        return Err(Error::RadiusTooLarge(r));
    }
    let mut neighbours = 0;
    for_each_singularity(
        scene,
        0.0,
        &Window::new(
            c[0] - 2.0 * delta,
            c[0] + 2.0 * delta,
            c[1] - 2.0 * r,
            c[1] + 2.0 * r,
        ),
        |_| neighbours += 1,
    );
    if neighbours > 1 {
        return Err(Error::RadiusTooLarge(r));
    }
    let turn = [
        Move::East(delta),
        Move::North(-2.0 * r),
        Move::East(-2.0 * delta),
        Move::North(2.0 * r),
        Move::East(delta),
        Move::Cross(CrossDirection::LeftToRight),
    ];
    let mut moves: Vec<Move> = Vec::new();
    for _ in 0..o.slope.p {
        moves.extend_from_slice(&turn);
    }
    let periods = (o.spec.period as i64 * o.slope.q) as f64;
    if periods != 0.0 {
        moves.push(Move::Flow(periods));
        moves.push(Move::North(r - scene.lambda().powf(periods) * r));
    }
    Ok(LoopWord {
        name: format!("meridian[{orbit}]"),
        path: PathSpec::new([c[0], c[1] + r], 0.0, moves),
        side: Some(SideTag::Right),
        classification: LoopClass::Filling(orbit),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillingReport {
    pub word: LoopWord,
    pub homeo: SampledHomeo,
    /// `λ^{mq} · α^{-p}`, which is 1 for the filling slope.
    pub algebraic_product: f64,
}

pub fn filling_monodromy(
    scene: &Scene,
    orbit: usize,
    hug_radius: f64,
    samples: &[FiberValue],
) -> Result<FillingReport> {
    let word = meridian_loop(scene, orbit, hug_radius)?;
    let o = &scene.orbits[orbit];
    let mq = (o.spec.period as i64 * o.slope.q) as f64;
    let algebraic_product = scene.lambda().powf(mq) * o.slope.alpha.powf(-(o.slope.p as f64));
    let homeo = sample_loop(scene, &word, samples)?;
    Ok(FillingReport {
        word,
        homeo,
        algebraic_product,
    })
}

/// The loop along a degeneracy slope: flow for `m · q_deg` periods, then
/// slide back along the stable prong without crossing any unstable prong.
pub fn degeneracy_loop(scene: &Scene, orbit: usize) -> Result<(LoopWord, f64)> {
    let o = scene.orbit(orbit)?;
    let c = scene.orbit_representative(orbit)?;
    let periods = (o.spec.period as i64 * o.degeneracy_q()) as f64;
    let l = scene.lambda();
    let eps = 1e-3;
    let moves = vec![
        Move::Flow(periods),
        Move::East(eps * (1.0 - l.powf(-periods))),
    ];
    let word = LoopWord {
        name: format!("degeneracy[{orbit}]"),
        path: PathSpec::new([c[0] + eps, c[1]], 0.0, moves),
        side: None,
        classification: LoopClass::Wall(orbit),
    };
    Ok((word, l.powf(periods)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub nontrivial: bool,
    pub witness_loop: LoopWord,
    /// Transported image of 1 along the loop.
    pub dilation_factor: f64,
    /// `λ^{m · q_deg}`.
    pub expected_factor: f64,
    pub homeo: SampledHomeo,
}

/// Shows the action is nontrivial: a degeneracy loop acts by a dilation.
pub fn order_witness(scene: &Scene) -> Result<OrderWitness> {
    let orbit = scene
        .orbits
        .iter()
        .position(|o| o.magnifying())
        .ok_or(Error::NoMagnifyingOrbit)?;
    let (word, expected) = degeneracy_loop(scene, orbit)?;
    let compiled = CompiledPath::compile(scene, &word.path, word.side)?;
    check_closed(scene, &word.path)?;
    let dilation = compiled
        .transport(scene, FiberValue::Finite(1.0))?
        .finite()
        .expect("finite image");
    let homeo = sample_compiled(
        scene,
        &compiled,
        &[0.0.into(), 1.0.into(), (-1.0).into(), FiberValue::Inf],
    )?;
    Ok(OrderWitness {
        nontrivial: (dilation - 1.0).abs() > 1e-9,
        witness_loop: word,
        dilation_factor: dilation,
        expected_factor: expected,
        homeo,
    })
}

/// The bundle relation `t a t⁻¹ φ(a)⁻¹` as a single closed word.
///
/// `a` translates by a lattice vector and `t` is one flow period. The base is
/// chosen so the loop bounds no singularity once projected to time 0.
pub fn torus_relation(scene: &Scene) -> Result<LoopWord> {
    let l = scene.lambda();
    let dev = &scene.eigen.dev;
    let w1 = dev.apply([1.0, 0.0]);
    let w = [l * w1[0], w1[1] / l];
    for i in 1..400 {
        // Deterministic scan of candidate bases near the origin.
        let b = [
            0.013 + 0.0071 * (i % 20) as f64,
            0.011 + 0.0093 * (i / 20) as f64,
        ];
        let t = [
            Move::Flow(1.0),
            Move::East(b[0] * (1.0 - 1.0 / l)),
            Move::North(b[1] * (1.0 - l)),
        ];
        let mut moves = t.to_vec();
        moves.push(Move::East(w1[0]));
        moves.push(Move::North(w1[1]));
        moves.extend(t.iter().rev().map(|m| m.inverse()));
        moves.push(Move::North(-w[1]));
        moves.push(Move::East(-w[0]));
        let path = PathSpec::new(b, 0.0, moves);
        if projected_winding_free(scene, &path) && CompiledPath::compile(scene, &path, None).is_ok()
        {
            return Ok(LoopWord {
                name: "t a t^-1 phi(a)^-1".into(),
                path,
                side: None,
                classification: LoopClass::Commutator,
            });
        }
    }
    Err(Error::PathThroughSingularity {
        east: f64::NAN,
        north: f64::NAN,
    })
}

/// The path's shadow at time 0, as a polygon.
fn projected_polygon(lambda: f64, path: &PathSpec) -> Vec<[f64; 2]> {
    let project = |b: [f64; 2], tau: f64| [b[0] * lambda.powf(tau), b[1] * lambda.powf(-tau)];
    let (mut b, mut tau) = (path.base, path.tau);
    let mut poly = vec![project(b, tau)];
    for m in &path.moves {
        match *m {
            Move::East(d) => b[0] += d,
            Move::North(d) => b[1] += d,
            Move::Flow(dt) => {
                b = [b[0] * lambda.powf(-dt), b[1] * lambda.powf(dt)];
                tau += dt;
            }
            Move::Cross(_) => continue,
        }
        poly.push(project(b, tau));
    }
    poly
}

fn winding_number(poly: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let mut wn = 0;
    for seg in poly.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn projected_winding_free(scene: &Scene, path: &PathSpec) -> bool {
    let poly = projected_polygon(scene.lambda(), path);
    let lo = |i: usize| poly.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
    let hi = |i: usize| poly.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
    let window = Window::new(lo(0) - 1e-6, hi(0) + 1e-6, lo(1) - 1e-6, hi(1) + 1e-6);
    let mut free = true;
    for_each_singularity(scene, 0.0, &window, |h| {
        free &= winding_number(&poly, h.position) == 0;
    });
    free
}

/// Largest deviation from identity of the composite of the words.
///
/// All words must be closed and share one base point.
pub fn relation_residual(
    scene: &Scene,
    relation: &[LoopWord],
    samples: &[FiberValue],
) -> Result<f64> {
    let Some(first) = relation.first() else {
        return Ok(0.0);
    };
    let mut compiled = Vec::with_capacity(relation.len());
    for word in relation {
        check_closed(scene, &word.path)?;
        if word.path.base != first.path.base || word.path.tau != first.path.tau {
            return Err(Error::NotClosed {
                east: word.path.base[0],
                north: word.path.base[1],
                tau: word.path.tau,
            });
        }
        compiled.push(CompiledPath::compile(scene, &word.path, word.side)?);
    }
    let mut worst = 0.0f64;
    for &x in samples {
        let mut u = Unrolled::new(x);
        for c in &compiled {
            u = full_transport_path(scene, c, u)?;
        }
        worst = worst.max(deviation(x, &u));
    }
    Ok(worst)
}

/// One vertical fiber along the line, and the part of the base fiber it covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSegment {
    pub index: i64,
    /// Point of the line carrying this fiber.
    pub position: [f64; 2],
    /// Distance travelled east along the line.
    pub arc: f64,
    /// Half-open interval `[lo, hi)` of the lifted base fiber.
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDecomposition {
    pub base: [f64; 2],
    pub slope: f64,
    pub segments: Vec<StepSegment>,
    pub disjoint: bool,
    /// Largest error of the sampled back-transports against their claimed intervals.
    pub verification_error: f64,
}

/// Cuts the lifted base fiber into the images of fibers along the line
/// through `base` with north/east slope `-slope`.
///
/// The line is a staircase of east steps of length `step`. The fibers sit
/// where the section through infinity at the base returns to infinity; the
/// fiber reached after `j` returns covers `[-j, 1 - j)` of the lifted base fiber.
pub fn step_decomposition(
    scene: &Scene,
    base: [f64; 2],
    slope: f64,
    count: usize,
    step: f64,
) -> Result<StepDecomposition> {
    let mut segments = Vec::with_capacity(count);
    // Staircase prefix leading to each segment.
    let mut prefixes: Vec<Vec<Move>> = Vec::with_capacity(count);
    if count > 0 {
        segments.push(StepSegment {
            index: 0,
            position: base,
            arc: 0.0,
            interval: (0.0, 1.0),
        });
        prefixes.push(Vec::new());
    }
    let dy = -slope * step;
    let mut moves: Vec<Move> = Vec::new();
    let mut u = Unrolled::new(FiberValue::Inf);
    let mut at = base;
    let mut guard = 0usize;
    while segments.len() < count {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::Stalled(guard as u64));
        }
        let ray = Ray::new(at);
        let tm = t_max(scene, &ray, Heading::East, u.value)?;
        if tm > 0.0 && tm < step {
            let index = u.wraps + 1;
            let mut prefix = moves.clone();
            prefix.push(Move::East(tm));
            segments.push(StepSegment {
                index,
                position: ray.point(Heading::East, tm),
                arc: moves.len() as f64 / 2.0 * step + tm,
                interval: (-index as f64, 1.0 - index as f64),
            });
            prefixes.push(prefix);
        }
        u = full_transport(scene, &ray, Heading::East, u, step)?;
        if let FiberValue::Finite(v) = u.value {
            u.value = FiberValue::Finite(v - dy);
        }
        at = [at[0] + step, at[1] + dy];
        moves.push(Move::East(step));
        moves.push(Move::North(dy));
    }
    let mut sorted: Vec<(f64, f64)> = segments.iter().map(|s| s.interval).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let disjoint = sorted.windows(2).all(|w| w[0].1 <= w[1].0);
    let mut verification_error = 0.0f64;
    for (seg, prefix) in segments.iter().zip(&prefixes).skip(1) {
        let back = PathSpec::new(base, 0.0, prefix.clone()).inverse(scene.lambda());
        let compiled = CompiledPath::compile(scene, &back, None)?;
        for x in [FiberValue::Inf, (-1.0).into(), 0.0.into(), 1.0.into()] {
            let lift = full_transport_path(scene, &compiled, Unrolled::new(x))?.lift();
            let miss = (seg.interval.0 - lift).max(lift - seg.interval.1).max(0.0);
            verification_error = verification_error.max(miss);
        }
    }
    Ok(StepDecomposition {
        base,
        slope,
        segments,
        disjoint,
        verification_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_scene, OrbitInput, RationalPoint};

    fn fig8() -> Scene {
        build_scene(
            [[2, 1], [1, 1]],
            &[OrbitInput::new(RationalPoint::new(0, 0, 1), 1, (5, 1))],
        )
        .unwrap()
    }

    #[test]
    fn meridian_is_identity() {
        let s = fig8();
        let r = filling_monodromy(&s, 0, 0.05, &standard_samples(20, 10.0)).unwrap();
        assert!((r.algebraic_product - 1.0).abs() < 1e-12);
        assert!(r.homeo.max_deviation_from_identity < 1e-6, "{:?}", r.homeo);
        assert_eq!(r.homeo.wraparound, 0);
        assert!(r.homeo.preserves_circular_order());
    }

    #[test]
    fn degeneracy_loop_dilates() {
        let s = fig8();
        let w = order_witness(&s).unwrap();
        assert!(w.nontrivial);
        let l = s.lambda();
        assert!((w.expected_factor - l * l).abs() < 1e-12);
        assert!((w.dilation_factor - w.expected_factor).abs() < 1e-9);
        assert_eq!(w.homeo.sample_out[0], FiberValue::Finite(0.0));
    }

    #[test]
    fn relation_is_trivial() {
        let s = fig8();
        let word = torus_relation(&s).unwrap();
        let res = relation_residual(&s, &[word], &standard_samples(20, 10.0)).unwrap();
        assert!(res < 1e-6, "{res}");
        assert_eq!(
            relation_residual(&s, &[], &standard_samples(3, 1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn staircase_steps() {
        let s = fig8();
        let base = [0.2113, 0.1379];
        assert!(step_decomposition(&s, base, 1.0, 0, 0.05)
            .unwrap()
            .segments
            .is_empty());
        let one = step_decomposition(&s, base, 1.0, 1, 0.05).unwrap();
        assert_eq!(one.segments[0].position, base);
        let d = step_decomposition(&s, base, 1.0, 4, 0.05).unwrap();
        assert_eq!(d.segments.len(), 4);
        assert!(d.disjoint);
        assert!(d.verification_error < 1e-6, "{d:?}");
    }

    #[test]
    fn open_word_is_rejected() {
        let s = fig8();
        let word = LoopWord {
            name: "open".into(),
            path: PathSpec::new([0.3, 0.2], 0.0, vec![Move::East(0.01)]),
            side: None,
            classification: LoopClass::Free,
        };
        assert!(matches!(
            relation_residual(&s, &[word], &[1.0.into()]),
            Err(Error::NotClosed { .. })
        ));
    }
}
