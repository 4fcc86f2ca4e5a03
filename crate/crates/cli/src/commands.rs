use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use holonomy_core::blowup::BoundReport;
use holonomy_core::{
    advance_section_toward, build_quotient, ergodic_counts, estimate_constants, filling_monodromy,
    order_witness, relation_residual, sample_rays, standard_samples, t_max_east, torus_relation,
    validate_slope, CountSummary, ErgodicConstants, FiberValue, Gluing, Heading, Ray, Scene,
    TraceStatus, TreePoint,
};
use serde::Serialize;

use crate::{GluingArg, HeadingArg, Outcome, Status};

/// Meridian transport must return every sample to within this.
pub const MONODROMY_TOL: f64 = 1e-6;
/// Relative agreement of the degeneracy dilation with its predicted factor.
pub const WITNESS_TOL: f64 = 1e-9;
pub const COUNT_AREAS: [f64; 3] = [10.0, 100.0, 1000.0];
pub const COUNT_TOLS: [f64; 3] = [0.3, 0.1, 0.05];

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn err(e: holonomy_core::Error) -> String {
    e.to_string()
}

pub fn ray_or_sample(scene: &Scene, base: Option<&[f64]>, seed: u64) -> Ray {
    match base {
        Some([e, n]) => Ray::new([*e, *n]),
        _ => sample_rays(scene, 1, seed)[0],
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OrbitCheck {
    index: usize,
    period: usize,
    prongs: u32,
    omega: i64,
    slope: (i64, i64),
    alpha: f64,
    magnifying: bool,
    closes: bool,
    degeneracy_slope: (i64, i64),
    fiber_slope: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CheckReport {
    lambda: f64,
    kappa: f64,
    alpha_max: f64,
    alpha_min: Option<f64>,
    reflected: bool,
    orbits: Vec<OrbitCheck>,
    warnings: Vec<String>,
}

pub fn check(scene: &Scene) -> Outcome {
    let mut warnings = Vec::new();
    let orbits = scene
        .orbits
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let r = validate_slope(i, &o.spec, &o.slope);
            warnings.extend(r.warning.clone());
            OrbitCheck {
                index: i,
                period: o.spec.period,
                prongs: o.spec.prongs,
                omega: o.spec.omega,
                slope: (o.slope.p, o.slope.q),
                alpha: r.alpha,
                magnifying: o.magnifying(),
                closes: r.closes,
                degeneracy_slope: r.degeneracy_slope,
                fiber_slope: r.fiber_slope,
            }
        })
        .collect();
    let status = if warnings.is_empty() {
        Status::Pass
    } else {
        Status::Warning
    };
    let report = CheckReport {
        lambda: scene.lambda(),
        kappa: scene.kappa,
        alpha_max: scene.alpha_max,
        alpha_min: scene.alpha_min,
        reflected: scene.reflected,
        orbits,
        warnings,
    };
    Outcome {
        text: json(&report),
        status,
    }
}

pub fn trace(
    scene: &Scene,
    x: f64,
    base: Option<&[f64]>,
    horizon: f64,
    heading: HeadingArg,
    seed: u64,
) -> Result<Outcome, String> {
    let ray = ray_or_sample(scene, base, seed);
    let heading = match heading {
        HeadingArg::East => Heading::East,
        HeadingArg::West => Heading::West,
    };
    let tr = advance_section_toward(scene, &ray, heading, x, horizon).map_err(err)?;
    let mut out = String::from("t,value,event_flag,orbit_index,factor\n");
    writeln!(out, "0,{x},0,-1,1").unwrap();
    for e in &tr.events {
        writeln!(
            out,
            "{},{},1,{},{}",
            e.time, e.value_after, e.hit.orbit, e.factor_applied
        )
        .unwrap();
    }
    match tr.status {
        TraceStatus::AliveAt(t) => {
            let v = tr.samples.last().map_or(x, |s| s.1);
            writeln!(out, "{t},{v},0,-1,1").unwrap();
        }
        TraceStatus::BlownUp { t_max, .. } => {
            let v = if x > 0.0 { "inf" } else { "-inf" };
            writeln!(out, "{t_max},{v},2,-1,1").unwrap();
        }
    }
    Ok(Outcome {
        text: out,
        status: Status::Pass,
    })
}

pub fn tmax(scene: &Scene, xs: &[f64], rays: usize, seed: u64) -> Result<Outcome, String> {
    if let Some(bad) = xs.iter().find(|x| x.is_nan() || **x <= 0.0) {
        return Err(format!("start values must be positive, got {bad}"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = String::from("ray,east,north,x,t_max\n");
    let mut status = Status::Pass;
    for (i, ray) in sample_rays(scene, rays, seed).iter().enumerate() {
        let mut last = f64::INFINITY;
        for &x in &sorted {
            let t = t_max_east(scene, ray, x.into()).map_err(err)?;
            writeln!(out, "{i},{},{},{x},{t}", ray.base[0], ray.base[1]).unwrap();
            // Larger starts blow up sooner.
            if t >= last {
                eprintln!("ray {i}: t_max not decreasing at x = {x}");
                status = Status::Failure;
            }
            last = t;
        }
    }
    Ok(Outcome { text: out, status })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MonodromyReport {
    #[serde(rename = "loop")]
    loop_name: String,
    orbit: usize,
    hug_radius: f64,
    samples: Vec<(FiberValue, FiberValue)>,
    max_deviation: f64,
    wraparound: i64,
    algebraic_product: f64,
    preserves_order: bool,
    pass: bool,
}

pub fn monodromy(
    scene: &Scene,
    orbit: usize,
    radius: f64,
    samples: usize,
    range: f64,
) -> Result<Outcome, String> {
    let r =
        filling_monodromy(scene, orbit, radius, &standard_samples(samples, range)).map_err(err)?;
    let h = &r.homeo;
    let pass = h.max_deviation_from_identity < MONODROMY_TOL && h.wraparound == 0;
    let report = MonodromyReport {
        loop_name: r.word.name.clone(),
        orbit,
        hug_radius: radius,
        samples: h
            .sample_in
            .iter()
            .copied()
            .zip(h.sample_out.iter().copied())
            .collect(),
        max_deviation: h.max_deviation_from_identity,
        wraparound: h.wraparound,
        algebraic_product: r.algebraic_product,
        preserves_order: h.preserves_circular_order(),
        pass,
    };
    Ok(Outcome {
        text: json(&report),
        status: if pass { Status::Pass } else { Status::Failure },
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RelationLine {
    name: String,
    residual: f64,
    pass: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WitnessLine {
    dilation_factor: f64,
    expected_factor: f64,
    nontrivial: bool,
    pass: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RelationsReport {
    relations: Vec<RelationLine>,
    order_witness: Option<WitnessLine>,
}

pub fn relations(scene: &Scene, samples: usize) -> Result<Outcome, String> {
    let xs = standard_samples(samples, 10.0);
    let mut lines = Vec::new();
    let word = torus_relation(scene).map_err(err)?;
    let residual = relation_residual(scene, std::slice::from_ref(&word), &xs).map_err(err)?;
    lines.push(RelationLine {
        name: word.name,
        residual,
        pass: residual < MONODROMY_TOL,
    });
    for i in 0..scene.orbits.len() {
        let r = filling_monodromy(scene, i, 0.05, &xs).map_err(err)?;
        let residual = r.homeo.max_deviation_from_identity;
        lines.push(RelationLine {
            name: r.word.name,
            residual,
            pass: residual < MONODROMY_TOL && r.homeo.wraparound == 0,
        });
    }
    let order_witness = if scene.has_magnifying_orbit() {
        let w = order_witness(scene).map_err(err)?;
        let close =
            (w.dilation_factor - w.expected_factor).abs() <= WITNESS_TOL * w.expected_factor;
        Some(WitnessLine {
            dilation_factor: w.dilation_factor,
            expected_factor: w.expected_factor,
            nontrivial: w.nontrivial,
            pass: close && w.nontrivial,
        })
    } else {
        None
    };
    let failed = lines.iter().any(|l| !l.pass) || order_witness.as_ref().is_some_and(|w| !w.pass);
    let status = if failed {
        Status::Failure
    } else if order_witness.is_none() {
        Status::Warning
    } else {
        Status::Pass
    };
    Ok(Outcome {
        text: json(&RelationsReport {
            relations: lines,
            order_witness,
        }),
        status,
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CountLine {
    #[serde(flatten)]
    summary: CountSummary,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ErgodicReport {
    constants: ErgodicConstants,
    counts: Vec<CountLine>,
}

pub fn ergodic(
    scene: &Scene,
    samples: usize,
    placements: usize,
    seed: u64,
) -> Result<Outcome, String> {
    let constants = estimate_constants(scene, samples, seed).map_err(err)?;
    let counts: Vec<CountLine> = ergodic_counts(scene, &COUNT_AREAS, placements, seed)
        .map_err(err)?
        .into_iter()
        .zip(COUNT_TOLS)
        .map(|(summary, tolerance)| CountLine {
            pass: summary.worst_deviation <= tolerance,
            summary,
            tolerance,
        })
        .collect();
    let status = if counts.iter().all(|c| c.pass) {
        Status::Pass
    } else {
        Status::Failure
    };
    Ok(Outcome {
        text: json(&ErgodicReport { constants, counts }),
        status,
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BoundsReport {
    constants: ErgodicConstants,
    #[serde(flatten)]
    report: BoundReport,
}

pub fn bounds(
    scene: &Scene,
    samples: usize,
    rays: usize,
    s_grid: &[f64],
    seed: u64,
) -> Result<Outcome, String> {
    let constants = estimate_constants(scene, samples, seed).map_err(err)?;
    let report = holonomy_core::check_bounds(scene, &constants, s_grid, rays, seed).map_err(err)?;
    let status = if report.violations == 0 {
        Status::Pass
    } else {
        Status::Failure
    };
    Ok(Outcome {
        text: json(&BoundsReport { constants, report }),
        status,
    })
}

pub fn gluing(g: GluingArg) -> Gluing {
    match g {
        GluingArg::A => Gluing::A,
        GluingArg::B => Gluing::B,
    }
}

pub fn tree(
    g: GluingArg,
    depth: u32,
    resolution: u32,
    pairs: usize,
    dot: Option<&Path>,
    seed: u64,
) -> Result<Outcome, String> {
    let q = build_quotient(gluing(g), depth, resolution).map_err(err)?;
    let mut out = String::new();
    let mut ok = true;
    writeln!(out, "gluing: {:?}", q.gluing).unwrap();
    writeln!(out, "depth: {depth}").unwrap();
    writeln!(out, "resolution: {resolution}").unwrap();
    writeln!(out, "classes: {}", q.class_count()).unwrap();
    let total = q.is_total_order();
    writeln!(out, "total order: {total}").unwrap();
    match q.gluing {
        Gluing::A => {
            let expected = depth as usize * (1 << resolution) + 1;
            let equivariant = q.shift_equivariant();
            writeln!(out, "expected classes: {expected}").unwrap();
            writeln!(out, "shift equivariant: {equivariant}").unwrap();
            ok &= total && equivariant && q.class_count() == expected;
        }
        Gluing::B => {
            let v = |w: &str| TreePoint::vertex(w, resolution);
            let spine_max = 5.min(depth.saturating_sub(1)) as usize;
            let spine = (1..=spine_max).try_fold(true, |acc, n| {
                q.same_class(&v("L"), &v(&format!("{}L", "R".repeat(n))))
                    .map(|same| acc && same)
            });
            let spine = spine.map_err(err)?;
            writeln!(out, "spine identified (n <= {spine_max}): {spine}").unwrap();
            let comparable = if depth >= 3 {
                let c = q.comparable(&v("LL"), &v("RLL")).map_err(err)?;
                writeln!(out, "v0LL and v0RLL comparable: {c}").unwrap();
                c
            } else {
                false
            };
            let survey = q.claim_survey(pairs, seed).map_err(err)?;
            writeln!(
                out,
                "claim pairs: {} (pool {}, related {})",
                survey.pairs, survey.pool, survey.related
            )
            .unwrap();
            writeln!(out, "closed criterion agrees: {}", survey.closed_agree).unwrap();
            writeln!(out, "literal criterion agrees: {}", survey.literal_agree).unwrap();
            for d in survey.disagreements.iter().take(5) {
                writeln!(
                    out,
                    "  {} over {}: brute {} closed {} literal {}",
                    d.a, d.b, d.brute_force, d.closed, d.literal
                )
                .unwrap();
            }
            ok &= !total && spine && !comparable && survey.closed_agree == survey.pairs;
        }
    }
    if let Some(path) = dot {
        fs::write(path, q.to_dot()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(Outcome {
        text: out,
        status: if ok { Status::Pass } else { Status::Failure },
    })
}
