//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Runs without the libtest harness so the lines always show.

#[path = "../../core/tests/support/fine_step.rs"]
mod fine_step;

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fine_step::FineStep;
use holonomy_core::blowup::sample_ray;
use holonomy_core::{
    advance_section, build_quotient, build_scene, check_bounds, ergodic_counts, estimate_constants,
    filling_monodromy, invert_t_max, loop_monodromy, order_witness, relation_residual, sample_rays,
    singularities_in_window_at, standard_samples, t_max_east, torus_relation, Gluing, Move,
    OrbitInput, PathSpec, RationalPoint, Scene, TraceStatus, TreePoint, Window,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 61320;

// Criterion 1
const ALGEBRAIC_TOL: f64 = 1e-12;
const MONODROMY_TOL: f64 = 1e-6;
const HUG_RADIUS: f64 = 0.05;
// Criterion 2
const SECTION_RAYS: usize = 5;
const SECTION_HORIZON: f64 = 50.0;
// Criterion 3
const ORACLE_INSTANCES: usize = 100;
const ORACLE_REL_TOL: f64 = 1e-3;
const ORACLE_HORIZON: f64 = 200.0;
// Criterion 4
const MONOTONE_PAIRS: usize = 50;
const INVERT_TARGETS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const INVERT_TOL: f64 = 0.05;
// Criterion 5
const CONSTANT_SAMPLES: usize = 10_000;
const BOUND_S: [f64; 3] = [1.0, 10.0, 100.0];
const BOUND_RAYS: usize = 20;
// Criterion 6
const COUNT_AREAS: [f64; 3] = [10.0, 100.0, 1000.0];
const COUNT_TOLS: [f64; 3] = [0.3, 0.1, 0.05];
const COUNT_PLACEMENTS: usize = 100;
// Criterion 7
const FLAT_LOOPS: usize = 200;
const FLAT_TOL: f64 = 1e-9;
const EQUIVARIANCE_EPS: [f64; 3] = [0.1, 0.5, 1.0];
const EQUIVARIANCE_TOL: f64 = 1e-8;
const EQUIVARIANCE_PATHS: usize = 50;
// Criterion 8
const WITNESS_TOL: f64 = 1e-9;
const RELATION_TOL: f64 = 1e-6;
const RELATION_SAMPLES: usize = 21;
// Criterion 9
const TREE_DEPTH: u32 = 8;
const CLAIM_PAIRS: usize = 200;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn fig8() -> Scene {
    build_scene(
        [[2, 1], [1, 1]],
        &[OrbitInput::new(RationalPoint::new(0, 0, 1), 1, (5, 1))],
    )
    .unwrap()
}

fn meridian(s: &Scene) -> Verdict {
    let r = filling_monodromy(s, 0, HUG_RADIUS, &standard_samples(21, 10.0)).unwrap();
    let alg = (r.algebraic_product - 1.0).abs();
    let dev = r.homeo.max_deviation_from_identity;
    let wrap = r.homeo.wraparound;
    verdict(
        alg < ALGEBRAIC_TOL && dev < MONODROMY_TOL && wrap == 0,
        format!("|product - 1| = {alg:.2e}, deviation {dev:.2e}, wraparound {wrap}"),
    )
}

fn section_fates(s: &Scene) -> Verdict {
    let rays = sample_rays(s, SECTION_RAYS, SEED);
    let (mut survived, mut blew_up, mut decreasing) = (0, 0, 0);
    for ray in &rays {
        for x in [-2.0, -1.0, -0.5] {
            let tr = advance_section(s, ray, x, SECTION_HORIZON).unwrap();
            let bounded = tr.samples.iter().all(|&(_, v)| v.abs() <= x.abs());
            if matches!(tr.status, TraceStatus::AliveAt(t) if t >= SECTION_HORIZON) && bounded {
                survived += 1;
            }
        }
        let mut times = Vec::new();
        for x in [0.5, 1.0, 2.0] {
            let tr = advance_section(s, ray, x, SECTION_HORIZON).unwrap();
            if let Some(t) = tr.t_max() {
                blew_up += 1;
                times.push(t);
            }
        }
        if times.len() == 3 && times.windows(2).all(|w| w[1] < w[0]) {
            decreasing += 1;
        }
    }
    let n = SECTION_RAYS * 3;
    verdict(
        survived == n && blew_up == n && decreasing == SECTION_RAYS,
        format!(
            "negative survive {survived}/{n}, positive blow up {blew_up}/{n}, t_max decreasing on {decreasing}/{SECTION_RAYS} rays"
        ),
    )
}

fn oracle(s: &Scene) -> Verdict {
    let slow = FineStep::new(s, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst, mut bad) = (0.0f64, 0);
    for _ in 0..ORACLE_INSTANCES {
        let ray = sample_ray(s, &mut rng);
        let x = 0.25 * 16f64.powf(rng.gen::<f64>());
        let engine = t_max_east(s, &ray, x.into()).unwrap();
        match slow.tmax_east(ray.base, x, ORACLE_HORIZON) {
            Some(t) => {
                let rel = (engine - t).abs() / t;
                worst = worst.max(rel);
                if rel >= ORACLE_REL_TOL {
                    bad += 1;
                }
            }
            None => bad += 1,
        }
    }
    verdict(
        bad == 0,
        format!(
            "{ORACLE_INSTANCES} instances, dt {}, worst relative error {worst:.2e}, {bad} outside",
            slow.dt
        ),
    )
}

fn monotone_and_dense(s: &Scene) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0;
    for _ in 0..MONOTONE_PAIRS {
        let ray = sample_ray(s, &mut rng);
        let a = 0.1 * 100f64.powf(rng.gen::<f64>());
        let b = a * (1.0 + 0.5 * rng.gen::<f64>() + 1e-6);
        let (ta, tb) = (
            t_max_east(s, &ray, a.into()).unwrap(),
            t_max_east(s, &ray, b.into()).unwrap(),
        );
        if tb >= ta {
            violations += 1;
        }
    }
    let ray = sample_rays(s, 1, SEED)[0];
    let mut worst = 0.0f64;
    for target in INVERT_TARGETS {
        let x = invert_t_max(s, &ray, target, 1e-6).unwrap();
        let t = t_max_east(s, &ray, x.into()).unwrap();
        worst = worst.max((t - target).abs());
    }
    verdict(
        violations == 0 && worst <= INVERT_TOL,
        format!("{violations} monotonicity violations in {MONOTONE_PAIRS} pairs, worst target miss {worst:.2e}"),
    )
}

fn bounds(s: &Scene) -> Verdict {
    let k = estimate_constants(s, CONSTANT_SAMPLES, SEED).unwrap();
    let report = check_bounds(s, &k, &BOUND_S, BOUND_RAYS, SEED).unwrap();
    verdict(
        report.violations == 0,
        format!(
            "C = {:.4}, c = {:.4e}, {} checks, {} violations",
            k.big_c,
            k.small_c,
            report.checks.len(),
            report.violations
        ),
    )
}

fn counting(s: &Scene) -> Verdict {
    let sums = ergodic_counts(s, &COUNT_AREAS, COUNT_PLACEMENTS, SEED).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (sum, tol) in sums.iter().zip(COUNT_TOLS) {
        pass &= sum.worst_deviation <= tol;
        parts.push(format!(
            "A={} worst {:.3} (tol {tol})",
            sum.area, sum.worst_deviation
        ));
    }
    verdict(pass, parts.join(", "))
}

fn small_commutator(s: &Scene, rng: &mut ChaCha8Rng) -> Option<PathSpec> {
    let lam = s.lambda();
    let base = [rng.gen::<f64>(), rng.gen::<f64>()];
    let tau = rng.gen::<f64>();
    let a = rng.gen_range(-0.02..0.02);
    let b = rng.gen_range(-0.02..0.02);
    let moves = match rng.gen_range(0..3) {
        0 => {
            let w = Window::new(
                base[0].min(base[0] + a),
                base[0].max(base[0] + a),
                base[1].min(base[1] + b),
                base[1].max(base[1] + b),
            );
            if !singularities_in_window_at(s, tau, &w).unwrap().is_empty() {
                return None;
            }
            vec![
                Move::East(a),
                Move::North(b),
                Move::East(-a),
                Move::North(-b),
            ]
        }
        1 => vec![
            Move::Flow(a),
            Move::North(b),
            Move::Flow(-a),
            Move::North(-b * lam.powf(-a)),
        ],
        _ => vec![
            Move::Flow(a),
            Move::East(b),
            Move::Flow(-a),
            Move::East(-b * lam.powf(a)),
        ],
    };
    Some(PathSpec::new(base, tau, moves))
}

fn random_path(rng: &mut ChaCha8Rng) -> PathSpec {
    let n = rng.gen_range(1..5);
    let moves = (0..n)
        .map(|_| match rng.gen_range(0..3) {
            0 => Move::East(rng.gen_range(-0.8..0.8)),
            1 => Move::North(rng.gen_range(-0.8..0.8)),
            _ => Move::Flow(rng.gen_range(-0.5..0.5)),
        })
        .collect();
    PathSpec::new([rng.gen(), rng.gen()], 0.0, moves)
}

fn flatness(s: &Scene) -> Verdict {
    use holonomy_core::{full_transport_path, transport_flow, CompiledPath, FiberValue, Unrolled};

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let xs = standard_samples(21, 10.0);
    let (mut loops, mut worst_loop, mut inf_moved) = (0, 0.0f64, 0);
    while loops < FLAT_LOOPS {
        let Some(path) = small_commutator(s, &mut rng) else {
            continue;
        };
        let r = loop_monodromy(s, &path, None, &xs).unwrap();
        worst_loop = worst_loop.max(r.max_deviation);
        if !r.inf_fixed {
            inf_moved += 1;
        }
        loops += 1;
    }

    let lam = s.lambda();
    let full = |p: &PathSpec, x: Unrolled| {
        let c = CompiledPath::compile(s, p, None).unwrap();
        full_transport_path(s, &c, x).unwrap()
    };
    let mut worst_eq = 0.0f64;
    for _ in 0..EQUIVARIANCE_PATHS {
        let path = random_path(&mut rng);
        let x = rng.gen_range(-5.0..5.0);
        for eps in EQUIVARIANCE_EPS {
            let (fe, fnn) = (lam.powf(-eps), lam.powf(eps));
            let moves = path
                .moves
                .iter()
                .map(|m| match *m {
                    Move::East(d) => Move::East(d * fe),
                    Move::North(d) => Move::North(d * fnn),
                    other => other,
                })
                .collect();
            let moved = PathSpec::new([path.base[0] * fe, path.base[1] * fnn], eps, moves);
            let flow = |u: Unrolled| Unrolled {
                wraps: u.wraps,
                value: transport_flow(s, eps, u.value),
            };
            let left = flow(full(&path, Unrolled::new(x)));
            let right = full(&moved, flow(Unrolled::new(x)));
            let gap = match (left.value, right.value) {
                (FiberValue::Finite(p), FiberValue::Finite(q)) if left.wraps == right.wraps => {
                    (p - q).abs() / p.abs().max(1.0)
                }
                _ => (left.lift() - right.lift()).abs(),
            };
            worst_eq = worst_eq.max(gap);
        }
    }
    verdict(
        worst_loop < FLAT_TOL && inf_moved == 0 && worst_eq < EQUIVARIANCE_TOL,
        format!(
            "{FLAT_LOOPS} loops worst {worst_loop:.2e}, infinity moved {inf_moved}, equivariance worst {worst_eq:.2e}"
        ),
    )
}

fn witness(s: &Scene) -> Verdict {
    let w = order_witness(s).unwrap();
    let rel = (w.dilation_factor - w.expected_factor).abs() / w.expected_factor;
    let nontrivial = w.nontrivial && (w.dilation_factor - 1.0).abs() > WITNESS_TOL;
    let xs = standard_samples(RELATION_SAMPLES, 10.0);
    let word = torus_relation(s).unwrap();
    let mut worst = relation_residual(s, &[word], &xs).unwrap();
    for i in 0..s.orbits.len() {
        let r = filling_monodromy(s, i, HUG_RADIUS, &xs).unwrap();
        worst = worst.max(r.homeo.max_deviation_from_identity);
    }
    verdict(
        rel < WITNESS_TOL && nontrivial && worst < RELATION_TOL,
        format!(
            "dilation {:.12} vs {:.12} (rel {rel:.2e}), relation residual {worst:.2e}",
            w.dilation_factor, w.expected_factor
        ),
    )
}

fn tree() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for g in 1..=3 {
        let q = build_quotient(Gluing::A, TREE_DEPTH, g).unwrap();
        let expected = TREE_DEPTH as usize * (1 << g) + 1;
        ok &= q.is_total_order() && q.class_count() == expected;
        parts.push(format!(
            "A g={g}: {} classes total {}",
            q.class_count(),
            q.is_total_order()
        ));
    }
    let q = build_quotient(Gluing::B, TREE_DEPTH, 2).unwrap();
    let spine = TreePoint::vertex("L", 2);
    let identified = (1..=5).all(|n| {
        let p = TreePoint::vertex(&format!("{}L", "R".repeat(n)), 2);
        q.same_class(&spine, &p).unwrap()
    });
    let incomparable = !q
        .comparable(&TreePoint::vertex("LL", 2), &TreePoint::vertex("RLL", 2))
        .unwrap();
    let survey = q.claim_survey(CLAIM_PAIRS, SEED).unwrap();
    ok &= identified && incomparable && survey.closed_agree == survey.pairs;
    parts.push(format!(
        "B: spine identified {identified}, v0LL/v0RLL incomparable {incomparable}, claims agree {}/{} (literal ancestry {}/{})",
        survey.closed_agree, survey.pairs, survey.literal_agree, survey.pairs
    ));
    verdict(ok, parts.join("; "))
}

fn determinism() -> Verdict {
    let scene = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes/fig8_5_1.json");
    let commands: [&[&str]; 11] = [
        &["check"],
        &["trace", "--x", "1.0"],
        &["tmax", "--x", "0.5,1,2", "--rays", "20"],
        &["monodromy", "--orbit", "0", "--radius", "0.05"],
        &["relations"],
        &["ergodic", "--samples", "2000", "--placements", "20"],
        &["bounds", "--samples", "2000", "--rays", "5"],
        &["tree", "--gluing", "B", "--depth", "8", "--resolution", "2"],
        &["render", "--figure", "blowup"],
        &["render", "--figure", "stepmap"],
        &["render", "--figure", "tree"],
    ];
    let mut differing = Vec::new();
    for args in commands {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_holonomy"))
                .arg("--scene")
                .arg(&scene)
                .args(args)
                .env_remove("HOLONOMY_SEED")
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        if a.stdout != b.stdout || a.status.code() != b.status.code() || a.stdout.is_empty() {
            differing.push(args[0]);
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} commands run twice, differing: {differing:?}",
            commands.len()
        ),
    )
}

fn main() -> ExitCode {
    let s = fig8();
    type Criterion<'a> = (&'a str, Option<Duration>, Box<dyn Fn() -> Verdict + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "meridian identity",
            Some(Duration::from_secs(5)),
            Box::new(|| meridian(&s)),
        ),
        (
            "blowup figure",
            Some(Duration::from_secs(10)),
            Box::new(|| section_fates(&s)),
        ),
        (
            "fine-step oracle",
            Some(Duration::from_secs(60)),
            Box::new(|| oracle(&s)),
        ),
        (
            "monotonicity and density",
            None,
            Box::new(|| monotone_and_dense(&s)),
        ),
        ("blowup time bounds", None, Box::new(|| bounds(&s))),
        ("ergodic counting", None, Box::new(|| counting(&s))),
        ("flatness and equivariance", None, Box::new(|| flatness(&s))),
        (
            "order witness and relations",
            None,
            Box::new(|| witness(&s)),
        ),
        (
            "tree quotients",
            Some(Duration::from_secs(10)),
            Box::new(tree),
        ),
        ("determinism", None, Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took < l);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" of {}s", l.as_secs()));
        println!(
            "criterion {:>2} {}: {name}: {} [{:.2}s{budget}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
