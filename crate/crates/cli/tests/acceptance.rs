//! Acceptance checks, one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tethernet::dynamics::{build_world, Link, PhysicsConfig, Scheme, TargetSpec, WorldState};
use tethernet::env::{
    end_reward, stage_coefficients, step_reward, ClosingTimingToy, DoESample, DoeRanges, EnvConfig,
    TetherNetEnv,
};
use tethernet::learner::{greedy_score, train, TrainConfig};
use tethernet::metrics::hull::Hull;
use tethernet::metrics::{CaptureReport, NetGeometrySnapshot};
use tethernet::reliability::{
    evaluate, evaluate_with, splitmix64, BaselineComparison, ClosePolicy, PolicyRunner,
    RolloutRunner,
};

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("reward oracle", reward_oracle),
        ("stage schedule", stage_schedule),
        ("physics conservation", physics_conservation),
        ("force gradient", force_gradient),
        ("hull oracle", hull_oracle),
        ("closing mechanism", closing_mechanism),
        ("ppo sanity on closing-timing toy", ppo_sanity),
        ("desk-scale trend", desk_trend),
        ("reliability estimator", reliability_estimator),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// Reward coefficient rows typed in by hand, in spreadsheet column order.
const STEP_ROW: [f64; 11] = [
    0.025, 0.025, 0.2, 0.125, 3.0, 3.0, 5.0, 2.0, 2.0, 15.0, 20.0,
];
const END_ROWS: [[f64; 10]; 4] = [
    [0.05, 0.05, 0.4, 0.125, 3.0, 4.0, 6.0, 0.0, 50.0, 0.0],
    [0.1, 0.1, 0.8, 0.25, 3.0, 3.0, 6.0, 0.0, 50.0, 0.0],
    [1.0, 1.0, 8.0, 2.5, 3.0, 3.0, 6.0, 0.0, 50.0, -50.0],
    [2.0, 2.0, 16.0, 5.0, 3.0, 3.0, 3.0, 2.0, 100.0, -50.0],
];

fn end_row(step: u64) -> [f64; 10] {
    match step {
        0..=66_000 => END_ROWS[0],
        66_001..=300_000 => END_ROWS[1],
        300_001..=800_000 => END_ROWS[2],
        _ => END_ROWS[3],
    }
}

// Target box 4.5 x 2.5 x 2.5 m at 30 m: V_t = 28.125 m^3, S_t = 57.5 m^2, q_t = 30 m.
const V_T: f64 = 28.125;
const S_T: f64 = 57.5;
const Q_T: f64 = 30.0;

struct RewardCase {
    step: u64,
    volume: f64,
    area: f64,
    offset: [f64; 3],
    locked: usize,
    t: f64,
    /// `Some(t_close)` for a premature close.
    premature: Option<f64>,
    /// `None` for a per-step reward, `Some(closed)` for the end reward.
    end: Option<bool>,
}

fn oracle(c: &RewardCase) -> f64 {
    let [ox, oy, oz] = c.offset;
    let v = ((c.volume - V_T) / V_T).abs();
    let s = ((c.area - S_T) / S_T).abs();
    let q = (ox * ox + oy * oy + oz * oz).sqrt() / Q_T;
    let nl = c.locked as f64;
    match c.end {
        None => {
            let [w1, w2, w3, w4, c1, c2, c3, c4, c5, t1, t2] = STEP_ROW;
            if let Some(tc) = c.premature {
                return -(t1 - tc) * (t1 - tc);
            }
            let late = 0.12 * (c.t.max(t2) - t2);
            w1 * (c1 - v)
                + w2 * (c2 - s)
                + w3 * (c3 - q)
                + w4 * (nl - c4)
                + 0.4 * (c.t.min(t1) - 4.6)
                - late * late
                + c5
        }
        Some(closed) => {
            let [w1, w2, w3, w4, c1, c2, c3, c4, c5, c6] = end_row(c.step);
            if !closed {
                return c6;
            }
            w1 * (c1 - v) + w2 * (c2 - s) + w3 * (c3 - q) + w4 * (nl - c4) + c5
        }
    }
}

fn reward_oracle() -> Result<String, String> {
    let spec =
        TargetSpec::new(Vector3::new(2.25, 1.25, 1.25), 2000.0, 30.0).map_err(|e| e.to_string())?;
    let target = Vector3::new(0.4, -0.3, 30.0);
    let case = |step, volume, area, offset, locked, t, premature, end| RewardCase {
        step,
        volume,
        area,
        offset,
        locked,
        t,
        premature,
        end,
    };
    let cases = [
        case(1_000, 12.0, 80.0, [3.0, -2.0, -14.0], 0, 2.0, None, None),
        case(70_000, V_T, S_T, [0.0; 3], 2, 4.6, None, None),
        case(400_000, 40.0, 50.0, [1.0, 1.0, -5.0], 3, 17.0, None, None),
        case(
            1_000_000,
            31.0,
            60.0,
            [0.5, 0.0, -2.0],
            12,
            30.0,
            None,
            None,
        ),
        case(
            20_000,
            5.0,
            20.0,
            [4.0, 4.0, -20.0],
            0,
            10.0,
            Some(10.0),
            None,
        ),
        case(
            900_000,
            5.0,
            20.0,
            [4.0, 4.0, -20.0],
            0,
            3.0,
            Some(3.0),
            None,
        ),
        case(
            66_000,
            26.0,
            55.0,
            [0.2, -0.1, 0.3],
            9,
            32.0,
            None,
            Some(true),
        ),
        case(
            300_000,
            18.0,
            70.0,
            [1.2, 0.4, -1.0],
            6,
            35.0,
            None,
            Some(true),
        ),
        case(
            800_000,
            29.0,
            59.0,
            [-0.3, 0.2, 0.5],
            11,
            40.0,
            None,
            Some(true),
        ),
        case(1_500_000, V_T, S_T, [0.0; 3], 12, 41.0, None, Some(true)),
        case(10, 0.0, 0.0, [0.0; 3], 0, 60.0, None, Some(false)),
        case(1_200_000, 0.0, 0.0, [0.0; 3], 0, 60.0, None, Some(false)),
    ];
    let mut worst = 0.0f64;
    for (i, c) in cases.iter().enumerate() {
        let snap = NetGeometrySnapshot {
            volume: c.volume,
            area: c.area,
            com: target + Vector3::from(c.offset),
            locked: c.locked,
            time: c.t,
        };
        let coeffs = stage_coefficients(c.step);
        let got = match c.end {
            None => step_reward(
                &snap,
                &target,
                &spec,
                &coeffs,
                c.t,
                c.premature.is_some(),
                c.premature.unwrap_or(c.t),
            ),
            Some(true) => end_reward(Some((&snap, &target)), &spec, &coeffs.end),
            Some(false) => end_reward(None, &spec, &coeffs.end),
        }
        .map_err(|e| format!("case {i}: {e}"))?;
        let want = oracle(c);
        let err = (got - want).abs();
        worst = worst.max(err);
        ensure(err <= 1e-9, || {
            format!("case {i}: got {got}, oracle {want}")
        })?;
    }
    Ok(format!("12 cases, worst |error| {worst:.1e} (tol 1e-9)"))
}

fn stage_schedule() -> Result<String, String> {
    let steps = [
        0, 66_000, 66_001, 300_000, 300_001, 800_000, 800_001, 1_500_000,
    ];
    for step in steps {
        let c = stage_coefficients(step);
        let s = &c.step;
        let got_step = [
            s.w[0], s.w[1], s.w[2], s.w[3], s.c[0], s.c[1], s.c[2], s.c[3], s.c[4], s.t1, s.t2,
        ];
        ensure(got_step == STEP_ROW, || {
            format!("step {step}: step weights {got_step:?}")
        })?;
        let e = &c.end;
        let got_end = [
            e.w[0], e.w[1], e.w[2], e.w[3], e.c[0], e.c[1], e.c[2], e.c[3], e.c[4], e.c6,
        ];
        ensure(got_end == end_row(step), || {
            format!("step {step}: end weights {got_end:?}")
        })?;
    }
    Ok(format!("{} steps x 21 cells exact", steps.len()))
}

/// Flat net at `stretch` times its design size, at rest, with the chaser free.
fn open_net(mut cfg: PhysicsConfig, stretch: f64) -> WorldState<f64> {
    cfg.target.enabled = false;
    cfg.tether.enabled = false;
    let corner_link = cfg.net.corner_link_length;
    let mut w: WorldState<f64> = build_world(&cfg, &DoESample::at_distance(30.0)).expect("world");
    w.release_chaser();
    let design = w.model().topology.design_positions.clone();
    let corner_nodes = w.model().topology.corner_indices;
    for (i, p) in design.iter().enumerate() {
        w.positions[i] = p * stretch;
    }
    for (k, i) in w.layout().corners.clone().enumerate() {
        let p = design[corner_nodes[k]];
        w.positions[i] = (p + p.normalize() * corner_link) * stretch;
    }
    for v in w.velocities.iter_mut() {
        *v = Vector3::zeros();
    }
    w
}

/// Largest relative drift of linear momentum over `seconds` after launch.
fn momentum_drift(scheme: Scheme, seconds: f64) -> Result<f64, String> {
    let mut cfg = PhysicsConfig::full_scale();
    cfg.target.enabled = false;
    cfg.integrator.scheme = scheme;
    let dt = cfg.integrator.dt;
    let mut w: WorldState<f64> =
        build_world(&cfg, &DoESample::at_distance(30.0)).map_err(|e| e.to_string())?;
    w.release_chaser();
    let launch = cfg.launch_velocity;
    w.launch(&Vector3::new(launch[0], launch[1], launch[2]))
        .map_err(|e| e.to_string())?;
    let p0 = w.linear_momentum();
    let mut worst = 0.0f64;
    for _ in 0..(seconds / dt).round() as usize {
        w.step(dt).map_err(|e| e.to_string())?;
        worst = worst.max((w.linear_momentum() - p0).norm() / p0.norm());
    }
    Ok(worst)
}

/// Count and size of per-step energy rises of a released, stretched net.
fn energy_rises(cfg: PhysicsConfig, seconds: f64) -> Result<(usize, f64, f64, f64), String> {
    let dt = cfg.integrator.dt;
    let mut w = open_net(cfg, 1.02);
    let start = w.mechanical_energy();
    let mut e = start;
    let (mut rises, mut worst) = (0, 0.0f64);
    for _ in 0..(seconds / dt).round() as usize {
        w.step(dt).map_err(|err| err.to_string())?;
        let next = w.mechanical_energy();
        if next > e * (1.0 + 1e-9) {
            rises += 1;
            worst = worst.max((next - e) / e);
        }
        e = next;
    }
    Ok((rises, worst, start, e))
}

fn physics_conservation() -> Result<String, String> {
    let drift = momentum_drift(Scheme::SymplecticEuler, 10.0)?;
    ensure(drift <= 1e-6, || {
        format!("momentum drift {drift:.2e} > 1e-6")
    })?;
    let drift_em = momentum_drift(Scheme::EnergyMomentum, 10.0)?;
    ensure(drift_em <= 1e-6, || {
        format!("energy-momentum scheme momentum drift {drift_em:.2e} > 1e-6")
    })?;

    let mut detail = format!("momentum drift {drift:.1e} / {drift_em:.1e} (tol 1e-6)");
    for (name, mut cfg) in [
        ("full", PhysicsConfig::full_scale()),
        ("desk", PhysicsConfig::desk_scale()),
    ] {
        cfg.integrator.scheme = Scheme::EnergyMomentum;
        let (rises, worst, e0, e1) = energy_rises(cfg, 10.0)?;
        ensure(rises == 0, || {
            format!("{name}: {rises} per-step energy rises, worst {worst:.2e}")
        })?;
        ensure(e1 < e0, || {
            format!("{name}: energy did not decay ({e0} -> {e1})")
        })?;
        detail += &format!("; {name} damped energy {e0:.1} -> {e1:.1} J, no per-step rise");
    }
    let (rises, worst, _, _) = energy_rises(PhysicsConfig::full_scale(), 10.0)?;
    detail +=
        &format!(" (energy-momentum scheme; symplectic Euler has {rises} rises up to {worst:.1e})");
    Ok(detail)
}

fn force_gradient() -> Result<String, String> {
    let w = open_net(PhysicsConfig::desk_scale(), 1.0);
    let links: Vec<Link<f64>> = w.model().links.clone();
    let base = w.positions;
    let n = base.len();
    let energy = |x: &[Vector3<f64>]| {
        links
            .iter()
            .map(|l| l.energy(&x[l.a], &x[l.b]))
            .sum::<f64>()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for config in 0..100 {
        let stretch = rng.random_range(1.0..1.05);
        let mut x: Vec<Vector3<f64>> = base
            .iter()
            .map(|p| p * stretch + Vector3::from_fn(|_, _| rng.random_range(-0.03..0.03)))
            .collect();
        let mut force = vec![Vector3::zeros(); n];
        let zero = Vector3::zeros();
        for l in &links {
            let f = l.force_on_a(&x[l.a], &x[l.b], &zero, &zero);
            force[l.a] += f;
            force[l.b] -= f;
        }
        let h = 1e-6;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for c in 0..3 {
                let orig = x[i][c];
                x[i][c] = orig + h;
                let up = energy(&x);
                x[i][c] = orig - h;
                let down = energy(&x);
                x[i][c] = orig;
                let fd = -(up - down) / (2.0 * h);
                err = err.max((force[i][c] - fd).abs());
                scale = scale.max(force[i][c].abs());
            }
        }
        let rel = err / scale;
        worst = worst.max(rel);
        ensure(rel <= 1e-4, || {
            format!("configuration {config}: relative error {rel:.2e}")
        })?;
    }
    Ok(format!(
        "100 configurations, {} links, worst relative error {worst:.1e} (tol 1e-4)",
        links.len()
    ))
}

/// Facet planes of the hull of `pts` found by testing every point triple.
fn brute_force_facets(pts: &[Vector3<f64>]) -> Vec<(Vector3<f64>, f64)> {
    let mut planes: Vec<(Vector3<f64>, f64)> = Vec::new();
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let normal = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
                let len = normal.norm();
                if len < 1e-12 {
                    continue;
                }
                let normal = normal / len;
                let offset = normal.dot(&pts[i]);
                let side: Vec<f64> = pts.iter().map(|p| normal.dot(p) - offset).collect();
                let above = side.iter().all(|s| *s <= 1e-9);
                let below = side.iter().all(|s| *s >= -1e-9);
                if above {
                    planes.push((normal, offset));
                } else if below {
                    planes.push((-normal, -offset));
                }
            }
        }
    }
    planes
}

/// Area of the 2-D convex hull of `pts` (monotone chain).
fn polygon_hull_area(mut pts: Vec<[f64; 2]>) -> f64 {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let m = hull.len();
    (0..m)
        .map(|i| cross([0.0, 0.0], hull[i], hull[(i + 1) % m]))
        .sum::<f64>()
        / 2.0
}

/// Monte Carlo volume (point membership in a bounding box) and surface area
/// (mean projected area over random directions, times four).
fn monte_carlo(pts: &[Vector3<f64>], samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let planes = brute_force_facets(pts);
    let lo = pts
        .iter()
        .fold(Vector3::repeat(f64::INFINITY), |a, p| a.inf(p));
    let hi = pts
        .iter()
        .fold(Vector3::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
    let size = hi - lo;
    let mut inside = 0usize;
    for _ in 0..samples {
        let p = lo + Vector3::from_fn(|i, _| rng.random::<f64>() * size[i]);
        if planes.iter().all(|(n, d)| n.dot(&p) <= *d) {
            inside += 1;
        }
    }
    let volume = size.product() * inside as f64 / samples as f64;
    let directions = samples / 10;
    let mut projected = 0.0;
    for _ in 0..directions {
        let d = loop {
            let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let len = v.norm();
            if len > 1e-3 && len <= 1.0 {
                break v / len;
            }
        };
        let u = d
            .cross(&Vector3::x())
            .try_normalize(1e-6)
            .unwrap_or_else(|| d.cross(&Vector3::y()).normalize());
        let v = d.cross(&u);
        projected += polygon_hull_area(pts.iter().map(|p| [p.dot(&u), p.dot(&v)]).collect());
    }
    (volume, 4.0 * projected / directions as f64)
}

fn hull_oracle() -> Result<String, String> {
    let mut cube: Vec<Vector3<f64>> = Vec::new();
    for i in 0..8 {
        cube.push(Vector3::new(
            (i & 1) as f64,
            ((i >> 1) & 1) as f64,
            ((i >> 2) & 1) as f64,
        ));
    }
    cube.push(Vector3::new(0.5, 0.5, 0.5));
    cube.push(Vector3::new(0.5, 0.5, 0.0));
    let h = Hull::build(&cube);
    ensure(
        (h.volume - 1.0).abs() < 1e-12 && (h.area - 6.0).abs() < 1e-12,
        || format!("unit cube V = {}, S = {}", h.volume, h.area),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for cloud in 0..5 {
        let n = 20 + 10 * cloud;
        let axes = Vector3::new(
            rng.random_range(1.0..4.0),
            rng.random_range(1.0..4.0),
            rng.random_range(1.0..4.0),
        );
        let pts: Vec<Vector3<f64>> = (0..n)
            .map(|_| loop {
                let p = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                if p.norm() <= 1.0 {
                    break p.component_mul(&axes);
                }
            })
            .collect();
        let hull = Hull::build(&pts);
        let (v, s) = monte_carlo(&pts, 1_000_000, &mut rng);
        let (ev, es) = ((hull.volume - v).abs() / v, (hull.area - s).abs() / s);
        worst = worst.max(ev).max(es);
        ensure(ev <= 0.01 && es <= 0.01, || {
            format!(
                "cloud {cloud}: hull V {} S {}, Monte Carlo V {v} S {s}",
                hull.volume, hull.area
            )
        })?;
    }
    Ok(format!(
        "unit cube exact; 5 clouds, worst relative error {:.2}% (tol 1%)",
        worst * 100.0
    ))
}

fn closing_mechanism() -> Result<String, String> {
    let cfg = PhysicsConfig::full_scale();
    let dt = cfg.integrator.dt;
    let mut w = open_net(cfg, 1.0);
    w.activate_closing();
    let mut last = 0;
    let steps = (20.0 / dt).round() as usize;
    for _ in 0..steps {
        w.step(dt).map_err(|e| e.to_string())?;
        let n = w.locked_count();
        ensure(n >= last, || {
            format!("lock count fell from {last} to {n} at t = {:.3} s", w.time)
        })?;
        last = n;
        if n == 12 {
            return Ok(format!(
                "12 of 12 pairs locked at t = {:.2} s, count never decreased",
                w.time
            ));
        }
    }
    Err(format!("only {last} of 12 pairs locked after 20 s"))
}

fn ppo_sanity() -> Result<String, String> {
    let mut scores = Vec::new();
    for seed in 0..3u64 {
        let cfg = TrainConfig {
            total_timesteps: 50_000,
            n_workers: 4,
            seed,
            ..TrainConfig::default()
        };
        let outcome = train::<f64, _, _, _>(
            |k| Ok(ClosingTimingToy::new(seed + k as u64)),
            &cfg,
            |_, _, _| true,
        )
        .map_err(|e| e.to_string())?;
        ensure(outcome.global_step <= 50_000, || {
            format!("seed {seed}: ran {} steps", outcome.global_step)
        })?;
        let score = greedy_score(
            &outcome.params,
            &mut ClosingTimingToy::new(1000 + seed),
            1000,
        )
        .map_err(|e| e.to_string())?;
        scores.push(score);
    }
    let need = 0.9 * ClosingTimingToy::OPTIMUM;
    let detail = format!(
        "greedy mean reward per seed {scores:.3?}, optimum {:.1}",
        ClosingTimingToy::OPTIMUM
    );
    ensure(scores.iter().all(|s| *s >= need), || {
        format!("{detail}; need >= {need}")
    })?;
    Ok(detail)
}

fn desk_trend() -> Result<String, String> {
    let physics = PhysicsConfig::desk_scale();
    let cfg = TrainConfig {
        total_timesteps: 60_000,
        n_workers: 4,
        seed: 7,
        ..TrainConfig::default()
    };
    let outcome = train::<f64, _, _, _>(
        |k| TetherNetEnv::new(physics.clone(), EnvConfig::default(), 7 + k as u64),
        &cfg,
        |_, _, _| true,
    )
    .map_err(|e| e.to_string())?;
    if let Some(e) = outcome.error {
        return Err(e.to_string());
    }
    let log = &outcome.log;
    let (first, last) = (
        log.first_mean(10).unwrap_or(f64::NAN),
        log.last_mean(10).unwrap_or(f64::NAN),
    );
    let detail = format!(
        "{} episodes, first-10 mean {first:.3}, last-10 mean {last:.3}",
        log.episodes.len()
    );
    ensure(log.episodes.len() >= 20 && last > first, || detail.clone())?;
    Ok(detail)
}

/// Succeeds with probability `p`, decided by the rollout seed alone.
struct Bernoulli(f64);

impl RolloutRunner for Bernoulli {
    fn run(&self, doe: DoESample, seed: u64) -> CaptureReport {
        let u = (splitmix64(seed) >> 11) as f64 / (1u64 << 53) as f64;
        let cqi = if u < self.0 { 1.0 } else { 3.0 };
        CaptureReport::new(cqi, 12, Some(10.0), seed, doe)
    }
}

fn reliability_estimator() -> Result<String, String> {
    let p = 0.7;
    let n = 1000;
    let report = evaluate_with(&Bernoulli(p), &DoeRanges::default(), n, 2024, "")
        .map_err(|e| e.to_string())?;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let z = (report.success_rate - p).abs() / se;
    ensure(z <= 3.0, || {
        format!(
            "estimate {} is {z:.2} standard errors from {p}",
            report.success_rate
        )
    })?;

    let runner = PolicyRunner::new(
        PhysicsConfig::desk_scale(),
        EnvConfig::default(),
        ClosePolicy::FixedCloseTime(12.0),
    )
    .map_err(|e| e.to_string())?;
    let a = evaluate(&runner, 8, 99, "hash").map_err(|e| e.to_string())?;
    let b = evaluate(&runner, 8, 99, "hash").map_err(|e| e.to_string())?;
    let (ja, jb) = (
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap(),
    );
    ensure(ja == jb, || "repeated evaluate() reports differ".into())?;

    let table = BaselineComparison::new(0.94, 1.035, 0.96, 1.010).to_string();
    let expected = [
        "                success   mean CQI",
        "policy            0.940      1.035",
        "baseline          0.960      1.010",
        "delta            -0.020     +0.025",
    ]
    .join("\n");
    ensure(table == expected, || format!("comparison table:\n{table}"))?;
    Ok(format!(
        "p-hat {:.3} ({z:.2} SE from 0.7); evaluate() reproducible over 8 rollouts; comparison table exact",
        report.success_rate
    ))
}

fn tethernet(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tethernet"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "`tethernet {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = |name: &str| tmp.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    for run in ["train-a", "train-b"] {
        tethernet(&[
            "train",
            "--preset",
            "desk",
            "--workers",
            "2",
            "--steps",
            "1024",
            "--seed",
            "5",
            "--out",
            &s(&dir(run)),
        ])?;
    }
    let rewards = read(&dir("train-a").join("rewards.csv"))?;
    ensure(
        rewards == read(&dir("train-b").join("rewards.csv"))?,
        || "reward CSVs differ".into(),
    )?;
    ensure(rewards.iter().filter(|b| **b == b'\n').count() > 1, || {
        "reward CSV has no episodes".into()
    })?;
    let policy = s(&dir("train-a").join("policy.json"));
    for run in ["eval-a", "eval-b"] {
        tethernet(&[
            "evaluate",
            "--preset",
            "desk",
            "--policy",
            &policy,
            "--n",
            "16",
            "--seed",
            "3",
            "--out",
            &s(&dir(run)),
        ])?;
    }
    let report = read(&dir("eval-a").join("report.json"))?;
    ensure(report == read(&dir("eval-b").join("report.json"))?, || {
        "evaluation reports differ".into()
    })?;
    Ok(format!(
        "identical rewards.csv ({} lines) and report.json across repeated runs",
        rewards.iter().filter(|b| **b == b'\n').count()
    ))
}
