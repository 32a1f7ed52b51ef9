//! Acceptance criteria for the workbench.
//!
//! Every criterion is one test that writes a single `[PASS]` or `[FAIL]` line
//! to stderr (uncaptured, so it shows in plain `cargo test` output) and then
//! asserts. Tolerances are pinned in [`tol`]. Criterion 11 takes long and is
//! ignored by default: `cargo test --release --test acceptance -- --ignored`.

use std::io::Write as _;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rand::Rng as _;

use camrl::conjunction::{
    generate_scenario, rotate_velocity, ConjunctionScenario, ScenarioConfig, ScenarioDistribution,
};
use camrl::drqn::{
    evaluate, held_out_seeds, soft_update, train, GreedyAgent, ThresholdBaseline, TrainConfig, TrainOutcome,
};
use camrl::env::{
    collision_probability, reward_from_terms, Action, ActionDigits, EnvConfig, RewardConfig, RewardTerms, N_ACTIONS,
};
use camrl::harness::{generate_scenarios, metrics_to_csv};
use camrl::neural::{gradient_check, huber_grad, huber_loss, q_forward, NetworkShape, QNetworkParams};
use camrl::orbit::{elements_to_state, propagate, state_to_elements, KeplerianElements};
use camrl::seed::rng_from;
use camrl::{Grav, Scalar, Vector3};

mod tol {
    /// Energy and angular-momentum drift over 10 periods, relative.
    pub const INVARIANT_DRIFT: f64 = 1e-9;
    /// Element -> state -> element -> state, relative to |r| and |v|.
    pub const ROUND_TRIP: f64 = 1e-6;
    pub const ORBIT_RUNTIME_SECS: f64 = 10.0;
    pub const ROTATION_NORM: f64 = 1e-12;
    pub const COLLISION_POSITION_M: f64 = 1.0;
    pub const COLLISION_VELOCITY_MPS: f64 = 1e-3;
    pub const PLACEMENT_PASS_FRACTION: f64 = 0.95;
    pub const SCENARIO_RUNTIME_SECS: f64 = 60.0;
    pub const MONTE_CARLO_RELATIVE: f64 = 0.15;
    pub const MONTE_CARLO_MIN_SAMPLES: u64 = 10_000_000;
    pub const GRADIENT_RELATIVE: f64 = 1e-4;
    pub const GRADIENT_RUNTIME_SECS: f64 = 30.0;
    pub const TRAINING_RUNTIME_SECS: f64 = 15.0 * 60.0;
}

/// Scenario seed of the single-environment training runs.
const TRAINING_SCENARIO_SEED: u64 = 0;
/// Seed of the single-environment training runs.
const TRAINING_SEED: u64 = 0;
/// Master seed of the held-out evaluation noise seeds.
const HELD_OUT_MASTER: u64 = 99;
const HELD_OUT_ROLLOUTS: usize = 20;
const TREND_WINDOW: usize = 20;
/// Seeds retried when the `TRAINING_SEED` run misses the trend; with it they
/// form the five documented seeds, of which `TREND_SEEDS_REQUIRED` must pass.
const FALLBACK_SEEDS: [u64; 4] = [1, 2, 3, 4];
const TREND_SEEDS_REQUIRED: usize = 3;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[{verdict}] criterion {id:>2} {title}: {detail}");
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_orbital_invariants() {
    let grav = Grav::earth();
    let mut rng = rng_from(101);
    let started = Instant::now();
    let (mut drift, mut round_trip) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let e = rng.random_range(0.0..=0.9);
        // Perigee kept above the central body's surface.
        let a = rng.random_range(6.6e6 / (1.0 - e)..4.2e7_f64.max(6.7e6 / (1.0 - e)));
        let kep = KeplerianElements::new(
            a,
            e,
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
        )
        .unwrap();
        let s0 = elements_to_state(&kep, &grav).unwrap();
        let (e0, h0) = (s0.specific_energy(&grav), s0.angular_momentum().norm());
        let step = 10.0 * kep.period(&grav) / 100.0;
        for k in 1..=100 {
            let s = propagate(&kep, step * f64::from(k), &grav).unwrap();
            drift = drift
                .max(rel(s.specific_energy(&grav), e0))
                .max(rel(s.angular_momentum().norm(), h0));
            let back = elements_to_state(&state_to_elements(&s, &grav).unwrap(), &grav).unwrap();
            round_trip = round_trip
                .max((back.position - s.position).norm() / s.position.norm())
                .max((back.velocity - s.velocity).norm() / s.velocity.norm());
        }
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        1,
        "orbital invariants",
        drift < tol::INVARIANT_DRIFT && round_trip < tol::ROUND_TRIP && secs < tol::ORBIT_RUNTIME_SECS,
        &format!("max drift {drift:.2e}, max round trip {round_trip:.2e}, {secs:.2} s"),
    );
}

#[test]
fn criterion_02_rotation_properties() {
    let mut rng = rng_from(202);
    let mut worst = 0.0_f64;
    let mut identity = true;
    let draw = |rng: &mut camrl::seed::Rng, scale: f64| {
        Vector3::new(
            f64::standard_normal(rng) * scale,
            f64::standard_normal(rng) * scale,
            f64::standard_normal(rng) * scale,
        )
    };
    for _ in 0..1000 {
        let pos = draw(&mut rng, 7.0e6);
        let vel = draw(&mut rng, 7.5e3);
        let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let out = rotate_velocity(vel, pos, theta).unwrap();
        worst = worst.max(rel(out.norm(), vel.norm()));
        identity &= rotate_velocity(vel, pos, 0.0).unwrap() == vel;
    }
    report(
        2,
        "velocity rotation",
        worst < tol::ROTATION_NORM && identity,
        &format!("max norm error {worst:.2e}, theta=0 identity exact: {identity}"),
    );
}

#[test]
fn criterion_03_retrograde_consistency() {
    let started = Instant::now();
    let (mut worst_pos, mut worst_vel) = (0.0_f64, 0.0_f64);
    for seed in 0..100 {
        let sc = generate_scenario(&ScenarioConfig {
            n_debris: 3,
            rng_seed: seed,
            ..ScenarioConfig::default()
        })
        .unwrap();
        for d in &sc.debris {
            let s = propagate(&d.elements, d.collision_time - sc.config.start_time, &sc.config.mu).unwrap();
            worst_pos = worst_pos.max((s.position - d.collision_state.position).norm());
            worst_vel = worst_vel.max((s.velocity - d.collision_state.velocity).norm());
        }
    }
    let sigma_pos = 1000.0;
    let bound = 3.0 * sigma_pos * 3.0_f64.sqrt();
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 0..100 {
        let cfg = ScenarioConfig {
            n_debris: 3,
            sigma_pos,
            rng_seed: 1000 + seed,
            ..ScenarioConfig::default()
        };
        let sc = generate_scenario(&cfg).unwrap();
        let protected = cfg.protected_orbit();
        for (d, orbit) in sc.debris.iter().zip(sc.debris_orbits()) {
            let a = protected.state_at(d.collision_time, &cfg.mu).unwrap();
            let b = orbit.state_at(d.collision_time, &cfg.mu).unwrap();
            inside += usize::from((a.position - b.position).norm() <= bound);
            total += 1;
        }
    }
    let fraction = inside as f64 / total as f64;
    let secs = started.elapsed().as_secs_f64();
    report(
        3,
        "retrograde consistency",
        worst_pos <= tol::COLLISION_POSITION_M
            && worst_vel <= tol::COLLISION_VELOCITY_MPS
            && fraction >= tol::PLACEMENT_PASS_FRACTION
            && secs < tol::SCENARIO_RUNTIME_SECS,
        &format!(
            "max landing error {worst_pos:.2e} m / {worst_vel:.2e} m/s, {inside}/{total} within 3*sigma*sqrt(3), {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_04_action_codec() {
    let mut bijective = true;
    let mut seen = vec![false; N_ACTIONS];
    for a in Action::all() {
        let back = Action::encode(a.digits()).unwrap();
        bijective &= back == a && !seen[a.index()];
        seen[a.index()] = true;
    }
    bijective &= seen.iter().all(|&s| s);
    let zero = Action::new(0).unwrap().decode() == (Vector3::zero(), 0);
    let last = Action::new(624).unwrap().decode() == (Vector3::new(-0.05, -0.05, -0.05), 4)
        && Action::encode(ActionDigits {
            dv: [4, 4, 4],
            time_slot: 4,
        })
        .unwrap()
        .index()
            == 624;
    report(
        4,
        "action codec",
        bijective && zero && last,
        &format!(
            "bijection over {N_ACTIONS}: {bijective}, index 0 zero burn: {zero}, index 624 (-0.05 x3, slot 4): {last}"
        ),
    );
}

/// Fraction of isotropic encounter-plane samples centred `d` away that fall within `r`.
fn monte_carlo_probability(d: f64, r: f64, sigma: f64, n: u64, seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    let mut hits = 0u64;
    for _ in 0..n {
        let x = d + sigma * f64::standard_normal(&mut rng);
        let y = sigma * f64::standard_normal(&mut rng);
        hits += u64::from(x * x + y * y <= r * r);
    }
    hits as f64 / n as f64
}

#[test]
fn criterion_05_collision_probability() {
    let sigma = 1.0;
    let radius = 0.05 * sigma;
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (k, ratio) in [0.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
        // More samples further out keep the hit count, and so the oracle's own
        // noise, in the low percent range.
        let n = tol::MONTE_CARLO_MIN_SAMPLES * [1, 1, 4, 16][k];
        let oracle = monte_carlo_probability(ratio * sigma, radius, sigma, n, 500 + k as u64);
        let analytic = collision_probability(ratio * sigma, radius, sigma);
        let err = rel(analytic, oracle);
        worst = worst.max(err);
        parts.push(format!("d={ratio}: {analytic:.3e} vs {oracle:.3e}"));
    }
    let sweep: Vec<f64> = (0..100)
        .map(|k| collision_probability(f64::from(k) * 0.05, radius, sigma))
        .collect();
    let monotone = sweep.windows(2).all(|w| w[1] <= w[0]);
    report(
        5,
        "collision probability",
        worst < tol::MONTE_CARLO_RELATIVE && monotone,
        &format!(
            "{}; max relative error {worst:.3}, monotone: {monotone}",
            parts.join(", ")
        ),
    );
}

#[test]
fn criterion_06_reward_thresholds() {
    let cfg = RewardConfig::default();
    let quiet = RewardTerms {
        max_probability: cfg.collision_threshold,
        deviations: cfg.deviation_thresholds,
        fuel_used: 0.0,
        fuel_remaining: 20.0,
        fuel_capacity: 20.0,
    };
    let base = reward_from_terms(&quiet, &cfg);
    let mut ok = base.total == 0.0;
    let mut active = Vec::new();

    let r = reward_from_terms(
        &RewardTerms {
            max_probability: 1.0001e-4,
            ..quiet
        },
        &cfg,
    );
    let collision = r.collision_penalty < 0.0 && r.fuel_penalty == 0.0 && r.deviation_penalty == 0.0;
    active.push(collision);

    let r = reward_from_terms(
        &RewardTerms {
            fuel_used: 0.01,
            fuel_remaining: 19.99,
            ..quiet
        },
        &cfg,
    );
    let fuel = r.fuel_penalty < 0.0 && r.collision_penalty == 0.0 && r.deviation_penalty == 0.0;
    active.push(fuel);

    for k in 0..5 {
        let mut deviations = cfg.deviation_thresholds;
        deviations[k] *= 1.0 + 1e-9;
        let r = reward_from_terms(&RewardTerms { deviations, ..quiet }, &cfg);
        active.push(r.deviation_penalty < 0.0 && r.collision_penalty == 0.0 && r.fuel_penalty == 0.0);
    }
    ok &= active.iter().all(|&a| a);
    report(
        6,
        "reward thresholds",
        ok,
        &format!(
            "reward at thresholds {}, components activating alone (p, fuel, a, e, i, W, w): {active:?}",
            base.total
        ),
    );
}

#[test]
fn criterion_07_gradient_fidelity() {
    let started = Instant::now();
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut rng = rng_from(700 + seed);
        let params = QNetworkParams::<f64>::init(NetworkShape::new(5, 8, 11).unwrap(), &mut rng);
        let seqs: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| {
                (0..4)
                    .map(|_| (0..5).map(|_| f64::standard_normal(&mut rng)).collect())
                    .collect()
            })
            .collect();
        let views: Vec<&[Vec<f64>]> = seqs.iter().map(|s| s.as_slice()).collect();
        let actions: Vec<usize> = (0..3).map(|_| rng.random_range(0..11)).collect();
        // Errors in both the quadratic and the linear Huber branch.
        let targets: Vec<f64> = seqs
            .iter()
            .zip(&actions)
            .zip([0.4, 3.0, -5.0])
            .map(|((s, &a), off)| q_forward(s, &params).unwrap().0[a] + off)
            .collect();
        let check = gradient_check(&params, &views, &actions, &targets, 1.0, 1e-5).unwrap();
        worst = worst.max(check.max_rel_error);
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        7,
        "gradient fidelity",
        worst < tol::GRADIENT_RELATIVE && secs < tol::GRADIENT_RUNTIME_SECS,
        &format!("max relative error {worst:.2e} over 20 seeds, {secs:.2} s"),
    );
}

#[test]
fn criterion_08_huber_and_soft_update() {
    let delta = 1.0_f64;
    let branches = huber_loss(0.5, delta).unwrap() == 0.125
        && huber_loss(-3.0, delta).unwrap() == 2.5
        && huber_grad(0.5, delta).unwrap() == 0.5
        && huber_grad(-3.0, delta).unwrap() == -1.0;
    let continuity = huber_loss(delta, delta).unwrap() == 0.5 * delta * delta
        && huber_loss(delta, delta).unwrap() == delta * (delta.abs() - 0.5 * delta)
        && huber_grad(delta, delta).unwrap() == delta;

    let shape = NetworkShape::new(4, 3, 5).unwrap();
    let online = QNetworkParams::<f64>::init(shape, &mut rng_from(801));
    let target = QNetworkParams::<f64>::init(shape, &mut rng_from(802));
    let tau_one = soft_update(&online, &target, 1.0).unwrap().bitwise_eq(&online);
    let tau_zero = soft_update(&online, &target, 0.0).unwrap().bitwise_eq(&target);
    let blended = soft_update(&online, &target, 0.1).unwrap();
    let convex = blended
        .tensors()
        .iter()
        .zip(online.tensors())
        .zip(target.tensors())
        .all(|((b, o), t)| b.iter().zip(o).zip(t).all(|((&b, &o), &t)| b == 0.1 * o + 0.9 * t));
    let mut scalar_one = QNetworkParams::<f64>::zeros(shape);
    for t in scalar_one.tensors_mut() {
        t.fill(1.0);
    }
    let scalar = soft_update(&scalar_one, &QNetworkParams::zeros(shape), 0.1)
        .unwrap()
        .tensors()
        .iter()
        .all(|t| t.iter().all(|&v| v == 0.1));
    report(
        8,
        "huber and soft update",
        branches && continuity && tau_one && tau_zero && convex && scalar,
        &format!(
            "branches {branches}, delta continuity {continuity}, tau=1 {tau_one}, tau=0 {tau_zero}, tau=0.1 {convex}/{scalar}"
        ),
    );
}

fn training_scenario() -> ConjunctionScenario {
    generate_scenario(&ScenarioConfig {
        rng_seed: TRAINING_SCENARIO_SEED,
        ..ScenarioConfig::default()
    })
    .unwrap()
}

/// Single-environment training uses the `TrainConfig` defaults.
fn training_config(seed: u64) -> TrainConfig {
    TrainConfig {
        rng_seed: seed,
        ..TrainConfig::default()
    }
}

/// Serialises training runs so concurrent tests do not inflate each other's wall clock.
static TRAINING: Mutex<()> = Mutex::new(());

fn run_single_environment(seed: u64) -> TrainOutcome<f32> {
    let _guard = TRAINING.lock().unwrap_or_else(|e| e.into_inner());
    train::<f32>(&training_config(seed), &EnvConfig::default(), &[training_scenario()]).unwrap()
}

/// The seed-`TRAINING_SEED` run, shared by criteria 9, 10 and 12.
fn shared_run() -> &'static TrainOutcome<f32> {
    static RUN: OnceLock<TrainOutcome<f32>> = OnceLock::new();
    RUN.get_or_init(|| run_single_environment(TRAINING_SEED))
}

struct Trend {
    first_loss: f64,
    last_loss: f64,
    first_reward: f64,
    last_reward: f64,
}

impl Trend {
    fn of(metrics: &camrl::drqn::TrainingMetrics) -> Self {
        let n = metrics.episodes.len();
        Self {
            first_loss: metrics.mean_loss(0..TREND_WINDOW),
            last_loss: metrics.mean_loss(n - TREND_WINDOW..n),
            first_reward: metrics.mean_reward(0..TREND_WINDOW),
            last_reward: metrics.mean_reward(n - TREND_WINDOW..n),
        }
    }

    fn improves(&self) -> bool {
        self.last_loss < self.first_loss && self.last_reward > self.first_reward
    }

    fn describe(&self) -> String {
        format!(
            "loss {:.4} -> {:.4}, reward {:.1} -> {:.1}",
            self.first_loss, self.last_loss, self.first_reward, self.last_reward
        )
    }
}

fn trend_holds(run: &TrainOutcome<f32>) -> bool {
    Trend::of(&run.metrics).improves() && run.metrics.wall_clock_secs < tol::TRAINING_RUNTIME_SECS
}

fn describe_run(seed: u64, run: &TrainOutcome<f32>) -> String {
    let secs = run.metrics.wall_clock_secs;
    format!("seed {seed}: {}, {secs:.0} s", Trend::of(&run.metrics).describe())
}

#[test]
fn criterion_09_training_trend() {
    let run = shared_run();
    let mut detail = describe_run(TRAINING_SEED, run);
    if trend_holds(run) {
        report(9, "training trend", true, &detail);
        return;
    }
    let mut passed = 0;
    for seed in FALLBACK_SEEDS {
        let run = run_single_environment(seed);
        let ok = trend_holds(&run);
        passed += usize::from(ok);
        detail.push_str(&format!(
            "; {} ({})",
            describe_run(seed, &run),
            if ok { "pass" } else { "miss" }
        ));
    }
    let total = FALLBACK_SEEDS.len() + 1;
    detail.push_str(&format!("; {passed} of {total} documented seeds pass"));
    report(9, "training trend", passed >= TREND_SEEDS_REQUIRED, &detail);
}

#[test]
fn criterion_10_baseline_comparison() {
    let run = shared_run();
    let scenario = [training_scenario()];
    let env = EnvConfig::default();
    let seeds = held_out_seeds(HELD_OUT_MASTER, HELD_OUT_ROLLOUTS);
    let mut agent = GreedyAgent::new(run.params.clone(), env.debris_slots);
    let agent_eval = evaluate(&mut agent, &scenario, &env, &seeds).unwrap();
    let baseline_eval = evaluate(&mut ThresholdBaseline::new(), &scenario, &env, &seeds).unwrap();
    report(
        10,
        "baseline comparison",
        agent_eval.mean_reward >= baseline_eval.mean_reward,
        &format!(
            "agent {:.2} vs baseline {:.2} over {HELD_OUT_ROLLOUTS} held-out seeds",
            agent_eval.mean_reward, baseline_eval.mean_reward
        ),
    );
}

#[test]
#[ignore = "long-running: 200-scenario multi-environment training"]
fn criterion_11_multi_environment() {
    let scenarios = generate_scenarios(&ScenarioDistribution::default(), 200, 11).unwrap();
    let cfg = TrainConfig {
        rng_seed: TRAINING_SEED,
        ..TrainConfig::multi_environment()
    };
    let outcome = {
        let _guard = TRAINING.lock().unwrap_or_else(|e| e.into_inner());
        train::<f32>(&cfg, &EnvConfig::default(), &scenarios)
    };
    let (pass, detail) = match &outcome {
        Ok(run) => {
            let trend = Trend::of(&run.metrics);
            (
                trend.improves(),
                format!("{}, {:.0} s", trend.describe(), run.metrics.wall_clock_secs),
            )
        }
        Err(e) => (false, format!("training failed: {e}")),
    };
    report(11, "multi-environment run", pass, &detail);
}

#[test]
fn criterion_12_determinism() {
    let first = metrics_to_csv(&shared_run().metrics).unwrap();
    let repeat = run_single_environment(TRAINING_SEED);
    let second = metrics_to_csv(&repeat.metrics).unwrap();
    let params_equal = repeat.params.bitwise_eq(&shared_run().params);
    report(
        12,
        "determinism",
        first.as_bytes() == second.as_bytes() && params_equal,
        &format!(
            "metrics files {} bytes, identical: {}, final parameters identical: {params_equal}",
            first.len(),
            first == second
        ),
    );
}
