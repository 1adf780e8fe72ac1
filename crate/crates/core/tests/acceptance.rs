//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned
//! as constants next to each check.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix4, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use puckbench::estimation::piecewise::{fit_piecewise_model, EkfBelief, PiecewiseLinearPuckModel, PuckVector, Transition};
use puckbench::estimation::{kalman_step, ContactMode, KalmanState};
use puckbench::harness::{run_ablation, run_batch, run_episode, EnvConfig, Factor, Profile};
use puckbench::harness::runners::penalty_episode_count;
use puckbench::kinematics::{forward_kinematics, jacobian, JointVector, RobotSpec, DOF};
use puckbench::learning::rewards::{
    reward_airhockit, reward_rl3_hit, reward_spacer, AhRewardTask, EventFlags, GameEvent, ShotTriangle, StepObservation, TransitionRecord,
    TriangleRewardParams,
};
use puckbench::learning::{blackbox_fit, fit_arm_tracking, pgpe_update, simulate_step_response, BlackboxConfig, PgpeState};
use puckbench::metrics::{
    accumulate_episode, check_constraints, classify_deployability, classify_with, qualifying_rank, score_match, standings, ConstraintSet,
    DeployabilityThresholds, MatchRecord, MatchRules, MatchTally, PenaltyWeights, Stage, TaskWeights, Task, ViolationFlags,
};
use puckbench::planning::deflection::{contact_time, deflect};
use puckbench::planning::{plan_deflection, plan_shot, shot_cost, ContactIntent, DeflectionContext, ReachBand, SamplerConfig, ShotContext, ShotCostWeights};
use puckbench::policies::{make_agent, AgentContext, Strategy};
use puckbench::sim::interpolation::{interpolate_command, SIM_DT};
use puckbench::sim::puck::{step_puck, ContactMemory, PuckEvent};
use puckbench::sim::{ArmTrackingModel, Command, InterpolationMode, MalletState, PuckParams, PuckState, SetpointSample, TableGeometry};

type Outcome = Result<String, String>;

fn check(ok: bool, pass: String, fail: String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn within_budget(elapsed: Duration, budget: Duration, what: &str) -> Result<(), String> {
    if elapsed <= budget {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, budget {budget:?}"))
    }
}

// 1. Qualifying leaderboard.

const SCORE_TOLERANCE: f64 = 0.1;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let board = qualifying_rank(&common::qualifying_rows(), &DeployabilityThresholds::QUALIFYING, &TaskWeights::default());
    for (row, expected) in board.iter().zip(common::QUALIFYING.iter()) {
        if row.team != expected.team {
            return Err(format!("rank {} is {}, expected {}", row.rank, row.team, expected.team));
        }
        if row.level != expected.level || classify_deployability(expected.penalty, Stage::Qualifying) != expected.level {
            return Err(format!("{} classified {:?}, expected {:?}", row.team, row.level, expected.level));
        }
        if (row.score - expected.score).abs() > SCORE_TOLERANCE {
            return Err(format!("{} scored {:.3}, printed {}", row.team, row.score, expected.score));
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(1), "ranking")?;
    check(board.len() == common::QUALIFYING.len(), format!("13 teams ordered and grouped, scores within {SCORE_TOLERANCE}"), "row count".into())
}

// 2. Tournament arithmetic.

/// Synthetic games whose aggregate reproduces one reference row. Score decides
/// each game unless the row needs a deployability forfeit to be consistent.
fn synthetic_games(f: &common::TournamentFixture) -> Vec<MatchRecord> {
    let rules = MatchRules::default();
    let max = match rules.winner {
        puckbench::metrics::WinnerRule::DeployableFirst { max_penalty } => max_penalty,
        puckbench::metrics::WinnerRule::ScoreOnly => f64::INFINITY,
    };
    let games = (f.wins + f.losses + f.draws) as usize;
    // (own goals, opponent goals, own penalty, opponent penalty)
    let mut plan: Vec<(u32, u32, f64, f64)> = Vec::with_capacity(games);
    plan.extend((0..f.wins).map(|_| (1, 0, 0.0, 0.0)));
    plan.extend((0..f.losses).map(|_| (0, 1, 0.0, 0.0)));
    plan.extend((0..f.draws).map(|_| (0, 0, 0.0, 0.0)));
    let (wins, losses) = (f.wins as usize, f.losses as usize);
    let extra_scored = f.goals_scored - f.wins;
    let extra_received = f.goals_received - f.losses;
    let mut forced_losses = false;
    if wins > 0 {
        plan[0].0 += extra_scored;
    } else if extra_scored > 0 {
        plan[wins].0 += extra_scored;
        forced_losses = true;
    }
    if losses > 0 {
        plan[wins].1 += extra_received;
    } else {
        plan[0].1 += extra_received;
        assert!(plan[0].0 > plan[0].1, "{} must keep its first win", f.team);
    }
    if losses > 0 {
        let share = f.penalty / losses as f64;
        assert!(!forced_losses || share > max, "{} needs forfeited losses", f.team);
        for g in &mut plan[wins..wins + losses] {
            g.2 = share;
        }
    } else {
        let share = f.penalty / wins as f64;
        assert!(share <= max, "{} wins must stay deployable", f.team);
        for g in &mut plan[..wins] {
            g.2 = share;
        }
    }
    plan.into_iter()
        .enumerate()
        .map(|(k, (own, opp, pen, opp_pen))| {
            let tally = MatchTally { goals: [own, opp], faults: [0, 0], penalty: [pen, opp_pen] };
            MatchRecord { teams: [f.team.to_string(), format!("{}-opponent-{k}", f.team)], score: score_match(&tally, &rules) }
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let records: Vec<MatchRecord> = common::TOURNAMENT.iter().flat_map(synthetic_games).collect();
    let table = standings(&records);
    for f in &common::TOURNAMENT {
        let row = table.iter().find(|r| r.team == f.team).ok_or(format!("{} missing", f.team))?;
        let got = (row.wins, row.losses, row.draws, row.goals_scored, row.goals_received, row.points);
        let want = (f.wins, f.losses, f.draws, f.goals_scored, f.goals_received, f.points);
        if got != want || (row.penalty - f.penalty).abs() > 1e-9 {
            return Err(format!("{}: got {got:?} penalty {}, expected {want:?} penalty {}", f.team, row.penalty, f.penalty));
        }
    }
    let episodes = penalty_episode_count(45_000, 500);
    within_budget(start.elapsed(), Duration::from_secs(1), "tournament arithmetic")?;
    check(episodes == 90, "7 aggregate rows reproduced, 45000 steps give 90 penalty episodes".into(), format!("{episodes} penalty episodes"))
}

// 3. Penalty exactness.

fn criterion_3() -> Outcome {
    let spec = RobotSpec::default();
    let geom = TableGeometry::default();
    let set = ConstraintSet::new(&spec, &geom);
    let weights = PenaltyWeights::default();
    let q0 = spec.q_init;
    let safe = forward_kinematics(&spec, &q0);
    let zero = JointVector::zeros();
    if check_constraints(&q0, &zero, &safe, &set).any() {
        return Err("home configuration is not clean".into());
    }
    // Fifty steps per trajectory, ten of which violate one group.
    let run = |violate: &dyn Fn(usize) -> ViolationFlags| -> f64 {
        let flags: Vec<ViolationFlags> = (0..50).map(|k| if (20..30).contains(&k) { violate(k) } else { ViolationFlags::default() }).collect();
        accumulate_episode(&flags, &[], &weights).total()
    };
    let mut q_bad = q0;
    q_bad[0] = spec.q_upper[0] + 0.01;
    let mut qdot_bad = zero;
    qdot_bad[3] = -spec.qdot_limit[3] * 1.01;
    let lifted = { let mut p = safe; p.ee.z += 0.05; p };
    let low_link = { let mut p = safe; p.wrist_z = 0.2; p };
    let cases: [(&str, f64, Box<dyn Fn(usize) -> ViolationFlags>); 4] = [
        ("ee", 3.0, Box::new(|_| check_constraints(&q0, &zero, &lifted, &set))),
        ("link", 3.0, Box::new(|_| check_constraints(&q0, &zero, &low_link, &set))),
        ("joint position", 2.0, Box::new(|_| check_constraints(&q_bad, &zero, &safe, &set))),
        ("joint velocity", 1.0, Box::new(|_| check_constraints(&q0, &qdot_bad, &safe, &set))),
    ];
    for (name, expected, violate) in &cases {
        let got = run(violate.as_ref());
        if got != *expected {
            return Err(format!("{name} group charged {got}, expected {expected}"));
        }
    }
    let boundaries = [
        (Stage::Qualifying, 500.0, 500.5, 1500.0, 1500.5),
        (Stage::Tournament, 45.0, 45.5, 135.0, 135.5),
    ];
    for (stage, deploy, above, improv, beyond) in boundaries {
        use puckbench::metrics::Deployability::*;
        let got = [deploy, above, improv, beyond].map(|ds| classify_deployability(ds, stage));
        if got != [Deployable, Improvable, Improvable, NonDeployable] {
            return Err(format!("{stage:?} boundaries classified {got:?}"));
        }
    }
    let episodes_ok = DeployabilityThresholds::for_episodes(90) == DeployabilityThresholds::TOURNAMENT
        && classify_with(135.0, &DeployabilityThresholds::for_episodes(90)) == puckbench::metrics::Deployability::Improvable;
    check(episodes_ok, "3/3/2/1 points per group, boundaries 500/1500 and 45/135 inclusive".into(), "episode-scaled thresholds".into())
}

// 4. Numerical kernels.

const JACOBIAN_REL_TOL: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-9;

fn random_q(spec: &RobotSpec, rng: &mut impl Rng) -> JointVector {
    JointVector::from_fn(|j, _| rng.random_range(0.9 * spec.q_lower[j]..0.9 * spec.q_upper[j]))
}

/// Unique polynomial of degree `bc.len() - 1` on [0, t] matching value and
/// derivatives at both ends: `start` and `end` list (value, d/dt, d²/dt²...).
fn boundary_polynomial(start: &[f64], end: &[f64], t: f64) -> DVector<f64> {
    let n = start.len() + end.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let deriv = |k: usize, d: usize, x: f64| -> f64 {
        if k < d {
            return 0.0;
        }
        let coef: f64 = ((k - d + 1)..=k).map(|i| i as f64).product();
        coef * x.powi((k - d) as i32)
    };
    for (d, v) in start.iter().enumerate() {
        for k in 0..n {
            a[(d, k)] = deriv(k, d, 0.0);
        }
        b[d] = *v;
    }
    for (d, v) in end.iter().enumerate() {
        let row = start.len() + d;
        for k in 0..n {
            a[(row, k)] = deriv(k, d, t);
        }
        b[row] = *v;
    }
    a.lu().solve(&b).expect("boundary system is regular")
}

fn eval_poly(c: &DVector<f64>, x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ci| acc * x + ci)
}

fn criterion_4() -> Outcome {
    let spec = RobotSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_q(&spec, &mut rng);
        let jac = jacobian(&spec, &q);
        let mut fd = jac;
        for j in 0..DOF {
            let (mut qp, mut qm) = (q, q);
            qp[j] += h;
            qm[j] -= h;
            fd.set_column(j, &((forward_kinematics(&spec, &qp).ee - forward_kinematics(&spec, &qm).ee) / (2.0 * h)));
        }
        worst = worst.max((jac - fd).norm() / jac.norm());
    }
    if worst > JACOBIAN_REL_TOL {
        return Err(format!("Jacobian relative error {worst:.2e}"));
    }

    // Cubic and quintic setpoints against independently solved polynomials.
    let samples = 20;
    let horizon = samples as f64 * SIM_DT;
    let mut interp_err = 0.0f64;
    for _ in 0..20 {
        let q0 = random_q(&spec, &mut rng);
        let q1 = random_q(&spec, &mut rng);
        let v0 = JointVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let v1 = JointVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let a0 = JointVector::from_fn(|_, _| rng.random_range(-5.0..5.0));
        let a1 = JointVector::from_fn(|_, _| rng.random_range(-5.0..5.0));
        let boundary = SetpointSample { q: q0, qdot: v0, qddot: a0 };
        let cubic = interpolate_command(&boundary, &Command::pos_vel(InterpolationMode::PosvelCubic, q1, v1), samples).map_err(|e| e.to_string())?;
        let quintic = interpolate_command(&boundary, &Command::quintic(q1, v1, a1), samples).map_err(|e| e.to_string())?;
        for j in 0..DOF {
            let c3 = boundary_polynomial(&[q0[j], v0[j]], &[q1[j], v1[j]], horizon);
            let c5 = boundary_polynomial(&[q0[j], v0[j], a0[j]], &[q1[j], v1[j], a1[j]], horizon);
            for (k, (s3, s5)) in cubic.iter().zip(&quintic).enumerate() {
                let t = (k + 1) as f64 * SIM_DT;
                interp_err = interp_err.max((s3.q[j] - eval_poly(&c3, t)).abs()).max((s5.q[j] - eval_poly(&c5, t)).abs());
            }
            let end3 = cubic.last().expect("samples");
            let end5 = quintic.last().expect("samples");
            interp_err = interp_err
                .max((end3.qdot[j] - v1[j]).abs())
                .max((end5.qdot[j] - v1[j]).abs())
                .max((end5.qddot[j] - a1[j]).abs());
        }
    }
    if interp_err > BOUNDARY_TOL {
        return Err(format!("interpolation deviates by {interp_err:.2e}"));
    }
    let q = spec.q_init;
    let still = interpolate_command(&SetpointSample::hold(q), &Command::quintic(q, JointVector::zeros(), JointVector::zeros()), samples)
        .map_err(|e| e.to_string())?;
    let exact = still.iter().all(|s| s.q == q && s.qdot == JointVector::zeros() && s.qddot == JointVector::zeros());
    check(
        exact,
        format!("Jacobian rel err {worst:.1e}, interpolation err {interp_err:.1e}, stationary quintic exact"),
        "stationary quintic moved".into(),
    )
}

// 5. Physics properties and replay determinism.

fn criterion_5() -> Outcome {
    let geom = TableGeometry::default();
    let params = PuckParams { disturbance_std: 0.0, ..PuckParams::default() };
    let parked = [MalletState { x: -1.0, ..Default::default() }, MalletState { x: 3.0, ..Default::default() }];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y_lim = geom.puck_y_limit();
    for _ in 0..200 {
        let mut puck = PuckState {
            x: rng.random_range(0.3..geom.length - 0.3),
            y: rng.random_range(-y_lim..y_lim),
            vx: rng.random_range(-3.0..3.0),
            vy: rng.random_range(-3.0..3.0),
            ..PuckState::default()
        };
        let mut memory = ContactMemory::default();
        for _ in 0..2000 {
            let step = step_puck(&puck, &parked, &params, &geom, 1e-3, &mut memory, &mut rng);
            if step.events.iter().any(|e| matches!(e, PuckEvent::Goal { .. })) {
                break;
            }
            if step.puck.kinetic_energy() > puck.kinetic_energy() {
                return Err(format!("energy rose from {} to {}", puck.kinetic_energy(), step.puck.kinetic_energy()));
            }
            puck = step.puck;
        }
    }
    // Axis-aligned wall hit, friction off: normal speed scales by e exactly.
    let e = params.wall_restitution;
    let frictionless = PuckParams { slide_friction: 0.0, ..params };
    for vx in [-0.7, 0.0, 0.4] {
        let puck = PuckState { x: 0.9, y: y_lim - 0.0005, vx, vy: 1.3, ..PuckState::default() };
        let out = step_puck(&puck, &parked, &frictionless, &geom, 1e-3, &mut ContactMemory::default(), &mut rng);
        if out.puck.vy != -e * 1.3 || out.puck.vx != vx {
            return Err(format!("wall reflection gave ({}, {})", out.puck.vx, out.puck.vy));
        }
    }
    let env = EnvConfig::evaluation();
    let ctx = AgentContext::from_world(&env.world);
    for seed in 0..10u64 {
        let run = || {
            let mut agent = make_agent("composite", &ctx, seed).expect("known agent");
            run_episode(Task::Hit, agent.as_mut(), &env, seed)
        };
        let (a, b) = (run(), run());
        if a.final_state_hash != b.final_state_hash || a.digest() != b.digest() {
            return Err(format!("seed {seed} replay hashes differ"));
        }
    }
    Ok("energy non-increasing over 200 slides, wall reflection exact, 10 seeds replay to equal hashes".into())
}

// 6. Estimation.

const MODEL_FROBENIUS_TOL: f64 = 1e-6;

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let b = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
    // Rows away from y = 0 so the wall-mode reflection convention stays fixed.
    let data: Vec<Transition> = (0..600)
        .map(|i| {
            let s = PuckVector::new(rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let m = PuckVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let mode = ContactMode::ALL[i % 3];
            Transition { puck: s, mallet: m, next: a * s + b * m, mode }
        })
        .collect();
    let model = fit_piecewise_model(&data, 1e-3).map_err(|e| e.to_string())?;
    let worst = ContactMode::ALL.iter().map(|m| (model.mode(*m).a - a).norm().max((model.mode(*m).b - b).norm())).fold(0.0, f64::max);
    if worst > MODEL_FROBENIUS_TOL {
        return Err(format!("fitted (A, B) off by {worst:.2e}"));
    }

    // Constant-velocity truth with white acceleration, noisy positions.
    let (dt, accel_std, meas_std) = (0.02, 0.5, 0.01);
    let accel = Normal::new(0.0, accel_std).expect("positive std");
    let meas = Normal::new(0.0, meas_std).expect("positive std");
    let (mut p, mut v) = (Vector2::new(0.5, 0.0), Vector2::new(0.3, -0.2));
    let mut kf = KalmanState::new(p, 1e-2, 1.0, accel_std, meas_std);
    let mut sq = 0.0;
    let steps = 2000;
    for _ in 0..steps {
        let acc = Vector2::new(accel.sample(&mut rng), accel.sample(&mut rng));
        p += v * dt + acc * (0.5 * dt * dt);
        v += acc * dt;
        let z = p + Vector2::new(meas.sample(&mut rng), meas.sample(&mut rng));
        kf = kalman_step(&kf, Some(z), dt).map_err(|e| e.to_string())?;
        sq += (kf.position() - p).norm_squared() / 2.0;
    }
    let rmse = (sq / steps as f64).sqrt();
    check(
        rmse <= meas_std,
        format!("(A, B) recovered to {worst:.1e}, Kalman RMSE {rmse:.4} <= {meas_std}"),
        format!("Kalman RMSE {rmse:.4} above measurement std {meas_std}"),
    )
}

// 7. Planner against grid oracles.

const SHOT_REL_GAP: f64 = 0.01;
const DEFLECT_REL_GAP: f64 = 0.10;
/// Deflection costs are lateral speeds; below this (m/s) both count as exact.
const DEFLECT_ABS_FLOOR: f64 = 1e-4;

fn noiseless_model(geom: &TableGeometry) -> PiecewiseLinearPuckModel {
    let mut m = PiecewiseLinearPuckModel::from_physics(&PuckParams::default(), geom, 0.005);
    for mode in [&mut m.free, &mut m.wall, &mut m.mallet] {
        mode.sigma = Matrix4::zeros();
    }
    m
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let geom = TableGeometry::default();
    let model = noiseless_model(&geom);
    let shot_ctx = ShotContext {
        model: &model,
        geom: &geom,
        mallet_restitution: 0.8,
        mallet_speed: 1.2,
        horizon_steps: 1000,
        angle_limit: 80f64.to_radians(),
        rollouts: 1,
    };
    let weights = ShotCostWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_shot = 0.0f64;
    for _ in 0..20 {
        let belief = EkfBelief::new(PuckVector::new(rng.random_range(0.3..0.8), rng.random_range(-0.35..0.35), 0.0, 0.0), Matrix4::zeros());
        let plan = plan_shot(&belief, 0.0, &shot_ctx, &SamplerConfig::default(), &weights, &mut rng).map_err(|e| e.to_string())?;
        let steps = (2.0 * shot_ctx.angle_limit.to_degrees() / 0.25).round() as usize;
        let grid = (0..=steps)
            .map(|k| (-shot_ctx.angle_limit.to_degrees() + 0.25 * k as f64).to_radians())
            .map(|a| shot_cost(a, &belief, &shot_ctx, &weights, 0).cost)
            .fold(f64::INFINITY, f64::min);
        let gap = (plan.estimate.cost - grid) / grid.abs().max(1e-12);
        worst_shot = worst_shot.max(gap);
    }
    if worst_shot > SHOT_REL_GAP {
        return Err(format!("shot cost {:.2}% above grid optimum", 100.0 * worst_shot));
    }

    let defl_ctx = DeflectionContext {
        model: &model,
        geom: &geom,
        mallet_restitution: 0.8,
        band: ReachBand::default(),
        max_mallet_speed: 1.0,
        horizon_steps: 600,
        prepare_speed: 0.3,
    };
    let mut worst_defl = 0.0f64;
    for _ in 0..20 {
        let belief = EkfBelief::new(
            PuckVector::new(rng.random_range(0.9..1.4), rng.random_range(-0.3..0.3), rng.random_range(-2.0..-0.8), rng.random_range(-0.5..0.5)),
            Matrix4::zeros(),
        );
        let target = rng.random_range(-0.3..0.3);
        let plan = plan_deflection(&belief, target, ContactIntent::Deflect, &defl_ctx, &SamplerConfig::default(), &mut rng).map_err(|e| e.to_string())?;
        let (_, at) = contact_time(&belief, &defl_ctx).map_err(|e| e.to_string())?;
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut grid = f64::INFINITY;
        for i in 0..10 {
            for j in 0..10 {
                let offset = -half_pi + std::f64::consts::PI * i as f64 / 9.0;
                let speed = -1.0 + 2.0 * j as f64 / 9.0;
                let (post, _) = deflect(&at.mean, offset, speed, &geom, 0.8);
                grid = grid.min((post.w - target).abs());
            }
        }
        if plan.cost > DEFLECT_ABS_FLOOR {
            worst_defl = worst_defl.max((plan.cost - grid) / grid.max(DEFLECT_ABS_FLOOR));
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(120), "planner oracles")?;
    check(
        worst_defl <= DEFLECT_REL_GAP,
        format!("shot worst gap {:.3}%, deflection worst gap {:.1}%", 100.0 * worst_shot.max(0.0), 100.0 * worst_defl.max(0.0)),
        format!("deflection cost {:.1}% above grid optimum", 100.0 * worst_defl),
    )
}

// 8. Reward golden values.

fn criterion_8() -> Outcome {
    let obs = |puck: (f64, f64), vel: (f64, f64), ee: (f64, f64), ee_vel: (f64, f64)| StepObservation {
        puck_pos: Vector2::new(puck.0, puck.1),
        puck_vel: Vector2::new(vel.0, vel.1),
        ee_pos: Vector2::new(ee.0, ee.1),
        ee_vel: Vector2::new(ee_vel.0, ee_vel.1),
    };
    let rec = |next: StepObservation, flags: EventFlags, t: usize| TransitionRecord { next, flags, t, horizon: 500, ..TransitionRecord::default() };
    let goal = EventFlags { goal: true, episode_end: true, ..EventFlags::default() };
    let first = EventFlags { hit: true, first_touch: true, ..EventFlags::default() };
    let conceded = EventFlags { conceded: true, episode_end: true, ..EventFlags::default() };
    let params = TriangleRewardParams::default();
    let half_diag = 0.5 * params.table_diag;
    let tri = ShotTriangle::new(Vector2::new(-0.5, 0.0), 0.974, 0.125);

    let cases: Vec<(&str, f64, f64)> = vec![
        ("hit goal at 1 m/s", reward_airhockit(AhRewardTask::Hit, &rec(obs((1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)), goal, 10)), 7000.0),
        ("hit touch at 2 m/s", reward_airhockit(AhRewardTask::Hit, &rec(obs((0.0, 0.0), (2.0, 0.0), (0.0, 0.0), (0.0, 0.0)), first, 10)), 20.0),
        ("defend slow first touch", reward_airhockit(AhRewardTask::DefendSlow, &rec(StepObservation::default(), first, 10)), 130.0),
        ("defend fast conceded", reward_airhockit(AhRewardTask::DefendFast, &rec(StepObservation::default(), conceded, 10)), -100.0),
        ("prepare far past 0.2", reward_airhockit(AhRewardTask::PrepareFar, &rec(obs((0.25, 0.0), (0.3, 0.0), (0.0, 0.0), (0.0, 0.0)), EventFlags::default(), 10)), 3000.0),
        ("spacer balanced score", reward_spacer(GameEvent::Score, Strategy::Balanced), 2.0 / 3.0),
        ("spacer defensive score", reward_spacer(GameEvent::Score, Strategy::Defensive), 0.0),
        ("spacer aggressive concede", reward_spacer(GameEvent::Concede, Strategy::Aggressive), -1.0),
        ("spacer quiet step", reward_spacer(GameEvent::None, Strategy::Balanced), 0.0),
        ("triangle approach at half diagonal", reward_rl3_hit(&rec(obs((0.0, 0.0), (0.0, 0.0), (-half_diag, 0.0), (0.0, 0.0)), EventFlags::default(), 1), &params, None), -1.0),
        ("triangle inside at 1 m/s", reward_rl3_hit(&rec(obs((0.0, 0.0), (1.0, 0.0), (-0.6, 0.0), (0.0, 0.0)), EventFlags::default(), 1), &params, Some(&tri)), 11.0),
        ("triangle straight hit at max speed", reward_rl3_hit(&rec(obs((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (3.0, 0.0)), first, 1), &params, None), 110.0),
    ];
    for (name, got, want) in &cases {
        if got != want {
            return Err(format!("{name}: {got} != {want}"));
        }
    }
    // 1 - 0.99 is not exact in binary, so 1/(1 - gamma) lands within one
    // rounding step of 100 rather than on it.
    let goal_value = reward_rl3_hit(&rec(StepObservation::default(), goal, 1), &params, None);
    let goal_ok = ((goal_value - 100.0) / 100.0).abs() < 1e-12;
    check(
        goal_ok,
        format!("{} exact golden values plus goal value {goal_value}", cases.len()),
        format!("goal value {goal_value} != 100"),
    )
}

// 9. Behavioural floor of the composite agent.

const HIT_FLOOR: f64 = 0.20;
const BEHAVIOUR_EPISODES: usize = 200;
const ABLATION_EPISODES: usize = 100;

fn criterion_9() -> Outcome {
    let env = EnvConfig::ideal();
    let ctx = AgentContext::from_world(&env.world);
    let factory = move |seed: u64| make_agent("composite", &ctx, seed);
    let start = Instant::now();
    let (results, _) = run_batch(&factory, Task::Hit, BEHAVIOUR_EPISODES, &env, false).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(300), "behaviour batch")?;
    let rate = results.iter().filter(|r| r.success).count() as f64 / results.len() as f64;
    if rate < HIT_FLOOR {
        return Err(format!("hit success {:.1}% below {:.0}%", 100.0 * rate, 100.0 * HIT_FLOOR));
    }
    let ablation = run_ablation(&factory, &[Task::Hit], &Factor::ALL, ABLATION_EPISODES, &env).map_err(|e| e.to_string())?;
    let col = |label: &str| ablation.columns.iter().position(|c| c.label == label).map(|i| ablation.success[0][i]);
    let (ideal, all) = (col("ideal").ok_or("no ideal column")?, col("all").ok_or("no all column")?);
    let all_profile = ablation.columns.iter().any(|c| c.label == "all" && c.profile == Profile::Evaluation);
    check(
        all <= ideal && all_profile,
        format!("hit {:.1}% over {BEHAVIOUR_EPISODES} ideal episodes in {elapsed:.1?}; ablation ideal {:.0}% >= all factors {:.0}%", 100.0 * rate, 100.0 * ideal, 100.0 * all),
        format!("all-factors success {all} above ideal {ideal}"),
    )
}

// 10. Optimizers.

const SPHERE_TOL: f64 = 1e-2;
const SYSID_REL_TOL: f64 = 0.05;
const PGPE_TOL: f64 = 0.1;

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let sphere = blackbox_fit(|x: &[f64]| x.iter().map(|v| v * v).sum(), &[1.0, -0.8, 0.6, 0.5], 2000, &BlackboxConfig::default(), &mut rng);
    let norm = sphere.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm >= SPHERE_TOL || sphere.evaluations > 2000 {
        return Err(format!("sphere ended at |x| = {norm:.2e} after {} evaluations", sphere.evaluations));
    }
    let (tau, gain) = (0.045, 0.93);
    let anchor = JointVector::zeros();
    let data = simulate_step_response(&ArmTrackingModel::lag(tau, gain), &anchor, &anchor, &JointVector::from_element(0.5), 1e-3, 300);
    let fit = fit_arm_tracking(&data, 1500, &mut rng);
    let (e_tau, e_gain) = ((fit.model.tau / tau - 1.0).abs(), (fit.model.gain_scale / gain - 1.0).abs());
    if e_tau > SYSID_REL_TOL || e_gain > SYSID_REL_TOL {
        return Err(format!("sys-id errors tau {:.1}% gain {:.1}%", 100.0 * e_tau, 100.0 * e_gain));
    }
    let mut state = PgpeState::new(vec![0.0], vec![1.0]).map_err(|e| e.to_string())?;
    let mut iterations = 0;
    while iterations < 500 && (state.mu[0] - 3.0).abs() >= PGPE_TOL {
        let samples: Vec<Vec<f64>> = (0..20).map(|_| state.sample(&mut rng)).collect();
        let returns: Vec<f64> = samples.iter().map(|t| -(t[0] - 3.0).powi(2)).collect();
        state = pgpe_update(&state, &samples, &returns).map_err(|e| e.to_string())?;
        iterations += 1;
    }
    let mu = state.mu[0];
    check(
        (mu - 3.0).abs() < PGPE_TOL,
        format!(
            "sphere |x| {norm:.1e} in {} evals, sys-id within {:.1}%/{:.1}%, PGPE mu {mu:.3} after {iterations} iterations",
            sphere.evaluations,
            100.0 * e_tau,
            100.0 * e_gain
        ),
        format!("PGPE stopped at mu = {mu}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("scoring reproduction", criterion_1),
        ("tournament arithmetic", criterion_2),
        ("penalty exactness", criterion_3),
        ("numerical kernels", criterion_4),
        ("physics properties", criterion_5),
        ("estimation", criterion_6),
        ("planner oracle gap", criterion_7),
        ("reward golden values", criterion_8),
        ("behavioural floor", criterion_9),
        ("optimizers", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (status, detail) = match &outcome {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed.push(i + 1);
                ("FAIL", detail)
            }
        };
        // Written to the process stdout so the lines survive libtest's output capture.
        writeln!(std::io::stdout().lock(), "criterion {:>2} {status} {name}: {detail} ({took:.2?})", i + 1).expect("stdout is writable");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
