//! Qualifying, tournament and ablation runners. Episodes and games run on the
//! rayon pool; each owns its world and random streams, and results are
//! collected in index order so output does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::{changed_factors, EnvConfig, Factor, Profile};
use super::episode::{control_step, run_episode_logged, EpisodeResult};
use super::replay::{AgentRecord, ReplayRecord};
use super::seed::derive_seed;
use super::{AgentFactory, HarnessError};
use crate::estimation::noise::ObservationCorruptor;
use crate::metrics::{
    classify_with, score_match, standings, ConstraintSet, Deployability, DeployabilityThresholds, EpisodeMeter, MatchRecord, MatchRules, MatchTally, ScoreRow,
    Standing, Task, WinnerRule,
};
use crate::sim::{Event, PuckState, Side, World};

fn task_tag(task: Task) -> u64 {
    task as u64
}

/// `n` episodes of one task with seeds derived from the master seed.
pub fn run_batch(factory: &AgentFactory, task: Task, n: usize, env: &EnvConfig, log: bool) -> Result<(Vec<EpisodeResult>, Vec<ReplayRecord>), HarnessError> {
    let outcomes: Vec<Result<(EpisodeResult, Vec<ReplayRecord>), HarnessError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(env.seed, &[task_tag(task), i as u64]);
            let mut agent = factory(seed)?;
            let mut records = Vec::new();
            let result = run_episode_logged(task, agent.as_mut(), env, seed, log.then_some((&mut records, i)));
            Ok((result, records))
        })
        .collect();
    let mut results = Vec::with_capacity(n);
    let mut records = Vec::new();
    for o in outcomes {
        let (r, rec) = o?;
        results.push(r);
        records.extend(rec);
    }
    Ok((results, records))
}

fn success_rate(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.success).count() as f64 / results.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifyingResult {
    pub row: ScoreRow,
    pub level: Deployability,
    pub episodes: Vec<EpisodeResult>,
    /// Replay records per task, in hit, defend, prepare order.
    #[serde(skip)]
    pub records: Vec<Vec<ReplayRecord>>,
}

/// `n` episodes of every task. The deployability level uses thresholds scaled
/// to the number of episodes run.
pub fn run_qualifying(factory: &AgentFactory, team: &str, n: usize, env: &EnvConfig, log: bool) -> Result<QualifyingResult, HarnessError> {
    if n == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    env.validate()?;
    let mut episodes = Vec::new();
    let mut records = Vec::new();
    let mut rates = [0.0; 3];
    for (k, task) in Task::ALL.into_iter().enumerate() {
        let (res, rec) = run_batch(factory, task, n, env, log)?;
        rates[k] = success_rate(&res);
        episodes.extend(res);
        records.push(rec);
    }
    let ds: f64 = episodes.iter().map(|e| e.penalty.total()).sum();
    let row = ScoreRow { team: team.to_string(), hit: rates[0], defend: rates[1], prepare: rates[2], penalty: ds };
    let level = classify_with(ds, &DeployabilityThresholds::for_episodes(episodes.len()));
    Ok(QualifyingResult { row, level, episodes, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentOptions {
    pub game_steps: usize,
    pub penalty_episode_steps: usize,
    pub rules: MatchRules,
}

impl Default for TournamentOptions {
    fn default() -> Self {
        Self { game_steps: 4500, penalty_episode_steps: 500, rules: MatchRules::default() }
    }
}

impl TournamentOptions {
    /// Full-length games as played in the competition.
    pub fn full_scale() -> Self {
        Self { game_steps: 45_000, ..Self::default() }
    }
}

pub fn penalty_episode_count(game_steps: usize, episode_steps: usize) -> usize {
    game_steps.div_ceil(episode_steps.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub record: MatchRecord,
    pub penalty_episodes: usize,
    /// Per-side penalty of every penalty episode.
    pub episode_penalties: [Vec<f64>; 2],
    /// Agent error that forfeited the rest of the game, per side.
    pub forfeits: [Option<String>; 2],
    pub steps: usize,
    pub final_state_hash: String,
    #[serde(skip)]
    pub records: Vec<ReplayRecord>,
}

/// One game between two agents. An agent error ends the game and charges the
/// failing side the maximum penalty for every episode not yet completed.
pub fn run_game(
    names: [&str; 2],
    factories: [&AgentFactory; 2],
    env: &EnvConfig,
    opts: &TournamentOptions,
    seed: u64,
    log: bool,
) -> Result<GameResult, HarnessError> {
    let resolved = env.resolve();
    let mut model_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
    let cfg = resolved.simulated_world(&mut model_rng);
    let serve = PuckState::at_rest(0.25 * cfg.table.length, 0.0);
    let mut world = World::new(cfg, serve, derive_seed(seed, &[4]))?;
    let set = ConstraintSet::new(&world.cfg.robot, &world.cfg.table);
    let mut agents = [factories[0](derive_seed(seed, &[5, 0]))?, factories[1](derive_seed(seed, &[5, 1]))?];
    for a in agents.iter_mut() {
        a.reset();
    }
    let mut corruptors = [ObservationCorruptor::new(resolved.noise), ObservationCorruptor::new(resolved.noise)];
    let mut noise_rngs = [ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3, 0])), ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3, 1]))];

    let n_episodes = penalty_episode_count(opts.game_steps, opts.penalty_episode_steps);
    let mut meters = [EpisodeMeter::default(), EpisodeMeter::default()];
    let mut penalties: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut forfeits: [Option<String>; 2] = [None, None];
    let mut events: Vec<Event> = Vec::new();
    let mut records = Vec::new();
    let mut steps = 0;
    while steps < opts.game_steps {
        let home = control_step(&world, Side::Home, agents[0].as_mut(), &mut corruptors[0], &mut noise_rngs[0], env.timing, &set);
        let away = control_step(&world, Side::Away, agents[1].as_mut(), &mut corruptors[1], &mut noise_rngs[1], env.timing, &set);
        for (i, s) in [&home, &away].into_iter().enumerate() {
            if let Some(e) = &s.error {
                forfeits[i] = Some(e.to_string());
            }
        }
        if forfeits.iter().any(Option::is_some) {
            break;
        }
        meters[0].record_step(home.flags, home.compute_time);
        meters[1].record_step(away.flags, away.compute_time);
        let step_events = world.step([&home.command, &away.command]);
        steps += 1;
        if log {
            records.push(ReplayRecord {
                episode: (steps - 1) / opts.penalty_episode_steps,
                step: steps - 1,
                world: world.state.clone(),
                agents: vec![
                    AgentRecord { side: Side::Home, observation: home.observation, command: home.command, compute_time: home.compute_time },
                    AgentRecord { side: Side::Away, observation: away.observation, command: away.command, compute_time: away.compute_time },
                ],
                events: step_events.clone(),
            });
        }
        events.extend(step_events);
        if steps % opts.penalty_episode_steps == 0 || steps == opts.game_steps {
            for i in 0..2 {
                penalties[i].push(meters[i].finish(&env.penalty).total());
                meters[i] = EpisodeMeter::default();
            }
        }
    }
    if steps < opts.game_steps {
        let max = env.penalty.episode_max();
        for i in 0..2 {
            let remaining = n_episodes - penalties[i].len();
            if forfeits[i].is_some() {
                penalties[i].extend(std::iter::repeat_n(max, remaining));
            } else {
                penalties[i].push(meters[i].finish(&env.penalty).total());
            }
        }
    }
    let totals = [penalties[0].iter().sum(), penalties[1].iter().sum()];
    let mut rules = opts.rules;
    if let WinnerRule::DeployableFirst { .. } = rules.winner {
        rules.winner = WinnerRule::DeployableFirst { max_penalty: DeployabilityThresholds::for_episodes(n_episodes).improvable };
    }
    let score = score_match(&MatchTally::from_events(&events, totals), &rules);
    Ok(GameResult {
        record: MatchRecord { teams: [names[0].to_string(), names[1].to_string()], score },
        penalty_episodes: n_episodes,
        episode_penalties: penalties,
        forfeits,
        steps,
        final_state_hash: world.state.hash(),
        records,
    })
}

pub struct Entrant<'a> {
    pub name: String,
    pub factory: &'a AgentFactory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub games: Vec<GameResult>,
    pub standings: Vec<Standing>,
}

/// Round robin: each pair meets once, the earlier entrant at home.
pub fn round_robin_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub fn run_tournament(entrants: &[Entrant], env: &EnvConfig, opts: &TournamentOptions) -> Result<TournamentResult, HarnessError> {
    if entrants.len() < 2 {
        return Err(HarnessError::TooFewEntrants(entrants.len()));
    }
    env.validate()?;
    let pairs = round_robin_pairs(entrants.len());
    let games: Vec<Result<GameResult, HarnessError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(id, &(i, j))| {
            let (a, b) = (&entrants[i], &entrants[j]);
            run_game([&a.name, &b.name], [a.factory, b.factory], env, opts, derive_seed(env.seed, &[100, id as u64]), false)
        })
        .collect();
    let games = games.into_iter().collect::<Result<Vec<_>, _>>()?;
    let records: Vec<MatchRecord> = games.iter().map(|g| g.record.clone()).collect();
    Ok(TournamentResult { standings: standings(&records), games })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationColumn {
    pub label: String,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub tasks: Vec<Task>,
    pub columns: Vec<AblationColumn>,
    /// Success rate per task (rows) and column.
    pub success: Vec<Vec<f64>>,
}

/// Ideal, one column per factor, and all factors together. Every episode
/// index uses the same seed in every column.
pub fn run_ablation(factory: &AgentFactory, tasks: &[Task], factors: &[Factor], n: usize, env: &EnvConfig) -> Result<AblationResult, HarnessError> {
    env.validate()?;
    let ideal = env.with_profile(Profile::Ideal).resolve();
    let mut columns = vec![AblationColumn { label: "ideal".into(), profile: Profile::Ideal }];
    for &f in factors {
        let changed = changed_factors(&ideal, &env.with_profile(Profile::Ablation(f)).resolve())?;
        if changed != [f] {
            return Err(HarnessError::Config(format!("ablation `{}` changes {changed:?}", f.name())));
        }
        columns.push(AblationColumn { label: f.name().into(), profile: Profile::Ablation(f) });
    }
    columns.push(AblationColumn { label: "all".into(), profile: Profile::Evaluation });
    let mut success = Vec::with_capacity(tasks.len());
    for &task in tasks {
        let mut row = Vec::with_capacity(columns.len());
        for col in &columns {
            let (res, _) = run_batch(factory, task, n, &env.with_profile(col.profile), false)?;
            row.push(success_rate(&res));
        }
        success.push(row);
    }
    Ok(AblationResult { tasks: tasks.to_vec(), columns, success })
}
