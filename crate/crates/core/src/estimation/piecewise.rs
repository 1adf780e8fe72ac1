//! Piecewise-linear puck model with three contact modes and a mode-switching
//! extended Kalman filter built on it.
//!
//! Each mode `i` predicts `s' = A_i s + B_i m + c_i` with process covariance
//! `Σ_i`, where `s = (x, y, vx, vy)` is the puck and `m` the mallet state in
//! the same frame. The wall mode is expressed in a canonical frame where the
//! contacted side wall is the upper one (`+y`); the constant `c` carries the
//! wall position.

use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kalman::symmetrize;
use crate::sim::puck::{step_puck, ContactMemory, MalletState, PuckEvent, PuckParams, PuckState};
use crate::sim::TableGeometry;

pub type PuckVector = Vector4<f64>;
pub type MalletVector = Vector4<f64>;

pub const MIN_SAMPLES_PER_MODE: usize = 20;
pub const MALLET_MARGIN: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactMode {
    Free,
    Wall,
    Mallet,
}

impl ContactMode {
    pub const ALL: [ContactMode; 3] = [ContactMode::Free, ContactMode::Wall, ContactMode::Mallet];
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mode {mode:?} has {found} samples, at least {MIN_SAMPLES_PER_MODE} are needed")]
    TooFewSamples { mode: ContactMode, found: usize },
    #[error("model file lists mode {0:?} twice or misses it")]
    ModeSet(ContactMode),
    #[error("matrix `{name}` of mode {mode:?} has {len} entries, expected {expected}")]
    Shape { mode: ContactMode, name: &'static str, len: usize, expected: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn puck_vector(p: &PuckState) -> PuckVector {
    PuckVector::new(p.x, p.y, p.vx, p.vy)
}

pub fn mallet_vector(m: &MalletState) -> MalletVector {
    MalletVector::new(m.x, m.y, m.vx, m.vy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDynamics {
    pub a: Matrix4<f64>,
    pub b: Matrix4<f64>,
    pub c: Vector4<f64>,
    pub sigma: Matrix4<f64>,
}

impl ModeDynamics {
    pub fn predict(&self, s: &PuckVector, m: &MalletVector) -> PuckVector {
        self.a * s + self.b * m + self.c
    }
}

/// Reflection that maps the lower side wall onto the upper one.
fn wall_flip(y: f64) -> Matrix4<f64> {
    let s = if y < 0.0 { -1.0 } else { 1.0 };
    Matrix4::from_diagonal(&Vector4::new(1.0, s, 1.0, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseLinearPuckModel {
    pub dt: f64,
    pub free: ModeDynamics,
    pub wall: ModeDynamics,
    pub mallet: ModeDynamics,
}

impl PiecewiseLinearPuckModel {
    /// Closed-form model of the simulator's sliding and wall laws. The mallet
    /// mode treats every contact as head-on.
    pub fn from_physics(params: &PuckParams, geom: &TableGeometry, dt: f64) -> Self {
        let d = (-params.slide_friction * dt).exp();
        let acc_var = (params.disturbance_std * dt).powi(2);
        let sigma = Matrix4::from_diagonal(&Vector4::new(acc_var * dt * dt, acc_var * dt * dt, acc_var, acc_var))
            + Matrix4::identity() * 1e-14;
        let free_a = Matrix4::new(
            1.0, 0.0, d * dt, 0.0, //
            0.0, 1.0, 0.0, d * dt, //
            0.0, 0.0, d, 0.0, //
            0.0, 0.0, 0.0, d,
        );
        let free = ModeDynamics { a: free_a, b: Matrix4::zeros(), c: Vector4::zeros(), sigma };

        let e = params.wall_restitution;
        let y_lim = geom.puck_y_limit();
        let wall_a = Matrix4::new(
            1.0, 0.0, d * dt, 0.0, //
            0.0, -e, 0.0, -e * d * dt, //
            0.0, 0.0, d, 0.0, //
            0.0, 0.0, 0.0, -e * d,
        );
        let wall = ModeDynamics { a: wall_a, b: Matrix4::zeros(), c: Vector4::new(0.0, (1.0 + e) * y_lim, 0.0, 0.0), sigma };

        let em = params.mallet_restitution;
        let mallet_a = Matrix4::new(
            1.0, 0.0, -em * dt, 0.0, //
            0.0, 1.0, 0.0, -em * dt, //
            0.0, 0.0, -em, 0.0, //
            0.0, 0.0, 0.0, -em,
        );
        let k = 1.0 + em;
        let mallet_b = Matrix4::new(
            0.0, 0.0, k * dt, 0.0, //
            0.0, 0.0, 0.0, k * dt, //
            0.0, 0.0, k, 0.0, //
            0.0, 0.0, 0.0, k,
        );
        let mallet = ModeDynamics { a: mallet_a, b: mallet_b, c: Vector4::zeros(), sigma };
        Self { dt, free, wall, mallet }
    }

    pub fn mode(&self, mode: ContactMode) -> &ModeDynamics {
        match mode {
            ContactMode::Free => &self.free,
            ContactMode::Wall => &self.wall,
            ContactMode::Mallet => &self.mallet,
        }
    }

    /// Mean and linearised transition for `mode` at `s`, in the table frame.
    pub fn propagate(&self, mode: ContactMode, s: &PuckVector, m: &MalletVector) -> (PuckVector, Matrix4<f64>, Matrix4<f64>) {
        let dyns = self.mode(mode);
        if mode == ContactMode::Wall {
            let f = wall_flip(s.y);
            let next = f * dyns.predict(&(f * s), &(f * m));
            (next, f * dyns.a * f, f * dyns.sigma * f)
        } else {
            (dyns.predict(s, m), dyns.a, dyns.sigma)
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, serde_json::to_string_pretty(&ModelFile::from(self))?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.try_into()
    }
}

/// On-disk form: one entry per mode with row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dt: f64,
    pub modes: Vec<ModeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub mode: ContactMode,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub sigma: Vec<f64>,
}

fn row_major(m: &Matrix4<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

fn from_row_major(mode: ContactMode, name: &'static str, v: &[f64]) -> Result<Matrix4<f64>, ModelError> {
    if v.len() != 16 {
        return Err(ModelError::Shape { mode, name, len: v.len(), expected: 16 });
    }
    Ok(Matrix4::from_row_slice(v))
}

impl From<&PiecewiseLinearPuckModel> for ModelFile {
    fn from(model: &PiecewiseLinearPuckModel) -> Self {
        let modes = ContactMode::ALL
            .iter()
            .map(|&mode| {
                let d = model.mode(mode);
                ModeEntry { mode, a: row_major(&d.a), b: row_major(&d.b), c: d.c.iter().copied().collect(), sigma: row_major(&d.sigma) }
            })
            .collect();
        Self { dt: model.dt, modes }
    }
}

impl TryFrom<ModelFile> for PiecewiseLinearPuckModel {
    type Error = ModelError;

    fn try_from(file: ModelFile) -> Result<Self, ModelError> {
        let get = |mode: ContactMode| -> Result<ModeDynamics, ModelError> {
            let mut hits = file.modes.iter().filter(|e| e.mode == mode);
            let entry = hits.next().ok_or(ModelError::ModeSet(mode))?;
            if hits.next().is_some() {
                return Err(ModelError::ModeSet(mode));
            }
            if entry.c.len() != 4 {
                return Err(ModelError::Shape { mode, name: "c", len: entry.c.len(), expected: 4 });
            }
            Ok(ModeDynamics {
                a: from_row_major(mode, "a", &entry.a)?,
                b: from_row_major(mode, "b", &entry.b)?,
                c: Vector4::from_column_slice(&entry.c),
                sigma: from_row_major(mode, "sigma", &entry.sigma)?,
            })
        };
        Ok(Self { dt: file.dt, free: get(ContactMode::Free)?, wall: get(ContactMode::Wall)?, mallet: get(ContactMode::Mallet)? })
    }
}

/// Mallet contact (within a 5 mm margin) takes precedence; otherwise wall when
/// the puck is at a side wall or will reach it within `dt`.
pub fn classify_contact_mode(s: &PuckVector, mallets: &[MalletVector], geom: &TableGeometry, dt: f64) -> ContactMode {
    let reach = geom.contact_distance() + MALLET_MARGIN;
    if mallets.iter().any(|m| (Vector2::new(s.x - m.x, s.y - m.y)).norm() <= reach) {
        return ContactMode::Mallet;
    }
    let y_lim = geom.puck_y_limit();
    if s.y.abs() >= y_lim || (s.y + s.w * dt).abs() >= y_lim {
        return ContactMode::Wall;
    }
    ContactMode::Free
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub puck: PuckVector,
    pub mallet: MalletVector,
    pub next: PuckVector,
    pub mode: ContactMode,
}

/// Least-squares fit of `(A, B, c)` per mode with residual covariance `Σ`.
pub fn fit_piecewise_model(data: &[Transition], dt: f64) -> Result<PiecewiseLinearPuckModel, ModelError> {
    let fit = |mode: ContactMode| -> Result<ModeDynamics, ModelError> {
        let rows: Vec<&Transition> = data.iter().filter(|t| t.mode == mode).collect();
        if rows.len() < MIN_SAMPLES_PER_MODE {
            return Err(ModelError::TooFewSamples { mode, found: rows.len() });
        }
        let n = rows.len();
        let mut x = DMatrix::<f64>::zeros(n, 9);
        let mut y = DMatrix::<f64>::zeros(n, 4);
        for (i, t) in rows.iter().enumerate() {
            let (s, m, next) = if mode == ContactMode::Wall {
                let f = wall_flip(t.puck.y);
                (f * t.puck, f * t.mallet, f * t.next)
            } else {
                (t.puck, t.mallet, t.next)
            };
            for k in 0..4 {
                x[(i, k)] = s[k];
                x[(i, 4 + k)] = m[k];
                y[(i, k)] = next[k];
            }
            x[(i, 8)] = 1.0;
        }
        let w = x.clone().svd(true, true).solve(&y, 1e-12).expect("SVD computed with U and V");
        let wt = w.transpose();
        let a = Matrix4::from_fn(|r, c| wt[(r, c)]);
        let b = Matrix4::from_fn(|r, c| wt[(r, 4 + c)]);
        let c = Vector4::from_fn(|r, _| wt[(r, 8)]);
        let resid = &y - &x * &w;
        let dof = n.saturating_sub(9).max(1) as f64;
        let cov = resid.transpose() * &resid / dof;
        let sigma = symmetrize(&Matrix4::from_fn(|r, c| cov[(r, c)]));
        Ok(ModeDynamics { a, b, c, sigma })
    };
    Ok(PiecewiseLinearPuckModel { dt, free: fit(ContactMode::Free)?, wall: fit(ContactMode::Wall)?, mallet: fit(ContactMode::Mallet)? })
}

/// Labelled transitions from the simulator's puck law with randomly placed,
/// randomly moving mallets. Labels come from the simulator's contact events.
pub fn simulate_transitions<R: Rng + ?Sized>(
    params: &PuckParams,
    geom: &TableGeometry,
    dt: f64,
    count: usize,
    rng: &mut R,
) -> Vec<Transition> {
    let y_lim = geom.puck_y_limit();
    let mut out = Vec::with_capacity(count);
    let mut memory = ContactMemory::default();
    while out.len() < count {
        let puck = PuckState {
            x: rng.random_range(0.2..geom.length - 0.2),
            y: rng.random_range(-y_lim..y_lim),
            vx: rng.random_range(-3.0..3.0),
            vy: rng.random_range(-3.0..3.0),
            ..PuckState::default()
        };
        // Half the samples put a mallet in reach of the puck.
        let near = rng.random_bool(0.5);
        let (mx, my) = if near {
            let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = geom.contact_distance() * rng.random_range(0.9..1.05);
            (puck.x + r * ang.cos(), puck.y + r * ang.sin())
        } else {
            (rng.random_range(0.0..geom.length), rng.random_range(-y_lim..y_lim))
        };
        let mallet = MalletState { x: mx, y: my, vx: rng.random_range(-2.0..2.0), vy: rng.random_range(-2.0..2.0) };
        let parked = MalletState { x: -5.0, y: 0.0, vx: 0.0, vy: 0.0 };
        let step = step_puck(&puck, &[mallet, parked], params, geom, dt, &mut memory, rng);
        if step.events.iter().any(|e| matches!(e, PuckEvent::Goal { .. })) {
            continue;
        }
        let mode = if step.events.iter().any(|e| matches!(e, PuckEvent::MalletContact { .. })) {
            ContactMode::Mallet
        } else if step.events.contains(&PuckEvent::WallContact) {
            // End-wall bounces are outside the model.
            if step.puck.x.abs() < geom.puck_radius + 0.01 || step.puck.x > geom.length - geom.puck_radius - 0.01 {
                continue;
            }
            ContactMode::Wall
        } else {
            ContactMode::Free
        };
        out.push(Transition { puck: puck_vector(&puck), mallet: mallet_vector(&mallet), next: puck_vector(&step.puck), mode });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfBelief {
    pub mean: PuckVector,
    pub cov: Matrix4<f64>,
    pub mode: ContactMode,
}

impl EkfBelief {
    pub fn new(mean: PuckVector, cov: Matrix4<f64>) -> Self {
        Self { mean, cov, mode: ContactMode::Free }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutStop {
    /// Reached the opponent end (`x ≥ length − puck_radius`).
    FarEnd,
    /// Reached the own end (`x ≤ puck_radius`).
    NearEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EkfRollout {
    pub beliefs: Vec<EkfBelief>,
    pub stop: Option<RolloutStop>,
}

/// Propagate mean and covariance for up to `steps`; the mode at each step is
/// classified from the mean. `mallet_plan[k]` is the mallet at step `k`; the
/// last entry is held once the plan runs out and an empty plan means no mallet.
pub fn ekf_rollout(
    model: &PiecewiseLinearPuckModel,
    belief: &EkfBelief,
    mallet_plan: &[MalletVector],
    steps: usize,
    geom: &TableGeometry,
) -> EkfRollout {
    let mut beliefs = Vec::with_capacity(steps.min(4096));
    let mut cur = *belief;
    let far = geom.length - geom.puck_radius;
    for k in 0..steps {
        let mallet = mallet_plan.get(k).or(mallet_plan.last());
        let mallets: &[MalletVector] = match mallet {
            Some(m) => std::slice::from_ref(m),
            None => &[],
        };
        let mode = classify_contact_mode(&cur.mean, mallets, geom, model.dt);
        let m = mallet.copied().unwrap_or_else(MalletVector::zeros);
        let (mean, a, sigma) = model.propagate(mode, &cur.mean, &m);
        cur = EkfBelief { mean, cov: symmetrize(&(a * cur.cov * a.transpose() + sigma)), mode };
        beliefs.push(cur);
        if mean.x >= far {
            return EkfRollout { beliefs, stop: Some(RolloutStop::FarEnd) };
        }
        if mean.x <= geom.puck_radius {
            return EkfRollout { beliefs, stop: Some(RolloutStop::NearEnd) };
        }
    }
    EkfRollout { beliefs, stop: None }
}

/// Position measurement update of an EKF belief.
pub fn ekf_update(belief: &EkfBelief, z: Vector2<f64>, meas_std: f64) -> EkfBelief {
    let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let r = Matrix2::identity() * meas_std * meas_std;
    let s = h * belief.cov * h.transpose() + r;
    let Some(s_inv) = s.try_inverse() else { return *belief };
    let gain = belief.cov * h.transpose() * s_inv;
    let i_kh = Matrix4::identity() - gain * h;
    EkfBelief {
        mean: belief.mean + gain * (z - h * belief.mean),
        cov: symmetrize(&(i_kh * belief.cov * i_kh.transpose() + gain * r * gain.transpose())),
        mode: belief.mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom() -> TableGeometry {
        TableGeometry::default()
    }

    #[test]
    fn classifier_cases() {
        let g = geom();
        let centre = PuckVector::new(g.length / 2.0, 0.0, 0.0, 0.0);
        assert_eq!(classify_contact_mode(&centre, &[], &g, 1e-3), ContactMode::Free);
        let wall = PuckVector::new(1.0, g.puck_y_limit(), 0.0, 0.0);
        assert_eq!(classify_contact_mode(&wall, &[], &g, 1e-3), ContactMode::Wall);
        let touching = MalletVector::new(1.0 - g.contact_distance(), g.puck_y_limit(), 0.0, 0.0);
        assert_eq!(classify_contact_mode(&wall, &[touching], &g, 1e-3), ContactMode::Mallet);
    }

    #[test]
    fn recovers_known_linear_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let b = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let data: Vec<Transition> = (0..300)
            .map(|i| {
                let s = PuckVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
                let m = MalletVector::from_fn(|_, _| rng.random_range(-1.0..1.0));
                let mode = ContactMode::ALL[i % 3];
                let f = if mode == ContactMode::Wall { wall_flip(s.y) } else { Matrix4::identity() };
                let next = f * (a * (f * s) + b * (f * m));
                Transition { puck: s, mallet: m, next, mode }
            })
            .collect();
        let model = fit_piecewise_model(&data, 1e-3).unwrap();
        for mode in ContactMode::ALL {
            let d = model.mode(mode);
            assert!((d.a - a).norm() < 1e-6, "{mode:?}");
            assert!((d.b - b).norm() < 1e-6, "{mode:?}");
            assert!(d.c.norm() < 1e-6);
        }
    }

    #[test]
    fn empty_mode_is_named() {
        let t = Transition { puck: PuckVector::zeros(), mallet: MalletVector::zeros(), next: PuckVector::zeros(), mode: ContactMode::Free };
        let data: Vec<_> = (0..40).map(|i| Transition { mode: if i % 2 == 0 { ContactMode::Free } else { ContactMode::Wall }, ..t }).collect();
        match fit_piecewise_model(&data, 1e-3) {
            Err(ModelError::TooFewSamples { mode, found }) => {
                assert_eq!(mode, ContactMode::Mallet);
                assert_eq!(found, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_rollout_is_matrix_power() {
        let g = geom();
        let model = PiecewiseLinearPuckModel::from_physics(&PuckParams { disturbance_std: 0.0, ..PuckParams::default() }, &g, 1e-3);
        let start = PuckVector::new(0.5, 0.0, 0.8, 0.05);
        let roll = ekf_rollout(&model, &EkfBelief::new(start, Matrix4::zeros()), &[], 300, &g);
        let expect = model.free.a.pow(300) * start;
        assert!((roll.beliefs.last().unwrap().mean - expect).norm() < 1e-12);
    }

    #[test]
    fn covariance_trace_non_decreasing() {
        let g = geom();
        let model = PiecewiseLinearPuckModel::from_physics(&PuckParams { disturbance_std: 1.0, ..PuckParams::default() }, &g, 1e-3);
        let roll = ekf_rollout(&model, &EkfBelief::new(PuckVector::new(0.5, 0.0, 0.8, 0.0), Matrix4::zeros()), &[], 500, &g);
        let traces: Vec<f64> = roll.beliefs.iter().map(|b| b.cov.trace()).collect();
        assert!(traces.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rollout_switches_to_wall_at_crossing() {
        let g = geom();
        let model = PiecewiseLinearPuckModel::from_physics(&PuckParams::default(), &g, 1e-3);
        let start = PuckVector::new(0.8, g.puck_y_limit() - 0.0105, 0.0, 1.0);
        let roll = ekf_rollout(&model, &EkfBelief::new(start, Matrix4::zeros()), &[], 40, &g);
        let first_wall = roll.beliefs.iter().position(|b| b.mode == ContactMode::Wall).unwrap();
        // The free mean path first reaches the wall during step 10.
        assert_eq!(first_wall, 10);
        assert!(roll.beliefs[first_wall].mean.w < 0.0);
        assert!(roll.beliefs[..first_wall].iter().all(|b| b.mode == ContactMode::Free));
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = PiecewiseLinearPuckModel::from_physics(&PuckParams::default(), &geom(), 1e-3);
        model.save(&path).unwrap();
        assert_eq!(PiecewiseLinearPuckModel::load(&path).unwrap(), model);
    }
}
