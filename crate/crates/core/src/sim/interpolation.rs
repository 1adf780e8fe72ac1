//! Expansion of one 50 Hz command into 1 kHz setpoints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::JointVector;

pub const CONTROL_DT: f64 = 0.02;
pub const SIM_DT: f64 = 0.001;
pub const SAMPLES_PER_TICK: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationMode {
    PosLinear,
    PosQuadratic,
    PosvelLinear,
    PosvelCubic,
    PosvelQuartic,
    PosvelaccQuintic,
    #[serde(rename = "direct-1kHz")]
    Direct1kHz,
}

impl InterpolationMode {
    pub const ALL: [InterpolationMode; 7] = [
        InterpolationMode::PosLinear,
        InterpolationMode::PosQuadratic,
        InterpolationMode::PosvelLinear,
        InterpolationMode::PosvelCubic,
        InterpolationMode::PosvelQuartic,
        InterpolationMode::PosvelaccQuintic,
        InterpolationMode::Direct1kHz,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SetpointSample {
    pub q: JointVector,
    pub qdot: JointVector,
    pub qddot: JointVector,
}

impl SetpointSample {
    pub fn hold(q: JointVector) -> Self {
        Self { q, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub mode: InterpolationMode,
    pub q: JointVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qdot: Option<JointVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qddot: Option<JointVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<Vec<SetpointSample>>,
}

impl Command {
    pub fn position(mode: InterpolationMode, q: JointVector) -> Self {
        Self { mode, q, qdot: None, qddot: None, direct: None }
    }

    pub fn pos_vel(mode: InterpolationMode, q: JointVector, qdot: JointVector) -> Self {
        Self { mode, q, qdot: Some(qdot), qddot: None, direct: None }
    }

    pub fn quintic(q: JointVector, qdot: JointVector, qddot: JointVector) -> Self {
        Self { mode: InterpolationMode::PosvelaccQuintic, q, qdot: Some(qdot), qddot: Some(qddot), direct: None }
    }

    pub fn direct(samples: Vec<SetpointSample>) -> Self {
        let q = samples.last().map(|s| s.q).unwrap_or_else(JointVector::zeros);
        Self { mode: InterpolationMode::Direct1kHz, q, qdot: None, qddot: None, direct: Some(samples) }
    }

    /// Stationary hold at `q`.
    pub fn hold(q: JointVector) -> Self {
        Self::pos_vel(InterpolationMode::PosvelCubic, q, JointVector::zeros())
    }

    pub fn commanded_velocity(&self) -> JointVector {
        self.qdot.unwrap_or_else(JointVector::zeros)
    }

    pub fn validate(&self) -> Result<(), InterpolationError> {
        use InterpolationMode::*;
        let missing = |field| InterpolationError::MissingField { mode: self.mode, field };
        match self.mode {
            PosLinear | PosQuadratic => {}
            PosvelLinear | PosvelCubic | PosvelQuartic => {
                self.qdot.ok_or(missing("qdot"))?;
            }
            PosvelaccQuintic => {
                self.qdot.ok_or(missing("qdot"))?;
                self.qddot.ok_or(missing("qddot"))?;
            }
            Direct1kHz => {
                let samples = self.direct.as_ref().ok_or(missing("direct"))?;
                if samples.len() != SAMPLES_PER_TICK {
                    return Err(InterpolationError::SampleCount(samples.len()));
                }
            }
        }
        let finite = self.q.iter().all(|v| v.is_finite())
            && self.qdot.is_none_or(|v| v.iter().all(|x| x.is_finite()))
            && self.qddot.is_none_or(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(InterpolationError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InterpolationError {
    #[error("{mode:?} command is missing `{field}`")]
    MissingField { mode: InterpolationMode, field: &'static str },
    #[error("direct command needs {SAMPLES_PER_TICK} samples, got {0}")]
    SampleCount(usize),
    #[error("command contains non-finite values")]
    NonFinite,
}

/// Per-joint polynomial in time, coefficients in increasing degree.
struct JointPolynomial {
    coeffs: [JointVector; 6],
}

impl JointPolynomial {
    fn eval(&self, t: f64) -> SetpointSample {
        let c = &self.coeffs;
        let mut q = c[5];
        let mut v = c[5] * 5.0;
        let mut a = c[5] * 20.0;
        for k in (0..5).rev() {
            q = q * t + c[k];
        }
        for k in (1..5).rev() {
            v = v * t + c[k] * k as f64;
        }
        for k in (2..5).rev() {
            a = a * t + c[k] * (k * (k - 1)) as f64;
        }
        SetpointSample { q, qdot: v, qddot: a }
    }
}

fn polynomial(start: &SetpointSample, cmd: &Command, horizon: f64) -> JointPolynomial {
    use InterpolationMode::*;
    let t = horizon;
    let (q0, v0, a0) = (start.q, start.qdot, start.qddot);
    let q1 = cmd.q;
    let v1 = cmd.commanded_velocity();
    let a1 = cmd.qddot.unwrap_or_else(JointVector::zeros);
    let zero = JointVector::zeros();
    let h = q1 - q0;
    let coeffs = match cmd.mode {
        PosLinear => [q0, h / t, zero, zero, zero, zero],
        PosQuadratic => [q0, v0, (h - v0 * t) / (t * t), zero, zero, zero],
        PosvelCubic => [
            q0,
            v0,
            (h * 3.0 - (v0 * 2.0 + v1) * t) / t.powi(2),
            ((v0 + v1) * t - h * 2.0) / t.powi(3),
            zero,
            zero,
        ],
        PosvelQuartic => {
            let dp = h - v0 * t - a0 * (0.5 * t * t);
            let dv = v1 - v0 - a0 * t;
            [q0, v0, a0 * 0.5, (dp * 4.0 - dv * t) / t.powi(3), (dv * t - dp * 3.0) / t.powi(4), zero]
        }
        PosvelaccQuintic => [
            q0,
            v0,
            a0 * 0.5,
            (h * 20.0 - (v1 * 8.0 + v0 * 12.0) * t - (a0 * 3.0 - a1) * t * t) / (2.0 * t.powi(3)),
            (h * -30.0 + (v1 * 14.0 + v0 * 16.0) * t + (a0 * 3.0 - a1 * 2.0) * t * t) / (2.0 * t.powi(4)),
            (h * 12.0 - (v1 + v0) * 6.0 * t + (a1 - a0) * t * t) / (2.0 * t.powi(5)),
        ],
        PosvelLinear | Direct1kHz => unreachable!("handled without a polynomial"),
    };
    JointPolynomial { coeffs }
}

/// Setpoints at `1..=samples` milliseconds after the boundary; the last one
/// lands on the command.
pub fn interpolate_command(
    boundary: &SetpointSample,
    cmd: &Command,
    samples: usize,
) -> Result<Vec<SetpointSample>, InterpolationError> {
    cmd.validate()?;
    let horizon = samples as f64 * SIM_DT;
    let times = (1..=samples).map(|k| k as f64 * SIM_DT);
    let out = match cmd.mode {
        InterpolationMode::Direct1kHz => cmd.direct.clone().unwrap_or_default(),
        InterpolationMode::PosvelLinear => {
            let v1 = cmd.commanded_velocity();
            times
                .map(|t| {
                    let s = t / horizon;
                    SetpointSample {
                        q: boundary.q * (1.0 - s) + cmd.q * s,
                        qdot: boundary.qdot * (1.0 - s) + v1 * s,
                        qddot: (v1 - boundary.qdot) / horizon,
                    }
                })
                .collect()
        }
        _ => {
            let poly = polynomial(boundary, cmd, horizon);
            let mut out: Vec<_> = times.map(|t| poly.eval(t)).collect();
            // Pin the endpoint to the command exactly.
            if let Some(last) = out.last_mut() {
                last.q = cmd.q;
                if cmd.mode != InterpolationMode::PosLinear && cmd.mode != InterpolationMode::PosQuadratic {
                    last.qdot = cmd.commanded_velocity();
                }
                if let Some(a) = cmd.qddot.filter(|_| cmd.mode == InterpolationMode::PosvelaccQuintic) {
                    last.qddot = a;
                }
            }
            out
        }
    };
    Ok(out)
}
