//! Per-neuron learning block: teacher and output traces, compensation current,
//! error evaluation with a dead zone and Bernoulli gating, and the synaptic
//! update applied on presynaptic events.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{read_synapse, CircuitParams};
use crate::device::{program_pair, DeviceParams, Direction, SynapsePair};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::units::serde_si;

const PICOAMPERE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Probabilistic push-pull redraw of a binary device pair.
    Binary,
    /// Continuous weight, stepped in proportion to the error.
    HighRes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    #[serde(with = "serde_si::second")]
    pub tau_learn: f64,
    pub g_comp: f64,
    /// Offset added to the output trace before comparing with the dendritic current.
    #[serde(with = "serde_si::ampere")]
    pub s0: f64,
    /// Dead-zone half width.
    #[serde(with = "serde_si::ampere")]
    pub alpha: f64,
    pub p_bernoulli: f64,
    #[serde(with = "serde_si::ampere")]
    pub w_s: f64,
    #[serde(with = "serde_si::ampere")]
    pub w_t: f64,
    /// Compensation is switched off from this time on. Set by the task from
    /// its training length, so it is not part of the config file.
    #[serde(skip)]
    pub t_stop: f64,
    pub mode: UpdateMode,
    /// High-resolution step per picoampere of error.
    pub eta_highres: f64,
}

impl LearningParams {
    pub fn mnist() -> Self {
        LearningParams {
            tau_learn: 8e-3,
            g_comp: 1.0,
            s0: -500e-12,
            alpha: 300e-12,
            p_bernoulli: 0.01,
            w_s: 200e-12,
            w_t: 40e-12,
            t_stop: 100.0,
            mode: UpdateMode::Binary,
            eta_highres: 1e-4,
        }
    }

    pub fn single_pattern() -> Self {
        LearningParams {
            s0: 0.0,
            alpha: 500e-12,
            p_bernoulli: 0.001,
            ..Self::mnist()
        }
    }

    /// Same parameters with the gate closed and the teacher path removed.
    pub fn disabled(self) -> Self {
        LearningParams {
            p_bernoulli: 0.0,
            t_stop: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_learn > 0.0) {
            return Err(Error::invalid("learning.tau_learn must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_bernoulli) {
            return Err(Error::invalid(format!(
                "learning.p_bernoulli must lie in [0, 1], got {}",
                self.p_bernoulli
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid("learning.alpha must be non-negative"));
        }
        if !(self.w_s >= 0.0 && self.w_t >= 0.0 && self.eta_highres >= 0.0) {
            return Err(Error::invalid("learning spike weights and eta must be non-negative"));
        }
        Ok(())
    }
}

impl Default for LearningParams {
    fn default() -> Self {
        Self::mnist()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LearningState {
    /// Teacher trace `T`.
    pub t_trace: f64,
    /// Output trace `S`.
    pub s_trace: f64,
}

pub fn decay_traces(state: LearningState, p: &LearningParams, dt: f64) -> LearningState {
    let k = (-dt / p.tau_learn).exp();
    LearningState {
        t_trace: state.t_trace * k,
        s_trace: state.s_trace * k,
    }
}

pub fn on_post_spike(state: LearningState, p: &LearningParams) -> LearningState {
    LearningState {
        s_trace: state.s_trace + p.w_s,
        ..state
    }
}

pub fn on_teacher_spike(state: LearningState, p: &LearningParams) -> LearningState {
    LearningState {
        t_trace: state.t_trace + p.w_t,
        ..state
    }
}

/// `g_comp * (T - S)` before `t_stop`, zero afterwards.
pub fn compensation(state: &LearningState, p: &LearningParams, t_now: f64) -> f64 {
    if t_now < p.t_stop {
        p.g_comp * (state.t_trace - state.s_trace)
    } else {
        0.0
    }
}

/// Error signal `q = S + S0 - I_syn`.
pub fn error_signal(state: &LearningState, p: &LearningParams, i_syn_net: f64) -> f64 {
    state.s_trace + p.s0 - i_syn_net
}

/// Update sign `L`: `sign(q)` outside the dead zone, gated by the Bernoulli draw.
pub fn eval_update(state: &LearningState, p: &LearningParams, i_syn_net: f64, bernoulli_draw: bool) -> i8 {
    let q = error_signal(state, p, i_syn_net);
    gate(q, p.alpha, bernoulli_draw)
}

pub(crate) fn gate(q: f64, alpha: f64, bernoulli_draw: bool) -> i8 {
    if !bernoulli_draw || q.abs() <= alpha {
        0
    } else if q > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Synapse {
    /// Device pair and its cached effective weight.
    Binary { pair: SynapsePair, weight: f64 },
    HighRes { weight: f64 },
}

impl Synapse {
    pub fn weight(&self) -> f64 {
        match *self {
            Synapse::Binary { weight, .. } | Synapse::HighRes { weight } => weight,
        }
    }
}

/// Everything needed to program and read a synapse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynapseModel {
    pub mode: UpdateMode,
    pub device: DeviceParams,
    pub circuit: CircuitParams,
    /// Mean normalized read of an increase-programmed pair; binary weights are
    /// divided by it so that device settings with different spreads share the
    /// same mean weight magnitude.
    pub scale: f64,
    pub eta_highres: f64,
}

/// Pairs drawn for the weight-scale estimate.
pub const CALIBRATION_SAMPLES: usize = 20_000;

impl SynapseModel {
    pub fn new(mode: UpdateMode, device: DeviceParams, circuit: CircuitParams, eta_highres: f64) -> Result<Self> {
        device.validate()?;
        circuit.validate()?;
        let scale = match mode {
            UpdateMode::Binary => calibrate_scale(&device, &circuit, CALIBRATION_SAMPLES)?,
            UpdateMode::HighRes => 1.0,
        };
        Ok(SynapseModel {
            mode,
            device,
            circuit,
            scale,
            eta_highres,
        })
    }

    /// Normalized read `(i_pos - i_neg) / i_b`, rescaled.
    pub fn binary_weight(&self, pair: &SynapsePair) -> Result<f64> {
        let out = read_synapse(pair, &self.circuit)?;
        Ok(out.difference() / self.circuit.i_b / self.scale)
    }

    pub fn program<R: Rng + ?Sized>(&self, pair: &SynapsePair, dir: Direction, rng: &mut R) -> Result<Synapse> {
        let pair = program_pair(pair, dir, &self.device, rng);
        Ok(Synapse::Binary {
            pair,
            weight: self.binary_weight(&pair)?,
        })
    }

    /// Random initial synapse: a pair programmed in a random direction, or a
    /// uniform weight in `[-1, 1]`.
    pub fn random_synapse<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Synapse> {
        match self.mode {
            UpdateMode::Binary => {
                let dir = if rng.random::<bool>() {
                    Direction::Increase
                } else {
                    Direction::Decrease
                };
                self.program(&SynapsePair::new(1.0, 1.0), dir, rng)
            }
            UpdateMode::HighRes => Ok(Synapse::HighRes {
                weight: rng.random_range(-1.0..=1.0),
            }),
        }
    }
}

/// Mean of `|i_pos - i_neg| / i_b` over `n` increase-programmed pairs, drawn from
/// a fixed stream so the scale depends only on the device and circuit.
pub fn calibrate_scale(device: &DeviceParams, circuit: &CircuitParams, n: usize) -> Result<f64> {
    let mut rng = stream(0, Stream::Calibration, 0);
    let blank = SynapsePair::new(1.0, 1.0);
    let mut sum = 0.0;
    for _ in 0..n {
        let pair = program_pair(&blank, Direction::Increase, device, &mut rng);
        sum += (read_synapse(&pair, circuit)?.difference() / circuit.i_b).abs();
    }
    let scale = sum / n as f64;
    if !(scale > 0.0) {
        return Err(Error::Degenerate("devices produce no read difference".into()));
    }
    Ok(scale)
}

/// Applies the update `l` with error `q` to `syn`.
pub fn apply_presyn_update<R: Rng + ?Sized>(
    syn: &Synapse,
    l: i8,
    q: f64,
    model: &SynapseModel,
    rng: &mut R,
) -> Result<Synapse> {
    if l == 0 {
        return Ok(*syn);
    }
    match *syn {
        Synapse::Binary { pair, .. } => {
            let dir = if l > 0 { Direction::Increase } else { Direction::Decrease };
            model.program(&pair, dir, rng)
        }
        Synapse::HighRes { weight } => Ok(Synapse::HighRes {
            weight: (weight + model.eta_highres * q / PICOAMPERE).clamp(-1.0, 1.0),
        }),
    }
}
