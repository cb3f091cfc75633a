//! Current-mode adaptive exponential integrate-and-fire neuron and
//! first-order synaptic filters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::serde_si;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronParams {
    #[serde(with = "serde_si::ampere")]
    pub i_tau: f64,
    #[serde(with = "serde_si::second")]
    pub tau_m: f64,
    #[serde(with = "serde_si::ampere")]
    pub i_th: f64,
    /// Membrane leak floor inside the time-constant term.
    #[serde(with = "serde_si::ampere")]
    pub i0_neuron: f64,
    /// Adaptation resting level.
    #[serde(with = "serde_si::ampere")]
    pub i_p: f64,
    #[serde(with = "serde_si::second")]
    pub tau_adapt: f64,
    #[serde(with = "serde_si::ampere")]
    pub i_reset: f64,
    #[serde(with = "serde_si::ampere")]
    pub i_spkthr: f64,
    /// Positive-feedback gain.
    #[serde(with = "serde_si::ampere")]
    pub i_g: f64,
    /// Positive-feedback activation midpoint.
    #[serde(with = "serde_si::ampere")]
    pub i_ath: f64,
    /// Positive-feedback activation width.
    #[serde(with = "serde_si::ampere")]
    pub i_anorm: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams {
            i_tau: 2e-12,
            tau_m: 8.9e-3,
            i_th: 1e-12,
            i0_neuron: 0.5e-12,
            i_p: 0.5e-12,
            tau_adapt: 17.7e-3,
            i_reset: 1e-12,
            i_spkthr: 60e-12,
            i_g: 1e-9,
            i_ath: 20e-9,
            i_anorm: 1e-9,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("i_tau", self.i_tau),
            ("tau_m", self.tau_m),
            ("i_th", self.i_th),
            ("i0_neuron", self.i0_neuron),
            ("i_p", self.i_p),
            ("tau_adapt", self.tau_adapt),
            ("i_reset", self.i_reset),
            ("i_spkthr", self.i_spkthr),
            ("i_g", self.i_g),
            ("i_ath", self.i_ath),
            ("i_anorm", self.i_anorm),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("neuron.{name} must be positive, got {v}")));
            }
        }
        if self.i_spkthr <= self.i_reset {
            return Err(Error::invalid("neuron.i_spkthr must exceed neuron.i_reset"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeuronState {
    pub i_m: f64,
    pub i_adapt: f64,
}

impl NeuronState {
    /// Membrane at rest, adaptation at its resting level.
    pub fn rest(p: &NeuronParams) -> Self {
        NeuronState {
            i_m: 0.0,
            i_adapt: p.i_p,
        }
    }
}

/// Positive-feedback current `I_a`.
pub fn feedback_activation(i_m: f64, p: &NeuronParams) -> f64 {
    p.i_g / (1.0 + (-(i_m - p.i_ath) / p.i_anorm).exp())
}

/// One forward-Euler step. Returns the new state and whether the neuron spiked.
pub fn step_neuron(
    state: NeuronState,
    p: &NeuronParams,
    i_in: f64,
    i_comp: f64,
    i_syn_net: f64,
    dt: f64,
) -> (NeuronState, bool) {
    let NeuronState { i_m, i_adapt } = state;
    let i_a = feedback_activation(i_m, p);
    let i_fb = i_a * (i_m + p.i_th) / p.i_tau;
    let i_pos = i_fb + p.i_th / p.i_tau * (i_in + i_comp + i_syn_net - i_adapt - p.i_tau);
    let dm = (i_pos - i_m * (1.0 + i_adapt / p.i_tau)) / (p.tau_m * (1.0 + p.i_th / (i_m + p.i0_neuron)));
    let da = (p.i_p - i_adapt) / p.tau_adapt;

    let mut next = NeuronState {
        i_m: (i_m + dt * dm).max(0.0),
        i_adapt: (i_adapt + dt * da).max(0.0),
    };
    let spiked = next.i_m > p.i_spkthr;
    if spiked {
        next.i_m = p.i_reset;
    }
    (next, spiked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynChannelParams {
    /// Current injected per unit of weight per spike.
    #[serde(with = "serde_si::ampere")]
    pub i_w: f64,
    #[serde(with = "serde_si::second")]
    pub tau_syn: f64,
}

impl Default for SynChannelParams {
    fn default() -> Self {
        SynChannelParams {
            i_w: 16e-12,
            tau_syn: 8e-3,
        }
    }
}

impl SynChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_w > 0.0) || !(self.tau_syn > 0.0) {
            return Err(Error::invalid("synapse i_w and tau_syn must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SynChannelState {
    pub i_syn: f64,
}

/// Exponential decay over `dt`, then the impulse `i_w * sum(w)` of this step's spikes.
pub fn step_syn(state: SynChannelState, p: &SynChannelParams, dt: f64, weighted_spike_sum: f64) -> SynChannelState {
    SynChannelState {
        i_syn: state.i_syn * (-dt / p.tau_syn).exp() + p.i_w * weighted_spike_sum,
    }
}

/// Spike count per second inside `[0, window)`.
pub fn firing_rate(spike_times: &[f64], window: f64) -> f64 {
    firing_rate_in(spike_times, 0.0, window)
}

/// Spike count per second inside `[start, end)`.
pub fn firing_rate_in(spike_times: &[f64], start: f64, end: f64) -> f64 {
    assert!(end > start, "empty rate window");
    let n = spike_times.iter().filter(|&&t| t >= start && t < end).count();
    n as f64 / (end - start)
}
