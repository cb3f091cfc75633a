//! Clocked simulation engine.
//!
//! Every input unit projects onto every output neuron through one plastic
//! synapse. Teacher units are not plastic; each output has its own teacher
//! population whose spikes only feed the teacher trace of that neuron.
//!
//! Within one step the order is: generate input and teacher spikes, read the
//! targeted synapses into the synaptic channels, integrate the neurons and
//! their traces, then evaluate and apply weight updates for the same input
//! events.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learning::{self, LearningParams, LearningState, Synapse, SynapseModel, UpdateMode};
use crate::neuron::{step_neuron, step_syn, NeuronParams, NeuronState, SynChannelParams, SynChannelState};
use crate::rng::{stream, SimRng, Stream};
use crate::circuit::CircuitParams;
use crate::device::DeviceParams;

/// Per-step probability above which the Bernoulli approximation is replaced by
/// an exact Poisson draw.
pub const BERNOULLI_LIMIT: f64 = 0.1;

/// Number of spikes a unit of rate `rate` emits in one step of length `dt`.
pub fn poisson_spikes<R: Rng + ?Sized>(rate: f64, dt: f64, rng: &mut R) -> u32 {
    let lambda = rate * dt;
    if lambda <= 0.0 {
        0
    } else if lambda <= BERNOULLI_LIMIT {
        rng.random_bool(lambda) as u32
    } else {
        Poisson::new(lambda).expect("positive finite rate").sample(rng) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeKind {
    Input,
    Teacher,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeEvent {
    pub time: f64,
    /// Unit index within its kind; for teacher spikes, the output neuron taught.
    pub source: u32,
    pub kind: SpikeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSnapshot {
    pub time: f64,
    pub input: u32,
    pub output: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpikeRecord {
    pub events: Vec<SpikeEvent>,
    pub weight_snapshots: Vec<WeightSnapshot>,
    /// Output spike counts per epoch and neuron.
    pub epoch_counts: Vec<Vec<u32>>,
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RecordOptions {
    pub inputs: bool,
    pub teachers: bool,
    pub outputs: bool,
    /// Snapshot all synapses every this many steps (and once at the end).
    pub snapshot_every: Option<u64>,
}

/// A stretch of constant rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Epoch {
    pub duration: f64,
    /// Rate of each input unit.
    pub input_rates: Vec<f64>,
    /// Rate of each teacher unit, per output neuron.
    pub teacher_rates: Vec<f64>,
    pub learning: bool,
}

/// Parameter blocks shared by every network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub dt: f64,
    /// Teacher units per output neuron.
    pub teacher_size: usize,
    pub neuron: NeuronParams,
    pub synapse: SynChannelParams,
    pub learning: LearningParams,
    pub device: DeviceParams,
    pub circuit: CircuitParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            dt: 1e-4,
            teacher_size: 40,
            neuron: NeuronParams::default(),
            synapse: SynChannelParams::default(),
            learning: LearningParams::default(),
            device: DeviceParams::default(),
            circuit: CircuitParams::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        self.neuron.validate()?;
        self.synapse.validate()?;
        self.learning.validate()?;
        self.device.validate()?;
        self.circuit.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub seed: u64,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub epochs: Vec<Epoch>,
    pub record: RecordOptions,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_outputs == 0 {
            return Err(Error::invalid("network needs at least one output neuron"));
        }
        for (k, e) in self.epochs.iter().enumerate() {
            if e.input_rates.len() != self.n_inputs || e.teacher_rates.len() != self.n_outputs {
                return Err(Error::invalid(format!("epoch {k}: rate vector length mismatch")));
            }
            if !(e.duration >= 0.0) {
                return Err(Error::invalid(format!("epoch {k}: negative duration")));
            }
            if e.input_rates.iter().chain(&e.teacher_rates).any(|r| !(*r >= 0.0 && r.is_finite())) {
                return Err(Error::invalid(format!("epoch {k}: rates must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Turns off plasticity and the teacher compensation path.
pub fn disable_learning(mut config: SimConfig) -> SimConfig {
    config.model.learning = config.model.learning.disabled();
    for e in &mut config.epochs {
        e.learning = false;
    }
    config
}

/// Network state that persists across epochs.
#[derive(Debug, Clone)]
pub struct Network {
    pub dt: f64,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub teacher_size: usize,
    pub neuron: NeuronParams,
    pub channel: SynChannelParams,
    pub learning: LearningParams,
    pub model: SynapseModel,
    /// Row-major `[input][output]`.
    pub synapses: Vec<Synapse>,
    neurons: Vec<NeuronState>,
    exc: Vec<SynChannelState>,
    inh: Vec<SynChannelState>,
    traces: Vec<LearningState>,
    step: u64,
    input_rng: SimRng,
    teacher_rng: SimRng,
    device_rng: SimRng,
    gate_rng: SimRng,
    /// Input events of the current epoch, bucketed by step offset.
    buckets: Vec<Vec<u32>>,
}

impl Network {
    pub fn new(params: &ModelParams, n_inputs: usize, n_outputs: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        if n_outputs == 0 {
            return Err(Error::invalid("network needs at least one output neuron"));
        }
        let model = SynapseModel::new(
            params.learning.mode,
            params.device,
            params.circuit,
            params.learning.eta_highres,
        )?;
        let mut init_rng = stream(seed, Stream::Init, 0);
        let synapses = (0..n_inputs * n_outputs)
            .map(|_| model.random_synapse(&mut init_rng))
            .collect::<Result<_>>()?;
        Ok(Network {
            dt: params.dt,
            n_inputs,
            n_outputs,
            teacher_size: params.teacher_size,
            neuron: params.neuron,
            channel: params.synapse,
            learning: params.learning,
            model,
            synapses,
            neurons: vec![NeuronState::rest(&params.neuron); n_outputs],
            exc: vec![SynChannelState::default(); n_outputs],
            inh: vec![SynChannelState::default(); n_outputs],
            traces: vec![LearningState::default(); n_outputs],
            step: 0,
            input_rng: stream(seed, Stream::Inputs, 0),
            teacher_rng: stream(seed, Stream::Teacher, 0),
            device_rng: stream(seed, Stream::Devices, 0),
            gate_rng: stream(seed, Stream::Gates, 0),
            buckets: Vec::new(),
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.synapses[input * self.n_outputs + output].weight()
    }

    /// Weights of all synapses onto `output`, indexed by input unit.
    pub fn weights_onto(&self, output: usize) -> Vec<f64> {
        (0..self.n_inputs).map(|u| self.weight(u, output)).collect()
    }

    pub fn neuron_state(&self, output: usize) -> NeuronState {
        self.neurons[output]
    }

    pub fn traces(&self, output: usize) -> LearningState {
        self.traces[output]
    }

    /// Clears membrane, channel and trace state, keeping the weights.
    pub fn reset_dynamics(&mut self) {
        self.neurons.fill(NeuronState::rest(&self.neuron));
        self.exc.fill(SynChannelState::default());
        self.inh.fill(SynChannelState::default());
        self.traces.fill(LearningState::default());
    }

    /// Swaps in new learning parameters, e.g. to freeze the network for evaluation.
    pub fn set_learning(&mut self, learning: LearningParams) {
        self.learning = learning;
    }

    fn fill_input_buckets(&mut self, rates: &[f64], steps: usize) {
        self.buckets.resize_with(steps, Vec::new);
        for b in &mut self.buckets[..steps] {
            b.clear();
        }
        for (u, &rate) in rates.iter().enumerate() {
            let p = rate * self.dt;
            if p <= 0.0 {
                continue;
            }
            if p <= BERNOULLI_LIMIT {
                // Geometric gaps between successes give the per-step Bernoulli law
                // without visiting silent steps.
                let geo = Geometric::new(p).expect("probability in (0, 0.1]");
                let mut k = geo.sample(&mut self.input_rng);
                while (k as usize) < steps {
                    self.buckets[k as usize].push(u as u32);
                    k += 1 + geo.sample(&mut self.input_rng);
                }
            } else {
                let pois = Poisson::new(p).expect("positive rate");
                for b in &mut self.buckets[..steps] {
                    for _ in 0..pois.sample(&mut self.input_rng) as u32 {
                        b.push(u as u32);
                    }
                }
            }
        }
    }

    /// Runs one epoch and returns the output spike count of each neuron.
    pub fn run_epoch(&mut self, epoch: &Epoch, record: &RecordOptions, out: &mut SpikeRecord) -> Result<Vec<u32>> {
        let steps = (epoch.duration / self.dt).round() as usize;
        self.fill_input_buckets(&epoch.input_rates, steps);
        let n_out = self.n_outputs;
        let mut counts = vec![0u32; n_out];
        let mut exc_sum = vec![0.0; n_out];
        let mut inh_sum = vec![0.0; n_out];
        let mut teach = vec![0u32; n_out];
        let plastic = epoch.learning && self.learning.p_bernoulli > 0.0;

        for k in 0..steps {
            let t = self.time();
            let events = std::mem::take(&mut self.buckets[k]);

            for (j, n) in teach.iter_mut().enumerate() {
                *n = (0..self.teacher_size)
                    .map(|_| poisson_spikes(epoch.teacher_rates[j], self.dt, &mut self.teacher_rng))
                    .sum();
            }

            // Read.
            exc_sum.fill(0.0);
            inh_sum.fill(0.0);
            for &u in &events {
                let row = &self.synapses[u as usize * n_out..(u as usize + 1) * n_out];
                for (j, syn) in row.iter().enumerate() {
                    let w = syn.weight();
                    if w >= 0.0 {
                        exc_sum[j] += w;
                    } else {
                        inh_sum[j] -= w;
                    }
                }
            }
            out.reads += (events.len() * n_out) as u64;
            for j in 0..n_out {
                self.exc[j] = step_syn(self.exc[j], &self.channel, self.dt, exc_sum[j]);
                self.inh[j] = step_syn(self.inh[j], &self.channel, self.dt, inh_sum[j]);
            }

            // Integrate.
            for j in 0..n_out {
                let i_syn = self.exc[j].i_syn - self.inh[j].i_syn;
                let i_comp = if epoch.learning {
                    learning::compensation(&self.traces[j], &self.learning, t)
                } else {
                    0.0
                };
                let (next, spiked) = step_neuron(self.neurons[j], &self.neuron, 0.0, i_comp, i_syn, self.dt);
                self.neurons[j] = next;
                let mut tr = self.traces[j];
                if spiked {
                    counts[j] += 1;
                    tr = learning::on_post_spike(tr, &self.learning);
                    if record.outputs {
                        out.events.push(SpikeEvent {
                            time: t,
                            source: j as u32,
                            kind: SpikeKind::Output,
                        });
                    }
                }
                for _ in 0..teach[j] {
                    tr = learning::on_teacher_spike(tr, &self.learning);
                }
                if record.teachers && teach[j] > 0 {
                    out.events.extend((0..teach[j]).map(|_| SpikeEvent {
                        time: t,
                        source: j as u32,
                        kind: SpikeKind::Teacher,
                    }));
                }
                self.traces[j] = learning::decay_traces(tr, &self.learning, self.dt);
            }

            // Write.
            if plastic {
                for j in 0..n_out {
                    let i_syn = self.exc[j].i_syn - self.inh[j].i_syn;
                    let q = learning::error_signal(&self.traces[j], &self.learning, i_syn);
                    if q.abs() <= self.learning.alpha {
                        continue;
                    }
                    for &u in &events {
                        let draw = self.gate_rng.random_bool(self.learning.p_bernoulli);
                        let l = learning::gate(q, self.learning.alpha, draw);
                        if l != 0 {
                            let idx = u as usize * n_out + j;
                            self.synapses[idx] =
                                learning::apply_presyn_update(&self.synapses[idx], l, q, &self.model, &mut self.device_rng)?;
                            out.writes += 1;
                        }
                    }
                }
            }

            if record.inputs {
                out.events.extend(events.iter().map(|&u| SpikeEvent {
                    time: t,
                    source: u,
                    kind: SpikeKind::Input,
                }));
            }
            self.buckets[k] = events;
            self.step += 1;
            if let Some(every) = record.snapshot_every {
                if every > 0 && self.step.is_multiple_of(every) {
                    self.snapshot(out);
                }
            }
        }
        out.epoch_counts.push(counts.clone());
        Ok(counts)
    }

    pub fn snapshot(&self, out: &mut SpikeRecord) {
        let t = self.time();
        for (idx, syn) in self.synapses.iter().enumerate() {
            out.weight_snapshots.push(WeightSnapshot {
                time: t,
                input: (idx / self.n_outputs) as u32,
                output: (idx % self.n_outputs) as u32,
                weight: syn.weight(),
            });
        }
    }

    pub fn mode(&self) -> UpdateMode {
        self.model.mode
    }
}

/// Runs every epoch of `config` on a fresh network.
pub fn run(config: &SimConfig) -> Result<SpikeRecord> {
    config.validate()?;
    let mut net = Network::new(&config.model, config.n_inputs, config.n_outputs, config.seed)?;
    let mut rec = SpikeRecord::default();
    if config.record.snapshot_every.is_some() {
        net.snapshot(&mut rec);
    }
    for epoch in &config.epochs {
        net.run_epoch(epoch, &config.record, &mut rec)?;
    }
    if let Some(every) = config.record.snapshot_every {
        if every == 0 || net.step % every != 0 {
            net.snapshot(&mut rec);
        }
    }
    Ok(rec)
}
