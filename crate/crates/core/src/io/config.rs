//! Layered experiment configuration: built-in defaults, then a TOML file, then
//! command-line overrides.
//!
//! Dimensioned fields accept SI strings (`i_b = "20nA"`) or bare numbers in
//! base units. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitParams;
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::learning::LearningParams;
use crate::network::ModelParams;
use crate::neuron::{NeuronParams, SynChannelParams};
use crate::tasks::mnist::{self, MnistConfig};
use crate::tasks::single_pattern::{self, SinglePatternConfig};
use crate::units::serde_si;
use crate::variability::DEFAULT_LOW_MEAN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed. Multi-seed runs use `seed, seed + 1, ...`.
    pub seed: u64,
    pub simulation: SimulationSection,
    pub circuit: CircuitParams,
    pub device: DeviceParams,
    pub neuron: NeuronParams,
    pub variability: VariabilitySection,
    pub circuit_sweep: CircuitSweepSection,
    pub single_pattern: SinglePatternSection,
    pub mnist: MnistSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            simulation: SimulationSection::default(),
            circuit: CircuitParams::default(),
            device: DeviceParams::default(),
            neuron: NeuronParams::default(),
            variability: VariabilitySection::default(),
            circuit_sweep: CircuitSweepSection::default(),
            single_pattern: SinglePatternSection::default(),
            mnist: MnistSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(with = "serde_si::second")]
    pub dt: f64,
    /// Teacher units per output neuron.
    pub teacher_size: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let m = ModelParams::default();
        SimulationSection {
            dt: m.dt,
            teacher_size: m.teacher_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariabilitySection {
    /// Monte Carlo draws for the main study.
    pub n: usize,
    /// Also run the ratio sweep.
    pub sweep: bool,
    pub state_cvs: Vec<f64>,
    pub ratios: Vec<f64>,
    #[serde(with = "serde_si::ohm")]
    pub low_mean: f64,
    /// Draws per sweep point.
    pub sweep_n: usize,
}

impl Default for VariabilitySection {
    fn default() -> Self {
        VariabilitySection {
            n: 10_000,
            sweep: true,
            state_cvs: vec![0.2, 0.3, 0.4],
            ratios: vec![1.5, 2.0, 3.0, 5.0, 7.0, 10.0],
            low_mean: DEFAULT_LOW_MEAN,
            sweep_n: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSweepSection {
    /// Values of `v_rd - v_s`.
    pub headrooms: Vec<f64>,
    #[serde(with = "serde_si::ohm")]
    pub r_min: f64,
    #[serde(with = "serde_si::ohm")]
    pub r_max: f64,
    pub points: usize,
}

impl Default for CircuitSweepSection {
    fn default() -> Self {
        CircuitSweepSection {
            headrooms: vec![0.8, 0.9, 1.0],
            r_min: 1e3,
            r_max: 20e3,
            points: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinglePatternSection {
    pub seeds: usize,
    /// `false` evaluates the randomly initialized network.
    pub train: bool,
    pub task: SinglePatternConfig,
    /// When absent, `i_w = 1 nA / n_in`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synapse: Option<SynChannelParams>,
    pub learning: LearningParams,
}

impl Default for SinglePatternSection {
    fn default() -> Self {
        SinglePatternSection {
            seeds: 5,
            train: true,
            task: SinglePatternConfig::default(),
            synapse: None,
            learning: LearningParams::single_pattern(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistSection {
    pub seeds: usize,
    /// The task's `cv` setting overrides `[device]`.
    pub task: MnistConfig,
    pub synapse: SynChannelParams,
    pub learning: LearningParams,
}

impl Default for MnistSection {
    fn default() -> Self {
        let task = MnistConfig::default();
        let m = mnist::default_model(&task);
        MnistSection {
            seeds: 3,
            task,
            synapse: m.synapse,
            learning: m.learning,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.single_pattern_model().validate()?;
        self.mnist_model().validate()?;
        self.single_pattern.task.validate()?;
        self.mnist.task.validate()?;
        if self.variability.n < 100 {
            return Err(Error::Config("variability.n must be at least 100".into()));
        }
        if self.variability.sweep && self.variability.sweep_n < 100 {
            return Err(Error::Config("variability.sweep_n must be at least 100".into()));
        }
        if self.variability.ratios.iter().any(|&r| !(r > 1.0)) {
            return Err(Error::Config("variability.ratios must all exceed 1".into()));
        }
        if self.variability.state_cvs.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::Config("variability.state_cvs must be non-negative".into()));
        }
        let s = &self.circuit_sweep;
        if !(s.r_min > 0.0 && s.r_max > s.r_min) || s.points < 2 {
            return Err(Error::Config(
                "circuit_sweep needs 0 < r_min < r_max and at least 2 points".into(),
            ));
        }
        if s.headrooms.iter().any(|&h| !(h > 0.0 && h < self.circuit.v_rd)) {
            return Err(Error::Config("circuit_sweep.headrooms must lie in (0, v_rd)".into()));
        }
        Ok(())
    }

    fn model(&self, synapse: SynChannelParams, learning: LearningParams) -> ModelParams {
        ModelParams {
            dt: self.simulation.dt,
            teacher_size: self.simulation.teacher_size,
            neuron: self.neuron,
            synapse,
            learning,
            device: self.device,
            circuit: self.circuit,
        }
    }

    pub fn single_pattern_model(&self) -> ModelParams {
        let sec = &self.single_pattern;
        let synapse = sec
            .synapse
            .unwrap_or_else(|| single_pattern::default_model(&sec.task).synapse);
        let mut m = self.model(synapse, sec.learning);
        m.learning.t_stop = sec.task.training_duration();
        m
    }

    pub fn mnist_model(&self) -> ModelParams {
        let sec = &self.mnist;
        let mut m = self.model(sec.synapse, sec.learning);
        m.learning.t_stop = sec.task.training_duration();
        m.device = sec.task.cv.devices();
        m
    }

    /// `seeds` consecutive seeds starting at the master seed.
    pub fn seed_list(&self, seeds: usize) -> Vec<u64> {
        (0..seeds as u64).map(|k| self.seed.wrapping_add(k)).collect()
    }
}
