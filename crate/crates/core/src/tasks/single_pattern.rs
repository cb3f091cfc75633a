//! Two neurons learn which of two input populations fires faster.
//!
//! Neuron `a` should win whenever population 1 fires faster than population 2.
//! A pattern is described by two levels `x1, x2` in `[0, 1]`; the rate of each
//! unit of population `i` is `(x_i * rate_scale + rate_offset) / n_in`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Epoch, ModelParams, Network, RecordOptions, SpikeRecord};
use crate::rng::{stream, Stream};
use crate::units::serde_si;

use super::{argmax_unique, ClassificationReport, PatternResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinglePatternConfig {
    /// Units (and synapses per output neuron) in each input population.
    pub n_in: usize,
    pub n_train: usize,
    #[serde(with = "serde_si::second")]
    pub train_dwell: f64,
    #[serde(with = "serde_si::second")]
    pub eval_dwell: f64,
    /// Evaluation levels per axis, evenly spaced over `[0, 1]`.
    pub grid_points: usize,
    #[serde(with = "serde_si::hertz")]
    pub rate_scale: f64,
    #[serde(with = "serde_si::hertz")]
    pub rate_offset: f64,
    /// Aggregate teacher rate onto the target neuron.
    #[serde(with = "serde_si::hertz")]
    pub teacher_rate: f64,
    /// Grid points with `|x1 - x2|` at least this large count as strongly contrasted.
    pub strong_contrast: f64,
}

impl Default for SinglePatternConfig {
    fn default() -> Self {
        SinglePatternConfig {
            n_in: 40,
            n_train: 300,
            train_dwell: 0.1,
            eval_dwell: 0.5,
            grid_points: 11,
            rate_scale: 50e3,
            rate_offset: 5e3,
            teacher_rate: 50e3,
            strong_contrast: 0.5,
        }
    }
}

impl SinglePatternConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 {
            return Err(Error::invalid("single_pattern.n_in must be at least 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("single_pattern.grid_points must be at least 2"));
        }
        if !(self.train_dwell > 0.0 && self.eval_dwell > 0.0) {
            return Err(Error::invalid("single_pattern dwell times must be positive"));
        }
        if self.rate_scale < 0.0 || self.rate_offset < 0.0 || self.teacher_rate < 0.0 {
            return Err(Error::invalid("single_pattern rates must be non-negative"));
        }
        Ok(())
    }

    pub fn training_duration(&self) -> f64 {
        self.n_train as f64 * self.train_dwell
    }

    fn unit_rate(&self, x: f64) -> f64 {
        (x * self.rate_scale + self.rate_offset) / self.n_in as f64
    }

    fn input_rates(&self, x1: f64, x2: f64) -> Vec<f64> {
        let mut rates = vec![self.unit_rate(x1); self.n_in];
        rates.resize(2 * self.n_in, self.unit_rate(x2));
        rates
    }
}

/// Output rates for one evaluation grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    pub rate_a: f64,
    pub rate_b: f64,
}

impl GridPoint {
    /// 1 if the neuron matching the faster population fired more, 0.5 on a tie.
    pub fn score(&self) -> Option<f64> {
        if self.x1 == self.x2 {
            return None;
        }
        let diff = self.rate_a - self.rate_b;
        Some(if diff == 0.0 {
            0.5
        } else if (diff > 0.0) == (self.x1 > self.x2) {
            1.0
        } else {
            0.0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinglePatternOutcome {
    pub seed: u64,
    pub grid: Vec<GridPoint>,
    /// Grid points with `x1 != x2`, labelled by the faster population.
    pub report: ClassificationReport,
    pub record: SpikeRecord,
}

impl SinglePatternOutcome {
    /// Mean score over grid points with `|x1 - x2| >= min_contrast` (`x1 != x2`).
    pub fn accuracy(&self, min_contrast: f64) -> f64 {
        let scores: Vec<f64> = self
            .grid
            .iter()
            .filter(|g| (g.x1 - g.x2).abs() >= min_contrast)
            .filter_map(GridPoint::score)
            .collect();
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Trains (unless `train` is false) and evaluates one network.
pub fn run_single_pattern(
    cfg: &SinglePatternConfig,
    model: &ModelParams,
    seed: u64,
    train: bool,
) -> Result<SinglePatternOutcome> {
    cfg.validate()?;
    let mut params = *model;
    params.learning.t_stop = if train { cfg.training_duration() } else { 0.0 };
    let mut net = Network::new(&params, 2 * cfg.n_in, 2, seed)?;
    let mut record = SpikeRecord::default();
    let opts = RecordOptions::default();

    if train {
        let mut trial_rng = stream(seed, Stream::Trial, 0);
        let teacher_unit = cfg.teacher_rate / model.teacher_size.max(1) as f64;
        for _ in 0..cfg.n_train {
            let target_a = trial_rng.random_bool(0.5);
            let hi: f64 = trial_rng.random_range(0.5..=1.0);
            let lo: f64 = trial_rng.random_range(0.0..0.5);
            let (x1, x2) = if target_a { (hi, lo) } else { (lo, hi) };
            let teacher = if target_a {
                vec![teacher_unit, 0.0]
            } else {
                vec![0.0, teacher_unit]
            };
            let epoch = Epoch {
                duration: cfg.train_dwell,
                input_rates: cfg.input_rates(x1, x2),
                teacher_rates: teacher,
                learning: true,
            };
            net.run_epoch(&epoch, &opts, &mut record)?;
        }
    }

    net.set_learning(params.learning.disabled());
    let levels: Vec<f64> = (0..cfg.grid_points)
        .map(|k| k as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let mut grid = Vec::with_capacity(levels.len() * levels.len());
    let mut patterns = Vec::new();
    for &x1 in &levels {
        for &x2 in &levels {
            net.reset_dynamics();
            let epoch = Epoch {
                duration: cfg.eval_dwell,
                input_rates: cfg.input_rates(x1, x2),
                teacher_rates: vec![0.0, 0.0],
                learning: false,
            };
            let counts = net.run_epoch(&epoch, &opts, &mut record)?;
            let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / cfg.eval_dwell).collect();
            grid.push(GridPoint {
                x1,
                x2,
                rate_a: rates[0],
                rate_b: rates[1],
            });
            if x1 != x2 {
                patterns.push(PatternResult {
                    true_label: if x1 > x2 { 0 } else { 1 },
                    predicted: argmax_unique(&rates),
                    rates,
                });
            }
        }
    }
    Ok(SinglePatternOutcome {
        seed,
        grid,
        report: ClassificationReport::new(seed, patterns),
        record,
    })
}

/// Runs several seeds in parallel; results are in seed order.
pub fn run_seeds(
    cfg: &SinglePatternConfig,
    model: &ModelParams,
    seeds: &[u64],
    train: bool,
) -> Result<Vec<SinglePatternOutcome>> {
    seeds
        .par_iter()
        .map(|&s| run_single_pattern(cfg, model, s, train))
        .collect()
}

/// Model defaults for this task: synaptic bias `1 nA / n_in` and the
/// single-pattern learning constants.
pub fn default_model(cfg: &SinglePatternConfig) -> ModelParams {
    let mut m = ModelParams::default();
    m.synapse.i_w = 1e-9 / cfg.n_in as f64;
    m.learning = crate::learning::LearningParams::single_pattern();
    m.learning.t_stop = cfg.training_duration();
    m
}
