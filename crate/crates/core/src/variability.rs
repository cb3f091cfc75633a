//! Monte Carlo studies of how the normalizer compresses device variability.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{read_synapse, CircuitParams};
use crate::device::{program_pair, DeviceParams, Direction, SynapsePair};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Samples per Monte Carlo chunk; each chunk owns one substream, so the result
/// does not depend on how chunks are scheduled across threads.
const CHUNK: usize = 1024;

/// Coefficient of variation with the `n - 1` standard deviation.
pub fn cv(samples: &[f64]) -> Result<f64> {
    let (mean, std) = mean_std(samples)?;
    if mean == 0.0 {
        return Err(Error::Degenerate("coefficient of variation of zero-mean samples".into()));
    }
    Ok(std / mean.abs())
}

/// Sample mean and `n - 1` standard deviation (0 for a single sample).
pub fn mean_std(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    let n = samples.len() as f64;
    // Shift by the first sample so that identical samples give exactly zero spread.
    let x0 = samples[0];
    let shift = samples.iter().map(|x| x - x0).sum::<f64>() / n;
    let mean = x0 + shift;
    if samples.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = samples.iter().map(|x| (x - x0 - shift).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariabilityReport {
    pub cv_resistance_diff: f64,
    pub cv_current_diff: f64,
    pub mean_current_diff: f64,
    pub std_current_diff: f64,
    pub mean_resistance_diff: f64,
    pub std_resistance_diff: f64,
    pub n_samples: usize,
}

/// One Monte Carlo draw: a pair programmed to `Increase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariabilitySample {
    pub r_high: f64,
    pub r_low: f64,
    pub i_pos: f64,
    pub i_neg: f64,
}

impl VariabilitySample {
    pub fn resistance_diff(&self) -> f64 {
        self.r_high - self.r_low
    }

    pub fn current_diff(&self) -> f64 {
        self.i_pos - self.i_neg
    }
}

/// Draws `n` independent pairs with `D_pos` in the low-resistance state and reads them.
pub fn draw_samples(
    device: &DeviceParams,
    circuit: &CircuitParams,
    n: usize,
    seed: u64,
) -> Result<Vec<VariabilitySample>> {
    device.validate()?;
    circuit.validate()?;
    let chunks: Vec<Result<Vec<VariabilitySample>>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Stream::Monte, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            let blank = SynapsePair::new(1.0, 1.0);
            (0..len)
                .map(|_| {
                    let pair = program_pair(&blank, Direction::Increase, device, &mut rng);
                    let out = read_synapse(&pair, circuit)?;
                    Ok(VariabilitySample {
                        r_high: pair.d_neg.resistance,
                        r_low: pair.d_pos.resistance,
                        i_pos: out.i_pos,
                        i_neg: out.i_neg,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

pub fn summarize(samples: &[VariabilitySample]) -> Result<VariabilityReport> {
    let dr: Vec<f64> = samples.iter().map(VariabilitySample::resistance_diff).collect();
    let di: Vec<f64> = samples.iter().map(VariabilitySample::current_diff).collect();
    let (mean_r, std_r) = mean_std(&dr)?;
    let (mean_i, std_i) = mean_std(&di)?;
    let ratio = |std: f64, mean: f64| {
        if std == 0.0 {
            Ok(0.0)
        } else if mean == 0.0 {
            Err(Error::Degenerate("zero-mean difference".into()))
        } else {
            Ok(std / mean.abs())
        }
    };
    Ok(VariabilityReport {
        cv_resistance_diff: ratio(std_r, mean_r)?,
        cv_current_diff: ratio(std_i, mean_i)?,
        mean_current_diff: mean_i,
        std_current_diff: std_i,
        mean_resistance_diff: mean_r,
        std_resistance_diff: std_r,
        n_samples: samples.len(),
    })
}

pub fn run_study(
    device: &DeviceParams,
    circuit: &CircuitParams,
    n: usize,
    seed: u64,
) -> Result<VariabilityReport> {
    if n < 100 {
        return Err(Error::invalid(format!("variability study needs n >= 100, got {n}")));
    }
    summarize(&draw_samples(device, circuit, n, seed)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub state_cv: f64,
    pub ratio: f64,
    pub cv_resistance_diff: f64,
    pub cv_current_diff: f64,
}

pub const DEFAULT_LOW_MEAN: f64 = 3e3;

/// Runs [`run_study`] for each high/low mean ratio with the low mean fixed.
pub fn sweep_ratio(
    state_cv: f64,
    ratios: &[f64],
    low_mean: f64,
    circuit: &CircuitParams,
    n: usize,
    seed: u64,
) -> Result<Vec<RatioPoint>> {
    ratios
        .iter()
        .map(|&ratio| {
            if !(ratio > 1.0) {
                return Err(Error::invalid(format!("ratio must exceed 1, got {ratio}")));
            }
            let device = DeviceParams::from_ratio(low_mean, ratio, state_cv);
            let rep = run_study(&device, circuit, n, seed)?;
            Ok(RatioPoint {
                state_cv,
                ratio,
                cv_resistance_diff: rep.cv_resistance_diff,
                cv_current_diff: rep.cv_current_diff,
            })
        })
        .collect()
}
