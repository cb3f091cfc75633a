//! Memristive devices modeled as stochastic two-state resistors.
//!
//! A device is programmed into either its high- or low-resistance state; the
//! resistance it lands on is a fresh draw from that state's distribution, which
//! is how cycle-to-cycle variability enters the model.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::serde_si;

/// Gaussian resistance distribution truncated below at `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDistribution {
    #[serde(with = "serde_si::ohm")]
    pub mean: f64,
    #[serde(with = "serde_si::ohm")]
    pub std_dev: f64,
    #[serde(with = "serde_si::ohm", default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    100.0
}

impl StateDistribution {
    pub fn new(mean: f64, std_dev: f64) -> Self {
        StateDistribution {
            mean,
            std_dev,
            floor: default_floor(),
        }
    }

    /// Distribution with standard deviation `cv * mean`.
    pub fn with_cv(mean: f64, cv: f64) -> Self {
        Self::new(mean, cv * mean)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean > 0.0 && self.mean.is_finite()) {
            return Err(Error::invalid(format!("state mean must be positive, got {}", self.mean)));
        }
        if !(self.std_dev >= 0.0 && self.std_dev.is_finite()) {
            return Err(Error::invalid(format!("state std_dev must be non-negative, got {}", self.std_dev)));
        }
        if !(self.floor > 0.0) {
            return Err(Error::invalid(format!("state floor must be positive, got {}", self.floor)));
        }
        // Resampling below the floor only terminates if the bulk of the mass is above it.
        if self.floor >= self.mean {
            return Err(Error::invalid(format!(
                "state floor {} must lie below the mean {}",
                self.floor, self.mean
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DeviceState {
        sample_state(self, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub high_state: StateDistribution,
    pub low_state: StateDistribution,
}

impl DeviceParams {
    /// HfO2-like figures with a small high/low ratio: (6 kΩ, 1.2 kΩ) and (3 kΩ, 600 Ω).
    pub fn conservative() -> Self {
        DeviceParams {
            high_state: StateDistribution::new(6e3, 1.2e3),
            low_state: StateDistribution::new(3e3, 600.0),
        }
    }

    /// 100 kΩ / 10 kΩ states with 20 % per-state CV.
    pub fn typical() -> Self {
        Self::from_ratio(10e3, 10.0, 0.2)
    }

    /// Low state at `low_mean`, high state at `ratio * low_mean`, both with CV `state_cv`.
    pub fn from_ratio(low_mean: f64, ratio: f64, state_cv: f64) -> Self {
        DeviceParams {
            high_state: StateDistribution::with_cv(ratio * low_mean, state_cv),
            low_state: StateDistribution::with_cv(low_mean, state_cv),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.high_state.validate()?;
        self.low_state.validate()?;
        if self.high_state.mean <= self.low_state.mean {
            return Err(Error::invalid(format!(
                "high-state mean {} must exceed low-state mean {}",
                self.high_state.mean, self.low_state.mean
            )));
        }
        Ok(())
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::conservative()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub resistance: f64,
}

impl DeviceState {
    pub fn new(resistance: f64) -> Self {
        DeviceState { resistance }
    }

    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance
    }
}

/// Differential device pair: `d_pos` feeds the positive branch, `d_neg` the negative one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynapsePair {
    pub d_pos: DeviceState,
    pub d_neg: DeviceState,
}

impl SynapsePair {
    pub fn new(r_pos: f64, r_neg: f64) -> Self {
        SynapsePair {
            d_pos: DeviceState::new(r_pos),
            d_neg: DeviceState::new(r_neg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

/// Draws a resistance from `dist`, resampling until the draw is at or above the floor.
pub fn sample_state<R: Rng + ?Sized>(dist: &StateDistribution, rng: &mut R) -> DeviceState {
    if dist.std_dev == 0.0 {
        return DeviceState::new(dist.mean.max(dist.floor));
    }
    let normal = Normal::new(dist.mean, dist.std_dev).expect("validated distribution");
    loop {
        let r = normal.sample(rng);
        if r >= dist.floor {
            return DeviceState::new(r);
        }
    }
}

/// Push-pull reprogramming: both devices are redrawn from their target states.
///
/// `Increase` puts `d_pos` in the low-resistance (high-conductance) state and
/// `d_neg` in the high-resistance state; `Decrease` does the opposite. The
/// previous pair has no influence on the result.
pub fn program_pair<R: Rng + ?Sized>(
    _pair: &SynapsePair,
    direction: Direction,
    params: &DeviceParams,
    rng: &mut R,
) -> SynapsePair {
    let (pos, neg) = match direction {
        Direction::Increase => (&params.low_state, &params.high_state),
        Direction::Decrease => (&params.high_state, &params.low_state),
    };
    let d_pos = sample_state(pos, rng);
    let d_neg = sample_state(neg, rng);
    SynapsePair { d_pos, d_neg }
}
