//! Behavioral simulator for a differential memristive synapse.
//!
//! The crate is organized bottom-up:
//!
//! * [`device`] – stochastic two-state memristive devices and push-pull programming.
//! * [`circuit`] – sub-threshold read path and Gilbert normalizer.
//! * [`variability`] – Monte Carlo studies of device-to-device variability.
//! * [`neuron`] – adaptive exponential integrate-and-fire neuron and DPI synapse filters.
//! * [`learning`] – teacher/output traces, error evaluation and the synaptic update rule.
//! * [`network`] – the clocked simulation engine with Poisson inputs.
//! * [`tasks`] – the single-pattern and reduced-MNIST experiments.
//! * [`io`] – configuration, CSV output, run manifests and the command-line front end.

// `!(x > 0.0)` also rejects NaN, which is the point of these checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod device;
pub mod error;
pub mod io;
pub mod learning;
pub mod network;
pub mod neuron;
pub mod rng;
pub mod tasks;
pub mod units;
pub mod variability;

pub use error::{Error, Result};
