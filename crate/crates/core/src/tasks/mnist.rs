//! Reduced MNIST: digits 0-4 on 24x24 pixels, `n_c` input units per pixel.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::learning::LearningParams;
use crate::network::{Epoch, ModelParams, Network, RecordOptions, SpikeRecord};
use crate::rng::{stream, Stream};
use crate::units::serde_si;

use super::{argmax_unique, ClassificationReport, PatternResult};

pub const RAW_SIDE: usize = 28;
pub const SIDE: usize = 24;
pub const PIXELS: usize = SIDE * SIDE;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images as 28x28 intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Keeps only the samples with `label <= max_label`.
    pub fn filter_classes(self, max_label: u8) -> Self {
        let (images, labels) = self
            .images
            .into_iter()
            .zip(self.labels)
            .filter(|(_, l)| *l <= max_label)
            .unzip();
        Dataset { images, labels }
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<Vec<f64>>> {
    let magic = be_u32(bytes, 0).ok_or_else(|| format_err(path, "truncated header"))?;
    if magic != IMAGE_MAGIC {
        return Err(format_err(path, format!("bad image magic {magic:#010x}")));
    }
    let header = |at| be_u32(bytes, at).ok_or_else(|| format_err(path, "truncated header"));
    let (n, rows, cols) = (header(4)? as usize, header(8)? as usize, header(12)? as usize);
    if rows != RAW_SIDE || cols != RAW_SIDE {
        return Err(format_err(path, format!("expected 28x28 images, got {rows}x{cols}")));
    }
    let body = &bytes[16..];
    if body.len() != n * rows * cols {
        return Err(format_err(
            path,
            format!("{n} images declared but {} pixel bytes present", body.len()),
        ));
    }
    Ok(body
        .chunks_exact(rows * cols)
        .map(|img| img.iter().map(|&b| b as f64 / 255.0).collect())
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0).ok_or_else(|| format_err(path, "truncated header"))?;
    if magic != LABEL_MAGIC {
        return Err(format_err(path, format!("bad label magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4).ok_or_else(|| format_err(path, "truncated header"))? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(format_err(path, format!("{n} labels declared but {} present", body.len())));
    }
    if let Some(l) = body.iter().find(|&&l| l > 9) {
        return Err(format_err(path, format!("label {l} out of range")));
    }
    Ok(body.to_vec())
}

/// Loads an IDX image/label file pair.
pub fn load_mnist(images: &Path, labels: &Path) -> Result<Dataset> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    let images_v = parse_idx_images(&read(images)?, images)?;
    let labels_v = parse_idx_labels(&read(labels)?, labels)?;
    if images_v.len() != labels_v.len() {
        return Err(format_err(
            labels,
            format!("{} labels for {} images", labels_v.len(), images_v.len()),
        ));
    }
    Ok(Dataset {
        images: images_v,
        labels: labels_v,
    })
}

/// Center crop of a 28x28 image to 24x24.
pub fn scale_24(image: &[f64]) -> Vec<f64> {
    assert_eq!(image.len(), RAW_SIDE * RAW_SIDE, "expected a 28x28 image");
    let border = (RAW_SIDE - SIDE) / 2;
    (border..border + SIDE)
        .flat_map(|r| image[r * RAW_SIDE + border..r * RAW_SIDE + border + SIDE].iter().copied())
        .collect()
}

/// Device spread used for the binary synapses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvSetting {
    /// 6 kΩ / 3 kΩ states with 20 % CV.
    High,
    /// 100 kΩ / 10 kΩ states with 20 % CV.
    Low,
}

impl CvSetting {
    pub fn devices(self) -> DeviceParams {
        match self {
            CvSetting::High => DeviceParams::conservative(),
            CvSetting::Low => DeviceParams::typical(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistConfig {
    /// Input units (and synapses) per pixel.
    pub n_c: usize,
    pub n_train: usize,
    #[serde(with = "serde_si::second")]
    pub train_dwell: f64,
    pub n_test: usize,
    #[serde(with = "serde_si::second")]
    pub test_dwell: f64,
    /// Digits `0..n_classes` are used.
    pub n_classes: usize,
    /// Rate of a unit whose pixel has intensity 1.
    #[serde(with = "serde_si::hertz")]
    pub max_rate: f64,
    /// Rate of each teacher unit of the true class.
    #[serde(with = "serde_si::hertz")]
    pub teacher_rate: f64,
    pub cv: CvSetting,
}

impl Default for MnistConfig {
    fn default() -> Self {
        MnistConfig {
            n_c: 8,
            n_train: 1000,
            train_dwell: 0.1,
            n_test: 200,
            test_dwell: 0.1,
            n_classes: 5,
            max_rate: 100.0,
            teacher_rate: 100.0,
            cv: CvSetting::Low,
        }
    }
}

impl MnistConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 {
            return Err(Error::invalid("mnist.n_c must be at least 1"));
        }
        if !(1..=10).contains(&self.n_classes) {
            return Err(Error::invalid("mnist.n_classes must lie in 1..=10"));
        }
        if !(self.train_dwell > 0.0 && self.test_dwell > 0.0) {
            return Err(Error::invalid("mnist dwell times must be positive"));
        }
        if self.max_rate < 0.0 || self.teacher_rate < 0.0 {
            return Err(Error::invalid("mnist rates must be non-negative"));
        }
        Ok(())
    }

    pub fn training_duration(&self) -> f64 {
        self.n_train as f64 * self.train_dwell
    }

    fn input_rates(&self, image: &[f64]) -> Vec<f64> {
        scale_24(image)
            .iter()
            .flat_map(|z| std::iter::repeat_n(z * self.max_rate, self.n_c))
            .collect()
    }
}

/// Model defaults for this task.
pub fn default_model(cfg: &MnistConfig) -> ModelParams {
    let mut m = ModelParams::default();
    m.synapse.i_w = 16e-12;
    m.learning = LearningParams::mnist();
    m.learning.t_stop = cfg.training_duration();
    m.device = cfg.cv.devices();
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MnistOutcome {
    pub report: ClassificationReport,
    /// Per-class 24x24 weight images.
    pub weight_images: Vec<Vec<f64>>,
    pub record: SpikeRecord,
}

/// Per-pixel sum of the `n_c` weights of one output neuron.
pub fn export_weight_image(weights: &[f64], n_c: usize) -> Vec<f64> {
    assert_eq!(weights.len(), PIXELS * n_c, "weight vector does not match 24x24 x n_c");
    weights.chunks_exact(n_c).map(|c| c.iter().sum()).collect()
}

/// Trains on `n_train` digits drawn from `train` and evaluates on `n_test`
/// digits drawn from `test`. Both sets must already be filtered to the used classes.
pub fn run_mnist(
    cfg: &MnistConfig,
    model: &ModelParams,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
) -> Result<MnistOutcome> {
    cfg.validate()?;
    if cfg.n_train > train.len() || cfg.n_test > test.len() {
        return Err(Error::invalid(format!(
            "need {} training and {} test digits, have {} and {}",
            cfg.n_train,
            cfg.n_test,
            train.len(),
            test.len()
        )));
    }
    if let Some(l) = train.labels.iter().chain(&test.labels).find(|&&l| l as usize >= cfg.n_classes) {
        return Err(Error::invalid(format!("label {l} outside the {} used classes", cfg.n_classes)));
    }
    let mut params = *model;
    params.learning.t_stop = cfg.training_duration();
    let n_out = cfg.n_classes;
    let mut net = Network::new(&params, PIXELS * cfg.n_c, n_out, seed)?;
    let mut record = SpikeRecord::default();
    let opts = RecordOptions::default();

    let mut data_rng = stream(seed, Stream::Data, 0);
    let train_idx = sample(&mut data_rng, train.len(), cfg.n_train);
    let test_idx = sample(&mut data_rng, test.len(), cfg.n_test);

    for i in train_idx.iter() {
        let mut teacher = vec![0.0; n_out];
        teacher[train.labels[i] as usize] = cfg.teacher_rate;
        let epoch = Epoch {
            duration: cfg.train_dwell,
            input_rates: cfg.input_rates(&train.images[i]),
            teacher_rates: teacher,
            learning: true,
        };
        net.run_epoch(&epoch, &opts, &mut record)?;
    }

    net.set_learning(params.learning.disabled());
    let mut patterns = Vec::with_capacity(cfg.n_test);
    for i in test_idx.iter() {
        net.reset_dynamics();
        let epoch = Epoch {
            duration: cfg.test_dwell,
            input_rates: cfg.input_rates(&test.images[i]),
            teacher_rates: vec![0.0; n_out],
            learning: false,
        };
        let counts = net.run_epoch(&epoch, &opts, &mut record)?;
        let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / cfg.test_dwell).collect();
        patterns.push(PatternResult {
            true_label: test.labels[i] as usize,
            predicted: argmax_unique(&rates),
            rates,
        });
    }

    let weight_images = (0..n_out)
        .map(|j| export_weight_image(&net.weights_onto(j), cfg.n_c))
        .collect();
    Ok(MnistOutcome {
        report: ClassificationReport::new(seed, patterns),
        weight_images,
        record,
    })
}

pub fn run_seeds(
    cfg: &MnistConfig,
    model: &ModelParams,
    train: &Dataset,
    test: &Dataset,
    seeds: &[u64],
) -> Result<Vec<MnistOutcome>> {
    seeds
        .par_iter()
        .map(|&s| run_mnist(cfg, model, train, test, s))
        .collect()
}

/// Standard file names inside an MNIST directory.
pub fn default_paths(dir: &Path) -> [PathBuf; 4] {
    [
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    ]
}
