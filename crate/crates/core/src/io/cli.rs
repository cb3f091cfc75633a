//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use super::config::Config;
use super::csv::{write_csv, Cell, Table};
use super::manifest::{RunManifest, MANIFEST_FILE};
use crate::circuit::{branch_current_exact, branch_current_linear, normalizer_sweep};
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::learning::UpdateMode;
use crate::tasks::mnist::{self, CvSetting, SIDE};
use crate::tasks::single_pattern;
use crate::variability::{draw_samples, mean_std, summarize, sweep_ratio};

#[derive(Debug, Parser)]
#[command(name = "memsyn", version, about = "Differential memristive synapse simulator")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// TOML config file; missing keys take the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for CSV outputs and the run manifest.
    #[arg(long, global = true, env = "MEMSYN_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,

    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalizer transfer curves and branch currents over a resistance sweep.
    CircuitSweep,
    /// Monte Carlo study of resistance vs. current-difference variability.
    Variability {
        /// Monte Carlo draws.
        #[arg(long)]
        n: Option<usize>,
        /// Device distributions to use instead of the `[device]` block.
        #[arg(long, value_enum)]
        preset: Option<DevicePreset>,
        /// Skip the high/low ratio sweep.
        #[arg(long)]
        no_sweep: bool,
    },
    /// Two-population classification task.
    SinglePattern {
        #[arg(long)]
        n_in: Option<usize>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Number of consecutive seeds.
        #[arg(long)]
        seeds: Option<usize>,
        /// Evaluate the randomly initialized network without training.
        #[arg(long)]
        untrained: bool,
    },
    /// Reduced MNIST classification with n_c synapses per pixel.
    Mnist {
        #[arg(long)]
        n_c: Option<usize>,
        #[arg(long, value_enum)]
        cv: Option<CvArg>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        /// Directory holding the four standard IDX files.
        #[arg(long, env = "MEMSYN_MNIST_DIR", default_value = "data/mnist")]
        mnist_dir: PathBuf,
        /// Training images (overrides --mnist-dir).
        #[arg(long)]
        images: Option<PathBuf>,
        /// Training labels (overrides --mnist-dir).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Test images (overrides --mnist-dir).
        #[arg(long)]
        test_images: Option<PathBuf>,
        /// Test labels (overrides --mnist-dir).
        #[arg(long)]
        test_labels: Option<PathBuf>,
    },
    /// Print the resolved configuration as TOML.
    EmitDefaults,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DevicePreset {
    /// 6 kΩ / 3 kΩ states with 20 % CV.
    Conservative,
    /// 100 kΩ / 10 kΩ states with 20 % CV.
    Typical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Binary,
    HighRes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CvArg {
    High,
    Low,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
    };
    pool.install(|| execute(cli.command, cfg, &cli.out_dir, cli.config.as_deref()))
}

struct Run<'a> {
    dir: &'a Path,
    outputs: Vec<String>,
}

impl Run<'_> {
    fn csv(&mut self, name: String, table: &Table) -> Result<()> {
        write_csv(table, &self.dir.join(&name))?;
        self.outputs.push(name);
        Ok(())
    }
}

fn execute(command: Command, mut cfg: Config, out_dir: &Path, config_path: Option<&Path>) -> Result<()> {
    if let Command::EmitDefaults = command {
        cfg.validate()?;
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let start = Instant::now();
    let mut inputs: Vec<String> = config_path.iter().map(|p| p.display().to_string()).collect();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut run = Run {
        dir: out_dir,
        outputs: Vec::new(),
    };

    let (name, seeds) = match command {
        Command::EmitDefaults => unreachable!(),
        Command::CircuitSweep => {
            cfg.validate()?;
            circuit_sweep(&cfg, &mut run)?;
            ("circuit-sweep", vec![])
        }
        Command::Variability { n, preset, no_sweep } => {
            if let Some(n) = n {
                cfg.variability.n = n;
            }
            match preset {
                Some(DevicePreset::Conservative) => cfg.device = DeviceParams::conservative(),
                Some(DevicePreset::Typical) => cfg.device = DeviceParams::typical(),
                None => {}
            }
            if no_sweep {
                cfg.variability.sweep = false;
            }
            cfg.validate()?;
            variability(&cfg, &mut run)?;
            ("variability", vec![cfg.seed])
        }
        Command::SinglePattern {
            n_in,
            n_train,
            mode,
            seeds,
            untrained,
        } => {
            let sec = &mut cfg.single_pattern;
            if let Some(n) = n_in {
                sec.task.n_in = n;
            }
            if let Some(n) = n_train {
                sec.task.n_train = n;
            }
            if let Some(m) = mode {
                sec.learning.mode = match m {
                    ModeArg::Binary => UpdateMode::Binary,
                    ModeArg::HighRes => UpdateMode::HighRes,
                };
            }
            if let Some(s) = seeds {
                sec.seeds = s;
            }
            if untrained {
                sec.train = false;
            }
            cfg.validate()?;
            let seeds = cfg.seed_list(cfg.single_pattern.seeds);
            single_pattern_task(&cfg, &seeds, &mut run)?;
            ("single-pattern", seeds)
        }
        Command::Mnist {
            n_c,
            cv,
            seeds,
            n_train,
            n_test,
            mnist_dir,
            images,
            labels,
            test_images,
            test_labels,
        } => {
            let sec = &mut cfg.mnist;
            if let Some(n) = n_c {
                sec.task.n_c = n;
            }
            if let Some(c) = cv {
                sec.task.cv = match c {
                    CvArg::High => CvSetting::High,
                    CvArg::Low => CvSetting::Low,
                };
            }
            if let Some(s) = seeds {
                sec.seeds = s;
            }
            if let Some(n) = n_train {
                sec.task.n_train = n;
            }
            if let Some(n) = n_test {
                sec.task.n_test = n;
            }
            cfg.validate()?;
            let [d_img, d_lab, d_timg, d_tlab] = mnist::default_paths(&mnist_dir);
            let paths = [
                images.unwrap_or(d_img),
                labels.unwrap_or(d_lab),
                test_images.unwrap_or(d_timg),
                test_labels.unwrap_or(d_tlab),
            ];
            inputs.extend(paths.iter().map(|p| p.display().to_string()));
            let seeds = cfg.seed_list(cfg.mnist.seeds);
            mnist_task(&cfg, &paths, &seeds, &mut run)?;
            ("mnist", seeds)
        }
    };

    let mut outputs = run.outputs;
    outputs.push(MANIFEST_FILE.to_owned());
    RunManifest {
        subcommand: name.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seeds,
        config: cfg,
        inputs,
        outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    }
    .write(out_dir)
}

fn circuit_sweep(cfg: &Config, run: &mut Run) -> Result<()> {
    let s = &cfg.circuit_sweep;
    let points = normalizer_sweep(&cfg.circuit, &s.headrooms, s.r_min, s.r_max, s.points)?;
    let mut t = Table::new(["r_pos", "r_neg", "v_s", "i_pos", "i_neg"]);
    for p in &points {
        t.push(vec![p.r_pos.into(), p.r_neg.into(), p.v_s.into(), p.i_pos.into(), p.i_neg.into()]);
    }
    run.csv("normalizer_sweep.csv".into(), &t)?;

    let mut t = Table::new(["r", "v_s", "i_exact", "i_linear"]);
    for &h in &s.headrooms {
        let p = cfg.circuit.with_v_s(cfg.circuit.v_rd - h);
        for k in 0..s.points {
            let r = s.r_min + (s.r_max - s.r_min) * k as f64 / (s.points - 1) as f64;
            let exact = branch_current_exact(r, &p)?;
            t.push(vec![r.into(), p.v_s.into(), exact.into(), branch_current_linear(r, &p).into()]);
        }
    }
    run.csv("branch_currents.csv".into(), &t)
}

fn variability(cfg: &Config, run: &mut Run) -> Result<()> {
    let v = &cfg.variability;
    let samples = draw_samples(&cfg.device, &cfg.circuit, v.n, cfg.seed)?;
    let mut t = Table::new(["r_high", "r_low", "delta_r", "i_pos", "i_neg", "delta_i"]);
    for s in &samples {
        t.push(vec![
            s.r_high.into(),
            s.r_low.into(),
            s.resistance_diff().into(),
            s.i_pos.into(),
            s.i_neg.into(),
            s.current_diff().into(),
        ]);
    }
    run.csv("variability_samples.csv".into(), &t)?;

    let rep = summarize(&samples)?;
    let mut t = Table::new(["quantity", "mean", "std", "cv", "n"]);
    t.push(vec![
        "delta_r".into(),
        rep.mean_resistance_diff.into(),
        rep.std_resistance_diff.into(),
        rep.cv_resistance_diff.into(),
        rep.n_samples.into(),
    ]);
    t.push(vec![
        "delta_i".into(),
        rep.mean_current_diff.into(),
        rep.std_current_diff.into(),
        rep.cv_current_diff.into(),
        rep.n_samples.into(),
    ]);
    run.csv("variability_summary.csv".into(), &t)?;

    if v.sweep {
        let mut t = Table::new(["state_cv", "ratio", "cv_delta_r", "cv_delta_i"]);
        for &cv in &v.state_cvs {
            for p in sweep_ratio(cv, &v.ratios, v.low_mean, &cfg.circuit, v.sweep_n, cfg.seed)? {
                t.push(vec![
                    p.state_cv.into(),
                    p.ratio.into(),
                    p.cv_resistance_diff.into(),
                    p.cv_current_diff.into(),
                ]);
            }
        }
        run.csv("variability_sweep.csv".into(), &t)?;
    }
    Ok(())
}

fn predicted_cell(p: Option<usize>) -> Cell {
    p.map_or(Cell::Text(String::new()), Cell::from)
}

/// Per-seed rows followed by `mean` and `std` rows over seeds.
fn summary_rows(t: &mut Table, per_seed: &[(u64, Vec<f64>)]) -> Result<()> {
    for (seed, vals) in per_seed {
        let mut row = vec![Cell::from(*seed)];
        row.extend(vals.iter().map(|&v| Cell::from(v)));
        t.push(row);
    }
    let cols = per_seed.first().map_or(0, |(_, v)| v.len());
    let stats: Vec<(f64, f64)> = (0..cols)
        .map(|c| {
            let xs: Vec<f64> = per_seed.iter().map(|(_, v)| v[c]).collect();
            if xs.len() < 2 {
                Ok((xs.first().copied().unwrap_or(0.0), 0.0))
            } else {
                mean_std(&xs)
            }
        })
        .collect::<Result<_>>()?;
    if !per_seed.is_empty() {
        let mut mean = vec![Cell::from("mean")];
        mean.extend(stats.iter().map(|s| Cell::from(s.0)));
        t.push(mean);
        let mut std = vec![Cell::from("std")];
        std.extend(stats.iter().map(|s| Cell::from(s.1)));
        t.push(std);
    }
    Ok(())
}

fn single_pattern_task(cfg: &Config, seeds: &[u64], run: &mut Run) -> Result<()> {
    let sec = &cfg.single_pattern;
    let outcomes = single_pattern::run_seeds(&sec.task, &cfg.single_pattern_model(), seeds, sec.train)?;

    let mut grid = Table::new(["seed", "x1", "x2", "rate_a", "rate_b"]);
    let mut report = Table::new(["seed", "pattern", "true_label", "predicted", "rate_a", "rate_b"]);
    let mut per_seed = Vec::new();
    for o in &outcomes {
        for g in &o.grid {
            grid.push(vec![o.seed.into(), g.x1.into(), g.x2.into(), g.rate_a.into(), g.rate_b.into()]);
        }
        for (k, p) in o.report.patterns.iter().enumerate() {
            report.push(vec![
                o.seed.into(),
                k.into(),
                p.true_label.into(),
                predicted_cell(p.predicted),
                p.rates[0].into(),
                p.rates[1].into(),
            ]);
        }
        per_seed.push((
            o.seed,
            vec![o.report.error_rate, o.accuracy(sec.task.strong_contrast)],
        ));
    }
    let mut summary = Table::new(["seed", "error_rate", "strong_contrast_accuracy"]);
    summary_rows(&mut summary, &per_seed)?;
    run.csv("single_pattern_grid.csv".into(), &grid)?;
    run.csv("single_pattern_report.csv".into(), &report)?;
    run.csv("single_pattern_summary.csv".into(), &summary)
}

fn mnist_task(cfg: &Config, paths: &[PathBuf; 4], seeds: &[u64], run: &mut Run) -> Result<()> {
    let task = &cfg.mnist.task;
    let max_label = (task.n_classes - 1) as u8;
    let train = mnist::load_mnist(&paths[0], &paths[1])?.filter_classes(max_label);
    let test = mnist::load_mnist(&paths[2], &paths[3])?.filter_classes(max_label);
    let outcomes = mnist::run_seeds(task, &cfg.mnist_model(), &train, &test, seeds)?;

    let mut header = vec!["seed".to_owned(), "pattern".into(), "true_label".into(), "predicted".into()];
    header.extend((0..task.n_classes).map(|c| format!("rate_{c}")));
    let mut report = Table::new(header);
    let mut per_seed = Vec::new();
    for o in &outcomes {
        let seed = o.report.seed;
        for (k, p) in o.report.patterns.iter().enumerate() {
            let mut row = vec![seed.into(), k.into(), p.true_label.into(), predicted_cell(p.predicted)];
            row.extend(p.rates.iter().map(|&r| Cell::from(r)));
            report.push(row);
        }
        per_seed.push((seed, vec![o.report.error_rate]));
    }
    let mut summary = Table::new(["seed", "error_rate"]);
    summary_rows(&mut summary, &per_seed)?;
    run.csv("mnist_report.csv".into(), &report)?;
    run.csv("mnist_summary.csv".into(), &summary)?;

    for o in &outcomes {
        for (c, img) in o.weight_images.iter().enumerate() {
            let mut t = Table::new((0..SIDE).map(|x| format!("c{x}")));
            for row in img.chunks_exact(SIDE) {
                t.push(row.iter().map(|&w| Cell::from(w)).collect());
            }
            run.csv(format!("weights_seed{}_class{c}.csv", o.report.seed), &t)?;
        }
    }
    Ok(())
}
