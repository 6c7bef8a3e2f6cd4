//! End-to-end training and evaluation runs with CSV metrics.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::config::ArchitectureConfig;
use crate::data::Split;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::train::{evaluate, train_epoch, AdamState, EpochMetrics, Sample};

pub const METRICS_HEADER: &str = "epoch,split,loss,accuracy,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsSplit {
    Train,
    Test,
}

impl fmt::Display for MetricsSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricsSplit::Train => "train",
            MetricsSplit::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub split: MetricsSplit,
    pub loss: f64,
    pub accuracy: f64,
    pub seconds: f64,
}

impl MetricsRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.10},{:.6},{:.3}",
            self.epoch, self.split, self.loss, self.accuracy, self.seconds
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    /// Record elapsed seconds; otherwise the column is 0 so reruns are byte-identical.
    pub wall_clock: bool,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub history: Vec<MetricsRecord>,
    pub params: Vec<f64>,
    pub best_params: Vec<f64>,
    pub best_epoch: usize,
    pub best_test_accuracy: f64,
    pub skipped: usize,
}

impl RunResult {
    pub fn last(&self, split: MetricsSplit) -> Option<&MetricsRecord> {
        self.history.iter().rev().find(|r| r.split == split)
    }
}

/// Loads and prepares a dataset split for `config`.
pub fn load_samples(config: &ArchitectureConfig, split: Split) -> Result<Vec<Sample>> {
    let ds = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Dataset("config has no dataset section".into()))?;
    ds.load(split)?
        .into_iter()
        .map(|s| {
            Ok(Sample {
                x: config.prepare(&s.image)?,
                label: s.label,
            })
        })
        .collect()
}

struct Outputs {
    csv: std::fs::File,
    csv_path: PathBuf,
    checkpoint: PathBuf,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("metrics.csv");
        let mut csv = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        writeln!(csv, "{METRICS_HEADER}").map_err(|e| Error::io(&csv_path, e))?;
        Ok(Outputs {
            csv,
            csv_path,
            checkpoint: dir.join("checkpoint.json"),
        })
    }

    fn row(&mut self, r: &MetricsRecord) -> Result<()> {
        writeln!(self.csv, "{}", r.csv_line()).map_err(|e| Error::io(&self.csv_path, e))
    }
}

/// Trains from a seeded initialization, evaluating on `test` after every epoch.
///
/// With an output directory, `metrics.csv` gains two rows per epoch and
/// `checkpoint.json` holds the parameters with the best test accuracy so far
/// (the initial parameters before the first epoch).
pub fn train_run(
    config: &ArchitectureConfig,
    train: &[Sample],
    test: &[Sample],
    opts: &RunOptions,
    mut on_record: impl FnMut(&MetricsRecord),
) -> Result<RunResult> {
    let model = config.build_model()?;
    let digest = config.digest(&model);
    let seed = opts.seed.unwrap_or(config.train.seed);
    let epochs = opts.epochs.unwrap_or(config.train.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = model.init_params(&mut rng);
    let mut adam = AdamState::new(model.n_params(), config.train.adam());

    let mut out = opts.out_dir.as_deref().map(Outputs::create).transpose()?;
    if let Some(o) = &out {
        Checkpoint::new(digest.clone(), 0, params.clone()).save(&o.checkpoint)?;
    }

    let start = Instant::now();
    let mut result = RunResult {
        history: Vec::new(),
        params: params.clone(),
        best_params: params.clone(),
        best_epoch: 0,
        best_test_accuracy: f64::NEG_INFINITY,
        skipped: 0,
    };
    for epoch in 1..=epochs {
        let tr = train_epoch(&model, train, config.train.batch_size, &mut params, &mut adam, &mut rng)?;
        let te = evaluate(&model, test, &params)?;
        result.skipped += tr.skipped;
        let seconds = if opts.wall_clock {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        for (split, m) in [(MetricsSplit::Train, tr), (MetricsSplit::Test, te)] {
            let rec = record(epoch, split, &m, seconds);
            if let Some(o) = out.as_mut() {
                o.row(&rec)?;
            }
            on_record(&rec);
            result.history.push(rec);
        }
        if te.accuracy > result.best_test_accuracy {
            result.best_test_accuracy = te.accuracy;
            result.best_epoch = epoch;
            result.best_params = params.clone();
            if let Some(o) = &out {
                Checkpoint::new(digest.clone(), epoch, params.clone()).save(&o.checkpoint)?;
            }
        }
    }
    result.params = params;
    Ok(result)
}

fn record(epoch: usize, split: MetricsSplit, m: &EpochMetrics, seconds: f64) -> MetricsRecord {
    MetricsRecord {
        epoch,
        split,
        loss: m.loss,
        accuracy: m.accuracy,
        seconds,
    }
}

/// Evaluates checkpointed parameters after checking they match `model`.
pub fn eval_checkpoint(
    config: &ArchitectureConfig,
    model: &Model,
    checkpoint: &Checkpoint,
    data: &[Sample],
) -> Result<EpochMetrics> {
    let params = checkpoint.params_for(&config.digest(model), model.n_params())?;
    evaluate(model, data, params)
}
