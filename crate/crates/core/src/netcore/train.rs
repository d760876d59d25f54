//! Mini-batch training with Nadam, early stopping and best-checkpoint restore.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{accumulate_gradients, Example, LossSpec};
use super::{Nadam, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 10,
            max_epochs: 1000,
            patience: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        Ok(())
    }
}

/// Something with a flat parameter vector and a per-term loss that can be trained.
pub trait Objective {
    type Sample: Sync;

    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]);
    fn term_names(&self) -> Vec<String>;
    fn term_weights(&self) -> Vec<f64>;
    /// Adds the gradient of the weighted mean batch loss into `grads`.
    fn accumulate_gradient(&self, batch: &[&Self::Sample], grads: &mut [f64]) -> Result<()>;
    /// Unweighted per-term MAE over `set`.
    fn term_errors(&self, set: &[Self::Sample]) -> Result<Vec<f64>>;

    fn total(&self, errors: &[f64]) -> f64 {
        self.term_weights()
            .iter()
            .zip(errors)
            .map(|(w, e)| w * e)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub split: String,
    pub term: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub rows: Vec<HistoryRow>,
    pub epochs_run: usize,
    /// Epoch whose parameters were restored (0 means the initial parameters).
    pub best_epoch: usize,
    pub best_val_total: f64,
    pub stopped_early: bool,
}

impl History {
    /// Values of `term` on `split`, in epoch order.
    pub fn series(&self, split: &str, term: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.split == split && r.term == term)
            .map(|r| r.value)
            .collect()
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["epoch", "split", "term", "value"])?;
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                r.split.clone(),
                r.term.clone(),
                format!("{:e}", r.value),
            ])?;
        }
        w.flush().map_err(|e| Error::io(Path::new("<history>"), e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    fn push(&mut self, epoch: usize, split: &str, names: &[String], errors: &[f64], total: f64) {
        for (name, &value) in names.iter().zip(errors) {
            self.rows.push(HistoryRow {
                epoch,
                split: split.into(),
                term: name.clone(),
                value,
            });
        }
        self.rows.push(HistoryRow {
            epoch,
            split: split.into(),
            term: "total".into(),
            value: total,
        });
    }
}

/// Trains `obj` in place and leaves it at the epoch with the lowest validation total.
pub fn train<O: Objective>(
    obj: &mut O,
    train_set: &[O::Sample],
    val_set: &[O::Sample],
    cfg: &TrainConfig,
) -> Result<History> {
    cfg.validate()?;
    let mut history = History {
        best_val_total: f64::INFINITY,
        ..History::default()
    };
    if cfg.max_epochs == 0 {
        return Ok(history);
    }
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    let names = obj.term_names();
    let mut params = obj.params();
    let mut best = params.clone();
    history.best_val_total = obj.total(&obj.term_errors(val_set)?);
    let mut opt = Nadam::new(params.len(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grads = vec![0.0; params.len()];
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&O::Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            grads.iter_mut().for_each(|g| *g = 0.0);
            obj.accumulate_gradient(&batch, &mut grads)?;
            opt.step(&mut params, &grads).map_err(|e| match e {
                Error::NonFinite { detail, .. } => Error::NonFinite { epoch, detail },
                other => other,
            })?;
            obj.set_params(&params);
        }
        let tr = obj.term_errors(train_set)?;
        let va = obj.term_errors(val_set)?;
        let (tr_total, va_total) = (obj.total(&tr), obj.total(&va));
        if !tr_total.is_finite() || !va_total.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("loss became {tr_total} (train) / {va_total} (validation)"),
            });
        }
        history.push(epoch, "train", &names, &tr, tr_total);
        history.push(epoch, "val", &names, &va, va_total);
        history.epochs_run = epoch;
        if va_total < history.best_val_total {
            history.best_val_total = va_total;
            history.best_epoch = epoch;
            best.copy_from_slice(&params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    obj.set_params(&best);
    Ok(history)
}

/// A single network trained on a [`LossSpec`].
#[derive(Debug, Clone)]
pub struct NetObjective {
    pub net: Network,
    pub spec: LossSpec,
}

impl NetObjective {
    pub fn new(net: Network, spec: LossSpec) -> Result<Self> {
        spec.validate(&net)?;
        Ok(Self { net, spec })
    }
}

impl Objective for NetObjective {
    type Sample = Example;

    fn params(&self) -> Vec<f64> {
        self.net.params()
    }

    fn set_params(&mut self, params: &[f64]) {
        self.net.set_params(params);
    }

    fn term_names(&self) -> Vec<String> {
        self.spec.names()
    }

    fn term_weights(&self) -> Vec<f64> {
        self.spec.weights()
    }

    fn accumulate_gradient(&self, batch: &[&Example], grads: &mut [f64]) -> Result<()> {
        accumulate_gradients(&self.net, batch, &self.spec, grads)
    }

    fn term_errors(&self, set: &[Example]) -> Result<Vec<f64>> {
        self.spec.term_errors(&self.net, set)
    }
}

/// Convenience wrapper over [`train`] for a single network.
pub fn train_network(
    net: Network,
    train_set: &[Example],
    val_set: &[Example],
    spec: &LossSpec,
    cfg: &TrainConfig,
) -> Result<(Network, History)> {
    let mut obj = NetObjective::new(net, spec.clone())?;
    let history = train(&mut obj, train_set, val_set, cfg)?;
    Ok((obj.net, history))
}
