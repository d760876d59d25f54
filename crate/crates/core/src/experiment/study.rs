//! Activation study on the 1D target `O = x²`, `∇O = 2x`.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::netcore::{
    train_network, Activation, Example, LossSpec, LossTerm, Network, Selector, TrainConfig,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Empty means the full study set.
    pub activations: Vec<Activation>,
    pub hidden: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            activations: Vec::new(),
            hidden: 6,
            n_train: 1000,
            n_val: 500,
            n_test: 500,
            learning_rate: 1e-5,
            batch_size: 1,
            max_epochs: 2000,
            patience: 200,
        }
    }
}

impl StudyConfig {
    pub fn activations(&self) -> Vec<Activation> {
        if self.activations.is_empty() {
            Activation::STUDY_SET.to_vec()
        } else {
            self.activations.clone()
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Config("study sizes must be positive".into()));
        }
        self.train_config(0).validate()
    }
}

/// Test-set outcome for one activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub activation: Activation,
    /// `loss_o + loss_grad`.
    pub loss: f64,
    pub loss_o: f64,
    pub loss_grad: f64,
    pub epochs: usize,
    pub best_epoch: usize,
}

pub fn study_loss() -> LossSpec {
    LossSpec::new(vec![
        LossTerm { name: "O".into(), selectors: vec![Selector::Output(0)], weight: 1.0 },
        LossTerm {
            name: "grad_O".into(),
            selectors: vec![Selector::Jacobian { output: 0, input: 0 }],
            weight: 1.0,
        },
    ])
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..=1.0);
            Example { input: vec![x], targets: vec![x * x, 2.0 * x] }
        })
        .collect()
}

/// Train/validation/test sets drawn uniformly in `[-1, 1]` from one seeded stream.
pub fn study_sets(cfg: &StudyConfig, seed: u64) -> [Vec<Example>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = draw(&mut rng, cfg.n_train);
    let val = draw(&mut rng, cfg.n_val);
    let test = draw(&mut rng, cfg.n_test);
    [train, val, test]
}

/// Every activation starts from the same seeded draw of weights.
pub fn run_study(cfg: &StudyConfig, seed: u64) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let [train, val, test] = study_sets(cfg, seed);
    let spec = study_loss();
    let tc = cfg.train_config(seed);
    cfg.activations()
        .into_par_iter()
        .map(|act| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Network::new(1, &[cfg.hidden], act, 1, &mut rng);
            let (net, hist) = train_network(net, &train, &val, &spec, &tc)?;
            let errs = spec.term_errors(&net, &test)?;
            Ok(StudyRow {
                activation: act,
                loss: errs[0] + errs[1],
                loss_o: errs[0],
                loss_grad: errs[1],
                epochs: hist.epochs_run,
                best_epoch: hist.best_epoch,
            })
        })
        .collect()
}

pub fn write_study_csv(rows: &[StudyRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["activation", "L", "L_O", "L_grad_O", "epochs", "best_epoch"])?;
    for r in rows {
        w.write_record([
            r.activation.to_string(),
            format!("{:e}", r.loss),
            format!("{:e}", r.loss_o),
            format!("{:e}", r.loss_grad),
            r.epochs.to_string(),
            r.best_epoch.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<study>"), e))?;
    Ok(())
}
