//! Thermodynamics-agnostic comparison model.
//!
//! `ann_ζ` predicts `Δζ` from `(ε^{t+Δt}, Δε, σ^t, ζ^t)`; `ann_σ` predicts `Δσ`
//! from `(ε^{t+Δt}, Δε, ζ^{t+Δt}, Δζ)`. Free energy and dissipation are not
//! predicted; [`reconstruct_thermo`] evaluates them afterwards from the material
//! definitions, with `D = χ·ζ̇`, which is free to go negative.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hyperplast::{Material, Sample};
use crate::netcore::{self, mae_sign, Activation, History, Network, Normalization, Objective, TrainConfig};
use crate::tann::{check_dissipation, BundleMetadata};
use crate::trajectory::{Trajectory, TrajectoryPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineArchitecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl BaselineArchitecture {
    /// 1D: 1x6 leaky ReLU per sub-network (72 trainables in total). 3D: two hidden
    /// layers whose width matches the default TANN within 5%.
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self { hidden: vec![6], activation: Activation::leaky_relu() }
        } else {
            let target = crate::tann::TannModel::new(3, &crate::tann::TannArchitecture::default_for(3), 1.0, 0)
                .map(|m| m.trainable_count())
                .unwrap_or(3408);
            Self { hidden: vec![matched_width(3, 2, target); 2], activation: Activation::leaky_relu() }
        }
    }
}

/// Trainable count of one sub-network with `layers` hidden layers of `width`.
fn sub_count(dim: usize, layers: usize, width: usize) -> usize {
    let mut count = 0;
    let mut cols = 4 * dim;
    for _ in 0..layers {
        count += cols * width + width;
        cols = width;
    }
    count + cols * dim
}

/// Hidden width that brings the two-sub-network total closest to `target`.
pub fn matched_width(dim: usize, layers: usize, target: usize) -> usize {
    (1..=512)
        .min_by_key(|&w| (2 * sub_count(dim, layers, w)).abs_diff(target))
        .expect("non-empty range")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub dim: usize,
    pub dt: f64,
    pub ann_zeta: Network,
    pub ann_sigma: Network,
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

impl BaselineModel {
    pub fn new(dim: usize, arch: &BaselineArchitecture, dt: f64, seed: u64) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::Shape(format!("dimension must be 1 or 3, got {dim}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ann_zeta = Network::new(4 * dim, &arch.hidden, arch.activation, dim, &mut rng);
        let ann_sigma = Network::new(4 * dim, &arch.hidden, arch.activation, dim, &mut rng);
        Self::from_parts(ann_zeta, ann_sigma, dt)
    }

    pub fn from_parts(ann_zeta: Network, ann_sigma: Network, dt: f64) -> Result<Self> {
        ann_zeta.validate()?;
        ann_sigma.validate()?;
        let dim = ann_zeta.output_dim;
        if ann_zeta.input_dim != 4 * dim || ann_sigma.input_dim != 4 * dim || ann_sigma.output_dim != dim {
            return Err(Error::Shape(format!(
                "sub-networks {}->{} and {}->{} do not form a baseline model",
                ann_zeta.input_dim, ann_zeta.output_dim, ann_sigma.input_dim, ann_sigma.output_dim
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time increment must be positive, got {dt}")));
        }
        Ok(Self { dim, dt, ann_zeta, ann_sigma })
    }

    pub fn trainable_count(&self) -> usize {
        self.ann_zeta.trainable_count() + self.ann_sigma.trainable_count()
    }

    /// `(Δζ, Δσ)`.
    pub fn forward(
        &self,
        eps_t: &[f64],
        d_eps: &[f64],
        sigma_t: &[f64],
        zeta_t: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        for v in [eps_t, d_eps, sigma_t, zeta_t] {
            if v.len() != self.dim {
                return Err(Error::Shape(format!(
                    "input has {} components, model expects {}",
                    v.len(),
                    self.dim
                )));
            }
        }
        let eps_next: Vec<f64> = eps_t.iter().zip(d_eps).map(|(a, b)| a + b).collect();
        let d_zeta = self.ann_zeta.forward(&concat(&[&eps_next, d_eps, sigma_t, zeta_t]))?;
        let zeta_next: Vec<f64> = zeta_t.iter().zip(&d_zeta).map(|(a, b)| a + b).collect();
        let d_sigma = self.ann_sigma.forward(&concat(&[&eps_next, d_eps, &zeta_next, &d_zeta]))?;
        Ok((d_zeta, d_sigma))
    }

    pub fn fit_normalization(&mut self, set: &[Sample]) {
        let n = self.dim;
        let zin: Vec<Vec<f64>> = set
            .iter()
            .map(|s| concat(&[&s.eps_next(), &s.d_eps, &s.sigma_t, &s.zeta_t]))
            .collect();
        let sin: Vec<Vec<f64>> = set
            .iter()
            .map(|s| concat(&[&s.eps_next(), &s.d_eps, &s.zeta_next(), &s.d_zeta]))
            .collect();
        self.ann_zeta.input_norm = Normalization::fit(4 * n, zin.iter().map(Vec::as_slice));
        self.ann_zeta.output_norm = Normalization::fit(n, set.iter().map(|s| s.d_zeta.as_slice()));
        self.ann_sigma.input_norm = Normalization::fit(4 * n, sin.iter().map(Vec::as_slice));
        self.ann_sigma.output_norm = Normalization::fit(n, set.iter().map(|s| s.d_sigma.as_slice()));
    }

    /// Self-fed prediction; `F` and `D` are filled by [`reconstruct_thermo`] with `m`.
    pub fn recall(
        &self,
        m: &Material,
        eps0: &[f64],
        sigma0: &[f64],
        zeta0: &[f64],
        path: &[Vec<f64>],
    ) -> Result<Trajectory> {
        let mut traj = Trajectory::new(
            "ann",
            TrajectoryPoint {
                eps: eps0.to_vec(),
                sigma: sigma0.to_vec(),
                zeta: zeta0.to_vec(),
                f: 0.0,
                d: 0.0,
            },
        );
        for (step, d_eps) in path.iter().enumerate() {
            let cur = traj.points.last().expect("non-empty");
            let (d_zeta, d_sigma) = self.forward(&cur.eps, d_eps, &cur.sigma, &cur.zeta)?;
            let eps: Vec<f64> = cur.eps.iter().zip(d_eps).map(|(a, b)| a + b).collect();
            let sigma: Vec<f64> = cur.sigma.iter().zip(&d_sigma).map(|(a, b)| a + b).collect();
            let zeta: Vec<f64> = cur.zeta.iter().zip(&d_zeta).map(|(a, b)| a + b).collect();
            if !sigma.iter().chain(&zeta).all(|v| v.is_finite()) {
                traj.diagnostic = Some(format!("non-finite prediction at step {}", step + 1));
                break;
            }
            traj.points.push(TrajectoryPoint { eps, sigma, zeta, f: 0.0, d: 0.0 });
        }
        reconstruct_thermo(m, &mut traj, self.dt);
        Ok(traj)
    }

    pub fn save(&self, dir: impl AsRef<Path>, meta: &BundleMetadata) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.ann_zeta.save(dir.join("ann_zeta.json"))?;
        self.ann_sigma.save(dir.join("ann_sigma.json"))?;
        meta.save(dir)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, BundleMetadata)> {
        let dir = dir.as_ref();
        let meta = BundleMetadata::load(dir)?;
        if meta.kind != "ann" {
            return Err(Error::Config(format!("{} holds a `{}` model, not ann", dir.display(), meta.kind)));
        }
        let model = Self::from_parts(
            Network::load(dir.join("ann_zeta.json"))?,
            Network::load(dir.join("ann_sigma.json"))?,
            meta.dt,
        )?;
        Ok((model, meta))
    }
}

/// Fills `F` and `D` of every point from the material definitions.
///
/// `F = F(ε, ζ)` and, for step `i`, `D = χ(ε_i, ζ_i)·(ζ_i - ζ_{i-1})/Δt`; the first point gets `D = 0`.
pub fn reconstruct_thermo(m: &Material, traj: &mut Trajectory, dt: f64) {
    let mut prev_zeta: Option<Vec<f64>> = None;
    for p in &mut traj.points {
        p.f = m.free_energy(&p.eps, &p.zeta);
        p.d = match &prev_zeta {
            None => 0.0,
            Some(z0) => {
                let chi = m.chi(&p.eps, &p.zeta);
                chi.iter()
                    .zip(p.zeta.iter().zip(z0))
                    .map(|(c, (a, b))| c * (a - b) / dt)
                    .sum()
            }
        };
        prev_zeta = Some(p.zeta.clone());
    }
}

pub const TERM_NAMES: [&str; 2] = ["d_zeta", "d_sigma"];

#[derive(Debug, Clone)]
pub struct BaselineObjective {
    pub model: BaselineModel,
    /// Weights of `(Δζ, Δσ)`.
    pub weights: [f64; 2],
}

impl BaselineObjective {
    fn sample_gradient(&self, s: &Sample, scale: f64, grads: &mut [f64]) -> Result<()> {
        let m = &self.model;
        let n = m.dim;
        let eps_next = s.eps_next();
        let ez = m.ann_zeta.evaluate(&concat(&[&eps_next, &s.d_eps, &s.sigma_t, &s.zeta_t]), false)?;
        let d_zeta = ez.output.clone();
        let zeta_next: Vec<f64> = s.zeta_t.iter().zip(&d_zeta).map(|(a, b)| a + b).collect();
        let es = m.ann_sigma.evaluate(&concat(&[&eps_next, &s.d_eps, &zeta_next, &d_zeta]), false)?;
        let per = scale / n as f64;
        let d_sig: Vec<f64> = (0..n)
            .map(|i| per * self.weights[1] * mae_sign(es.output[i] - s.d_sigma[i]))
            .collect();
        let split = m.ann_zeta.trainable_count();
        let (gz, gs) = grads.split_at_mut(split);
        let d_in = m.ann_sigma.backward(&es, &d_sig, None, gs);
        let adj: Vec<f64> = (0..n)
            .map(|i| {
                per * self.weights[0] * mae_sign(d_zeta[i] - s.d_zeta[i]) + d_in[2 * n + i] + d_in[3 * n + i]
            })
            .collect();
        m.ann_zeta.backward(&ez, &adj, None, gz);
        Ok(())
    }
}

impl Objective for BaselineObjective {
    type Sample = Sample;

    fn params(&self) -> Vec<f64> {
        let mut p = self.model.ann_zeta.params();
        p.extend(self.model.ann_sigma.params());
        p
    }

    fn set_params(&mut self, params: &[f64]) {
        let (a, b) = params.split_at(self.model.ann_zeta.trainable_count());
        self.model.ann_zeta.set_params(a);
        self.model.ann_sigma.set_params(b);
    }

    fn term_names(&self) -> Vec<String> {
        TERM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn term_weights(&self) -> Vec<f64> {
        self.weights.to_vec()
    }

    fn accumulate_gradient(&self, batch: &[&Sample], grads: &mut [f64]) -> Result<()> {
        let scale = 1.0 / batch.len() as f64;
        for s in batch {
            self.sample_gradient(s, scale, grads)?;
        }
        Ok(())
    }

    fn term_errors(&self, set: &[Sample]) -> Result<Vec<f64>> {
        let n = self.model.dim as f64;
        let mut sums = [0.0; 2];
        for s in set {
            let (dz, ds) = self.model.forward(&s.eps_t, &s.d_eps, &s.sigma_t, &s.zeta_t)?;
            sums[0] += dz.iter().zip(&s.d_zeta).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
            sums[1] += ds.iter().zip(&s.d_sigma).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        }
        let count = set.len().max(1) as f64;
        Ok(sums.iter().map(|v| v / count).collect())
    }
}

/// Same optimizer, early stopping and weighting rule as the TANN, on `(Δζ, Δσ)` only.
pub fn train(
    model: &mut BaselineModel,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
) -> Result<(History, [f64; 2])> {
    check_dissipation(train)?;
    cfg.validate()?;
    let w = crate::tann::LossWeights::from_targets(train);
    let weights = [w.d_zeta, w.d_sigma];
    if cfg.max_epochs == 0 {
        return Ok((History::default(), weights));
    }
    let mut obj = BaselineObjective { model: model.clone(), weights };
    obj.model.fit_normalization(train);
    let history = netcore::train(&mut obj, train, val, cfg)?;
    *model = obj.model;
    Ok((history, weights))
}
