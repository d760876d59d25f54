//! Thermodynamics-based network: a sub-network for the internal-variable
//! increment and a sub-network for the free energy, with stress and dissipation
//! obtained by differentiating the latter.
//!
//! One call of [`TannModel::forward`]:
//!
//! 1. `ε^{t+Δt} = ε^t + Δε`
//! 2. `Δζ = snn_ζ(ε^{t+Δt}, Δε, σ^t, ζ^t)`
//! 3. `ζ̇ = Δζ/Δt`, `ζ^{t+Δt} = ζ^t + Δζ`
//! 4. `F = snn_F(ε^{t+Δt}, ζ^{t+Δt})`
//! 5. `D = -∂F/∂ζ · ζ̇`
//! 6. `σ^{t+Δt} = ∂F/∂ε`, `Δσ = σ^{t+Δt} - σ^t`

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hyperplast::Sample;
use crate::netcore::{self, mae_sign, Activation, History, Network, Normalization, Objective, TrainConfig};
use crate::trajectory::{Trajectory, TrajectoryPoint};
use crate::{Error, Result};

pub use crate::trajectory::{consistency_check, ConsistencyReport};

/// Hidden layout of both sub-networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TannArchitecture {
    pub zeta_hidden: Vec<usize>,
    pub zeta_activation: Activation,
    pub f_hidden: Vec<usize>,
    pub f_activation: Activation,
}

impl TannArchitecture {
    /// 1D: 1x6 leaky ReLU and 1x9 ELU_z2 (72 trainables). 3D: 2x48 leaky ReLU and 1x36 ELU_z2.
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self {
                zeta_hidden: vec![6],
                zeta_activation: Activation::leaky_relu(),
                f_hidden: vec![9],
                f_activation: Activation::EluZ2,
            }
        } else {
            Self {
                zeta_hidden: vec![48, 48],
                zeta_activation: Activation::leaky_relu(),
                f_hidden: vec![36],
                f_activation: Activation::EluZ2,
            }
        }
    }
}

/// Per-term loss weights for `(Δζ, F, Δσ, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub d_zeta: f64,
    pub f: f64,
    pub d_sigma: f64,
    pub d: f64,
}

fn inverse_mean_abs(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v.abs();
        n += 1;
    }
    let mean = if n == 0 { 0.0 } else { sum / n as f64 };
    if mean > 0.0 && mean.is_finite() {
        1.0 / mean
    } else {
        1.0
    }
}

impl LossWeights {
    /// `1 / mean|target|` per term over `set` (1 where the mean vanishes).
    pub fn from_targets(set: &[Sample]) -> Self {
        Self {
            d_zeta: inverse_mean_abs(set.iter().flat_map(|s| s.d_zeta.iter().copied())),
            f: inverse_mean_abs(set.iter().map(|s| s.f_next)),
            d_sigma: inverse_mean_abs(set.iter().flat_map(|s| s.d_sigma.iter().copied())),
            d: inverse_mean_abs(set.iter().map(|s| s.d_next)),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.d_zeta, self.f, self.d_sigma, self.d]
    }
}

pub const TERM_NAMES: [&str; 4] = ["d_zeta", "F", "d_sigma", "D"];

#[derive(Debug, Clone, PartialEq)]
pub struct TannOutput {
    pub d_zeta: Vec<f64>,
    pub f_next: f64,
    pub d_sigma: Vec<f64>,
    pub d_next: f64,
    pub sigma_next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TannModel {
    pub dim: usize,
    pub dt: f64,
    pub snn_zeta: Network,
    pub snn_f: Network,
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

impl TannModel {
    pub fn new(dim: usize, arch: &TannArchitecture, dt: f64, seed: u64) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::Shape(format!("dimension must be 1 or 3, got {dim}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snn_zeta = Network::new(4 * dim, &arch.zeta_hidden, arch.zeta_activation, dim, &mut rng);
        let snn_f = Network::new(2 * dim, &arch.f_hidden, arch.f_activation, 1, &mut rng);
        Self::from_parts(snn_zeta, snn_f, dt)
    }

    pub fn from_parts(snn_zeta: Network, snn_f: Network, dt: f64) -> Result<Self> {
        snn_zeta.validate()?;
        snn_f.validate()?;
        let dim = snn_zeta.output_dim;
        if snn_zeta.input_dim != 4 * dim || snn_f.input_dim != 2 * dim || snn_f.output_dim != 1 {
            return Err(Error::Shape(format!(
                "sub-networks {}->{} and {}->{} do not form a TANN",
                snn_zeta.input_dim, snn_zeta.output_dim, snn_f.input_dim, snn_f.output_dim
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time increment must be positive, got {dt}")));
        }
        Ok(Self { dim, dt, snn_zeta, snn_f })
    }

    pub fn trainable_count(&self) -> usize {
        self.snn_zeta.trainable_count() + self.snn_f.trainable_count()
    }

    fn check(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Shape(format!(
                "{what} has {} components, model expects {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn forward(
        &self,
        eps_t: &[f64],
        d_eps: &[f64],
        sigma_t: &[f64],
        zeta_t: &[f64],
    ) -> Result<TannOutput> {
        for (v, what) in [(eps_t, "eps_t"), (d_eps, "d_eps"), (sigma_t, "sigma_t"), (zeta_t, "zeta_t")] {
            self.check(v, what)?;
        }
        let n = self.dim;
        let eps_next: Vec<f64> = eps_t.iter().zip(d_eps).map(|(a, b)| a + b).collect();
        let d_zeta = self.snn_zeta.forward(&concat(&[&eps_next, d_eps, sigma_t, zeta_t]))?;
        let zeta_next: Vec<f64> = zeta_t.iter().zip(&d_zeta).map(|(a, b)| a + b).collect();
        let ev = self.snn_f.evaluate(&concat(&[&eps_next, &zeta_next]), true)?;
        let jac = ev.jacobian.expect("jacobian requested");
        let sigma_next = jac[..n].to_vec();
        let d_next = -jac[n..]
            .iter()
            .zip(&d_zeta)
            .map(|(g, dz)| g * dz / self.dt)
            .sum::<f64>();
        Ok(TannOutput {
            d_sigma: sigma_next.iter().zip(sigma_t).map(|(a, b)| a - b).collect(),
            d_zeta,
            f_next: ev.output[0],
            d_next,
            sigma_next,
        })
    }

    /// Z-score statistics of both sub-networks' inputs and outputs over `set`.
    pub fn fit_normalization(&mut self, set: &[Sample]) {
        let zin: Vec<Vec<f64>> = set
            .iter()
            .map(|s| concat(&[&s.eps_next(), &s.d_eps, &s.sigma_t, &s.zeta_t]))
            .collect();
        let fin: Vec<Vec<f64>> = set.iter().map(|s| concat(&[&s.eps_next(), &s.zeta_next()])).collect();
        let n = self.dim;
        self.snn_zeta.input_norm = Normalization::fit(4 * n, zin.iter().map(Vec::as_slice));
        self.snn_zeta.output_norm = Normalization::fit(n, set.iter().map(|s| s.d_zeta.as_slice()));
        self.snn_f.input_norm = Normalization::fit(2 * n, fin.iter().map(Vec::as_slice));
        let f: Vec<[f64; 1]> = set.iter().map(|s| [s.f_next]).collect();
        self.snn_f.output_norm = Normalization::fit(1, f.iter().map(|v| v.as_slice()));
    }

    /// Self-fed prediction along `path`, starting from `(ε, σ, ζ)`.
    ///
    /// A non-finite prediction ends the trajectory early and is recorded in its diagnostic.
    pub fn recall(
        &self,
        eps0: &[f64],
        sigma0: &[f64],
        zeta0: &[f64],
        path: &[Vec<f64>],
    ) -> Result<Trajectory> {
        self.check(eps0, "eps0")?;
        self.check(sigma0, "sigma0")?;
        self.check(zeta0, "zeta0")?;
        let f0 = self.snn_f.forward(&concat(&[eps0, zeta0]))?[0];
        let mut traj = Trajectory::new(
            "tann",
            TrajectoryPoint {
                eps: eps0.to_vec(),
                sigma: sigma0.to_vec(),
                zeta: zeta0.to_vec(),
                f: f0,
                d: 0.0,
            },
        );
        for (step, d_eps) in path.iter().enumerate() {
            self.check(d_eps, "increment")?;
            let cur = traj.points.last().expect("non-empty");
            let out = self.forward(&cur.eps, d_eps, &cur.sigma, &cur.zeta)?;
            let eps: Vec<f64> = cur.eps.iter().zip(d_eps).map(|(a, b)| a + b).collect();
            let zeta: Vec<f64> = cur.zeta.iter().zip(&out.d_zeta).map(|(a, b)| a + b).collect();
            let finite = out
                .sigma_next
                .iter()
                .chain(&zeta)
                .chain([&out.f_next, &out.d_next])
                .all(|v| v.is_finite());
            if !finite {
                traj.diagnostic = Some(format!("non-finite prediction at step {}", step + 1));
                break;
            }
            let via_increment: Vec<f64> = cur.sigma.iter().zip(&out.d_sigma).map(|(a, b)| a + b).collect();
            let direct = self.snn_f.input_jacobian(&concat(&[&eps, &zeta]))?;
            let gap = via_increment
                .iter()
                .zip(&direct[..self.dim])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            traj.sigma_route_gap.push(gap);
            traj.points.push(TrajectoryPoint {
                eps,
                sigma: out.sigma_next,
                zeta,
                f: out.f_next,
                d: out.d_next,
            });
        }
        Ok(traj)
    }

    pub fn save(&self, dir: impl AsRef<Path>, meta: &BundleMetadata) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.snn_zeta.save(dir.join("snn_zeta.json"))?;
        self.snn_f.save(dir.join("snn_f.json"))?;
        meta.save(dir)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, BundleMetadata)> {
        let dir = dir.as_ref();
        let meta = BundleMetadata::load(dir)?;
        if meta.kind != "tann" {
            return Err(Error::Config(format!("{} holds a `{}` model, not tann", dir.display(), meta.kind)));
        }
        let model = Self::from_parts(
            Network::load(dir.join("snn_zeta.json"))?,
            Network::load(dir.join("snn_f.json"))?,
            meta.dt,
        )?;
        Ok((model, meta))
    }
}

/// Side information stored next to the network files of a model bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub kind: String,
    pub material: String,
    pub dim: usize,
    pub dt: f64,
    pub init_seed: u64,
    pub train_seed: u64,
    pub trainable_parameters: usize,
    pub loss_weights: Vec<f64>,
    pub term_names: Vec<String>,
    /// Which samples the normalization statistics came from.
    pub normalization: String,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Largest dissipation target of the training split, W/m³.
    #[serde(default)]
    pub max_target_d: f64,
}

impl BundleMetadata {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("metadata.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("metadata.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Fails on the first record with negative target dissipation.
pub fn check_dissipation(set: &[Sample]) -> Result<()> {
    match set.iter().position(|s| s.d_next < 0.0 || s.d_next.is_nan()) {
        Some(index) => Err(Error::InconsistentTrainingSet { index, value: set[index].d_next }),
        None => Ok(()),
    }
}

/// Training objective coupling both sub-networks through steps 1 to 6.
#[derive(Debug, Clone)]
pub struct TannObjective {
    pub model: TannModel,
    pub weights: LossWeights,
}

impl TannObjective {
    fn split_at(&self) -> usize {
        self.model.snn_zeta.trainable_count()
    }

    fn residuals(&self, s: &Sample) -> Result<(TannOutput, [f64; 4])> {
        let out = self.model.forward(&s.eps_t, &s.d_eps, &s.sigma_t, &s.zeta_t)?;
        let n = self.model.dim as f64;
        let mae = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n;
        let e = [
            mae(&out.d_zeta, &s.d_zeta),
            (out.f_next - s.f_next).abs(),
            mae(&out.d_sigma, &s.d_sigma),
            (out.d_next - s.d_next).abs(),
        ];
        Ok((out, e))
    }

    fn sample_gradient(&self, s: &Sample, scale: f64, grads: &mut [f64]) -> Result<()> {
        let m = &self.model;
        let n = m.dim;
        let w = self.weights;
        let eps_next = s.eps_next();
        let ez = m.snn_zeta.evaluate(&concat(&[&eps_next, &s.d_eps, &s.sigma_t, &s.zeta_t]), false)?;
        let d_zeta = ez.output.clone();
        let zeta_next: Vec<f64> = s.zeta_t.iter().zip(&d_zeta).map(|(a, b)| a + b).collect();
        let ef = m.snn_f.evaluate(&concat(&[&eps_next, &zeta_next]), true)?;
        let jac = ef.jacobian.as_ref().expect("jacobian requested");
        let d_pred = -jac[n..].iter().zip(&d_zeta).map(|(g, dz)| g * dz / m.dt).sum::<f64>();

        let per = scale / n as f64;
        let a_d = scale * w.d * mae_sign(d_pred - s.d_next);
        let mut d_jac = vec![0.0; 2 * n];
        let mut adj_dz = vec![0.0; n];
        for i in 0..n {
            let r_sigma = jac[i] - s.sigma_t[i] - s.d_sigma[i];
            d_jac[i] = per * w.d_sigma * mae_sign(r_sigma);
            d_jac[n + i] = -a_d * d_zeta[i] / m.dt;
            adj_dz[i] = per * w.d_zeta * mae_sign(d_zeta[i] - s.d_zeta[i]) - a_d * jac[n + i] / m.dt;
        }
        let d_f = [scale * w.f * mae_sign(ef.output[0] - s.f_next)];
        let split = self.split_at();
        let (gz, gf) = grads.split_at_mut(split);
        let d_in = m.snn_f.backward(&ef, &d_f, Some(&d_jac), gf);
        for i in 0..n {
            adj_dz[i] += d_in[n + i];
        }
        m.snn_zeta.backward(&ez, &adj_dz, None, gz);
        Ok(())
    }
}

impl Objective for TannObjective {
    type Sample = Sample;

    fn params(&self) -> Vec<f64> {
        let mut p = self.model.snn_zeta.params();
        p.extend(self.model.snn_f.params());
        p
    }

    fn set_params(&mut self, params: &[f64]) {
        let (a, b) = params.split_at(self.split_at());
        self.model.snn_zeta.set_params(a);
        self.model.snn_f.set_params(b);
    }

    fn term_names(&self) -> Vec<String> {
        TERM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn term_weights(&self) -> Vec<f64> {
        self.weights.as_array().to_vec()
    }

    fn accumulate_gradient(&self, batch: &[&Sample], grads: &mut [f64]) -> Result<()> {
        let scale = 1.0 / batch.len() as f64;
        for s in batch {
            self.sample_gradient(s, scale, grads)?;
        }
        Ok(())
    }

    fn term_errors(&self, set: &[Sample]) -> Result<Vec<f64>> {
        let mut sums = [0.0; 4];
        for s in set {
            let (_, e) = self.residuals(s)?;
            for (a, b) in sums.iter_mut().zip(e) {
                *a += b;
            }
        }
        let n = set.len().max(1) as f64;
        Ok(sums.iter().map(|v| v / n).collect())
    }
}

/// Fits normalization on `train`, then trains both sub-networks jointly.
///
/// Rejects sets containing negative dissipation targets before touching the model.
/// A zero-epoch budget returns the model unchanged.
pub fn train(
    model: &mut TannModel,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
    weights: Option<LossWeights>,
) -> Result<(History, LossWeights)> {
    check_dissipation(train)?;
    check_dissipation(val).map_err(|e| match e {
        Error::InconsistentTrainingSet { index, value } => {
            Error::InconsistentTrainingSet { index: train.len() + index, value }
        }
        other => other,
    })?;
    for s in train.iter().chain(val) {
        if s.eps_t.len() != model.dim {
            return Err(Error::Shape(format!(
                "sample has {} components, model expects {}",
                s.eps_t.len(),
                model.dim
            )));
        }
    }
    cfg.validate()?;
    let weights = weights.unwrap_or_else(|| LossWeights::from_targets(train));
    if cfg.max_epochs == 0 {
        return Ok((History::default(), weights));
    }
    let mut obj = TannObjective { model: model.clone(), weights };
    obj.model.fit_normalization(train);
    let history = netcore::train(&mut obj, train, val, cfg)?;
    *model = obj.model;
    Ok((history, weights))
}

/// Per-term test MAE of a trained model.
pub fn evaluate(model: &TannModel, set: &[Sample], weights: LossWeights) -> Result<Vec<f64>> {
    TannObjective { model: model.clone(), weights }.term_errors(set)
}
