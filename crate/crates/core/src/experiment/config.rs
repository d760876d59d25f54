//! TOML experiment configuration. One file drives one experiment; every section
//! is optional and falls back to material-dependent defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::study::StudyConfig;
use crate::baseline::BaselineArchitecture;
use crate::hyperplast::{GenConfig, Material, PathKind, PathSpec};
use crate::netcore::TrainConfig;
use crate::tann::TannArchitecture;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub material: MaterialSection,
    pub generate: GenerateSection,
    pub train: TrainSection,
    pub recall: RecallSection,
    pub study: StudyConfig,
    pub compare: CompareSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { id: "run".into(), seed: 0, out_dir: None }
    }
}

/// A named case such as `case = "1D-2"`, or explicit constants tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialSection {
    Case { case: String },
    Custom(Material),
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection::Case { case: "1D-1".into() }
    }
}

impl MaterialSection {
    pub fn material(&self) -> Result<Material> {
        let m = match self {
            MaterialSection::Case { case } => Material::case(case)?,
            MaterialSection::Custom(m) => *m,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> String {
        match self {
            MaterialSection::Case { case } => case.clone(),
            MaterialSection::Custom(_) => "custom".into(),
        }
    }
}

/// Overrides on top of the material defaults of [`GenConfig::for_material`].
/// The seed always comes from the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_deps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub on_yield_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_draws: Option<usize>,
}

impl GenerateSection {
    pub fn resolve(&self, m: &Material, seed: u64) -> GenConfig {
        let d = GenConfig::for_material(m);
        GenConfig {
            n_samples: self.n_samples.unwrap_or(d.n_samples),
            std_sigma: self.std_sigma.unwrap_or(d.std_sigma),
            std_x: self.std_x.unwrap_or(d.std_x),
            std_eps: self.std_eps.unwrap_or(d.std_eps),
            std_zeta: self.std_zeta.unwrap_or(d.std_zeta),
            std_deps: self.std_deps.unwrap_or(d.std_deps),
            dt: self.dt.unwrap_or(d.dt),
            seed,
            on_yield_fraction: self.on_yield_fraction.unwrap_or(d.on_yield_fraction),
            path_fraction: self.path_fraction.unwrap_or(d.path_fraction),
            max_draws: self.max_draws.unwrap_or(d.max_draws),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Tann,
    Ann,
    Both,
}

impl ModelKind {
    pub fn includes_tann(self) -> bool {
        matches!(self, ModelKind::Tann | ModelKind::Both)
    }

    pub fn includes_ann(self) -> bool {
        matches!(self, ModelKind::Ann | ModelKind::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub kind: ModelKind,
    /// Defaults to `<out_dir>/dataset.csv`. Split index files are looked up next to it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tann: Option<TannArchitecture>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ann: Option<BaselineArchitecture>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Tann,
            dataset: None,
            learning_rate: 3e-3,
            batch_size: 10,
            max_epochs: 4000,
            patience: 500,
            tann: None,
            ann: None,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecallSection {
    /// Bundle directory; defaults to `<out_dir>/tann`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub kind: PathKind,
    pub d_eps: f64,
    pub eps_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Dissipation tolerance, W/m³. Defaults to `1e-3` times the largest training target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_tol: Option<f64>,
    /// Also integrate the material along the path and write it alongside.
    pub reference: bool,
}

impl Default for RecallSection {
    fn default() -> Self {
        Self {
            model: None,
            kind: PathKind::Cyclic,
            d_eps: 1e-4,
            eps_max: 2e-3,
            n_steps: None,
            d_tol: None,
            reference: true,
        }
    }
}

impl RecallSection {
    pub fn path_spec(&self, dim: usize, seed: u64) -> PathSpec {
        PathSpec {
            kind: self.kind,
            d_eps: self.d_eps,
            eps_max: self.eps_max,
            n_steps: self.n_steps,
            seed,
            dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tann: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ann: Option<PathBuf>,
    pub d_eps: Vec<f64>,
    /// Path kind for 3D materials; 1D always uses the scalar cyclic law.
    pub kind_3d: PathKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_tol: Option<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            tann: None,
            ann: None,
            d_eps: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            kind_3d: PathKind::Uniaxial,
            d_tol: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.material.material()?;
        self.generate.resolve(&m, self.experiment.seed).validate()?;
        self.train.train_config(self.experiment.seed).validate()?;
        self.study.validate()?;
        if !(self.recall.d_eps > 0.0 && self.recall.eps_max > 0.0) {
            return Err(Error::Config("recall d_eps and eps_max must be positive".into()));
        }
        if self.compare.d_eps.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::Config("compare d_eps entries must be positive".into()));
        }
        Ok(())
    }
}
