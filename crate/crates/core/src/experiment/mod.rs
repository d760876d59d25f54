//! Config-driven experiment commands. Each command writes its artifacts plus a
//! `<command>.manifest.json` into the output directory; given the same config and
//! seed, a command reproduces its files byte for byte.

pub mod config;
pub mod study;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{self, BaselineArchitecture, BaselineModel, BaselineObjective};
use crate::hyperplast::{generate_dataset, Dataset, Material, MaterialState, PathKind, PathSpec, Split};
use crate::netcore::{History, Objective};
use crate::tann::{self, BundleMetadata, TannArchitecture, TannModel, TERM_NAMES};
use crate::trajectory::{consistency_check, series_rmse, stress_rmse, ConsistencyReport, Trajectory};
use crate::{Error, Result};

pub use config::{Config, ModelKind};
pub use study::{run_study, StudyConfig, StudyRow};

pub const SPLIT_FILES: [&str; 3] = ["split_train.csv", "split_val.csv", "split_test.csv"];

/// A loaded configuration bound to a seed and an output directory.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: Config,
    pub out_dir: PathBuf,
}

impl Run {
    /// `seed` and `out_dir` override the config when given. Without either, the
    /// output goes to `runs/<experiment id>`.
    pub fn new(mut config: Config, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed {
            config.experiment.seed = s;
        }
        let out_dir = out_dir
            .or_else(|| config.experiment.out_dir.clone())
            .unwrap_or_else(|| Path::new("runs").join(&config.experiment.id));
        config.experiment.out_dir = None;
        config.validate()?;
        Ok(Self { config, out_dir })
    }

    pub fn from_file(path: impl AsRef<Path>, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<Self> {
        Self::new(Config::load(path)?, seed, out_dir)
    }

    pub fn seed(&self) -> u64 {
        self.config.experiment.seed
    }

    pub fn material(&self) -> Result<Material> {
        self.config.material.material()
    }

    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))
    }

    fn dataset_path(&self) -> PathBuf {
        self.config.train.dataset.clone().unwrap_or_else(|| self.out_dir.join("dataset.csv"))
    }

    fn write_manifest(&self, command: &str, artifacts: Vec<String>) -> Result<()> {
        let manifest = Manifest {
            experiment: self.config.experiment.id.clone(),
            command: command.into(),
            material: self.config.material.name(),
            seed: self.seed(),
            config: self.config.clone(),
            artifacts,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        };
        let path = self.out_dir.join(format!("{command}.manifest.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Everything needed to re-run a command: the resolved config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub command: String,
    pub material: String,
    pub seed: u64,
    pub config: Config,
    /// Relative to the output directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub samples: usize,
    pub on_yield_fraction: f64,
    pub redrawn: usize,
    pub min_d_next: f64,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "generated {} samples, on-yield fraction {:.4}, redrawn {}, min D_next {:e}",
            self.samples, self.on_yield_fraction, self.redrawn, self.min_d_next
        )
    }
}

/// Writes `dataset.csv` and the three split index files.
pub fn generate(run: &Run) -> Result<GenerateSummary> {
    run.prepare()?;
    let m = run.material()?;
    let cfg = run.config.generate.resolve(&m, run.seed());
    let ds = generate_dataset(&m, &cfg)?;
    ds.save_csv(run.out_dir.join("dataset.csv"))?;
    let split = Split::new(ds.len(), run.seed());
    for (name, idx) in SPLIT_FILES.iter().zip([&split.train, &split.val, &split.test]) {
        Split::write_indices(idx, &run.out_dir.join(name))?;
    }
    let mut artifacts = vec!["dataset.csv".to_string()];
    artifacts.extend(SPLIT_FILES.map(String::from));
    run.write_manifest("generate", artifacts)?;
    Ok(GenerateSummary {
        samples: ds.len(),
        on_yield_fraction: ds.on_yield_fraction(),
        redrawn: ds.redrawn,
        min_d_next: ds.samples.iter().map(|s| s.d_next).fold(f64::INFINITY, f64::min),
    })
}

/// The dataset at `path` with its split: index files beside it when present,
/// otherwise a fresh seeded split.
pub fn load_split(path: &Path, seed: u64) -> Result<(Dataset, Split)> {
    let ds = Dataset::load_csv(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let files: Vec<PathBuf> = SPLIT_FILES.iter().map(|f| dir.join(f)).collect();
    let split = if files.iter().all(|f| f.exists()) {
        Split {
            train: Split::read_indices(&files[0])?,
            val: Split::read_indices(&files[1])?,
            test: Split::read_indices(&files[2])?,
        }
    } else {
        Split::new(ds.len(), seed)
    };
    if let Some(bad) = split.train.iter().chain(&split.val).chain(&split.test).find(|&&i| i >= ds.len()) {
        return Err(Error::Config(format!("split index {bad} exceeds dataset size {}", ds.len())));
    }
    Ok((ds, split))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub kind: String,
    pub trainable_parameters: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub test_terms: Vec<String>,
    pub test_mae: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub tann: Option<ModelReport>,
    pub ann: Option<ModelReport>,
    /// ANN over TANN trainable count, when both were trained.
    pub parameter_ratio: Option<f64>,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.tann.iter().chain(&self.ann) {
            write!(f, "{}: {} trainables, {} epochs (best {}), test MAE", r.kind, r.trainable_parameters, r.epochs_run, r.best_epoch)?;
            for (t, v) in r.test_terms.iter().zip(&r.test_mae) {
                write!(f, " {t}={v:.4e}")?;
            }
            writeln!(f)?;
        }
        if let Some(p) = self.parameter_ratio {
            write!(f, "parameter ratio ann/tann = {p:.4}")?;
        }
        Ok(())
    }
}

fn metadata(
    kind: &str,
    run: &Run,
    dim: usize,
    dt: f64,
    params: usize,
    weights: Vec<f64>,
    terms: Vec<String>,
    hist: &History,
    train: &[crate::hyperplast::Sample],
) -> BundleMetadata {
    BundleMetadata {
        kind: kind.into(),
        material: run.config.material.name(),
        dim,
        dt,
        init_seed: run.seed(),
        train_seed: run.seed(),
        trainable_parameters: params,
        loss_weights: weights,
        term_names: terms,
        normalization: "z-score over the training split".into(),
        epochs_run: hist.epochs_run,
        best_epoch: hist.best_epoch,
        max_target_d: train.iter().map(|s| s.d_next).fold(0.0, f64::max),
    }
}

/// Trains the configured model kinds on the training split, with early stopping on
/// the validation split, and reports test-split errors.
pub fn train(run: &Run) -> Result<TrainSummary> {
    let m = run.material()?;
    let (ds, split) = load_split(&run.dataset_path(), run.seed())?;
    if ds.dim != m.dim() {
        return Err(Error::Shape(format!("dataset is {}D, material is {}D", ds.dim, m.dim())));
    }
    let (tr, va, te) = (ds.subset(&split.train), ds.subset(&split.val), ds.subset(&split.test));
    if tr.is_empty() || va.is_empty() {
        return Err(Error::Config("dataset has no training or validation samples".into()));
    }
    run.prepare()?;
    let t = &run.config.train;
    let cfg = t.train_config(run.seed());
    let dt = run.config.generate.resolve(&m, run.seed()).dt;
    let mut summary = TrainSummary::default();
    let mut artifacts = Vec::new();
    if t.kind.includes_tann() {
        let arch = t.tann.clone().unwrap_or_else(|| TannArchitecture::default_for(m.dim()));
        let mut model = TannModel::new(m.dim(), &arch, dt, run.seed())?;
        let (hist, w) = tann::train(&mut model, &tr, &va, &cfg, None)?;
        let meta = metadata(
            "tann",
            run,
            m.dim(),
            dt,
            model.trainable_count(),
            w.as_array().to_vec(),
            TERM_NAMES.map(String::from).to_vec(),
            &hist,
            &tr,
        );
        let dir = run.out_dir.join("tann");
        model.save(&dir, &meta)?;
        hist.save_csv(dir.join("history.csv"))?;
        artifacts.extend(["tann/snn_zeta.json", "tann/snn_f.json", "tann/metadata.json", "tann/history.csv"].map(String::from));
        summary.tann = Some(ModelReport {
            kind: "tann".into(),
            trainable_parameters: model.trainable_count(),
            epochs_run: hist.epochs_run,
            best_epoch: hist.best_epoch,
            test_terms: meta.term_names.clone(),
            test_mae: if te.is_empty() { Vec::new() } else { tann::evaluate(&model, &te, w)? },
        });
    }
    if t.kind.includes_ann() {
        let arch = t.ann.clone().unwrap_or_else(|| BaselineArchitecture::default_for(m.dim()));
        let mut model = BaselineModel::new(m.dim(), &arch, dt, run.seed())?;
        let (hist, w) = baseline::train(&mut model, &tr, &va, &cfg)?;
        let terms = vec!["d_zeta".to_string(), "d_sigma".to_string()];
        let meta = metadata("ann", run, m.dim(), dt, model.trainable_count(), w.to_vec(), terms.clone(), &hist, &tr);
        let dir = run.out_dir.join("ann");
        model.save(&dir, &meta)?;
        hist.save_csv(dir.join("history.csv"))?;
        artifacts.extend(["ann/ann_zeta.json", "ann/ann_sigma.json", "ann/metadata.json", "ann/history.csv"].map(String::from));
        let obj = BaselineObjective { model: model.clone(), weights: w };
        summary.ann = Some(ModelReport {
            kind: "ann".into(),
            trainable_parameters: model.trainable_count(),
            epochs_run: hist.epochs_run,
            best_epoch: hist.best_epoch,
            test_terms: terms,
            test_mae: if te.is_empty() { Vec::new() } else { obj.term_errors(&te)? },
        });
    }
    if let (Some(a), Some(b)) = (&summary.tann, &summary.ann) {
        summary.parameter_ratio = Some(b.trainable_parameters as f64 / a.trainable_parameters as f64);
    }
    write_json(&run.out_dir.join("train_report.json"), &summary)?;
    artifacts.push("train_report.json".into());
    run.write_manifest("train", artifacts)?;
    Ok(summary)
}

/// Either kind of trained bundle.
#[derive(Debug, Clone)]
pub enum Bundle {
    Tann(TannModel),
    Ann(BaselineModel),
}

impl Bundle {
    pub fn load(dir: &Path) -> Result<(Self, BundleMetadata)> {
        let meta = BundleMetadata::load(dir)?;
        match meta.kind.as_str() {
            "tann" => TannModel::load(dir).map(|(m, meta)| (Bundle::Tann(m), meta)),
            "ann" => BaselineModel::load(dir).map(|(m, meta)| (Bundle::Ann(m), meta)),
            other => Err(Error::Config(format!("{}: unknown bundle kind {other:?}", dir.display()))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Bundle::Tann(m) => m.dim,
            Bundle::Ann(m) => m.dim,
        }
    }

    /// Recall from the stress-free origin.
    pub fn recall(&self, m: &Material, path: &[Vec<f64>]) -> Result<Trajectory> {
        let z = vec![0.0; self.dim()];
        match self {
            Bundle::Tann(t) => t.recall(&z, &z, &z, path),
            Bundle::Ann(a) => a.recall(m, &z, &z, &z, path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSummary {
    pub report: ConsistencyReport,
    pub d_tol: f64,
    /// Per component, against the integrated material. Empty without a reference.
    pub stress_rmse: Vec<f64>,
}

impl fmt::Display for RecallSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        write!(
            f,
            "{}: {} steps, min D {:e}, {} violations below -{:e}, consistency {}",
            r.model,
            r.steps,
            r.min_d,
            r.violations,
            self.d_tol,
            if r.passed { "passed" } else { "failed" }
        )?;
        if !self.stress_rmse.is_empty() {
            write!(f, ", stress RMSE")?;
            for v in &self.stress_rmse {
                write!(f, " {v:.4e}")?;
            }
        }
        Ok(())
    }
}

fn origin_reference(m: &Material, path: &[Vec<f64>], dt: f64) -> Result<Trajectory> {
    Trajectory::reference(m, &MaterialState::origin(m), path, dt)
}

/// Self-fed recall from the origin along the configured path.
pub fn recall(run: &Run) -> Result<RecallSummary> {
    let m = run.material()?;
    let rc = &run.config.recall;
    let dir = rc.model.clone().unwrap_or_else(|| run.out_dir.join("tann"));
    let (bundle, meta) = Bundle::load(&dir)?;
    if bundle.dim() != m.dim() {
        return Err(Error::Shape(format!("model is {}D, material is {}D", bundle.dim(), m.dim())));
    }
    let spec = rc.path_spec(m.dim(), run.seed());
    let path = spec.increments()?;
    if path.first().is_some_and(|d| d.len() != m.dim()) {
        return Err(Error::Config(format!("{} paths do not fit a {}D material", spec.kind, m.dim())));
    }
    let mut traj = bundle.recall(&m, &path)?;
    traj.path = Some(spec.clone());
    traj.seed = Some(run.seed());
    let d_tol = rc.d_tol.unwrap_or(1e-3 * meta.max_target_d);
    let report = consistency_check(&traj, d_tol);
    let mut written = vec![&traj];
    let reference;
    let mut rmse = Vec::new();
    if rc.reference {
        reference = origin_reference(&m, &path, meta.dt)?;
        rmse = (0..m.dim()).map(|c| stress_rmse(&reference, &traj, c)).collect();
        written.push(&reference);
    }
    run.prepare()?;
    Trajectory::save_csv(&written, run.out_dir.join("trajectory.csv"))?;
    let summary = RecallSummary { report, d_tol, stress_rmse: rmse };
    write_json(&run.out_dir.join("consistency.json"), &summary)?;
    run.write_manifest("recall", vec!["trajectory.csv".into(), "consistency.json".into()])?;
    Ok(summary)
}

/// Runs the activation study and writes `activation_study.csv`.
pub fn study_activations(run: &Run) -> Result<Vec<StudyRow>> {
    let rows = run_study(&run.config.study, run.seed())?;
    run.prepare()?;
    let path = run.out_dir.join("activation_study.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    study::write_study_csv(&rows, file)?;
    run.write_manifest("study-activations", vec!["activation_study.csv".into()])?;
    Ok(rows)
}

/// One increment size of the generalization sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub d_eps: f64,
    pub eps_max: f64,
    pub steps: usize,
    pub tann_sigma_rmse: f64,
    pub ann_sigma_rmse: f64,
    pub tann_zeta_rmse: f64,
    pub ann_zeta_rmse: f64,
    pub tann_min_d: f64,
    pub ann_min_d: f64,
    pub tann_d_violations: usize,
    pub ann_d_violations: usize,
    pub tann_f_rmse: f64,
    pub ann_f_rmse: f64,
    pub tann_truncated: bool,
    pub ann_truncated: bool,
}

/// Strain amplitude of a sweep point: twenty increments, kept within `[2e-3, 2]`.
pub fn sweep_amplitude(d_eps: f64) -> f64 {
    (20.0 * d_eps).clamp(2e-3, 2.0)
}

/// Sweep path of `d_eps`: the scalar cyclic law in 1D, `kind_3d` in 3D.
pub fn sweep_path(dim: usize, d_eps: f64, kind_3d: PathKind) -> PathSpec {
    let kind = if dim == 1 { PathKind::Cyclic } else { kind_3d };
    PathSpec { dim, ..PathSpec::cyclic(kind, d_eps, sweep_amplitude(d_eps)) }
}

fn mean_rmse(a: &Trajectory, b: &Trajectory, f: impl Fn(&crate::trajectory::TrajectoryPoint) -> &[f64]) -> f64 {
    let n = a.dim();
    let total: f64 = (0..n)
        .map(|c| {
            let x: Vec<f64> = a.points.iter().map(|p| f(p)[c]).collect();
            let y: Vec<f64> = b.points.iter().map(|p| f(p)[c]).collect();
            series_rmse(&x, &y).powi(2)
        })
        .sum();
    (total / n as f64).sqrt()
}

fn energy_rmse(a: &Trajectory, b: &Trajectory) -> f64 {
    let x: Vec<f64> = a.points.iter().map(|p| p.f).collect();
    let y: Vec<f64> = b.points.iter().map(|p| p.f).collect();
    series_rmse(&x, &y)
}

/// Runs both models and the material along each sweep path.
///
/// Stress and `ζ` errors are root-mean-square over steps and components.
pub fn compare_models(
    m: &Material,
    tann: &TannModel,
    ann: &BaselineModel,
    grid: &[f64],
    kind_3d: PathKind,
    d_tol: f64,
) -> Result<(Vec<ComparisonRow>, Vec<[Trajectory; 3]>)> {
    let results: Vec<(ComparisonRow, [Trajectory; 3])> = grid
        .par_iter()
        .map(|&d| {
            let spec = sweep_path(m.dim(), d, kind_3d);
            let path = spec.increments()?;
            let reference = origin_reference(m, &path, tann.dt)?;
            let z = vec![0.0; m.dim()];
            let t = tann.recall(&z, &z, &z, &path)?;
            let a = ann.recall(m, &z, &z, &z, &path)?;
            let (rt, ra) = (consistency_check(&t, d_tol), consistency_check(&a, d_tol));
            let row = ComparisonRow {
                d_eps: d,
                eps_max: spec.eps_max,
                steps: path.len(),
                tann_sigma_rmse: mean_rmse(&reference, &t, |p| &p.sigma),
                ann_sigma_rmse: mean_rmse(&reference, &a, |p| &p.sigma),
                tann_zeta_rmse: mean_rmse(&reference, &t, |p| &p.zeta),
                ann_zeta_rmse: mean_rmse(&reference, &a, |p| &p.zeta),
                tann_min_d: rt.min_d,
                ann_min_d: ra.min_d,
                tann_d_violations: rt.violations,
                ann_d_violations: ra.violations,
                tann_f_rmse: energy_rmse(&reference, &t),
                ann_f_rmse: energy_rmse(&reference, &a),
                tann_truncated: rt.truncated,
                ann_truncated: ra.truncated,
            };
            Ok((row, [reference, t, a]))
        })
        .collect::<Result<_>>()?;
    Ok(results.into_iter().unzip())
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes `comparison.csv` and one `sweep_<i>.csv` of trajectories per grid point.
pub fn compare(run: &Run) -> Result<Vec<ComparisonRow>> {
    let m = run.material()?;
    let c = &run.config.compare;
    let tdir = c.tann.clone().unwrap_or_else(|| run.out_dir.join("tann"));
    let adir = c.ann.clone().unwrap_or_else(|| run.out_dir.join("ann"));
    let (tm, tmeta) = TannModel::load(&tdir)?;
    let (am, _) = BaselineModel::load(&adir)?;
    if tm.dim != m.dim() || am.dim != m.dim() {
        return Err(Error::Shape("model and material dimensions differ".into()));
    }
    let d_tol = c.d_tol.unwrap_or(1e-3 * tmeta.max_target_d);
    let (rows, trajs) = compare_models(&m, &tm, &am, &c.d_eps, c.kind_3d, d_tol)?;
    run.prepare()?;
    write_comparison_csv(&rows, &run.out_dir.join("comparison.csv"))?;
    let mut artifacts = vec!["comparison.csv".to_string()];
    for (i, [r, t, a]) in trajs.iter().enumerate() {
        let name = format!("sweep_{i}.csv");
        Trajectory::save_csv(&[r, t, a], run.out_dir.join(&name))?;
        artifacts.push(name);
    }
    run.write_manifest("compare", artifacts)?;
    Ok(rows)
}
