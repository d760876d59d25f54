//! Random-state dataset generation.
//!
//! Each record starts from a random admissible state `(ε^t, ζ^t)`, applies a random
//! increment `Δε` and integrates it. Draws are seeded per record index, so the
//! dataset does not depend on how the work is scheduled.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::{loading_path, PathKind, PathSpec};
use super::{deviator, integrate_step, Material, MaterialState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_samples: usize,
    /// Stress scale of the state distribution, Pa. Recorded for provenance.
    pub std_sigma: f64,
    /// Dissipative-stress scale of the state distribution, Pa. Recorded for provenance.
    pub std_x: f64,
    pub std_eps: f64,
    pub std_zeta: f64,
    pub std_deps: f64,
    pub dt: f64,
    pub seed: u64,
    /// Share of random-state records placed on the yield surface.
    pub on_yield_fraction: f64,
    /// Share of records taken from random uniaxial/biaxial cyclic paths (3D only).
    pub path_fraction: f64,
    pub max_draws: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            std_sigma: 4e8,
            std_x: 4e8,
            std_eps: 1e-2,
            std_zeta: 1e-2,
            std_deps: 1e-3,
            dt: 1.0,
            seed: 0,
            on_yield_fraction: 0.55,
            path_fraction: 0.0,
            max_draws: 1_000_000,
        }
    }
}

impl GenConfig {
    /// Defaults scaled to the material: `2k` stress scales, and for 3D, strain
    /// scales of a few yield strains plus 20% path records.
    pub fn for_material(m: &Material) -> Self {
        let k = m.k();
        match m {
            Material::OneD(_) => Self { std_sigma: 2.0 * k, std_x: 2.0 * k, ..Self::default() },
            Material::ThreeD(_) => Self {
                n_samples: 4000,
                std_sigma: 2.0 * k,
                std_x: 2.0 * k,
                std_eps: 2e-3,
                std_zeta: 2e-3,
                std_deps: 2e-4,
                path_fraction: 0.2,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stds = [
            ("std_sigma", self.std_sigma),
            ("std_x", self.std_x),
            ("std_eps", self.std_eps),
            ("std_zeta", self.std_zeta),
            ("std_deps", self.std_deps),
            ("dt", self.dt),
        ];
        for (name, v) in stds {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("on_yield_fraction", self.on_yield_fraction),
            ("path_fraction", self.path_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.max_draws == 0 {
            return Err(Error::Config("max_draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// Step-integrated quantities kept alongside a record (not written to CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEnergy {
    pub f_t: f64,
    pub sigma_mean: Vec<f64>,
    pub dissipated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub eps_t: Vec<f64>,
    pub d_eps: Vec<f64>,
    pub sigma_t: Vec<f64>,
    pub zeta_t: Vec<f64>,
    pub d_zeta: Vec<f64>,
    pub d_sigma: Vec<f64>,
    pub f_next: f64,
    pub d_next: f64,
    pub on_yield: bool,
    #[serde(skip)]
    pub energy: Option<StepEnergy>,
}

impl Sample {
    /// Integrates `d_eps` from `start` and records the targets.
    pub fn from_step(m: &Material, start: &MaterialState, d_eps: Vec<f64>, dt: f64) -> Result<Self> {
        let out = integrate_step(m, start, &d_eps, dt)?;
        let next = &out.state;
        let d_zeta: Vec<f64> = next.zeta.iter().zip(&start.zeta).map(|(a, b)| a - b).collect();
        let d_sigma = next.sigma.iter().zip(&start.sigma).map(|(a, b)| a - b).collect();
        let rate: Vec<f64> = d_zeta.iter().map(|v| v / dt).collect();
        let d_next = m.dissipation(&rate);
        assert!(d_next >= 0.0, "dissipation {d_next} must be non-negative");
        Ok(Self {
            eps_t: start.eps.clone(),
            d_eps,
            sigma_t: start.sigma.clone(),
            zeta_t: start.zeta.clone(),
            d_zeta,
            d_sigma,
            f_next: next.free_energy(m),
            d_next,
            on_yield: start.yield_value(m).abs() <= m.y_tol(),
            energy: Some(StepEnergy {
                f_t: start.free_energy(m),
                sigma_mean: out.sigma_mean,
                dissipated: out.dissipated,
            }),
        })
    }

    pub fn eps_next(&self) -> Vec<f64> {
        self.eps_t.iter().zip(&self.d_eps).map(|(a, b)| a + b).collect()
    }

    pub fn zeta_next(&self) -> Vec<f64> {
        self.zeta_t.iter().zip(&self.d_zeta).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dim: usize,
    pub samples: Vec<Sample>,
    /// Records that failed to integrate and were drawn again.
    pub redrawn: usize,
}

/// Index partition into training, validation and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Seeded 50% / 25% / 25% partition of `n` indices.
    pub fn new(n: usize, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = n / 2;
        let n_val = n / 4;
        let test = idx.split_off(n_train + n_val);
        let val = idx.split_off(n_train);
        Self { train: idx, val, test }
    }

    pub fn write_indices(indices: &[usize], path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index"])?;
        for i in indices {
            w.write_record([i.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_indices(path: &Path) -> Result<Vec<usize>> {
        let mut r = csv::Reader::from_path(path)?;
        r.records()
            .map(|rec| {
                let rec = rec?;
                rec.get(0)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("{}: bad index row", path.display())))
            })
            .collect()
    }
}

fn column_names(dim: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for base in ["eps_t", "d_eps", "sigma_t", "zeta_t", "d_zeta", "d_sigma"] {
        if dim == 1 {
            cols.push(base.to_string());
        } else {
            cols.extend((1..=dim).map(|i| format!("{base}_{i}")));
        }
    }
    cols.extend(["F_next", "D_next", "on_yield"].map(String::from));
    cols
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn on_yield_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| s.on_yield).count() as f64 / self.samples.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> Vec<Sample> {
        indices.iter().map(|&i| self.samples[i].clone()).collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(column_names(self.dim))?;
        for s in &self.samples {
            let mut row: Vec<String> = Vec::new();
            for v in [&s.eps_t, &s.d_eps, &s.sigma_t, &s.zeta_t, &s.d_zeta, &s.d_sigma] {
                row.extend(v.iter().map(|x| format!("{x:e}")));
            }
            row.push(format!("{:e}", s.f_next));
            row.push(format!("{:e}", s.d_next));
            row.push(u8::from(s.on_yield).to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(Path::new("<dataset>"), e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let dim = if header.first().map(String::as_str) == Some("eps_t") { 1 } else { 3 };
        if header != column_names(dim) {
            return Err(Error::Config(format!("unexpected dataset header {header:?}")));
        }
        let mut samples = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("dataset row {}: {e}", line + 1)))?;
            let part = |k: usize| vals[k * dim..(k + 1) * dim].to_vec();
            samples.push(Sample {
                eps_t: part(0),
                d_eps: part(1),
                sigma_t: part(2),
                zeta_t: part(3),
                d_zeta: part(4),
                d_sigma: part(5),
                f_next: vals[6 * dim],
                d_next: vals[6 * dim + 1],
                on_yield: vals[6 * dim + 2] != 0.0,
                energy: None,
            });
        }
        Ok(Self { dim, samples, redrawn: 0 })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Whether record `index` belongs to a pattern that selects a fraction `f` of indices.
fn selected(index: usize, f: f64) -> bool {
    ((index + 1) as f64 * f).floor() > (index as f64 * f).floor()
}

fn normal_vec<R: Rng>(rng: &mut R, std: f64, n: usize) -> Vec<f64> {
    let d = Normal::new(0.0, std).expect("positive std");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Draws one admissible starting state and an increment.
///
/// With `on_yield`, the draw is projected radially onto `y = 0`; otherwise draws
/// are rejected until `y < -y_tol`.
pub fn sample_initial_state<R: Rng>(
    m: &Material,
    cfg: &GenConfig,
    on_yield: bool,
    rng: &mut R,
) -> Result<(MaterialState, Vec<f64>)> {
    let n = m.dim();
    let tol = m.y_tol();
    for _ in 0..cfg.max_draws {
        let eps = normal_vec(rng, cfg.std_eps, n);
        let mut zeta = normal_vec(rng, cfg.std_zeta, n);
        if n == 3 {
            zeta = deviator(&zeta).to_vec();
        }
        let d_eps = normal_vec(rng, cfg.std_deps, n);
        if on_yield {
            let zeta = m.project_to_yield(&eps, &zeta);
            let state = MaterialState::new(m, eps, zeta);
            if state.yield_value(m).abs() <= tol {
                return Ok((state, d_eps));
            }
        } else if m.yield_value(&eps, &zeta) < -tol {
            return Ok((MaterialState::new(m, eps, zeta), d_eps));
        }
    }
    Err(Error::SamplingStall(cfg.max_draws))
}

/// A state along a random uniaxial or biaxial cyclic path, on or strictly inside
/// the yield surface as requested, with the path's next increment.
fn path_draw<R: Rng>(
    m: &Material,
    cfg: &GenConfig,
    on_yield: bool,
    rng: &mut R,
) -> Result<(MaterialState, Vec<f64>)> {
    let tol = m.y_tol();
    for _ in 0..cfg.max_draws {
        let kind = if rng.random_bool(0.5) { PathKind::Uniaxial } else { PathKind::Biaxial };
        let q: usize = rng.random_range(5..=30);
        let d_eps = (normal_vec(rng, cfg.std_deps, 1)[0].abs()).max(1e-3 * cfg.std_deps);
        let spec = PathSpec {
            kind,
            d_eps,
            eps_max: d_eps * q as f64,
            n_steps: Some(4 * q),
            seed: 0,
            dim: 3,
        };
        let mut incs = loading_path(&spec)?;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut perm = [0usize, 1, 2];
        perm.shuffle(rng);
        for d in &mut incs {
            let orig = d.clone();
            for i in 0..3 {
                d[perm[i]] = sign * orig[i];
            }
        }
        let mut states = vec![MaterialState::origin(m)];
        for d in &incs[..incs.len() - 1] {
            let next = integrate_step(m, states.last().expect("non-empty"), d, cfg.dt)?.state;
            states.push(next);
        }
        let candidates: Vec<usize> = (0..states.len())
            .filter(|&i| {
                let y = states[i].yield_value(m);
                if on_yield { y.abs() <= tol } else { y < -tol }
            })
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let stop = candidates[rng.random_range(0..candidates.len())];
        return Ok((states.swap_remove(stop), incs[stop].clone()));
    }
    Err(Error::SamplingStall(cfg.max_draws))
}

fn generate_one(m: &Material, cfg: &GenConfig, index: usize) -> Result<(Sample, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let from_path = m.dim() == 3 && selected(index, cfg.path_fraction);
    let on_yield = selected(index, cfg.on_yield_fraction);
    let mut failures = 0;
    loop {
        let draw = if from_path {
            path_draw(m, cfg, on_yield, &mut rng)
        } else {
            sample_initial_state(m, cfg, on_yield, &mut rng)
        };
        let (state, d_eps) = match draw {
            Ok(v) => v,
            Err(e @ Error::SamplingStall(_)) => return Err(e),
            Err(e) if e.is_numerical() && failures < cfg.max_draws => {
                failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match Sample::from_step(m, &state, d_eps, cfg.dt) {
            Ok(s) => return Ok((s, failures)),
            Err(e) if e.is_numerical() && failures < cfg.max_draws => failures += 1,
            Err(e) => return Err(e),
        }
    }
}

/// `cfg.n_samples` records, ordered by index and reproducible under `cfg.seed`.
pub fn generate_dataset(m: &Material, cfg: &GenConfig) -> Result<Dataset> {
    m.validate()?;
    cfg.validate()?;
    let results: Vec<(Sample, usize)> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| generate_one(m, cfg, i))
        .collect::<Result<_>>()?;
    let redrawn = results.iter().map(|(_, f)| f).sum();
    Ok(Dataset {
        dim: m.dim(),
        samples: results.into_iter().map(|(s, _)| s).collect(),
        redrawn,
    })
}
