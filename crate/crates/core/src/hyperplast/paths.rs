//! Strain-increment sequences for recall and comparison runs.
//!
//! Cyclic laws use `Δε sgn(cos(nπ/2N))` with `N = ε_max/Δε`. Signs are computed
//! from integer arithmetic so that the zeros of the cosine are exact.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    /// Scalar cyclic law (1D).
    Cyclic,
    Uniaxial,
    Biaxial,
    Triaxial,
    /// All three components follow the cyclic law.
    Isotropic,
    /// Seeded zero-mean normal increments with standard deviation `Δε`.
    Random,
}

impl PathKind {
    /// Number of strain components the path produces for a material of dimension `dim`.
    pub fn components(self, dim: usize) -> usize {
        match self {
            PathKind::Cyclic => 1,
            PathKind::Random => dim,
            _ => 3,
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PathKind::Cyclic => "cyclic",
            PathKind::Uniaxial => "uniaxial",
            PathKind::Biaxial => "biaxial",
            PathKind::Triaxial => "triaxial",
            PathKind::Isotropic => "isotropic",
            PathKind::Random => "random",
        };
        f.write_str(s)
    }
}

impl FromStr for PathKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "cyclic" => PathKind::Cyclic,
            "uniaxial" => PathKind::Uniaxial,
            "biaxial" => PathKind::Biaxial,
            "triaxial" => PathKind::Triaxial,
            "isotropic" => PathKind::Isotropic,
            "random" => PathKind::Random,
            other => return Err(Error::Path(format!("unknown path kind `{other}`"))),
        })
    }
}

/// Parameters of a loading path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PathKind,
    pub d_eps: f64,
    pub eps_max: f64,
    /// Defaults to one full cycle, `4N`.
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Component count of random paths.
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl PathSpec {
    pub fn cyclic(kind: PathKind, d_eps: f64, eps_max: f64) -> Self {
        Self { kind, d_eps, eps_max, n_steps: None, seed: 0, dim: 1 }
    }

    pub fn increments(&self) -> Result<Vec<Vec<f64>>> {
        loading_path(self)
    }
}

/// `sgn(cos(nπ/(2q)))` for integer `n`, with `sgn(0) = 0`.
pub fn sign_cos(n: i64, q: i64) -> f64 {
    let r = n.rem_euclid(4 * q);
    if r < q {
        1.0
    } else if r == q {
        0.0
    } else if r < 3 * q {
        -1.0
    } else if r == 3 * q {
        0.0
    } else {
        1.0
    }
}

/// `sgn(sin(nπ/(2q)))`.
pub fn sign_sin(n: i64, q: i64) -> f64 {
    sign_cos(n - q, q)
}

fn cycles(d_eps: f64, eps_max: f64) -> Result<i64> {
    if !(d_eps > 0.0 && d_eps.is_finite()) {
        return Err(Error::Path(format!("strain increment must be positive, got {d_eps}")));
    }
    if !(eps_max > 0.0 && eps_max.is_finite()) {
        return Err(Error::Path(format!("maximum strain must be positive, got {eps_max}")));
    }
    let ratio = eps_max / d_eps;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::Path(format!(
            "eps_max / d_eps = {ratio} is not a positive integer"
        )));
    }
    Ok(n as i64)
}

/// Increments `Δε^n`, `n = 1..=steps`.
pub fn loading_path(spec: &PathSpec) -> Result<Vec<Vec<f64>>> {
    let de = spec.d_eps;
    if spec.kind == PathKind::Random {
        if !(de > 0.0 && de.is_finite()) {
            return Err(Error::Path(format!("strain increment must be positive, got {de}")));
        }
        let steps = spec
            .n_steps
            .ok_or_else(|| Error::Path("random paths need n_steps".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, de).expect("positive std");
        return Ok((0..steps)
            .map(|_| (0..spec.dim.max(1)).map(|_| normal.sample(&mut rng)).collect())
            .collect());
    }
    let q = cycles(de, spec.eps_max)?;
    let steps = spec.n_steps.unwrap_or(4 * q as usize);
    Ok((1..=steps as i64)
        .map(|n| {
            let c = de * sign_cos(n, q);
            match spec.kind {
                PathKind::Cyclic => vec![c],
                PathKind::Uniaxial => vec![c, 0.0, 0.0],
                PathKind::Biaxial => vec![c, -de * sign_cos(n, 2 * q), 0.0],
                PathKind::Triaxial => {
                    let s = de * sign_sin(n, q);
                    vec![c, s, s]
                }
                PathKind::Isotropic => vec![c, c, c],
                PathKind::Random => unreachable!(),
            }
        })
        .collect())
}
