//! Recall-mode histories and their thermodynamic consistency report.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hyperplast::{Material, MaterialState, PathSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Free energy, J/m³.
    pub f: f64,
    /// Dissipation rate, W/m³.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `tann`, `ann` or `reference`.
    pub model: String,
    pub path: Option<PathSpec>,
    pub seed: Option<u64>,
    pub points: Vec<TrajectoryPoint>,
    /// Per step, `|σ^t + Δσ - ∂F/∂ε|` with the derivative re-evaluated. Empty when not applicable.
    pub sigma_route_gap: Vec<f64>,
    /// Why the trajectory stopped early, if it did.
    pub diagnostic: Option<String>,
}

impl Trajectory {
    pub fn new(model: &str, first: TrajectoryPoint) -> Self {
        Self {
            model: model.into(),
            path: None,
            seed: None,
            points: vec![first],
            sigma_route_gap: Vec::new(),
            diagnostic: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map(|p| p.eps.len()).unwrap_or(0)
    }

    /// Integrated material response along `increments`, with `D` at each step end
    /// taken as `D(Δζ/Δt)` and `F` from the potential.
    pub fn reference(
        m: &Material,
        start: &MaterialState,
        increments: &[Vec<f64>],
        dt: f64,
    ) -> Result<Self> {
        let states = crate::hyperplast::integrate_path(m, start, increments, dt)?;
        let mut traj = Self::new(
            "reference",
            TrajectoryPoint {
                eps: start.eps.clone(),
                sigma: start.sigma.clone(),
                zeta: start.zeta.clone(),
                f: start.free_energy(m),
                d: 0.0,
            },
        );
        for w in states.windows(2) {
            let rate: Vec<f64> = w[1].zeta.iter().zip(&w[0].zeta).map(|(a, b)| (a - b) / dt).collect();
            traj.points.push(TrajectoryPoint {
                eps: w[1].eps.clone(),
                sigma: w[1].sigma.clone(),
                zeta: w[1].zeta.clone(),
                f: w[1].free_energy(m),
                d: m.dissipation(&rate),
            });
        }
        Ok(traj)
    }

    pub fn stress_series(&self, component: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.sigma[component]).collect()
    }

    pub fn write_csv(&self, w: &mut csv::Writer<impl Write>, header: bool) -> Result<()> {
        let n = self.dim();
        if header {
            w.write_record(trajectory_header(n))?;
        }
        for (i, p) in self.points.iter().enumerate() {
            let mut row = vec![i.to_string()];
            for v in [&p.eps, &p.sigma, &p.zeta] {
                row.extend(v.iter().map(|x| format!("{x:e}")));
            }
            row.push(format!("{:e}", p.f));
            row.push(format!("{:e}", p.d));
            row.push(self.model.clone());
            w.write_record(&row)?;
        }
        Ok(())
    }

    /// Writes one or more trajectories of equal dimension to a single CSV.
    pub fn save_csv(trajectories: &[&Trajectory], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for (i, t) in trajectories.iter().enumerate() {
            t.write_csv(&mut w, i == 0)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["step".to_string()];
    for base in ["eps", "sigma", "zeta"] {
        if n == 1 {
            h.push(base.into());
        } else {
            h.extend((1..=n).map(|i| format!("{base}_{i}")));
        }
    }
    h.extend(["F", "D", "model"].map(String::from));
    h
}

/// Outcome of [`consistency_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub model: String,
    pub steps: usize,
    pub min_d: f64,
    pub violations: usize,
    pub violation_steps: Vec<usize>,
    pub max_sigma_route_gap: f64,
    pub truncated: bool,
    pub passed: bool,
}

/// Flags every step whose dissipation is below `-tol`.
pub fn consistency_check(traj: &Trajectory, tol: f64) -> ConsistencyReport {
    let violation_steps: Vec<usize> = traj
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.d < -tol || p.d.is_nan())
        .map(|(i, _)| i)
        .collect();
    let min_d = traj.points.iter().map(|p| p.d).fold(f64::INFINITY, f64::min);
    let max_gap = traj.sigma_route_gap.iter().copied().fold(0.0, f64::max);
    ConsistencyReport {
        model: traj.model.clone(),
        steps: traj.points.len().saturating_sub(1),
        min_d,
        violations: violation_steps.len(),
        violation_steps,
        max_sigma_route_gap: max_gap,
        truncated: traj.diagnostic.is_some(),
        passed: traj.diagnostic.is_none() && min_d >= -tol,
    }
}

/// Root-mean-square difference of one stress component between two trajectories
/// over their common length.
pub fn stress_rmse(a: &Trajectory, b: &Trajectory, component: usize) -> f64 {
    series_rmse(&a.stress_series(component), &b.stress_series(component))
}

pub fn series_rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return f64::NAN;
    }
    (a.iter().zip(b).take(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64).sqrt()
}
