//! Adaptive Bogacki–Shampine (RK23) integration of one strain increment.
//!
//! The strain rate is held at `Δε/Δt` over the step. Each substep is taken in a
//! fixed mode, elastic or plastic, chosen at its start. Elastic substeps that
//! would leave the yield surface are shortened to end on it, so the only
//! discontinuity of the right-hand side sits on a substep boundary.

use serde::{Deserialize, Serialize};

use super::rates::{plastic_zeta_dot, trial_multiplier};
use super::{Material, MaterialState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    /// Absolute tolerance in units of `k` (stress-like components) or `k / stiffness` (strains).
    pub atol: f64,
    pub max_substeps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, max_substeps: 200_000 }
    }
}

/// End state of one increment plus step-integrated quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: MaterialState,
    /// `(1/Δt) ∫ σ dt` over the increment.
    pub sigma_mean: Vec<f64>,
    /// `∫ D dt` over the increment.
    pub dissipated: f64,
    pub substeps: usize,
}

struct Stepper<'a> {
    m: &'a Material,
    n: usize,
    eps0: &'a [f64],
    eps_dot: Vec<f64>,
}

impl Stepper<'_> {
    fn eps_at(&self, t: f64) -> Vec<f64> {
        self.eps0
            .iter()
            .zip(&self.eps_dot)
            .map(|(e, r)| e + r * t)
            .collect()
    }

    fn yield_at(&self, t: f64, zeta: &[f64]) -> f64 {
        self.m.yield_value(&self.eps_at(t), zeta)
    }

    /// `d/dt [ζ, ∫σ, ∫D]`.
    fn rhs(&self, plastic: bool, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let eps = self.eps_at(t);
        let zeta = &y[..n];
        let zeta_dot = if plastic {
            plastic_zeta_dot(self.m, &self.m.chi(&eps, zeta), &self.eps_dot)?
        } else {
            vec![0.0; n]
        };
        let sigma = self.m.stress(&eps, zeta);
        let d = self.m.dissipation(&zeta_dot);
        let mut out = zeta_dot;
        out.extend(sigma);
        out.push(d);
        Ok(out)
    }

    /// One Bogacki–Shampine step; returns the third-order solution and the embedded error.
    fn rk23(&self, plastic: bool, t: f64, h: f64, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let axpy = |base: &[f64], terms: &[(f64, &Vec<f64>)]| -> Vec<f64> {
            let mut out = base.to_vec();
            for (c, k) in terms {
                for (o, v) in out.iter_mut().zip(k.iter()) {
                    *o += h * c * v;
                }
            }
            out
        };
        let k1 = self.rhs(plastic, t, y)?;
        let k2 = self.rhs(plastic, t + 0.5 * h, &axpy(y, &[(0.5, &k1)]))?;
        let k3 = self.rhs(plastic, t + 0.75 * h, &axpy(y, &[(0.75, &k2)]))?;
        let y3 = axpy(y, &[(2.0 / 9.0, &k1), (1.0 / 3.0, &k2), (4.0 / 9.0, &k3)]);
        let k4 = self.rhs(plastic, t + h, &y3)?;
        let y2 = axpy(
            y,
            &[(7.0 / 24.0, &k1), (0.25, &k2), (1.0 / 3.0, &k3), (0.125, &k4)],
        );
        let err = y3.iter().zip(&y2).map(|(a, b)| a - b).collect();
        Ok((y3, err))
    }

    /// Length `s` in `(0, h]` of the elastic substep that ends on `y = 0`.
    fn crossing(&self, t: f64, h: f64, zeta: &[f64], tol: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, h);
        let (mut g_lo, mut g_hi) = (self.yield_at(t, zeta), self.yield_at(t + h, zeta));
        let mut side = 0i8;
        for _ in 0..200 {
            let mut s = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let g = self.yield_at(t + s, zeta);
            if g.abs() <= 0.5 * tol {
                return s;
            }
            if g < 0.0 {
                lo = s;
                g_lo = g;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = s;
                g_hi = g;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            }
        }
        lo
    }
}

/// Integrates the increment `d_eps` applied at constant rate over `dt`.
pub fn integrate_step(
    m: &Material,
    s: &MaterialState,
    d_eps: &[f64],
    dt: f64,
) -> Result<StepOutcome> {
    integrate_step_with(m, s, d_eps, dt, &IntegratorConfig::default())
}

pub fn integrate_step_with(
    m: &Material,
    s: &MaterialState,
    d_eps: &[f64],
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<StepOutcome> {
    let n = m.dim();
    if d_eps.len() != n || s.eps.len() != n || s.zeta.len() != n {
        return Err(Error::Shape(format!(
            "increment/state of length {}/{} for a {n}-component material",
            d_eps.len(),
            s.eps.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time increment must be positive, got {dt}")));
    }
    let tol = m.y_tol();
    let y_start = m.yield_value(&s.eps, &s.zeta);
    if y_start > tol {
        return Err(Error::StateInvalid { y: y_start, tol });
    }

    let st = Stepper {
        m,
        n,
        eps0: &s.eps,
        eps_dot: d_eps.iter().map(|d| d / dt).collect(),
    };
    let k = m.k();
    let strain_atol = cfg.atol * k / m.stiffness();
    let mut atol = vec![strain_atol; n];
    atol.extend(std::iter::repeat_n(cfg.atol * k * dt, n));
    atol.push(cfg.atol * k * k / m.stiffness());

    let mut y: Vec<f64> = s.zeta.clone();
    y.extend(std::iter::repeat_n(0.0, n + 1));
    let mut t = 0.0;
    let mut h = dt;
    let mut substeps = 0;
    let mut lambda = 0.0;
    let still = d_eps.iter().all(|&d| d == 0.0);
    if still {
        // Nothing moves: σ is constant and no flow occurs.
        for i in 0..n {
            y[n + i] = s.sigma[i] * dt;
        }
        t = dt;
    }

    while t < dt {
        if substeps >= cfg.max_substeps {
            return Err(Error::StepUnderflow { t, h });
        }
        h = h.min(dt - t);
        if h < 1e-14 * dt {
            return Err(Error::StepUnderflow { t, h });
        }
        let zeta = y[..n].to_vec();
        let eps_now = st.eps_at(t);
        let chi = m.chi(&eps_now, &zeta);
        let yv = m.yield_of_chi(&chi);
        let on_surface = yv >= -tol;
        let mut plastic = on_surface && trial_multiplier(m, &chi, &st.eps_dot)?.0 > 0.0;

        if !plastic {
            let y_end = st.yield_at(t + h, &zeta);
            if y_end > tol {
                if on_surface {
                    plastic = true;
                } else {
                    h = st.crossing(t, h, &zeta, tol);
                }
            }
        }

        let (y_new, err) = st.rk23(plastic, t, h, &y)?;
        substeps += 1;
        let mut err_norm = 0.0f64;
        for i in 0..y.len() {
            let sc = atol[i] + cfg.rtol * y[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max(err[i].abs() / sc);
        }
        if !err_norm.is_finite() {
            return Err(Error::StepUnderflow { t, h });
        }
        let t_new = t + h;
        let mut y_end = st.yield_at(t_new, &y_new[..n]);
        if plastic && y_end > 10.0 * tol {
            err_norm = err_norm.max(2.0);
        }
        if err_norm <= 1.0 {
            y = y_new;
            t = if dt - t_new < 1e-15 * dt { dt } else { t_new };
            if plastic {
                lambda = trial_multiplier(m, &m.chi(&st.eps_at(t), &y[..n]), &st.eps_dot)?
                    .0
                    .max(0.0);
                if y_end.abs() <= 10.0 * tol {
                    let projected = m.project_to_yield(&st.eps_at(t), &y[..n]);
                    y[..n].copy_from_slice(&projected);
                    y_end = 0.0;
                }
            } else {
                lambda = 0.0;
            }
            if y_end > 10.0 * tol {
                return Err(Error::YieldDrift { y: y_end });
            }
        }
        let factor = if err_norm == 0.0 { 5.0 } else { 0.9 * err_norm.powf(-1.0 / 3.0) };
        h *= factor.clamp(0.2, 5.0);
    }

    let eps: Vec<f64> = s.eps.iter().zip(d_eps).map(|(a, b)| a + b).collect();
    let zeta = y[..n].to_vec();
    let y_final = m.yield_value(&eps, &zeta);
    if y_final > tol {
        if y_final <= 10.0 * tol {
            let zeta = m.project_to_yield(&eps, &zeta);
            y[..n].copy_from_slice(&zeta);
        } else {
            return Err(Error::YieldDrift { y: y_final });
        }
    }
    let mut state = MaterialState::new(m, eps, y[..n].to_vec());
    state.lambda = lambda;
    Ok(StepOutcome {
        state,
        sigma_mean: y[n..2 * n].iter().map(|v| v / dt).collect(),
        dissipated: y[2 * n],
        substeps,
    })
}

/// Reference response along a path of increments; the result has `1 + increments.len()` states.
pub fn integrate_path(
    m: &Material,
    start: &MaterialState,
    increments: &[Vec<f64>],
    dt: f64,
) -> Result<Vec<MaterialState>> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    out.push(start.clone());
    for d in increments {
        let next = integrate_step(m, out.last().expect("non-empty"), d, dt)?.state;
        out.push(next);
    }
    Ok(out)
}
