//! Rate form of the constitutive law with the plastic consistency condition.

use serde::{Deserialize, Serialize};

use super::Material;
use crate::{Error, Result};

/// Point on a loading history. `x` is the dissipative stress and equals `χ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialState {
    pub eps: Vec<f64>,
    pub zeta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub x: Vec<f64>,
    /// Plastic multiplier rate of the last evaluation (0 when elastic).
    pub lambda: f64,
}

impl MaterialState {
    /// State with stresses recomputed from the potentials.
    pub fn new(m: &Material, eps: Vec<f64>, zeta: Vec<f64>) -> Self {
        let sigma = m.stress(&eps, &zeta);
        let x = m.chi(&eps, &zeta);
        Self { eps, zeta, sigma, x, lambda: 0.0 }
    }

    pub fn origin(m: &Material) -> Self {
        Self::new(m, vec![0.0; m.dim()], vec![0.0; m.dim()])
    }

    pub fn yield_value(&self, m: &Material) -> f64 {
        m.yield_of_chi(&self.x)
    }

    pub fn free_energy(&self, m: &Material) -> f64 {
        m.free_energy(&self.eps, &self.zeta)
    }
}

/// Time derivatives at a state under a prescribed strain rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub sigma_dot: Vec<f64>,
    /// `-Ẋ`.
    pub minus_x_dot: Vec<f64>,
    pub zeta_dot: Vec<f64>,
    pub lambda: f64,
    pub plastic: bool,
}

fn matvec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

fn matvec_t(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j] * x[i]).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trial multiplier `λ = -(C_ε·ε̇)/B` at dissipative stress `chi`.
///
/// `y` depends on `X` only, so `C_ε = -∂ζεF ∂y/∂X` and
/// `B = -∂y/∂X·∂ζζF ∂y/∂X`.
pub fn trial_multiplier(m: &Material, chi: &[f64], eps_dot: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = m.yield_gradient(chi);
    let hez = m.hess_ez();
    let c_eps: Vec<f64> = matvec(&hez, &n).iter().map(|v| -v).collect();
    let b = -dot(&n, &matvec(&m.hess_zz(), &n));
    let scale = m.stiffness() * dot(&n, &n);
    if !(b.abs() > 1e-12 * scale) {
        return Err(Error::SingularConsistency(b));
    }
    Ok((-dot(&c_eps, eps_dot) / b, n))
}

fn assemble(m: &Material, eps_dot: &[f64], zeta_dot: Vec<f64>, lambda: f64, plastic: bool) -> Rates {
    let (hee, hez, hzz) = (m.hess_ee(), m.hess_ez(), m.hess_zz());
    let a = matvec(&hee, eps_dot);
    let b = matvec(&hez, &zeta_dot);
    let sigma_dot = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let c = matvec_t(&hez, eps_dot);
    let d = matvec(&hzz, &zeta_dot);
    let minus_x_dot = c.iter().zip(&d).map(|(x, y)| x + y).collect();
    Rates { sigma_dot, minus_x_dot, zeta_dot, lambda, plastic }
}

/// Rates at `s` for strain rate `eps_dot`.
///
/// Elastic when `y < -tol`, or on the surface with a non-positive trial
/// multiplier; plastic otherwise.
pub fn incremental_rates(m: &Material, s: &MaterialState, eps_dot: &[f64]) -> Result<Rates> {
    let y = s.yield_value(m);
    let tol = m.y_tol();
    if y > tol {
        return Err(Error::StateInvalid { y, tol });
    }
    let n = m.dim();
    if y < -tol {
        return Ok(assemble(m, eps_dot, vec![0.0; n], 0.0, false));
    }
    let (lambda, grad) = trial_multiplier(m, &s.x, eps_dot)?;
    if lambda <= 0.0 {
        return Ok(assemble(m, eps_dot, vec![0.0; n], 0.0, false));
    }
    let zeta_dot = grad.iter().map(|g| lambda * g).collect();
    Ok(assemble(m, eps_dot, zeta_dot, lambda, true))
}

/// Plastic-branch `ζ̇` with the multiplier clipped at zero; used inside integrator stages.
pub(crate) fn plastic_zeta_dot(m: &Material, chi: &[f64], eps_dot: &[f64]) -> Result<Vec<f64>> {
    let (lambda, grad) = trial_multiplier(m, chi, eps_dot)?;
    let lambda = lambda.max(0.0);
    Ok(grad.iter().map(|g| lambda * g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_yield(case: &str) -> (Material, MaterialState) {
        let m = Material::case(case).unwrap();
        let Material::OneD(p) = m else { unreachable!() };
        (m, MaterialState::new(&m, vec![p.k / p.e], vec![0.0]))
    }

    #[test]
    fn perfect_plastic_plateau() {
        let (m, s) = at_yield("1D-1");
        let r = incremental_rates(&m, &s, &[1e-4]).unwrap();
        assert!(r.plastic);
        assert!(r.sigma_dot[0].abs() < 1e-6);
        assert!((r.zeta_dot[0] - 1e-4).abs() < 1e-18);
        assert!((m.dissipation(&r.zeta_dot) - 2.0e4).abs() < 1e-8);
    }

    #[test]
    fn hardening_tangent() {
        let (m, s) = at_yield("1D-2");
        let r = incremental_rates(&m, &s, &[1e-4]).unwrap();
        let expected = 200e9 * 10e9 / 210e9 * 1e-4;
        assert!((r.sigma_dot[0] - expected).abs() < 1e-9 * expected);
        assert!((r.sigma_dot[0] - 9.5238e5).abs() < 1.0);
    }

    #[test]
    fn unloading_is_elastic() {
        let (m, s) = at_yield("1D-1");
        let r = incremental_rates(&m, &s, &[-1e-4]).unwrap();
        assert!(!r.plastic);
        assert_eq!(r.zeta_dot, vec![0.0]);
        assert_eq!(r.sigma_dot, vec![-200e9 * 1e-4]);
    }

    #[test]
    fn outside_surface_is_rejected() {
        let m = Material::case("1D-1").unwrap();
        let s = MaterialState::new(&m, vec![2e-3], vec![0.0]);
        assert!(matches!(incremental_rates(&m, &s, &[0.0]), Err(Error::StateInvalid { .. })));
    }

    #[test]
    fn three_d_flow_is_deviatoric() {
        let m = Material::case("3D-2").unwrap();
        let eps = vec![2e-3, -1e-3, 0.5e-3];
        let zeta = m.project_to_yield(&eps, &[0.0; 3]);
        let s = MaterialState::new(&m, eps, zeta);
        let r = incremental_rates(&m, &s, &[1e-4, -2e-4, 0.0]).unwrap();
        assert!(r.plastic);
        let tr: f64 = r.zeta_dot.iter().sum();
        assert!(tr.abs() < 1e-18);
        // consistency: the flow keeps y stationary, d|X'|/dt = n·(-(-Ẋ)) = 0
        let n = m.yield_gradient(&s.x);
        let ydot: f64 = -n.iter().zip(&r.minus_x_dot).map(|(a, b)| a * b).sum::<f64>();
        assert!(ydot.abs() < 1e-6 * m.k(), "{ydot}");
    }
}
