//! Free energy, dissipation and yield function of the two material families.
//!
//! Both are written in terms of total strain `ε` and plastic strain `ζ`. The
//! dissipative stress `X` equals `χ = -∂F/∂ζ` (Ziegler orthogonality), so the
//! yield function is evaluated on `χ` directly.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 1D spring-slider with linear kinematic hardening.
///
/// `F = E/2 (ε - ζ)² + H/2 ζ²`, `D = k |ζ̇|`, `y = |σ - Hζ| / k - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model1D {
    /// Young's modulus, Pa.
    pub e: f64,
    /// Kinematic hardening modulus, Pa (negative for softening).
    pub h: f64,
    /// Slider threshold, Pa.
    pub k: f64,
}

/// Von Mises with linear kinematic hardening, in principal axes.
///
/// `F = 9K/2 (ε_p - ζ_p)² + G (e - z)·(e - z) + H/2 z·z`, `D = √2 k |ż|`,
/// `y = |X'| - √2 k` with `X' = 2G (e - z) - H z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model3D {
    /// Bulk modulus, Pa.
    pub bulk: f64,
    /// Shear modulus, Pa.
    pub shear: f64,
    /// Yield stress in simple shear, Pa.
    pub k: f64,
    /// Kinematic hardening modulus, Pa.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials1D {
    pub f: f64,
    pub d: f64,
    pub sigma: f64,
    pub chi: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials3D {
    pub f: f64,
    pub d: f64,
    pub sigma: [f64; 3],
    /// Deviatoric dissipative stress `X'`.
    pub x_dev: [f64; 3],
    pub y: f64,
}

impl Model1D {
    pub fn new(e: f64, h: f64, k: f64) -> Result<Self> {
        let m = Self { e, h, k };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0 && self.k > 0.0 && self.e + self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!(
                "1D model needs E > 0, k > 0, E + H > 0 (E={}, H={}, k={})",
                self.e, self.h, self.k
            )));
        }
        Ok(())
    }

    pub fn potentials(&self, eps: f64, zeta: f64, zeta_dot: f64) -> Potentials1D {
        let el = eps - zeta;
        let sigma = self.e * el;
        let chi = sigma - self.h * zeta;
        Potentials1D {
            f: 0.5 * self.e * el * el + 0.5 * self.h * zeta * zeta,
            d: self.k * zeta_dot.abs(),
            sigma,
            chi,
            y: chi.abs() / self.k - 1.0,
        }
    }
}

impl Model3D {
    pub fn new(bulk: f64, shear: f64, k: f64, h: f64) -> Result<Self> {
        let m = Self { bulk, shear, k, h };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bulk > 0.0
            && self.shear > 0.0
            && self.k > 0.0
            && 2.0 * self.shear + self.h > 0.0
            && self.h.is_finite())
        {
            return Err(Error::Config(format!(
                "3D model needs K, G, k > 0 and 2G + H > 0 (K={}, G={}, k={}, H={})",
                self.bulk, self.shear, self.k, self.h
            )));
        }
        Ok(())
    }

    pub fn potentials(&self, eps: [f64; 3], zeta: [f64; 3], zeta_dot: [f64; 3]) -> Potentials3D {
        let (ep, e) = split(&eps);
        let (zp, z) = split(&zeta);
        let (_, zd) = split(&zeta_dot);
        let g = self.shear;
        let mut sigma = [0.0; 3];
        let mut x_dev = [0.0; 3];
        let mut dev_energy = 0.0;
        for i in 0..3 {
            let el = e[i] - z[i];
            sigma[i] = 3.0 * self.bulk * (ep - zp) + 2.0 * g * el;
            x_dev[i] = 2.0 * g * el - self.h * z[i];
            dev_energy += g * el * el + 0.5 * self.h * z[i] * z[i];
        }
        Potentials3D {
            f: 4.5 * self.bulk * (ep - zp) * (ep - zp) + dev_energy,
            d: self.k * std::f64::consts::SQRT_2 * norm(&zd),
            sigma,
            x_dev,
            y: norm(&x_dev) - std::f64::consts::SQRT_2 * self.k,
        }
    }
}

fn split(v: &[f64]) -> (f64, [f64; 3]) {
    let p = (v[0] + v[1] + v[2]) / 3.0;
    (p, [v[0] - p, v[1] - p, v[2] - p])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Deviatoric part of a principal 3-vector.
pub fn deviator(v: &[f64]) -> [f64; 3] {
    split(v).1
}

/// Either material family, with a uniform slice-based interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Material {
    #[serde(rename = "1d")]
    OneD(Model1D),
    #[serde(rename = "3d")]
    ThreeD(Model3D),
}

/// Named parameter sets: `1D-1/2/3` (perfect plastic, hardening, softening) and `3D-1/2/3`.
pub const CASES: [&str; 6] = ["1D-1", "1D-2", "1D-3", "3D-1", "3D-2", "3D-3"];

impl Material {
    pub fn case(name: &str) -> Result<Self> {
        let gpa = 1e9;
        let mpa = 1e6;
        let h = match name.get(3..) {
            Some("1") => 0.0,
            Some("2") => 10.0 * gpa,
            Some("3") => -10.0 * gpa,
            _ => return Err(Error::Config(format!("unknown material case `{name}`"))),
        };
        match name.get(..3) {
            Some("1D-") => Ok(Material::OneD(Model1D {
                e: 200.0 * gpa,
                h,
                k: 200.0 * mpa,
            })),
            Some("3D-") => Ok(Material::ThreeD(Model3D {
                bulk: 167.0 * gpa,
                shear: 77.0 * gpa,
                k: 140.0 * mpa,
                h,
            })),
            _ => Err(Error::Config(format!("unknown material case `{name}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Material::OneD(m) => m.validate(),
            Material::ThreeD(m) => m.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Material::OneD(_) => 1,
            Material::ThreeD(_) => 3,
        }
    }

    /// Yield strength `k`, Pa.
    pub fn k(&self) -> f64 {
        match self {
            Material::OneD(m) => m.k,
            Material::ThreeD(m) => m.k,
        }
    }

    /// Elastic stiffness scale used to turn stress tolerances into strain tolerances.
    pub fn stiffness(&self) -> f64 {
        match self {
            Material::OneD(m) => m.e,
            Material::ThreeD(m) => 2.0 * m.shear,
        }
    }

    /// Kinematic hardening modulus `H`, Pa.
    pub fn hardening(&self) -> f64 {
        match self {
            Material::OneD(m) => m.h,
            Material::ThreeD(m) => m.h,
        }
    }

    /// Tolerance on `y`: `1e-8` of the yield stress, in the units of `y`.
    pub fn y_tol(&self) -> f64 {
        match self {
            Material::OneD(_) => 1e-8,
            Material::ThreeD(m) => 1e-8 * m.k,
        }
    }

    pub fn free_energy(&self, eps: &[f64], zeta: &[f64]) -> f64 {
        match self {
            Material::OneD(m) => m.potentials(eps[0], zeta[0], 0.0).f,
            Material::ThreeD(m) => m.potentials(arr(eps), arr(zeta), [0.0; 3]).f,
        }
    }

    pub fn stress(&self, eps: &[f64], zeta: &[f64]) -> Vec<f64> {
        match self {
            Material::OneD(m) => vec![m.potentials(eps[0], zeta[0], 0.0).sigma],
            Material::ThreeD(m) => m.potentials(arr(eps), arr(zeta), [0.0; 3]).sigma.to_vec(),
        }
    }

    /// `χ = -∂F/∂ζ`.
    pub fn chi(&self, eps: &[f64], zeta: &[f64]) -> Vec<f64> {
        match self {
            Material::OneD(m) => vec![m.potentials(eps[0], zeta[0], 0.0).chi],
            Material::ThreeD(m) => {
                let (_, z) = split(zeta);
                let s = m.potentials(arr(eps), arr(zeta), [0.0; 3]).sigma;
                (0..3).map(|i| s[i] - m.h * z[i]).collect()
            }
        }
    }

    pub fn dissipation(&self, zeta_dot: &[f64]) -> f64 {
        match self {
            Material::OneD(m) => m.k * zeta_dot[0].abs(),
            Material::ThreeD(m) => m.k * std::f64::consts::SQRT_2 * norm(&split(zeta_dot).1),
        }
    }

    /// Yield function of the dissipative stress.
    pub fn yield_of_chi(&self, chi: &[f64]) -> f64 {
        match self {
            Material::OneD(m) => chi[0].abs() / m.k - 1.0,
            Material::ThreeD(m) => norm(&split(chi).1) - std::f64::consts::SQRT_2 * m.k,
        }
    }

    pub fn yield_value(&self, eps: &[f64], zeta: &[f64]) -> f64 {
        self.yield_of_chi(&self.chi(eps, zeta))
    }

    /// `∂y/∂X`. At `X' = 0` (3D) or `X = 0` (1D) the positive branch is used.
    pub fn yield_gradient(&self, chi: &[f64]) -> Vec<f64> {
        match self {
            Material::OneD(m) => vec![if chi[0] < 0.0 { -1.0 } else { 1.0 } / m.k],
            Material::ThreeD(_) => {
                let d = split(chi).1;
                let n = norm(&d);
                if n > 0.0 {
                    d.iter().map(|v| v / n).collect()
                } else {
                    let s = 1.0 / 6f64.sqrt();
                    vec![2.0 * s, -s, -s]
                }
            }
        }
    }

    /// `∂²F/∂ε∂ε`, row-major `dim x dim`.
    pub fn hess_ee(&self) -> Vec<f64> {
        match self {
            Material::OneD(m) => vec![m.e],
            Material::ThreeD(m) => iso(m.bulk, 2.0 * m.shear),
        }
    }

    /// `∂²F/∂ε∂ζ`.
    pub fn hess_ez(&self) -> Vec<f64> {
        match self {
            Material::OneD(m) => vec![-m.e],
            Material::ThreeD(m) => iso(-m.bulk, -2.0 * m.shear),
        }
    }

    /// `∂²F/∂ζ∂ζ`.
    pub fn hess_zz(&self) -> Vec<f64> {
        match self {
            Material::OneD(m) => vec![m.e + m.h],
            Material::ThreeD(m) => iso(m.bulk, 2.0 * m.shear + m.h),
        }
    }

    /// Plastic strain that puts `(eps, ζ)` on `y = 0` by scaling `X'` radially.
    ///
    /// Only the deviatoric part of `ζ` changes.
    pub fn project_to_yield(&self, eps: &[f64], zeta: &[f64]) -> Vec<f64> {
        let chi = self.chi(eps, zeta);
        match self {
            Material::OneD(m) => {
                let s = if chi[0] < 0.0 { -1.0 } else { 1.0 };
                vec![(m.e * eps[0] - s * m.k) / (m.e + m.h)]
            }
            Material::ThreeD(m) => {
                let (zp, _) = split(zeta);
                let (_, e) = split(eps);
                let n = self.yield_gradient(&chi);
                let r = std::f64::consts::SQRT_2 * m.k;
                let c = 2.0 * m.shear + m.h;
                (0..3)
                    .map(|i| zp + (2.0 * m.shear * e[i] - r * n[i]) / c)
                    .collect()
            }
        }
    }
}

fn arr(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// `a 11ᵀ + b (I - 11ᵀ/3)`.
fn iso(a: f64, b: f64) -> Vec<f64> {
    let mut m = vec![a - b / 3.0; 9];
    for i in 0..3 {
        m[4 * i] += b;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_hand_values() {
        let m = Model1D::new(200e9, 0.0, 200e6).unwrap();
        let p = m.potentials(1e-3, 0.0, 0.0);
        assert!((p.f - 1.0e5).abs() < 1e-9);
        assert_eq!((p.sigma, p.chi, p.y, p.d), (200e6, 200e6, 0.0, 0.0));
        assert_eq!(m.potentials(0.0, 0.0, 0.0), Potentials1D { f: 0.0, d: 0.0, sigma: 0.0, chi: 0.0, y: -1.0 });

        let m2 = Model1D::new(200e9, 10e9, 200e6).unwrap();
        let p = m2.potentials(2e-3, 1e-3, 0.0);
        assert!((p.sigma - 200e6).abs() < 1e-6);
        assert!((p.chi - 190e6).abs() < 1e-6);
        assert!((p.y + 0.05).abs() < 1e-12);
    }

    #[test]
    fn three_d_hand_values() {
        let Material::ThreeD(m) = Material::case("3D-1").unwrap() else { unreachable!() };
        let p = m.potentials([1e-3; 3], [0.0; 3], [0.0; 3]);
        for s in p.sigma {
            assert!((s - 501e6).abs() < 1e-3);
        }
        assert!((p.y + std::f64::consts::SQRT_2 * m.k).abs() < 1e-6);

        let gamma = m.k / (2.0 * m.shear);
        let p = m.potentials([gamma, -gamma, 0.0], [0.0; 3], [0.0; 3]);
        assert!(p.y.abs() < 1e-6, "{}", p.y);
    }

    #[test]
    fn hessians_match_stress_differences() {
        for case in CASES {
            let mat = Material::case(case).unwrap();
            let n = mat.dim();
            let eps: Vec<f64> = (0..n).map(|i| 1e-3 * (i as f64 + 0.3)).collect();
            let zeta: Vec<f64> = (0..n).map(|i| 2e-4 * (1.0 - i as f64)).collect();
            let h = 1e-7;
            let (hee, hez, hzz) = (mat.hess_ee(), mat.hess_ez(), mat.hess_zz());
            for j in 0..n {
                let mut ep = eps.clone();
                ep[j] += h;
                let mut zp = zeta.clone();
                zp[j] += h;
                let s0 = mat.stress(&eps, &zeta);
                let c0 = mat.chi(&eps, &zeta);
                let se = mat.stress(&ep, &zeta);
                let sz = mat.stress(&eps, &zp);
                let cz = mat.chi(&eps, &zp);
                for i in 0..n {
                    let scale = mat.stiffness();
                    assert!(((se[i] - s0[i]) / h - hee[i * n + j]).abs() < 1e-5 * scale);
                    assert!(((sz[i] - s0[i]) / h - hez[i * n + j]).abs() < 1e-5 * scale);
                    assert!((-(cz[i] - c0[i]) / h - hzz[i * n + j]).abs() < 1e-5 * scale);
                }
            }
        }
    }

    #[test]
    fn projection_lands_on_surface() {
        for case in CASES {
            let mat = Material::case(case).unwrap();
            let n = mat.dim();
            let eps: Vec<f64> = (0..n).map(|i| 3e-3 * (i as f64 - 0.7)).collect();
            let zeta = vec![0.0; n];
            let z = mat.project_to_yield(&eps, &zeta);
            assert!(mat.yield_value(&eps, &z).abs() <= mat.y_tol(), "{case}");
        }
    }

    #[test]
    fn unknown_case() {
        assert!(Material::case("2D-1").is_err());
        assert!(Material::case("1D-4").is_err());
    }
}
