#![allow(dead_code)]

use rand::Rng;
use tann::hyperplast::{Material, Model1D, Sample};
use tann::netcore::{Activation, Example, LossSpec, Network, Normalization};

pub fn relative_error(analytic: f64, reference: f64) -> f64 {
    (analytic - reference).abs() / (analytic.abs() + 1e-12)
}

pub fn random_net<R: Rng>(
    rng: &mut R,
    input: usize,
    hidden: &[usize],
    act: Activation,
    output: usize,
    with_norms: bool,
) -> Network {
    let mut net = Network::new(input, hidden, act, output, rng);
    for layer in &mut net.layers {
        for b in &mut layer.biases {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let last = net.layers.len() - 1;
    net.layers[last].biases.iter_mut().for_each(|b| *b = 0.0);
    if with_norms {
        let norm = |rng: &mut R, n: usize| Normalization {
            shift: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            scale: (0..n).map(|_| rng.random_range(0.5..3.0)).collect(),
        };
        net.input_norm = norm(rng, input);
        net.output_norm = norm(rng, output);
    }
    net
}

/// True when every hidden pre-activation is at least 1e-3 away from a breakpoint.
pub fn smooth_at(net: &Network, x: &[f64]) -> bool {
    let mut p: Vec<f64> = x
        .iter()
        .zip(net.input_norm.shift.iter().zip(&net.input_norm.scale))
        .map(|(v, (m, s))| (v - m) / s)
        .collect();
    for layer in &net.layers {
        let mut next = Vec::with_capacity(layer.rows);
        for r in 0..layer.rows {
            let z = layer.biases[r] + (0..layer.cols).map(|c| layer.weight(r, c) * p[c]).sum::<f64>();
            if layer.activation != Activation::Linear && z.abs() <= 1e-3 {
                return false;
            }
            next.push(layer.activation.eval(z).a);
        }
        p = next;
    }
    true
}

/// Central differences of `forward`, row-major `outputs x inputs`.
pub fn fd_jacobian(net: &Network, x: &[f64], h: f64) -> Vec<f64> {
    let n_in = x.len();
    let mut out = vec![0.0; net.output_dim * n_in];
    for j in 0..n_in {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (net.forward(&xp).unwrap(), net.forward(&xm).unwrap());
        for o in 0..net.output_dim {
            out[o * n_in + j] = (fp[o] - fm[o]) / (2.0 * h);
        }
    }
    out
}

pub fn total_loss(net: &Network, batch: &[Example], spec: &LossSpec) -> f64 {
    spec.total(&spec.term_errors(net, batch).unwrap())
}

pub fn fd_param_gradient(net: &Network, batch: &[Example], spec: &LossSpec, h: f64) -> Vec<f64> {
    let p0 = net.params();
    let mut probe = net.clone();
    (0..p0.len())
        .map(|i| {
            let mut p = p0.clone();
            p[i] = p0[i] + h;
            probe.set_params(&p);
            let lp = total_loss(&probe, batch, spec);
            p[i] = p0[i] - h;
            probe.set_params(&p);
            let lm = total_loss(&probe, batch, spec);
            (lp - lm) / (2.0 * h)
        })
        .collect()
}

/// Closed-form return map for the 1D spring-slider with linear kinematic hardening.
///
/// Elastic predictor, then a plastic corrector with the consistent multiplier
/// `dζ = f / (E + H)`. Exact for piecewise-linear strain paths because the model is
/// linear on each branch.
pub struct ReturnMap1D {
    pub e: f64,
    pub h: f64,
    pub k: f64,
    pub eps: f64,
    pub zeta: f64,
}

impl ReturnMap1D {
    pub fn new(m: &Model1D) -> Self {
        Self { e: m.e, h: m.h, k: m.k, eps: 0.0, zeta: 0.0 }
    }

    pub fn stress(&self) -> f64 {
        self.e * (self.eps - self.zeta)
    }

    pub fn step(&mut self, d_eps: f64) {
        self.eps += d_eps;
        let trial = self.e * (self.eps - self.zeta) - self.h * self.zeta;
        let f = trial.abs() - self.k;
        if f > 0.0 {
            self.zeta += trial.signum() * f / (self.e + self.h);
        }
    }
}

/// `|ΔF - σ̄·Δε + D Δt|` over `max(|ΔF|, k|Δε|)`, with `D Δt` the dissipation integrated over the step.
pub fn energy_residual(m: &Material, s: &Sample) -> f64 {
    let e = s.energy.as_ref().unwrap();
    let work: f64 = e.sigma_mean.iter().zip(&s.d_eps).map(|(a, b)| a * b).sum();
    let df = s.f_next - e.f_t;
    let d_eps_norm = s.d_eps.iter().map(|v| v * v).sum::<f64>().sqrt();
    (df - work + e.dissipated).abs() / df.abs().max(m.k() * d_eps_norm).max(f64::MIN_POSITIVE)
}
