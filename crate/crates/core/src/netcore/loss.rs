//! Composite MAE losses over network outputs and input-Jacobian entries.

use serde::{Deserialize, Serialize};

use super::{Evaluation, Network};
use crate::{Error, Result};

/// Which scalar of a network evaluation a loss entry compares against its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selector {
    Output(usize),
    /// `d output / d input`.
    Jacobian { output: usize, input: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTerm {
    pub name: String,
    pub selectors: Vec<Selector>,
    pub weight: f64,
}

/// Weighted sum of per-term mean absolute errors.
///
/// A term averages `|prediction - target|` over its selectors and over the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub terms: Vec<LossTerm>,
}

/// One input with its targets laid out term by term, selector by selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Subgradient of `|r|` with `sign(0) = 0`.
#[inline]
pub fn mae_sign(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl LossSpec {
    pub fn new(terms: Vec<LossTerm>) -> Self {
        Self { terms }
    }

    pub fn target_len(&self) -> usize {
        self.terms.iter().map(|t| t.selectors.len()).sum()
    }

    pub fn names(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.name.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    fn needs_jacobian(&self) -> bool {
        self.terms
            .iter()
            .flat_map(|t| &t.selectors)
            .any(|s| matches!(s, Selector::Jacobian { .. }))
    }

    /// Checks that every selector exists on `net` and weights are positive.
    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Config("loss has no terms".into()));
        }
        for term in &self.terms {
            if !(term.weight.is_finite() && term.weight > 0.0) {
                return Err(Error::Config(format!(
                    "loss term `{}` has weight {}",
                    term.name, term.weight
                )));
            }
            if term.selectors.is_empty() {
                return Err(Error::Config(format!("loss term `{}` selects nothing", term.name)));
            }
            for sel in &term.selectors {
                let ok = match *sel {
                    Selector::Output(k) => k < net.output_dim,
                    Selector::Jacobian { output, input } => {
                        output < net.output_dim && input < net.input_dim
                    }
                };
                if !ok {
                    return Err(Error::Config(format!(
                        "loss term `{}`: selector {sel:?} does not resolve on a {}->{} network",
                        term.name, net.input_dim, net.output_dim
                    )));
                }
            }
        }
        Ok(())
    }

    fn pick(eval: &Evaluation, n_in: usize, sel: Selector) -> f64 {
        match sel {
            Selector::Output(k) => eval.output[k],
            Selector::Jacobian { output, input } => {
                eval.jacobian.as_ref().expect("jacobian evaluated")[output * n_in + input]
            }
        }
    }

    /// Per-term (unweighted) MAE over `examples`.
    pub fn term_errors(&self, net: &Network, examples: &[Example]) -> Result<Vec<f64>> {
        let mut sums = vec![0.0; self.terms.len()];
        let jac = self.needs_jacobian();
        for ex in examples {
            self.check_example(net, ex)?;
            let eval = net.evaluate(&ex.input, jac)?;
            let mut t = 0;
            for (i, term) in self.terms.iter().enumerate() {
                for &sel in &term.selectors {
                    sums[i] += (Self::pick(&eval, net.input_dim, sel) - ex.targets[t]).abs();
                    t += 1;
                }
            }
        }
        let n = examples.len().max(1) as f64;
        Ok(self
            .terms
            .iter()
            .zip(sums)
            .map(|(term, s)| s / (n * term.selectors.len() as f64))
            .collect())
    }

    /// Weighted total of [`LossSpec::term_errors`].
    pub fn total(&self, errors: &[f64]) -> f64 {
        self.terms.iter().zip(errors).map(|(t, e)| t.weight * e).sum()
    }

    fn check_example(&self, net: &Network, ex: &Example) -> Result<()> {
        if ex.targets.len() != self.target_len() {
            return Err(Error::Shape(format!(
                "example has {} targets, loss expects {}",
                ex.targets.len(),
                self.target_len()
            )));
        }
        if ex.input.len() != net.input_dim {
            return Err(Error::Shape(format!(
                "example has {} inputs, network expects {}",
                ex.input.len(),
                net.input_dim
            )));
        }
        Ok(())
    }
}

/// Gradient of the weighted batch loss with respect to the trainable parameters of `net`.
///
/// Returned in the layout of [`Network::params`].
pub fn param_gradients(net: &Network, batch: &[&Example], spec: &LossSpec) -> Result<Vec<f64>> {
    spec.validate(net)?;
    let mut grads = vec![0.0; net.trainable_count()];
    accumulate_gradients(net, batch, spec, &mut grads)?;
    Ok(grads)
}

pub(crate) fn accumulate_gradients(
    net: &Network,
    batch: &[&Example],
    spec: &LossSpec,
    grads: &mut [f64],
) -> Result<()> {
    if batch.is_empty() {
        return Ok(());
    }
    let jac = spec.needs_jacobian();
    let n = batch.len() as f64;
    let n_in = net.input_dim;
    let mut d_out = vec![0.0; net.output_dim];
    let mut d_jac = vec![0.0; net.output_dim * n_in];
    for ex in batch {
        spec.check_example(net, ex)?;
        let eval = net.evaluate(&ex.input, jac)?;
        d_out.iter_mut().for_each(|v| *v = 0.0);
        d_jac.iter_mut().for_each(|v| *v = 0.0);
        let mut t = 0;
        for term in &spec.terms {
            let scale = term.weight / (n * term.selectors.len() as f64);
            for &sel in &term.selectors {
                let r = LossSpec::pick(&eval, n_in, sel) - ex.targets[t];
                let g = scale * mae_sign(r);
                match sel {
                    Selector::Output(k) => d_out[k] += g,
                    Selector::Jacobian { output, input } => d_jac[output * n_in + input] += g,
                }
                t += 1;
            }
        }
        net.backward(&eval, &d_out, jac.then_some(d_jac.as_slice()), grads);
    }
    Ok(())
}
