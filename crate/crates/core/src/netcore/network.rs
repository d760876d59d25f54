//! Dense feed-forward network with exact input Jacobians.
//!
//! Layer `l` computes `z = W p + b`, `p' = A(z)`. Inputs are z-scored with a
//! frozen [`Normalization`] before the first layer and outputs are mapped back
//! to physical units after the last one.
//!
//! The Jacobian is obtained by pushing one tangent per input through the layers
//! (`dz = W dp`, `dp' = A'(z) dz`). [`Network::backward`] reverses both the
//! primal and the tangent sweep, which is where `A''` enters the parameter
//! gradients of any loss defined on the Jacobian.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::{Error, Result};

/// Per-feature affine map `x_hat = (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Z-score statistics of `rows`. Features with (near) zero spread keep unit scale.
    pub fn fit<'a, I>(dim: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut n = 0usize;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for row in rows {
            n += 1;
            for (j, &x) in row.iter().enumerate().take(dim) {
                let delta = x - mean[j];
                mean[j] += delta / n as f64;
                m2[j] += delta * (x - mean[j]);
            }
        }
        if n == 0 {
            return Self::identity(dim);
        }
        let scale = m2
            .iter()
            .zip(&mean)
            .map(|(&s, &m)| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 * m.abs().max(f64::MIN_POSITIVE) && sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { shift: mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    fn validate(&self, dim: usize, what: &str) -> Result<()> {
        if self.shift.len() != dim || self.scale.len() != dim {
            return Err(Error::Shape(format!(
                "{what} normalization has {} / {} entries, expected {dim}",
                self.shift.len(),
                self.scale.len()
            )));
        }
        if self
            .scale
            .iter()
            .any(|&s| !(s.is_finite() && s > 0.0))
            || self.shift.iter().any(|s| !s.is_finite())
        {
            return Err(Error::Shape(format!(
                "{what} normalization must be finite with positive scales"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(cols: usize, rows: usize, activation: Activation) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            biases: vec![0.0; rows],
            activation,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        cols: usize,
        rows: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (cols + rows) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let weights = (0..rows * cols).map(|_| dist.sample(rng)).collect();
        Self {
            rows,
            cols,
            weights,
            biases: vec![0.0; rows],
            activation,
        }
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Shape(format!("layer {index} has an empty dimension")));
        }
        if self.weights.len() != self.rows * self.cols || self.biases.len() != self.rows {
            return Err(Error::Shape(format!(
                "layer {index}: {}x{} weights / {} biases inconsistent with {}x{}",
                self.weights.len() / self.cols.max(1),
                self.cols,
                self.biases.len(),
                self.rows,
                self.cols
            )));
        }
        if self
            .weights
            .iter()
            .chain(&self.biases)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Shape(format!("layer {index} has non-finite parameters")));
        }
        Ok(())
    }

    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            *o = self.biases[r] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn linear(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn linear_transposed(&self, adjoint: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &a) in adjoint.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += a * w;
            }
        }
    }
}

/// Layered feed-forward model with frozen input/output normalization.
///
/// The output layer bias is held at zero unless `train_output_bias` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input_dim: usize,
    pub output_dim: usize,
    pub input_norm: Normalization,
    pub output_norm: Normalization,
    pub layers: Vec<DenseLayer>,
    #[serde(default)]
    pub train_output_bias: bool,
}

/// Intermediate values of one evaluation, kept for [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub output: Vec<f64>,
    /// Row-major `output_dim x input_dim`, present when requested.
    pub jacobian: Option<Vec<f64>>,
    /// `acts[0]` is the normalized input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
    /// `tan_z[l][j]`: tangent of layer `l` pre-activations w.r.t. input `j`.
    tan_z: Vec<Vec<Vec<f64>>>,
    /// `tan_p[l][j]`: tangent of layer `l` outputs.
    tan_p: Vec<Vec<Vec<f64>>>,
}

impl Network {
    /// `input -> hidden... -> output` with Glorot init from `rng` and a linear output layer.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        hidden_activation: Activation,
        output_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut cols = input_dim;
        for &width in hidden {
            layers.push(DenseLayer::glorot(cols, width, hidden_activation, rng));
            cols = width;
        }
        layers.push(DenseLayer::glorot(cols, output_dim, Activation::Linear, rng));
        Self {
            input_dim,
            output_dim,
            input_norm: Normalization::identity(input_dim),
            output_norm: Normalization::identity(output_dim),
            layers,
            train_output_bias: false,
        }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let input_dim = layers.first().map(|l| l.cols).unwrap_or(0);
        let output_dim = layers.last().map(|l| l.rows).unwrap_or(0);
        let net = Self {
            input_dim,
            output_dim,
            input_norm: Normalization::identity(input_dim),
            output_norm: Normalization::identity(output_dim),
            layers,
            train_output_bias: false,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn with_normalization(mut self, input: Normalization, output: Normalization) -> Self {
        self.input_norm = input;
        self.output_norm = output;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        let mut cols = self.input_dim;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate(i)?;
            if layer.cols != cols {
                return Err(Error::Shape(format!(
                    "layer {i} expects {} inputs, previous layer provides {cols}",
                    layer.cols
                )));
            }
            cols = layer.rows;
        }
        if cols != self.output_dim {
            return Err(Error::Shape(format!(
                "last layer has {cols} outputs, network declares {}",
                self.output_dim
            )));
        }
        self.input_norm.validate(self.input_dim, "input")?;
        self.output_norm.validate(self.output_dim, "output")?;
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut p: Vec<f64> = input
            .iter()
            .zip(self.input_norm.shift.iter().zip(&self.input_norm.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.rows];
            layer.affine(&p, &mut z);
            for v in z.iter_mut() {
                *v = layer.activation.eval(*v).a;
            }
            p = z;
        }
        Ok(self.denormalize(&p))
    }

    /// Exact `d output / d input`, row-major `output_dim x input_dim`.
    pub fn input_jacobian(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .evaluate(input, true)?
            .jacobian
            .expect("jacobian requested"))
    }

    fn denormalize(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.output_norm.shift.iter().zip(&self.output_norm.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    /// Forward pass that keeps everything [`Network::backward`] needs.
    pub fn evaluate(&self, input: &[f64], with_jacobian: bool) -> Result<Evaluation> {
        self.check_input(input)?;
        let n_in = self.input_dim;
        let n_layers = self.layers.len();
        let x_hat: Vec<f64> = input
            .iter()
            .zip(self.input_norm.shift.iter().zip(&self.input_norm.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();

        let mut acts = Vec::with_capacity(n_layers + 1);
        let mut d1 = Vec::with_capacity(n_layers);
        let mut d2 = Vec::with_capacity(n_layers);
        let mut tan_z = Vec::new();
        let mut tan_p = Vec::new();
        acts.push(x_hat);

        // Tangents of the normalized input: e_j / scale_j.
        let mut prev_tan: Vec<Vec<f64>> = if with_jacobian {
            (0..n_in)
                .map(|j| {
                    let mut t = vec![0.0; n_in];
                    t[j] = 1.0 / self.input_norm.scale[j];
                    t
                })
                .collect()
        } else {
            Vec::new()
        };

        for layer in &self.layers {
            let mut z = vec![0.0; layer.rows];
            layer.affine(acts.last().expect("input present"), &mut z);
            let mut p = vec![0.0; layer.rows];
            let mut g1 = vec![0.0; layer.rows];
            let mut g2 = vec![0.0; layer.rows];
            for k in 0..layer.rows {
                let v = layer.activation.eval(z[k]);
                p[k] = v.a;
                g1[k] = v.da;
                g2[k] = v.d2a;
            }
            if with_jacobian {
                let mut tz = Vec::with_capacity(n_in);
                let mut tp = Vec::with_capacity(n_in);
                for t in &prev_tan {
                    let mut dz = vec![0.0; layer.rows];
                    layer.linear(t, &mut dz);
                    let dp: Vec<f64> = dz.iter().zip(&g1).map(|(a, b)| a * b).collect();
                    tz.push(dz);
                    tp.push(dp);
                }
                prev_tan = tp.clone();
                tan_z.push(tz);
                tan_p.push(tp);
            }
            acts.push(p);
            d1.push(g1);
            d2.push(g2);
        }

        let output = self.denormalize(acts.last().expect("at least one layer"));
        let jacobian = with_jacobian.then(|| {
            let last = tan_p.last().expect("at least one layer");
            let mut jac = vec![0.0; self.output_dim * n_in];
            for (j, t) in last.iter().enumerate() {
                for (o, &v) in t.iter().enumerate() {
                    jac[o * n_in + j] = v * self.output_norm.scale[o];
                }
            }
            jac
        });
        Ok(Evaluation {
            output,
            jacobian,
            acts,
            d1,
            d2,
            tan_z,
            tan_p,
        })
    }

    /// Number of trainable scalars (the output bias counts only when trainable).
    pub fn trainable_count(&self) -> usize {
        let last = self.layers.len().saturating_sub(1);
        self.layers
            .iter()
            .enumerate()
            .map(|(i, l)| l.weights.len() + if self.bias_trainable(i, last) { l.biases.len() } else { 0 })
            .sum()
    }

    #[inline]
    fn bias_trainable(&self, index: usize, last: usize) -> bool {
        index != last || self.train_output_bias
    }

    /// Trainable parameters in layer order: weights then (trainable) biases.
    pub fn params(&self) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut out = Vec::with_capacity(self.trainable_count());
        for (i, l) in self.layers.iter().enumerate() {
            out.extend_from_slice(&l.weights);
            if self.bias_trainable(i, last) {
                out.extend_from_slice(&l.biases);
            }
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.trainable_count(), "parameter vector length");
        let last = self.layers.len() - 1;
        let train_out = self.train_output_bias;
        let mut offset = 0;
        for (i, l) in self.layers.iter_mut().enumerate() {
            let n = l.weights.len();
            l.weights.copy_from_slice(&params[offset..offset + n]);
            offset += n;
            if i != last || train_out {
                let m = l.biases.len();
                l.biases.copy_from_slice(&params[offset..offset + m]);
                offset += m;
            }
        }
    }

    /// Reverse sweep through an [`Evaluation`].
    ///
    /// `d_output` is `dL/d output` and `d_jacobian` (row-major, like
    /// [`Evaluation::jacobian`]) is `dL/d J`. Parameter gradients are added into
    /// `grads` (layout of [`Network::params`]); the return value is `dL/d input`.
    pub fn backward(
        &self,
        eval: &Evaluation,
        d_output: &[f64],
        d_jacobian: Option<&[f64]>,
        grads: &mut [f64],
    ) -> Vec<f64> {
        assert_eq!(d_output.len(), self.output_dim);
        assert_eq!(grads.len(), self.trainable_count());
        let n_in = self.input_dim;
        let n_layers = self.layers.len();
        let last = n_layers - 1;
        let use_tangent = d_jacobian.is_some();
        if use_tangent {
            assert!(
                eval.jacobian.is_some(),
                "jacobian adjoint needs an evaluation with jacobian"
            );
        }

        // Adjoints at the output of the last layer (normalized units).
        let mut adj_p: Vec<f64> = d_output
            .iter()
            .zip(&self.output_norm.scale)
            .map(|(g, s)| g * s)
            .collect();
        let mut adj_tp: Vec<Vec<f64>> = match d_jacobian {
            Some(dj) => (0..n_in)
                .map(|j| {
                    (0..self.output_dim)
                        .map(|o| dj[o * n_in + j] * self.output_norm.scale[o])
                        .collect()
                })
                .collect(),
            None => Vec::new(),
        };

        // Offsets of each layer block inside the flat gradient.
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for (i, l) in self.layers.iter().enumerate() {
            offsets.push(off);
            off += l.weights.len();
            if self.bias_trainable(i, last) {
                off += l.biases.len();
            }
        }

        let mut d_input_hat = vec![0.0; n_in];
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let g1 = &eval.d1[l];
            let g2 = &eval.d2[l];

            // Through the activation: p = A(z), dp_j = A'(z) dz_j.
            let mut adj_z: Vec<f64> = adj_p.iter().zip(g1).map(|(a, d)| a * d).collect();
            let mut adj_tz: Vec<Vec<f64>> = Vec::with_capacity(adj_tp.len());
            if use_tangent {
                for (j, atp) in adj_tp.iter().enumerate() {
                    let tz = &eval.tan_z[l][j];
                    for k in 0..layer.rows {
                        adj_z[k] += g2[k] * tz[k] * atp[k];
                    }
                    adj_tz.push(atp.iter().zip(g1).map(|(a, d)| a * d).collect());
                }
            }

            // Through the affine map: z = W p + b, dz_j = W dp_j.
            let p_prev = &eval.acts[l];
            let base = offsets[l];
            for r in 0..layer.rows {
                let row = &mut grads[base + r * layer.cols..base + (r + 1) * layer.cols];
                let a = adj_z[r];
                if a != 0.0 {
                    for (g, p) in row.iter_mut().zip(p_prev) {
                        *g += a * p;
                    }
                }
                for (j, atz) in adj_tz.iter().enumerate() {
                    let a = atz[r];
                    if a == 0.0 {
                        continue;
                    }
                    if l == 0 {
                        row[j] += a / self.input_norm.scale[j];
                    } else {
                        for (g, p) in row.iter_mut().zip(&eval.tan_p[l - 1][j]) {
                            *g += a * p;
                        }
                    }
                }
            }
            if self.bias_trainable(l, last) {
                let b0 = base + layer.weights.len();
                for (g, a) in grads[b0..b0 + layer.rows].iter_mut().zip(&adj_z) {
                    *g += a;
                }
            }

            let mut next_p = vec![0.0; layer.cols];
            layer.linear_transposed(&adj_z, &mut next_p);
            if l == 0 {
                d_input_hat = next_p;
            } else {
                adj_p = next_p;
                adj_tp = adj_tz
                    .iter()
                    .map(|atz| {
                        let mut v = vec![0.0; layer.cols];
                        layer.linear_transposed(atz, &mut v);
                        v
                    })
                    .collect();
            }
        }

        d_input_hat
            .iter()
            .zip(&self.input_norm.scale)
            .map(|(g, s)| g / s)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Network = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(weights: Vec<f64>, cols: usize) -> Network {
        let rows = weights.len() / cols;
        Network::from_layers(vec![DenseLayer {
            rows,
            cols,
            weights,
            biases: vec![0.0; rows],
            activation: Activation::Linear,
        }])
        .unwrap()
    }

    fn elu_chain() -> Network {
        Network::from_layers(vec![
            DenseLayer {
                rows: 1,
                cols: 1,
                weights: vec![1.0],
                biases: vec![1.0],
                activation: Activation::EluZ2,
            },
            DenseLayer {
                rows: 1,
                cols: 1,
                weights: vec![1.0],
                biases: vec![0.0],
                activation: Activation::Linear,
            },
        ])
        .unwrap()
    }

    #[test]
    fn identity_layer() {
        assert_eq!(single(vec![1.0], 1).forward(&[2.5]).unwrap(), vec![2.5]);
    }

    #[test]
    fn two_layer_chain_by_hand() {
        let net = elu_chain();
        assert_eq!(net.forward(&[1.0]).unwrap(), vec![4.0]);
        assert_eq!(net.input_jacobian(&[1.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn zero_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Network::new(3, &[5, 4], Activation::EluZ2, 2, &mut rng);
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(net.forward(&[0.3, -7.0, 12.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_jacobian() {
        let net = single(vec![3.0, -2.0], 2);
        assert_eq!(net.input_jacobian(&[0.1, 9.0]).unwrap(), vec![3.0, -2.0]);
    }

    #[test]
    fn shape_errors() {
        let net = single(vec![3.0, -2.0], 2);
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
        let bad = Network::from_layers(vec![
            DenseLayer::zeros(2, 3, Activation::EluZ2),
            DenseLayer::zeros(4, 1, Activation::Linear),
        ]);
        assert!(matches!(bad, Err(Error::Shape(_))));
    }

    #[test]
    fn normalization_enters_jacobian() {
        let net = single(vec![2.0], 1).with_normalization(
            Normalization {
                shift: vec![1.0],
                scale: vec![4.0],
            },
            Normalization {
                shift: vec![-3.0],
                scale: vec![10.0],
            },
        );
        // y = 10 * 2 * (x - 1) / 4 - 3
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![7.0]);
        assert_eq!(net.input_jacobian(&[3.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn trainable_count_skips_output_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Network::new(4, &[6], Activation::leaky_relu(), 1, &mut rng);
        assert_eq!(net.trainable_count(), 36);
        let mut with_bias = net.clone();
        with_bias.train_output_bias = true;
        assert_eq!(with_bias.trainable_count(), 37);
        let p = with_bias.params();
        let mut copy = with_bias.clone();
        copy.set_params(&p);
        assert_eq!(copy, with_bias);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Network::new(2, &[3], Activation::EluZ2, 1, &mut rng);
        let back = Network::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn normalization_fit() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0]];
        let n = Normalization::fit(2, rows.iter().map(|r| r.as_slice()));
        assert_eq!(n.shift, vec![2.0, 5.0]);
        assert_eq!(n.scale, vec![1.0, 1.0]);
    }
}
