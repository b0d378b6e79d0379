//! k-layer deep ReLU regression stack with a scalar affine output layer.
//!
//! `h_0(x) = x`, `h_n(x) = ReLU(W_n h_{n-1}(x) + b_n)` component-wise for
//! the hidden layers, and `M(x) = W_k h_{k-1}(x) + b_k` with no ReLU on
//! the final layer. Flat order: layer by layer, weight matrix row-major,
//! then bias.

use serde::{Deserialize, Serialize};

use super::{check_finite, relu};
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    /// `out x in` weight matrix, row-major.
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl LayerParams {
    pub fn out_dim(&self) -> usize {
        self.w.len()
    }

    pub fn in_dim(&self) -> usize {
        self.w.first().map_or(0, |r| r.len())
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, &b)| row.iter().zip(input).map(|(&w, &x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepReluParams {
    layers: Vec<LayerParams>,
}

impl DeepReluParams {
    /// Validates the shape chain: consecutive layers must agree and the
    /// final layer must produce a scalar.
    pub fn new(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Architecture("deep_relu needs at least one layer".into()));
        }
        for (n, layer) in layers.iter().enumerate() {
            if layer.w.is_empty() || layer.w.iter().any(|r| r.len() != layer.in_dim()) {
                return Err(Error::Architecture(format!("layer {} has a ragged weight matrix", n + 1)));
            }
            if layer.b.len() != layer.out_dim() {
                return Err(Error::Architecture(format!(
                    "layer {} has {} biases for {} units",
                    n + 1,
                    layer.b.len(),
                    layer.out_dim()
                )));
            }
        }
        for n in 1..layers.len() {
            if layers[n].in_dim() != layers[n - 1].out_dim() {
                return Err(Error::Architecture(format!(
                    "layer {} expects {} inputs but layer {} outputs {}",
                    n + 1,
                    layers[n].in_dim(),
                    n,
                    layers[n - 1].out_dim()
                )));
            }
        }
        if layers.last().unwrap().out_dim() != 1 {
            return Err(Error::Architecture("final layer must produce a scalar".into()));
        }
        let p = Self { layers };
        check_finite(p.flatten(), "deep_relu parameters")?;
        Ok(p)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// Number of layers `k` (hidden ReLU layers plus the affine output).
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.out_dim() * (l.in_dim() + 1)).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for row in &layer.w {
                flat.extend_from_slice(row);
            }
            flat.extend_from_slice(&layer.b);
        }
        flat
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.param_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut at = 0;
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (out, inp) = (layer.out_dim(), layer.in_dim());
            let mut w = Vec::with_capacity(out);
            for _ in 0..out {
                w.push(flat[at..at + inp].to_vec());
                at += inp;
            }
            let b = flat[at..at + out].to_vec();
            at += out;
            layers.push(LayerParams { w, b });
        }
        Self::new(layers)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "expected a {}-vector, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        check_finite(x.iter().copied(), "input")
    }

    /// Hidden states `h_1 .. h_{k-1}` at `x`.
    pub fn hidden_states(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut states = Vec::with_capacity(self.layers.len() - 1);
        let mut h = x.to_vec();
        for layer in &self.layers[..self.layers.len() - 1] {
            h = layer.affine(&h).into_iter().map(relu).collect();
            states.push(h.clone());
        }
        Ok(states)
    }

    /// Exact piecewise-linear forward value.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for layer in &self.layers[..self.layers.len() - 1] {
            h = layer.affine(&h).into_iter().map(relu).collect();
        }
        Ok(self.layers.last().unwrap().affine(&h)[0])
    }

    fn check_dataset(&self, d: &Dataset) -> Result<()> {
        if d.task() != Task::Regression || d.dim() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "deep_relu needs a {}-D regression dataset",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Sum of squared residuals.
    pub fn loss(&self, d: &Dataset) -> Result<f64> {
        self.check_dataset(d)?;
        let mut loss = 0.0;
        for p in d.points() {
            let r = self.forward(&p.x)? - p.y;
            loss += r * r;
        }
        Ok(loss)
    }

    /// Analytic backprop gradient with `ReLU'(0) = 0`, flat order.
    pub fn grad(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_dataset(d)?;
        let k = self.layers.len();
        let mut g = vec![0.0; self.param_count()];
        // flat offsets per layer
        let mut offsets = Vec::with_capacity(k);
        let mut at = 0;
        for layer in &self.layers {
            offsets.push(at);
            at += layer.out_dim() * (layer.in_dim() + 1);
        }
        for p in d.points() {
            // forward, caching inputs to each layer and pre-activations
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(k);
            let mut pre: Vec<Vec<f64>> = Vec::with_capacity(k);
            let mut h = p.x.clone();
            for layer in &self.layers {
                inputs.push(h.clone());
                let z = layer.affine(&h);
                pre.push(z.clone());
                h = z;
                if inputs.len() < k {
                    h = h.into_iter().map(relu).collect();
                }
            }
            let out = pre[k - 1][0];
            let mut delta = vec![2.0 * (out - p.y)];
            for n in (0..k).rev() {
                let layer = &self.layers[n];
                let off = offsets[n];
                let inp = &inputs[n];
                let in_dim = layer.in_dim();
                for (u, &du) in delta.iter().enumerate() {
                    for (i, &x) in inp.iter().enumerate() {
                        g[off + u * in_dim + i] += du * x;
                    }
                    g[off + layer.out_dim() * in_dim + u] += du;
                }
                if n > 0 {
                    let mut prev = vec![0.0; in_dim];
                    for (u, &du) in delta.iter().enumerate() {
                        for i in 0..in_dim {
                            prev[i] += layer.w[u][i] * du;
                        }
                    }
                    // gate by the ReLU of layer n-1 (pre[n-1] holds its z)
                    for (i, slot) in prev.iter_mut().enumerate() {
                        if pre[n - 1][i] <= 0.0 {
                            *slot = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok(g)
    }

    /// `(unit, point)` pairs with a hidden pre-activation within `tol` of
    /// zero; unit indices count units across hidden layers in order.
    pub fn kink_pairs(&self, d: &Dataset, tol: f64) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (i, p) in d.points().iter().enumerate() {
            let mut h = p.x.clone();
            let mut unit_base = 0;
            for layer in &self.layers[..self.layers.len() - 1] {
                let z = layer.affine(&h);
                for (u, &zu) in z.iter().enumerate() {
                    if zu.abs() <= tol {
                        pairs.push((unit_base + u, i));
                    }
                }
                unit_base += layer.out_dim();
                h = z.into_iter().map(relu).collect();
            }
        }
        pairs
    }
}
