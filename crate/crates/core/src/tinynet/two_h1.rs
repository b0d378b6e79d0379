//! The 2-h-1 classifier: one hidden layer of width `h` with ReLU or
//! sigmoid units and a sigmoid output.
//!
//! Flat order: `[w1 row-major (h x 2), b1, v, c]`. With `h = 2` and
//! sigmoid activation this architecture specializes to the 2-2-1 network,
//! and the forward pass uses the same accumulation order so outputs agree
//! bit for bit.

use serde::{Deserialize, Serialize};

use super::{check_finite, classification_accuracy, relu, sigmoid};
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => relu(z),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative in terms of the pre-activation `z` and activation `a`,
    /// with `ReLU'(0) = 0`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::InvalidInput(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoH1Params {
    pub activation: Activation,
    pub w1: Vec<[f64; 2]>,
    pub b1: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl TwoH1Params {
    pub fn validate(&self) -> Result<()> {
        let h = self.w1.len();
        if h == 0 {
            return Err(Error::Architecture("two_h1 needs at least one hidden unit".into()));
        }
        if self.b1.len() != h || self.v.len() != h {
            return Err(Error::Architecture(format!(
                "two_h1 shape mismatch: w1 {}, b1 {}, v {}",
                h,
                self.b1.len(),
                self.v.len()
            )));
        }
        check_finite(self.flatten(), "two_h1 parameters")
    }

    pub fn hidden_units(&self) -> usize {
        self.w1.len()
    }

    pub fn param_count(&self) -> usize {
        4 * self.w1.len() + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for row in &self.w1 {
            flat.extend_from_slice(row);
        }
        flat.extend_from_slice(&self.b1);
        flat.extend_from_slice(&self.v);
        flat.push(self.c);
        flat
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let h = self.w1.len();
        if flat.len() != 4 * h + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                4 * h + 1,
                flat.len()
            )));
        }
        check_finite(flat.iter().copied(), "two_h1 parameters")?;
        Ok(Self {
            activation: self.activation,
            w1: (0..h).map(|j| [flat[2 * j], flat[2 * j + 1]]).collect(),
            b1: flat[2 * h..3 * h].to_vec(),
            v: flat[3 * h..4 * h].to_vec(),
            c: flat[4 * h],
        })
    }

    #[inline]
    pub(crate) fn logit(&self, x0: f64, x1: f64) -> f64 {
        let mut u = 0.0;
        for j in 0..self.w1.len() {
            let a = self.activation.apply(self.w1[j][0] * x0 + self.w1[j][1] * x1 + self.b1[j]);
            u += self.v[j] * a;
        }
        u + self.c
    }

    #[inline]
    pub(crate) fn output(&self, x0: f64, x1: f64) -> f64 {
        sigmoid(self.logit(x0, x1))
    }

    /// Class-1 probability at `x`; strictly inside `(0, 1)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 {
            return Err(Error::InvalidInput(format!("expected a 2-vector, got {}", x.len())));
        }
        check_finite(x.iter().copied(), "input")?;
        Ok(self.output(x[0], x[1]))
    }

    fn check_dataset(&self, d: &Dataset) -> Result<()> {
        if d.task() != Task::Classification || d.dim() != 2 {
            return Err(Error::InvalidInput(
                "two_h1 needs a 2-D binary classification dataset".into(),
            ));
        }
        Ok(())
    }

    /// Mean negative log-likelihood over the dataset.
    pub fn nll_loss(&self, d: &Dataset) -> Result<f64> {
        self.check_dataset(d)?;
        let sum: f64 =
            d.points().iter().map(|p| super::nll_term(self.logit(p.x[0], p.x[1]), p.y)).sum();
        Ok(sum / d.len() as f64)
    }

    pub fn accuracy(&self, d: &Dataset) -> Result<f64> {
        self.check_dataset(d)?;
        classification_accuracy(d, |x| self.output(x[0], x[1]))
    }

    /// Exact analytic gradient of [`Self::nll_loss`], flat order.
    pub fn grad_nll(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.grad_nll_weighted(d, 1.0 / d.len() as f64, None)
    }

    /// Gradient with an explicit per-point weight; `only_point` restricts
    /// the sum to a single datapoint (per-point SGD mode uses weight 1).
    pub(crate) fn grad_nll_weighted(
        &self,
        d: &Dataset,
        weight: f64,
        only_point: Option<usize>,
    ) -> Result<Vec<f64>> {
        self.check_dataset(d)?;
        let h = self.w1.len();
        let mut g = vec![0.0; 4 * h + 1];
        for (i, p) in d.points().iter().enumerate() {
            if let Some(only) = only_point {
                if i != only {
                    continue;
                }
            }
            let (x0, x1) = (p.x[0], p.x[1]);
            let mut u = 0.0;
            let mut zs = vec![0.0; h];
            let mut acts = vec![0.0; h];
            for j in 0..h {
                let z = self.w1[j][0] * x0 + self.w1[j][1] * x1 + self.b1[j];
                let a = self.activation.apply(z);
                zs[j] = z;
                acts[j] = a;
                u += self.v[j] * a;
            }
            let m = sigmoid(u + self.c);
            let du = (m - p.y) * weight;
            for j in 0..h {
                let t = du * self.v[j] * self.activation.derivative(zs[j], acts[j]);
                g[2 * j] += t * x0;
                g[2 * j + 1] += t * x1;
                g[2 * h + j] += t;
                g[3 * h + j] += du * acts[j];
            }
            g[4 * h] += du;
        }
        Ok(g)
    }

    /// `(unit, point)` pairs within `tol` of a ReLU activation boundary;
    /// empty for sigmoid activation.
    pub fn kink_pairs(&self, d: &Dataset, tol: f64) -> Vec<(usize, usize)> {
        if self.activation != Activation::Relu {
            return Vec::new();
        }
        let mut pairs = Vec::new();
        for (i, p) in d.points().iter().enumerate() {
            for j in 0..self.w1.len() {
                if (self.w1[j][0] * p.x[0] + self.w1[j][1] * p.x[1] + self.b1[j]).abs() <= tol {
                    pairs.push((j, i));
                }
            }
        }
        pairs
    }
}
