//! Single-hidden-layer ReLU regression on 1-D data.
//!
//! `M(x) = sum_j v_j * ReLU(w_j x + b_j) + c`, squared-error loss summed
//! over the dataset. Flat order: `[w_1..w_m, b_1..b_m, v_1..v_m, c]`.

use serde::{Deserialize, Serialize};

use super::{check_finite, relu};
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluRegParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl ReluRegParams {
    pub fn new(w: Vec<f64>, b: Vec<f64>, v: Vec<f64>, c: f64) -> Result<Self> {
        let p = Self { w, b, v, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.w.len();
        if m == 0 {
            return Err(Error::Architecture("relu_reg needs at least one hidden unit".into()));
        }
        if self.b.len() != m || self.v.len() != m {
            return Err(Error::Architecture(format!(
                "relu_reg shape mismatch: w {}, b {}, v {}",
                m,
                self.b.len(),
                self.v.len()
            )));
        }
        check_finite(self.flatten(), "relu_reg parameters")
    }

    pub fn hidden_units(&self) -> usize {
        self.w.len()
    }

    pub fn param_count(&self) -> usize {
        3 * self.w.len() + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend_from_slice(&self.w);
        flat.extend_from_slice(&self.b);
        flat.extend_from_slice(&self.v);
        flat.push(self.c);
        flat
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let m = self.w.len();
        if flat.len() != 3 * m + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                3 * m + 1,
                flat.len()
            )));
        }
        Self::new(flat[..m].to_vec(), flat[m..2 * m].to_vec(), flat[2 * m..3 * m].to_vec(), flat[3 * m])
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        let mut out = 0.0;
        for j in 0..self.w.len() {
            out += self.v[j] * relu(self.w[j] * x + self.b[j]);
        }
        out + self.c
    }

    fn check_dataset(&self, d: &Dataset) -> Result<()> {
        if d.task() != Task::Regression || d.dim() != 1 {
            return Err(Error::InvalidInput("relu_reg needs a 1-D regression dataset".into()));
        }
        Ok(())
    }

    /// Residuals `M(x_i) - y_i` in dataset order.
    pub fn residuals(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_dataset(d)?;
        Ok(d.points().iter().map(|p| self.forward(p.x[0]) - p.y).collect())
    }

    /// Sum of squared residuals.
    pub fn loss(&self, d: &Dataset) -> Result<f64> {
        Ok(self.residuals(d)?.iter().map(|r| r * r).sum())
    }

    /// Analytic gradient with `ReLU'(0) = 0`, flat order.
    pub fn grad(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_dataset(d)?;
        let m = self.w.len();
        let mut g = vec![0.0; 3 * m + 1];
        for p in d.points() {
            let x = p.x[0];
            let r = self.forward(x) - p.y;
            let dr = 2.0 * r;
            for j in 0..m {
                let z = self.w[j] * x + self.b[j];
                if z > 0.0 {
                    g[j] += dr * self.v[j] * x;
                    g[m + j] += dr * self.v[j];
                    g[2 * m + j] += dr * z;
                }
            }
            g[3 * m] += dr;
        }
        Ok(g)
    }

    /// `(unit, point)` pairs with pre-activation within `tol` of zero.
    pub fn kink_pairs(&self, d: &Dataset, tol: f64) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (i, p) in d.points().iter().enumerate() {
            for j in 0..self.w.len() {
                if (self.w[j] * p.x[0] + self.b[j]).abs() <= tol {
                    pairs.push((j, i));
                }
            }
        }
        pairs
    }
}
