//! The 2-2-1 sigmoid classifier.
//!
//! `M(x) = sigma(v0 * sigma(w00 x0 + w01 x1 + b0)
//!               + v1 * sigma(w10 x0 + w11 x1 + b1) + c)`
//!
//! Canonical flat order: `[w00, w01, b0, w10, w11, b1, v0, v1, c]`.

use serde::{Deserialize, Serialize};

use super::{check_finite, classification_accuracy, sigmoid};
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid221Params {
    pub w00: f64,
    pub w01: f64,
    pub b0: f64,
    pub w10: f64,
    pub w11: f64,
    pub b1: f64,
    pub v0: f64,
    pub v1: f64,
    pub c: f64,
}

impl Sigmoid221Params {
    pub fn flatten(&self) -> [f64; 9] {
        [self.w00, self.w01, self.b0, self.w10, self.w11, self.b1, self.v0, self.v1, self.c]
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != 9 {
            return Err(Error::InvalidInput(format!(
                "sigmoid221 takes 9 parameters, got {}",
                flat.len()
            )));
        }
        check_finite(flat.iter().copied(), "sigmoid221 parameters")?;
        Ok(Self {
            w00: flat[0],
            w01: flat[1],
            b0: flat[2],
            w10: flat[3],
            w11: flat[4],
            b1: flat[5],
            v0: flat[6],
            v1: flat[7],
            c: flat[8],
        })
    }

    #[inline]
    pub(crate) fn logit(&self, x0: f64, x1: f64) -> f64 {
        let a0 = sigmoid(self.w00 * x0 + self.w01 * x1 + self.b0);
        let a1 = sigmoid(self.w10 * x0 + self.w11 * x1 + self.b1);
        self.v0 * a0 + self.v1 * a1 + self.c
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
                "sigmoid221 needs a 2-D binary classification dataset".into(),
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

    /// `exp(-loss)`: the per-point geometric-mean likelihood.
    pub fn likelihood(&self, d: &Dataset) -> Result<f64> {
        Ok((-self.nll_loss(d)?).exp())
    }

    pub fn accuracy(&self, d: &Dataset) -> Result<f64> {
        self.check_dataset(d)?;
        classification_accuracy(d, |x| self.output(x[0], x[1]))
    }

    /// Exact analytic gradient of [`Self::nll_loss`], flat order.
    pub fn grad_nll(&self, d: &Dataset) -> Result<[f64; 9]> {
        self.check_dataset(d)?;
        let n = d.len() as f64;
        let mut g = [0.0f64; 9];
        for p in d.points() {
            let (x0, x1) = (p.x[0], p.x[1]);
            let a0 = sigmoid(self.w00 * x0 + self.w01 * x1 + self.b0);
            let a1 = sigmoid(self.w10 * x0 + self.w11 * x1 + self.b1);
            let m = sigmoid(self.v0 * a0 + self.v1 * a1 + self.c);
            let du = (m - p.y) / n;
            let t0 = du * self.v0 * a0 * (1.0 - a0);
            let t1 = du * self.v1 * a1 * (1.0 - a1);
            g[0] += t0 * x0;
            g[1] += t0 * x1;
            g[2] += t0;
            g[3] += t1 * x0;
            g[4] += t1 * x1;
            g[5] += t1;
            g[6] += du * a0;
            g[7] += du * a1;
            g[8] += du;
        }
        Ok(g)
    }
}
