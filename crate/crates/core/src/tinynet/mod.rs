//! The tiny architectures, their losses, exact analytic gradients, and
//! finite-difference Hessian assembly.
//!
//! Conventions, fixed once for the whole crate:
//!
//! - Classification loss (`Nll`) is the negative log-likelihood averaged
//!   over datapoints, so `exp(-loss)` is the per-point geometric-mean
//!   likelihood.
//! - Regression loss (`SquaredError`) is the plain sum of squared
//!   residuals, no averaging.
//! - `ReLU'(0) = 0`: a unit sitting exactly on its kink contributes no
//!   gradient.
//! - Hessians are central finite differences of the analytic gradient
//!   (step `1e-5`), then symmetrized. For ReLU losses this refuses with a
//!   non-smooth-point error if any datapoint lies within `1e-9` of an
//!   activation boundary.

mod deep_relu;
mod relu_reg;
mod sigmoid221;
mod two_h1;

pub use deep_relu::{DeepReluParams, LayerParams};
pub use relu_reg::ReluRegParams;
pub use sigmoid221::Sigmoid221Params;
pub use two_h1::{Activation, TwoH1Params};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::certify::Matrix;
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};

/// Central-difference step for Hessian assembly.
pub const HESSIAN_FD_STEP: f64 = 1e-5;

/// Distance from a ReLU activation boundary below which a configuration is
/// treated as non-smooth.
pub const KINK_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + exp(u))`, full relative precision for any `u`.
#[inline]
pub(crate) fn softplus(u: f64) -> f64 {
    if u >= 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Per-point negative log-likelihood in terms of the logit:
/// `-(y ln s(u) + (1-y) ln(1 - s(u))) = softplus(u) - y u`. Stable where
/// the naive form degrades into a rounding staircase for saturated
/// outputs; the `{0,1}` labels take the algebraically cancelled branches.
#[inline]
pub(crate) fn nll_term(logit: f64, y: f64) -> f64 {
    if y == 1.0 {
        softplus(-logit)
    } else if y == 0.0 {
        softplus(logit)
    } else {
        softplus(logit) - y * logit
    }
}

#[inline]
pub(crate) fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

pub(crate) fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains non-finite values")))
    }
}

/// Fraction of points with `(output > 0.5) == (y == 1)`.
pub(crate) fn classification_accuracy(
    d: &Dataset,
    mut output: impl FnMut(&[f64]) -> f64,
) -> Result<f64> {
    if d.task() != Task::Classification {
        return Err(Error::InvalidInput("accuracy needs a classification dataset".into()));
    }
    let correct = d
        .points()
        .iter()
        .filter(|p| (output(&p.x) > 0.5) == (p.y == 1.0))
        .count();
    Ok(correct as f64 / d.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean negative log-likelihood over a binary classification dataset.
    Nll,
    /// Sum of squared residuals over a regression dataset.
    SquaredError,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Nll => write!(f, "nll"),
            LossKind::SquaredError => write!(f, "mse"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nll" => Ok(LossKind::Nll),
            "mse" | "squared_error" => Ok(LossKind::SquaredError),
            other => Err(Error::InvalidInput(format!("unknown loss kind '{other}'"))),
        }
    }
}

/// A flat, ordered parameter vector for one of the supported
/// architectures. The flat order is part of each type's contract;
/// `unflatten(flatten(p)) == p` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", content = "params", rename_all = "snake_case")]
pub enum ParamVector {
    Sigmoid221(Sigmoid221Params),
    ReluReg(ReluRegParams),
    TwoH1(TwoH1Params),
    DeepRelu(DeepReluParams),
}

impl ParamVector {
    pub fn arch_name(&self) -> &'static str {
        match self {
            ParamVector::Sigmoid221(_) => "sigmoid221",
            ParamVector::ReluReg(_) => "relu_reg",
            ParamVector::TwoH1(_) => "two_h1",
            ParamVector::DeepRelu(_) => "deep_relu",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ParamVector::Sigmoid221(_) => 9,
            ParamVector::ReluReg(p) => p.param_count(),
            ParamVector::TwoH1(p) => p.param_count(),
            ParamVector::DeepRelu(p) => p.param_count(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ParamVector::Sigmoid221(_) | ParamVector::TwoH1(_) => 2,
            ParamVector::ReluReg(_) => 1,
            ParamVector::DeepRelu(p) => p.input_dim(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        match self {
            ParamVector::Sigmoid221(p) => p.flatten().to_vec(),
            ParamVector::ReluReg(p) => p.flatten(),
            ParamVector::TwoH1(p) => p.flatten(),
            ParamVector::DeepRelu(p) => p.flatten(),
        }
    }

    /// Same architecture and shapes, parameter values from `flat`.
    pub fn with_flat(&self, flat: &[f64]) -> Result<ParamVector> {
        Ok(match self {
            ParamVector::Sigmoid221(_) => ParamVector::Sigmoid221(Sigmoid221Params::from_flat(flat)?),
            ParamVector::ReluReg(p) => ParamVector::ReluReg(p.with_flat(flat)?),
            ParamVector::TwoH1(p) => ParamVector::TwoH1(p.with_flat(flat)?),
            ParamVector::DeepRelu(p) => ParamVector::DeepRelu(p.with_flat(flat)?),
        })
    }

    /// The loss this architecture is trained with.
    pub fn natural_loss_kind(&self) -> LossKind {
        match self {
            ParamVector::Sigmoid221(_) | ParamVector::TwoH1(_) => LossKind::Nll,
            ParamVector::ReluReg(_) | ParamVector::DeepRelu(_) => LossKind::SquaredError,
        }
    }

    fn check_loss_kind(&self, kind: LossKind) -> Result<()> {
        if kind == self.natural_loss_kind() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "loss '{kind}' does not apply to architecture '{}'",
                self.arch_name()
            )))
        }
    }

    pub fn loss(&self, kind: LossKind, d: &Dataset) -> Result<f64> {
        self.check_loss_kind(kind)?;
        match self {
            ParamVector::Sigmoid221(p) => p.nll_loss(d),
            ParamVector::TwoH1(p) => p.nll_loss(d),
            ParamVector::ReluReg(p) => p.loss(d),
            ParamVector::DeepRelu(p) => p.loss(d),
        }
    }

    pub fn grad(&self, kind: LossKind, d: &Dataset) -> Result<Vec<f64>> {
        self.check_loss_kind(kind)?;
        match self {
            ParamVector::Sigmoid221(p) => Ok(p.grad_nll(d)?.to_vec()),
            ParamVector::TwoH1(p) => p.grad_nll(d),
            ParamVector::ReluReg(p) => p.grad(d),
            ParamVector::DeepRelu(p) => p.grad(d),
        }
    }

    /// Scalar model output at one input.
    pub fn output(&self, x: &[f64]) -> Result<f64> {
        match self {
            ParamVector::Sigmoid221(p) => p.forward(x),
            ParamVector::TwoH1(p) => p.forward(x),
            ParamVector::ReluReg(p) => {
                if x.len() != 1 {
                    return Err(Error::InvalidInput("relu_reg takes 1-D inputs".into()));
                }
                check_finite(x.iter().copied(), "input")?;
                Ok(p.forward(x[0]))
            }
            ParamVector::DeepRelu(p) => p.forward(x),
        }
    }

    /// Classification accuracy at threshold 0.5. Classifier architectures
    /// only.
    pub fn accuracy(&self, d: &Dataset) -> Result<f64> {
        match self {
            ParamVector::Sigmoid221(p) => p.accuracy(d),
            ParamVector::TwoH1(p) => p.accuracy(d),
            _ => Err(Error::InvalidInput(format!(
                "accuracy is not defined for architecture '{}'",
                self.arch_name()
            ))),
        }
    }

    /// `(unit, point)` pairs within `tol` of a ReLU activation boundary.
    /// Empty for architectures without ReLU units.
    pub fn kink_pairs(&self, d: &Dataset, tol: f64) -> Vec<(usize, usize)> {
        match self {
            ParamVector::Sigmoid221(_) => Vec::new(),
            ParamVector::TwoH1(p) => p.kink_pairs(d, tol),
            ParamVector::ReluReg(p) => p.kink_pairs(d, tol),
            ParamVector::DeepRelu(p) => p.kink_pairs(d, tol),
        }
    }
}

/// Central finite differences of a gradient field, symmetrized.
pub fn fd_hessian_of_grad<F>(grad: F, at: &[f64], step: f64) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = at.len();
    let mut h = Matrix::zeros(n);
    let mut buf = at.to_vec();
    for j in 0..n {
        buf[j] = at[j] + step;
        let gp = grad(&buf)?;
        buf[j] = at[j] - step;
        let gm = grad(&buf)?;
        buf[j] = at[j];
        for i in 0..n {
            h.set(i, j, (gp[i] - gm[i]) / (2.0 * step));
        }
    }
    Ok(h.symmetrized())
}

/// Hessian of the loss at `p`, built by central finite differences of the
/// analytic gradient and symmetrized.
///
/// For ReLU losses the configuration must be smooth: any datapoint within
/// [`KINK_TOL`] of an activation boundary is a non-smooth-point error
/// carrying the offending datapoint index.
pub fn hessian(p: &ParamVector, d: &Dataset, kind: LossKind) -> Result<Matrix> {
    if let Some(&(unit, point)) = p.kink_pairs(d, KINK_TOL).first() {
        return Err(Error::NonSmooth { point, unit, tol: KINK_TOL });
    }
    let flat = p.flatten();
    fd_hessian_of_grad(|f| p.with_flat(f)?.grad(kind, d), &flat, HESSIAN_FD_STEP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{builtin, BuiltinDataset};
    use crate::rng::SplitMix64;

    fn random_dataset(task: Task, d: usize, n: usize, rng: &mut SplitMix64) -> Dataset {
        let pts: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.next_range(-3.0, 3.0)).collect();
                let y = match task {
                    Task::Classification => (rng.next_u64() % 2) as f64,
                    Task::Regression => rng.next_range(-3.0, 3.0),
                };
                (x, y)
            })
            .collect();
        Dataset::new(task, d, pts.into_iter().map(|(x, y)| crate::datasets::DataPoint { x, y }).collect())
            .unwrap()
    }

    fn random_params(arch: usize, rng: &mut SplitMix64) -> ParamVector {
        match arch {
            0 => ParamVector::Sigmoid221(
                Sigmoid221Params::from_flat(&(0..9).map(|_| rng.next_range(-2.0, 2.0)).collect::<Vec<_>>())
                    .unwrap(),
            ),
            1 => {
                let m = 1 + (rng.next_u64() % 3) as usize;
                ParamVector::ReluReg(ReluRegParams {
                    w: (0..m).map(|_| rng.next_range(-2.0, 2.0)).collect(),
                    b: (0..m).map(|_| rng.next_range(-2.0, 2.0)).collect(),
                    v: (0..m).map(|_| rng.next_range(-2.0, 2.0)).collect(),
                    c: rng.next_range(-2.0, 2.0),
                })
            }
            2 => {
                let h = 1 + (rng.next_u64() % 4) as usize;
                let act = if rng.next_u64() % 2 == 0 { Activation::Sigmoid } else { Activation::Relu };
                ParamVector::TwoH1(TwoH1Params {
                    activation: act,
                    w1: (0..h).map(|_| [rng.next_range(-2.0, 2.0), rng.next_range(-2.0, 2.0)]).collect(),
                    b1: (0..h).map(|_| rng.next_range(-2.0, 2.0)).collect(),
                    v: (0..h).map(|_| rng.next_range(-2.0, 2.0)).collect(),
                    c: rng.next_range(-2.0, 2.0),
                })
            }
            _ => {
                let widths = [2 + (rng.next_u64() % 3) as usize, 2];
                let mut layers = Vec::new();
                let mut prev = 2usize;
                for &w in &widths {
                    layers.push(LayerParams {
                        w: (0..w)
                            .map(|_| (0..prev).map(|_| rng.next_range(-1.5, 1.5)).collect())
                            .collect(),
                        b: (0..w).map(|_| rng.next_range(-1.5, 1.5)).collect(),
                    });
                    prev = w;
                }
                layers.push(LayerParams {
                    w: vec![(0..prev).map(|_| rng.next_range(-1.5, 1.5)).collect()],
                    b: vec![rng.next_range(-1.5, 1.5)],
                });
                ParamVector::DeepRelu(DeepReluParams::new(layers).unwrap())
            }
        }
    }

    fn dataset_for(p: &ParamVector, rng: &mut SplitMix64) -> Dataset {
        let task = match p.natural_loss_kind() {
            LossKind::Nll => Task::Classification,
            LossKind::SquaredError => Task::Regression,
        };
        random_dataset(task, p.input_dim(), 4 + (rng.next_u64() % 6) as usize, rng)
    }

    fn fd_grad(p: &ParamVector, kind: LossKind, d: &Dataset, step: f64) -> Vec<f64> {
        let flat = p.flatten();
        let mut g = vec![0.0; flat.len()];
        let mut buf = flat.clone();
        for j in 0..flat.len() {
            buf[j] = flat[j] + step;
            let lp = p.with_flat(&buf).unwrap().loss(kind, d).unwrap();
            buf[j] = flat[j] - step;
            let lm = p.with_flat(&buf).unwrap().loss(kind, d).unwrap();
            buf[j] = flat[j];
            g[j] = (lp - lm) / (2.0 * step);
        }
        g
    }

    /// Analytic gradient vs central finite differences, 1000 random draws
    /// per architecture, excluding ReLU-kink configurations.
    #[test]
    fn gradient_matches_finite_differences() {
        for arch in 0..4 {
            let mut rng = SplitMix64::new(1000 + arch as u64);
            let mut done = 0;
            while done < 1000 {
                let p = random_params(arch, &mut rng);
                let d = dataset_for(&p, &mut rng);
                // FD steps straddle kinks; skip configurations close to one.
                if !p.kink_pairs(&d, 1e-4).is_empty() {
                    continue;
                }
                let kind = p.natural_loss_kind();
                let analytic = p.grad(kind, &d).unwrap();
                let numeric = fd_grad(&p, kind, &d, 1e-6);
                let scale = numeric.iter().fold(1.0f64, |a, b| a.max(b.abs()));
                for (a, b) in analytic.iter().zip(&numeric) {
                    assert!(
                        (a - b).abs() / scale < 1e-5,
                        "arch {arch}: analytic {a} vs fd {b} (scale {scale})"
                    );
                }
                done += 1;
            }
        }
    }

    #[test]
    fn flat_round_trip_is_exact() {
        let mut rng = SplitMix64::new(77);
        for arch in 0..4 {
            for _ in 0..200 {
                let p = random_params(arch, &mut rng);
                let q = p.with_flat(&p.flatten()).unwrap();
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let mut rng = SplitMix64::new(5);
        let p = random_params(0, &mut rng);
        let d = dataset_for(&p, &mut rng);
        let h = hessian(&p, &d, LossKind::Nll).unwrap();
        assert_eq!(h.max_asymmetry(), 0.0);
    }

    #[test]
    fn hessian_of_quadratic_recovers_matrix() {
        // f(p) = p' A p has gradient 2 A p and Hessian 2 A.
        let a = [[2.0, -1.0, 0.5], [-1.0, 3.0, 0.25], [0.5, 0.25, 1.5]];
        let grad = |p: &[f64]| -> Result<Vec<f64>> {
            Ok((0..3)
                .map(|i| 2.0 * (0..3).map(|j| a[i][j] * p[j]).sum::<f64>())
                .collect())
        };
        let h = fd_hessian_of_grad(grad, &[0.3, -1.2, 0.7], 1e-5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((h.get(i, j) - 2.0 * a[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hessian_refuses_kink_configurations() {
        // unit exactly on its kink at x = 3
        let p = ParamVector::ReluReg(ReluRegParams {
            w: vec![1.0],
            b: vec![-3.0],
            v: vec![1.0],
            c: 0.0,
        });
        let d = builtin(BuiltinDataset::D1);
        match hessian(&p, &d, LossKind::SquaredError) {
            Err(Error::NonSmooth { point, unit, .. }) => {
                assert_eq!((unit, point), (0, 2));
            }
            other => panic!("expected NonSmooth, got {other:?}"),
        }
    }

    #[test]
    fn loss_kind_mismatch_is_rejected() {
        let mut rng = SplitMix64::new(9);
        let p = random_params(0, &mut rng);
        let d = dataset_for(&p, &mut rng);
        assert!(p.loss(LossKind::SquaredError, &d).is_err());
    }
}
