//! Critical-point certification.
//!
//! [`classify_critical`] is the spectral route: analytic gradient, then
//! finite-difference Hessian, then the Jacobi eigensolver, then a Morse
//! classification with explicit tolerances. [`certify_relu_min_exact`]
//! is the exact route for ReLU regression candidates that sit on
//! activation kinks, where the spectral route must refuse.

mod jacobi;
mod relu_exact;

pub use jacobi::{eig_sym, EigenDecomposition, Matrix};
pub use relu_exact::{certify_relu_min_exact, QuadraticCase, ReluMinProof};

use serde::Serialize;

use crate::datasets::Dataset;
use crate::error::Result;
use crate::tinynet::{hessian, LossKind, ParamVector};

pub const DEFAULT_TOL_GRAD: f64 = 1e-5;
pub const DEFAULT_TOL_EIG_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    NotCritical,
    LocalMinimum,
    Saddle,
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::NotCritical => "NotCritical",
            Classification::LocalMinimum => "LocalMinimum",
            Classification::Saddle => "Saddle",
            Classification::Degenerate => "Degenerate",
        };
        write!(f, "{s}")
    }
}

/// Machine-checkable record substantiating a critical-point claim.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub grad_inf_norm: f64,
    /// Hessian spectrum, ascending; length equals the parameter count.
    pub eigenvalues: Vec<f64>,
    pub classification: Classification,
    pub tol_grad: f64,
    pub tol_eig_rel: f64,
    pub loss_at_point: f64,
}

/// Classifies `p` as a critical point of the given loss.
///
/// Decision rule: with gradient infinity norm `g` and ascending
/// eigenvalues `l_1 <= .. <= l_n` of the Hessian,
///
/// - `NotCritical` if `g > tol_grad`; otherwise with
///   `tau = tol_eig_rel * max(1, l_n)`:
/// - `LocalMinimum` if `l_1 >= tau`,
/// - `Saddle` if `l_1 <= -tau`,
/// - `Degenerate` otherwise.
///
/// ReLU losses refuse with a non-smooth-point error when a datapoint lies
/// on an activation kink (use [`certify_relu_min_exact`] there).
pub fn classify_critical(
    p: &ParamVector,
    d: &Dataset,
    kind: LossKind,
    tol_grad: f64,
    tol_eig_rel: f64,
) -> Result<Certificate> {
    let grad = p.grad(kind, d)?;
    let grad_inf_norm = grad.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let h = hessian(p, d, kind)?;
    let eigenvalues = eig_sym(&h)?.eigenvalues;
    let loss_at_point = p.loss(kind, d)?;

    let classification = if grad_inf_norm > tol_grad {
        Classification::NotCritical
    } else {
        let l_min = eigenvalues[0];
        let l_max = *eigenvalues.last().unwrap();
        let tau = tol_eig_rel * l_max.max(1.0);
        if l_min >= tau {
            Classification::LocalMinimum
        } else if l_min <= -tau {
            Classification::Saddle
        } else {
            Classification::Degenerate
        }
    };

    Ok(Certificate {
        grad_inf_norm,
        eigenvalues,
        classification,
        tol_grad,
        tol_eig_rel,
        loss_at_point,
    })
}

/// [`classify_critical`] with the default tolerances.
pub fn classify_critical_default(
    p: &ParamVector,
    d: &Dataset,
    kind: LossKind,
) -> Result<Certificate> {
    classify_critical(p, d, kind, DEFAULT_TOL_GRAD, DEFAULT_TOL_EIG_REL)
}
