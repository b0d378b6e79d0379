//! Exact local-minimum certification for ReLU regression candidates.
//!
//! A candidate point of the single-hidden-layer ReLU regressor may have
//! datapoints sitting exactly on activation kinks, where the spectral
//! route refuses. This module mechanizes the per-activation-case
//! argument instead.
//!
//! For a perturbation `(dw, db, dv, dc)` of the candidate, substitute per
//! unit `j`
//!
//! ```text
//! X_j = (w_j + dw_j)(v_j + dv_j) - w_j v_j
//! Y_j = (b_j + db_j)(v_j + dv_j) - b_j v_j
//! Z   = dc
//! ```
//!
//! Within one activation case (an active/inactive assignment for every
//! kink-adjacent `(unit, datapoint)` pair; all other pairs keep their
//! strict activation status for small perturbations), the perturbed
//! residual at point `i` is exactly `r_i + sum_{j active at i} (x_i X_j +
//! Y_j) + Z`, so the loss is
//!
//! ```text
//! L0 + 2 b.u + u' M u
//! ```
//!
//! with `u = (X_1, Y_1, .., X_m, Y_m, Z)`, `L0` the loss at the
//! candidate, `b = sum_i r_i a_i` and `M = sum_i a_i a_i'` for the
//! per-point coefficient vectors `a_i`. The case certifies iff `b = 0`
//! (no descent direction in the substituted variables) and `M` is
//! positive semidefinite, which holds by construction (`M` is a Gram
//! matrix) and is verified spectrally. If every case certifies, the
//! candidate is a local minimum with value `L0`; zero eigenvalues of `M`
//! are expected: these minima live on flat manifolds, so the claim is
//! non-strict minimality.

use serde::Serialize;

use super::jacobi::{eig_sym, Matrix};
use crate::datasets::{Dataset, Task};
use crate::error::{Error, Result};
use crate::tinynet::{ReluRegParams, KINK_TOL};

/// One activation case of the kink-adjacent pairs.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticCase {
    /// Active/inactive choice per boundary pair, in `boundary_pairs` order.
    pub boundary_active: Vec<bool>,
    /// Gram matrix of the quadratic form in the substituted variables.
    pub quadratic: Vec<Vec<f64>>,
    /// Linear coefficient vector; zero iff the candidate is critical
    /// within this case.
    pub linear: Vec<f64>,
    pub linear_inf_norm: f64,
    pub min_eigenvalue: f64,
    pub positive_semidefinite: bool,
    pub certified: bool,
}

/// Per-case certification report.
#[derive(Debug, Clone, Serialize)]
pub struct ReluMinProof {
    /// Loss at the candidate; every case's quadratic is bounded below by it.
    pub constant_term: f64,
    /// Kink-adjacent `(unit, point)` pairs whose activation is enumerated.
    pub boundary_pairs: Vec<(usize, usize)>,
    pub cases: Vec<QuadraticCase>,
    /// True iff every activation case certifies.
    pub certified: bool,
}

/// Mechanizes the per-activation-case local-minimum proof for `p` on `d`.
///
/// Errors with `Unsupported` if some hidden unit has more than two
/// datapoints on its kink (combinatorial blowup guard).
pub fn certify_relu_min_exact(p: &ReluRegParams, d: &Dataset) -> Result<ReluMinProof> {
    if d.task() != Task::Regression || d.dim() != 1 {
        return Err(Error::InvalidInput("expected a 1-D regression dataset".into()));
    }
    p.validate()?;
    let m = p.hidden_units();
    let n = d.len();

    let boundary_pairs = p.kink_pairs(d, KINK_TOL);
    for j in 0..m {
        let count = boundary_pairs.iter().filter(|(unit, _)| *unit == j).count();
        if count > 2 {
            return Err(Error::Unsupported(format!(
                "unit {j} has {count} datapoints on its activation boundary (limit 2)"
            )));
        }
    }

    let residuals = p.residuals(d)?;
    let constant_term: f64 = residuals.iter().map(|r| r * r).sum();

    // strictly active (unit, point) pairs; boundary pairs get their status
    // from the case assignment
    let strictly_active: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            let x = d.points()[i].x[0];
            (0..m).map(|j| p.w[j] * x + p.b[j] > KINK_TOL).collect()
        })
        .collect();

    let dim = 2 * m + 1;
    let n_cases = 1usize << boundary_pairs.len();
    let lin_tol = 1e-9 * (1.0 + constant_term);

    let mut cases = Vec::with_capacity(n_cases);
    for mask in 0..n_cases {
        let boundary_active: Vec<bool> =
            (0..boundary_pairs.len()).map(|b| mask >> b & 1 == 1).collect();

        let mut linear = vec![0.0; dim];
        let mut gram = Matrix::zeros(dim);
        for i in 0..n {
            let x = d.points()[i].x[0];
            let mut a = vec![0.0; dim];
            for j in 0..m {
                let on_boundary = boundary_pairs
                    .iter()
                    .position(|&(unit, point)| unit == j && point == i);
                let active = match on_boundary {
                    Some(b) => boundary_active[b],
                    None => strictly_active[i][j],
                };
                if active {
                    a[2 * j] += x;
                    a[2 * j + 1] += 1.0;
                }
            }
            a[2 * m] = 1.0;
            for (slot, &coeff) in linear.iter_mut().zip(&a) {
                *slot += residuals[i] * coeff;
            }
            for r in 0..dim {
                for c in 0..dim {
                    gram.set(r, c, gram.get(r, c) + a[r] * a[c]);
                }
            }
        }

        let eig = eig_sym(&gram)?;
        let min_eigenvalue = eig.eigenvalues[0];
        let l_max = eig.eigenvalues.last().copied().unwrap_or(0.0);
        let positive_semidefinite = min_eigenvalue >= -1e-10 * l_max.max(1.0);
        let linear_inf_norm = linear.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let certified = positive_semidefinite && linear_inf_norm <= lin_tol;

        cases.push(QuadraticCase {
            boundary_active,
            quadratic: (0..dim)
                .map(|r| (0..dim).map(|c| gram.get(r, c)).collect())
                .collect(),
            linear,
            linear_inf_norm,
            min_eigenvalue,
            positive_semidefinite,
            certified,
        });
    }

    let certified = cases.iter().all(|c| c.certified);
    Ok(ReluMinProof { constant_term, boundary_pairs, cases, certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::constants;
    use crate::datasets::{builtin, BuiltinDataset};

    #[test]
    fn trapped_single_unit_minimum_certifies_both_cases() {
        let d = builtin(BuiltinDataset::D1);
        let proof = certify_relu_min_exact(&constants::relu1_local_minimum(), &d).unwrap();
        assert_eq!(proof.constant_term, 18.0);
        assert_eq!(proof.boundary_pairs, vec![(0, 2)]); // unit 0 kinks at x = 3
        assert_eq!(proof.cases.len(), 2);
        assert!(proof.certified);
        for case in &proof.cases {
            assert!(case.positive_semidefinite);
            assert!(case.linear_inf_norm <= 1e-9 * 19.0);
        }
    }

    /// The quadratic of the activated case expands to
    /// `(3x+y+z)^2 + (4x+y+z)^2 + (5x+y+z)^2 + 2z^2 + 18`; spot-check the
    /// Gram entries against that expansion.
    #[test]
    fn activated_case_gram_matches_expansion() {
        let d = builtin(BuiltinDataset::D1);
        let proof = certify_relu_min_exact(&constants::relu1_local_minimum(), &d).unwrap();
        let case = proof
            .cases
            .iter()
            .find(|c| c.boundary_active == vec![true])
            .unwrap();
        // u = (X, Y, Z): coefficient of X^2 is 3^2+4^2+5^2 = 50,
        // of Y^2 is 3 (three active points), of Z^2 is 5 (all points),
        // cross X.Y is 3+4+5 = 12, X.Z same, Y.Z = 3.
        assert_eq!(case.quadratic[0][0], 50.0);
        assert_eq!(case.quadratic[1][1], 3.0);
        assert_eq!(case.quadratic[2][2], 5.0);
        assert_eq!(case.quadratic[0][1], 12.0);
        assert_eq!(case.quadratic[0][2], 12.0);
        assert_eq!(case.quadratic[1][2], 3.0);
    }

    /// The lower-loss comparison point is itself a critical point (its
    /// residuals sum to zero and its only active unit has zero residual),
    /// and the case analysis certifies it at constant term 14.
    #[test]
    fn comparison_point_is_also_a_local_minimum() {
        let d = builtin(BuiltinDataset::D1);
        let p = constants::relu1_comparison_minimum();
        let g = p.grad(&d).unwrap();
        assert!(g.iter().all(|&v| v == 0.0), "gradient {g:?}");
        let proof = certify_relu_min_exact(&p, &d).unwrap();
        assert!(proof.boundary_pairs.is_empty());
        assert_eq!(proof.cases.len(), 1);
        assert_eq!(proof.constant_term, 14.0);
        assert!(proof.certified);
    }

    #[test]
    fn three_unit_better_minimum_certifies_with_sixth_loss() {
        let d = builtin(BuiltinDataset::D3);
        let p = constants::relu3_better_minimum();
        let proof = certify_relu_min_exact(&p, &d).unwrap();
        assert!((proof.constant_term - 1.0 / 6.0).abs() < 1e-9);
        assert_eq!(proof.boundary_pairs.len(), 1); // unit 1 kinks at x = 0
        assert!(proof.certified);
    }

    #[test]
    fn non_critical_point_is_not_certified() {
        let d = builtin(BuiltinDataset::D1);
        // small shift of the trapped minimum: gradient no longer vanishes
        let p = ReluRegParams::new(vec![1.0], vec![-2.9], vec![1.0], 0.05).unwrap();
        let proof = certify_relu_min_exact(&p, &d).unwrap();
        assert!(!proof.certified);
        assert!(proof.cases.iter().any(|c| c.linear_inf_norm > 1e-6));
    }

    #[test]
    fn too_many_boundary_points_is_unsupported() {
        // unit with w = 0, b = 0 kinks at every datapoint
        let d = builtin(BuiltinDataset::D1);
        let p = ReluRegParams::new(vec![0.0], vec![0.0], vec![1.0], 0.0).unwrap();
        match certify_relu_min_exact(&p, &d) {
            Err(Error::Unsupported(_)) => {}
            other => panic!("expected Unsupported, got {other:?}"),
        }
    }
}
