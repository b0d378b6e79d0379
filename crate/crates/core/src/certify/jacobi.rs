//! Dense square matrices and the cyclic Jacobi symmetric eigensolver.
//!
//! Jacobi is the right tool here: every Hessian in this crate is at most a
//! few dozen rows, and the rotation method is simple to make bit-stable
//! while delivering accurate eigenvectors. Sweeps run until the
//! off-diagonal Frobenius norm falls below `1e-12 * ||A||_F`.

use crate::error::{Error, Result};

/// Row-major square matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn off_diag_frob(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j) * self.get(i, j);
                }
            }
        }
        s.sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }
}

/// Symmetric eigendecomposition: eigenvalues ascending, eigenvectors as
/// the corresponding columns of an orthonormal matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `||Q L Q^T - A||_F` for the matrix this was computed from.
    pub fn reconstruction_error(&self, a: &Matrix) -> f64 {
        let n = a.n();
        let q = &self.eigenvectors;
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    v += q.get(i, k) * self.eigenvalues[k] * q.get(j, k);
                }
                err += (v - a.get(i, j)).powi(2);
            }
        }
        err.sqrt()
    }

    /// `max |Q^T Q - I|` entry-wise.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.eigenvectors.n();
        let q = &self.eigenvectors;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += q.get(k, i) * q.get(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

const MAX_SWEEPS: usize = 64;

/// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi
/// rotations. The input is symmetrized first; rotations sweep all strict
/// upper-triangle pairs until the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`.
pub fn eig_sym(input: &Matrix) -> Result<EigenDecomposition> {
    let n = input.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let mut a = input.symmetrized();
    let mut q = Matrix::identity(n);
    let norm = a.frob_norm();
    let stop = 1e-12 * norm;

    if n == 1 {
        return Ok(EigenDecomposition { eigenvalues: vec![a.get(0, 0)], eigenvectors: q });
    }

    let mut converged = norm == 0.0 || a.off_diag_frob() <= stop;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n - 1 {
            for r in p + 1..n {
                let apr = a.get(p, r);
                if apr == 0.0 {
                    continue;
                }
                // Rotation annihilating a[p][r], Numerical-Recipes form.
                let theta = 0.5 * (a.get(r, r) - a.get(p, p)) / apr;
                let t = if theta.abs() > 1e150 {
                    // 1/(2*theta) limit avoids overflow in theta^2
                    0.5 / theta
                } else {
                    let s = theta.signum();
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let h = t * apr;
                a.set(p, p, a.get(p, p) - h);
                a.set(r, r, a.get(r, r) + h);
                a.set(p, r, 0.0);
                a.set(r, p, 0.0);
                for j in 0..n {
                    if j != p && j != r {
                        let g = a.get(j, p);
                        let hh = a.get(j, r);
                        a.set(j, p, g - s * (hh + g * tau));
                        a.set(p, j, a.get(j, p));
                        a.set(j, r, hh + s * (g - hh * tau));
                        a.set(r, j, a.get(j, r));
                    }
                }
                for j in 0..n {
                    let g = q.get(j, p);
                    let hh = q.get(j, r);
                    q.set(j, p, g - s * (hh + g * tau));
                    q.set(j, r, hh + s * (g - hh * tau));
                }
            }
        }
        converged = a.off_diag_frob() <= stop;
    }
    if !converged {
        return Err(Error::Unsupported(format!(
            "Jacobi sweeps did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let eigenvectors = Matrix::from_fn(n, |i, j| q.get(i, order[j]));
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_symmetric(n: usize, rng: &mut SplitMix64) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = rng.next_range(-5.0, 5.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn identity_spectrum() {
        let eig = eig_sym(&Matrix::identity(9)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0; 9]);
    }

    #[test]
    fn diagonal_is_sorted() {
        let m = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let eig = eig_sym(&m).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_known() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = eig_sym(&m).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthogonality_bounds() {
        let mut rng = SplitMix64::new(11);
        for trial in 0..1000 {
            let n = 1 + (trial % 12);
            let m = random_symmetric(n, &mut rng);
            let eig = eig_sym(&m).unwrap();
            let tol = 1e-10 * (1.0 + m.frob_norm());
            assert!(eig.reconstruction_error(&m) <= tol, "trial {trial}");
            assert!(eig.orthonormality_error() <= 1e-10, "trial {trial}");
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn shift_moves_spectrum() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let n = 2 + (rng.next_u64() % 8) as usize;
            let m = random_symmetric(n, &mut rng);
            let alpha = rng.next_range(-3.0, 3.0);
            let shifted = Matrix::from_fn(n, |i, j| m.get(i, j) + if i == j { alpha } else { 0.0 });
            let e1 = eig_sym(&m).unwrap().eigenvalues;
            let e2 = eig_sym(&shifted).unwrap().eigenvalues;
            for (a, b) in e1.iter().zip(&e2) {
                assert!((a + alpha - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_matrix() {
        let eig = eig_sym(&Matrix::zeros(4)).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0; 4]);
    }
}
