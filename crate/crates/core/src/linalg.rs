//! Dense kernels: SVD, symmetric eigenpairs and shifted Gram solves.
//!
//! Backed by nalgebra's one-sided bidiagonal SVD and symmetric QR
//! eigensolver; this module fixes ordering and validation.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Thin SVD `M = U diag(sigma) Vt` with `sigma` nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub vt: DMatrix<f64>,
}

impl SvdFactors {
    /// `U diag(values) Vt`.
    pub fn recompose_with(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        scaled * &self.vt
    }

    pub fn recompose(&self) -> DMatrix<f64> {
        self.recompose_with(&self.sigma)
    }
}

/// Eigenpairs with values in nondecreasing order, vectors as columns.
#[derive(Debug, Clone)]
pub struct EigPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{what} has non-finite entries"));
    }
    Ok(())
}

pub fn svd(m: &DMatrix<f64>) -> Result<SvdFactors> {
    check_finite(m, "svd input")?;
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(SvdFactors {
            u: DMatrix::zeros(m.nrows(), 0),
            sigma: DVector::zeros(0),
            vt: DMatrix::zeros(0, m.ncols()),
        });
    }
    let raw = m.clone().svd_unordered(true, true);
    let (u, vt) = match (raw.u, raw.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return invalid("svd did not produce singular vectors"),
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[b]
            .total_cmp(&raw.singular_values[a])
            .then(a.cmp(&b))
    });
    let sigma = DVector::from_iterator(k, order.iter().map(|&i| raw.singular_values[i].max(0.0)));
    let u = DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
    let vt = DMatrix::from_fn(k, vt.ncols(), |r, c| vt[(order[r], c)]);
    Ok(SvdFactors { u, sigma, vt })
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return invalid(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        ));
    }
    check_finite(s, "symmetric input")?;
    let scale = s.amax().max(1.0);
    let n = s.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-10 * scale {
                return invalid(format!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, values ascending.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigPairs> {
    check_symmetric(s)?;
    let n = s.nrows();
    // exact symmetrization so tiny asymmetries do not leak into the solver
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    Ok(EigPairs {
        values: DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i])),
        vectors: DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]),
    })
}

/// The `k` algebraically smallest eigenpairs.
pub fn sym_eig_smallest(s: &DMatrix<f64>, k: usize) -> Result<EigPairs> {
    if k == 0 || k > s.nrows() {
        return invalid(format!(
            "requested {k} eigenpairs of a {}x{} matrix",
            s.nrows(),
            s.ncols()
        ));
    }
    let full = sym_eig(s)?;
    Ok(EigPairs {
        values: full.values.rows(0, k).into_owned(),
        vectors: full.vectors.columns(0, k).into_owned(),
    })
}

/// Eigendecomposition of `X^T X`, computed once per solve.
pub fn gram_eig(x: &DMatrix<f64>) -> Result<EigPairs> {
    check_finite(x, "data matrix")?;
    sym_eig(&(x.transpose() * x))
}

/// `(X^T X + mu I)^{-1} B` from the cached eigenpairs of `X^T X`.
pub fn solve_shifted_gram(gram: &EigPairs, mu: f64, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !(mu.is_finite() && mu > 0.0) {
        return invalid(format!("shift must be positive, got {mu}"));
    }
    let n = gram.vectors.nrows();
    if b.nrows() != n {
        return invalid(format!(
            "right-hand side has {} rows, expected {n}",
            b.nrows()
        ));
    }
    let mut coeffs = gram.vectors.tr_mul(b);
    for (i, mut row) in coeffs.row_iter_mut().enumerate() {
        // eigenvalues of a PSD Gram matrix; clamp roundoff negatives
        row /= gram.values[i].max(0.0) + mu;
    }
    Ok(&gram.vectors * coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn svd_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]));
        let f = svd(&m).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-14 && (f.sigma[1] - 1.0).abs() < 1e-14);
        assert!((f.recompose() - m).norm() < 1e-14);
    }

    #[test]
    fn svd_of_zero() {
        let f = svd(&DMatrix::zeros(4, 4)).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_reconstructs_random() {
        for (seed, (r, c)) in [(10, 10), (7, 12), (12, 5)].into_iter().enumerate() {
            let m = random(r, c, seed as u64);
            let f = svd(&m).unwrap();
            assert!((f.recompose() - &m).norm() <= 1e-8 * m.norm().max(1.0));
            assert!(f.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
            let utu = f.u.tr_mul(&f.u);
            assert!((utu - DMatrix::identity(f.sigma.len(), f.sigma.len())).norm() < 1e-10);
        }
    }

    #[test]
    fn svd_rejects_nan() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(svd(&m).is_err());
    }

    #[test]
    fn eig_examples() {
        let e = sym_eig_smallest(&DMatrix::identity(3, 3), 2).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0]);
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let e = sym_eig_smallest(&l, 1).unwrap();
        assert!(e.values[0].abs() < 1e-14);
        let v = e.vectors.column(0);
        let s = 0.5f64.sqrt();
        assert!((v[0].abs() - s).abs() < 1e-12 && (v[0] - v[1]).abs() < 1e-12);
    }

    #[test]
    fn eig_residual_random() {
        let a = random(8, 8, 3);
        let s = &a + a.transpose();
        let e = sym_eig_smallest(&s, 8).unwrap();
        let lhs = &s * &e.vectors;
        let rhs = &e.vectors * DMatrix::from_diagonal(&e.values);
        assert!((lhs - rhs).norm() <= 1e-8 * s.norm());
        assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_errors() {
        let s = DMatrix::<f64>::identity(3, 3);
        assert!(sym_eig_smallest(&s, 0).is_err());
        assert!(sym_eig_smallest(&s, 4).is_err());
        let mut asym = s.clone();
        asym[(0, 2)] = 0.5;
        assert!(sym_eig_smallest(&asym, 1).is_err());
    }

    #[test]
    fn shifted_gram_examples() {
        let b = random(4, 3, 9);
        let zero = gram_eig(&DMatrix::zeros(5, 4)).unwrap();
        let out = solve_shifted_gram(&zero, 2.0, &b).unwrap();
        assert!((out - &b / 2.0).norm() < 1e-14);
        let ident = sym_eig(&DMatrix::identity(4, 4)).unwrap();
        let out = solve_shifted_gram(&ident, 1.0, &b).unwrap();
        assert!((out - &b / 2.0).norm() < 1e-14);
        assert!(solve_shifted_gram(&ident, 0.0, &b).is_err());
    }

    #[test]
    fn shifted_gram_residual() {
        let x = random(6, 6, 4);
        let g = x.transpose() * &x;
        let b = random(6, 6, 5);
        let out = solve_shifted_gram(&gram_eig(&x).unwrap(), 0.5, &b).unwrap();
        let resid = (&g + DMatrix::identity(6, 6) * 0.5) * out - &b;
        assert!(resid.norm() <= 1e-6 * b.norm());
    }

    #[test]
    fn shifted_gram_exact_on_diagonal() {
        let d = DVector::from_vec(vec![0.5, 2.0, 7.0, 0.0]);
        let g = DMatrix::from_diagonal(&d);
        let b = random(4, 2, 6);
        let out = solve_shifted_gram(&sym_eig(&g).unwrap(), 1.5, &b).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                let want = b[(i, j)] / (d[i] + 1.5);
                assert!((out[(i, j)] - want).abs() <= 1e-12 * want.abs().max(1e-300));
            }
        }
    }
}
