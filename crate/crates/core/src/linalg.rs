//! Small dense complex linear algebra: Cholesky factorization and
//! triangular solves for Hermitian positive-definite systems.
//!
//! The systems here are tiny ((Q+1)/2-dimensional), so plain nested
//! loops are used throughout.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cholesky factorization A = L L^H of a Hermitian positive-definite matrix.
///
/// Returns the lower-triangular factor with real positive diagonal, or a
/// singularity error naming the offending pivot index.
pub fn cholesky(a: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let n = a.len();
    let scale: f64 = (0..n).map(|i| a[i][i].re.abs()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-13 * scale;
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k].conj();
            }
            if i == j {
                if sum.re <= tol || sum.im.abs() > 1e-8 * scale {
                    return Err(Error::Singular(format!(
                        "non-positive pivot at index {i} (value {:.3e})",
                        sum.re
                    )));
                }
                l[i][j] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solve L y = b with L lower triangular.
pub fn solve_lower(l: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    y
}

/// Solve L^H x = y with L lower triangular.
pub fn solve_lower_adjoint(l: &[Vec<Complex64>], y: &[Complex64]) -> Vec<Complex64> {
    let n = y.len();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i].conj() * x[k];
        }
        x[i] = sum / l[i][i].conj();
    }
    x
}

/// Solve the Hermitian positive-definite system A x = b via Cholesky.
pub fn solve_hermitian(a: &[Vec<Complex64>], b: &[Complex64]) -> Result<Vec<Complex64>> {
    let l = cholesky(a)?;
    let y = solve_lower(&l, b);
    Ok(solve_lower_adjoint(&l, &y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cholesky_reconstructs_matrix() {
        let a = vec![
            vec![c(4.0, 0.0), c(1.0, -1.0), c(0.5, 0.2)],
            vec![c(1.0, 1.0), c(3.0, 0.0), c(0.3, -0.1)],
            vec![c(0.5, -0.2), c(0.3, 0.1), c(2.0, 0.0)],
        ];
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = c(0.0, 0.0);
                for k in 0..3 {
                    s += l[i][k] * l[j][k].conj();
                }
                assert!((s - a[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_recovers_known_vector() {
        let a = vec![
            vec![c(5.0, 0.0), c(1.0, -2.0)],
            vec![c(1.0, 2.0), c(4.0, 0.0)],
        ];
        let x_true = vec![c(1.5, -0.5), c(-0.7, 2.0)];
        let b: Vec<Complex64> = (0..2)
            .map(|i| a[i][0] * x_true[0] + a[i][1] * x_true[1])
            .collect();
        let x = solve_hermitian(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = vec![
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        ];
        let err = cholesky(&a).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
    }
}
