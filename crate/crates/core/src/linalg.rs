//! Small dense eigenvalue routines for Gram-matrix checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix (row-major, `n × n`) by cyclic Jacobi
/// rotations, sorted ascending.
pub fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("matrix must be square".into()));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        let mut total = 0.0;
        for p in 0..n {
            for q in 0..n {
                let v = a[p][q] * a[p][q];
                total += v;
                if p != q {
                    off += v;
                }
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * total || off == 0.0 {
            let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                // Skip rotations that cannot change the diagonal after the early sweeps.
                if sweep > 3
                    && apq.abs() * 100.0 <= f64::EPSILON * a[p][p].abs().min(a[q][q].abs())
                {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r][p];
                    let arq = a[r][q];
                    a[r][p] = c * arp - s * arq;
                    a[p][r] = a[r][p];
                    a[r][q] = s * arp + c * arq;
                    a[q][r] = a[r][q];
                }
            }
        }
    }
    Err(Error::NonConvergence {
        what: "Jacobi eigenvalue sweeps",
        iterations: MAX_SWEEPS,
    })
}

/// Eigenvalues of a Hermitian matrix, sorted ascending.
///
/// Uses the real embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is that of
/// the input with every eigenvalue doubled; one copy of each is returned.
pub fn hermitian_eigenvalues(matrix: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("matrix must be square".into()));
    }
    let mut real = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            // Symmetrize so tiny non-Hermitian rounding does not leak in.
            let z = 0.5 * (matrix[i][j] + matrix[j][i].conj());
            real[i][j] = z.re;
            real[i + n][j + n] = z.re;
            real[i][j + n] = -z.im;
            real[i + n][j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(&real)?;
    Ok(doubled.into_iter().step_by(2).collect())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(matrix: &[Vec<Complex64>]) -> Result<f64> {
    let eig = hermitian_eigenvalues(matrix)?;
    Ok(eig.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_two_by_two() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let e = symmetric_eigenvalues(&m).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hilbert_matrix_smallest_eigenvalue() {
        // Smallest eigenvalue of the 5×5 Hilbert matrix is 3.287928772171e-6.
        let m: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| 1.0 / (i + j + 1) as f64).collect())
            .collect();
        let e = symmetric_eigenvalues(&m).unwrap();
        assert!((e[0] - 3.287_928_772_171e-6).abs() < 1e-15);
        assert!((e[4] - 1.567_050_691_098_231).abs() < 1e-13);
    }

    #[test]
    fn hermitian_rotation_generator() {
        // [[0, -i], [i, 0]] has eigenvalues ±1.
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        let m = vec![vec![z, -i], vec![i, z]];
        let e = hermitian_eigenvalues(&m).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outer_product_is_psd() {
        let v = [
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 2.0),
            Complex64::new(0.0, -1.0),
        ];
        let m: Vec<Vec<Complex64>> = v
            .iter()
            .map(|a| v.iter().map(|b| a * b.conj()).collect())
            .collect();
        let min = min_eigenvalue_hermitian(&m).unwrap();
        assert!(min.abs() < 1e-14);
        let e = hermitian_eigenvalues(&m).unwrap();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((e[2] - norm).abs() < 1e-13);
    }
}
