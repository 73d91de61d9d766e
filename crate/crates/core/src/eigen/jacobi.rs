//! Dense symmetric pencil eigensolver: Cholesky reduction to standard form
//! followed by cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::fem::sparse::{dense_backward, dense_cholesky_lower};

/// Solves `A v = mu B v` for symmetric `A` and positive definite `B`, both
/// dense row-major `n x n`. Returns eigenvalues ascending and B-orthonormal
/// eigenvectors as columns of a row-major matrix.
pub fn dense_sym_pencil_eig(a: &[f64], b: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }

    let mut l = b.to_vec();
    dense_cholesky_lower(&mut l, n).map_err(|_| Error::NotPositiveDefinite(0))?;

    // C = L^{-1} A L^{-T}
    let mut c = a.to_vec();
    // C <- L^{-1} C (forward solve on each column)
    for col in 0..n {
        for i in 0..n {
            let mut s = c[i * n + col];
            for k in 0..i {
                s -= l[i * n + k] * c[k * n + col];
            }
            c[i * n + col] = s / l[i * n + i];
        }
    }
    // C <- C L^{-T} (forward solve on each row)
    for row in 0..n {
        for i in 0..n {
            let mut s = c[row * n + i];
            for k in 0..i {
                s -= l[i * n + k] * c[row * n + k];
            }
            c[row * n + i] = s / l[i * n + i];
        }
    }

    let (mut vals, mut vecs) = jacobi_eig(&mut c, n);

    // back-transform: x = L^{-T} y, column by column
    for col in 0..n {
        let mut y: Vec<f64> = (0..n).map(|i| vecs[i * n + col]).collect();
        dense_backward(&l, n, &mut y);
        for i in 0..n {
            vecs[i * n + col] = y[i];
        }
    }

    // sort ascending, carrying columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| vals[p].partial_cmp(&vals[q]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&p| vals[p]).collect();
    let mut sorted_vecs = vec![0.0; n * n];
    for (col, &p) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[i * n + col] = vecs[i * n + p];
        }
    }
    vals = sorted_vals;
    vecs = sorted_vecs;
    Ok((vals, vecs))
}

/// Cyclic Jacobi on a symmetric matrix (destroyed); returns eigenvalues and
/// the accumulated rotation matrix (columns are eigenvectors).
fn jacobi_eig(c: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| c[i * n + j] * c[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = c[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = c[p * n + p];
                let aqq = c[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let ckp = c[k * n + p];
                    let ckq = c[k * n + q];
                    c[k * n + p] = cos * ckp - sin * ckq;
                    c[k * n + q] = sin * ckp + cos * ckq;
                }
                for k in 0..n {
                    let cpk = c[p * n + k];
                    let cqk = c[q * n + k];
                    c[p * n + k] = cos * cpk - sin * cqk;
                    c[q * n + k] = sin * cpk + cos * cqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cos * vkp - sin * vkq;
                    v[k * n + q] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| c[i * n + i]).collect();
    (vals, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity(n: usize) -> Vec<f64> {
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            b[i * n + i] = 1.0;
        }
        b
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let a = vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let (vals, _) = dense_sym_pencil_eig(&a, &identity(3), 3).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(vals[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = dense_sym_pencil_eig(&a, &identity(2), 2).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-14);
        // eigenvector of 1 is (1, -1)/sqrt(2) up to sign
        assert_relative_eq!(vecs[0].abs(), vecs[2].abs(), epsilon = 1e-13);
        assert!(vecs[0] * vecs[2] < 0.0);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let a = vec![0.0; 9];
        let (vals, _) = dense_sym_pencil_eig(&a, &identity(3), 3).unwrap();
        for v in vals {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn nontrivial_mass_rescales_spectrum() {
        // A = diag(2, 5), B = diag(2, 1): pencil eigenvalues 1 and 5
        let a = vec![2.0, 0.0, 0.0, 5.0];
        let b = vec![2.0, 0.0, 0.0, 1.0];
        let (vals, vecs) = dense_sym_pencil_eig(&a, &b, 2).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 5.0, epsilon = 1e-14);
        // B-orthonormality
        assert_relative_eq!(2.0 * vecs[0] * vecs[0] + vecs[2] * vecs[2], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn three_by_three_matches_characteristic_roots() {
        // A has known spectrum {0, 3, 3} after shift: use A = J (all ones),
        // spectrum {0, 0, 3}
        let a = vec![1.0; 9];
        let (vals, _) = dense_sym_pencil_eig(&a, &identity(3), 3).unwrap();
        assert!(vals[0].abs() < 1e-13 && vals[1].abs() < 1e-13);
        assert_relative_eq!(vals[2], 3.0, epsilon = 1e-13);
    }

    #[test]
    fn residuals_and_b_orthonormality_hold() {
        // fixed symmetric 4x4 with a non-diagonal SPD mass
        let a = vec![
            4.0, 1.0, 0.5, 0.0, 1.0, 3.0, 1.0, 0.2, 0.5, 1.0, 5.0, 1.0, 0.0, 0.2, 1.0, 2.0,
        ];
        let b = vec![
            2.0, 0.3, 0.0, 0.0, 0.3, 2.0, 0.3, 0.0, 0.0, 0.3, 2.0, 0.3, 0.0, 0.0, 0.3, 2.0,
        ];
        let n = 4;
        let (vals, vecs) = dense_sym_pencil_eig(&a, &b, n).unwrap();
        for c in 0..n {
            for cc in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += vecs[i * n + c] * b[i * n + j] * vecs[j * n + cc];
                    }
                }
                let expect = if c == cc { 1.0 } else { 0.0 };
                assert_relative_eq!(s, expect, epsilon = 1e-12);
            }
            for i in 0..n {
                let mut av = 0.0;
                let mut bv = 0.0;
                for j in 0..n {
                    av += a[i * n + j] * vecs[j * n + c];
                    bv += b[i * n + j] * vecs[j * n + c];
                }
                assert_relative_eq!(av, vals[c] * bv, epsilon = 1e-11);
            }
        }
        // eigenvalues ascending
        for c in 1..n {
            assert!(vals[c] >= vals[c - 1]);
        }
    }

    #[test]
    fn rejects_indefinite_mass() {
        let a = identity(2);
        let b = vec![1.0, 2.0, 2.0, 1.0];
        assert!(dense_sym_pencil_eig(&a, &b, 2).is_err());
    }
}
