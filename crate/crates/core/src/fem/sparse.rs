//! Compressed sparse row storage for the symmetric stiffness/mass pencils.

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form with both triangles stored.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    pub dim: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds CSR from per-row sorted maps (deterministic ordering).
    pub fn from_rows(rows: Vec<std::collections::BTreeMap<usize, f64>>) -> Self {
        let dim = rows.len();
        let mut row_offsets = Vec::with_capacity(dim + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in rows {
            for (c, v) in row {
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        SparseSymMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                row += self.values[k] * y[self.col_indices[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// Maximum asymmetry `max |a_ij - a_ji|` (diagnostic; zero by assembly).
    pub fn asymmetry(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.dim {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let aji = self.get(j, i);
                max = max.max((self.values[k] - aji).abs());
            }
        }
        max
    }

    /// Infinity norm `max_i sum_j |a_ij|`.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                self.values[self.row_offsets[i]..self.row_offsets[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum()
            })
            .fold(0.0f64, f64::max)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        match self.col_indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Writes the matrix in MatrixMarket coordinate format.
    pub fn dump_matrix_market<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        let nnz_lower = (0..self.dim)
            .flat_map(|i| {
                let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
                self.col_indices[lo..hi].iter().filter(move |&&j| j <= i)
            })
            .count();
        writeln!(w, "{} {} {}", self.dim, self.dim, nnz_lower)?;
        for i in 0..self.dim {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                if j <= i {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, self.values[k])?;
                }
            }
        }
        Ok(())
    }
}

/// Banded Cholesky factorization with an optional dense trailing border.
///
/// The leading `n - border` rows must be banded; the last `border` rows may
/// couple anywhere (used for the periodic master column of wide meshes). The
/// border is eliminated through a dense Schur complement.
pub struct BandedCholesky {
    n: usize,
    nb: usize,
    bw: usize,
    /// Lower factor of the banded block, row i at `i * (bw + 1)`, entry
    /// `(i, j)` at offset `j - i + bw`.
    band: Vec<f64>,
    /// `W = L^{-1} C`, column-major `nb x m`.
    w: Vec<f64>,
    /// Dense Cholesky factor of the Schur complement, row-major `m x m` lower.
    schur: Vec<f64>,
}

impl BandedCholesky {
    /// Factors a symmetric positive definite CSR matrix whose last `border`
    /// rows form the dense border.
    pub fn factor(a: &SparseSymMatrix, border: usize) -> Result<Self> {
        let n = a.dim;
        assert!(border <= n);
        let nb = n - border;

        // bandwidth of the leading block
        let mut bw = 0usize;
        for i in 0..nb {
            for k in a.row_offsets[i]..a.row_offsets[i + 1] {
                let j = a.col_indices[k];
                if j < nb && j < i {
                    bw = bw.max(i - j);
                }
            }
        }

        let stride = bw + 1;
        let mut band = vec![0.0; nb * stride];
        let m = border;
        let mut c = vec![0.0; nb * m]; // column-major
        let mut d = vec![0.0; m * m];
        for i in 0..n {
            for k in a.row_offsets[i]..a.row_offsets[i + 1] {
                let j = a.col_indices[k];
                let v = a.values[k];
                if i < nb && j < nb {
                    if j <= i {
                        band[i * stride + (j + bw - i)] = v;
                    }
                } else if i < nb {
                    c[(j - nb) * nb + i] = v;
                } else if j >= nb {
                    d[(i - nb) * m + (j - nb)] = v;
                }
            }
        }

        // banded LL^T
        for i in 0..nb {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut sum = band[i * stride + (j + bw - i)];
                for k in klo..j {
                    sum -= band[i * stride + (k + bw - i)] * band[j * stride + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::FactorizationFailure {
                            pivot: i,
                            value: sum,
                        });
                    }
                    band[i * stride + bw] = sum.sqrt();
                } else {
                    band[i * stride + (j + bw - i)] = sum / band[j * stride + bw];
                }
            }
        }

        // W = L^{-1} C, column by column
        for col in 0..m {
            let w = &mut c[col * nb..(col + 1) * nb];
            forward_band(&band, nb, bw, w);
        }

        // Schur complement S = D - W^T W, then dense Cholesky
        let mut schur = vec![0.0; m * m];
        for p in 0..m {
            for q in 0..=p {
                let mut dot = 0.0;
                for i in 0..nb {
                    dot += c[p * nb + i] * c[q * nb + i];
                }
                schur[p * m + q] = d[p * m + q] - dot;
            }
        }
        dense_cholesky_lower(&mut schur, m)?;

        Ok(BandedCholesky {
            n,
            nb,
            bw,
            band,
            w: c,
            schur,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let m = self.n - self.nb;
        let (b1, b2) = b.split_at_mut(self.nb);
        // forward: y1 = L^{-1} b1
        forward_band(&self.band, self.nb, self.bw, b1);
        // y2 = Ls^{-1} (b2 - W^T y1)
        for p in 0..m {
            let mut dot = 0.0;
            for i in 0..self.nb {
                dot += self.w[p * self.nb + i] * b1[i];
            }
            b2[p] -= dot;
        }
        dense_forward(&self.schur, m, b2);
        dense_backward(&self.schur, m, b2);
        // x1 = L^{-T} (y1 - W x2)
        for p in 0..m {
            let xp = b2[p];
            if xp != 0.0 {
                for i in 0..self.nb {
                    b1[i] -= self.w[p * self.nb + i] * xp;
                }
            }
        }
        backward_band(&self.band, self.nb, self.bw, b1);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

fn forward_band(band: &[f64], nb: usize, bw: usize, b: &mut [f64]) {
    let stride = bw + 1;
    for i in 0..nb {
        let lo = i.saturating_sub(bw);
        let mut sum = b[i];
        for k in lo..i {
            sum -= band[i * stride + (k + bw - i)] * b[k];
        }
        b[i] = sum / band[i * stride + bw];
    }
}

fn backward_band(band: &[f64], nb: usize, bw: usize, b: &mut [f64]) {
    let stride = bw + 1;
    for ii in (0..nb).rev() {
        let hi = (ii + bw).min(nb - 1);
        let mut sum = b[ii];
        for k in (ii + 1)..=hi {
            // L[k][ii]
            sum -= band[k * stride + (ii + bw - k)] * b[k];
        }
        b[ii] = sum / band[ii * stride + bw];
    }
}

pub(crate) fn dense_cholesky_lower(a: &mut [f64], m: usize) -> Result<()> {
    for i in 0..m {
        for j in 0..=i {
            let mut sum = a[i * m + j];
            for k in 0..j {
                sum -= a[i * m + k] * a[j * m + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::FactorizationFailure {
                        pivot: i,
                        value: sum,
                    });
                }
                a[i * m + i] = sum.sqrt();
            } else {
                a[i * m + j] = sum / a[j * m + j];
            }
        }
    }
    Ok(())
}

pub(crate) fn dense_forward(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * m + k] * b[k];
        }
        b[i] = sum / l[i * m + i];
    }
}

pub(crate) fn dense_backward(l: &[f64], m: usize, b: &mut [f64]) {
    for i in (0..m).rev() {
        let mut sum = b[i];
        for k in (i + 1)..m {
            sum -= l[k * m + i] * b[k];
        }
        b[i] = sum / l[i * m + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn dense_to_csr(a: &[Vec<f64>]) -> SparseSymMatrix {
        let rows = a
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect::<BTreeMap<_, _>>()
            })
            .collect();
        SparseSymMatrix::from_rows(rows)
    }

    #[test]
    fn solves_small_spd_system_with_border() {
        // 1D Laplacian with a wrap coupling, border = last row
        let n = 8;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 2.5;
            if i + 1 < n {
                a[i][i + 1] = -1.0;
                a[i + 1][i] = -1.0;
            }
        }
        a[0][n - 1] = -1.0;
        a[n - 1][0] = -1.0;
        let csr = dense_to_csr(&a);
        for border in [0usize, 1, 3] {
            // border 0 would be non-banded due to the wrap entry, so skip it
            if border == 0 {
                continue;
            }
            let chol = BandedCholesky::factor(&csr, border).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sin()).collect();
            let x = chol.solve(&b);
            let r = csr.matvec_alloc(&x);
            for i in 0..n {
                assert!((r[i] - b[i]).abs() < 1e-12, "residual at {i}");
            }
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let csr = dense_to_csr(&a);
        assert!(BandedCholesky::factor(&csr, 0).is_err());
    }

    #[test]
    fn identity_solve_is_exact() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let csr = dense_to_csr(&a);
        let chol = BandedCholesky::factor(&csr, 0).unwrap();
        let x = chol.solve(&[3.0, -4.0]);
        assert_eq!(x, vec![3.0, -4.0]);
    }
}
