//! First-order eigenvalue prediction under boundary perturbation.
//!
//! For an eigenvalue group of multiplicity `J` the first-order corrections
//! are the eigenvalues of the reduced pencil `A c = kappa B c` with
//! `A_ij = -int_G sigma (d_nu phi_i)(d_nu phi_j) dS` over the reference
//! bottom boundary and `B` the L2 Gram matrix of the group (identity for a
//! mass-orthonormal basis). A simple eigenvalue is the case `J = 1`.

use crate::eigen::dense_sym_pencil_eig;
use crate::error::{Error, Result};
use crate::fem::{boundary_integral, BoundaryFlux};
use crate::geometry::SigmaField;

/// The reduced `J x J` pencil of an eigenvalue group.
#[derive(Debug, Clone)]
pub struct ReducedPencil {
    pub j: usize,
    /// Row-major `A_ij = -int sigma q_i q_j dS`.
    pub a: Vec<f64>,
    /// Row-major L2 Gram matrix of the group.
    pub b: Vec<f64>,
}

/// First-order predictions for a group at `lambda_m`.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub lambda_m: f64,
    /// Corrections, ascending.
    pub kappa: Vec<f64>,
    /// `lambda_m + kappa_k`, ascending.
    pub predicted: Vec<f64>,
}

/// Assembles the reduced pencil from the recovered fluxes of the group and
/// the signed displacement field. `gram` is the row-major L2 Gram matrix of
/// the eigenfunctions (pass `None` for an orthonormal basis).
pub fn reduced_pencil(
    fluxes: &[BoundaryFlux],
    sigma: &SigmaField,
    gram: Option<&[f64]>,
) -> Result<ReducedPencil> {
    let j = fluxes.len();
    let mut a = vec![0.0; j * j];
    for p in 0..j {
        for q in 0..=p {
            let v = -boundary_integral(&fluxes[p], &fluxes[q], sigma)?;
            a[p * j + q] = v;
            a[q * j + p] = v;
        }
    }
    let b = match gram {
        Some(g) => {
            if g.len() != j * j {
                return Err(Error::CountMismatch {
                    expected: j * j,
                    got: g.len(),
                });
            }
            g.to_vec()
        }
        None => {
            let mut b = vec![0.0; j * j];
            for p in 0..j {
                b[p * j + p] = 1.0;
            }
            b
        }
    };
    Ok(ReducedPencil { j, a, b })
}

/// Solves the reduced pencil and forms the predicted group values.
pub fn predict(pencil: &ReducedPencil, lambda_m: f64) -> Result<Prediction> {
    let (kappa, _) = dense_sym_pencil_eig(&pencil.a, &pencil.b, pencil.j)?;
    let predicted = kappa.iter().map(|&k| lambda_m + k).collect();
    Ok(Prediction {
        lambda_m,
        kappa,
        predicted,
    })
}

/// Matches predictions to the perturbed group by rank (both ascending) and
/// returns the remainders `r_k = mu_k - (lambda_m + kappa_k)`.
pub fn match_and_remainder(prediction: &Prediction, perturbed: &[f64]) -> Result<Vec<f64>> {
    if perturbed.len() != prediction.predicted.len() {
        return Err(Error::CountMismatch {
            expected: prediction.predicted.len(),
            got: perturbed.len(),
        });
    }
    let mut mu = perturbed.to_vec();
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(mu
        .iter()
        .zip(&prediction.predicted)
        .map(|(&m, &p)| m - p)
        .collect())
}
