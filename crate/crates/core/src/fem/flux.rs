//! Variational recovery of the outward normal derivative on the bottom
//! boundary and weighted boundary integrals.
//!
//! For an eigenpair `(lambda, phi)` the flux `q = d_nu phi` satisfies
//! `int_G q w dS = int_O grad phi . grad w - lambda int_O phi w` for every
//! bottom hat `w`; solving the 1D mass system on the boundary polyline gives a
//! superconvergent piecewise-linear `q`.

use crate::error::{Error, Result};
use crate::geometry::{SideCondition, SigmaField};
use crate::mesh::{BoundaryQuadrature, BoundaryTag};

use super::{element_mass, element_stiffness, DiscreteField};

/// Recovered normal derivative along the bottom boundary.
#[derive(Debug, Clone)]
pub struct BoundaryFlux {
    /// Quadrature abscissae (shared with the [`BoundaryQuadrature`]).
    pub nodes: Vec<f64>,
    /// Flux values at the quadrature nodes.
    pub values: Vec<f64>,
    /// Flux values at the bottom mesh nodes (`nx` entries when periodic,
    /// `nx + 1` otherwise).
    pub nodal: Vec<f64>,
}

/// Recovers `d_nu phi` on the bottom boundary of the field's mesh. `lambda`
/// is the eigenvalue of the pair (use 0 for a harmonic field).
pub fn recover_boundary_flux(
    field: &DiscreteField,
    lambda: f64,
    quad: &BoundaryQuadrature,
) -> BoundaryFlux {
    let mesh = &field.mesh;
    let nx = mesh.grid.nx;
    let ny = mesh.grid.ny;
    assert_eq!(quad.nodes.len(), 2 * nx, "quadrature belongs to another mesh");
    let periodic = mesh.spec.side_condition == SideCondition::Periodic;
    let n_b = if periodic { nx } else { nx + 1 };

    // right-hand side: residual pairing with the bottom hat functions
    let mut rhs = vec![0.0; n_b];
    for tri in &mesh.triangles {
        if tri.iter().all(|&n| mesh.tags[n] != BoundaryTag::Bottom) {
            continue;
        }
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let (ke, area) = element_stiffness(p);
        let me = element_mass(area);
        for a in 0..3 {
            if mesh.tags[tri[a]] != BoundaryTag::Bottom {
                continue;
            }
            let i = tri[a] / (ny + 1);
            let row = if periodic { i % nx } else { i };
            for b in 0..3 {
                rhs[row] += (ke[a][b] - lambda * me[a][b]) * field.nodal[tri[b]];
            }
        }
    }

    // 1D mass matrix on the bottom polyline (arc-length edge weights)
    let lens: Vec<f64> = (0..nx)
        .map(|i| {
            let a = mesh.nodes[mesh.node_id(i, 0)];
            let b = mesh.nodes[mesh.node_id(i + 1, 0)];
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
        })
        .collect();
    let nodal = if periodic {
        let diag: Vec<f64> = (0..nx)
            .map(|i| (lens[(i + nx - 1) % nx] + lens[i]) / 3.0)
            .collect();
        let off: Vec<f64> = lens.iter().map(|&l| l / 6.0).collect();
        solve_cyclic_tridiagonal(&diag, &off, &rhs)
    } else {
        // The corner hats overlap the side boundary, so their residual rows
        // carry side flux and are discarded; the corner values are closed by
        // quadratic extrapolation q_0 = 2 q_1 - q_2 (exact for linear flux),
        // folded into the first and last interior rows.
        let m = nx - 1; // unknowns q_1 .. q_{nx-1}
        let mut diag: Vec<f64> = (1..nx).map(|i| (lens[i - 1] + lens[i]) / 3.0).collect();
        let mut lower: Vec<f64> = (1..m).map(|k| lens[k] / 6.0).collect();
        let mut upper = lower.clone();
        let inner_rhs = rhs[1..nx].to_vec();
        diag[0] += 2.0 * lens[0] / 6.0;
        if m >= 2 {
            upper[0] -= lens[0] / 6.0;
            diag[m - 1] += 2.0 * lens[nx - 1] / 6.0;
            lower[m - 2] -= lens[nx - 1] / 6.0;
        }
        let inner = solve_general_tridiagonal(&diag, &lower, &upper, &inner_rhs);
        let mut nodal = vec![0.0; nx + 1];
        nodal[1..nx].copy_from_slice(&inner);
        nodal[0] = 2.0 * nodal[1] - nodal[2];
        nodal[nx] = 2.0 * nodal[nx - 1] - nodal[nx - 2];
        nodal
    };

    // interpolate at the quadrature abscissae
    let dx = mesh.spec.width / nx as f64;
    let values = quad
        .nodes
        .iter()
        .zip(&quad.edge_of)
        .map(|(&xq, &e)| {
            let s = (xq - dx * e as f64) / dx;
            let right = if periodic { (e + 1) % nx } else { e + 1 };
            (1.0 - s) * nodal[e] + s * nodal[right]
        })
        .collect();

    BoundaryFlux {
        nodes: quad.nodes.clone(),
        values,
        nodal,
    }
}

/// `int_G sigma q_a q_b dS` over the reference bottom boundary.
pub fn boundary_integral(a: &BoundaryFlux, b: &BoundaryFlux, sigma: &SigmaField) -> Result<f64> {
    if a.values.len() != sigma.nodes.len() || b.values.len() != sigma.nodes.len() {
        return Err(Error::NodeMismatch {
            left: a.values.len().min(b.values.len()),
            right: sigma.nodes.len(),
        });
    }
    Ok((0..sigma.nodes.len())
        .map(|q| sigma.weights[q] * sigma.sigma[q] * a.values[q] * b.values[q])
        .sum())
}

/// `int_G q_a q_b dS` with explicit weights.
pub fn weighted_boundary_integral(a: &BoundaryFlux, b: &BoundaryFlux, weights: &[f64]) -> f64 {
    assert_eq!(a.values.len(), weights.len());
    assert_eq!(b.values.len(), weights.len());
    (0..weights.len())
        .map(|q| weights[q] * a.values[q] * b.values[q])
        .sum()
}

/// Thomas algorithm for a general tridiagonal system (`lower[k]` couples row
/// `k + 1` to column `k`, `upper[k]` row `k` to column `k + 1`).
fn solve_general_tridiagonal(
    diag: &[f64],
    lower: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![rhs[0] / diag[0]];
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i - 1] * c[i - 1];
        c[i] = if i < n - 1 { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    d
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off.first().copied().unwrap_or(0.0) / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        c[i] = if i < n - 1 { off[i] / m } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    d
}

/// Sherman-Morrison solve of the cyclic symmetric tridiagonal system with
/// corner entry `off[n-1]`.
fn solve_cyclic_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    let corner = off[n - 1];
    let gamma = -diag[0];
    let mut diag_mod = diag.to_vec();
    diag_mod[0] -= gamma;
    diag_mod[n - 1] -= corner * corner / gamma;
    let inner_off = &off[..n - 1];
    let y = solve_tridiagonal(&diag_mod, inner_off, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner;
    let z = solve_tridiagonal(&diag_mod, inner_off, &u);
    let vy = y[0] + corner / gamma * y[n - 1];
    let vz = z[0] + corner / gamma * z[n - 1];
    let factor = vy / (1.0 + vz);
    (0..n).map(|i| y[i] - factor * z[i]).collect()
}
