//! Poisson and Laplace solves on a discretization, with Dirichlet lifting for
//! inhomogeneous boundary data.

use super::{element_mass, element_stiffness, BandedCholesky, DiscreteField, Discretization};

/// Solves `-Lap u = f` with homogeneous Dirichlet data (periodic in x when the
/// domain is a strip). The load enters through its nodal interpolant.
pub fn solve_poisson(
    disc: &Discretization,
    chol: &BandedCholesky,
    f: impl Fn(f64, f64) -> f64,
) -> DiscreteField {
    let f_nodal: Vec<f64> = disc.mesh.nodes.iter().map(|n| f(n[0], n[1])).collect();
    let mut rhs = vec![0.0; disc.dofs.n_dofs];
    for tri in &disc.mesh.triangles {
        let p = [
            disc.mesh.nodes[tri[0]],
            disc.mesh.nodes[tri[1]],
            disc.mesh.nodes[tri[2]],
        ];
        let (_, area) = element_stiffness(p);
        let me = element_mass(area);
        for a in 0..3 {
            let Some(da) = disc.dofs.dof(tri[a]) else { continue };
            for b in 0..3 {
                rhs[da] += me[a][b] * f_nodal[tri[b]];
            }
        }
    }
    chol.solve_in_place(&mut rhs);
    disc.field_from_dofs(&rhs)
}

/// Solves `Lap u = 0` with Dirichlet data `g` prescribed on all boundary
/// nodes. `g` is a full nodal vector; values at unknown nodes are ignored.
///
/// The lifting `u = u0 + g~` with `g~` the nodal extension by zero turns the
/// problem into `K u0 = -K g~` over the unknowns.
pub fn solve_laplace_with_boundary(
    disc: &Discretization,
    chol: &BandedCholesky,
    g: &[f64],
) -> DiscreteField {
    assert_eq!(g.len(), disc.mesh.num_nodes());
    let mut rhs = vec![0.0; disc.dofs.n_dofs];
    for tri in &disc.mesh.triangles {
        let p = [
            disc.mesh.nodes[tri[0]],
            disc.mesh.nodes[tri[1]],
            disc.mesh.nodes[tri[2]],
        ];
        let (ke, _) = element_stiffness(p);
        for a in 0..3 {
            let Some(da) = disc.dofs.dof(tri[a]) else { continue };
            for b in 0..3 {
                if disc.dofs.dof(tri[b]).is_none() {
                    rhs[da] -= ke[a][b] * g[tri[b]];
                }
            }
        }
    }
    chol.solve_in_place(&mut rhs);
    let mut field = disc.field_from_dofs(&rhs);
    for (node, v) in field.nodal.iter_mut().enumerate() {
        if disc.dofs.dof(node).is_none() {
            *v = g[node];
        }
    }
    field
}
