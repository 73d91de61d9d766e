//! P1 finite elements on mapped meshes: dof numbering, pencil assembly,
//! direct solves, discrete fields, boundary-flux recovery and sliver
//! quadrature.

pub mod field;
pub mod flux;
pub mod poisson;
pub mod sliver;
pub mod sparse;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Result;
use crate::geometry::SideCondition;
use crate::mesh::{build_mapped_mesh, MappedMesh, ReferenceGrid};

pub use field::DiscreteField;
pub use flux::{boundary_integral, recover_boundary_flux, weighted_boundary_integral, BoundaryFlux};
pub use poisson::{solve_laplace_with_boundary, solve_poisson};
pub use sliver::{sliver_integral, SliverIntegrand, SliverRegion};
pub use sparse::{BandedCholesky, SparseSymMatrix};

/// Maps mesh nodes to unknown indices.
///
/// Dofs are ordered column-major (x outer, y inner) so the stiffness matrix is
/// banded with bandwidth about `ny`. With periodic sides the `x = 0` column is
/// placed last: its wrap coupling to the `x = T - dx` column would otherwise
/// destroy the band, so it becomes the dense border of the factorization.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_dofs: usize,
    /// Trailing dense-border size handed to [`BandedCholesky::factor`].
    pub border: usize,
    node_dof: Vec<Option<usize>>,
}

impl DofMap {
    pub fn build(mesh: &MappedMesh) -> Self {
        let nx = mesh.grid.nx;
        let ny = mesh.grid.ny;
        let mut node_dof = vec![None; mesh.num_nodes()];
        let id = |i: usize, j: usize| i * (ny + 1) + j;
        let (n_dofs, border) = match mesh.spec.side_condition {
            SideCondition::Dirichlet => {
                for i in 1..nx {
                    for j in 1..ny {
                        node_dof[id(i, j)] = Some((i - 1) * (ny - 1) + (j - 1));
                    }
                }
                ((nx - 1) * (ny - 1), 0)
            }
            SideCondition::Periodic => {
                for i in 1..nx {
                    for j in 1..ny {
                        node_dof[id(i, j)] = Some((i - 1) * (ny - 1) + (j - 1));
                    }
                }
                let base = (nx - 1) * (ny - 1);
                for j in 1..ny {
                    let dof = Some(base + (j - 1));
                    node_dof[id(0, j)] = dof;
                    node_dof[id(nx, j)] = dof;
                }
                (nx * (ny - 1), ny - 1)
            }
        };
        DofMap {
            n_dofs,
            border,
            node_dof,
        }
    }

    /// Like [`DofMap::build`] but leaves the top row free, realizing a
    /// natural (zero Neumann) condition there.
    pub fn build_free_top(mesh: &MappedMesh) -> Self {
        let nx = mesh.grid.nx;
        let ny = mesh.grid.ny;
        let mut node_dof = vec![None; mesh.num_nodes()];
        let id = |i: usize, j: usize| i * (ny + 1) + j;
        let (n_dofs, border) = match mesh.spec.side_condition {
            SideCondition::Dirichlet => {
                for i in 1..nx {
                    for j in 1..=ny {
                        node_dof[id(i, j)] = Some((i - 1) * ny + (j - 1));
                    }
                }
                ((nx - 1) * ny, 0)
            }
            SideCondition::Periodic => {
                for i in 1..nx {
                    for j in 1..=ny {
                        node_dof[id(i, j)] = Some((i - 1) * ny + (j - 1));
                    }
                }
                let base = (nx - 1) * ny;
                for j in 1..=ny {
                    let dof = Some(base + (j - 1));
                    node_dof[id(0, j)] = dof;
                    node_dof[id(nx, j)] = dof;
                }
                (nx * ny, ny)
            }
        };
        DofMap {
            n_dofs,
            border,
            node_dof,
        }
    }

    #[inline]
    pub fn dof(&self, node: usize) -> Option<usize> {
        self.node_dof[node]
    }
}

/// Element stiffness `K_ab = (e_a . e_b) / (4 A)` with `e_a` the edge opposite
/// vertex `a`.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], f64) {
    let e = [
        [p[2][0] - p[1][0], p[2][1] - p[1][1]],
        [p[0][0] - p[2][0], p[0][1] - p[2][1]],
        [p[1][0] - p[0][0], p[1][1] - p[0][1]],
    ];
    let area = 0.5 * (e[2][0] * (-e[1][1]) - e[2][1] * (-e[1][0]));
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = (e[a][0] * e[b][0] + e[a][1] * e[b][1]) / (4.0 * area);
        }
    }
    (k, area)
}

/// Element mass `M_ab = A (1 + delta_ab) / 12`.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let o = area / 12.0;
    let d = area / 6.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Assembles the stiffness/mass pencil over the unknowns of `dofs`.
pub fn assemble_pencil(mesh: &MappedMesh, dofs: &DofMap) -> (SparseSymMatrix, SparseSymMatrix) {
    let n = dofs.n_dofs;
    let mut krows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut mrows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for tri in &mesh.triangles {
        let p = [
            mesh.nodes[tri[0]],
            mesh.nodes[tri[1]],
            mesh.nodes[tri[2]],
        ];
        let (ke, area) = element_stiffness(p);
        let me = element_mass(area);
        for a in 0..3 {
            let Some(da) = dofs.dof(tri[a]) else { continue };
            for b in 0..3 {
                let Some(db) = dofs.dof(tri[b]) else { continue };
                *krows[da].entry(db).or_insert(0.0) += ke[a][b];
                *mrows[da].entry(db).or_insert(0.0) += me[a][b];
            }
        }
    }
    (
        SparseSymMatrix::from_rows(krows),
        SparseSymMatrix::from_rows(mrows),
    )
}

/// A mesh together with its dof map and assembled pencil.
pub struct Discretization {
    pub mesh: Arc<MappedMesh>,
    pub dofs: DofMap,
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
}

impl Discretization {
    pub fn new(spec: &crate::geometry::DomainSpec, grid: &ReferenceGrid) -> Result<Self> {
        let mesh = Arc::new(build_mapped_mesh(spec, grid)?);
        let dofs = DofMap::build(&mesh);
        let (stiffness, mass) = assemble_pencil(&mesh, &dofs);
        Ok(Discretization {
            mesh,
            dofs,
            stiffness,
            mass,
        })
    }

    /// Like [`Discretization::new`] but with a free (natural Neumann) top row.
    pub fn new_free_top(spec: &crate::geometry::DomainSpec, grid: &ReferenceGrid) -> Result<Self> {
        let mesh = Arc::new(build_mapped_mesh(spec, grid)?);
        let dofs = DofMap::build_free_top(&mesh);
        let (stiffness, mass) = assemble_pencil(&mesh, &dofs);
        Ok(Discretization {
            mesh,
            dofs,
            stiffness,
            mass,
        })
    }

    /// Cholesky factorization of the stiffness matrix (periodic border dense).
    pub fn factor_stiffness(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(&self.stiffness, self.dofs.border)
    }

    /// Expands a dof vector to a full nodal field (zero on Dirichlet nodes).
    pub fn field_from_dofs(&self, x: &[f64]) -> DiscreteField {
        let mut nodal = vec![0.0; self.mesh.num_nodes()];
        for (node, d) in self.dofs.node_dof.iter().enumerate() {
            if let Some(d) = d {
                nodal[node] = x[*d];
            }
        }
        DiscreteField::new(Arc::clone(&self.mesh), nodal)
    }

    /// Restricts a nodal field to the dof vector (slave nodes read once).
    pub fn dofs_from_field(&self, field: &DiscreteField) -> Vec<f64> {
        let mut x = vec![0.0; self.dofs.n_dofs];
        for (node, d) in self.dofs.node_dof.iter().enumerate() {
            if let Some(d) = d {
                x[*d] = field.nodal[node];
            }
        }
        x
    }
}
