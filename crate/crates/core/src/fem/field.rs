//! Piecewise-linear fields on mapped meshes with point evaluation and
//! per-triangle gradients; evaluation outside the domain extends by zero.

use std::sync::Arc;

use crate::geometry::SideCondition;
use crate::mesh::MappedMesh;

/// Nodal P1 field on a mapped mesh.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub mesh: Arc<MappedMesh>,
    pub nodal: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: Arc<MappedMesh>, nodal: Vec<f64>) -> Self {
        assert_eq!(nodal.len(), mesh.num_nodes());
        DiscreteField { mesh, nodal }
    }

    /// Samples a function at the mesh nodes.
    pub fn interpolate(mesh: Arc<MappedMesh>, f: impl Fn(f64, f64) -> f64) -> Self {
        let nodal = mesh.nodes.iter().map(|n| f(n[0], n[1])).collect();
        DiscreteField { mesh, nodal }
    }

    /// Locates the triangle containing `(x, y)` and its barycentric weights.
    ///
    /// Structured lookup: the x column is direct, the y layer is a binary
    /// search over the (monotone) mapped rows, then the quad's diagonal picks
    /// the triangle. Returns `None` outside the domain.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, [f64; 3])> {
        let mesh = &self.mesh;
        let nx = mesh.grid.nx;
        let ny = mesh.grid.ny;
        let t = mesh.spec.width;
        let x = match mesh.spec.side_condition {
            SideCondition::Periodic => x.rem_euclid(t),
            SideCondition::Dirichlet => {
                if !(0.0..=t).contains(&x) {
                    return None;
                }
                x
            }
        };
        let dx = t / nx as f64;
        let i = ((x / dx) as usize).min(nx - 1);
        let s = (x - dx * i as f64) / dx;

        // y at mapped row j along the vertical line through x
        let row_y = |j: usize| {
            let yl = mesh.nodes[mesh.node_id(i, j)][1];
            let yr = mesh.nodes[mesh.node_id(i + 1, j)][1];
            (1.0 - s) * yl + s * yr
        };
        let eps = 1e-12 * mesh.spec.height;
        if y < row_y(0) - eps || y > row_y(ny) + eps {
            return None;
        }
        let (mut lo, mut hi) = (0usize, ny);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if y >= row_y(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let j = lo.min(ny - 1);

        // the quad is split along the diagonal a -> c
        let a = mesh.nodes[mesh.node_id(i, j)];
        let c = mesh.nodes[mesh.node_id(i + 1, j + 1)];
        let cross = (c[0] - a[0]) * (y - a[1]) - (c[1] - a[1]) * (x - a[0]);
        let k = 2 * (i * ny + j) + if cross <= 0.0 { 0 } else { 1 };
        let tri = &mesh.triangles[k];
        let p0 = mesh.nodes[tri[0]];
        let p1 = mesh.nodes[tri[1]];
        let p2 = mesh.nodes[tri[2]];
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (y - p0[1])) / det;
        let l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (x - p0[0]) * (p1[1] - p0[1])) / det;
        let l0 = 1.0 - l1 - l2;
        let tol = -1e-10;
        if l0 < tol || l1 < tol || l2 < tol {
            return None;
        }
        Some((k, [l0, l1, l2]))
    }

    /// Point value; zero outside the domain (extension by zero).
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.locate(x, y) {
            Some((k, l)) => {
                let t = &self.mesh.triangles[k];
                l[0] * self.nodal[t[0]] + l[1] * self.nodal[t[1]] + l[2] * self.nodal[t[2]]
            }
            None => 0.0,
        }
    }

    /// Piecewise-constant gradient; zero outside the domain.
    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        match self.locate(x, y) {
            Some((k, _)) => self.tri_grad(k),
            None => [0.0, 0.0],
        }
    }

    /// Gradient on triangle `k`.
    pub fn tri_grad(&self, k: usize) -> [f64; 2] {
        let t = &self.mesh.triangles[k];
        let p = [
            self.mesh.nodes[t[0]],
            self.mesh.nodes[t[1]],
            self.mesh.nodes[t[2]],
        ];
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let mut g = [0.0; 2];
        for a in 0..3 {
            let e = [
                p[(a + 2) % 3][0] - p[(a + 1) % 3][0],
                p[(a + 2) % 3][1] - p[(a + 1) % 3][1],
            ];
            // grad of the hat at vertex a is perp(e_a) / (2A)
            g[0] += self.nodal[t[a]] * (-e[1]) / area2;
            g[1] += self.nodal[t[a]] * e[0] / area2;
        }
        g
    }

    /// `integral of the nodal interpolant` over the mesh.
    pub fn integral(&self) -> f64 {
        self.mesh
            .triangles
            .iter()
            .map(|t| {
                let area = self.mesh.tri_area(t);
                area * (self.nodal[t[0]] + self.nodal[t[1]] + self.nodal[t[2]]) / 3.0
            })
            .sum()
    }

    /// Squared L2 norm via the consistent element mass matrix.
    pub fn l2_norm_sq(&self) -> f64 {
        self.mesh
            .triangles
            .iter()
            .map(|t| {
                let area = self.mesh.tri_area(t);
                let u = [self.nodal[t[0]], self.nodal[t[1]], self.nodal[t[2]]];
                let s = u[0] + u[1] + u[2];
                area / 12.0 * (s * s + u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
            })
            .sum()
    }

    /// Squared H1 seminorm (sum of `A |grad|^2` over triangles).
    pub fn h1_seminorm_sq(&self) -> f64 {
        (0..self.mesh.triangles.len())
            .map(|k| {
                let g = self.tri_grad(k);
                let area = self.mesh.tri_area(&self.mesh.triangles[k]);
                area * (g[0] * g[0] + g[1] * g[1])
            })
            .sum()
    }

    /// Exact `int grad(self) . grad(other)` over the shared mesh.
    pub fn dirichlet_pairing(&self, other: &DiscreteField) -> f64 {
        assert_eq!(self.nodal.len(), other.nodal.len());
        (0..self.mesh.triangles.len())
            .map(|k| {
                let ga = self.tri_grad(k);
                let gb = other.tri_grad(k);
                let area = self.mesh.tri_area(&self.mesh.triangles[k]);
                area * (ga[0] * gb[0] + ga[1] * gb[1])
            })
            .sum()
    }

    /// Exact `int self * other` over the shared mesh (consistent mass).
    pub fn l2_pairing(&self, other: &DiscreteField) -> f64 {
        assert_eq!(self.nodal.len(), other.nodal.len());
        self.mesh
            .triangles
            .iter()
            .map(|t| {
                let area = self.mesh.tri_area(t);
                let u = [self.nodal[t[0]], self.nodal[t[1]], self.nodal[t[2]]];
                let v = [other.nodal[t[0]], other.nodal[t[1]], other.nodal[t[2]]];
                let su = u[0] + u[1] + u[2];
                let sv = v[0] + v[1] + v[2];
                area / 12.0 * (su * sv + u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
            })
            .sum()
    }

    /// Pointwise linear combination on the same mesh.
    pub fn axpy(&mut self, alpha: f64, other: &DiscreteField) {
        assert_eq!(self.nodal.len(), other.nodal.len());
        for (a, b) in self.nodal.iter_mut().zip(&other.nodal) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in self.nodal.iter_mut() {
            *a *= alpha;
        }
    }
}
