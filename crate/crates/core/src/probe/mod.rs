//! Numerical instantiation of the abstract two-domain framework: orthogonal
//! projectors between the ambient box space and the domain spaces, the
//! defect fields `Psi_phi` and `T phi`, the proximity estimate `eps`, the
//! remainder functional `rho`, and the reduced `tau` pencil built from sliver
//! integrals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{dense_sym_pencil_eig, smallest_eigenpairs, EigenSettings};
use crate::error::Result;
use crate::fem::{
    sliver_integral, solve_poisson, BandedCholesky, DiscreteField, Discretization,
    SliverIntegrand, SliverRegion,
};
use crate::geometry::{DomainPair, SideCondition};
use crate::mesh::ReferenceGrid;

/// Degree-5 (7-point) triangle rule, all points strictly interior so
/// piecewise-constant gradients of cross-mesh fields are never sampled on an
/// element interface.
const TRI7: [(f64, f64, f64); 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 0.225),
    (0.059_715_871_789_77, 0.470_142_064_105_115, 0.132_394_152_788_506),
    (0.470_142_064_105_115, 0.059_715_871_789_77, 0.132_394_152_788_506),
    (0.470_142_064_105_115, 0.470_142_064_105_115, 0.132_394_152_788_506),
    (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827),
    (0.101_286_507_323_456, 0.797_426_985_353_087, 0.125_939_180_544_827),
    (0.101_286_507_323_456, 0.101_286_507_323_456, 0.125_939_180_544_827),
];

/// Measured framework quantities at one perturbation size.
#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub d: f64,
    /// Projector-proximity estimate `max |(S1 - S2) u|^2 / |u|^2_{H1}`.
    pub eps_hat: f64,
    /// `max_phi (|T phi|^2 + |Psi_phi|^2 + eps |Psi_phi|_H^2)` over the group.
    pub rho_hat: f64,
    /// `int_{Gamma_12} phi^2 dS` with `phi` H1-normalized.
    pub trace_gamma: f64,
    /// `int_{Omega_1 \ Omega_2} |grad phi|^2` with `phi` H1-normalized.
    pub sliver_energy: f64,
    pub psi_l2_sq: f64,
    pub psi_h1_sq: f64,
    /// Reduced pencil eigenvalues, ascending.
    pub tau: Vec<f64>,
    /// `max_k |mu_k^{-1} - lambda_m^{-1} - tau_k|`.
    pub tau_residual: f64,
    pub lambda_m: f64,
    pub mu: Vec<f64>,
}

/// Controls for [`probe_pair`].
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// 1-based index of the first eigenvalue of the probed group.
    pub m_index: usize,
    pub group_size: usize,
    /// Number of sample fields for the proximity estimate (at least 10).
    pub samples: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            m_index: 1,
            group_size: 1,
            samples: 12,
            seed: 0xAB5E,
        }
    }
}

/// A closed-form field on the ambient box with exact gradient and H1 norm,
/// built from tensor trigonometric modes vanishing on the top and bottom of
/// the box (and on the sides when they are Dirichlet).
pub struct SampleField {
    t: f64,
    ymin: f64,
    h: f64,
    /// `(coefficient, ell, m, use_cos)` per term.
    terms: Vec<(f64, usize, usize, bool)>,
    periodic: bool,
}

impl SampleField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, ell, m, use_cos)| {
                c * self.yf(ell, y) * self.xf(m, use_cos, x)
            })
            .sum()
    }

    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for &(c, ell, m, use_cos) in &self.terms {
            let ky = ell as f64 * std::f64::consts::PI / self.h;
            let yv = self.yf(ell, y);
            let ydv = ky * (ky * (y - self.ymin)).cos();
            g[0] += c * yv * self.xdf(m, use_cos, x);
            g[1] += c * ydv * self.xf(m, use_cos, x);
        }
        g
    }

    fn yf(&self, ell: usize, y: f64) -> f64 {
        let ky = ell as f64 * std::f64::consts::PI / self.h;
        (ky * (y - self.ymin)).sin()
    }

    fn kx(&self, m: usize) -> f64 {
        if self.periodic {
            2.0 * std::f64::consts::PI * m as f64 / self.t
        } else {
            std::f64::consts::PI * m as f64 / self.t
        }
    }

    fn xf(&self, m: usize, use_cos: bool, x: f64) -> f64 {
        if m == 0 {
            return 1.0;
        }
        let k = self.kx(m);
        if use_cos {
            (k * x).cos()
        } else {
            (k * x).sin()
        }
    }

    fn xdf(&self, m: usize, use_cos: bool, x: f64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let k = self.kx(m);
        if use_cos {
            -k * (k * x).sin()
        } else {
            k * (k * x).cos()
        }
    }

    /// Exact `|u|^2_{H1}` over the box (modes are mutually orthogonal).
    pub fn h1_norm_sq(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(c, ell, m, _)| {
                let ky = ell as f64 * std::f64::consts::PI / self.h;
                let kx = self.kx(m);
                let x2 = if m == 0 { self.t } else { self.t / 2.0 };
                c * c * (self.h / 2.0) * x2 * (1.0 + ky * ky + kx * kx)
            })
            .sum()
    }

    /// Exact Dirichlet seminorm squared over the box.
    pub fn dirichlet_sq(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(c, ell, m, _)| {
                let ky = ell as f64 * std::f64::consts::PI / self.h;
                let kx = self.kx(m);
                let x2 = if m == 0 { self.t } else { self.t / 2.0 };
                c * c * (self.h / 2.0) * x2 * (ky * ky + kx * kx)
            })
            .sum()
    }
}

/// Seeded sample fields on the bounding box of the pair, vanishing on the
/// box top and bottom.
pub fn sample_fields(pair: &DomainPair, count: usize, seed: u64) -> Vec<SampleField> {
    let t = pair.reference.width;
    let r = pair.reference.height;
    let mut ymin: f64 = 0.0;
    for i in 0..=512 {
        let x = t * i as f64 / 512.0;
        ymin = ymin.min(pair.h1(x)).min(pair.h2(x));
    }
    let periodic = pair.reference.side_condition == SideCondition::Periodic;
    let mut modes = Vec::new();
    for ell in 1..=3usize {
        if periodic {
            modes.push((ell, 0, true));
            modes.push((ell, 1, true));
            modes.push((ell, 1, false));
            modes.push((ell, 2, true));
        } else {
            for m in 1..=4usize {
                modes.push((ell, m, false));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| SampleField {
            t,
            ymin,
            h: r - ymin,
            periodic,
            terms: modes
                .iter()
                .map(|&(ell, m, use_cos)| (2.0 * rng.gen::<f64>() - 1.0, ell, m, use_cos))
                .collect(),
        })
        .collect()
}

/// Subdivision level for cross-mesh quadrature: each triangle is split into
/// `SUBDIV^2` congruent copies carrying the interior rule.
const SUBDIV: usize = 3;

/// Applies the interior rule on a uniform subdivision of the triangle `p`,
/// calling `f(x, y, weight)` with weights summing to the triangle area.
fn quad_points(p: &[[f64; 2]; 3], area: f64, mut f: impl FnMut(f64, f64, f64)) {
    let n = SUBDIV;
    let sub_area = area / (n * n) as f64;
    let vertex = |i: usize, j: usize| -> [f64; 2] {
        let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
        [
            p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]),
            p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1]),
        ]
    };
    let mut emit = |q: [[f64; 2]; 3]| {
        for &(l1, l2, w) in &TRI7 {
            let l0 = 1.0 - l1 - l2;
            let x = l0 * q[0][0] + l1 * q[1][0] + l2 * q[2][0];
            let y = l0 * q[0][1] + l1 * q[1][1] + l2 * q[2][1];
            f(x, y, w * sub_area);
        }
    };
    for i in 0..n {
        for j in 0..n - i {
            emit([vertex(i, j), vertex(i + 1, j), vertex(i, j + 1)]);
            if i + j < n - 1 {
                emit([vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)]);
            }
        }
    }
}

/// Orthogonal projection of a field with gradient `grad_u` onto the discrete
/// `H^1_0` space of `disc` (one Poisson-type solve). Returns the projected
/// field and the pairing `<u, S u>` in the Dirichlet product.
pub fn project_onto(
    disc: &Discretization,
    chol: &BandedCholesky,
    grad_u: &dyn Fn(f64, f64) -> [f64; 2],
) -> (DiscreteField, f64) {
    let mut rhs = vec![0.0; disc.dofs.n_dofs];
    for tri in &disc.mesh.triangles {
        let p = [
            disc.mesh.nodes[tri[0]],
            disc.mesh.nodes[tri[1]],
            disc.mesh.nodes[tri[2]],
        ];
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let area = 0.5 * area2;
        // hat gradients
        let mut gh = [[0.0; 2]; 3];
        for a in 0..3 {
            let e = [
                p[(a + 2) % 3][0] - p[(a + 1) % 3][0],
                p[(a + 2) % 3][1] - p[(a + 1) % 3][1],
            ];
            gh[a] = [-e[1] / area2, e[0] / area2];
        }
        quad_points(&p, area, |x, y, w| {
            let g = grad_u(x, y);
            for a in 0..3 {
                if let Some(da) = disc.dofs.dof(tri[a]) {
                    rhs[da] += w * (g[0] * gh[a][0] + g[1] * gh[a][1]);
                }
            }
        });
    }
    let x = chol.solve(&rhs);
    let pairing = rhs.iter().zip(&x).map(|(a, b)| a * b).sum();
    (disc.field_from_dofs(&x), pairing)
}

/// `int |a - b|^2` over the union of the two domains, by the interior rule on
/// the first mesh plus strip quadrature over the part of the second domain
/// outside the first.
pub fn l2_difference_sq(pair: &DomainPair, a: &DiscreteField, b: &DiscreteField) -> f64 {
    let mut total = 0.0;
    for tri in &a.mesh.triangles {
        let p = [a.mesh.nodes[tri[0]], a.mesh.nodes[tri[1]], a.mesh.nodes[tri[2]]];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        for &(l1, l2, w) in &TRI7 {
            let l0 = 1.0 - l1 - l2;
            let x = l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0];
            let y = l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1];
            let va = l0 * a.nodal[tri[0]] + l1 * a.nodal[tri[1]] + l2 * a.nodal[tri[2]];
            let vb = b.eval(x, y);
            total += area * w * (va - vb) * (va - vb);
        }
    }
    // part of the second domain outside the first (empty for shrinking pairs)
    total += sliver_difference_sq(pair, a, b);
    total
}

fn sliver_difference_sq(pair: &DomainPair, a: &DiscreteField, b: &DiscreteField) -> f64 {
    let n_cells = 4 * a.mesh.grid.nx;
    let t = pair.reference.width;
    let dx = t / n_cells as f64;
    let g = 0.5 / 3.0f64.sqrt();
    let mut total = 0.0;
    for cell in 0..n_cells {
        let xm = (cell as f64 + 0.5) * dx;
        for s in [-1.0f64, 1.0] {
            let x = xm + s * g * dx;
            let (h1, h2) = (pair.h1(x), pair.h2(x));
            if h1 <= h2 {
                continue; // no part of Omega_2 below Omega_1 here
            }
            let (lo, hi) = (h2, h1);
            let ym = 0.5 * (lo + hi);
            let dy = hi - lo;
            for sy in [-1.0f64, 1.0] {
                let y = ym + sy * g * dy;
                let diff = a.eval(x, y) - b.eval(x, y);
                total += 0.5 * dx * 0.5 * dy * diff * diff;
            }
        }
    }
    total
}

/// The defect `Psi_phi = phi~ - R_phi` on the perturbed mesh, where `phi~` is
/// the nodal interpolant of the reference eigenfunction and `R_phi` solves
/// the Poisson problem with load `lambda phi~`.
pub fn psi_phi(
    disc2: &Discretization,
    chol2: &BandedCholesky,
    phi: &DiscreteField,
    lambda: f64,
) -> (DiscreteField, DiscreteField) {
    let r_phi = solve_poisson(disc2, chol2, |x, y| lambda * phi.eval(x, y));
    let mut psi = DiscreteField::interpolate(std::sync::Arc::clone(&disc2.mesh), |x, y| {
        phi.eval(x, y)
    });
    psi.axpy(-1.0, &r_phi);
    (psi, r_phi)
}

/// `int_{Gamma_12} phi^2 dS` along the graph of `max(h1, h2)`.
pub fn trace_integral(pair: &DomainPair, phi: &DiscreteField, n_cells: usize) -> f64 {
    let t = pair.reference.width;
    let dx = t / n_cells as f64;
    let g = 0.5 / 3.0f64.sqrt();
    let mut total = 0.0;
    for cell in 0..n_cells {
        let xm = (cell as f64 + 0.5) * dx;
        for s in [-1.0f64, 1.0] {
            let x = xm + s * g * dx;
            let (h1, h2) = (pair.h1(x), pair.h2(x));
            let (h12, hp) = if h1 >= h2 {
                (h1, pair.reference.bottom.deriv(x))
            } else {
                (h2, pair.perturbed.bottom.deriv(x))
            };
            let v = phi.eval(x, h12);
            total += 0.5 * dx * (1.0 + hp * hp).sqrt() * v * v;
        }
    }
    total
}

/// Runs the full probe pipeline on one pair.
pub fn probe_pair(
    pair: &DomainPair,
    grid: &ReferenceGrid,
    cfg: &ProbeConfig,
) -> Result<ProbeOutcome> {
    let disc1 = Discretization::new(&pair.reference, grid)?;
    let disc2 = Discretization::new(&pair.perturbed, grid)?;
    let chol1 = disc1.factor_stiffness()?;
    let chol2 = disc2.factor_stiffness()?;

    let j = cfg.group_size;
    let count = cfg.m_index - 1 + j;
    let set = EigenSettings::new(count + 2);
    let sol1 = smallest_eigenpairs(&disc1, &chol1, &set)?;
    let sol2 = smallest_eigenpairs(&disc2, &chol2, &set)?;
    let group: Vec<usize> = (cfg.m_index - 1..cfg.m_index - 1 + j).collect();
    let lambda_m = group.iter().map(|&i| sol1.values[i]).sum::<f64>() / j as f64;
    // perturbed group: the J values nearest the reference group mean
    let mut order: Vec<usize> = (0..sol2.values.len()).collect();
    order.sort_by(|&a, &b| {
        (sol2.values[a] - lambda_m)
            .abs()
            .partial_cmp(&(sol2.values[b] - lambda_m).abs())
            .unwrap()
    });
    let mut mu: Vec<f64> = order[..j].iter().map(|&i| sol2.values[i]).collect();
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // proximity estimate over sample fields
    let samples = sample_fields(pair, cfg.samples.max(10), cfg.seed);
    let mut eps_hat: f64 = 0.0;
    for u in &samples {
        let gu = |x: f64, y: f64| u.grad(x, y);
        let (s1, _) = project_onto(&disc1, &chol1, &gu);
        let (s2, _) = project_onto(&disc2, &chol2, &gu);
        let num = l2_difference_sq(pair, &s1, &s2);
        eps_hat = eps_hat.max(num / u.h1_norm_sq());
    }

    // group quantities
    let mut rho_hat: f64 = 0.0;
    let mut trace_gamma: f64 = 0.0;
    let mut sliver_energy: f64 = 0.0;
    let mut psi_l2_sq: f64 = 0.0;
    let mut psi_h1_sq: f64 = 0.0;
    let fields: Vec<DiscreteField> = group
        .iter()
        .map(|&i| disc1.field_from_dofs(&sol1.vectors[i]))
        .collect();
    let r_fields: Vec<DiscreteField> = fields
        .iter()
        .map(|phi| psi_phi(&disc2, &chol2, phi, lambda_m).1)
        .collect();
    for phi in &fields {
        let (psi, _) = psi_phi(&disc2, &chol2, phi, lambda_m);
        let p_l2 = psi.l2_norm_sq();
        let p_h1 = psi.h1_seminorm_sq();
        let gphi = |x: f64, y: f64| phi.grad(x, y);
        let (s2_phi, _) = project_onto(&disc2, &chol2, &gphi);
        // |T phi|^2 in L2; the whole sum uses the Dirichlet normalization
        // |phi| = 1, i.e. division by lambda_m for an L2-normalized mode
        let t_phi_sq = l2_difference_sq(pair, phi, &s2_phi);
        rho_hat = rho_hat.max((t_phi_sq + p_l2 + eps_hat * p_h1) / lambda_m);
        psi_l2_sq = psi_l2_sq.max(p_l2);
        psi_h1_sq = psi_h1_sq.max(p_h1);

        // Lemma-style trace quantities use the H1 normalization
        let h1_sq = lambda_m + 1.0; // |phi|^2_{H1} for an L2-normalized mode
        trace_gamma = trace_gamma.max(trace_integral(pair, phi, 4 * grid.nx) / h1_sq);
        sliver_energy = sliver_energy.max(
            sliver_integral(
                pair,
                phi,
                phi,
                SliverRegion::FirstMinusSecond,
                SliverIntegrand::GradDotGrad,
                4 * grid.nx,
            ) / h1_sq,
        );
    }

    // reduced tau pencil from sliver integrals
    let n_cells = 4 * grid.nx;
    let mut a = vec![0.0; j * j];
    for p in 0..j {
        for q in 0..=p {
            let grow = sliver_integral(
                pair,
                &r_fields[p],
                &r_fields[q],
                SliverRegion::SecondMinusFirst,
                SliverIntegrand::GradDotGrad,
                n_cells,
            );
            let shrink = sliver_integral(
                pair,
                &fields[p],
                &fields[q],
                SliverRegion::FirstMinusSecond,
                SliverIntegrand::GradDotGrad,
                n_cells,
            );
            let v = (grow - shrink) / lambda_m;
            a[p * j + q] = v;
            a[q * j + p] = v;
        }
    }
    let mut b = vec![0.0; j * j];
    for p in 0..j {
        b[p * j + p] = lambda_m; // lambda_m times the L2 Gram (orthonormal basis)
    }
    let (tau, _) = dense_sym_pencil_eig(&a, &b, j)?;
    let tau_residual = (0..j)
        .map(|k| (1.0 / mu[j - 1 - k] - 1.0 / lambda_m - tau[k]).abs())
        .fold(0.0f64, f64::max);

    Ok(ProbeOutcome {
        d: pair.d,
        eps_hat,
        rho_hat,
        trace_gamma,
        sliver_energy,
        psi_l2_sq,
        psi_h1_sq,
        tau,
        tau_residual,
        lambda_m,
        mu,
    })
}
