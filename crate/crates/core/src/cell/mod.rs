//! Boundary-layer cell problem for the oscillatory counterexample: on the
//! periodic half-cell `{r eta(X) < Y < L}` the corrector `V0` is harmonic
//! with bottom data `C1 eta(X) - c0` and decays upward. The compatibility
//! constant `c0` is selected with a special harmonic solution growing
//! linearly at infinity, and the Dirichlet energy `c_V` of `V0` feeds the
//! first-order eigenvalue defect prediction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::{
    recover_boundary_flux, solve_laplace_with_boundary, DiscreteField, Discretization,
};
use crate::geometry::{BoundaryProfile, DomainSpec, SideCondition, Waveform};
use crate::mesh::{boundary_quadrature, ReferenceGrid};

/// Periodic cell of width 1 and height `L` with bottom `r eta(X)`.
#[derive(Debug, Clone)]
pub struct CellDomain {
    pub waveform: Waveform,
    /// Amplitude-to-period ratio `r = d / delta` of the oscillation family.
    pub ratio: f64,
    /// Truncation height `L` (at least 5).
    pub height: f64,
}

impl CellDomain {
    pub fn new(waveform: Waveform, ratio: f64, height: f64) -> Result<Self> {
        if !(height >= 5.0) {
            return Err(Error::InvalidScenario(format!(
                "cell height {height} below the decay-safe minimum 5"
            )));
        }
        if !(ratio > 0.0 && ratio < height / 2.0) {
            return Err(Error::InvalidScenario(format!(
                "cell ratio {ratio} outside (0, {})",
                height / 2.0
            )));
        }
        Ok(CellDomain {
            waveform,
            ratio,
            height,
        })
    }

    pub fn spec(&self) -> Result<DomainSpec> {
        DomainSpec::new(
            1.0,
            self.height,
            BoundaryProfile::Oscillatory {
                amplitude: self.ratio,
                wavelength: 1.0,
                waveform: self.waveform,
            },
            SideCondition::Periodic,
        )
    }

    pub fn eta(&self, x: f64) -> f64 {
        self.waveform.eval(x)
    }
}

/// Solved cell problem with its diagnostics.
#[derive(Debug, Clone)]
pub struct CellSolution {
    /// Compatibility constant of the bottom data (discretely exact: the far
    /// trace of the harmonic extension of `C1 eta`).
    pub c0: f64,
    /// The same constant from the normal-flux integral of the special
    /// solution; agrees with `c0` up to discretization error.
    pub c0_flux: f64,
    /// Normal-slope constant of the driving eigenfunction.
    pub c1: f64,
    /// Dirichlet energy of the corrector over the cell.
    pub c_v: f64,
    /// Average of `V0` over the far band `Y in [L-2, L-1]`.
    pub q_residual: f64,
    pub max_data: f64,
    /// Far-field slope of the special solution (should be 1 up to
    /// exponentially small truncation error).
    pub far_field_slope: f64,
    /// Largest (least negative) outward normal derivative of the special
    /// solution on the bottom; negative by the Hopf lemma.
    pub hopf_max: f64,
    pub v0: DiscreteField,
    pub special: DiscreteField,
}

/// Outward normal slope `sqrt(2/(R T)) pi / R` of the lowest strip mode on a
/// `T x R` reference strip.
pub fn first_mode_normal_slope(t: f64, r: f64) -> f64 {
    (2.0 / (r * t)).sqrt() * PI / r
}

/// First-order defect prediction `E(d) = T (d^2/delta) c_V` for the
/// oscillatory family at ratio `r = d/delta`.
pub fn predicted_extra(t: f64, d: f64, delta: f64, c_v: f64) -> f64 {
    t * d * d / delta * c_v
}

/// Mean of a field along the horizontal line `Y = y`, sampled well inside
/// the mesh.
fn line_mean(field: &DiscreteField, y: f64, n: usize) -> f64 {
    (0..n)
        .map(|i| field.eval((i as f64 + 0.5) / n as f64, y))
        .sum::<f64>()
        / n as f64
}

/// Signed totals of the outward flux through the bottom and top boundaries
/// of a discrete-harmonic field (residual pairing with the boundary hats).
pub fn boundary_flux_totals(disc: &Discretization, field: &DiscreteField) -> (f64, f64) {
    use crate::fem::element_stiffness;
    use crate::mesh::BoundaryTag;
    let mesh = &disc.mesh;
    let ny = mesh.grid.ny;
    let mut bottom = 0.0;
    let mut top = 0.0;
    for tri in &mesh.triangles {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let (ke, _) = element_stiffness(p);
        for a in 0..3 {
            let j = tri[a] % (ny + 1);
            let tag = mesh.tags[tri[a]];
            let is_bottom = tag == BoundaryTag::Bottom;
            let is_top = j == ny;
            if !is_bottom && !is_top {
                continue;
            }
            let row: f64 = (0..3).map(|b| ke[a][b] * field.nodal[tri[b]]).sum();
            if is_bottom {
                bottom += row;
            } else {
                top += row;
            }
        }
    }
    (bottom, top)
}

/// Solves the cell problem: special solution, compatibility constant `c0`,
/// corrector `V0` and its energy `c_V`.
pub fn solve_cell(cell: &CellDomain, grid: &ReferenceGrid, c1: f64) -> Result<CellSolution> {
    let spec = cell.spec()?;
    let l = cell.height;

    // Special solution V = Y + W with W harmonic, W = -Y on the bottom and a
    // natural condition on the top, so V grows with unit slope up to
    // exponentially small truncation error.
    let disc_free = Discretization::new_free_top(&spec, grid)?;
    let chol_free = disc_free.factor_stiffness()?;
    let g: Vec<f64> = disc_free.mesh.nodes.iter().map(|n| -n[1]).collect();
    let w = solve_laplace_with_boundary(&disc_free, &chol_free, &g);
    let special = {
        let nodal: Vec<f64> = disc_free
            .mesh
            .nodes
            .iter()
            .zip(&w.nodal)
            .map(|(n, wv)| n[1] + wv)
            .collect();
        DiscreteField::new(std::sync::Arc::clone(&disc_free.mesh), nodal)
    };
    let far_field_slope = line_mean(&special, l - 1e-12, 256) - line_mean(&special, l - 1.0, 256);
    if (far_field_slope - 1.0).abs() > 1e-3 {
        return Err(Error::DecayFailure {
            residual: (far_field_slope - 1.0).abs(),
            bound: 1e-3,
        });
    }

    // Compatibility constant from the special solution's bottom flux.
    let quad = boundary_quadrature(&disc_free.mesh);
    let flux = recover_boundary_flux(&special, 0.0, &quad);
    let hopf_max = flux.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (q, &x) in quad.nodes.iter().enumerate() {
        let f = quad.weights[q] * flux.values[q];
        num += f * c1 * cell.eta(x);
        den += f;
    }
    if den.abs() < 1e-12 * num.abs().max(1.0) {
        return Err(Error::ZeroFlux);
    }
    let c0_flux = num / den;

    // Corrector: harmonic extension of `C1 eta` upward with a natural top
    // (the faithful truncation of the half-infinite cell), minus its far
    // trace. The subtracted constant is the discretely exact compatibility
    // constant, so the corrector decays with no linear ramp.
    let ny = grid.ny;
    let nx = grid.nx;
    let data: Vec<f64> = disc_free
        .mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(node, n)| {
            if node % (ny + 1) == 0 {
                c1 * cell.eta(n[0])
            } else {
                0.0
            }
        })
        .collect();
    let mut v0 = solve_laplace_with_boundary(&disc_free, &chol_free, &data);
    let c0 = (0..nx)
        .map(|i| v0.nodal[i * (ny + 1) + ny])
        .sum::<f64>()
        / nx as f64;
    for v in v0.nodal.iter_mut() {
        *v -= c0;
    }
    let max_data = disc_free
        .mesh
        .nodes
        .iter()
        .enumerate()
        .filter(|(node, _)| node % (ny + 1) == 0)
        .map(|(_, n)| (c1 * cell.eta(n[0]) - c0).abs())
        .fold(0.0f64, f64::max);

    // Far-band average must vanish if c0 is compatible.
    let mut q_residual = 0.0;
    let bands = 32;
    for k in 0..bands {
        let y = l - 2.0 + (k as f64 + 0.5) / bands as f64;
        q_residual += line_mean(&v0, y, 128);
    }
    q_residual /= bands as f64;
    if q_residual.abs() > 1e-4 * max_data {
        return Err(Error::DecayFailure {
            residual: q_residual.abs(),
            bound: 1e-4 * max_data,
        });
    }

    let c_v = v0.h1_seminorm_sq();

    Ok(CellSolution {
        c0,
        c0_flux,
        c1,
        c_v,
        q_residual,
        max_data,
        far_field_slope,
        hopf_max,
        v0,
        special,
    })
}

/// Solves the cell problem on `grid` and its doubling and eliminates the
/// leading quadratic energy error. Returns the fine solution together with
/// the extrapolated energy.
pub fn solve_cell_extrapolated(
    cell: &CellDomain,
    grid: &ReferenceGrid,
    c1: f64,
) -> Result<(CellSolution, f64)> {
    let coarse = solve_cell(cell, grid, c1)?;
    let fine = solve_cell(cell, &grid.refined(), c1)?;
    let c_v = (4.0 * fine.c_v - coarse.c_v) / 3.0;
    Ok((fine, c_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> ReferenceGrid {
        ReferenceGrid::new(64, 96, 2.0)
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(CellDomain::new(Waveform::Cosine, 1.0, 4.0).is_err());
        assert!(CellDomain::new(Waveform::Cosine, 0.0, 6.0).is_err());
        assert!(CellDomain::new(Waveform::Cosine, 1.0, 6.0).is_ok());
    }

    #[test]
    fn small_ratio_limit_matches_flat_halfplane_series() {
        // as r -> 0 the bottom flattens: c0 -> C1 * mean(eta) and, for the
        // cosine profile, c_V -> C1^2 pi / 4 = pi^3 / 2
        let c1 = first_mode_normal_slope(1.0, 1.0);
        let cell = CellDomain::new(Waveform::Cosine, 1e-3, 6.0).unwrap();
        let sol = solve_cell(&cell, &grid(), c1).unwrap();
        assert_relative_eq!(sol.c0, 0.5 * c1, max_relative = 2e-2);
        assert_relative_eq!(sol.c_v, PI.powi(3) / 2.0, max_relative = 2e-2);
    }

    #[test]
    fn special_solution_has_unit_far_slope_and_hopf_sign() {
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let sol = solve_cell(&cell, &grid(), first_mode_normal_slope(1.0, 1.0)).unwrap();
        assert!((sol.far_field_slope - 1.0).abs() < 1e-3);
        assert!(sol.hopf_max < 0.0, "hopf max {}", sol.hopf_max);
    }

    #[test]
    fn corrector_obeys_the_maximum_principle() {
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let sol = solve_cell(&cell, &grid(), first_mode_normal_slope(1.0, 1.0)).unwrap();
        let lo = sol
            .v0
            .nodal
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = sol
            .v0
            .nodal
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        // boundary data range includes 0 (top), so interior range must too
        assert!(lo >= -sol.max_data - 1e-12 && hi <= sol.max_data + 1e-12);
    }

    #[test]
    fn compatibility_constant_sits_inside_the_data_range() {
        for wf in [Waveform::Cosine, Waveform::Tent] {
            let cell = CellDomain::new(wf, 1.0, 6.0).unwrap();
            let c1 = first_mode_normal_slope(1.0, 1.0);
            let sol = solve_cell(&cell, &grid(), c1).unwrap();
            let ratio = sol.c0 / c1;
            assert!(
                (0.0..=1.0).contains(&ratio),
                "c0 / C1 = {ratio} outside the eta range"
            );
        }
    }

    #[test]
    fn corrector_decays_exponentially() {
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let sol = solve_cell(&cell, &grid(), first_mode_normal_slope(1.0, 1.0)).unwrap();
        let profile = |y: f64| {
            (0..256)
                .map(|i| sol.v0.eval((i as f64 + 0.5) / 256.0, y).abs())
                .fold(0.0f64, f64::max)
        };
        let mut y = 2.0;
        while y + 1.0 <= cell.height - 2.0 {
            let (a, b) = (profile(y), profile(y + 1.0));
            assert!(
                a >= b * (std::f64::consts::E.powf(PI) / 2.0),
                "decay factor {} at y = {y}",
                a / b
            );
            y += 1.0;
        }
    }

    #[test]
    fn flux_balances_between_bottom_and_top() {
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let spec = cell.spec().unwrap();
        let g = grid();
        let sol = solve_cell(&cell, &g, first_mode_normal_slope(1.0, 1.0)).unwrap();
        let disc = Discretization::new_free_top(&spec, &g).unwrap();
        let (bottom, top) = boundary_flux_totals(&disc, &sol.v0);
        // zero net flux through the top (natural condition), so the bottom
        // total alone must vanish: the compatibility condition
        let scale = sol.max_data.max(1.0);
        assert!(top.abs() <= 1e-8 * scale, "top flux {top}");
        assert!(
            (bottom + top).abs() <= 1e-8 * scale,
            "imbalance {}",
            bottom + top
        );
    }

    #[test]
    fn flux_formula_reproduces_the_compatibility_constant() {
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let c1 = first_mode_normal_slope(1.0, 1.0);
        let coarse = solve_cell(&cell, &ReferenceGrid::new(48, 72, 2.0), c1).unwrap();
        let fine = solve_cell(&cell, &ReferenceGrid::new(96, 144, 2.0), c1).unwrap();
        let e_coarse = (coarse.c0_flux - coarse.c0).abs();
        let e_fine = (fine.c0_flux - fine.c0).abs();
        assert!(e_coarse < 1e-2 * c1, "coarse disagreement {e_coarse}");
        assert!(e_fine < 0.5 * e_coarse, "no convergence: {e_coarse} -> {e_fine}");
    }

    #[test]
    fn energy_scales_quadratically_with_the_data() {
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let c1 = first_mode_normal_slope(1.0, 1.0);
        let base = solve_cell(&cell, &grid(), c1).unwrap();
        let double = solve_cell(&cell, &grid(), 2.0 * c1).unwrap();
        assert_relative_eq!(double.c_v, 4.0 * base.c_v, max_relative = 1e-10);
        assert_relative_eq!(double.c0, 2.0 * base.c0, max_relative = 1e-10);
    }

    #[test]
    fn energy_is_stable_under_refinement() {
        // extrapolated energies from two unrelated base grids agree to three
        // significant digits
        let cell = CellDomain::new(Waveform::Cosine, 1.0, 6.0).unwrap();
        let c1 = first_mode_normal_slope(1.0, 1.0);
        let (_, a) = solve_cell_extrapolated(&cell, &ReferenceGrid::new(40, 60, 2.0), c1).unwrap();
        let (_, b) = solve_cell_extrapolated(&cell, &ReferenceGrid::new(64, 96, 2.0), c1).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-3);
    }

    #[test]
    fn predicted_extra_is_homogeneous() {
        let e = predicted_extra(1.0, 1e-2, 1e-2, 10.0);
        assert_relative_eq!(e, 1e-1, max_relative = 1e-12);
        assert_relative_eq!(
            predicted_extra(2.0, 1e-2, 1e-2, 10.0),
            2.0 * e,
            max_relative = 1e-12
        );
    }
}
