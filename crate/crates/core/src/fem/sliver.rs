//! Quadrature over the sliver between the two bottom boundaries of a domain
//! pair. Fields are evaluated with extension by zero, so integrands vanish
//! automatically on the part of the sliver outside a field's own domain.

use crate::geometry::DomainPair;

use super::DiscreteField;

/// Which set difference of the pair to integrate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliverRegion {
    /// Reference minus perturbed: `{h1 < y < h2}` where `h2 > h1`.
    FirstMinusSecond,
    /// Perturbed minus reference: `{h2 < y < h1}` where `h1 > h2`.
    SecondMinusFirst,
}

/// Integrand evaluated on the two fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliverIntegrand {
    GradDotGrad,
    Product,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_2),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_2),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

/// Integrates the chosen integrand of `a` and `b` over a sliver of the pair
/// using a tensor 4x4 Gauss rule on `n_cells` vertical strips. An empty
/// region integrates to zero.
pub fn sliver_integral(
    pair: &DomainPair,
    a: &DiscreteField,
    b: &DiscreteField,
    region: SliverRegion,
    integrand: SliverIntegrand,
    n_cells: usize,
) -> f64 {
    let t = pair.reference.width;
    let dx = t / n_cells as f64;
    let mut total = 0.0;
    for cell in 0..n_cells {
        let xm = (cell as f64 + 0.5) * dx;
        for &(gx, wx) in &GAUSS4 {
            let x = xm + 0.5 * dx * gx;
            let h1 = pair.h1(x);
            let h2 = pair.h2(x);
            let (lo, hi) = match region {
                SliverRegion::FirstMinusSecond => (h1, h2),
                SliverRegion::SecondMinusFirst => (h2, h1),
            };
            if hi <= lo {
                continue;
            }
            let ym = 0.5 * (lo + hi);
            let dy = hi - lo;
            let mut col = 0.0;
            for &(gy, wy) in &GAUSS4 {
                let y = ym + 0.5 * dy * gy;
                let v = match integrand {
                    SliverIntegrand::GradDotGrad => {
                        let ga = a.grad(x, y);
                        let gb = b.grad(x, y);
                        ga[0] * gb[0] + ga[1] * gb[1]
                    }
                    SliverIntegrand::Product => a.eval(x, y) * b.eval(x, y),
                };
                col += wy * v;
            }
            total += 0.5 * dx * wx * 0.5 * dy * col;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Discretization;
    use crate::geometry::{make_perturbation, DomainPair, DomainSpec, Regime, Waveform};
    use crate::mesh::ReferenceGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn strip() -> DomainSpec {
        DomainSpec::periodic_strip(1.0, 1.0)
    }

    #[test]
    fn identity_pair_gives_zero() {
        let pair = DomainPair::uniform_shift(&strip(), 0.0).unwrap();
        let disc = Discretization::new(&strip(), &ReferenceGrid::uniform(8, 8)).unwrap();
        let one = DiscreteField::interpolate(Arc::clone(&disc.mesh), |_, _| 1.0);
        let v = sliver_integral(
            &pair,
            &one,
            &one,
            SliverRegion::FirstMinusSecond,
            SliverIntegrand::Product,
            64,
        );
        assert_eq!(v, 0.0);
    }

    #[test]
    fn growing_shift_fills_only_one_region() {
        // perturbed grows downward: reference \ perturbed is empty,
        // perturbed \ reference has area d (fields constant 1 on each mesh)
        let d = 0.02;
        let pair = DomainPair::uniform_shift(&strip(), -d).unwrap();
        let grid = ReferenceGrid::uniform(16, 16);
        let d1 = Discretization::new(&pair.reference, &grid).unwrap();
        let d2 = Discretization::new(&pair.perturbed, &grid).unwrap();
        let one1 = DiscreteField::interpolate(Arc::clone(&d1.mesh), |_, _| 1.0);
        let one2 = DiscreteField::interpolate(Arc::clone(&d2.mesh), |_, _| 1.0);
        let empty = sliver_integral(
            &pair,
            &one1,
            &one1,
            SliverRegion::FirstMinusSecond,
            SliverIntegrand::Product,
            64,
        );
        assert_eq!(empty, 0.0);
        let area = sliver_integral(
            &pair,
            &one2,
            &one2,
            SliverRegion::SecondMinusFirst,
            SliverIntegrand::Product,
            64,
        );
        assert_relative_eq!(area, d, max_relative = 1e-10);
    }

    #[test]
    fn thin_layer_gradient_energy_matches_flux_square() {
        // strip mode phi = sqrt(2) sin(pi y) on the grown strip; the energy
        // in the layer {-d < y < 0} is about |grad phi(0)|^2 * d = 2 pi^2 d
        let d = 1e-3;
        let pair = DomainPair::uniform_shift(&strip(), -d).unwrap();
        let grid = ReferenceGrid::new(8, 128, 2.0);
        let d2 = Discretization::new(&pair.perturbed, &grid).unwrap();
        let phi = DiscreteField::interpolate(Arc::clone(&d2.mesh), |_, y| {
            2.0f64.sqrt() * (PI * (y + d) / (1.0 + d)).sin()
        });
        let v = sliver_integral(
            &pair,
            &phi,
            &phi,
            SliverRegion::SecondMinusFirst,
            SliverIntegrand::GradDotGrad,
            64,
        );
        assert_relative_eq!(v, 2.0 * PI * PI * d, max_relative = 2e-2);
    }

    #[test]
    fn oscillatory_layer_area_matches_waveform_mean() {
        // area between 0 and d eta(x/delta) is d * mean(eta) = d / 2
        let d = 1.0 / 32.0;
        let pair = make_perturbation(&strip(), Regime::Lipschitz, d).unwrap();
        let delta = pair.delta().unwrap();
        let n = (1.0 / delta).round() as usize;
        let grid = ReferenceGrid::new(8 * n, 16, 2.0);
        let d1 = Discretization::new(&pair.reference, &grid).unwrap();
        let one = DiscreteField::interpolate(Arc::clone(&d1.mesh), |_, _| 1.0);
        let v = sliver_integral(
            &pair,
            &one,
            &one,
            SliverRegion::FirstMinusSecond,
            SliverIntegrand::Product,
            16 * n,
        );
        assert_relative_eq!(v, d * Waveform::Cosine.mean(), max_relative = 1e-9);
    }

    #[test]
    fn product_integral_scales_cubically_for_modes() {
        // phi vanishes linearly at the bottom, so int phi^2 over a layer of
        // thickness d scales like d^3
        let grid = ReferenceGrid::new(8, 256, 2.0);
        let vals: Vec<f64> = [4e-3, 2e-3]
            .iter()
            .map(|&d| {
                let pair = DomainPair::uniform_shift(&strip(), -d).unwrap();
                let d2 = Discretization::new(&pair.perturbed, &grid).unwrap();
                let phi = DiscreteField::interpolate(Arc::clone(&d2.mesh), |_, y| {
                    2.0f64.sqrt() * (PI * (y + d) / (1.0 + d)).sin()
                });
                sliver_integral(
                    &pair,
                    &phi,
                    &phi,
                    SliverRegion::SecondMinusFirst,
                    SliverIntegrand::Product,
                    32,
                )
            })
            .collect();
        let rate = (vals[0] / vals[1]).log2();
        assert!((rate - 3.0).abs() < 0.2, "rate {rate}");
    }
}
