//! Graph-bounded 2D domains, perturbation families, the signed normal
//! displacement `sigma`, Hausdorff distance and regularity classification.
//!
//! All domains are of the form `{(x, y) : 0 < x < T, h(x) < y < R}` with the
//! bottom boundary `y = h(x)` the only perturbed side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named periodic waveform `eta` with period 1, `eta >= 0`, continuously
/// differentiable. Used by the oscillatory perturbation family and the cell
/// problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    /// `(1 - cos 2 pi X) / 2`
    Cosine,
    /// C1 piecewise-quadratic bump, min 0 at X = 0, max 1 at X = 1/2.
    Tent,
}

impl Waveform {
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        match self {
            Waveform::Cosine => 0.5 * (1.0 - (2.0 * std::f64::consts::PI * x).cos()),
            Waveform::Tent => {
                // mirror into [0, 1/2], then two quadratic pieces
                let t = if x <= 0.5 { x } else { 1.0 - x };
                if t <= 0.25 {
                    8.0 * t * t
                } else {
                    1.0 - 8.0 * (0.5 - t) * (0.5 - t)
                }
            }
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        match self {
            Waveform::Cosine => {
                std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).sin()
            }
            Waveform::Tent => {
                let (t, sign) = if x <= 0.5 { (x, 1.0) } else { (1.0 - x, -1.0) };
                let d = if t <= 0.25 { 16.0 * t } else { 16.0 * (0.5 - t) };
                sign * d
            }
        }
    }

    /// Maximum of `eta` over one period (both families peak at 1).
    pub fn max(&self) -> f64 {
        1.0
    }

    /// Mean of `eta` over one period.
    pub fn mean(&self) -> f64 {
        match self {
            Waveform::Cosine => 0.5,
            Waveform::Tent => 0.5,
        }
    }

    /// Maximum of `|eta'|` over one period.
    pub fn max_deriv(&self) -> f64 {
        match self {
            Waveform::Cosine => std::f64::consts::PI,
            Waveform::Tent => 4.0,
        }
    }
}

/// Bottom boundary profile `h(x)` with closed-form derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BoundaryProfile {
    Flat,
    /// Gaussian bump `amplitude * exp(-(x - center)^2 / (2 width^2))`.
    SmoothBump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// `d * eta(x / delta)` with a named waveform.
    Oscillatory {
        amplitude: f64,
        wavelength: f64,
        waveform: Waveform,
    },
    /// Constant shift `h == amount` (negative grows the domain downward).
    UniformShift { amount: f64 },
    /// `h(x) = slope * x`; used for slanted-bottom checks.
    Linear { slope: f64 },
    /// Pointwise sum of sub-profiles.
    Compound(Vec<BoundaryProfile>),
}

impl BoundaryProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BoundaryProfile::Flat => 0.0,
            BoundaryProfile::SmoothBump {
                center,
                width,
                amplitude,
            } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            BoundaryProfile::Oscillatory {
                amplitude,
                wavelength,
                waveform,
            } => amplitude * waveform.eval(x / wavelength),
            BoundaryProfile::UniformShift { amount } => *amount,
            BoundaryProfile::Linear { slope } => slope * x,
            BoundaryProfile::Compound(terms) => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Closed-form derivative `h'(x)`; never a numerical difference.
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            BoundaryProfile::Flat => 0.0,
            BoundaryProfile::SmoothBump {
                center,
                width,
                amplitude,
            } => {
                let z = (x - center) / width;
                -amplitude * z / width * (-0.5 * z * z).exp()
            }
            BoundaryProfile::Oscillatory {
                amplitude,
                wavelength,
                waveform,
            } => amplitude / wavelength * waveform.deriv(x / wavelength),
            BoundaryProfile::UniformShift { .. } => 0.0,
            BoundaryProfile::Linear { slope } => *slope,
            BoundaryProfile::Compound(terms) => terms.iter().map(|t| t.deriv(x)).sum(),
        }
    }

    /// Upper bound on `sup |h|` over `0 <= x <= width`.
    pub fn sup_abs(&self, width: f64) -> f64 {
        match self {
            BoundaryProfile::Flat => 0.0,
            BoundaryProfile::SmoothBump { amplitude, .. } => amplitude.abs(),
            BoundaryProfile::Oscillatory {
                amplitude, waveform, ..
            } => amplitude.abs() * waveform.max(),
            BoundaryProfile::UniformShift { amount } => amount.abs(),
            BoundaryProfile::Linear { slope } => slope.abs() * width,
            BoundaryProfile::Compound(terms) => terms.iter().map(|t| t.sup_abs(width)).sum(),
        }
    }

    /// Upper bound on `sup |h'|`.
    pub fn sup_deriv(&self) -> f64 {
        match self {
            BoundaryProfile::Flat => 0.0,
            BoundaryProfile::SmoothBump {
                width, amplitude, ..
            } => {
                // max of |z e^{-z^2/2}| is e^{-1/2} at z = 1
                amplitude.abs() / width * (-0.5f64).exp()
            }
            BoundaryProfile::Oscillatory {
                amplitude,
                wavelength,
                waveform,
            } => amplitude.abs() / wavelength * waveform.max_deriv(),
            BoundaryProfile::UniformShift { .. } => 0.0,
            BoundaryProfile::Linear { slope } => slope.abs(),
            BoundaryProfile::Compound(terms) => terms.iter().map(|t| t.sup_deriv()).sum(),
        }
    }
}

/// Lateral boundary condition on the sides `x = 0` and `x = T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideCondition {
    Periodic,
    Dirichlet,
}

/// A graph domain `{(x, y) : 0 < x < T, h(x) < y < R}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub width: f64,
    pub height: f64,
    pub bottom: BoundaryProfile,
    pub side_condition: SideCondition,
}

impl DomainSpec {
    pub fn new(
        width: f64,
        height: f64,
        bottom: BoundaryProfile,
        side_condition: SideCondition,
    ) -> Result<Self> {
        let sup = bottom.sup_abs(width);
        if sup >= 0.5 * height {
            return Err(Error::AmplitudeTooLarge {
                amplitude: sup,
                height,
            });
        }
        Ok(DomainSpec {
            width,
            height,
            bottom,
            side_condition,
        })
    }

    /// Unit square with Dirichlet sides and a flat bottom.
    pub fn unit_square() -> Self {
        DomainSpec {
            width: 1.0,
            height: 1.0,
            bottom: BoundaryProfile::Flat,
            side_condition: SideCondition::Dirichlet,
        }
    }

    /// Flat strip of given width and height with periodic sides.
    pub fn periodic_strip(width: f64, height: f64) -> Self {
        DomainSpec {
            width,
            height,
            bottom: BoundaryProfile::Flat,
            side_condition: SideCondition::Periodic,
        }
    }

    /// Same box and side condition, different bottom profile.
    pub fn with_bottom(&self, bottom: BoundaryProfile) -> Result<Self> {
        DomainSpec::new(self.width, self.height, bottom, self.side_condition)
    }
}

/// Perturbation regularity regime. Determines how the oscillation wavelength
/// scales with the perturbation size `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `delta = d`: gradient difference stays O(1).
    Lipschitz,
    /// `delta = sqrt(d)`: gradient difference O(sqrt d) -> 0.
    C1,
    /// `delta = d^{1-alpha}`: gradient difference O(d^alpha).
    C1Alpha { alpha: f64 },
    /// `h2 = h1 + d g` with a fixed smooth bump `g`.
    Smooth,
}

/// Reference domain, perturbed domain, nominal size `d` and regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPair {
    pub reference: DomainSpec,
    pub perturbed: DomainSpec,
    pub d: f64,
    pub regime: Regime,
}

impl DomainPair {
    /// Builds a pair directly from two bottom profiles on the same box.
    pub fn from_profiles(
        base: &DomainSpec,
        perturbed_bottom: BoundaryProfile,
        d: f64,
        regime: Regime,
    ) -> Result<Self> {
        let perturbed = base.with_bottom(perturbed_bottom)?;
        Ok(DomainPair {
            reference: base.clone(),
            perturbed,
            d,
            regime,
        })
    }

    /// Uniform vertical shift of the bottom: `amount < 0` grows the domain,
    /// `amount > 0` shrinks it.
    pub fn uniform_shift(base: &DomainSpec, amount: f64) -> Result<Self> {
        let bottom = add_profiles(&base.bottom, BoundaryProfile::UniformShift { amount });
        Self::from_profiles(base, bottom, amount.abs(), Regime::Smooth)
    }

    pub fn h1(&self, x: f64) -> f64 {
        self.reference.bottom.eval(x)
    }

    pub fn h2(&self, x: f64) -> f64 {
        self.perturbed.bottom.eval(x)
    }

    /// Wavelength `delta` of the oscillatory part of the perturbation, if any.
    pub fn delta(&self) -> Option<f64> {
        fn find(p: &BoundaryProfile) -> Option<f64> {
            match p {
                BoundaryProfile::Oscillatory { wavelength, .. } => Some(*wavelength),
                BoundaryProfile::Compound(terms) => terms.iter().find_map(find),
                _ => None,
            }
        }
        find(&self.perturbed.bottom)
    }

    /// Sampled `sup |h1 - h2|` over `n` subintervals.
    pub fn sup_diff(&self, n: usize) -> f64 {
        let t = self.reference.width;
        (0..=n)
            .map(|i| {
                let x = t * i as f64 / n as f64;
                (self.h1(x) - self.h2(x)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sampled `sup |h1' - h2'|` over `n` subintervals.
    pub fn sup_deriv_diff(&self, n: usize) -> f64 {
        let t = self.reference.width;
        (0..=n)
            .map(|i| {
                let x = t * i as f64 / n as f64;
                (self.reference.bottom.deriv(x) - self.perturbed.bottom.deriv(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn add_profiles(a: &BoundaryProfile, b: BoundaryProfile) -> BoundaryProfile {
    match a {
        BoundaryProfile::Flat => b,
        BoundaryProfile::Compound(terms) => {
            let mut terms = terms.clone();
            terms.push(b);
            BoundaryProfile::Compound(terms)
        }
        other => BoundaryProfile::Compound(vec![other.clone(), b]),
    }
}

/// Builds the regime-consistent perturbed pair at size `d`.
///
/// For the oscillatory regimes the wavelength is snapped to `T / N` with
/// `N = max(4, round(T / delta_0))` so an integer number of cells fits the
/// width; the Smooth regime adds `d` times a fixed off-center Gaussian bump.
pub fn make_perturbation(base: &DomainSpec, regime: Regime, d: f64) -> Result<DomainPair> {
    let t = base.width;
    let bottom = match regime {
        Regime::Smooth => BoundaryProfile::SmoothBump {
            center: 0.37 * t,
            width: 0.12 * t,
            amplitude: d,
        },
        Regime::Lipschitz | Regime::C1 | Regime::C1Alpha { .. } => {
            let delta0 = match regime {
                Regime::Lipschitz => d,
                Regime::C1 => d.sqrt(),
                Regime::C1Alpha { alpha } => d.powf(1.0 - alpha),
                Regime::Smooth => unreachable!(),
            };
            let n = ((t / delta0).round() as usize).max(4);
            BoundaryProfile::Oscillatory {
                amplitude: d,
                wavelength: t / n as f64,
                waveform: Waveform::Cosine,
            }
        }
    };
    DomainPair::from_profiles(base, add_profiles(&base.bottom, bottom), d, regime)
}

/// Tolerance for the root find in [`sigma_at`], relative to the height.
const SIGMA_TOL_REL: f64 = 1e-14;

/// Signed normal displacement from `P = (x, h1(x))` on the reference boundary
/// to the perturbed boundary, measured along the outward (downward) normal
/// `nu = (h1', -1) / sqrt(1 + h1'^2)`. Positive where the domain grows. Among
/// all intersections along the line the one of smallest absolute value is
/// returned.
pub fn sigma_at(pair: &DomainPair, x: f64) -> Result<f64> {
    let h1 = pair.h1(x);
    let h1p = pair.reference.bottom.deriv(x);
    let s = (1.0 + h1p * h1p).sqrt();
    // signed vertical-gap equation along the normal line
    let f = |sigma: f64| h1 - sigma / s - pair.h2(x + sigma * h1p / s);

    let sup = pair.sup_diff(256);
    if sup == 0.0 {
        return Ok(0.0);
    }
    let m = pair.reference.bottom.sup_deriv() + pair.perturbed.bottom.sup_deriv();
    let s_max = 4.0 * sup * (1.0 + m) + SIGMA_TOL_REL * pair.reference.height;
    let tol = SIGMA_TOL_REL * pair.reference.height;

    let f0 = f(0.0);
    if f0 == 0.0 {
        return Ok(0.0);
    }

    // scan outward from 0 in both directions for the nearest bracket
    let steps = 512;
    let dt = s_max / steps as f64;
    let mut best: Option<f64> = None;
    for dir in [1.0f64, -1.0] {
        let mut prev = 0.0;
        let mut fprev = f0;
        for k in 1..=steps {
            let cur = dir * dt * k as f64;
            let fcur = f(cur);
            if fprev * fcur <= 0.0 {
                let root = bisect(&f, prev, cur, tol);
                if best.map_or(true, |b: f64| root.abs() < b.abs()) {
                    best = Some(root);
                }
                break;
            }
            prev = cur;
            fprev = fcur;
        }
    }
    best.ok_or(Error::NoIntersection { x })
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return mid;
        }
        let fm = f(mid);
        if fa * fm <= 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Closed-form first-order approximation `(h1 - h2) / sqrt(1 + h1'^2)`.
pub fn sigma_closed_form(pair: &DomainPair, x: f64) -> f64 {
    let h1p = pair.reference.bottom.deriv(x);
    (pair.h1(x) - pair.h2(x)) / (1.0 + h1p * h1p).sqrt()
}

/// Sampled Hausdorff-type distance `sup_x |h1(x) - h2(x)|`.
///
/// For graph domains sharing the other three sides this equals the set
/// distance up to the chart constants.
pub fn hausdorff_distance(pair: &DomainPair, n_samples: usize) -> f64 {
    pair.sup_diff(n_samples.max(64))
}

/// The signed displacement sampled at boundary quadrature nodes, with its
/// positive/negative parts and the surface-measure weights.
#[derive(Debug, Clone)]
pub struct SigmaField {
    pub nodes: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_plus: Vec<f64>,
    pub sigma_minus: Vec<f64>,
    /// Quadrature weights including the arc-length factor `sqrt(1 + h1'^2)`.
    pub weights: Vec<f64>,
}

impl SigmaField {
    /// Samples `sigma` at the given abscissae. `weights` must already carry
    /// the surface factor of the reference boundary.
    pub fn from_samples(pair: &DomainPair, nodes: &[f64], weights: &[f64]) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::NodeMismatch {
                left: nodes.len(),
                right: weights.len(),
            });
        }
        let sigma: Vec<f64> = nodes
            .iter()
            .map(|&x| sigma_at(pair, x))
            .collect::<Result<_>>()?;
        let sigma_plus: Vec<f64> = sigma.iter().map(|&s| s.max(0.0)).collect();
        let sigma_minus: Vec<f64> = sigma.iter().map(|&s| (-s).max(0.0)).collect();
        Ok(SigmaField {
            nodes: nodes.to_vec(),
            sigma,
            sigma_plus,
            sigma_minus,
            weights: weights.to_vec(),
        })
    }

    /// A zero field on the same nodes (useful for unperturbed baselines).
    pub fn zero(nodes: &[f64], weights: &[f64]) -> Self {
        SigmaField {
            nodes: nodes.to_vec(),
            sigma: vec![0.0; nodes.len()],
            sigma_plus: vec![0.0; nodes.len()],
            sigma_minus: vec![0.0; nodes.len()],
            weights: weights.to_vec(),
        }
    }
}

/// Classification outcome of a perturbation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegularityClass {
    Lipschitz,
    /// Gradient difference tends to zero with the fitted exponent; exponent 1
    /// corresponds to a smooth (linear-in-d) family, exponents in (0, 1) to
    /// `C^{1,alpha}` with `alpha` about the exponent.
    C1 { exponent: f64 },
}

/// Fitted scaling exponents of the sup- and gradient-differences over a
/// `d`-ladder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegularityReport {
    pub sup_slope: f64,
    pub grad_slope: f64,
    pub class: RegularityClass,
}

/// Re-instantiates the pair's family at each `d` in the ladder and fits
/// log-log slopes of `sup |h1 - h2|` and `sup |h1' - h2'|` against `d`.
pub fn classify_regularity(pair: &DomainPair, d_ladder: &[f64]) -> Result<RegularityReport> {
    if d_ladder.len() < 4 {
        return Err(Error::LadderTooShort(d_ladder.len()));
    }
    let samples = 4096;
    let mut log_d = Vec::new();
    let mut log_sup = Vec::new();
    let mut log_grad = Vec::new();
    for &d in d_ladder {
        let p = make_perturbation(&pair.reference, pair.regime, d)?;
        let sup = p.sup_diff(samples);
        let grad = p.sup_deriv_diff(samples);
        log_d.push(d.ln());
        log_sup.push(sup.max(f64::MIN_POSITIVE).ln());
        log_grad.push(grad.max(f64::MIN_POSITIVE).ln());
    }
    let sup_slope = least_squares_slope(&log_d, &log_sup);
    let grad_slope = least_squares_slope(&log_d, &log_grad);
    let class = if grad_slope.abs() <= 0.05 {
        RegularityClass::Lipschitz
    } else {
        RegularityClass::C1 {
            exponent: grad_slope,
        }
    };
    Ok(RegularityReport {
        sup_slope,
        grad_slope,
        class,
    })
}

pub(crate) fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn strip() -> DomainSpec {
        DomainSpec::periodic_strip(1.0, 1.0)
    }

    #[test]
    fn flat_profile_is_zero() {
        let p = BoundaryProfile::Flat;
        assert_eq!(p.eval(0.3), 0.0);
        assert_eq!(p.deriv(0.3), 0.0);
    }

    #[test]
    fn oscillatory_matches_waveform_exactly() {
        let d = 0.01;
        let delta = 0.125;
        let p = BoundaryProfile::Oscillatory {
            amplitude: d,
            wavelength: delta,
            waveform: Waveform::Cosine,
        };
        for i in 0..50 {
            let x = 0.02 * i as f64;
            assert_relative_eq!(
                p.eval(x),
                d * Waveform::Cosine.eval(x / delta),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn waveform_derivatives_match_finite_differences() {
        for wf in [Waveform::Cosine, Waveform::Tent] {
            let h = 1e-6;
            for i in 0..97 {
                let x = i as f64 / 97.0;
                let fd = (wf.eval(x + h) - wf.eval(x - h)) / (2.0 * h);
                assert!(
                    (wf.deriv(x) - fd).abs() < 1e-5,
                    "waveform {:?} at {}: {} vs {}",
                    wf,
                    x,
                    wf.deriv(x),
                    fd
                );
            }
        }
    }

    #[test]
    fn tent_is_c1_and_nonnegative() {
        let wf = Waveform::Tent;
        for i in 0..=400 {
            let x = i as f64 / 400.0;
            assert!(wf.eval(x) >= 0.0);
        }
        // continuity of value and slope at the seams
        for seam in [0.0, 0.25, 0.5, 0.75] {
            let e = 1e-9;
            assert!((wf.eval(seam - e) - wf.eval(seam + e)).abs() < 1e-7);
            assert!((wf.deriv(seam - e) - wf.deriv(seam + e)).abs() < 1e-6);
        }
    }

    #[test]
    fn sigma_uniform_downward_shift() {
        let d = 0.01;
        let pair = DomainPair::uniform_shift(&strip(), -d).unwrap();
        for x in [0.0, 0.31, 0.77] {
            assert_relative_eq!(sigma_at(&pair, x).unwrap(), d, max_relative = 1e-10);
        }
    }

    #[test]
    fn sigma_identity_pair_is_zero() {
        let pair = DomainPair::from_profiles(&strip(), BoundaryProfile::Flat, 0.0, Regime::Smooth)
            .unwrap();
        assert_eq!(sigma_at(&pair, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn sigma_oscillatory_matches_bisection_oracle() {
        // h1 == 0, h2 = d eta(x/delta) >= 0: the normal is vertical, so
        // sigma(x) = -d eta(x/delta). Independent oracle: bisection on
        // g(s) = h2(x) - (-s) over s in [-2d, 2d].
        let d = 1.0 / 64.0;
        let pair = make_perturbation(&strip(), Regime::Lipschitz, d).unwrap();
        let delta = pair.delta().unwrap();
        for i in 0..40 {
            let x = i as f64 / 40.0;
            let sigma = sigma_at(&pair, x).unwrap();
            // oracle: find s with -s = h2(x) by bisection
            let g = |s: f64| -s - pair.h2(x);
            let (mut a, mut b) = (-2.0 * d, 2.0 * d);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if g(a) * g(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let oracle = 0.5 * (a + b);
            assert!(
                (sigma - oracle).abs() < 1e-12,
                "x={x} sigma={sigma} oracle={oracle}"
            );
            assert_relative_eq!(
                sigma,
                -d * Waveform::Cosine.eval(x / delta),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sigma_close_to_closed_form_on_smooth_pairs() {
        // base with a smooth bump so h1' != 0, perturbed by a further bump
        let base = DomainSpec::new(
            1.0,
            1.0,
            BoundaryProfile::SmoothBump {
                center: 0.5,
                width: 0.15,
                amplitude: 0.05,
            },
            SideCondition::Dirichlet,
        )
        .unwrap();
        for &d in &[1e-2, 5e-3, 2.5e-3] {
            let pair = make_perturbation(&base, Regime::Smooth, d).unwrap();
            let mut max_dev: f64 = 0.0;
            for i in 0..1000 {
                let x = i as f64 / 1000.0;
                let dev = (sigma_at(&pair, x).unwrap() - sigma_closed_form(&pair, x)).abs();
                max_dev = max_dev.max(dev);
            }
            // smooth family: deviation O(d^2)
            assert!(max_dev < 5.0 * d * d, "d={d} dev={max_dev}");
        }
    }

    #[test]
    fn hausdorff_constant_offset_and_identity() {
        let d = 0.02;
        let pair = DomainPair::uniform_shift(&strip(), -d).unwrap();
        assert_relative_eq!(hausdorff_distance(&pair, 128), d, max_relative = 1e-14);

        let same =
            DomainPair::from_profiles(&strip(), BoundaryProfile::Flat, 0.0, Regime::Smooth)
                .unwrap();
        assert_eq!(hausdorff_distance(&same, 128), 0.0);
    }

    #[test]
    fn hausdorff_oscillatory_attains_waveform_max() {
        // dense sampling oracle for max eta over one period
        let d = 1.0 / 32.0;
        let pair = make_perturbation(&strip(), Regime::Lipschitz, d).unwrap();
        let dense_max = (0..100_000)
            .map(|i| d * Waveform::Cosine.eval(i as f64 / 100_000.0))
            .fold(0.0, f64::max);
        let dh = hausdorff_distance(&pair, 4096);
        assert_relative_eq!(dh, dense_max, max_relative = 1e-6);
        assert_relative_eq!(dh, d, max_relative = 1e-6);
    }

    #[test]
    fn make_perturbation_snaps_wavelength() {
        let pair = make_perturbation(&strip(), Regime::Lipschitz, 1.0 / 64.0).unwrap();
        assert_relative_eq!(pair.delta().unwrap(), 1.0 / 64.0, max_relative = 1e-14);

        let pair = make_perturbation(&strip(), Regime::C1Alpha { alpha: 0.5 }, 1e-4).unwrap();
        assert_relative_eq!(pair.delta().unwrap(), 1e-2, max_relative = 1e-14);
    }

    #[test]
    fn make_perturbation_rejects_large_amplitude() {
        let r = make_perturbation(&strip(), Regime::Lipschitz, 0.6);
        assert!(matches!(r, Err(Error::AmplitudeTooLarge { .. })));
    }

    #[test]
    fn classify_regularity_slopes() {
        let ladder: Vec<f64> = (0..6).map(|i| 1e-2 * 0.5f64.powi(i)).collect();

        let lip = make_perturbation(&strip(), Regime::Lipschitz, ladder[0]).unwrap();
        let rep = classify_regularity(&lip, &ladder).unwrap();
        assert!(rep.grad_slope.abs() < 0.1, "lipschitz slope {}", rep.grad_slope);
        assert_eq!(rep.class, RegularityClass::Lipschitz);

        let hol = make_perturbation(&strip(), Regime::C1Alpha { alpha: 0.5 }, ladder[0]).unwrap();
        let rep = classify_regularity(&hol, &ladder).unwrap();
        assert!((rep.grad_slope - 0.5).abs() < 0.1, "holder slope {}", rep.grad_slope);

        let smooth = make_perturbation(&strip(), Regime::Smooth, ladder[0]).unwrap();
        let rep = classify_regularity(&smooth, &ladder).unwrap();
        assert!((rep.grad_slope - 1.0).abs() < 0.1, "smooth slope {}", rep.grad_slope);
        assert!((rep.sup_slope - 1.0).abs() < 0.1);
    }

    #[test]
    fn classify_regularity_rejects_short_ladder() {
        let pair = make_perturbation(&strip(), Regime::Smooth, 1e-2).unwrap();
        assert!(matches!(
            classify_regularity(&pair, &[1e-2, 5e-3, 2.5e-3]),
            Err(Error::LadderTooShort(3))
        ));
    }

    #[test]
    fn sigma_field_splits_are_disjoint_and_bounded() {
        let base = strip();
        let pair = make_perturbation(&base, Regime::Lipschitz, 1.0 / 32.0).unwrap();
        let nodes: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        let weights = vec![1.0 / 200.0; 200];
        let field = SigmaField::from_samples(&pair, &nodes, &weights).unwrap();
        let bound = (1.0 + pair.reference.bottom.sup_deriv()) * pair.sup_diff(4096) + 1e-12;
        for q in 0..nodes.len() {
            assert!(field.sigma_plus[q] >= 0.0 && field.sigma_minus[q] >= 0.0);
            assert_eq!(field.sigma_plus[q] * field.sigma_minus[q], 0.0);
            assert_relative_eq!(
                field.sigma[q],
                field.sigma_plus[q] - field.sigma_minus[q],
                epsilon = 1e-15
            );
            assert!(field.sigma[q].abs() <= bound);
        }
    }
}
