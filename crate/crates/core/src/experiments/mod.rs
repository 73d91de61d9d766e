//! Sweep driver: ladders of perturbation sizes, the per-size eigenvalue
//! pipeline (solve both domains on two mesh levels, extrapolate, predict the
//! first-order shift, measure the remainder), log-log rate fits against a
//! measured noise floor, and deterministic CSV/JSON/SVG reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{dense_sym_pencil_eig, richardson, smallest_eigenpairs, EigenSettings};
use crate::error::{Error, Result};
use crate::fem::{recover_boundary_flux, Discretization};
use crate::geometry::{
    BoundaryProfile, DomainPair, DomainSpec, Regime, SideCondition, SigmaField, Waveform,
};
use crate::mesh::{boundary_quadrature, ReferenceGrid};
use crate::hadamard::reduced_pencil;
use crate::probe::{probe_pair, ProbeConfig};

/// How the perturbed bottom boundary is built from the ladder size `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `h2 = h1 -+ d`; `grow` lowers the bottom so the domain gets taller.
    UniformShift { grow: bool },
    /// Fixed smooth bump profile scaled by `d` (localized, asymmetric).
    SmoothBump,
    /// `d * eta(x / delta)` with the wavelength tied to `d` by the regime.
    Oscillatory { regime: Regime, waveform: Waveform },
}

/// A complete sweep description: domain, perturbation family, eigenvalue
/// group, geometric ladder of sizes, mesh resolution and reproducibility
/// seed. Serializable so sweeps can be driven from JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct Scenario {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub side_condition: SideCondition,
    pub perturbation: PerturbationKind,
    /// 1-based index of the first eigenvalue of the tracked group.
    pub m_index: usize,
    pub group_size: usize,
    /// Largest ladder entry; subsequent entries shrink geometrically.
    pub d_max: f64,
    pub ratio: f64,
    pub count: usize,
    /// Coarse mesh level; the fine level is its uniform doubling.
    pub grid: ReferenceGrid,
    pub seed: u64,
    /// Attach the two-domain probe quantities to every row.
    pub probes: bool,
}

impl Scenario {
    /// The geometric ladder `d_max * ratio^i`, strictly decreasing.
    pub fn ladder(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.d_max * self.ratio.powi(i as i32))
            .collect()
    }

    /// Checks ladder shape, amplitude headroom and mesh resolution (at
    /// least 8 cells per oscillation wavelength at the smallest size).
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return fail(format!("ladder ratio {} outside (0, 1)", self.ratio));
        }
        if self.count < 4 {
            return Err(Error::LadderTooShort(self.count));
        }
        if self.m_index < 1 || self.group_size < 1 {
            return fail("m_index and group_size must be at least 1".into());
        }
        if !(self.d_max > 0.0) || self.d_max >= 0.5 * self.height {
            return fail(format!(
                "d_max {} not in (0, height/2 = {})",
                self.d_max,
                0.5 * self.height
            ));
        }
        if self.grid.nx < 2 || self.grid.ny < 2 || self.grid.grading < 1.0 {
            return fail(format!("degenerate grid {:?}", self.grid));
        }
        let d_min = self.d_max * self.ratio.powi(self.count as i32 - 1);
        if let Some(delta_min) = self.wavelength(d_min) {
            let needed = (8.0 * self.width / delta_min).ceil() as usize;
            if self.grid.nx < needed {
                return fail(format!(
                    "nx = {} under-resolves wavelength {:.3e} at d = {:.3e} (need nx >= {})",
                    self.grid.nx, delta_min, d_min, needed
                ));
            }
        }
        Ok(())
    }

    pub fn base_spec(&self) -> Result<DomainSpec> {
        DomainSpec::new(
            self.width,
            self.height,
            BoundaryProfile::Flat,
            self.side_condition,
        )
    }

    /// Oscillation wavelength of the family at size `d`, if oscillatory.
    /// Matches the snapping of [`Self::pair_for`].
    pub fn wavelength(&self, d: f64) -> Option<f64> {
        match self.perturbation {
            PerturbationKind::Oscillatory { regime, .. } => {
                let delta0 = match regime {
                    Regime::Lipschitz => d,
                    Regime::C1 => d.sqrt(),
                    Regime::C1Alpha { alpha } => d.powf(1.0 - alpha),
                    Regime::Smooth => return None,
                };
                let n = ((self.width / delta0).round() as usize).max(4);
                Some(self.width / n as f64)
            }
            _ => None,
        }
    }

    /// Builds the reference/perturbed pair at ladder entry `d`.
    pub fn pair_for(&self, d: f64) -> Result<DomainPair> {
        let base = self.base_spec()?;
        match self.perturbation {
            PerturbationKind::UniformShift { grow } => {
                DomainPair::uniform_shift(&base, if grow { -d } else { d })
            }
            PerturbationKind::SmoothBump => {
                let bottom = BoundaryProfile::SmoothBump {
                    center: 0.37 * self.width,
                    width: 0.12 * self.width,
                    amplitude: d,
                };
                DomainPair::from_profiles(&base, bottom, d, Regime::Smooth)
            }
            PerturbationKind::Oscillatory { regime, waveform } => {
                let wavelength = self.wavelength(d).expect("oscillatory regime");
                let bottom = BoundaryProfile::Oscillatory {
                    amplitude: d,
                    wavelength,
                    waveform,
                };
                DomainPair::from_profiles(&base, bottom, d, regime)
            }
        }
    }
}

/// Probe quantities attached to a sweep row (see [`crate::probe`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeColumns {
    pub eps_hat: f64,
    pub rho_hat: f64,
    pub trace_gamma: f64,
    pub sliver_energy: f64,
    pub tau: Vec<f64>,
    pub tau_residual: f64,
}

/// One ladder entry: extrapolated group values on both domains, first-order
/// corrections, remainders, optional probes and the wall-clock cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: f64,
    /// Oscillation wavelength, 0 for non-oscillatory families.
    pub delta: f64,
    pub lambda_m: f64,
    pub j_m: usize,
    /// First-order corrections `kappa_k`, ascending.
    pub kappa: Vec<f64>,
    /// Extrapolated perturbed group values, ascending.
    pub mu: Vec<f64>,
    /// Remainders `r_k = mu_k - lambda_m - kappa_k`.
    pub remainder: Vec<f64>,
    pub probe: Option<ProbeColumns>,
    /// Wall-clock cost of the row; excluded from reports so that output
    /// bytes depend only on the seed.
    #[serde(skip)]
    pub millis: u64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(d: f64, j: usize, message: String) -> Self {
        SweepRow {
            d,
            delta: 0.0,
            lambda_m: f64::NAN,
            j_m: j,
            kappa: Vec::new(),
            mu: Vec::new(),
            remainder: Vec::new(),
            probe: None,
            millis: 0,
            error: Some(message),
        }
    }
}

/// A completed sweep: rows in ladder order plus the measured solver noise
/// floor used to trim rate fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub scenario: Scenario,
    pub rows: Vec<SweepRow>,
    pub noise_floor: f64,
}

/// Least-squares power-law fit `log q = slope * log d + intercept`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Extrapolated values of the tracked group on one domain: solve on the
/// level pair and eliminate the leading quadratic eigenvalue error.
fn group_values(
    spec: &DomainSpec,
    grid: &ReferenceGrid,
    count: usize,
    seed: u64,
) -> Result<(Vec<f64>, Discretization, crate::eigen::EigenSolution)> {
    let mut settings = EigenSettings::new(count);
    settings.seed = seed;
    let coarse = Discretization::new(spec, grid)?;
    let chol_c = coarse.factor_stiffness()?;
    let sol_c = smallest_eigenpairs(&coarse, &chol_c, &settings)?;
    let fine = Discretization::new(spec, &grid.refined())?;
    let chol_f = fine.factor_stiffness()?;
    let sol_f = smallest_eigenpairs(&fine, &chol_f, &settings)?;
    let star = richardson(&sol_c.values[..count], &sol_f.values[..count])?;
    Ok((star, fine, sol_f))
}

/// Reference-domain data at one mesh level.
struct RefLevel {
    grid: ReferenceGrid,
    /// Reference group eigenvalues of this level (the level's own split).
    values: Vec<f64>,
    quad: crate::mesh::BoundaryQuadrature,
    fluxes: Vec<crate::fem::BoundaryFlux>,
}

/// Reference-domain work shared by every ladder entry, kept per level: the
/// first-order prediction must be formed against the same level's group
/// values, otherwise the mesh-induced split of a degenerate group pollutes
/// the extrapolated remainders near the avoided crossing.
struct ReferenceSolve {
    lambda_m: f64,
    levels: [RefLevel; 2],
}

fn solve_ref_level(
    spec: &DomainSpec,
    grid: &ReferenceGrid,
    group: std::ops::Range<usize>,
    count: usize,
    seed: u64,
) -> Result<(RefLevel, Vec<f64>)> {
    let mut settings = EigenSettings::new(count);
    settings.seed = seed;
    let disc = Discretization::new(spec, grid)?;
    let chol = disc.factor_stiffness()?;
    let sol = smallest_eigenpairs(&disc, &chol, &settings)?;
    let quad = boundary_quadrature(&disc.mesh);
    let fluxes: Vec<_> = group
        .clone()
        .map(|k| {
            let field = disc.field_from_dofs(&sol.vectors[k]);
            recover_boundary_flux(&field, sol.values[k], &quad)
        })
        .collect();
    let values: Vec<f64> = group.map(|k| sol.values[k]).collect();
    let all = sol.values;
    Ok((
        RefLevel {
            grid: *grid,
            values,
            quad,
            fluxes,
        },
        all,
    ))
}

fn solve_reference(scenario: &Scenario) -> Result<ReferenceSolve> {
    let spec = scenario.base_spec()?;
    let j = scenario.group_size;
    let count = scenario.m_index - 1 + j + 2;
    let group = scenario.m_index - 1..scenario.m_index - 1 + j;
    let (coarse, all_c) =
        solve_ref_level(&spec, &scenario.grid, group.clone(), count, scenario.seed)?;
    let (fine, all_f) = solve_ref_level(
        &spec,
        &scenario.grid.refined(),
        group.clone(),
        count,
        scenario.seed,
    )?;
    let star = richardson(&all_c, &all_f)?;
    let lambda_m = star[group].iter().sum::<f64>() / j as f64;
    Ok(ReferenceSolve {
        lambda_m,
        levels: [coarse, fine],
    })
}

/// First-order analysis of one level: corrections `kappa` from the reduced
/// pencil, predicted group values `eig(diag(lambda_ref) + A)` against the
/// level's own reference split, matched perturbed values and remainders.
fn level_row(
    level: &RefLevel,
    pair: &DomainPair,
    perturbed_values: &[f64],
    j: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let sigma = SigmaField::from_samples(pair, &level.quad.nodes, &level.quad.weights)?;
    let pencil = reduced_pencil(&level.fluxes, &sigma, None)?;
    let (kappa, _) = dense_sym_pencil_eig(&pencil.a, &pencil.b, j)?;
    let mut shifted = pencil.a.clone();
    for k in 0..j {
        shifted[k * j + k] += level.values[k];
    }
    let (predicted, _) = dense_sym_pencil_eig(&shifted, &pencil.b, j)?;

    let center = level.values.iter().sum::<f64>() / j as f64;
    let mut order: Vec<usize> = (0..perturbed_values.len()).collect();
    order.sort_by(|&a, &b| {
        (perturbed_values[a] - center)
            .abs()
            .partial_cmp(&(perturbed_values[b] - center).abs())
            .unwrap()
    });
    let mut mu: Vec<f64> = order[..j].iter().map(|&i| perturbed_values[i]).collect();
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let remainder = mu.iter().zip(&predicted).map(|(m, p)| m - p).collect();
    Ok((kappa, mu, remainder))
}

/// Runs the perturbed half of the pipeline for one ladder entry. All row
/// quantities are evaluated per level and Richardson-extrapolated, so the
/// shared-topology discretization error cancels inside each level first.
fn solve_row(scenario: &Scenario, reference: &ReferenceSolve, d: f64) -> Result<SweepRow> {
    let start = Instant::now();
    let pair = scenario.pair_for(d)?;
    let j = scenario.group_size;
    let count = scenario.m_index - 1 + j + 2;
    let lambda_m = reference.lambda_m;

    let mut per_level = Vec::with_capacity(2);
    for level in &reference.levels {
        let mut settings = EigenSettings::new(count);
        settings.seed = scenario.seed;
        let disc = Discretization::new(&pair.perturbed, &level.grid)?;
        let chol = disc.factor_stiffness()?;
        let sol = smallest_eigenpairs(&disc, &chol, &settings)?;
        per_level.push(level_row(level, &pair, &sol.values, j)?);
    }
    let extrap = |c: &[f64], f: &[f64]| richardson(c, f);
    let kappa = extrap(&per_level[0].0, &per_level[1].0)?;
    let mu = extrap(&per_level[0].1, &per_level[1].1)?;
    let remainder = extrap(&per_level[0].2, &per_level[1].2)?;

    let probe = if scenario.probes {
        let cfg = ProbeConfig {
            m_index: scenario.m_index,
            group_size: j,
            seed: scenario.seed,
            ..ProbeConfig::default()
        };
        let out = probe_pair(&pair, &scenario.grid, &cfg)?;
        Some(ProbeColumns {
            eps_hat: out.eps_hat,
            rho_hat: out.rho_hat,
            trace_gamma: out.trace_gamma,
            sliver_energy: out.sliver_energy,
            tau: out.tau,
            tau_residual: out.tau_residual,
        })
    } else {
        None
    };

    Ok(SweepRow {
        d,
        delta: pair.delta().unwrap_or(0.0),
        lambda_m,
        j_m: j,
        kappa,
        mu,
        remainder,
        probe,
        millis: start.elapsed().as_millis() as u64,
        error: None,
    })
}

/// Solver reproducibility floor: the reference group is extrapolated twice
/// with independent Krylov start blocks and the values differenced.
pub fn noise_floor(scenario: &Scenario) -> Result<f64> {
    let spec = scenario.base_spec()?;
    let count = scenario.m_index - 1 + scenario.group_size + 2;
    let (a, _, _) = group_values(&spec, &scenario.grid, count, scenario.seed)?;
    let (b, _, _) = group_values(&spec, &scenario.grid, count, scenario.seed ^ 0x9E37_79B9)?;
    let group = scenario.m_index - 1..scenario.m_index - 1 + scenario.group_size;
    let floor = group
        .map(|k| (a[k] - b[k]).abs())
        .fold(0.0f64, f64::max);
    Ok(floor.max(1e-13 * a[scenario.m_index - 1].abs()))
}

/// Runs the whole ladder concurrently. Individual row failures are recorded
/// in the row; the sweep fails only if more than a quarter of the rows do.
pub fn run_sweep(scenario: &Scenario) -> Result<SweepOutcome> {
    scenario.validate()?;
    let floor = noise_floor(scenario)?;
    let reference = solve_reference(scenario)?;
    let mut rows: Vec<SweepRow> = scenario
        .ladder()
        .par_iter()
        .map(|&d| {
            solve_row(scenario, &reference, d)
                .unwrap_or_else(|e| SweepRow::failed(d, scenario.group_size, e.to_string()))
        })
        .collect();
    rows.sort_by(|a, b| b.d.partial_cmp(&a.d).unwrap());
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if 4 * failed > rows.len() {
        return Err(Error::InvalidScenario(format!(
            "sweep '{}': {failed} of {} rows failed; first: {}",
            scenario.name,
            rows.len(),
            rows.iter().find_map(|r| r.error.as_deref()).unwrap_or("?")
        )));
    }
    Ok(SweepOutcome {
        scenario: scenario.clone(),
        rows,
        noise_floor: floor,
    })
}

/// Log-log least-squares fit of `quantity(row)` against `d`. Rows with
/// errors, non-finite values, or magnitudes within a factor 10 of the noise
/// floor are excluded; at least 4 points must survive.
pub fn fit_rate<F>(rows: &[SweepRow], floor: f64, quantity: F) -> Result<RateFit>
where
    F: Fn(&SweepRow) -> Option<f64>,
{
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| quantity(r).map(|q| (r.d, q.abs())))
        .filter(|&(d, q)| d > 0.0 && q.is_finite() && q > 10.0 * floor)
        .map(|(d, q)| (d.ln(), q.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss_res: f64 = pts
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let mean_y = sy / n;
    let ss_tot: f64 = pts.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points_used: pts.len(),
    })
}

/// The fits every report carries: leading remainder and correction, plus
/// each probe quantity when the sweep collected probes. Quantities that
/// sit in the noise everywhere are simply omitted.
pub fn standard_fits(outcome: &SweepOutcome) -> BTreeMap<String, RateFit> {
    let mut fits = BTreeMap::new();
    let series: Vec<(&str, Box<dyn Fn(&SweepRow) -> Option<f64>>)> = vec![
        ("r_1", Box::new(|r: &SweepRow| r.remainder.first().copied())),
        ("kappa_1", Box::new(|r: &SweepRow| r.kappa.first().copied())),
        (
            "eps_hat",
            Box::new(|r: &SweepRow| r.probe.as_ref().map(|p| p.eps_hat)),
        ),
        (
            "rho_hat",
            Box::new(|r: &SweepRow| r.probe.as_ref().map(|p| p.rho_hat)),
        ),
        (
            "trace_gamma",
            Box::new(|r: &SweepRow| r.probe.as_ref().map(|p| p.trace_gamma)),
        ),
        (
            "sliver_energy",
            Box::new(|r: &SweepRow| r.probe.as_ref().map(|p| p.sliver_energy)),
        ),
        (
            "tau_residual",
            Box::new(|r: &SweepRow| r.probe.as_ref().map(|p| p.tau_residual)),
        ),
    ];
    for (name, f) in series {
        if let Ok(fit) = fit_rate(&outcome.rows, outcome.noise_floor, f) {
            fits.insert(name.to_string(), fit);
        }
    }
    fits
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: PathBuf,
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    scenario: &'a Scenario,
    noise_floor: f64,
    rows_failed: usize,
    fits: &'a BTreeMap<String, RateFit>,
    rows: &'a [SweepRow],
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        String::new()
    }
}

/// Renders the CSV table. Group columns repeat per member; probe columns
/// are present (and empty) even when probes were not collected.
pub fn render_csv(outcome: &SweepOutcome) -> String {
    let j = outcome.scenario.group_size;
    let mut s = String::from("d,delta,lambda_m,J_m");
    for tag in ["kappa", "mu", "r"] {
        for k in 1..=j {
            write!(s, ",{tag}_{k}").unwrap();
        }
    }
    s.push_str(",eps_hat,rho_hat,trace_gamma,sliver_energy");
    for k in 1..=j {
        write!(s, ",tau_{k}").unwrap();
    }
    s.push_str(",tau_residual,error\n");
    for row in &outcome.rows {
        write!(s, "{},{},{},{}", num(row.d), num(row.delta), num(row.lambda_m), row.j_m).unwrap();
        for vals in [&row.kappa, &row.mu, &row.remainder] {
            for k in 0..j {
                s.push(',');
                s.push_str(&vals.get(k).copied().map(num).unwrap_or_default());
            }
        }
        let p = row.probe.as_ref();
        for v in [
            p.map(|p| p.eps_hat),
            p.map(|p| p.rho_hat),
            p.map(|p| p.trace_gamma),
            p.map(|p| p.sliver_energy),
        ] {
            s.push(',');
            s.push_str(&v.map(num).unwrap_or_default());
        }
        for k in 0..j {
            s.push(',');
            s.push_str(
                &p.and_then(|p| p.tau.get(k).copied())
                    .map(num)
                    .unwrap_or_default(),
            );
        }
        s.push(',');
        s.push_str(&p.map(|p| num(p.tau_residual)).unwrap_or_default());
        write!(s, ",{}\n", row.error.as_deref().unwrap_or("")).unwrap();
    }
    s
}

/// Renders a self-contained SVG 1.1 log-log plot of `|r_1|` against `d`
/// with the fitted line and its slope annotated.
pub fn render_svg(outcome: &SweepOutcome, fit: Option<&RateFit>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 30.0;
    const MB: f64 = 50.0;

    let pts: Vec<(f64, f64)> = outcome
        .rows
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| r.remainder.first().map(|&v| (r.d, v.abs())))
        .filter(|&(d, q)| d > 0.0 && q > 0.0)
        .map(|(d, q)| (d.log10(), q.log10()))
        .collect();
    let (x0, x1, y0, y1) = if pts.is_empty() {
        (-3.0, 0.0, -6.0, 0.0)
    } else {
        let x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 0.2;
        let x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + 0.2;
        let y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - 0.3;
        let y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + 0.3;
        (x0, x1, y0, y1)
    };
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut s = String::new();
    write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    )
    .unwrap();
    write!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
    .unwrap();
    write!(
        s,
        "<text x=\"{:.1}\" y=\"18\" font-family=\"monospace\" font-size=\"14\">{} : |r_1| vs d (log-log)</text>\n",
        ML,
        outcome.scenario.name
    )
    .unwrap();
    // axes
    write!(
        s,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        ML,
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    write!(
        s,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        ML,
        MT,
        ML,
        H - MB
    )
    .unwrap();
    // decade ticks
    for e in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = px(e as f64);
        write!(
            s,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">1e{e}</text>\n",
            H - MB,
            H - MB + 6.0,
            H - MB + 20.0
        )
        .unwrap();
    }
    for e in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let y = py(e as f64);
        write!(
            s,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">1e{e}</text>\n",
            ML - 6.0,
            ML,
            ML - 9.0,
            y + 4.0
        )
        .unwrap();
    }
    if let Some(fit) = fit {
        // fitted line in natural-log coordinates mapped back to log10
        let to_y = |lx: f64| (fit.slope * (lx * std::f64::consts::LN_10) + fit.intercept)
            / std::f64::consts::LN_10;
        write!(
            s,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
            px(x0 + 0.1),
            py(to_y(x0 + 0.1)),
            px(x1 - 0.1),
            py(to_y(x1 - 0.1))
        )
        .unwrap();
        write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" fill=\"steelblue\">slope={:.2}</text>\n",
            W - MR - 120.0,
            MT + 20.0,
            fit.slope
        )
        .unwrap();
    }
    for &(x, y) in &pts {
        write!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"crimson\"/>\n",
            px(x),
            py(y)
        )
        .unwrap();
    }
    write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">d</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

/// Writes `name.csv`, `name.json` and `name.svg` into `dir`. Output bytes
/// depend only on the outcome, so re-rendering is idempotent.
pub fn emit_report(
    outcome: &SweepOutcome,
    fits: &BTreeMap<String, RateFit>,
    dir: &Path,
) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let base = dir.join(&outcome.scenario.name);
    let csv = base.with_extension("csv");
    let json = base.with_extension("json");
    let svg = base.with_extension("svg");

    fs::write(&csv, render_csv(outcome))?;
    let summary = ReportSummary {
        scenario: &outcome.scenario,
        noise_floor: outcome.noise_floor,
        rows_failed: outcome.rows.iter().filter(|r| r.error.is_some()).count(),
        fits,
        rows: &outcome.rows,
    };
    let mut body = serde_json::to_string_pretty(&summary)?;
    body.push('\n');
    fs::write(&json, body)?;
    fs::write(&svg, render_svg(outcome, fits.get("r_1")))?;
    Ok(ReportFiles { csv, json, svg })
}

// --- built-in scenarios -------------------------------------------------

impl Scenario {
    /// Growing uniform shift of the periodic unit strip; the lowest mode has
    /// a closed-form value, the correction is exactly `-2 pi^2 d`.
    pub fn strip_uniform() -> Self {
        Scenario {
            name: "strip-uniform".into(),
            width: 1.0,
            height: 1.0,
            side_condition: SideCondition::Periodic,
            perturbation: PerturbationKind::UniformShift { grow: true },
            m_index: 1,
            group_size: 1,
            d_max: 1e-2,
            ratio: 0.5,
            count: 6,
            grid: ReferenceGrid::new(12, 96, 1.0),
            seed: 0x5EED_0001,
            probes: false,
        }
    }

    /// Smooth asymmetric bump under the double eigenvalue of the unit square.
    pub fn square_bump() -> Self {
        Scenario {
            name: "square-bump".into(),
            width: 1.0,
            height: 1.0,
            side_condition: SideCondition::Dirichlet,
            perturbation: PerturbationKind::SmoothBump,
            m_index: 2,
            group_size: 2,
            d_max: 1e-2,
            ratio: 0.5,
            count: 6,
            grid: ReferenceGrid::new(48, 48, 1.0),
            seed: 0x5EED_0002,
            probes: false,
        }
    }

    /// Growing uniform shift splitting the double eigenvalue of the square.
    pub fn square_uniform() -> Self {
        Scenario {
            name: "square-uniform".into(),
            grid: ReferenceGrid::new(48, 64, 1.0),
            perturbation: PerturbationKind::UniformShift { grow: true },
            seed: 0x5EED_0003,
            ..Self::square_bump()
        }
    }

    /// Oscillatory family with wavelength `sqrt(d)`: gradients converge,
    /// remainder of order `d^{3/2}`.
    pub fn c1alpha_half() -> Self {
        Scenario {
            name: "c1alpha-half".into(),
            width: 1.0,
            height: 1.0,
            side_condition: SideCondition::Periodic,
            perturbation: PerturbationKind::Oscillatory {
                regime: Regime::C1Alpha { alpha: 0.5 },
                waveform: Waveform::Cosine,
            },
            m_index: 1,
            group_size: 1,
            d_max: 1e-2,
            ratio: 0.5,
            count: 6,
            grid: ReferenceGrid::new(512, 80, 2.0),
            seed: 0x5EED_0004,
            probes: false,
        }
    }

    /// The `delta = sqrt(d)` family tagged as a genuine C1 perturbation.
    pub fn c1_family() -> Self {
        Scenario {
            name: "c1-family".into(),
            perturbation: PerturbationKind::Oscillatory {
                regime: Regime::C1,
                waveform: Waveform::Cosine,
            },
            seed: 0x5EED_0005,
            ..Self::c1alpha_half()
        }
    }

    /// Lipschitz family `delta = d`: the first-order prediction misses by
    /// O(d), reproduced by the boundary-layer cell energy.
    pub fn lipschitz_family(waveform: Waveform) -> Self {
        Scenario {
            name: "lipschitz-family".into(),
            width: 1.0,
            height: 1.0,
            side_condition: SideCondition::Periodic,
            perturbation: PerturbationKind::Oscillatory {
                regime: Regime::Lipschitz,
                waveform,
            },
            m_index: 1,
            group_size: 1,
            d_max: 1.0 / 8.0,
            ratio: 0.5,
            count: 4,
            grid: ReferenceGrid::new(512, 96, 2.0),
            seed: 0x5EED_0006,
            probes: false,
        }
    }

    /// Shrinking uniform shift with the probe quantities attached.
    pub fn probe_uniform() -> Self {
        Scenario {
            name: "probe-uniform".into(),
            width: 1.0,
            height: 1.0,
            side_condition: SideCondition::Periodic,
            perturbation: PerturbationKind::UniformShift { grow: false },
            m_index: 1,
            group_size: 1,
            d_max: 4e-2,
            ratio: 0.5,
            count: 4,
            grid: ReferenceGrid::new(48, 80, 2.0),
            seed: 0x5EED_0007,
            probes: true,
        }
    }

    /// Looks up a built-in scenario by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "strip-uniform" => Some(Self::strip_uniform()),
            "square-bump" => Some(Self::square_bump()),
            "square-uniform" => Some(Self::square_uniform()),
            "c1alpha-half" => Some(Self::c1alpha_half()),
            "c1-family" => Some(Self::c1_family()),
            "lipschitz-family" => Some(Self::lipschitz_family(Waveform::Cosine)),
            "probe-uniform" => Some(Self::probe_uniform()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 7] = [
        "strip-uniform",
        "square-bump",
        "square-uniform",
        "c1alpha-half",
        "c1-family",
        "lipschitz-family",
        "probe-uniform",
    ];
}
