//! Command-line driver for the boundary-perturbation eigenvalue laboratory.
//!
//! Exit codes: 0 on success, 1 when a computation fails numerically, 2 on
//! usage errors (bad flags, missing or malformed input files).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hadamard_lab::cell::{
    first_mode_normal_slope, predicted_extra, solve_cell_extrapolated, CellDomain,
};
use hadamard_lab::eigen::{richardson, smallest_eigenpairs, EigenSettings};
use hadamard_lab::experiments::{emit_report, run_sweep, standard_fits, Scenario, SweepOutcome};
use hadamard_lab::fem::Discretization;
use hadamard_lab::geometry::{BoundaryProfile, DomainPair, DomainSpec, SideCondition, Waveform};
use hadamard_lab::mesh::ReferenceGrid;
use hadamard_lab::probe::{probe_pair, ProbeConfig};

const SYNOPSIS: &str = "usage: hadamard-lab [--threads N] <solve|sweep|counterexample|probe|report> [options]
  solve           eigenvalues of one domain        (try: solve --square --count 5)
  sweep           run a perturbation ladder        (sweep scenario.json | sweep --builtin NAME)
  counterexample  Lipschitz family vs cell energy  (counterexample --waveform cos --dmax 1e-2 --points 5)
  probe           two-domain probe quantities      (probe --d 1e-2)
  report          re-render reports from a sweep summary JSON";

#[derive(Parser)]
#[command(name = "hadamard-lab", version, disable_help_subcommand = true)]
struct Cli {
    /// Worker threads (overrides the HADAMARD_THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the smallest eigenvalues of a single domain.
    Solve(SolveArgs),
    /// Run a sweep scenario and write CSV/JSON/SVG reports.
    Sweep(SweepArgs),
    /// Compare the measured first-order defect of the Lipschitz family with
    /// the boundary-layer cell prediction.
    Counterexample(CounterArgs),
    /// Print the two-domain probe quantities for a uniform shrink.
    Probe(ProbeArgs),
    /// Re-render reports from a previously written sweep summary.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Periodic,
    Dirichlet,
}

impl From<Side> for SideCondition {
    fn from(s: Side) -> Self {
        match s {
            Side::Periodic => SideCondition::Periodic,
            Side::Dirichlet => SideCondition::Dirichlet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WaveformArg {
    Cos,
    Tent,
}

impl From<WaveformArg> for Waveform {
    fn from(w: WaveformArg) -> Self {
        match w {
            WaveformArg::Cos => Waveform::Cosine,
            WaveformArg::Tent => Waveform::Tent,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Unit square with Dirichlet conditions on all sides.
    #[arg(long)]
    square: bool,
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    #[arg(long, value_enum, default_value_t = Side::Periodic)]
    side: Side,
    /// Number of smallest eigenvalues to print.
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 64)]
    nx: usize,
    #[arg(long, default_value_t = 64)]
    ny: usize,
    #[arg(long, default_value_t = 1.0)]
    grading: f64,
    /// Write the coarse mesh as text to this path.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Write the coarse stiffness matrix (Matrix Market) to this path.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario description file (JSON).
    scenario: Option<PathBuf>,
    /// Use a built-in scenario instead of a file.
    #[arg(long)]
    builtin: Option<String>,
    /// Output directory for the reports.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
}

#[derive(Args)]
struct CounterArgs {
    #[arg(long, value_enum, default_value_t = WaveformArg::Cos)]
    waveform: WaveformArg,
    /// Largest perturbation size of the ladder.
    #[arg(long, default_value_t = 1e-2)]
    dmax: f64,
    /// Number of ladder points.
    #[arg(long, default_value_t = 5)]
    points: usize,
    /// Truncation height of the cell problem.
    #[arg(long, default_value_t = 6.0)]
    cell_height: f64,
}

#[derive(Args)]
struct ProbeArgs {
    /// Uniform shrink amount.
    #[arg(long, default_value_t = 1e-2)]
    d: f64,
    #[arg(long, default_value_t = 48)]
    nx: usize,
    #[arg(long, default_value_t = 80)]
    ny: usize,
    #[arg(long, default_value_t = 2.0)]
    grading: f64,
    #[arg(long, default_value_t = 1)]
    m_index: usize,
    #[arg(long, default_value_t = 1)]
    group_size: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep summary JSON written by `sweep`.
    summary: PathBuf,
    #[arg(long, default_value = "reports")]
    out: PathBuf,
}

enum Failure {
    /// Bad invocation or unreadable input: exit code 2.
    Usage(String),
    /// The computation itself failed: exit code 1.
    Numerical(String),
}

impl From<hadamard_lab::Error> for Failure {
    fn from(e: hadamard_lab::Error) -> Self {
        use hadamard_lab::Error::*;
        match e {
            Io(_) | Json(_) | InvalidScenario(_) | LadderTooShort(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version itself with exit code 0
            if e.use_stderr() {
                eprintln!("{e}");
                eprintln!("{SYNOPSIS}");
                return ExitCode::from(2);
            }
            e.print().ok();
            return ExitCode::SUCCESS;
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("HADAMARD_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: failed to build thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{SYNOPSIS}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Counterexample(args) => counterexample(args),
        Command::Probe(args) => probe(args),
        Command::Report(args) => report(args),
    }
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let (spec, grid) = if args.square {
        (
            DomainSpec::new(1.0, 1.0, BoundaryProfile::Flat, SideCondition::Dirichlet)?,
            ReferenceGrid::new(args.nx, args.ny, args.grading),
        )
    } else {
        (
            DomainSpec::new(
                args.width,
                args.height,
                BoundaryProfile::Flat,
                args.side.into(),
            )?,
            ReferenceGrid::new(args.nx, args.ny, args.grading),
        )
    };
    if args.count == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }

    let settings = EigenSettings::new(args.count);
    let coarse = Discretization::new(&spec, &grid)?;
    if let Some(path) = &args.dump_mesh {
        let mut f = fs::File::create(path).map_err(hadamard_lab::Error::from)?;
        coarse.mesh.dump(&mut f)?;
    }
    if let Some(path) = &args.dump_matrix {
        let mut f = fs::File::create(path).map_err(hadamard_lab::Error::from)?;
        coarse.stiffness.dump_matrix_market(&mut f)?;
    }
    let chol = coarse.factor_stiffness()?;
    let sol_c = smallest_eigenpairs(&coarse, &chol, &settings)?;
    let fine = Discretization::new(&spec, &grid.refined())?;
    let chol_f = fine.factor_stiffness()?;
    let sol_f = smallest_eigenpairs(&fine, &chol_f, &settings)?;
    let star = richardson(&sol_c.values, &sol_f.values)?;
    for v in star {
        println!("{v:.9}");
    }
    Ok(())
}

fn load_scenario(args: &SweepArgs) -> Result<Scenario, Failure> {
    match (&args.scenario, &args.builtin) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            let s = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("bad scenario {}: {e}", path.display())))?;
            Ok(s)
        }
        (None, Some(name)) => Scenario::builtin(name).ok_or_else(|| {
            Failure::Usage(format!(
                "unknown builtin '{name}'; available: {}",
                Scenario::BUILTIN_NAMES.join(", ")
            ))
        }),
        _ => Err(Failure::Usage(
            "pass exactly one of a scenario file or --builtin NAME".into(),
        )),
    }
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args)?;
    scenario.validate().map_err(Failure::from)?;
    let outcome = run_sweep(&scenario)?;
    let fits = standard_fits(&outcome);
    let files = emit_report(&outcome, &fits, &args.out)?;
    println!("wrote {}", files.csv.display());
    println!("wrote {}", files.json.display());
    println!("wrote {}", files.svg.display());
    for (name, fit) in &fits {
        println!(
            "fit {name}: slope {:.3} (R^2 {:.4}, {} points)",
            fit.slope, fit.r_squared, fit.points_used
        );
    }
    Ok(())
}

fn counterexample(args: CounterArgs) -> Result<(), Failure> {
    if args.points < 4 {
        return Err(Failure::Usage("--points must be at least 4".into()));
    }
    if !(args.dmax > 0.0 && args.dmax < 0.5) {
        return Err(Failure::Usage("--dmax must lie in (0, 0.5)".into()));
    }
    let waveform: Waveform = args.waveform.into();

    // gentle ladder so the smallest wavelength stays affordable to mesh
    let mut scenario = Scenario::lipschitz_family(waveform);
    scenario.d_max = args.dmax;
    scenario.count = args.points;
    scenario.ratio = 0.5f64.powf(2.0 / (args.points as f64 - 1.0));
    let d_min = scenario.d_max * scenario.ratio.powi(scenario.count as i32 - 1);
    let delta_min = scenario.wavelength(d_min).expect("oscillatory scenario");
    let nx = ((8.0 * scenario.width / delta_min).ceil() as usize).max(64);
    scenario.grid = ReferenceGrid::new(nx, 64, 2.0);
    scenario.validate().map_err(Failure::from)?;

    let cell = CellDomain::new(waveform, 1.0, args.cell_height)?;
    let c1 = first_mode_normal_slope(scenario.width, scenario.height);
    let (_, c_v) = solve_cell_extrapolated(&cell, &ReferenceGrid::new(48, 72, 2.0), c1)?;

    let outcome = run_sweep(&scenario)?;
    let rows: Vec<serde_json::Value> = outcome
        .rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| {
            let measured = r.remainder[0].abs();
            let predicted = predicted_extra(scenario.width, r.d, r.delta, c_v);
            serde_json::json!({
                "d": r.d,
                "delta": r.delta,
                "measured": measured,
                "predicted": predicted,
                "ratio": measured / predicted,
            })
        })
        .collect();
    let ratios: Vec<f64> = rows
        .iter()
        .map(|r| r["ratio"].as_f64().unwrap())
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let body = serde_json::json!({
        "waveform": match waveform { Waveform::Cosine => "cos", Waveform::Tent => "tent" },
        "cell_energy": c_v,
        "rows": rows,
        "ratio_mean": mean,
    });
    println!("{}", serde_json::to_string_pretty(&body).unwrap());
    Ok(())
}

fn probe(args: ProbeArgs) -> Result<(), Failure> {
    let base = DomainSpec::new(1.0, 1.0, BoundaryProfile::Flat, SideCondition::Periodic)?;
    let pair = DomainPair::uniform_shift(&base, args.d)?;
    let grid = ReferenceGrid::new(args.nx, args.ny, args.grading);
    let cfg = ProbeConfig {
        m_index: args.m_index,
        group_size: args.group_size,
        ..ProbeConfig::default()
    };
    let out = probe_pair(&pair, &grid, &cfg)?;
    let body = serde_json::json!({
        "d": out.d,
        "lambda_m": out.lambda_m,
        "mu": out.mu,
        "eps_hat": out.eps_hat,
        "rho_hat": out.rho_hat,
        "trace_gamma": out.trace_gamma,
        "sliver_energy": out.sliver_energy,
        "psi_l2_sq": out.psi_l2_sq,
        "psi_h1_sq": out.psi_h1_sq,
        "tau": out.tau,
        "tau_residual": out.tau_residual,
    });
    println!("{}", serde_json::to_string_pretty(&body).unwrap());
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.summary)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.summary.display())))?;
    let outcome: SweepOutcome = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("bad summary {}: {e}", args.summary.display())))?;
    let fits = standard_fits(&outcome);
    let files = emit_report(&outcome, &fits, &args.out)?;
    println!("wrote {}", files.csv.display());
    println!("wrote {}", files.json.display());
    println!("wrote {}", files.svg.display());
    Ok(())
}
