//! Command-line front end. Every subcommand writes its artifacts into the
//! output directory; on failure an `error.json` manifest lists what was
//! written before the error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::acceptance::{Suite, SuiteConfig, Summary};
use crate::asymptotics::{
    blowup_table, default_p_to_1, default_p_to_critical, emden_fowler, rescale_profile, scaling_law, verify_p_to_1,
    DEFAULT_WINDOW,
};
use crate::continuation::{continue_branch, AxisymGrid, ContinuationOptions, DEFAULT_MODES, DEFAULT_RADIAL_POINTS};
use crate::error::{HenonError, Result};
use crate::io;
use crate::mesh::Mesh;
use crate::params::HenonParams;
use crate::radial::{solve_radial, RadialOptions, DEFAULT_MESH_POINTS};
use crate::scan::{default_grid, find_degeneracy_points, scan, DEFAULT_GRID, DEFAULT_K_MAX, DEFAULT_MARGIN, DEFAULT_REFINE_TOL};
use crate::spectral::{morse_index, solve_mode_spectrum, ModeProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

/// Environment variable that overrides `--out`.
pub const OUT_DIR_ENV: &str = "HENON_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "henon", version, about = "Numerics for -Δu = |x|^α u^p on the unit ball")]
pub struct Cli {
    /// Space dimension.
    #[arg(long = "N", global = true, default_value_t = 3)]
    pub n: usize,
    /// Weight exponent.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    /// Output directory (overridden by HENON_OUT_DIR).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial solution u_p and its derived functions.
    Solve {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_MESH_POINTS)]
        mesh_points: usize,
    },
    /// Eigenvalues Λ_{i,k} of the linearization at u_p, and the Morse index.
    Spectrum {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        /// Eigenpairs per mode.
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Morse index over (1, p_α) and the degeneracy points.
    Scan {
        /// Number of grid exponents.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Tolerance on |Λ_{1,1} - 1| at refined degeneracy points.
        #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
        refine: f64,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Limits p -> 1 and p -> p_α.
    Asymptotics {
        /// Exponents approaching 1 (comma separated).
        #[arg(long, value_delimiter = ',')]
        p_to_1: Option<Vec<f64>>,
        /// Exponents approaching p_α, increasing (comma separated).
        #[arg(long, value_delimiter = ',')]
        p_to_critical: Option<Vec<f64>>,
    },
    /// Nonradial branch from a degeneracy point written by `scan`.
    Continue(ContinueArgs),
    /// Full acceptance suite and report bundle.
    Reproduce {
        /// Seed for the random test functions.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Continuation steps.
        #[arg(long, default_value_t = 24)]
        steps: usize,
    },
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    /// `degeneracy.json` from `scan`.
    #[arg(long)]
    pub from_degeneracy: PathBuf,
    /// Which point in the file (default: the first Morse-index-changing one).
    #[arg(long)]
    pub index: Option<usize>,
    /// Branch-switch amplitude relative to the sup norm.
    #[arg(long, default_value_t = crate::continuation::DEFAULT_EPSILON)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub max_folds: usize,
    #[arg(long, default_value_t = DEFAULT_RADIAL_POINTS)]
    pub radial_points: usize,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    pub modes: usize,
}

#[derive(Serialize)]
struct ErrorManifest<'a> {
    command: &'a str,
    error: String,
    files_written: Vec<String>,
}

enum Failure {
    Numerical(HenonError),
    Acceptance,
}

impl From<HenonError> for Failure {
    fn from(e: HenonError) -> Self {
        Failure::Numerical(e)
    }
}

/// Collects the files written so far, relative to the output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn add(&mut self, paths: Vec<PathBuf>) {
        for p in paths {
            println!("wrote {}", p.display());
            self.files.push(p);
        }
    }

    fn relative(&self) -> Vec<String> {
        self.files.iter().map(|p| p.strip_prefix(&self.dir).unwrap_or(p).display().to_string()).collect()
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| cli.out.clone());
    if let Err(e) = validate(&cli) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_NUMERICAL;
    }
    let mut out = Outputs { dir: dir.clone(), files: Vec::new() };
    let name = command_name(&cli.command);
    match dispatch(&cli, &dir, &mut out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Acceptance) => EXIT_ACCEPTANCE,
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            let manifest = ErrorManifest { command: name, error: e.to_string(), files_written: out.relative() };
            if let Err(w) = io::write_json(&dir.join("error.json"), "error", &manifest) {
                eprintln!("error: cannot write error manifest: {w}");
            }
            EXIT_NUMERICAL
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Solve { .. } => "solve",
        Command::Spectrum { .. } => "spectrum",
        Command::Scan { .. } => "scan",
        Command::Asymptotics { .. } => "asymptotics",
        Command::Continue(_) => "continue",
        Command::Reproduce { .. } => "reproduce",
    }
}

/// Precondition checks that make a bad invocation a usage error rather
/// than a numerical one.
fn validate(cli: &Cli) -> Result<()> {
    let base = HenonParams::new(cli.n, cli.alpha, 1.5)?;
    let sub = |p: f64| HenonParams::subcritical(cli.n, cli.alpha, p).map(|_| ());
    match &cli.command {
        Command::Solve { p, mesh_points } => {
            sub(*p)?;
            Mesh::cosine(*mesh_points)?;
        }
        Command::Spectrum { p, count, .. } => {
            sub(*p)?;
            if *count == 0 {
                return Err(HenonError::InvalidArgument("--count must be positive".into()));
            }
        }
        Command::Scan { grid, refine, k_max, margin } => {
            if *grid < 2 || !(*refine > 0.0) || *k_max < 2 || !(*margin > 0.0 && *margin < 0.5) {
                return Err(HenonError::InvalidArgument("need --grid ≥ 2, --refine > 0, --k-max ≥ 2, 0 < --margin < 0.5".into()));
            }
        }
        Command::Asymptotics { p_to_1, p_to_critical } => {
            for p in p_to_1.iter().chain(p_to_critical.iter()).flatten() {
                sub(*p)?;
            }
        }
        Command::Continue(a) => {
            if !(a.eps > 0.0) || a.steps == 0 || a.modes < 2 {
                return Err(HenonError::InvalidArgument("need --eps > 0, --steps ≥ 1, --modes ≥ 2".into()));
            }
            Mesh::cosine(a.radial_points)?;
        }
        Command::Reproduce { steps, .. } => {
            if *steps == 0 {
                return Err(HenonError::InvalidArgument("--steps must be positive".into()));
            }
        }
    }
    let _ = base;
    Ok(())
}

fn dispatch(cli: &Cli, dir: &Path, out: &mut Outputs) -> std::result::Result<(), Failure> {
    let (n, alpha) = (cli.n, cli.alpha);
    let radial = RadialOptions::default();
    match &cli.command {
        Command::Solve { p, mesh_points } => {
            let params = HenonParams::subcritical(n, alpha, *p)?;
            let profile = solve_radial(&params, &RadialOptions::with_mesh(Mesh::cosine(*mesh_points)?))?;
            out.add(io::write_profile(dir, "profile", &profile)?);
        }
        Command::Spectrum { p, k_max, count } => {
            let profile = solve_radial(&HenonParams::subcritical(n, alpha, *p)?, &radial)?;
            for k in 0..=*k_max {
                let spec = solve_mode_spectrum(&ModeProblem::new(&profile, k)?, *count)?;
                out.add(io::write_spectrum(dir, &format!("spectrum_k{k}"), n, &spec)?);
            }
            let morse = morse_index(&profile, (*k_max).max(2))?;
            let path = dir.join("morse.json");
            io::write_json(&path, "morse_index", &morse)?;
            out.add(vec![path]);
        }
        Command::Scan { grid, refine, k_max, margin } => {
            let ps = default_grid(n, alpha, *grid, *margin)?;
            let res = scan(n, alpha, &ps, *k_max, &radial)?;
            out.add(io::write_scan(dir, &res)?);
            let deg = find_degeneracy_points(&res, *refine, &radial)?;
            out.add(io::write_degeneracies(dir, n, alpha, *refine, &deg)?);
            for d in &deg.points {
                println!("p̄ = {:.10}  Morse index {} -> {}", d.p_bar, d.morse_below, d.morse_above);
            }
        }
        Command::Asymptotics { p_to_1, p_to_critical } => {
            let p1 = p_to_1.clone().unwrap_or_else(default_p_to_1);
            let pc = match p_to_critical {
                Some(v) => v.clone(),
                None => default_p_to_critical(n, alpha)?,
            };
            write_asymptotics(dir, n, alpha, &p1, &pc, &radial, out)?;
        }
        Command::Continue(a) => {
            let doc = io::read_degeneracies(&a.from_degeneracy)?;
            if doc.n != n || doc.alpha != alpha {
                return Err(HenonError::InvalidArgument(format!(
                    "degeneracy file is for N = {}, alpha = {}",
                    doc.n, doc.alpha
                ))
                .into());
            }
            let origin = match a.index {
                Some(i) => doc.points.get(i).cloned(),
                None => doc.points.iter().find(|d| d.changing).cloned(),
            }
            .ok_or_else(|| HenonError::InvalidArgument("no such degeneracy point".into()))?;
            let grid = AxisymGrid::with_defaults(n, alpha, a.radial_points, a.modes)?;
            let opts = ContinuationOptions { epsilon: a.eps, max_steps: a.steps, max_folds: a.max_folds, ..Default::default() };
            let branch = continue_branch(&grid, &origin, &opts, &radial)?;
            println!("{} branch points, stopped: {:?}", branch.points.len(), branch.termination);
            out.add(io::write_branch(dir, &grid, &branch)?);
        }
        Command::Reproduce { seed, steps } => {
            let mut config = SuiteConfig { n, alpha, seed: *seed, ..SuiteConfig::default() };
            config.continuation.max_steps = *steps;
            let mut suite = Suite::new(config)?;
            let checks = suite.run(|c| println!("{}  ({:.1} s)", c.line(), c.seconds));
            let summary = Summary::new(&suite, checks);
            write_bundle(dir, &suite, out)?;
            let path = dir.join("summary.json");
            io::write_json(&path, "acceptance_summary", &summary)?;
            out.add(vec![path]);
            if !summary.all_passed {
                return Err(Failure::Acceptance);
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AsymptoticsSummary {
    n: usize,
    alpha: f64,
    lambda_1: f64,
    lambda_1_prufer: f64,
    extrapolated: f64,
    extrapolation_error: f64,
    deviations_decrease: bool,
    profile_distances_decrease: bool,
    limit_ratio_11: f64,
    scaling_spread: f64,
    scaling_spread_prufer: f64,
    sup_norm_tail_increasing: bool,
    window_distances_decrease: bool,
    bound_holds: bool,
    emden_fowler_bound_holds: bool,
    pullback_error: f64,
}

fn write_asymptotics(
    dir: &Path,
    n: usize,
    alpha: f64,
    p1: &[f64],
    pc: &[f64],
    radial: &RadialOptions,
    out: &mut Outputs,
) -> Result<()> {
    let law = scaling_law(n, alpha, &[0.5, 1.0, 2.0, 4.0])?;
    let one = verify_p_to_1(n, alpha, p1, radial)?;
    let blow = blowup_table(n, alpha, pc, radial)?;
    let mut rescaled = Vec::new();
    for &p in pc {
        let profile = solve_radial(&HenonParams::subcritical(n, alpha, p)?, radial)?;
        let r = rescale_profile(&profile, DEFAULT_WINDOW)?;
        let ef = emden_fowler(&r, &profile.params)?;
        rescaled.push((r, ef));
    }
    let summary = summarize_asymptotics(n, alpha, &law, &one, &blow, &rescaled);
    out.add(io::write_asymptotics(dir, &law.rows, &one, &blow, &rescaled, &summary)?);
    Ok(())
}

fn summarize_asymptotics(
    n: usize,
    alpha: f64,
    law: &crate::asymptotics::ScalingLaw,
    one: &crate::asymptotics::POneReport,
    blow: &crate::asymptotics::BlowupReport,
    rescaled: &[(crate::asymptotics::RescaledProfile, crate::asymptotics::EmdenFowler)],
) -> AsymptoticsSummary {
    AsymptoticsSummary {
        n,
        alpha,
        lambda_1: one.lambda_1,
        lambda_1_prufer: one.lambda_1_prufer,
        extrapolated: one.extrapolated,
        extrapolation_error: one.extrapolation_error,
        deviations_decrease: one.deviations_decrease,
        profile_distances_decrease: one.distances_decrease,
        limit_ratio_11: one.limit_ratio_11,
        scaling_spread: law.spread,
        scaling_spread_prufer: law.spread_prufer,
        sup_norm_tail_increasing: blow.tail_increasing,
        window_distances_decrease: blow.distances_decrease,
        bound_holds: rescaled.iter().all(|r| r.0.bound_holds),
        emden_fowler_bound_holds: rescaled.iter().all(|r| r.1.bound_holds),
        pullback_error: rescaled.iter().map(|r| r.1.pullback_error).fold(0.0, f64::max),
    }
}

/// Writes whatever the suite computed, so the figures can be drawn from the
/// `reproduce` directory alone.
fn write_bundle(dir: &Path, suite: &Suite, out: &mut Outputs) -> Result<()> {
    let a = &suite.artifacts;
    for prof in &a.profiles {
        out.add(io::write_profile(dir, &format!("profile_p{}", io::p_label(prof.params.p)), prof)?);
    }
    if let Some(s) = &a.scan {
        out.add(io::write_scan(dir, s)?);
    }
    if let Some(d) = &a.degeneracies {
        out.add(io::write_degeneracies(dir, suite.config.n, suite.config.alpha, suite.config.refine_tol, d)?);
    }
    if let (Some(law), Some(one), Some(blow)) = (&a.scaling, &a.p_to_1, &a.blowup) {
        let summary = summarize_asymptotics(suite.config.n, suite.config.alpha, law, one, blow, &a.rescaled);
        out.add(io::write_asymptotics(dir, &law.rows, one, blow, &a.rescaled, &summary)?);
    }
    if let Some((grid, branch)) = &a.branch {
        out.add(io::write_branch(dir, grid, branch)?);
    }
    Ok(())
}
