//! The `otmonge` command-line front end.
//!
//! Three commands share one set of solver flags:
//!
//! ```text
//! otmonge solve    --example vanishing --n 256
//! otmonge converge --example curved --n-list 64,128,256,512,1024
//! otmonge verify   --example rectangular --n 128
//! ```
//!
//! CSV files go to `--output`, or else to a default file name inside the
//! directory named by `OTMONGE_OUTPUT_DIR` (current directory when unset).
//! Numbers are written with 17 significant digits so they read back exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::benchmarks::{make_problem, BenchmarkId};
use crate::error::Error;
use crate::parallel::Execution;
use crate::scheme::SchemeOptions;
use crate::solver::{SolutionVector, SolverConfig};
use crate::verification::{
    convergence_study_with, run_checks, solve_entry_with, ConvergenceReport,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_VAR: &str = "OTMONGE_OUTPUT_DIR";

/// Powers of two from 64 to 4096.
pub const DEFAULT_LADDER: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

pub const SOLUTION_HEADER: &str = "x,u,u_exact,error";
pub const CONVERGENCE_HEADER: &str = "N,h_x,M,h_y,max_error,newton_iters,runtime_s";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Exit status of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A check failed or a solve did not converge.
    Failed,
}

#[derive(Debug, Parser)]
#[command(
    name = "otmonge",
    version,
    about = "Monotone solver for 1D-to-2D optimal transport"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one benchmark and write the nodal solution.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of subintervals of X.
        #[arg(long, default_value_t = 256)]
        n: usize,
    },
    /// Solve a ladder of resolutions and write the error table.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated list of N values.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LADDER)]
        n_list: Vec<usize>,
    },
    /// Run the property checks and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Seed of the random probes.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// rectangular, vanishing or curved.
    #[arg(long)]
    pub example: BenchmarkId,
    /// Output CSV path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Newton residual tolerance (infinity norm).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Sum over every masked target node instead of the certified subset.
    #[arg(long)]
    pub no_pruning: bool,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub example: BenchmarkId,
    /// One entry for `solve` and `verify`, the ladder for `converge`.
    pub ns: Vec<usize>,
    pub output: Option<PathBuf>,
    pub solver: SolverConfig,
    pub pruning: bool,
    pub threads: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Converge,
    Verify,
}

impl CommandKind {
    fn as_str(self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::Converge => "converge",
            CommandKind::Verify => "verify",
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, common, ns, seed) = match cli.command {
            Command::Solve { common, n } => (CommandKind::Solve, common, vec![n], 0),
            Command::Converge { common, n_list } => (CommandKind::Converge, common, n_list, 0),
            Command::Verify { common, n, seed } => (CommandKind::Verify, common, vec![n], seed),
        };
        if ns.is_empty() {
            return Err(CliError::Usage("the N list is empty".into()));
        }
        if let Some(&bad) = ns.iter().find(|&&n| n < 2) {
            return Err(CliError::Usage(format!("N must be at least 2, got {bad}")));
        }
        let mut sorted = ns.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("N values must be distinct".into()));
        }
        if common.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let solver = SolverConfig {
            residual_tol: common.tol,
            max_iters: common.max_iters,
            ..Default::default()
        };
        solver
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Self {
            command,
            example: common.example,
            ns: sorted,
            output: common.output,
            solver,
            pruning: !common.no_pruning,
            threads: common.threads,
            seed,
        })
    }

    fn scheme_options(&self) -> SchemeOptions {
        SchemeOptions {
            pruning: self.pruning,
            execution: if self.threads == Some(1) {
                Execution::Sequential
            } else {
                Execution::default()
            },
            ..Default::default()
        }
    }

    /// The explicit output path, or `default_name` in the default directory.
    fn output_path(&self, default_name: &str) -> PathBuf {
        match &self.output {
            Some(p) => p.clone(),
            None => std::env::var_os(OUTPUT_DIR_VAR)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."))
                .join(default_name),
        }
    }
}

/// Shortest exact formatting with 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Writes the `x,u,u_exact,error` table. The exact column is re-centered
/// to discrete mean zero like the computed one.
pub fn write_solution_csv(
    w: &mut dyn Write,
    sol: &SolutionVector,
    exact: &[f64],
) -> io::Result<()> {
    writeln!(w, "{SOLUTION_HEADER}")?;
    for ((x, u), e) in sol.x_nodes.iter().zip(&sol.u).zip(exact) {
        writeln!(
            w,
            "{},{},{},{}",
            num(*x),
            num(*u),
            num(*e),
            num((u - e).abs())
        )?;
    }
    Ok(())
}

pub fn write_convergence_csv(w: &mut dyn Write, report: &ConvergenceReport) -> io::Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            num(r.h_x),
            r.m,
            num(r.h_y),
            num(r.max_error),
            r.newton_iterations,
            num(r.runtime_seconds)
        )?;
    }
    Ok(())
}

fn centered_exact(example: BenchmarkId, sol: &SolutionVector) -> Vec<f64> {
    let spec = make_problem(example);
    let exact = spec.exact_u.expect("every benchmark has an exact solution");
    let samples: Vec<f64> = sol.x_nodes.iter().map(|&x| exact(x)).collect();
    crate::solver::normalize_mean_zero(&samples)
}

fn solve_and_write(
    cfg: &RunConfig,
    n: usize,
    out: &mut (dyn Write + Send),
) -> Result<Status, CliError> {
    let spec = make_problem(cfg.example);
    let (row, sol) =
        solve_entry_with(&spec, n, &cfg.solver, cfg.scheme_options()).map_err(|source| {
            CliError::Stage {
                stage: "solve",
                source,
            }
        })?;
    let path = cfg.output_path(&format!("solution_{}_{n}.csv", cfg.example));
    let exact = centered_exact(cfg.example, &sol);
    write_file(&path, |w| write_solution_csv(w, &sol, &exact))?;
    let stdout_err = io_err(Path::new("<stdout>"));
    writeln!(
        out,
        "{} N={n} M={} iterations={} residual={:.3e} converged={} max_error={}",
        cfg.example,
        row.m,
        row.newton_iterations,
        sol.final_residual_norm,
        sol.converged,
        num(row.max_error)
    )
    .and_then(|_| writeln!(out, "wrote {}", path.display()))
    .map_err(stdout_err)?;
    Ok(if sol.converged {
        Status::Success
    } else {
        Status::Failed
    })
}

fn converge(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let mut status = Status::Success;
    if cfg.ns.len() == 1 {
        status = solve_and_write(
            &RunConfig {
                output: None,
                ..cfg.clone()
            },
            cfg.ns[0],
            out,
        )?;
    }
    let report = convergence_study_with(cfg.example, &cfg.ns, &cfg.solver, cfg.scheme_options())
        .map_err(|source| CliError::Stage {
            stage: "convergence study",
            source,
        })?;
    let path = cfg.output_path(&format!("convergence_{}.csv", cfg.example));
    write_file(&path, |w| write_convergence_csv(w, &report))?;
    let print = |out: &mut (dyn Write + Send)| -> io::Result<()> {
        writeln!(
            out,
            "{:>6} {:>4} {:>12} {:>6} {:>10}  converged",
            "N", "M", "max_error", "iters", "seconds"
        )?;
        for r in &report.rows {
            writeln!(
                out,
                "{:>6} {:>4} {:>12.4e} {:>6} {:>10.3}  {}",
                r.n, r.m, r.max_error, r.newton_iterations, r.runtime_seconds, r.converged
            )?;
        }
        writeln!(out, "wrote {}", path.display())
    };
    print(out).map_err(io_err(Path::new("<stdout>")))?;
    if report.tainted() {
        status = Status::Failed;
    }
    Ok(status)
}

fn verify(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    let checks =
        run_checks(cfg.example, cfg.ns[0], cfg.seed, cfg.scheme_options()).map_err(|source| {
            CliError::Stage {
                stage: "verification",
                source,
            }
        })?;
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut all = true;
    for c in &checks {
        all &= c.passed;
        writeln!(
            out,
            "{:<width$}  {}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        )
        .map_err(io_err(Path::new("<stdout>")))?;
    }
    Ok(if all { Status::Success } else { Status::Failed })
}

fn dispatch(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    match cfg.command {
        CommandKind::Solve => solve_and_write(cfg, cfg.ns[0], out),
        CommandKind::Converge => converge(cfg, out),
        CommandKind::Verify => verify(cfg, out),
    }
}

/// Runs a validated configuration, writing progress to `out`.
pub fn run(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<Status, CliError> {
    match cfg.threads {
        #[cfg(feature = "parallel")]
        Some(threads) if threads > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Threads(e.to_string()))?
            .install(|| dispatch(cfg, out)),
        _ => dispatch(cfg, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on a failed check or non-convergence, 2 on errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match RunConfig::from_cli(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("otmonge: {e}");
            return 2;
        }
    };
    let mut out = io::stdout();
    match run(&cfg, &mut out) {
        Ok(Status::Success) => 0,
        Ok(Status::Failed) => {
            eprintln!("otmonge {}: failed", cfg.command.as_str());
            1
        }
        Err(e) => {
            eprintln!("otmonge {}: {e}", cfg.command.as_str());
            2
        }
    }
}
