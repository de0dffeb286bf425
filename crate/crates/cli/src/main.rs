//! `bench`: run the SSTS experiments from the command line.
//!
//! Exit status is 0 when every requested run converged (or every
//! verification check passed), 1 when some run diverged or a check failed,
//! and 2 on invalid input or any other error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ssts_core::experiment::{
    compute_params, resolve_params, run_table, verify, verify_system, ExpMethod, ExperimentPlan,
    Format, ParamSource, VerifyReport,
};
use ssts_core::krylov::{gmres_block, gmres_complex, ssts_gmres, GmresConfig, GmresReport};
use ssts_core::spectral::{estimate, GenEigMode, LanczosConfig};
use ssts_core::{example, BlockSystem, InnerMode, InnerSolveConfig, SparseSym};

#[derive(Parser)]
#[command(name = "bench", version, about = "SSTS solver experiments")]
struct Cli {
    /// Worker threads for parallel table cells.
    #[arg(long, global = true, env = "SSTS_BENCH_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iteration-count table over grids and methods.
    Table(TableArgs),
    /// Optimal parameters from the generalized eigenvalues, as JSON.
    Analyze(AnalyzeArgs),
    /// Dense spectral checks at desk scale (m <= 16).
    Verify(VerifyArgs),
    /// Restarted GMRES, plain or SSTS-preconditioned.
    Gmres(GmresArgs),
    /// Write W, T (Matrix Market) and the right-hand side (JSON).
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Inner {
    Direct,
    Cg,
}

#[derive(Args)]
struct InnerArgs {
    /// Inner SPD solver.
    #[arg(long, value_enum, default_value = "direct")]
    inner: Inner,
    /// Relative tolerance of inner CG solves.
    #[arg(long, default_value_t = 1e-13)]
    cg_tol: f64,
}

impl InnerArgs {
    fn config(&self) -> InnerSolveConfig {
        match self.inner {
            Inner::Direct => InnerSolveConfig::default(),
            Inner::Cg => InnerSolveConfig {
                mode: InnerMode::Cg,
                cg_tol: self.cg_tol,
                ..InnerSolveConfig::default()
            },
        }
    }
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, short = 'e')]
    example: u8,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    grids: Vec<usize>,
    /// Any of mhss, sbts, psbts, ssts, gmres, ssts-gmres.
    #[arg(long, value_delimiter = ',', default_value = "mhss,sbts,psbts,ssts")]
    methods: Vec<String>,
    /// table1-opt, table1-exp, computed, or a=<alpha>[,w=<omega>].
    #[arg(long, default_value = "table1-opt")]
    params: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// GMRES restart length.
    #[arg(long, default_value_t = 10)]
    restart: usize,
    #[arg(long, default_value = "md")]
    format: String,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one JSON report per cell into this directory.
    #[arg(long)]
    cells_dir: Option<PathBuf>,
    #[command(flatten)]
    inner: InnerArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum EigMode {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, short = 'e')]
    example: u8,
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value = "auto")]
    eig: EigMode,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, short = 'e', required_unless_present = "identity")]
    example: Option<u8>,
    #[arg(long, required_unless_present = "identity")]
    m: Option<usize>,
    /// Verify the synthetic pair W = T = I of this size instead.
    #[arg(long, conflicts_with_all = ["example", "m"])]
    identity: Option<usize>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Precond {
    None,
    Ssts,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    /// `(W + iT) u = p + iq`.
    Complex,
    /// The real `2n x 2n` block system.
    Real,
}

#[derive(Args)]
struct GmresArgs {
    #[arg(long, short = 'e')]
    example: u8,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    restart: usize,
    #[arg(long, value_enum, default_value = "none")]
    precond: Precond,
    /// opt, exp, computed, or <alpha>,<omega>.
    #[arg(long, default_value = "opt")]
    params: String,
    /// System the unpreconditioned solve runs on.
    #[arg(long, value_enum, default_value = "complex")]
    form: Form,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_cycles: usize,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    inner: InnerArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, short = 'e')]
    example: u8,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    dir: PathBuf,
}

fn eig_mode(mode: EigMode) -> GenEigMode {
    match mode {
        EigMode::Auto => GenEigMode::default(),
        EigMode::Dense => GenEigMode::Dense,
        EigMode::Lanczos => GenEigMode::Lanczos(LanczosConfig::default()),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table(args: TableArgs) -> Result<bool> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<ExpMethod>())
        .collect::<Result<Vec<_>, _>>()?;
    let format: Format = args.format.parse()?;
    let mut plan = ExperimentPlan::new(args.example, args.grids, methods, args.params.parse()?);
    plan.tol = args.tol;
    plan.max_iters = args.max_iters;
    plan.restart = args.restart;
    plan.inner = args.inner.config();

    let artifact = run_table(&plan)?;
    emit(&artifact.render(format)?, args.out.as_ref())?;
    if let Some(dir) = &args.cells_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for cell in &artifact.cells {
            let path = dir.join(format!(
                "ex{}_{}_m{}.json",
                plan.example, cell.method, cell.m
            ));
            fs::write(&path, cell.to_json()? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(artifact.all_converged())
}

fn analyze(args: AnalyzeArgs) -> Result<bool> {
    let cmp = compute_params(args.example, args.m, eig_mode(args.eig))?;
    println!("{}", serde_json::to_string_pretty(&cmp)?);
    Ok(true)
}

fn print_verify(report: &VerifyReport, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(report)?);
        return Ok(());
    }
    println!("{} (n = {})", report.descriptor, report.n);
    for check in &report.checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        println!("  {tag}  {}: {}", check.name, check.detail);
    }
    println!(
        "{}",
        if report.passed {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    );
    Ok(())
}

fn verify_cmd(args: VerifyArgs) -> Result<bool> {
    let report = match (args.identity, args.example, args.m) {
        (Some(n), _, _) => {
            let sys = BlockSystem::new(
                SparseSym::identity(n),
                SparseSym::identity(n),
                vec![1.0; n],
                vec![1.0; n],
                format!("identity pair, n={n}"),
            )?;
            verify_system(&sys)?
        }
        (None, Some(e), Some(m)) => verify(e, m)?,
        _ => bail!("--example and --m are required"),
    };
    print_verify(&report, args.json)?;
    Ok(report.passed)
}

fn gmres_cmd(args: GmresArgs) -> Result<bool> {
    let sys = example(args.example, args.m)?;
    let cfg = GmresConfig {
        restart: args.restart,
        tol: args.tol,
        max_cycles: args.max_cycles,
    };
    let (report, params): (GmresReport, Option<(f64, f64)>) = match args.precond {
        Precond::None => {
            let (_, _, rep) = match args.form {
                Form::Complex => gmres_complex(&sys, &cfg)?,
                Form::Real => gmres_block(&sys, &cfg)?,
            };
            (rep, None)
        }
        Precond::Ssts => {
            let source: ParamSource = args.params.parse()?;
            let estimates = match source {
                ParamSource::Computed => Some(estimate(&sys, GenEigMode::default())?),
                _ => None,
            };
            let p = resolve_params(
                ExpMethod::SstsGmres,
                args.example,
                args.m,
                source,
                estimates.as_ref(),
            )?;
            let (alpha, omega) = (p.alpha.unwrap_or(1.0), p.omega.unwrap_or(1.0));
            let (_, _, rep) = ssts_gmres(&sys, alpha, omega, &args.inner.config(), &cfg)?;
            (rep, Some((alpha, omega)))
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let label = match params {
            Some((a, w)) => format!("SSTS-GMRES({}) alpha={a} omega={w}", args.restart),
            None => format!("GMRES({})", args.restart),
        };
        println!(
            "{label} on {}: IT {} ({} inner steps), RES {:.3e}, {}",
            sys.descriptor,
            report,
            report.total_inner(),
            report.final_residual(),
            if report.converged {
                "converged"
            } else {
                "not converged"
            }
        );
    }
    Ok(report.converged)
}

fn export(args: ExportArgs) -> Result<bool> {
    let sys = example(args.example, args.m)?;
    fs::create_dir_all(&args.dir).with_context(|| format!("creating {}", args.dir.display()))?;
    sys.export(&args.dir)?;
    println!("wrote {} (n = {})", args.dir.display(), sys.n());
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Table(a) => table(a),
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Gmres(a) => gmres_cmd(a),
        Command::Export(a) => export(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
