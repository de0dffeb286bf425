//! Experiment plans, the published parameter table, and table emission.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{gmres_complex, ssts_gmres, GmresConfig, GmresReport};
use crate::problems::{example, BlockSystem};
use crate::spd::InnerSolveConfig;
use crate::spectral::{self, dense, estimate, GenEigMode, SpectralEstimates};
use crate::stationary::{self, Method, SolveReport, SolverConfig};
use crate::transform::solution_invariance_check;

pub const GRIDS: [usize; 5] = [16, 32, 64, 128, 256];

/// Rows of the published parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table1Row {
    Mhss,
    Sbts,
    /// Stored for completeness; no PGSOR solver is provided.
    Pgsor,
    Psbts,
    SstsOpt,
    SstsExp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Entry {
    pub alpha: f64,
    pub omega: Option<f64>,
}

const EX1_OMEGA: [f64; 5] = [0.657, 0.624, 0.602, 0.590, 0.583];
const EX2_OMEGA: [f64; 5] = [1.308, 1.324, 1.328, 1.330, 1.330];

fn table1_columns(example: u8, row: Table1Row) -> Option<([f64; 5], Option<[f64; 5]>)> {
    use Table1Row::*;
    let cols = match (example, row) {
        (1, Mhss) => ([1.06, 0.75, 0.54, 0.40, 0.30], None),
        (1, Sbts) => ([0.532, 0.525, 0.520, 0.518, 0.517], None),
        (1, Pgsor) => ([0.990, 0.988, 0.986, 0.984, 0.983], Some(EX1_OMEGA)),
        (1, Psbts) => ([0.881, 0.864, 0.854, 0.849, 0.844], Some(EX1_OMEGA)),
        (1, SstsOpt) => ([1.019, 1.025, 1.030, 1.033, 1.035], Some(EX1_OMEGA)),
        (1, SstsExp) => (
            [1.04, 1.04, 1.045, 1.05, 1.05],
            Some([0.601, 0.602, 0.605, 0.61, 0.61]),
        ),
        (2, Mhss) => ([0.21, 0.08, 0.04, 0.02, 0.01], None),
        (2, Sbts) => ([11.986, 11.898, 11.875, 11.868, 11.863], None),
        (2, Pgsor) => ([0.898, 0.896, 0.896, 0.895, 0.895], Some(EX2_OMEGA)),
        (2, Psbts) => ([0.689, 0.688, 0.687, 0.687, 0.687], Some(EX2_OMEGA)),
        (2, SstsOpt) => ([1.254, 1.259, 1.261, 1.262, 1.262], Some(EX2_OMEGA)),
        (2, SstsExp) => (
            [1.34, 1.38, 1.38, 1.40, 1.41],
            Some([1.38, 1.32, 1.33, 1.33, 1.38]),
        ),
        _ => return None,
    };
    Some(cols)
}

/// Published parameters for `(example, m, row)`, if tabulated.
pub fn table1(example: u8, m: usize, row: Table1Row) -> Option<Table1Entry> {
    let k = GRIDS.iter().position(|&g| g == m)?;
    let (alpha, omega) = table1_columns(example, row)?;
    Some(Table1Entry {
        alpha: alpha[k],
        omega: omega.map(|w| w[k]),
    })
}

/// Published iteration counts, as printed.
pub fn published_iterations(
    example: u8,
    method: ExpMethod,
    exp: bool,
) -> Option<[&'static str; 5]> {
    use ExpMethod::*;
    let row = match (example, method, exp) {
        (1, Stationary(Method::Mhss), _) => ["40", "54", "73", "98", "133"],
        (1, Stationary(Method::Sbts), _) => ["24", "32", "39", "45", "48"],
        (1, Stationary(Method::Psbts), _) => ["4", "4", "4", "4", "4"],
        (1, Stationary(Method::Ssts), false) => ["4", "5", "5", "5", "5"],
        (1, Stationary(Method::Ssts), true) => ["4", "4", "4", "4", "4"],
        (2, Stationary(Method::Mhss), _) => ["34", "38", "50", "81", "139"],
        (2, Stationary(Method::Sbts), _) => ["78", "77", "77", "77", "77"],
        (2, Stationary(Method::Psbts), _) => ["8", "9", "9", "9", "9"],
        (2, Stationary(Method::Ssts), false) => ["9", "9", "10", "10", "10"],
        (2, Stationary(Method::Ssts), true) => ["8", "8", "7", "7", "6"],
        (1, Gmres, _) => ["5(4)", "8(1)", "12(6)", "20(4)", "35(3)"],
        (1, SstsGmres, false) => ["1(4)", "1(4)", "1(4)", "1(4)", "1(4)"],
        (1, SstsGmres, true) => ["1(4)", "1(4)", "1(4)", "1(5)", "1(5)"],
        _ => return None,
    };
    Some(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ExpMethod {
    Stationary(Method),
    /// Unpreconditioned GMRES on the complex form.
    Gmres,
    /// SSTS-preconditioned GMRES on the transformed system.
    SstsGmres,
}

impl ExpMethod {
    pub const ALL: [ExpMethod; 6] = [
        ExpMethod::Stationary(Method::Mhss),
        ExpMethod::Stationary(Method::Sbts),
        ExpMethod::Stationary(Method::Psbts),
        ExpMethod::Stationary(Method::Ssts),
        ExpMethod::Gmres,
        ExpMethod::SstsGmres,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpMethod::Stationary(m) => m.name(),
            ExpMethod::Gmres => "gmres",
            ExpMethod::SstsGmres => "ssts-gmres",
        }
    }

    fn table1_row(self, exp: bool) -> Option<Table1Row> {
        Some(match self {
            ExpMethod::Stationary(Method::Mhss) => Table1Row::Mhss,
            ExpMethod::Stationary(Method::Sbts) => Table1Row::Sbts,
            ExpMethod::Stationary(Method::Psbts) => Table1Row::Psbts,
            ExpMethod::Stationary(Method::Ssts) | ExpMethod::SstsGmres if exp => Table1Row::SstsExp,
            ExpMethod::Stationary(Method::Ssts) | ExpMethod::SstsGmres => Table1Row::SstsOpt,
            ExpMethod::Gmres => return None,
        })
    }

    fn has_computed_rule(self) -> bool {
        matches!(
            self,
            ExpMethod::Stationary(Method::Ssts) | ExpMethod::SstsGmres
        )
    }
}

impl fmt::Display for ExpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gmres" => Ok(ExpMethod::Gmres),
            "ssts-gmres" => Ok(ExpMethod::SstsGmres),
            other => other.parse().map(ExpMethod::Stationary),
        }
    }
}

impl From<ExpMethod> for String {
    fn from(m: ExpMethod) -> Self {
        m.name().to_string()
    }
}

impl TryFrom<String> for ExpMethod {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    Table1Opt,
    Table1Exp,
    /// Theorem 3 pipeline for SSTS; other methods fall back to the table.
    Computed,
    Explicit {
        alpha: f64,
        omega: Option<f64>,
    },
}

impl fmt::Display for ParamSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSource::Table1Opt => f.write_str("table1-opt"),
            ParamSource::Table1Exp => f.write_str("table1-exp"),
            ParamSource::Computed => f.write_str("computed"),
            ParamSource::Explicit { alpha, omega: None } => write!(f, "a={alpha}"),
            ParamSource::Explicit {
                alpha,
                omega: Some(w),
            } => write!(f, "a={alpha},w={w}"),
        }
    }
}

impl FromStr for ParamSource {
    type Err = Error;

    /// `table1-opt`, `table1-exp`, `computed`, `a=<v>` or `a=<v>,w=<v>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1-opt" | "table1" | "opt" => return Ok(ParamSource::Table1Opt),
            "table1-exp" | "exp" => return Ok(ParamSource::Table1Exp),
            "computed" => return Ok(ParamSource::Computed),
            _ => {}
        }
        let bad = || Error::InvalidParameter(format!("unrecognized parameter source `{s}`"));
        if !s.contains('=') {
            // bare `alpha` or `alpha,omega`
            let values: Vec<f64> = s
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            return match values[..] {
                [alpha] => Ok(ParamSource::Explicit { alpha, omega: None }),
                [alpha, omega] => Ok(ParamSource::Explicit {
                    alpha,
                    omega: Some(omega),
                }),
                _ => Err(bad()),
            };
        }
        let mut alpha = None;
        let mut omega = None;
        for part in s.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            let value: f64 = value.trim().parse().map_err(|_| bad())?;
            match key.trim() {
                "a" | "alpha" => alpha = Some(value),
                "w" | "omega" => omega = Some(value),
                _ => return Err(bad()),
            }
        }
        Ok(ParamSource::Explicit {
            alpha: alpha.ok_or_else(bad)?,
            omega,
        })
    }
}

/// Parameters resolved for one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub source: &'static str,
}

pub fn resolve_params(
    method: ExpMethod,
    example_id: u8,
    m: usize,
    source: ParamSource,
    computed: Option<&SpectralEstimates>,
) -> Result<ResolvedParams> {
    let from_table = |exp: bool| -> Result<ResolvedParams> {
        let Some(row) = method.table1_row(exp) else {
            return Ok(ResolvedParams {
                alpha: None,
                omega: None,
                source: "none",
            });
        };
        let entry = table1(example_id, m, row).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "no published parameters for {method} on example {example_id} at m={m}"
            ))
        })?;
        Ok(ResolvedParams {
            alpha: Some(entry.alpha),
            omega: entry.omega,
            source: if matches!(row, Table1Row::SstsExp) {
                "table1-exp"
            } else {
                "table1-opt"
            },
        })
    };
    match source {
        ParamSource::Table1Opt => from_table(false),
        ParamSource::Table1Exp => from_table(true),
        ParamSource::Computed if method.has_computed_rule() => {
            let est = computed.ok_or_else(|| {
                Error::InvalidParameter("computed parameters were not estimated".into())
            })?;
            Ok(ResolvedParams {
                alpha: Some(est.alpha_opt),
                omega: Some(est.omega_opt),
                source: "computed",
            })
        }
        ParamSource::Computed => from_table(false),
        ParamSource::Explicit { alpha, omega } => {
            if method == ExpMethod::Gmres {
                return from_table(false);
            }
            let needs_omega = match method {
                ExpMethod::Stationary(m) => m.uses_omega(),
                _ => true,
            };
            if needs_omega && omega.is_none() {
                return Err(Error::InvalidParameter(format!("{method} needs w=<omega>")));
            }
            Ok(ResolvedParams {
                alpha: Some(alpha),
                omega: if needs_omega { omega } else { None },
                source: "explicit",
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Md,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(Format::Md),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub example: u8,
    pub grids: Vec<usize>,
    pub methods: Vec<ExpMethod>,
    pub params: ParamSource,
    pub tol: f64,
    pub max_iters: usize,
    pub restart: usize,
    pub inner: InnerSolveConfig,
    pub eig_mode: GenEigMode,
}

impl ExperimentPlan {
    pub fn new(
        example: u8,
        grids: Vec<usize>,
        methods: Vec<ExpMethod>,
        params: ParamSource,
    ) -> Self {
        Self {
            example,
            grids,
            methods,
            params,
            tol: SolverConfig::DEFAULT_TOL,
            max_iters: SolverConfig::DEFAULT_MAX_ITERS,
            restart: 10,
            inner: InnerSolveConfig::default(),
            eig_mode: GenEigMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.example, 1 | 2) {
            return Err(Error::InvalidParameter(format!(
                "unknown example {}",
                self.example
            )));
        }
        if self.grids.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParameter("empty grid or method list".into()));
        }
        if let Some(&m) = self.grids.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidParameter(format!(
                "grid side must be at least 2, got {m}"
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellReport {
    Stationary(SolveReport),
    Gmres(GmresReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: ExpMethod,
    pub m: usize,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub params: String,
    /// Sweeps for stationary methods, `c(j)` for GMRES.
    pub it: String,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: Option<f64>,
    pub cpu_s: f64,
    pub published_it: Option<String>,
    pub error: Option<String>,
    pub report: Option<CellReport>,
}

impl Cell {
    pub fn it_display(&self) -> &str {
        if self.converged {
            &self.it
        } else {
            "DIVERGED"
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableArtifact {
    pub example: u8,
    pub grids: Vec<usize>,
    pub methods: Vec<ExpMethod>,
    pub params: String,
    pub tol: f64,
    pub cells: Vec<Cell>,
}

struct GridSetup {
    sys: BlockSystem,
    estimates: Option<SpectralEstimates>,
}

fn run_cell(plan: &ExperimentPlan, method: ExpMethod, m: usize, setup: &Result<GridSetup>) -> Cell {
    let exp = plan.params == ParamSource::Table1Exp;
    let published_it = GRIDS.iter().position(|&g| g == m).and_then(|k| {
        published_iterations(plan.example, method, exp).map(|row| row[k].to_string())
    });
    let mut cell = Cell {
        method,
        m,
        alpha: None,
        omega: None,
        params: plan.params.to_string(),
        it: String::new(),
        iterations: 0,
        converged: false,
        final_residual: None,
        cpu_s: 0.0,
        published_it,
        error: None,
        report: None,
    };
    let outcome = (|| -> Result<()> {
        let setup = setup
            .as_ref()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let params = resolve_params(
            method,
            plan.example,
            m,
            plan.params,
            setup.estimates.as_ref(),
        )?;
        cell.alpha = params.alpha;
        cell.omega = params.omega;
        cell.params = params.source.to_string();
        let alpha = params.alpha.unwrap_or(1.0);
        let omega = params.omega.unwrap_or(1.0);
        let clock = Instant::now();
        match method {
            ExpMethod::Stationary(sm) => {
                let cfg = SolverConfig::new(alpha, omega)
                    .with_tol(plan.tol)
                    .with_max_iters(plan.max_iters)
                    .with_inner(plan.inner);
                let (_, _, mut report) = stationary::solve(sm, &setup.sys, &cfg, None)?;
                cell.cpu_s = clock.elapsed().as_secs_f64();
                report.m = Some(m);
                cell.iterations = report.iterations;
                cell.it = report.iterations.to_string();
                cell.converged = report.converged;
                cell.final_residual = Some(report.final_residual()).filter(|r| r.is_finite());
                cell.report = Some(CellReport::Stationary(report));
            }
            ExpMethod::Gmres | ExpMethod::SstsGmres => {
                let cfg = GmresConfig {
                    restart: plan.restart,
                    tol: plan.tol,
                    max_cycles: plan.max_iters.div_ceil(plan.restart).max(1),
                };
                let (_, _, report) = if method == ExpMethod::Gmres {
                    gmres_complex(&setup.sys, &cfg)?
                } else {
                    ssts_gmres(&setup.sys, alpha, omega, &plan.inner, &cfg)?
                };
                cell.cpu_s = clock.elapsed().as_secs_f64();
                cell.iterations = report.total_inner();
                cell.it = report.to_string();
                cell.converged = report.converged;
                cell.final_residual = Some(report.final_residual()).filter(|r| r.is_finite());
                cell.report = Some(CellReport::Gmres(report));
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        cell.error = Some(e.to_string());
    }
    cell
}

/// Run every (method, grid) cell, in parallel on the current rayon pool.
/// Cells come back ordered by method, then grid, as listed in the plan.
pub fn run_table(plan: &ExperimentPlan) -> Result<TableArtifact> {
    plan.validate()?;
    let needs_estimates =
        plan.params == ParamSource::Computed && plan.methods.iter().any(|m| m.has_computed_rule());
    let setups: Vec<Result<GridSetup>> = plan
        .grids
        .par_iter()
        .map(|&m| {
            let sys = example(plan.example, m)?;
            let estimates = if needs_estimates {
                Some(estimate(&sys, plan.eig_mode)?)
            } else {
                None
            };
            Ok(GridSetup { sys, estimates })
        })
        .collect();
    let jobs: Vec<(ExpMethod, usize)> = plan
        .methods
        .iter()
        .flat_map(|&method| (0..plan.grids.len()).map(move |k| (method, k)))
        .collect();
    let cells = jobs
        .into_par_iter()
        .map(|(method, k)| run_cell(plan, method, plan.grids[k], &setups[k]))
        .collect();
    Ok(TableArtifact {
        example: plan.example,
        grids: plan.grids.clone(),
        methods: plan.methods.clone(),
        params: plan.params.to_string(),
        tol: plan.tol,
        cells,
    })
}

impl TableArtifact {
    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.converged)
    }

    fn cell(&self, method: ExpMethod, m: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.m == m)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Md => self.to_markdown(),
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(self)? + "\n",
        })
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Example {} (params: {}, tol {:e})\n",
            self.example, self.params, self.tol
        );
        out.push_str("| Method | |");
        for m in &self.grids {
            let _ = write!(out, " {m}x{m} |");
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---|".repeat(self.grids.len()));
        out.push('\n');
        for &method in &self.methods {
            let cells: Vec<Option<&Cell>> =
                self.grids.iter().map(|&m| self.cell(method, m)).collect();
            let mut row = |label: &str, f: &dyn Fn(&Cell) -> String| {
                let name = if label == "IT" { method.name() } else { "" };
                let _ = write!(out, "| {name} | {label} |");
                for c in &cells {
                    let _ = write!(out, " {} |", c.map(f).unwrap_or_default());
                }
                out.push('\n');
            };
            row("IT", &|c: &Cell| c.it_display().to_string());
            row("CPU", &|c: &Cell| format!("{:.4}", c.cpu_s));
            row("RES", &|c: &Cell| {
                c.final_residual
                    .map(|r| format!("{r:.2e}"))
                    .unwrap_or_else(|| "-".into())
            });
            if cells
                .iter()
                .any(|c| c.is_some_and(|c| c.published_it.is_some()))
            {
                row("published", &|c: &Cell| {
                    c.published_it.clone().unwrap_or_default()
                });
            }
        }
        let errors: Vec<&Cell> = self.cells.iter().filter(|c| c.error.is_some()).collect();
        if !errors.is_empty() {
            out.push('\n');
            for c in errors {
                let _ = writeln!(
                    out,
                    "- {} at m={}: {}",
                    c.method,
                    c.m,
                    c.error.as_deref().unwrap_or_default()
                );
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "example,method,m,alpha,omega,params,it,iterations,converged,final_residual,cpu_s,published_it,error\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
                self.example,
                c.method,
                c.m,
                opt(c.alpha),
                opt(c.omega),
                c.params,
                c.it_display(),
                c.iterations,
                c.converged,
                opt(c.final_residual),
                c.cpu_s,
                c.published_it.as_deref().unwrap_or_default(),
                c.error.as_deref().unwrap_or_default().replace('"', "'"),
            );
        }
        out
    }
}

/// Theorem 3 pipeline with a comparison against the published values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamComparison {
    pub example: u8,
    pub m: usize,
    pub estimates: SpectralEstimates,
    pub rho_s_opt: f64,
    pub alpha_threshold: f64,
    pub table1_alpha: Option<f64>,
    pub table1_omega: Option<f64>,
}

pub fn compute_params(example_id: u8, m: usize, mode: GenEigMode) -> Result<ParamComparison> {
    let sys = example(example_id, m)?;
    let est = estimate(&sys, mode)?;
    let published = table1(example_id, m, Table1Row::SstsOpt);
    Ok(ParamComparison {
        example: example_id,
        m,
        rho_s_opt: spectral::rho_s(est.eta_min, est.eta_max, est.omega_opt),
        alpha_threshold: spectral::alpha_threshold(est.mu_max),
        table1_alpha: published.map(|p| p.alpha),
        table1_omega: published.and_then(|p| p.omega),
        estimates: est,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub descriptor: String,
    pub n: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Largest grid side accepted by [`verify`].
pub const VERIFY_MAX_M: usize = 16;

pub fn verify(example_id: u8, m: usize) -> Result<VerifyReport> {
    if m > VERIFY_MAX_M {
        return Err(Error::SizeGuard {
            n: m * m,
            limit: VERIFY_MAX_M * VERIFY_MAX_M,
        });
    }
    verify_system(&example(example_id, m)?)
}

/// Every dense spectral check at the computed optimum of `sys`.
pub fn verify_system(sys: &BlockSystem) -> Result<VerifyReport> {
    let est = estimate(sys, GenEigMode::Dense)?;
    let (alpha, omega) = (est.alpha_opt, est.omega_opt);
    let ts = crate::transform::transform(sys, omega)?;
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        })
    };

    let map = dense::map_consistency(sys, omega)?;
    push(
        "eta-mu map and real spectrum of S",
        map.passed,
        format!(
            "max error {:.2e}, max imag {:.2e}",
            map.max_error, map.max_imag
        ),
    );

    let rho_s = spectral::rho_s(est.eta_min, est.eta_max, omega);
    let dense_rho_s = dense::spectral_radius(&dense::s_tilde(&ts)?);
    push(
        "rho(S) formula",
        (rho_s - dense_rho_s).abs() <= 1e-8,
        format!("formula {rho_s:.12}, dense {dense_rho_s:.12}"),
    );

    let t1 = dense::iteration_spectrum_check(sys, alpha, omega)?;
    push(
        "iteration matrix spectrum",
        t1.passed,
        format!(
            "sigma_(n+1)/sigma_1 {:.2e}, multiset error {:.2e}, max imag {:.2e}",
            t1.tail_singular_ratio, t1.max_error, t1.max_imag
        ),
    );

    let rho_formula = spectral::rho_h(est.mu_min, est.mu_max, alpha);
    push(
        "rho(H) at the optimum",
        (rho_formula - est.rho_opt).abs() <= 1e-12
            && (t1.spectral_radius - rho_formula).abs() <= 1e-8,
        format!(
            "dense {:.12}, formula {rho_formula:.12}, closed form {:.12}",
            t1.spectral_radius, est.rho_opt
        ),
    );

    let boundary = dense::boundary_check(sys, omega)?;
    push(
        "convergence boundary",
        boundary.passed,
        format!(
            "threshold {:.6}: rho {:.6} at 1.01x, {:.6} at 0.99x",
            boundary.threshold, boundary.rho_inside, boundary.rho_outside
        ),
    );

    let cor = dense::precond_spectrum_check(sys, alpha, omega)?;
    push(
        "preconditioned spectrum",
        cor.passed,
        format!(
            "{} unit eigenvalues (n = {}), min real {:.6}, multiset error {:.2e}",
            cor.unit_count, cor.n, cor.min_real, cor.max_error
        ),
    );

    if sys.n() <= crate::transform::INVARIANCE_LIMIT {
        let inv = solution_invariance_check(sys, omega)?;
        push(
            "transformed system has the same solution",
            inv.agree,
            format!("relative difference {:.2e}", inv.relative_difference),
        );
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        descriptor: sys.descriptor.clone(),
        n: sys.n(),
        checks,
        passed,
    })
}
