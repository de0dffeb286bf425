//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines print on success too.
//! Exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use ssts_core::experiment::{
    compute_params, published_iterations, run_table, table1, Cell, ExpMethod, ExperimentPlan,
    ParamSource, Table1Row, TableArtifact, GRIDS,
};
use ssts_core::spectral::dense::{
    boundary_check, dense_rho_h, iteration_spectrum_check, precond_spectrum_check, SquaredSpectrum,
};
use ssts_core::spectral::{self, estimate, GenEigMode};
use ssts_core::{example, example1, ssts_solve, transform, Method, SolverConfig};

type Outcome = Result<(bool, Vec<String>), String>;

struct Criterion {
    id: u8,
    title: &'static str,
    run: fn(&mut Tables) -> Outcome,
}

/// Iteration-count tables, run once and shared by criteria 2, 3 and 8.
#[derive(Default)]
struct Tables {
    ex1_opt: Option<TableArtifact>,
    ex1_exp: Option<TableArtifact>,
    ex2_opt: Option<TableArtifact>,
    ex2_exp: Option<TableArtifact>,
}

const STATIONARY: [ExpMethod; 4] = [
    ExpMethod::Stationary(Method::Mhss),
    ExpMethod::Stationary(Method::Sbts),
    ExpMethod::Stationary(Method::Psbts),
    ExpMethod::Stationary(Method::Ssts),
];
const SSTS: ExpMethod = ExpMethod::Stationary(Method::Ssts);

impl Tables {
    fn get(&mut self, ex: u8, exp: bool) -> Result<&TableArtifact, String> {
        let slot = match (ex, exp) {
            (1, false) => &mut self.ex1_opt,
            (1, true) => &mut self.ex1_exp,
            (2, false) => &mut self.ex2_opt,
            _ => &mut self.ex2_exp,
        };
        if slot.is_none() {
            let mut methods = if exp { vec![SSTS] } else { STATIONARY.to_vec() };
            if ex == 1 && !exp {
                methods.extend([ExpMethod::Gmres, ExpMethod::SstsGmres]);
            }
            let source = if exp {
                ParamSource::Table1Exp
            } else {
                ParamSource::Table1Opt
            };
            let plan = ExperimentPlan::new(ex, GRIDS.to_vec(), methods, source);
            *slot = Some(run_table(&plan).map_err(|e| e.to_string())?);
        }
        Ok(slot.as_ref().unwrap())
    }
}

/// Total inner steps of a `c(j)` count: `10 (c - 1) + j` for GMRES(10).
fn total_inner(it: &str) -> Option<usize> {
    let (c, j) = it.strip_suffix(')')?.split_once('(')?;
    Some(10 * (c.parse::<usize>().ok()? - 1) + j.parse::<usize>().ok()?)
}

fn cells(table: &TableArtifact, method: ExpMethod) -> Vec<&Cell> {
    GRIDS
        .iter()
        .map(|&m| {
            table
                .cells
                .iter()
                .find(|c| c.method == method && c.m == m)
                .unwrap()
        })
        .collect()
}

/// Compare a row of counts against the published row within `slack`.
fn count_row(
    table: &TableArtifact,
    method: ExpMethod,
    exp: bool,
    slack: usize,
    measure: fn(&Cell) -> Option<usize>,
    parse: fn(&str) -> Option<usize>,
) -> (bool, String) {
    let published = published_iterations(table.example, method, exp).expect("published row");
    let mut ok = true;
    let mut got = Vec::new();
    for (cell, p) in cells(table, method).into_iter().zip(published) {
        let want = parse(p).expect("published count");
        let have = if cell.converged { measure(cell) } else { None };
        ok &= have.is_some_and(|h| h.abs_diff(want) <= slack);
        got.push(match (&cell.error, have) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(_)) => cell.it.clone(),
            (None, None) => "DIVERGED".into(),
        });
    }
    let tag = if exp { "exp" } else { "opt" };
    (
        ok,
        format!(
            "ex{} {method} ({tag}, ±{slack}): got [{}], published [{}]",
            table.example,
            got.join(", "),
            published.join(", ")
        ),
    )
}

fn sweeps(c: &Cell) -> Option<usize> {
    Some(c.iterations)
}

fn inner_steps(c: &Cell) -> Option<usize> {
    total_inner(&c.it)
}

fn parse_count(s: &str) -> Option<usize> {
    s.parse().ok()
}

fn parameters(_: &mut Tables) -> Outcome {
    const TOL: f64 = 5e-3;
    let mut ok = true;
    let mut lines = Vec::new();
    for ex in [1u8, 2] {
        for m in GRIDS {
            let cmp = compute_params(ex, m, GenEigMode::default()).map_err(|e| e.to_string())?;
            let published = table1(ex, m, Table1Row::SstsOpt).expect("published parameters");
            let est = &cmp.estimates;
            let da = (est.alpha_opt - published.alpha).abs();
            let dw = (est.omega_opt - published.omega.unwrap()).abs();
            ok &= da <= TOL && dw <= TOL;
            lines.push(format!(
                "ex{ex} m={m:<3} {:?}: alpha {:.5} vs {:.3} (|d| {da:.1e}), omega {:.5} vs {:.3} (|d| {dw:.1e})",
                est.mode,
                est.alpha_opt,
                published.alpha,
                est.omega_opt,
                published.omega.unwrap(),
            ));
        }
    }
    Ok((ok, lines))
}

fn ssts_counts(tables: &mut Tables) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for ex in [1u8, 2] {
        for exp in [false, true] {
            let (pass, line) = count_row(tables.get(ex, exp)?, SSTS, exp, 1, sweeps, parse_count);
            ok &= pass;
            lines.push(line);
        }
    }
    Ok((ok, lines))
}

fn comparator_counts(tables: &mut Tables) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for ex in [1u8, 2] {
        let table = tables.get(ex, false)?;
        for (method, slack) in [(Method::Mhss, 2), (Method::Sbts, 2), (Method::Psbts, 1)] {
            let (pass, line) = count_row(
                table,
                ExpMethod::Stationary(method),
                false,
                slack,
                sweeps,
                parse_count,
            );
            ok &= pass;
            lines.push(line);
        }
    }
    Ok((ok, lines))
}

fn theorem1(_: &mut Tables) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for ex in [1u8, 2] {
        for m in [2usize, 4, 8] {
            let sys = example(ex, m).map_err(|e| e.to_string())?;
            let est = estimate(&sys, GenEigMode::Dense).map_err(|e| e.to_string())?;
            let points = [
                (est.alpha_opt, est.omega_opt),
                (2.0, 1.0),
                (1.5 * est.alpha_opt, 0.5 * est.omega_opt),
            ];
            for (alpha, omega) in points {
                let c = iteration_spectrum_check(&sys, alpha, omega).map_err(|e| e.to_string())?;
                let pass =
                    c.tail_singular_ratio < 1e-10 && c.max_error <= 1e-8 && c.max_imag <= 1e-8;
                ok &= pass;
                lines.push(format!(
                    "ex{ex} m={m} alpha={alpha:.4} omega={omega:.4}: sigma_(n+1)/sigma_1 {:.1e}, multiset error {:.1e}, max imag {:.1e}",
                    c.tail_singular_ratio, c.max_error, c.max_imag
                ));
            }
        }
    }
    Ok((ok, lines))
}

fn boundary(_: &mut Tables) -> Outcome {
    let sys = example1(8).map_err(|e| e.to_string())?;
    let est = estimate(&sys, GenEigMode::Dense).map_err(|e| e.to_string())?;
    let b = boundary_check(&sys, est.omega_opt).map_err(|e| e.to_string())?;
    let ok = b.rho_inside < 1.0 && b.rho_outside >= 1.0;
    Ok((
        ok,
        vec![format!(
            "ex1 m=8 omega_opt={:.5} threshold={:.6}: rho {:.6} at 1.01x, rho {:.6} at 0.99x",
            b.omega, b.threshold, b.rho_inside, b.rho_outside
        )],
    ))
}

fn optimality(_: &mut Tables) -> Outcome {
    let sys = example1(8).map_err(|e| e.to_string())?;
    let est = estimate(&sys, GenEigMode::Dense).map_err(|e| e.to_string())?;
    let ts = transform(&sys, est.omega_opt).map_err(|e| e.to_string())?;
    let rho_dense = dense_rho_h(&ts, est.alpha_opt).map_err(|e| e.to_string())?;
    let formula =
        (est.mu_max.powi(2) - est.mu_min.powi(2)) / (2.0 + est.mu_min.powi(2) + est.mu_max.powi(2));
    let formula_ok = (rho_dense - formula).abs() <= 1e-10;

    // threshold (1 + mu_max^2) / 2 is taken at each grid omega
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 1..=50 {
        let omega = i as f64 / 10.0;
        let ts = transform(&sys, omega).map_err(|e| e.to_string())?;
        let sq = SquaredSpectrum::new(&ts).map_err(|e| e.to_string())?;
        let mu2_max = sq.values.iter().map(|z| z.re).fold(0.0, f64::max);
        let threshold = spectral::alpha_threshold(mu2_max.sqrt());
        for k in 101..=300 {
            let alpha = threshold * k as f64 / 100.0;
            let rho = sq.rho_h(alpha);
            if rho < best.0 {
                best = (rho, alpha, omega);
            }
        }
    }
    let grid_ok = rho_dense <= best.0;
    Ok((
        formula_ok && grid_ok,
        vec![
            format!(
                "ex1 m=8 at alpha={:.6} omega={:.6}: dense rho(H) {rho_dense:.14}, formula {formula:.14} (|d| {:.1e})",
                est.alpha_opt,
                est.omega_opt,
                (rho_dense - formula).abs()
            ),
            format!(
                "grid minimum over 200 x 50 points: {:.14} at alpha={:.5} omega={:.1}",
                best.0, best.1, best.2
            ),
        ],
    ))
}

fn corollary1(_: &mut Tables) -> Outcome {
    let sys = example1(4).map_err(|e| e.to_string())?;
    let c = precond_spectrum_check(&sys, 1.019, 0.657).map_err(|e| e.to_string())?;
    Ok((
        c.passed,
        vec![format!(
            "ex1 m=4 at (1.019, 0.657): {} unit eigenvalues (n = {}), min real {:.6}, max imag {:.1e}, multiset error {:.1e}",
            c.unit_count, c.n, c.min_real, c.max_imag, c.max_error
        )],
    ))
}

fn gmres_counts(tables: &mut Tables) -> Outcome {
    let table = tables.get(1, false)?;
    let (a, la) = count_row(table, ExpMethod::Gmres, false, 2, inner_steps, total_inner);
    let (b, lb) = count_row(
        table,
        ExpMethod::SstsGmres,
        false,
        1,
        inner_steps,
        total_inner,
    );
    Ok((a && b, vec![la, lb]))
}

fn observed_rate(_: &mut Tables) -> Outcome {
    let sys = example1(32).map_err(|e| e.to_string())?;
    let est = estimate(&sys, GenEigMode::Dense).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::new(est.alpha_opt, est.omega_opt);
    let (_, _, report) = ssts_solve(&sys, &cfg, None).map_err(|e| e.to_string())?;
    let h = &report.residual_history;
    if h.len() < 4 {
        return Err(format!("only {} sweeps recorded", h.len() - 1));
    }
    let last = &h[h.len() - 4..];
    let ratios: Vec<f64> = last.windows(2).map(|w| w[1] / w[0]).collect();
    let geo = ratios.iter().product::<f64>().cbrt();
    Ok((
        report.converged && geo <= est.rho_opt + 0.05,
        vec![format!(
            "ex1 m=32 at alpha={:.5} omega={:.5}: {} sweeps, last ratios [{}], geometric mean {geo:.4}, rho_opt {:.4}",
            est.alpha_opt,
            est.omega_opt,
            report.iterations,
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", "),
            est.rho_opt
        )],
    ))
}

const CRITERIA: [Criterion; 9] = [
    Criterion {
        id: 1,
        title: "optimal parameters match the published table",
        run: parameters,
    },
    Criterion {
        id: 2,
        title: "SSTS iteration counts",
        run: ssts_counts,
    },
    Criterion {
        id: 3,
        title: "MHSS, SBTS and PSBTS iteration counts",
        run: comparator_counts,
    },
    Criterion {
        id: 4,
        title: "iteration matrix spectrum",
        run: theorem1,
    },
    Criterion {
        id: 5,
        title: "convergence boundary",
        run: boundary,
    },
    Criterion {
        id: 6,
        title: "optimal convergence factor",
        run: optimality,
    },
    Criterion {
        id: 7,
        title: "preconditioned spectrum",
        run: corollary1,
    },
    Criterion {
        id: 8,
        title: "GMRES and SSTS-GMRES counts",
        run: gmres_counts,
    },
    Criterion {
        id: 9,
        title: "observed convergence rate",
        run: observed_rate,
    },
];

fn main() -> ExitCode {
    let mut tables = Tables::default();
    let mut failed = 0;
    for c in CRITERIA {
        let clock = Instant::now();
        let outcome = (c.run)(&mut tables);
        let secs = clock.elapsed().as_secs_f64();
        let (pass, lines) = match outcome {
            Ok(r) => r,
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} {} ({secs:.1} s)",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.title
        );
        for line in lines {
            println!("    {line}");
        }
    }
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
