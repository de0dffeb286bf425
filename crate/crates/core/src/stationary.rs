//! Stationary iterations for the block two-by-two system.
//!
//! * SSTS: one block lower-triangular sweep on the `P_omega`-transformed
//!   system, two solves with `Wt = omega W + T` per iteration.
//! * SBTS: symmetric block triangular sweep on the original system, four
//!   solves with `W` per iteration.
//! * PSBTS: the SBTS sweep applied to the transformed system.
//! * MHSS: two shifted half steps on the complex form `(W + iT) u = b`,
//!   carried out in paired real arithmetic.
//!
//! Every method stops on the relative residual of the original system,
//! checked before the first sweep and after each full sweep.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::BlockSystem;
use crate::sparse::SparseSym;
use crate::spd::{InnerSolveConfig, SpdSolver};
use crate::transform::{transform, TransformedSystem};
use crate::vector::{check_finite, check_len, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mhss,
    Sbts,
    Psbts,
    Ssts,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mhss, Method::Sbts, Method::Psbts, Method::Ssts];

    /// Real SPD solves per sweep. MHSS does two complex-pair solves, each
    /// one solve for the real and one for the imaginary part.
    pub fn solves_per_sweep(self) -> usize {
        match self {
            Method::Ssts => 2,
            Method::Sbts | Method::Psbts | Method::Mhss => 4,
        }
    }

    pub fn uses_omega(self) -> bool {
        matches!(self, Method::Ssts | Method::Psbts)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Mhss => "mhss",
            Method::Sbts => "sbts",
            Method::Psbts => "psbts",
            Method::Ssts => "ssts",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mhss" => Ok(Method::Mhss),
            "sbts" => Ok(Method::Sbts),
            "psbts" => Ok(Method::Psbts),
            "ssts" => Ok(Method::Ssts),
            other => Err(Error::InvalidParameter(format!("unknown method {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    /// Ignored by MHSS and SBTS.
    pub omega: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub inner: InnerSolveConfig,
}

impl SolverConfig {
    pub const DEFAULT_TOL: f64 = 1e-6;
    pub const DEFAULT_MAX_ITERS: usize = 5000;

    pub fn new(alpha: f64, omega: f64) -> Self {
        Self {
            alpha,
            omega,
            tol: Self::DEFAULT_TOL,
            max_iters: Self::DEFAULT_MAX_ITERS,
            inner: InnerSolveConfig::default(),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_inner(mut self, inner: InnerSolveConfig) -> Self {
        self.inner = inner;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub alpha: f64,
    pub omega: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Relative residual before the first sweep and after every sweep.
    #[serde(with = "crate::vector::lossy_f64")]
    pub residual_history: Vec<f64>,
    pub wall_time_s: f64,
    /// Real right-hand sides pushed through SPD solves.
    pub inner_solves: usize,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self
            .residual_history
            .last()
            .expect("history is never empty")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Relative (or, for a zero right-hand side, absolute) residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    /// Set when `(p, q) = 0` and `value` is the absolute residual norm.
    pub absolute: bool,
}

/// `|(p - W x + T y, q - T x - W y)| / |(p, q)|`.
pub fn residual(sys: &BlockSystem, x: &[f64], y: &[f64]) -> Result<Residual> {
    check_len(x, sys.n())?;
    check_len(y, sys.n())?;
    let (ax, ay) = sys.apply(x, y);
    let r1: Vec<f64> = sys.p.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r2: Vec<f64> = sys.q.iter().zip(&ay).map(|(b, a)| b - a).collect();
    let rnorm = norm2(&r1).hypot(norm2(&r2));
    let bnorm = sys.rhs_norm();
    Ok(if bnorm == 0.0 {
        Residual {
            value: rnorm,
            absolute: true,
        }
    } else {
        Residual {
            value: rnorm / bnorm,
            absolute: false,
        }
    })
}

/// One iteration of a stationary method, updating `(x, y)` in place.
pub trait Sweep {
    fn method(&self) -> Method;
    fn sweep(&self, x: &mut Vec<f64>, y: &mut Vec<f64>) -> Result<()>;
}

/// SSTS on the transformed system:
///
/// ```text
/// Wt x' = Tt y + pt
/// alpha Wt y' = (alpha - 1) Wt y - Tt x' + qt
/// ```
pub struct SstsIteration {
    pub ts: TransformedSystem,
    pub alpha: f64,
    solver: SpdSolver,
}

impl SstsIteration {
    pub fn new(
        sys: &BlockSystem,
        alpha: f64,
        omega: f64,
        inner: &InnerSolveConfig,
    ) -> Result<Self> {
        let ts = transform(sys, omega)?;
        let solver = SpdSolver::new(&ts.wt, inner)?;
        Ok(Self { ts, alpha, solver })
    }
}

impl Sweep for SstsIteration {
    fn method(&self) -> Method {
        Method::Ssts
    }

    fn sweep(&self, x: &mut Vec<f64>, y: &mut Vec<f64>) -> Result<()> {
        let n = self.ts.n();
        let mut rhs = self.ts.pt.clone();
        self.ts.tt.spmv_acc(1.0, y, &mut rhs);
        *x = self.solver.solve(&rhs)?;

        let mut rhs = vec![0.0; n];
        self.ts.wt.spmv_into(y, &mut rhs);
        let a = self.alpha;
        for (r, q) in rhs.iter_mut().zip(&self.ts.qt) {
            *r = (a - 1.0) * *r + q;
        }
        self.ts.tt.spmv_acc(-1.0, x, &mut rhs);
        rhs.iter_mut().for_each(|r| *r /= a);
        *y = self.solver.solve(&rhs)?;
        Ok(())
    }
}

/// SBTS sweep on `(W, T, p, q)`:
///
/// ```text
/// W x_h = T y + p
/// alpha W y_h = (alpha - 1) W y - T x_h + q
/// alpha W y' = (alpha - 1) W y_h - T x_h + q
/// W x' = T y' + p
/// ```
///
/// PSBTS is the same sweep with `(Wt, Tt, pt, qt)`.
pub struct SbtsIteration {
    w: SparseSym,
    t: SparseSym,
    p: Vec<f64>,
    q: Vec<f64>,
    alpha: f64,
    solver: SpdSolver,
    method: Method,
}

impl SbtsIteration {
    pub fn new(sys: &BlockSystem, alpha: f64, inner: &InnerSolveConfig) -> Result<Self> {
        let solver = SpdSolver::new(&sys.w, inner)?;
        Ok(Self {
            w: sys.w.clone(),
            t: sys.t.clone(),
            p: sys.p.clone(),
            q: sys.q.clone(),
            alpha,
            solver,
            method: Method::Sbts,
        })
    }

    pub fn preconditioned(
        sys: &BlockSystem,
        alpha: f64,
        omega: f64,
        inner: &InnerSolveConfig,
    ) -> Result<Self> {
        let ts = transform(sys, omega)?;
        let solver = SpdSolver::new(&ts.wt, inner)?;
        Ok(Self {
            w: ts.wt,
            t: ts.tt,
            p: ts.pt,
            q: ts.qt,
            alpha,
            solver,
            method: Method::Psbts,
        })
    }

    fn y_step(&self, y: &[f64], xh: &[f64]) -> Result<Vec<f64>> {
        let a = self.alpha;
        let mut rhs = vec![0.0; y.len()];
        self.w.spmv_into(y, &mut rhs);
        for (r, q) in rhs.iter_mut().zip(&self.q) {
            *r = (a - 1.0) * *r + q;
        }
        self.t.spmv_acc(-1.0, xh, &mut rhs);
        rhs.iter_mut().for_each(|r| *r /= a);
        self.solver.solve(&rhs)
    }

    fn x_step(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.p.clone();
        self.t.spmv_acc(1.0, y, &mut rhs);
        self.solver.solve(&rhs)
    }
}

impl Sweep for SbtsIteration {
    fn method(&self) -> Method {
        self.method
    }

    fn sweep(&self, x: &mut Vec<f64>, y: &mut Vec<f64>) -> Result<()> {
        let xh = self.x_step(y)?;
        let yh = self.y_step(y, &xh)?;
        *y = self.y_step(&yh, &xh)?;
        *x = self.x_step(y)?;
        Ok(())
    }
}

/// MHSS on `(W + iT) u = b` with `u = x + iy`, `b = p + iq`:
///
/// ```text
/// (alpha I + W) u_h = (alpha I - iT) u + b
/// (alpha I + T) u'  = (alpha I + iW) u_h - ib
/// ```
pub struct MhssIteration<'a> {
    sys: &'a BlockSystem,
    alpha: f64,
    shifted_w: SpdSolver,
    shifted_t: SpdSolver,
}

impl<'a> MhssIteration<'a> {
    pub fn new(sys: &'a BlockSystem, alpha: f64, inner: &InnerSolveConfig) -> Result<Self> {
        Ok(Self {
            sys,
            alpha,
            shifted_w: SpdSolver::new(&sys.w.shifted(alpha), inner)?,
            shifted_t: SpdSolver::new(&sys.t.shifted(alpha), inner)?,
        })
    }
}

impl Sweep for MhssIteration<'_> {
    fn method(&self) -> Method {
        Method::Mhss
    }

    fn sweep(&self, x: &mut Vec<f64>, y: &mut Vec<f64>) -> Result<()> {
        let a = self.alpha;
        let (w, t, p, q) = (&self.sys.w, &self.sys.t, &self.sys.p, &self.sys.q);

        // (alpha I - iT)(x + iy) + b = (alpha x + T y + p) + i(alpha y - T x + q)
        let mut re: Vec<f64> = x.iter().zip(p).map(|(x, p)| a * x + p).collect();
        t.spmv_acc(1.0, y, &mut re);
        let mut im: Vec<f64> = y.iter().zip(q).map(|(y, q)| a * y + q).collect();
        t.spmv_acc(-1.0, x, &mut im);
        let hx = self.shifted_w.solve(&re)?;
        let hy = self.shifted_w.solve(&im)?;

        // (alpha I + iW)(hx + i hy) - ib = (alpha hx - W hy + q) + i(alpha hy + W hx - p)
        let mut re: Vec<f64> = hx.iter().zip(q).map(|(h, q)| a * h + q).collect();
        w.spmv_acc(-1.0, &hy, &mut re);
        let mut im: Vec<f64> = hy.iter().zip(p).map(|(h, p)| a * h - p).collect();
        w.spmv_acc(1.0, &hx, &mut im);
        *x = self.shifted_t.solve(&re)?;
        *y = self.shifted_t.solve(&im)?;
        Ok(())
    }
}

/// Drive a sweep until the original-system residual drops below `cfg.tol`.
pub fn run_iteration<S: Sweep>(
    iteration: &S,
    sys: &BlockSystem,
    cfg: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
    let clock = Instant::now();
    let n = sys.n();
    let (mut x, mut y) = match start {
        Some((x0, y0)) => {
            check_len(x0, n)?;
            check_len(y0, n)?;
            check_finite(x0)?;
            check_finite(y0)?;
            (x0.to_vec(), y0.to_vec())
        }
        None => (vec![0.0; n], vec![0.0; n]),
    };
    let method = iteration.method();
    let mut history = vec![residual(sys, &x, &y)?.value];
    let mut iterations = 0;
    while history[iterations] >= cfg.tol && iterations < cfg.max_iters {
        iteration.sweep(&mut x, &mut y)?;
        iterations += 1;
        let r = residual(sys, &x, &y)?.value;
        history.push(r);
        if !r.is_finite() {
            break;
        }
    }
    let converged = history[iterations] < cfg.tol;
    let report = SolveReport {
        method,
        m: None,
        alpha: cfg.alpha,
        omega: cfg.omega,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        iterations,
        converged,
        residual_history: history,
        wall_time_s: clock.elapsed().as_secs_f64(),
        inner_solves: iterations * method.solves_per_sweep(),
    };
    Ok((x, y, report))
}

pub type Solution = (Vec<f64>, Vec<f64>, SolveReport);

pub fn ssts_solve(
    sys: &BlockSystem,
    cfg: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<Solution> {
    cfg.validate()?;
    let it = SstsIteration::new(sys, cfg.alpha, cfg.omega, &cfg.inner)?;
    run_iteration(&it, sys, cfg, start)
}

pub fn sbts_solve(
    sys: &BlockSystem,
    cfg: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<Solution> {
    cfg.validate()?;
    let it = SbtsIteration::new(sys, cfg.alpha, &cfg.inner)?;
    run_iteration(&it, sys, cfg, start)
}

pub fn psbts_solve(
    sys: &BlockSystem,
    cfg: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<Solution> {
    cfg.validate()?;
    let it = SbtsIteration::preconditioned(sys, cfg.alpha, cfg.omega, &cfg.inner)?;
    run_iteration(&it, sys, cfg, start)
}

/// MHSS; `start` is the complex initial guess as `(real, imaginary)`.
pub fn mhss_solve(
    sys: &BlockSystem,
    cfg: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<Solution> {
    cfg.validate()?;
    let it = MhssIteration::new(sys, cfg.alpha, &cfg.inner)?;
    run_iteration(&it, sys, cfg, start)
}

pub fn solve(
    method: Method,
    sys: &BlockSystem,
    cfg: &SolverConfig,
    start: Option<(&[f64], &[f64])>,
) -> Result<Solution> {
    match method {
        Method::Mhss => mhss_solve(sys, cfg, start),
        Method::Sbts => sbts_solve(sys, cfg, start),
        Method::Psbts => psbts_solve(sys, cfg, start),
        Method::Ssts => ssts_solve(sys, cfg, start),
    }
}
