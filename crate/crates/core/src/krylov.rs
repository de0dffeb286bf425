//! Restarted GMRES with a left preconditioner, and the SSTS preconditioner.
//!
//! Iteration counts are reported as `c(j)`: `c` cycles were entered and the
//! last one performed `j` inner steps, for `restart * (c - 1) + j` steps in
//! total.

use std::fmt;

use nalgebra::{Complex, ComplexField};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::BlockSystem;
use crate::spd::{InnerSolveConfig, SpdSolver};
use crate::transform::{transform, TransformedSystem};
use crate::vector::check_len;

pub type C64 = Complex<f64>;

/// Scalars GMRES runs over: `f64` and `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}

impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

fn dotc<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc + a.conjugate() * b)
}

fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt()
}

pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;
}

/// Solves `M z = r` for a left preconditioner `M`.
pub trait Preconditioner<T> {
    fn apply(&self, r: &[T]) -> Result<Vec<T>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<T: Clone> Preconditioner<T> for Identity {
    fn apply(&self, r: &[T]) -> Result<Vec<T>> {
        Ok(r.to_vec())
    }
}

/// `[[W, -T], [T, W]]` acting on stacked `(x, y)`.
pub struct BlockOperator<'a>(pub &'a BlockSystem);

impl LinearOperator<f64> for BlockOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let n = self.0.n();
        let (top, bottom) = self.0.apply(&z[..n], &z[n..]);
        [top, bottom].concat()
    }
}

/// `[[Wt, -Tt], [Tt, Wt]]` acting on stacked `(x, y)`.
pub struct TransformedOperator<'a>(pub &'a TransformedSystem);

impl LinearOperator<f64> for TransformedOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let n = self.0.n();
        let (top, bottom) = self.0.apply(&z[..n], &z[n..]);
        [top, bottom].concat()
    }
}

/// `W + iT` acting on `x + iy`.
pub struct ComplexOperator<'a>(pub &'a BlockSystem);

impl LinearOperator<C64> for ComplexOperator<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }

    fn apply(&self, u: &[C64]) -> Vec<C64> {
        let x: Vec<f64> = u.iter().map(|z| z.re).collect();
        let y: Vec<f64> = u.iter().map(|z| z.im).collect();
        let (re, im) = self.0.apply(&x, &y);
        re.into_iter()
            .zip(im)
            .map(|(a, b)| C64::new(a, b))
            .collect()
    }
}

/// `M = [[Wt, 0], [Tt, alpha Wt]]`, applied through two solves with `Wt`.
pub struct SstsPreconditioner<'a> {
    ts: &'a TransformedSystem,
    alpha: f64,
    solver: SpdSolver,
}

impl<'a> SstsPreconditioner<'a> {
    pub fn new(ts: &'a TransformedSystem, alpha: f64, inner: &InnerSolveConfig) -> Result<Self> {
        ts.splitting(alpha)?;
        let solver = SpdSolver::new(&ts.wt, inner)?;
        Ok(Self { ts, alpha, solver })
    }

    /// `Wt e = r`, then `Wt f = (s - Tt e) / alpha`.
    pub fn apply_split(&self, r: &[f64], s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.ts.n();
        check_len(r, n)?;
        check_len(s, n)?;
        let e = self.solver.solve(r)?;
        let mut rhs = s.to_vec();
        self.ts.tt.spmv_acc(-1.0, &e, &mut rhs);
        rhs.iter_mut().for_each(|v| *v /= self.alpha);
        let f = self.solver.solve(&rhs)?;
        Ok((e, f))
    }
}

impl Preconditioner<f64> for SstsPreconditioner<'_> {
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let n = self.ts.n();
        check_len(r, 2 * n)?;
        let (e, f) = self.apply_split(&r[..n], &r[n..])?;
        Ok([e, f].concat())
    }
}

pub fn ssts_precond_apply(
    ts: &TransformedSystem,
    alpha: f64,
    r: &[f64],
    s: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    SstsPreconditioner::new(ts, alpha, &InnerSolveConfig::default())?.apply_split(r, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmresConfig {
    pub restart: usize,
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 10,
            tol: 1e-6,
            max_cycles: 1000,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 {
            return Err(Error::InvalidParameter("restart must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmresReport {
    pub restart: usize,
    pub cycles: usize,
    pub inner_last: usize,
    /// Operator applications, including residual checks.
    pub total_matvecs: usize,
    pub converged: bool,
    /// True relative residual at the start and after every inner step.
    #[serde(with = "crate::vector::lossy_f64")]
    pub residual_history: Vec<f64>,
    /// Least-squares residual of each inner step, relative to the
    /// preconditioned residual at the start of its cycle.
    pub arnoldi_history: Vec<Vec<f64>>,
}

impl GmresReport {
    pub fn total_inner(&self) -> usize {
        if self.cycles == 0 {
            0
        } else {
            self.restart * (self.cycles - 1) + self.inner_last
        }
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for GmresReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.cycles, self.inner_last)
    }
}

/// Complex Givens rotation zeroing `b` against `a`: `(c, s, r)` with
/// `c a + s b = r`, `-conj(s) a + c b = 0`.
fn givens<T: Scalar>(a: T, b: T) -> (f64, T, T) {
    let (na, nb) = (a.modulus(), b.modulus());
    if nb == 0.0 {
        return (1.0, T::zero(), a);
    }
    if na == 0.0 {
        return (0.0, b.conjugate().unscale(nb), T::from_real(nb));
    }
    let r = na.hypot(nb);
    let phase = a.unscale(na);
    (na / r, phase * b.conjugate().unscale(r), phase.scale(r))
}

fn rotate<T: Scalar>(c: f64, s: T, x: T, y: T) -> (T, T) {
    (x.scale(c) + s * y, y.scale(c) - s.conjugate() * x)
}

fn residual_norm<T: Scalar, A: LinearOperator<T>>(a: &A, b: &[T], x: &[T]) -> f64 {
    let ax = a.apply(x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    norm(&r)
}

/// Left-preconditioned restarted GMRES from a zero start with modified
/// Gram-Schmidt Arnoldi. Convergence is the true relative residual
/// `|b - A x| / |b| < tol`, checked after every inner step.
pub fn gmres<T, A, P>(
    a: &A,
    b: &[T],
    precond: &P,
    cfg: &GmresConfig,
) -> Result<(Vec<T>, GmresReport)>
where
    T: Scalar,
    A: LinearOperator<T>,
    P: Preconditioner<T>,
{
    cfg.validate()?;
    let dim = a.dim();
    check_len(b, dim)?;
    let bnorm = norm(b);
    let mut x = vec![T::zero(); dim];
    let mut report = GmresReport {
        restart: cfg.restart,
        cycles: 0,
        inner_last: 0,
        total_matvecs: 0,
        converged: false,
        residual_history: vec![if bnorm > 0.0 { 1.0 } else { 0.0 }],
        arnoldi_history: Vec::new(),
    };
    if bnorm == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    let m = cfg.restart;

    for cycle in 1..=cfg.max_cycles {
        let ax = a.apply(&x);
        report.total_matvecs += 1;
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        let z = precond.apply(&r)?;
        let beta = norm(&z);
        report.cycles = cycle;
        report.inner_last = 0;
        report.arnoldi_history.push(Vec::new());
        if beta == 0.0 {
            break;
        }

        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        basis.push(z.iter().map(|v| v.unscale(beta)).collect());
        // column-major Hessenberg, already rotated to upper triangular
        let mut hess: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut rotations: Vec<(f64, T)> = Vec::with_capacity(m);
        let mut g = vec![T::zero(); m + 1];
        g[0] = T::from_real(beta);
        let mut x_new = x.clone();

        for j in 0..m {
            let mut w = precond.apply(&a.apply(&basis[j]))?;
            report.total_matvecs += 1;
            let mut col = vec![T::zero(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let h = dotc(v, &w);
                col[i] = h;
                w.iter_mut().zip(v).for_each(|(wk, &vk)| *wk -= h * vk);
            }
            let sub = norm(&w);
            col[j + 1] = T::from_real(sub);

            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (u, v) = rotate(c, s, col[i], col[i + 1]);
                col[i] = u;
                col[i + 1] = v;
            }
            let (c, s, rr) = givens(col[j], col[j + 1]);
            col[j] = rr;
            col[j + 1] = T::zero();
            rotations.push((c, s));
            let (u, v) = rotate(c, s, g[j], g[j + 1]);
            g[j] = u;
            g[j + 1] = v;
            hess.push(col);
            report
                .arnoldi_history
                .last_mut()
                .expect("pushed at cycle start")
                .push(g[j + 1].modulus() / beta);

            // back substitution for the current iterate
            let k = j + 1;
            let mut y = vec![T::zero(); k];
            for i in (0..k).rev() {
                let mut acc = g[i];
                for l in i + 1..k {
                    acc -= hess[l][i] * y[l];
                }
                y[i] = acc / hess[i][i];
            }
            x_new.copy_from_slice(&x);
            for (v, &yi) in basis.iter().zip(&y) {
                x_new.iter_mut().zip(v).for_each(|(xk, &vk)| *xk += yi * vk);
            }
            let res = residual_norm(a, b, &x_new) / bnorm;
            report.total_matvecs += 1;
            report.residual_history.push(res);
            report.inner_last = k;
            if res < cfg.tol {
                report.converged = true;
                return Ok((x_new, report));
            }
            if !res.is_finite() || sub <= 1e-14 * bnorm {
                break;
            }
            basis.push(w.iter().map(|v| v.unscale(sub)).collect());
        }
        x = x_new;
        if !report
            .residual_history
            .last()
            .is_some_and(|r| r.is_finite())
        {
            break;
        }
    }
    Ok((x, report))
}

/// Unpreconditioned GMRES on the complex form `(W + iT) u = p + iq`.
pub fn gmres_complex(
    sys: &BlockSystem,
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, Vec<f64>, GmresReport)> {
    let b: Vec<C64> = sys
        .p
        .iter()
        .zip(&sys.q)
        .map(|(&p, &q)| C64::new(p, q))
        .collect();
    let (u, report) = gmres(&ComplexOperator(sys), &b, &Identity, cfg)?;
    Ok((
        u.iter().map(|z| z.re).collect(),
        u.iter().map(|z| z.im).collect(),
        report,
    ))
}

/// Unpreconditioned GMRES on the real block system.
pub fn gmres_block(
    sys: &BlockSystem,
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, Vec<f64>, GmresReport)> {
    let b = [sys.p.as_slice(), sys.q.as_slice()].concat();
    let (z, report) = gmres(&BlockOperator(sys), &b, &Identity, cfg)?;
    let n = sys.n();
    Ok((z[..n].to_vec(), z[n..].to_vec(), report))
}

/// GMRES on the transformed system, left-preconditioned by SSTS. Since
/// `P_omega^T P_omega = (1 + omega^2) I`, the relative residual of the
/// transformed system equals that of the original one.
pub fn ssts_gmres(
    sys: &BlockSystem,
    alpha: f64,
    omega: f64,
    inner: &InnerSolveConfig,
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, Vec<f64>, GmresReport)> {
    let ts = transform(sys, omega)?;
    let precond = SstsPreconditioner::new(&ts, alpha, inner)?;
    let b = [ts.pt.as_slice(), ts.qt.as_slice()].concat();
    let (z, report) = gmres(&TransformedOperator(&ts), &b, &precond, cfg)?;
    let n = sys.n();
    Ok((z[..n].to_vec(), z[n..].to_vec(), report))
}
