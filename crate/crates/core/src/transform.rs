//! The `P_omega = [[omega I, I], [-I, omega I]]` premultiplication and the
//! block lower-triangular splitting built on the transformed system.
//!
//! Premultiplying the block system gives
//!
//! ```text
//! [[Wt, -Tt], [Tt, Wt]] (x, y) = (pt, qt)
//! Wt = omega W + T,  Tt = omega T - W,  pt = omega p + q,  qt = omega q - p
//! ```
//!
//! and the splitting `M - N` with `M = [[Wt, 0], [Tt, alpha Wt]]`,
//! `N = [[0, Tt], [0, (alpha - 1) Wt]]`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::BlockSystem;
use crate::sparse::SparseSym;

#[derive(Debug, Clone)]
pub struct TransformedSystem {
    pub wt: SparseSym,
    pub tt: SparseSym,
    pub pt: Vec<f64>,
    pub qt: Vec<f64>,
    pub omega: f64,
}

pub fn transform(sys: &BlockSystem, omega: f64) -> Result<TransformedSystem> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let wt = SparseSym::lin_comb(omega, &sys.w, 1.0, &sys.t)?;
    let tt = SparseSym::lin_comb(omega, &sys.t, -1.0, &sys.w)?;
    let pt = sys
        .p
        .iter()
        .zip(&sys.q)
        .map(|(p, q)| omega * p + q)
        .collect();
    let qt = sys
        .q
        .iter()
        .zip(&sys.p)
        .map(|(q, p)| omega * q - p)
        .collect();
    Ok(TransformedSystem {
        wt,
        tt,
        pt,
        qt,
        omega,
    })
}

/// Dense `[[a, -b], [b, a]]`.
pub fn dense_block(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(&(-b));
    out.view_mut((n, 0), (n, n)).copy_from(b);
    out.view_mut((n, n), (n, n)).copy_from(a);
    out
}

impl BlockSystem {
    /// Dense `[[W, -T], [T, W]]`.
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        dense_block(&self.w.to_dense(), &self.t.to_dense())
    }

    pub fn dense_rhs(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.n(), self.p.iter().chain(&self.q).copied())
    }
}

impl TransformedSystem {
    pub fn n(&self) -> usize {
        self.wt.n()
    }

    /// `(Wt x - Tt y, Tt x + Wt y)`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut top = vec![0.0; n];
        let mut bottom = vec![0.0; n];
        self.wt.spmv_into(x, &mut top);
        self.tt.spmv_acc(-1.0, y, &mut top);
        self.tt.spmv_into(x, &mut bottom);
        self.wt.spmv_acc(1.0, y, &mut bottom);
        (top, bottom)
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        dense_block(&self.wt.to_dense(), &self.tt.to_dense())
    }

    pub fn splitting(&self, alpha: f64) -> Result<Splitting<'_>> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Splitting { ts: self, alpha })
    }
}

/// Dense `P_omega`.
pub fn dense_p_omega(n: usize, omega: f64) -> DMatrix<f64> {
    let eye = DMatrix::<f64>::identity(n, n);
    dense_block(&(&eye * omega), &(-eye))
}

#[derive(Debug, Clone, Copy)]
pub struct Splitting<'a> {
    pub ts: &'a TransformedSystem,
    pub alpha: f64,
}

impl Splitting<'_> {
    /// Dense `M = [[Wt, 0], [Tt, alpha Wt]]`.
    pub fn dense_m(&self) -> DMatrix<f64> {
        let n = self.ts.n();
        let wt = self.ts.wt.to_dense();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&wt);
        m.view_mut((n, 0), (n, n)).copy_from(&self.ts.tt.to_dense());
        m.view_mut((n, n), (n, n)).copy_from(&(wt * self.alpha));
        m
    }

    /// Dense `N = [[0, Tt], [0, (alpha - 1) Wt]]`.
    pub fn dense_n(&self) -> DMatrix<f64> {
        let n = self.ts.n();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, n), (n, n))
            .copy_from(&self.ts.tt.to_dense());
        out.view_mut((n, n), (n, n))
            .copy_from(&(self.ts.wt.to_dense() * (self.alpha - 1.0)));
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub n: usize,
    pub omega: f64,
    /// `max |z_original - z_transformed|` relative to `max |z_original|`.
    pub relative_difference: f64,
    pub agree: bool,
}

pub const INVARIANCE_LIMIT: usize = 256;

/// Dense-solves the original and the transformed system and compares.
pub fn solution_invariance_check(sys: &BlockSystem, omega: f64) -> Result<InvarianceReport> {
    if sys.n() > INVARIANCE_LIMIT {
        return Err(Error::SizeGuard {
            n: sys.n(),
            limit: INVARIANCE_LIMIT,
        });
    }
    let ts = transform(sys, omega)?;
    let z0 = sys
        .dense_matrix()
        .lu()
        .solve(&sys.dense_rhs())
        .ok_or_else(|| Error::InvalidParameter("original system is singular".into()))?;
    let bt = DVector::from_iterator(2 * ts.n(), ts.pt.iter().chain(&ts.qt).copied());
    let z1 = ts
        .dense_matrix()
        .lu()
        .solve(&bt)
        .ok_or_else(|| Error::InvalidParameter("transformed system is singular".into()))?;
    let scale = z0.amax().max(f64::MIN_POSITIVE);
    let relative_difference = (&z0 - &z1).amax() / scale;
    Ok(InvarianceReport {
        n: sys.n(),
        omega,
        relative_difference,
        agree: relative_difference <= 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1, example2};

    fn identity_system(n: usize, w: f64, t: f64) -> BlockSystem {
        let p: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let q: Vec<f64> = (0..n).map(|i| 0.5 - i as f64).collect();
        BlockSystem::new(
            SparseSym::identity(n).scaled(w),
            SparseSym::identity(n).scaled(t),
            p,
            q,
            "synthetic",
        )
        .unwrap()
    }

    #[test]
    fn direct_substitution() {
        let sys = identity_system(3, 1.0, 0.0);
        let ts = transform(&sys, 1.0).unwrap();
        assert_eq!(ts.wt.to_dense(), DMatrix::identity(3, 3));
        assert_eq!(ts.tt.to_dense(), -DMatrix::<f64>::identity(3, 3));
        for i in 0..3 {
            assert_eq!(ts.pt[i], sys.p[i] + sys.q[i]);
            assert_eq!(ts.qt[i], sys.q[i] - sys.p[i]);
        }

        let ts = transform(&identity_system(3, 1.0, 1.0), 1.0).unwrap();
        assert_eq!(ts.wt.to_dense(), DMatrix::identity(3, 3) * 2.0);
        assert_eq!(ts.tt.nnz(), 0);
    }

    #[test]
    fn rejects_nonpositive_omega() {
        let sys = identity_system(2, 1.0, 1.0);
        assert!(transform(&sys, 0.0).is_err());
        assert!(transform(&sys, -1.0).is_err());
        assert!(transform(&sys, f64::NAN).is_err());
        let ts = transform(&sys, 1.0).unwrap();
        assert!(ts.splitting(0.0).is_err());
    }

    #[test]
    fn reconstruction_identity() {
        let sys = example1(4).unwrap();
        let ts = transform(&sys, 0.657).unwrap();
        let expect = dense_p_omega(sys.n(), 0.657) * sys.dense_matrix();
        assert!((ts.dense_matrix() - expect).amax() <= 1e-14);
        assert_eq!(ts.tt.asymmetry(), 0.0);
    }

    #[test]
    fn splitting_reproduces_matrix() {
        let sys = example2(3).unwrap();
        let ts = transform(&sys, 1.3).unwrap();
        let s = ts.splitting(1.25).unwrap();
        assert!((s.dense_m() - s.dense_n() - ts.dense_matrix()).amax() <= 1e-14);
    }

    #[test]
    fn p_omega_nonsingular() {
        for omega in [0.1, 0.657, 1.0, 3.5] {
            let det = dense_p_omega(3, omega).determinant();
            let expect = (omega * omega + 1.0).powi(3);
            assert!(det > 0.0);
            assert!((det - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn scaling_is_exact() {
        let sys = example1(3).unwrap();
        let c = 4.0;
        let a = transform(&sys.scaled(c), 0.7).unwrap();
        let b = transform(&sys, 0.7).unwrap();
        assert_eq!(a.wt, b.wt.scaled(c));
        assert_eq!(a.tt, b.tt.scaled(c));
        for (x, y) in a.pt.iter().zip(&b.pt) {
            assert_eq!(*x, c * y);
        }
        for (x, y) in a.qt.iter().zip(&b.qt) {
            assert_eq!(*x, c * y);
        }
    }

    #[test]
    fn equivalent_solutions() {
        assert!(
            solution_invariance_check(&example1(2).unwrap(), 1.0)
                .unwrap()
                .agree
        );
        assert!(
            solution_invariance_check(&identity_system(5, 1.0, 1.0), 1.0)
                .unwrap()
                .agree
        );
        assert!(
            solution_invariance_check(&example2(4).unwrap(), 1.308)
                .unwrap()
                .agree
        );
        assert!(matches!(
            solution_invariance_check(&example1(17).unwrap(), 1.0),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn identity_pair_closed_form() {
        // W = T = I: (1 + i) u = b gives x = (p + q)/2, y = (q - p)/2
        let sys = identity_system(4, 1.0, 1.0);
        let z = sys.dense_matrix().lu().solve(&sys.dense_rhs()).unwrap();
        for i in 0..4 {
            assert!((z[i] - (sys.p[i] + sys.q[i]) / 2.0).abs() < 1e-14);
            assert!((z[4 + i] - (sys.q[i] - sys.p[i]) / 2.0).abs() < 1e-14);
        }
    }
}
