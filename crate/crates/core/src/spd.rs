//! Inner solves with symmetric positive definite matrices.
//!
//! The direct path is an envelope (skyline) Cholesky factorization: row `i`
//! of the factor is stored densely from the first nonzero column of row `i`
//! of `A` up to the diagonal. Cholesky creates no fill outside the envelope,
//! so for banded stencils in natural ordering the cost is `O(n b^2)` with
//! `b` the half bandwidth. No reordering is applied, which keeps the factor
//! bit-deterministic for a given matrix.
//!
//! Conjugate gradients is the memory-light fallback. Both live behind
//! [`SpdSolver`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseSym;
use crate::vector::{axpy, check_len, dot, norm2};

/// Lower-triangular envelope Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    tag: u64,
    n: usize,
    /// First stored column of each row.
    first: Vec<usize>,
    /// Offset of row `i` in `values`; row `i` occupies `first[i]..=i`.
    offsets: Vec<usize>,
    values: Vec<f64>,
}

/// FNV-1a over the CSR arrays; identifies the factored matrix.
pub fn matrix_tag(a: &SparseSym) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(a.n() as u64);
    a.row_offsets().iter().for_each(|&v| feed(v as u64));
    a.col_indices().iter().for_each(|&v| feed(v as u64));
    a.values().iter().for_each(|v| feed(v.to_bits()));
    h
}

impl SpdFactorization {
    pub fn factorize(a: &SparseSym) -> Result<Self> {
        let n = a.n();
        let mut first = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for i in 0..n {
            let f = a.row(i).next().map(|(j, _)| j.min(i)).unwrap_or(i);
            first.push(f);
            offsets.push(offsets[i] + (i - f + 1));
        }
        let mut values = vec![0.0; offsets[n]];
        for i in 0..n {
            let base = offsets[i] - first[i];
            for (j, v) in a.row(i) {
                if j > i {
                    break;
                }
                values[base + j] = v;
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_start = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (done, rest) = values.split_at_mut(row_start);
                let lj = &done[offsets[j]..offsets[j + 1]];
                let li = &mut rest[..i - fi + 1];
                let s = dot(&li[lo - fi..j - fi], &lj[lo - fj..j - fj]);
                li[j - fi] = (li[j - fi] - s) / lj[j - fj];
            }
            let li = &values[row_start..offsets[i + 1]];
            let off = &li[..i - fi];
            let d = li[i - fi] - dot(off, off);
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotSpd { index: i, pivot: d });
            }
            values[offsets[i + 1] - 1] = d.sqrt();
        }

        Ok(Self {
            tag: matrix_tag(a),
            n,
            first,
            offsets,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Identity of the matrix this factor was computed from.
    pub fn tag(&self) -> u64 {
        self.tag
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Solve `L y = b` in place.
    pub fn forward_in_place(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            let fi = self.first[i];
            let s = dot(&row[..i - fi], &x[fi..i]);
            x[i] = (x[i] - s) / row[i - fi];
        }
    }

    /// Solve `L^T x = y` in place.
    pub fn backward_in_place(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let fi = self.first[i];
            x[i] /= row[i - fi];
            let xi = x[i];
            axpy(-xi, &row[..i - fi], &mut x[fi..i]);
        }
    }

    /// `L x`.
    pub fn lower_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| dot(self.row(i), &x[self.first[i]..=i]))
            .collect()
    }

    /// `L^T x`.
    pub fn lower_t_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let fi = self.first[i];
            axpy(x[i], self.row(i), &mut y[fi..=i]);
        }
        y
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(b, self.n)?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        self.forward_in_place(x);
        self.backward_in_place(x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerMode {
    Direct,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSolveConfig {
    pub mode: InnerMode,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
}

impl Default for InnerSolveConfig {
    fn default() -> Self {
        Self {
            mode: InnerMode::Direct,
            cg_tol: 1e-13,
            cg_max_iters: 10_000,
        }
    }
}

impl InnerSolveConfig {
    pub fn cg(tol: f64, max_iters: usize) -> Self {
        Self {
            mode: InnerMode::Cg,
            cg_tol: tol,
            cg_max_iters: max_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cg tolerance must lie in (0, 1), got {}",
                self.cg_tol
            )));
        }
        if self.cg_max_iters == 0 {
            return Err(Error::InvalidParameter(
                "cg max iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients from a zero start.
///
/// Stops when the recurrence residual satisfies `|r| <= tol |b|`. On
/// exhaustion the error carries the best iterate seen.
pub fn cg_solve(a: &SparseSym, b: &[f64], cfg: &InnerSolveConfig) -> Result<CgSolution> {
    cfg.validate()?;
    check_len(b, a.n())?;
    let n = a.n();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut best = (x.clone(), 1.0);
    for it in 1..=cfg.cg_max_iters {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotSpd {
                index: it - 1,
                pivot: pap,
            });
        }
        let step = rr / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / bnorm;
        if rel <= cfg.cg_tol {
            return Ok(CgSolution {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Err(Error::CgNotConverged {
        iterations: cfg.cg_max_iters,
        residual: best.1,
        tol: cfg.cg_tol,
        best: best.0,
    })
}

/// One SPD operator, solved either by a cached factorization or by CG.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Direct(SpdFactorization),
    Cg {
        matrix: SparseSym,
        cfg: InnerSolveConfig,
    },
}

impl SpdSolver {
    pub fn new(a: &SparseSym, cfg: &InnerSolveConfig) -> Result<Self> {
        cfg.validate()?;
        match cfg.mode {
            InnerMode::Direct => Ok(Self::Direct(SpdFactorization::factorize(a)?)),
            InnerMode::Cg => Ok(Self::Cg {
                matrix: a.clone(),
                cfg: *cfg,
            }),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Direct(f) => f.n(),
            Self::Cg { matrix, .. } => matrix.n(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Direct(f) => f.solve(b),
            Self::Cg { matrix, cfg } => cg_solve(matrix, b, cfg).map(|s| s.x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian(m: usize) -> SparseSym {
        let h = 1.0 / (m as f64 + 1.0);
        let v = SparseSym::tridiag(m, -1.0, 2.0, -1.0)
            .unwrap()
            .scaled(1.0 / (h * h));
        SparseSym::kron_sum(&v)
    }

    fn rel_residual(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.spmv(x).unwrap();
        let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        norm2(&r) / norm2(b)
    }

    #[test]
    fn identity_and_diagonal() {
        let f = SpdFactorization::factorize(&SparseSym::identity(3)).unwrap();
        assert_eq!(f.solve(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        assert_eq!(f.lower_mul(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);

        let f = SpdFactorization::factorize(&SparseSym::diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(f.solve(&[4.0, 9.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn rejects_indefinite_with_index() {
        let a = SparseSym::diagonal(&[1.0, 2.0, -1.0]);
        match SpdFactorization::factorize(&a) {
            Err(Error::NotSpd { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        let b = SparseSym::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(
            SpdFactorization::factorize(&b),
            Err(Error::NotSpd { index: 1, .. })
        ));
    }

    #[test]
    fn matches_dense_lu() {
        let k = laplacian(6).shifted(3.0);
        let f = SpdFactorization::factorize(&k).unwrap();
        let b: Vec<f64> = (0..k.n()).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = f.solve(&b).unwrap();
        let dense = k
            .to_dense()
            .lu()
            .solve(&DVector::from_vec(b.clone()))
            .unwrap();
        for (a, e) in x.iter().zip(dense.iter()) {
            assert!((a - e).abs() <= 1e-10 * e.abs().max(1.0));
        }
    }

    #[test]
    fn factor_reproduces_matrix() {
        let k = laplacian(5).shifted(1.0);
        let f = SpdFactorization::factorize(&k).unwrap();
        let n = k.n();
        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = f.lower_mul(&e);
            for i in 0..n {
                l[(i, j)] = col[i];
            }
        }
        let llt = &l * l.transpose();
        assert!((llt - k.to_dense()).amax() < 1e-10);

        let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let lt = f.lower_t_mul(&x);
        let dense = l.transpose() * DVector::from_vec(x);
        for (a, b) in lt.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn refactoring_is_deterministic() {
        let k = laplacian(7).shifted(0.5);
        let b: Vec<f64> = (0..k.n()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let x1 = SpdFactorization::factorize(&k).unwrap().solve(&b).unwrap();
        let f2 = SpdFactorization::factorize(&k).unwrap();
        assert_eq!(x1, f2.solve(&b).unwrap());
        assert_eq!(f2.tag(), matrix_tag(&k));
    }

    #[test]
    fn solve_recovers_known_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [3, 8, 16] {
            let k = laplacian(m).shifted(2.0);
            let x: Vec<f64> = (0..k.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = k.spmv(&x).unwrap();
            let got = SpdFactorization::factorize(&k).unwrap().solve(&b).unwrap();
            let err: Vec<f64> = got.iter().zip(&x).map(|(a, b)| a - b).collect();
            assert!(norm2(&err) <= 1e-10 * norm2(&x));
            assert!(rel_residual(&k, &got, &b) <= 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let f = SpdFactorization::factorize(&SparseSym::identity(3)).unwrap();
        assert!(matches!(
            f.solve(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cg_small_cases() {
        let cfg = InnerSolveConfig::cg(1e-12, 100);
        let s = cg_solve(&SparseSym::identity(4), &[1.0, 2.0, 3.0, 4.0], &cfg).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(s.x, vec![1.0, 2.0, 3.0, 4.0]);

        let d = SparseSym::diagonal(&[1.0, 2.0, 3.0]);
        let s = cg_solve(&d, &[1.0, 2.0, 3.0], &cfg).unwrap();
        assert!(s.iterations <= 3);
        for v in s.x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_iterations_bounded_by_distinct_eigenvalues() {
        let cfg = InnerSolveConfig::cg(1e-12, 100);
        for k in 1..=10usize {
            let d: Vec<f64> = (0..40).map(|i| 1.0 + (i % k) as f64).collect();
            let b: Vec<f64> = (0..40).map(|i| 1.0 + 0.1 * i as f64).collect();
            let s = cg_solve(&SparseSym::diagonal(&d), &b, &cfg).unwrap();
            assert!(s.iterations <= k, "k={k}: {} iterations", s.iterations);
        }
    }

    #[test]
    fn cg_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = laplacian(8);
        let b: Vec<f64> = (0..k.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cg = cg_solve(&k, &b, &InnerSolveConfig::cg(1e-12, 1000)).unwrap();
        let direct = SpdFactorization::factorize(&k).unwrap().solve(&b).unwrap();
        let diff: Vec<f64> = cg.x.iter().zip(&direct).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-10 * norm2(&direct));
    }

    #[test]
    fn cg_exhaustion_returns_best_iterate() {
        let k = laplacian(10);
        let b = vec![1.0; k.n()];
        match cg_solve(&k, &b, &InnerSolveConfig::cg(1e-14, 3)) {
            Err(Error::CgNotConverged {
                iterations, best, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(best.len(), k.n());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(InnerSolveConfig::cg(0.0, 10).validate().is_err());
        assert!(InnerSolveConfig::cg(1.0, 10).validate().is_err());
        assert!(InnerSolveConfig::cg(1e-8, 0).validate().is_err());
        assert!(InnerSolveConfig::default().validate().is_ok());
    }

    #[test]
    fn solver_modes_agree() {
        let k = laplacian(6).shifted(1.0);
        let b: Vec<f64> = (0..k.n()).map(|i| (i as f64).cos()).collect();
        let d = SpdSolver::new(&k, &InnerSolveConfig::default()).unwrap();
        let c = SpdSolver::new(&k, &InnerSolveConfig::cg(1e-13, 1000)).unwrap();
        let xd = d.solve(&b).unwrap();
        let xc = c.solve(&b).unwrap();
        let diff: Vec<f64> = xd.iter().zip(&xc).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-8 * norm2(&xd));
    }
}
