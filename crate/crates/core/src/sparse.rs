//! Compressed sparse row storage for real symmetric matrices.
//!
//! The full symmetric pattern is stored (both triangles), column indices are
//! strictly increasing inside each row and explicit zeros never survive
//! assembly. Products are summed in row-major, index order.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vector::check_len;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Assemble a symmetric matrix from `(row, col, value)` triplets.
    ///
    /// Duplicates are summed. An off-diagonal entry given on one side only is
    /// mirrored; an entry given on both sides must agree exactly after
    /// summation. Zeros are dropped.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(row, col, value) in entries {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfRange { row, col, n });
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value at ({row}, {col})"
                )));
            }
            *acc.entry((row, col)).or_insert(0.0) += value;
        }

        let mut full: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(row, col), &value) in &acc {
            if row == col {
                full.insert((row, col), value);
                continue;
            }
            match acc.get(&(col, row)) {
                Some(&mirror) if mirror != value => {
                    let (r, c) = (row.min(col), row.max(col));
                    return Err(Error::Asymmetric {
                        row: r,
                        col: c,
                        upper: acc[&(r, c)],
                        lower: acc[&(c, r)],
                    });
                }
                _ => {
                    full.insert((row, col), value);
                    full.insert((col, row), value);
                }
            }
        }

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(full.len());
        let mut values = Vec::with_capacity(full.len());
        for (&(row, col), &value) in &full {
            if value == 0.0 {
                continue;
            }
            row_offsets[row + 1] += 1;
            col_indices.push(col);
            values.push(value);
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        row_offsets.push(0);
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                col_indices.push(i);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// `m x m` tridiagonal matrix with constant bands.
    pub fn tridiag(m: usize, sub: f64, diag: f64, sup: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("tridiag needs m >= 1".into()));
        }
        if sub != sup {
            return Err(Error::InvalidParameter(format!(
                "tridiag bands must match for symmetry: sub = {sub}, super = {sup}"
            )));
        }
        let mut entries = Vec::with_capacity(3 * m);
        for i in 0..m {
            entries.push((i, i, diag));
            if i + 1 < m {
                entries.push((i, i + 1, sup));
            }
        }
        Self::from_triplets(m, &entries)
    }

    /// Kronecker sum `I (x) V + V (x) I` of a square matrix with itself.
    pub fn kron_sum(v: &SparseSym) -> Self {
        let m = v.n;
        let mut entries = Vec::with_capacity(2 * m * v.nnz());
        for a in 0..m {
            for (b, val) in v.row(a) {
                for k in 0..m {
                    // I (x) V: block k, local (a, b)
                    entries.push((k * m + a, k * m + b, val));
                    // V (x) I: block (a, b), local (k, k)
                    entries.push((a * m + k, b * m + k, val));
                }
            }
        }
        Self::from_triplets(m * m, &entries).expect("kron_sum of a symmetric matrix is symmetric")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate over `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.n)?;
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` into a caller-owned buffer; lengths are the caller's contract.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    /// `y += a * A x`.
    pub fn spmv_acc(&self, a: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi += a * acc;
        }
    }

    /// `a * A + b * B` over the union of both patterns.
    pub fn lin_comb(a: f64, lhs: &SparseSym, b: f64, rhs: &SparseSym) -> Result<Self> {
        if lhs.n != rhs.n {
            return Err(Error::DimensionMismatch {
                expected: lhs.n,
                found: rhs.n,
            });
        }
        let n = lhs.n;
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(lhs.nnz().max(rhs.nnz()));
        let mut values = Vec::with_capacity(lhs.nnz().max(rhs.nnz()));
        row_offsets.push(0);
        fn push(cols: &mut Vec<usize>, vals: &mut Vec<f64>, c: usize, v: f64) {
            if v != 0.0 {
                cols.push(c);
                vals.push(v);
            }
        }
        for i in 0..n {
            let mut p = lhs.row(i).peekable();
            let mut q = rhs.row(i).peekable();
            loop {
                match (p.peek().copied(), q.peek().copied()) {
                    (Some((cp, vp)), Some((cq, vq))) => {
                        if cp == cq {
                            push(&mut col_indices, &mut values, cp, a * vp + b * vq);
                            p.next();
                            q.next();
                        } else if cp < cq {
                            push(&mut col_indices, &mut values, cp, a * vp);
                            p.next();
                        } else {
                            push(&mut col_indices, &mut values, cq, b * vq);
                            q.next();
                        }
                    }
                    (Some((cp, vp)), None) => {
                        push(&mut col_indices, &mut values, cp, a * vp);
                        p.next();
                    }
                    (None, Some((cq, vq))) => {
                        push(&mut col_indices, &mut values, cq, b * vq);
                        q.next();
                    }
                    (None, None) => break,
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `c * A`.
    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::diagonal(&vec![0.0; self.n]);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `A + s I`.
    pub fn shifted(&self, s: f64) -> Self {
        Self::lin_comb(1.0, self, s, &Self::identity(self.n)).expect("same size")
    }

    /// Largest absolute asymmetry `max |a_ij - a_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .into_iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Half bandwidth: `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }
}
