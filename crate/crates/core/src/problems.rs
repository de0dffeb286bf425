//! Block two-by-two systems `[[W, -T], [T, W]] (x, y) = (p, q)` and the two
//! benchmark generators.
//!
//! Both generators discretize the negative Laplacian on the unit square with
//! the five-point stencil on an `m x m` interior grid (`n = m^2`,
//! `h = 1/(m+1)`) and normalize matrices and right-hand side by `h^2`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseSym;
use crate::vector::{check_finite, check_len, norm2};

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub w: SparseSym,
    pub t: SparseSym,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub descriptor: String,
}

/// JSON sidecar holding the right-hand side of an exported system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsSidecar {
    pub descriptor: String,
    pub n: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl BlockSystem {
    pub fn new(
        w: SparseSym,
        t: SparseSym,
        p: Vec<f64>,
        q: Vec<f64>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let n = w.n();
        if t.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.n(),
            });
        }
        check_len(&p, n)?;
        check_len(&q, n)?;
        check_finite(&p)?;
        check_finite(&q)?;
        Ok(Self {
            w,
            t,
            p,
            q,
            descriptor: descriptor.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    /// `(W x - T y, T x + W y)`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut top = vec![0.0; n];
        let mut bottom = vec![0.0; n];
        self.w.spmv_into(x, &mut top);
        self.t.spmv_acc(-1.0, y, &mut top);
        self.t.spmv_into(x, &mut bottom);
        self.w.spmv_acc(1.0, y, &mut bottom);
        (top, bottom)
    }

    /// `|(p, q)|_2`.
    pub fn rhs_norm(&self) -> f64 {
        norm2(&self.p).hypot(norm2(&self.q))
    }

    /// Scale `W`, `T`, `p` and `q` by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w: self.w.scaled(c),
            t: self.t.scaled(c),
            p: self.p.iter().map(|v| c * v).collect(),
            q: self.q.iter().map(|v| c * v).collect(),
            descriptor: format!("{} scaled by {c}", self.descriptor),
        }
    }

    /// Write `W.mtx`, `T.mtx` and `rhs.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        crate::mm::save(&self.w, dir.join("W.mtx"))?;
        crate::mm::save(&self.t, dir.join("T.mtx"))?;
        let sidecar = RhsSidecar {
            descriptor: self.descriptor.clone(),
            n: self.n(),
            p: self.p.clone(),
            q: self.q.clone(),
        };
        std::fs::write(
            dir.join("rhs.json"),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        Ok(())
    }

    pub fn import(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let w = crate::mm::load(dir.join("W.mtx"))?;
        let t = crate::mm::load(dir.join("T.mtx"))?;
        let sidecar: RhsSidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.join("rhs.json"))?)?;
        if sidecar.n != w.n() {
            return Err(Error::DimensionMismatch {
                expected: w.n(),
                found: sidecar.n,
            });
        }
        Self::new(w, t, sidecar.p, sidecar.q, sidecar.descriptor)
    }
}

fn mesh_width(m: usize) -> f64 {
    1.0 / (m as f64 + 1.0)
}

/// Unnormalized five-point negative Laplacian `K = I (x) V + V (x) I`,
/// `V = h^-2 tridiag(-1, 2, -1)`.
pub fn laplacian_2d(m: usize) -> Result<SparseSym> {
    let h = mesh_width(m);
    let v = SparseSym::tridiag(m, -1.0, 2.0, -1.0)?.scaled(1.0 / (h * h));
    Ok(SparseSym::kron_sum(&v))
}

/// Eigenvalues of `h^2 K`: `4 - 2 cos(j pi h) - 2 cos(k pi h)`, `1 <= j, k <= m`.
pub fn scaled_laplacian_eigenvalues(m: usize) -> Vec<f64> {
    let h = mesh_width(m);
    let c: Vec<f64> = (1..=m).map(|j| 2.0 * (j as f64 * PI * h).cos()).collect();
    c.iter()
        .flat_map(|a| c.iter().map(move |b| 4.0 - a - b))
        .collect()
}

/// Shifted-Laplacian complex system `(K + (3-sqrt 3)/tau I) + i (K + (3+sqrt 3)/tau I)`
/// with `tau = h` and `b_j = (1 - i) j / (tau (1 + j)^2)`.
pub fn example1(m: usize) -> Result<BlockSystem> {
    if m == 0 {
        return Err(Error::InvalidParameter("example 1 needs m >= 1".into()));
    }
    let h = mesh_width(m);
    let tau = h;
    let n = m * m;
    let k = laplacian_2d(m)?;
    let s3 = 3f64.sqrt();
    let h2 = h * h;
    let w = k.shifted((3.0 - s3) / tau).scaled(h2);
    let t = k.shifted((3.0 + s3) / tau).scaled(h2);
    // b_j is 1-based
    let p: Vec<f64> = (1..=n)
        .map(|j| {
            let j = j as f64;
            h2 * j / (tau * (1.0 + j) * (1.0 + j))
        })
        .collect();
    let q: Vec<f64> = p.iter().map(|v| -v).collect();
    BlockSystem::new(w, t, p, q, format!("example1 m={m} n={n} h={h} tau={tau}"))
}

/// Damped Helmholtz-type system `(K - theta^2 I) + i (10 theta I + varsigma K)`
/// with `theta = pi`, `varsigma = 0.02` and exact solution `(1 + i) 1`.
pub fn example2(m: usize) -> Result<BlockSystem> {
    if m < 2 {
        return Err(Error::InvalidParameter("example 2 needs m >= 2".into()));
    }
    let h = mesh_width(m);
    let n = m * m;
    let theta = PI;
    let varsigma = 0.02;
    let h2 = h * h;

    // smallest eigenvalue of h^2 (K - theta^2 I)
    let min_eig = 8.0 * (PI * h / 2.0).sin().powi(2) - theta * theta * h2;
    if min_eig <= 0.0 {
        return Err(Error::WNotSpd { min_eig });
    }

    let k = laplacian_2d(m)?;
    let w = k.shifted(-theta * theta).scaled(h2);
    let t = SparseSym::lin_comb(10.0 * theta, &SparseSym::identity(n), varsigma, &k)?.scaled(h2);
    let ones = vec![1.0; n];
    let w1 = w.spmv(&ones)?;
    let t1 = t.spmv(&ones)?;
    // (W + iT)(1 + i) 1 = (W - T) 1 + i (W + T) 1
    let p: Vec<f64> = w1.iter().zip(&t1).map(|(a, b)| a - b).collect();
    let q: Vec<f64> = w1.iter().zip(&t1).map(|(a, b)| a + b).collect();
    BlockSystem::new(
        w,
        t,
        p,
        q,
        format!("example2 m={m} n={n} h={h} theta=pi varsigma={varsigma}"),
    )
}

/// Generator by example id (1 or 2).
pub fn example(id: u8, m: usize) -> Result<BlockSystem> {
    match id {
        1 => example1(m),
        2 => example2(m),
        other => Err(Error::InvalidParameter(format!(
            "unknown example {other}, expected 1 or 2"
        ))),
    }
}
