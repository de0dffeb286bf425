//! Symmetric Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::vector::{axpy, dot, norm2, scale};

/// Ritz values (ascending) with their residual bounds `beta_k |s_k,i|`.
#[derive(Debug, Clone)]
pub struct RitzSet {
    pub values: Vec<f64>,
    pub bounds: Vec<f64>,
    pub steps: usize,
    /// The Krylov space became invariant; every Ritz value is exact.
    pub invariant: bool,
}

impl RitzSet {
    pub fn min(&self) -> (f64, f64) {
        (self.values[0], self.bounds[0])
    }

    pub fn max(&self) -> (f64, f64) {
        let k = self.values.len() - 1;
        (self.values[k], self.bounds[k])
    }

    fn converged(&self, (value, bound): (f64, f64), tol: f64) -> bool {
        self.invariant || bound <= tol * value.abs().max(f64::MIN_POSITIVE)
    }

    pub fn min_converged(&self, tol: f64) -> bool {
        self.converged(self.min(), tol)
    }

    pub fn max_converged(&self, tol: f64) -> bool {
        self.converged(self.max(), tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ends {
    Low,
    High,
    Both,
}

fn ritz(alphas: &[f64], betas: &[f64], last_beta: f64, invariant: bool) -> RitzSet {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let bound = if invariant {
                0.0
            } else {
                last_beta * eig.eigenvectors[(k - 1, i)].abs()
            };
            (eig.eigenvalues[i], bound)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    RitzSet {
        values: pairs.iter().map(|p| p.0).collect(),
        bounds: pairs.iter().map(|p| p.1).collect(),
        steps: k,
        invariant,
    }
}

/// Run Lanczos on a symmetric operator until the requested extreme Ritz
/// values have relative residual bound below `tol` or `max_steps` is hit.
pub fn lanczos<F>(op: F, start: &[f64], max_steps: usize, tol: f64, ends: Ends) -> RitzSet
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = start.len();
    let max_steps = max_steps.clamp(1, n.max(1));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut v = start.to_vec();
    let nv = norm2(&v);
    scale(1.0 / nv, &mut v);

    let mut alphas = Vec::with_capacity(max_steps);
    let mut betas: Vec<f64> = Vec::with_capacity(max_steps);
    let mut scale_est = 0.0f64;
    let check_every = 10;

    loop {
        let mut w = op(&v);
        let a = dot(&v, &w);
        alphas.push(a);
        axpy(-a, &v, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(v);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm2(&w);
        scale_est = scale_est.max(a.abs()).max(b);
        let k = alphas.len();
        let invariant = b <= 1e-13 * scale_est.max(f64::MIN_POSITIVE);
        let done = invariant || k >= max_steps;
        if done || k % check_every == 0 {
            let set = ritz(&alphas, &betas, b, invariant);
            let ok = match ends {
                Ends::Low => set.min_converged(tol),
                Ends::High => set.max_converged(tol),
                Ends::Both => set.min_converged(tol) && set.max_converged(tol),
            };
            if done || ok {
                return set;
            }
        }
        betas.push(b);
        scale(1.0 / b, &mut w);
        v = w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator_extremes() {
        let d: Vec<f64> = (1..=200).map(|i| i as f64 * 0.5).collect();
        let op = |x: &[f64]| x.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let start: Vec<f64> = (0..200)
            .map(|i| 1.0 + ((i * 7919) % 13) as f64 * 0.01)
            .collect();
        let set = lanczos(op, &start, 200, 1e-12, Ends::Both);
        assert!((set.min().0 - 0.5).abs() < 1e-9);
        assert!((set.max().0 - 100.0).abs() < 1e-9);
    }

    #[test]
    fn invariant_subspace_is_exact() {
        // three distinct eigenvalues: the Krylov space closes after three steps
        let d: Vec<f64> = (0..30).map(|i| [1.0, 4.0, 9.0][i % 3]).collect();
        let op = |x: &[f64]| x.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let set = lanczos(op, &vec![1.0; 30], 30, 1e-12, Ends::Both);
        assert!(set.invariant);
        assert_eq!(set.steps, 3);
        for (got, expect) in set.values.iter().zip([1.0, 4.0, 9.0]) {
            assert!((got - expect).abs() < 1e-12);
        }
    }
}
