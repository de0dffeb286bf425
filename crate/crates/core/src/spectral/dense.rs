//! Dense verification of the iteration-matrix and preconditioner spectra.
//!
//! Everything here builds explicit `2n x 2n` matrices and is bounded by
//! [`DENSE_LIMIT`](super::DENSE_LIMIT).

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{dense_gen_eigenvalues, mu_from_eta, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::problems::BlockSystem;
use crate::transform::{transform, TransformedSystem};

/// Multiset tolerance for spectrum comparisons.
pub const SPECTRUM_TOL: f64 = 1e-8;

fn guard(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::SizeGuard {
            n,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

fn singular(what: &str) -> Error {
    Error::InvalidParameter(format!("{what} is singular"))
}

/// Dense `S = Wt^{-1} Tt`.
pub fn s_tilde(ts: &TransformedSystem) -> Result<DMatrix<f64>> {
    guard(ts.n())?;
    let chol = ts.wt.to_dense().cholesky().ok_or(Error::NotSpd {
        index: 0,
        pivot: f64::NAN,
    })?;
    Ok(chol.solve(&ts.tt.to_dense()))
}

/// Explicit `H = M^{-1} N`.
pub fn dense_iteration_matrix(ts: &TransformedSystem, alpha: f64) -> Result<DMatrix<f64>> {
    guard(ts.n())?;
    let split = ts.splitting(alpha)?;
    split
        .dense_m()
        .lu()
        .solve(&split.dense_n())
        .ok_or_else(|| singular("M"))
}

/// Explicit `M^{-1} A` for the transformed matrix `A`.
pub fn dense_preconditioned_matrix(ts: &TransformedSystem, alpha: f64) -> Result<DMatrix<f64>> {
    guard(ts.n())?;
    let split = ts.splitting(alpha)?;
    split
        .dense_m()
        .lu()
        .solve(&ts.dense_matrix())
        .ok_or_else(|| singular("M"))
}

/// Eigenvalues of a general real matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    m.eigenvalues()
        .expect("QR iteration on a finite matrix")
        .into_iter()
        .map(|z| Complex::new(z.re, z.im))
        .collect()
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense `rho(H)`.
pub fn dense_rho_h(ts: &TransformedSystem, alpha: f64) -> Result<f64> {
    Ok(spectral_radius(&dense_iteration_matrix(ts, alpha)?))
}

/// Eigenvalues of `S^2` from a general eigensolve of `S`. With
/// `H = [[0, S], [0, B]]`, `B = ((alpha - 1) I - S^2) / alpha`, every
/// `rho(H)` for a fixed `omega` follows from these.
#[derive(Debug, Clone)]
pub struct SquaredSpectrum {
    pub values: Vec<Complex<f64>>,
}

impl SquaredSpectrum {
    pub fn new(ts: &TransformedSystem) -> Result<Self> {
        let values = eigenvalues(&s_tilde(ts)?)
            .into_iter()
            .map(|z| z * z)
            .collect();
        Ok(Self { values })
    }

    pub fn rho_h(&self, alpha: f64) -> f64 {
        self.values
            .iter()
            .map(|&s2| ((alpha - 1.0 - s2) / alpha).norm())
            .fold(0.0, f64::max)
    }
}

/// Largest distance between two real multisets of equal size.
fn multiset_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Signed `mu_i` of the pair at `omega`, ascending, via the `eta` map.
pub fn mapped_mu(sys: &BlockSystem, omega: f64) -> Result<Vec<f64>> {
    let eta = dense_gen_eigenvalues(&sys.w.to_dense(), &sys.t.to_dense())?;
    let mut mu: Vec<f64> = eta.iter().map(|&e| mu_from_eta(e, omega)).collect();
    mu.sort_by(f64::total_cmp);
    Ok(mu)
}

/// Lemma 2/3 consistency: eigenvalues of `S` from a general eigensolve
/// against `eta` mapped through `mu = (omega eta - 1) / (omega + eta)`.
#[derive(Debug, Clone, Serialize)]
pub struct MapConsistency {
    pub omega: f64,
    pub max_imag: f64,
    pub max_error: f64,
    pub passed: bool,
}

pub fn map_consistency(sys: &BlockSystem, omega: f64) -> Result<MapConsistency> {
    let ts = transform(sys, omega)?;
    let eig = eigenvalues(&s_tilde(&ts)?);
    let max_imag = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut got: Vec<f64> = eig.iter().map(|z| z.re).collect();
    let mut expect = mapped_mu(sys, omega)?;
    let max_error = multiset_distance(&mut got, &mut expect);
    Ok(MapConsistency {
        omega,
        max_imag,
        max_error,
        passed: max_imag < 1e-10 && max_error <= SPECTRUM_TOL,
    })
}

/// Theorem 1: `n` zero eigenvalues of `H` and `1 - (1 + mu_i^2) / alpha`.
#[derive(Debug, Clone, Serialize)]
pub struct IterationSpectrumCheck {
    pub n: usize,
    pub alpha: f64,
    pub omega: f64,
    /// `sigma_{n+1}(H) / sigma_1(H)`; zero when `H = 0`.
    pub tail_singular_ratio: f64,
    pub max_imag: f64,
    pub max_error: f64,
    pub spectral_radius: f64,
    pub predicted_radius: f64,
    pub passed: bool,
}

pub fn iteration_spectrum_check(
    sys: &BlockSystem,
    alpha: f64,
    omega: f64,
) -> Result<IterationSpectrumCheck> {
    let n = sys.n();
    let ts = transform(sys, omega)?;
    let h = dense_iteration_matrix(&ts, alpha)?;

    let mut sv: Vec<f64> = h.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let tail_singular_ratio = if sv[0] > 0.0 { sv[n] / sv[0] } else { 0.0 };

    let eig = eigenvalues(&h);
    let max_imag = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let spectral_radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut got: Vec<f64> = eig.iter().map(|z| z.re).collect();
    let mut expect: Vec<f64> = vec![0.0; n];
    expect.extend(
        mapped_mu(sys, omega)?
            .iter()
            .map(|mu| 1.0 - (1.0 + mu * mu) / alpha),
    );
    let predicted_radius = expect.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let max_error = multiset_distance(&mut got, &mut expect);
    Ok(IterationSpectrumCheck {
        n,
        alpha,
        omega,
        tail_singular_ratio,
        max_imag,
        max_error,
        spectral_radius,
        predicted_radius,
        passed: tail_singular_ratio < 1e-10
            && max_imag <= SPECTRUM_TOL
            && max_error <= SPECTRUM_TOL,
    })
}

/// Corollary 1: `M^{-1} A` has eigenvalue 1 at least `n` times and the rest
/// real, positive, equal to `(1 + mu_i^2) / alpha`.
#[derive(Debug, Clone, Serialize)]
pub struct PrecondSpectrumCheck {
    pub n: usize,
    pub alpha: f64,
    pub omega: f64,
    /// Eigenvalues within `SPECTRUM_TOL` of 1.
    pub unit_count: usize,
    pub min_real: f64,
    pub max_imag: f64,
    pub max_error: f64,
    /// Rayleigh quotients `v^T S^2 v / v^T v` over eigenvectors of the
    /// symmetrized pencil; `(1 + xi) / alpha` are the non-unit eigenvalues.
    pub xi: Vec<f64>,
    pub passed: bool,
}

pub fn precond_spectrum_check(
    sys: &BlockSystem,
    alpha: f64,
    omega: f64,
) -> Result<PrecondSpectrumCheck> {
    let n = sys.n();
    let ts = transform(sys, omega)?;
    let gamma = dense_preconditioned_matrix(&ts, alpha)?;
    let eig = eigenvalues(&gamma);
    let max_imag = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let min_real = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let unit_count = eig
        .iter()
        .filter(|z| (**z - Complex::new(1.0, 0.0)).norm() <= SPECTRUM_TOL)
        .count();

    let mut got: Vec<f64> = eig.iter().map(|z| z.re).collect();
    let mut expect: Vec<f64> = vec![1.0; n];
    expect.extend(
        mapped_mu(sys, omega)?
            .iter()
            .map(|mu| (1.0 + mu * mu) / alpha),
    );
    let max_error = multiset_distance(&mut got, &mut expect);

    // eigenvectors of S are L^{-T} u for eigenvectors u of L^{-1} Tt L^{-T}
    let wt = ts.wt.to_dense();
    let l = wt
        .clone()
        .cholesky()
        .ok_or(Error::NotSpd {
            index: 0,
            pivot: f64::NAN,
        })?
        .l();
    let c = l
        .solve_lower_triangular(&ts.tt.to_dense())
        .and_then(|x| l.solve_lower_triangular(&x.transpose()))
        .ok_or_else(|| singular("Wt factor"))?;
    let u = SymmetricEigen::new((&c + c.transpose()) * 0.5).eigenvectors;
    let v = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| singular("Wt factor"))?;
    let s = s_tilde(&ts)?;
    let s2 = &s * &s;
    let mut xi: Vec<f64> = (0..n)
        .map(|j| {
            let col = v.column(j);
            (col.transpose() * &s2 * col)[(0, 0)] / col.norm_squared()
        })
        .collect();
    xi.sort_by(f64::total_cmp);

    Ok(PrecondSpectrumCheck {
        n,
        alpha,
        omega,
        unit_count,
        min_real,
        max_imag,
        max_error,
        xi,
        passed: unit_count >= n
            && min_real > 0.0
            && max_imag <= SPECTRUM_TOL
            && max_error <= SPECTRUM_TOL,
    })
}

/// Theorem 2: `rho(H)` just inside and just outside `alpha > (1 + mu_max^2) / 2`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCheck {
    pub omega: f64,
    pub threshold: f64,
    pub rho_inside: f64,
    pub rho_outside: f64,
    pub passed: bool,
}

pub fn boundary_check(sys: &BlockSystem, omega: f64) -> Result<BoundaryCheck> {
    let mu = mapped_mu(sys, omega)?;
    let mu_max = mu.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let threshold = super::alpha_threshold(mu_max);
    let ts = transform(sys, omega)?;
    let rho_inside = dense_rho_h(&ts, 1.01 * threshold)?;
    let rho_outside = dense_rho_h(&ts, 0.99 * threshold)?;
    Ok(BoundaryCheck {
        omega,
        threshold,
        rho_inside,
        rho_outside,
        passed: rho_inside < 1.0 && rho_outside >= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1, example2};
    use crate::sparse::SparseSym;
    use crate::spectral::{estimate, optimal_rho, rho_h, rho_s, GenEigMode};

    fn pair(w: SparseSym, t: SparseSym) -> BlockSystem {
        let n = w.n();
        BlockSystem::new(w, t, vec![1.0; n], vec![0.5; n], "synthetic").unwrap()
    }

    #[test]
    fn zero_tt_gives_zero_h() {
        // W = I, T = omega W with omega = 1 gives Tt = T - W = 0
        let sys = pair(SparseSym::identity(3), SparseSym::identity(3));
        let ts = transform(&sys, 1.0).unwrap();
        assert_eq!(ts.tt.nnz(), 0);
        let h = dense_iteration_matrix(&ts, 1.0).unwrap();
        assert_eq!(h.amax(), 0.0);
        let c = precond_spectrum_check(&sys, 1.5, 1.0).unwrap();
        assert!(c.passed);
        assert!(c.xi.iter().all(|&x| x.abs() < 1e-14));
        let c = iteration_spectrum_check(&sys, 1.0, 1.0).unwrap();
        assert!(c.passed);
    }

    #[test]
    fn block_form_of_h() {
        let ts = transform(&example1(3).unwrap(), 0.8).unwrap();
        let alpha = 1.1;
        let h = dense_iteration_matrix(&ts, alpha).unwrap();
        let s = s_tilde(&ts).unwrap();
        let n = ts.n();
        let b = (DMatrix::identity(n, n) * (alpha - 1.0) - &s * &s) / alpha;
        assert!(h.view((0, 0), (n, 2 * n)).columns(0, n).amax() < 1e-13);
        assert!(h.view((n, 0), (n, n)).amax() < 1e-13);
        assert!((h.view((0, n), (n, n)) - &s).amax() < 1e-12);
        assert!((h.view((n, n), (n, n)) - b).amax() < 1e-12);
    }

    #[test]
    fn theorem1_small() {
        for sys in [example1(4).unwrap(), example2(4).unwrap()] {
            let est = estimate(&sys, GenEigMode::Dense).unwrap();
            let c = iteration_spectrum_check(&sys, est.alpha_opt, est.omega_opt).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn corollary1_example1_m4() {
        let c = precond_spectrum_check(&example1(4).unwrap(), 1.019, 0.657).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.unit_count >= 16);
    }

    #[test]
    fn resonant_alpha_adds_unit_eigenvalues() {
        let sys = example1(3).unwrap();
        let mu = mapped_mu(&sys, 0.9).unwrap();
        let alpha = 1.0 + mu[0] * mu[0];
        let c = precond_spectrum_check(&sys, alpha, 0.9).unwrap();
        assert!(c.unit_count > sys.n());
    }

    #[test]
    fn map_consistency_both_examples() {
        for sys in [example1(6).unwrap(), example2(6).unwrap()] {
            for omega in [0.3, 1.0, 2.7] {
                let c = map_consistency(&sys, omega).unwrap();
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn rho_s_matches_dense_s() {
        let sys = example1(16).unwrap();
        let est = estimate(&sys, GenEigMode::Dense).unwrap();
        let ts = transform(&sys, est.omega_opt).unwrap();
        let dense = spectral_radius(&s_tilde(&ts).unwrap());
        assert!((dense - rho_s(est.eta_min, est.eta_max, est.omega_opt)).abs() < 1e-8);
    }

    #[test]
    fn rho_h_matches_dense_at_optimum() {
        let sys = example1(8).unwrap();
        let est = estimate(&sys, GenEigMode::Dense).unwrap();
        let formula = rho_h(est.mu_min, est.mu_max, est.alpha_opt);
        assert!((formula - optimal_rho(est.mu_min, est.mu_max)).abs() < 1e-12);
        let ts = transform(&sys, est.omega_opt).unwrap();
        assert!((dense_rho_h(&ts, est.alpha_opt).unwrap() - formula).abs() < 1e-8);
    }

    #[test]
    fn squared_spectrum_matches_full_h() {
        let sys = example2(4).unwrap();
        for omega in [0.5, 1.3] {
            let ts = transform(&sys, omega).unwrap();
            let sq = SquaredSpectrum::new(&ts).unwrap();
            for alpha in [0.7, 1.0, 1.25, 2.0] {
                let full = dense_rho_h(&ts, alpha).unwrap();
                assert!((sq.rho_h(alpha) - full).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_example1_m4() {
        let sys = example1(4).unwrap();
        let est = estimate(&sys, GenEigMode::Dense).unwrap();
        assert!(boundary_check(&sys, est.omega_opt).unwrap().passed);
    }

    #[test]
    fn size_guard() {
        let big = SparseSym::identity(DENSE_LIMIT + 1);
        let sys = pair(big.clone(), big);
        let ts = transform(&sys, 1.0).unwrap();
        assert!(matches!(
            dense_iteration_matrix(&ts, 1.0),
            Err(Error::SizeGuard { .. })
        ));
    }
}
