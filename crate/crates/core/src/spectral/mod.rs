//! Spectral quantities behind parameter selection for SSTS.
//!
//! The generalized eigenvalues `eta` of the pair `(W, T)` are taken in the
//! orientation `T v = eta W v`. For `omega > 0` every eigenvalue of
//! `S = Wt^{-1} Tt` is `mu = (omega eta - 1) / (omega + eta)`, and the SSTS
//! iteration matrix has `n` zero eigenvalues plus `1 - (1 + mu_i^2) / alpha`.
//! From that:
//!
//! * convergence iff `alpha > (1 + mu_max^2) / 2`,
//! * `alpha_opt = (2 + mu_min^2 + mu_max^2) / 2`,
//! * `omega_opt` minimizes `mu_max` and depends on `eta_min`, `eta_max` only,
//! * `rho_opt = (mu_max^2 - mu_min^2) / (2 + mu_min^2 + mu_max^2)`.

pub mod dense;
pub mod lanczos;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::BlockSystem;
use crate::sparse::SparseSym;
use crate::spd::SpdFactorization;

use self::lanczos::{lanczos, Ends, RitzSet};

/// Largest `n` handled by dense eigensolves.
pub const DENSE_LIMIT: usize = 4096;

pub fn mu_from_eta(eta: f64, omega: f64) -> f64 {
    (omega * eta - 1.0) / (omega + eta)
}

/// Spectral radius of `Wt^{-1} Tt` from the extreme generalized eigenvalues.
pub fn rho_s(eta_min: f64, eta_max: f64, omega: f64) -> f64 {
    let low = (1.0 - omega * eta_min) / (omega + eta_min);
    let high = (omega * eta_max - 1.0) / (omega + eta_max);
    low.max(high)
}

/// The `omega` that minimizes `rho_s`.
pub fn optimal_omega(eta_min: f64, eta_max: f64) -> Result<f64> {
    let sum = eta_min + eta_max;
    if sum <= 0.0 {
        return Err(Error::DegeneratePair);
    }
    let root = ((1.0 + eta_min * eta_min) * (1.0 + eta_max * eta_max)).sqrt();
    Ok((1.0 - eta_min * eta_max + root) / sum)
}

pub fn optimal_alpha(mu_min: f64, mu_max: f64) -> f64 {
    (2.0 + mu_min * mu_min + mu_max * mu_max) / 2.0
}

/// Spectral radius of the SSTS iteration matrix.
pub fn rho_h(mu_min: f64, mu_max: f64, alpha: f64) -> f64 {
    let a = (1.0 - (1.0 + mu_min * mu_min) / alpha).abs();
    let b = (1.0 - (1.0 + mu_max * mu_max) / alpha).abs();
    a.max(b)
}

/// Convergence requires `alpha` strictly above this value.
pub fn alpha_threshold(mu_max: f64) -> f64 {
    (1.0 + mu_max * mu_max) / 2.0
}

/// Convergence factor at `alpha_opt`.
pub fn optimal_rho(mu_min: f64, mu_max: f64) -> f64 {
    let (a, b) = (mu_min * mu_min, mu_max * mu_max);
    (b - a) / (2.0 + a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigMode {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    pub max_steps: usize,
    pub refine_steps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_steps: 120,
            refine_steps: 120,
            tol: 1e-10,
            seed: 0x5575,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenEigMode {
    Dense,
    Lanczos(LanczosConfig),
    /// Dense up to `threshold` unknowns, Lanczos beyond.
    Auto {
        threshold: usize,
    },
}

impl Default for GenEigMode {
    fn default() -> Self {
        GenEigMode::Auto { threshold: 1024 }
    }
}

/// Generalized eigenvalues of `T v = eta W v`.
#[derive(Debug, Clone)]
pub struct GenEigSpectrum {
    pub eta_min: f64,
    pub eta_max: f64,
    /// Every eigenvalue (dense) or every Ritz value (Lanczos), ascending.
    pub values: Vec<f64>,
    pub mode: EigMode,
}

fn check_pair(w: &SparseSym, t: &SparseSym) -> Result<()> {
    if w.n() != t.n() {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            found: t.n(),
        });
    }
    Ok(())
}

/// All eigenvalues of `T v = eta W v` through `W = L L^T` and the symmetric
/// matrix `L^{-1} T L^{-T}`.
pub fn dense_gen_eigenvalues(w: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = w.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::SizeGuard {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let chol = w.clone().cholesky().ok_or(Error::NotSpd {
        index: 0,
        pivot: f64::NAN,
    })?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(t)
        .expect("Cholesky factor has a positive diagonal");
    let c = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor has a positive diagonal");
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn dense_spectrum(w: &SparseSym, t: &SparseSym) -> Result<GenEigSpectrum> {
    // sparse factorization first, for an SPD diagnostic with a pivot index
    SpdFactorization::factorize(w)?;
    let values = dense_gen_eigenvalues(&w.to_dense(), &t.to_dense())?;
    Ok(GenEigSpectrum {
        eta_min: values[0],
        eta_max: values[values.len() - 1],
        values,
        mode: EigMode::Dense,
    })
}

fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Shift-invert Lanczos around `sigma` on the reduced pencil. `shifted` is
/// the factorization of `s (T - sigma W)` with `s = 1` below the spectrum
/// and `s = -1` above, so the operator `L^T shifted^{-1} L` is SPD with
/// eigenvalues `1 / |eta - sigma|`.
fn shift_invert(fw: &SpdFactorization, shifted: &SpdFactorization, cfg: &LanczosConfig) -> RitzSet {
    let op = |x: &[f64]| {
        let mut y = fw.lower_mul(x);
        shifted.solve_in_place(&mut y);
        fw.lower_t_mul(&y)
    };
    lanczos(
        op,
        &start_vector(fw.n(), cfg.seed ^ 0x9e37),
        cfg.refine_steps,
        cfg.tol,
        Ends::High,
    )
}

/// Factor `sign * (T - sigma W)`, moving `sigma` away from `anchor` until
/// the matrix is SPD, which certifies `sigma` lies outside the spectrum.
fn certified_shift(
    w: &SparseSym,
    t: &SparseSym,
    anchor: f64,
    first_gap: f64,
    below: bool,
) -> Result<(f64, SpdFactorization)> {
    let mut gap = first_gap;
    for _ in 0..60 {
        let sigma = if below { anchor - gap } else { anchor + gap };
        let sign = if below { 1.0 } else { -1.0 };
        let shifted = SparseSym::lin_comb(sign, t, -sign * sigma, w)?;
        if let Ok(f) = SpdFactorization::factorize(&shifted) {
            return Ok((sigma, f));
        }
        gap *= 4.0;
    }
    Err(Error::InvalidParameter(
        "could not place a shift outside the generalized spectrum".into(),
    ))
}

fn lanczos_spectrum(w: &SparseSym, t: &SparseSym, cfg: &LanczosConfig) -> Result<GenEigSpectrum> {
    let n = w.n();
    let fw = SpdFactorization::factorize(w)?;
    let op = |x: &[f64]| {
        let mut y = x.to_vec();
        fw.backward_in_place(&mut y);
        let mut z = t.spmv(&y).expect("sizes checked");
        fw.forward_in_place(&mut z);
        z
    };
    let plain = lanczos(
        op,
        &start_vector(n, cfg.seed),
        cfg.max_steps,
        cfg.tol,
        Ends::Both,
    );
    let mut values = plain.values.clone();

    let (mut eta_min, lo_bound) = plain.min();
    if !plain.min_converged(cfg.tol) {
        let gap = (2.0 * lo_bound).max(1e-6 * eta_min.abs().max(1e-12));
        let (sigma, shifted) = certified_shift(w, t, eta_min, gap, true)?;
        let si = shift_invert(&fw, &shifted, cfg);
        eta_min = sigma + 1.0 / si.max().0;
    }
    let (mut eta_max, hi_bound) = plain.max();
    if !plain.max_converged(cfg.tol) {
        let gap = (2.0 * hi_bound).max(1e-6 * eta_max.abs().max(1e-12));
        let (sigma, shifted) = certified_shift(w, t, eta_max, gap, false)?;
        let si = shift_invert(&fw, &shifted, cfg);
        eta_max = sigma - 1.0 / si.max().0;
    }
    values.push(eta_min);
    values.push(eta_max);
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(GenEigSpectrum {
        eta_min,
        eta_max,
        values,
        mode: EigMode::Lanczos,
    })
}

/// Extreme generalized eigenvalues of `T v = eta W v`; `W` must be SPD.
pub fn gen_eig_extremes(w: &SparseSym, t: &SparseSym, mode: GenEigMode) -> Result<GenEigSpectrum> {
    check_pair(w, t)?;
    match mode {
        GenEigMode::Dense => dense_spectrum(w, t),
        GenEigMode::Lanczos(cfg) => lanczos_spectrum(w, t, &cfg),
        GenEigMode::Auto { threshold } => {
            if w.n() <= threshold.min(DENSE_LIMIT) {
                dense_spectrum(w, t)
            } else {
                lanczos_spectrum(w, t, &LanczosConfig::default())
            }
        }
    }
}

/// `(mu_min, mu_max)` at `omega` over the available `eta` values.
///
/// `mu` is increasing in `eta`, so `mu_max` is exact from the extremes.
/// `mu_min` is exact for a dense spectrum; with Ritz values it is the best
/// interior approximation Lanczos produced.
pub fn mu_extremes(spectrum: &GenEigSpectrum, omega: f64) -> (f64, f64) {
    let mu_max = mu_from_eta(spectrum.eta_min, omega)
        .abs()
        .max(mu_from_eta(spectrum.eta_max, omega).abs());
    let mu_min = spectrum
        .values
        .iter()
        .chain([&spectrum.eta_min, &spectrum.eta_max])
        .map(|&eta| mu_from_eta(eta, omega).abs())
        .fold(f64::INFINITY, f64::min);
    (mu_min, mu_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimates {
    pub eta_min: f64,
    pub eta_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub alpha_opt: f64,
    pub omega_opt: f64,
    pub rho_opt: f64,
    pub mode: EigMode,
    /// The `omega` at which `mu_min`, `mu_max` were evaluated.
    pub omega: f64,
}

impl SpectralEstimates {
    pub fn from_spectrum(spectrum: &GenEigSpectrum, omega: Option<f64>) -> Result<Self> {
        let omega_opt = optimal_omega(spectrum.eta_min, spectrum.eta_max)?;
        let omega = omega.unwrap_or(omega_opt);
        let (mu_min, mu_max) = mu_extremes(spectrum, omega);
        Ok(Self {
            eta_min: spectrum.eta_min,
            eta_max: spectrum.eta_max,
            mu_min,
            mu_max,
            alpha_opt: optimal_alpha(mu_min, mu_max),
            omega_opt,
            rho_opt: optimal_rho(mu_min, mu_max),
            mode: spectrum.mode,
            omega,
        })
    }
}

/// `eta` extremes, then `omega_opt`, `mu` extremes at `omega_opt`, `alpha_opt`.
pub fn estimate(sys: &BlockSystem, mode: GenEigMode) -> Result<SpectralEstimates> {
    let spectrum = gen_eig_extremes(&sys.w, &sys.t, mode)?;
    SpectralEstimates::from_spectrum(&spectrum, None)
}
