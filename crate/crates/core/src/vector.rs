//! Dense vector kernels on plain `f64` slices.
//!
//! Every reduction runs in index order so that results are bit-reproducible.

use crate::error::{Error, Result};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= a);
}

/// Concatenate two halves into one stacked vector `(x, y)`.
pub fn stack(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + y.len());
    z.extend_from_slice(x);
    z.extend_from_slice(y);
    z
}

/// Rejects NaN and infinite entries at solver entry points.
pub fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_len<T>(x: &[T], expected: usize) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}

/// Serde adapter for residual histories: non-finite entries are written as
/// `null` and read back as NaN, so diverged runs still round-trip.
pub(crate) mod lossy_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| x.is_finite().then_some(*x))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Neumaier-compensated sum of squares, evaluated independently of `dot`.
    fn compensated_norm(x: &[f64]) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for v in x {
            let term = v * v;
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        (sum + comp).sqrt()
    }

    #[test]
    fn norm_small_cases() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(norm2(&[0.0; 7]), 0.0);
        assert_eq!(norm2(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn norm_matches_compensated_oracle(x in prop::collection::vec(-1e3f64..1e3, 1..400)) {
            let a = norm2(&x);
            let b = compensated_norm(&x);
            prop_assert!((a - b).abs() <= 1e-13 * b.max(1e-300));
        }
    }

    #[test]
    fn finite_check_reports_index() {
        assert!(check_finite(&[1.0, 2.0]).is_ok());
        match check_finite(&[1.0, f64::NAN, 0.0]) {
            Err(Error::NonFinite { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
