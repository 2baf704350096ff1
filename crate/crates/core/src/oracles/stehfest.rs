//! Gaver-Stehfest inversion.

use crate::error::{FptError, Result};
use crate::quad::KahanSum;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Weights `V_1..V_n` for even `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n.is_multiple_of(2) && n >= 2, "Stehfest order must be even");
    let h = n / 2;
    (1..=n)
        .map(|k| {
            let mut s = 0.0;
            for j in k.div_ceil(2)..=k.min(h) {
                s += (j as f64).powi(h as i32) * factorial(2 * j)
                    / (factorial(h - j)
                        * factorial(j)
                        * factorial(j - 1)
                        * factorial(k - j)
                        * factorial(2 * j - k));
            }
            if (k + h).is_multiple_of(2) {
                s
            } else {
                -s
            }
        })
        .collect()
}

fn sum<F: FnMut(f64) -> Result<f64>>(f: &mut F, t: f64, n: usize) -> Result<f64> {
    let ln2t = std::f64::consts::LN_2 / t;
    let mut acc = KahanSum::default();
    for (k, v) in stehfest_weights(n).iter().enumerate() {
        acc.add(v * f((k + 1) as f64 * ln2t)?);
    }
    Ok(acc.sum() * ln2t)
}

/// Inverts `f` at `t` with `n` terms. Returns the value and `|S_n - S_{n-2}|`;
/// fails with an instability error when that gap exceeds `tol * |S_n|`.
pub fn stehfest_invert<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    t: f64,
    n: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(FptError::InvalidConfig(format!(
            "Stehfest order must be even and >= 4, got {n}"
        )));
    }
    let hi = sum(&mut f, t, n)?;
    let lo = sum(&mut f, t, n - 2)?;
    let gap = (hi - lo).abs();
    if !(gap <= tol * hi.abs()) {
        return Err(FptError::Instability {
            terms: n,
            discrepancy: gap / hi.abs(),
            tolerance: tol,
        });
    }
    Ok((hi, gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_zero() {
        for n in [4, 8, 14, 18] {
            let w = stehfest_weights(n);
            let s: f64 = w.iter().sum();
            assert!(s.abs() < 1e-6 * w.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
        assert_eq!(stehfest_weights(4), vec![-2.0, 26.0, -48.0, 24.0]);
    }

    #[test]
    fn constant_function() {
        let (v, _) = stehfest_invert(|l| Ok(1.0 / l), 3.0, 14, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exponential() {
        for t in [0.5, 1.0, 5.0] {
            // Fourteen terms in double precision resolve e^{-t} to about 5e-5.
            let (v, _) = stehfest_invert(|l| Ok(1.0 / (l + 1.0)), t, 14, f64::INFINITY).unwrap();
            assert!((v - (-t).exp()).abs() < 1e-4, "t={t}: {v}");
        }
    }

    #[test]
    fn instability_reported() {
        let r = stehfest_invert(|l| Ok((l * 1e3).sin() / l), 1.0, 14, 1e-6);
        assert!(matches!(r, Err(FptError::Instability { .. })));
    }
}
