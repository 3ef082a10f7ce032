//! L^q norms of piecewise-linear representations.

use crate::constants::omega;
use crate::error::{require, Result};
use crate::funcspace::engine::legendre;
use crate::funcspace::profile::{PiecewiseFunction1D, RadialProfile};

/// `int_{x0}^{x1} |u(x)|^q x^m dx` for `u` linear from `a` to `b`, split at a sign change.
fn segment_power(x0: f64, x1: f64, a: f64, b: f64, q: f64, m: u32) -> f64 {
    if a * b < 0.0 {
        let z = x0 + (x1 - x0) * a / (a - b);
        return segment_power(x0, z, a, 0.0, q, m) + segment_power(z, x1, 0.0, b, q, m);
    }
    let (a, b) = (a.abs(), b.abs());
    let h = x1 - x0;
    let (lo, hi) = (a.min(b), a.max(b));
    if hi == 0.0 {
        return 0.0;
    }
    if lo >= 0.5 * hi {
        let mut acc = 0.0;
        for (t, w) in legendre(12).iter() {
            let x = x0 + h * t;
            acc += w * (a + (b - a) * t).powf(q) * x.powi(m as i32);
        }
        return h * acc;
    }
    // x = c0 + c1 v, expanded in powers of v
    let c1 = h / (b - a);
    let c0 = x0 - a * c1;
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        let e = q + j as f64 + 1.0;
        acc += binom * c0.powi((m - j) as i32) * c1.powi(j as i32) * (b.powf(e) - a.powf(e)) / e;
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    acc * c1
}

/// `||u||_q^q = omega_{n-1} int_0^inf r^{n-1} |u(r)|^q dr`.
pub fn lq_norm_pow(u: &RadialProfile, q: f64, n: u32) -> Result<f64> {
    require(q >= 1.0 && q.is_finite(), || format!("exponent q must be >= 1, got {q}"))?;
    require(n >= 1, || "dimension must be >= 1".to_string())?;
    let r = u.radii();
    let v = u.values();
    let sum: f64 = (0..r.len() - 1)
        .map(|i| segment_power(r[i], r[i + 1], v[i], v[i + 1], q, n - 1))
        .sum();
    Ok(omega(n) * sum)
}

/// `(omega_{n-1} int_0^inf r^{n-1} |u(r)|^q dr)^{1/q}`.
pub fn lq_norm(u: &RadialProfile, q: f64, n: u32) -> Result<f64> {
    Ok(lq_norm_pow(u, q, n)?.powf(1.0 / q))
}

/// `int |u|^q dx` over the line.
pub fn lq_norm_pow_1d(u: &PiecewiseFunction1D, q: f64) -> Result<f64> {
    require(q >= 1.0 && q.is_finite(), || format!("exponent q must be >= 1, got {q}"))?;
    let x = u.breakpoints();
    let v = u.values();
    Ok((0..x.len() - 1).map(|i| segment_power(x[i], x[i + 1], v[i], v[i + 1], q, 0)).sum())
}

pub fn lq_norm_1d(u: &PiecewiseFunction1D, q: f64) -> Result<f64> {
    Ok(lq_norm_pow_1d(u, q)?.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_like_profile() {
        let u = RadialProfile::new(vec![0.0, 1.0, 1.0 + 1e-12], vec![1.0, 1.0, 0.0]).unwrap();
        assert!((lq_norm(&u, 2.0, 1).unwrap() - 2f64.sqrt()).abs() < 1e-10);
        let area = lq_norm_pow(&u, 3.0, 2).unwrap();
        assert!((area - std::f64::consts::PI).abs() < 1e-10);
        assert!(lq_norm(&u, 0.5, 1).is_err());
    }

    #[test]
    fn cone_closed_forms() {
        // u = 1 - r on the unit ball: ||u||_q^q = omega_{n-1} B(n, q+1)
        let u = RadialProfile::new(vec![0.0, 0.3, 1.0], vec![1.0, 0.7, 0.0]).unwrap();
        let beta = |a: f64, b: f64| {
            statrs::function::gamma::gamma(a) * statrs::function::gamma::gamma(b)
                / statrs::function::gamma::gamma(a + b)
        };
        for n in 1..=4u32 {
            for &q in &[1.0, 2.0, 2.5, 4.0] {
                let want = omega(n) * beta(n as f64, q + 1.0);
                let got = lq_norm_pow(&u, q, n).unwrap();
                assert!((got - want).abs() < 1e-12 * want, "n={n} q={q}");
            }
        }
    }

    #[test]
    fn sign_change_split() {
        let u = PiecewiseFunction1D::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let w = PiecewiseFunction1D::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        // |w| is three half-tents of height 1 and widths 1, 1/2, 1/2, 1
        let a = lq_norm_pow_1d(&u, 3.0).unwrap();
        let b = lq_norm_pow_1d(&w, 3.0).unwrap();
        assert!((a - 0.5).abs() < 1e-14);
        assert!((b - 0.75).abs() < 1e-14);
    }
}
