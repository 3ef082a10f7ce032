//! Special constants of the critical fractional Sobolev setting: sphere
//! measures, the Bourgain-Brezis-Mironescu constant, the series constant
//! `gamma_{s,n}` with certified truncation, the threshold exponent `alpha*`
//! and the truncated exponential.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{require, LabError, Result};

/// Relative tolerance for treating `s * p == n` as exact.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

/// The exponent triple `(n, s, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalParams {
    n: u32,
    s: f64,
    p: f64,
}

impl CriticalParams {
    /// General (not necessarily critical) parameters.
    pub fn new(n: u32, s: f64, p: f64) -> Result<Self> {
        require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
        require(s > 0.0 && s < 1.0, || format!("order s must lie in (0,1), got {s}"))?;
        require(p > 1.0 && p.is_finite(), || format!("exponent p must exceed 1, got {p}"))?;
        Ok(Self { n, s, p })
    }

    /// Critical parameters with `p = n / s`.
    pub fn critical(n: u32, s: f64) -> Result<Self> {
        require(s > 0.0 && s < 1.0, || format!("order s must lie in (0,1), got {s}"))?;
        Self::new(n, s, n as f64 / s)
    }

    /// Critical parameters with `s = n / p`; needs `p > n`.
    pub fn critical_from_p(n: u32, p: f64) -> Result<Self> {
        require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
        require(p > n as f64, || {
            format!("critical relation s = n/p needs p > n so that s < 1 (n = {n}, p = {p})")
        })?;
        Self::new(n, n as f64 / p, p)
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn nf(&self) -> f64 {
        self.n as f64
    }
    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    /// Hoelder conjugate `p / (p - 1)`, equal to `n / (n - s)` at criticality.
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn is_critical(&self) -> bool {
        (self.sp() - self.nf()).abs() <= CRITICAL_REL_TOL * self.nf()
    }

    pub fn require_critical(&self) -> Result<()> {
        require(self.is_critical(), || {
            format!(
                "critical relation s*p = n violated: s*p = {} but n = {}",
                self.sp(),
                self.n
            )
        })
    }

    /// Default truncation order `ceil(p - 1)`.
    pub fn default_order(&self) -> u32 {
        ((self.p - 1.0 - 1e-9).ceil() as u32).max(1)
    }
}

/// Truncated series value together with its certified error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

/// `n!` as a float (exact up to 22!).
fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Measure of the unit sphere `S^{n-1}`, `n pi^{n/2} / Gamma(1 + n/2)`.
///
/// Evaluated by the two-step recurrence `|S^{n-1}| = 2 pi |S^{n-3}| / (n - 2)`
/// so that the low dimensions come out exact to rounding.
pub fn surface_measure(n: i64) -> Result<f64> {
    require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
    let mut m = if n % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut d = if n % 2 == 1 { 1 } else { 2 };
    while d < n {
        d += 2;
        m *= 2.0 * PI / (d - 2) as f64;
    }
    Ok(m)
}

pub(crate) fn omega(n: u32) -> f64 {
    surface_measure(n as i64).expect("n >= 1")
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: u32) -> f64 {
    omega(n) / n as f64
}

/// `K(p, n) = 2 pi^{(n-1)/2} Gamma((p+1)/2) / (p Gamma((n+p)/2))`.
pub fn bbm_constant(p: f64, n: i64) -> Result<f64> {
    require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
    require(p >= 1.0 && p.is_finite(), || format!("exponent p must be >= 1, got {p}"))?;
    let nf = n as f64;
    let a = 0.5 * (p + 1.0);
    let b = 0.5 * (nf + p);
    let ratio = if b < 100.0 {
        gamma(a) / gamma(b)
    } else {
        (ln_gamma(a) - ln_gamma(b)).exp()
    };
    Ok(2.0 * PI.powf(0.5 * (nf - 1.0)) * ratio / p)
}

const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Euler-Maclaurin evaluation of `sum_{m >= 0} (x0 + m)^{-sigma}` for
/// `sigma > 1`, `x0 > 0`. Returns `(value, remainder_bound)`; the remainder of
/// a completely monotone summand is bounded by the first omitted correction.
fn power_tail(sigma: f64, x0: f64, corrections: usize) -> (f64, f64) {
    let mut value = x0.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * x0.powf(-sigma);
    // rising factorial (sigma)_{2j-1} and (2j)!
    let mut rising = sigma;
    let mut fact = 2.0;
    let mut xpow = x0.powf(-sigma - 1.0);
    let mut next = 0.0;
    for j in 1..=corrections.min(BERNOULLI.len() - 1) + 1 {
        let term = BERNOULLI[j - 1] / fact * rising * xpow;
        if j > corrections {
            next = term.abs();
            break;
        }
        value += term;
        let k = 2.0 * j as f64;
        rising *= (sigma + k - 1.0) * (sigma + k);
        fact *= (k + 1.0) * (k + 2.0);
        xpow /= x0 * x0;
    }
    (value, 2.0 * next)
}

/// Hurwitz zeta `zeta(sigma, a) = sum_{k >= 0} (k + a)^{-sigma}`, `sigma > 1`.
pub fn hurwitz_zeta(sigma: f64, a: f64) -> Result<f64> {
    require(sigma > 1.0, || format!("Hurwitz zeta needs sigma > 1, got {sigma}"))?;
    require(a > 0.0, || format!("Hurwitz zeta needs a > 0, got {a}"))?;
    let direct = 24usize;
    let head: f64 = (0..direct).map(|k| (k as f64 + a).powf(-sigma)).sum();
    Ok(head + power_tail(sigma, a + direct as f64, 8).0)
}

/// Term `(n+k-1)! / (k! (n+2k)^p)` at `k = 0`.
fn first_term(n: u32, p: f64) -> f64 {
    factorial(n - 1) / (n as f64).powf(p)
}

/// Partial sum of the `gamma_{s,n}` series over the first `terms` terms
/// (without the prefactor), generated by the ratio recurrence.
pub fn gamma_partial_sum(n: u32, p: f64, terms: usize) -> f64 {
    let nf = n as f64;
    let mut t = first_term(n, p);
    let mut sum = 0.0;
    for k in 0..terms {
        sum += t;
        let kf = k as f64;
        t *= (nf + kf) / (kf + 1.0) * ((nf + 2.0 * kf) / (nf + 2.0 * kf + 2.0)).powf(p);
    }
    sum
}

/// Prefactor `2 omega_{n-1}^2 Gamma(p+1) / n!`.
pub fn gamma_prefactor(n: u32, p: f64) -> f64 {
    let w = omega(n);
    let g = if p < 170.0 { gamma(p + 1.0) } else { ln_gamma(p + 1.0).exp() };
    2.0 * w * w * g / factorial(n)
}

/// Coefficients of `prod_{i=1}^{n-1} (m + i - n/2)` in increasing powers of `m`.
/// With `m = k + n/2` the product equals `(n+k-1)!/k!`.
fn shifted_rising_coefficients(n: u32) -> Vec<f64> {
    let mut c = vec![1.0];
    let half = n as f64 / 2.0;
    for i in 1..n {
        let shift = i as f64 - half;
        let mut next = vec![0.0; c.len() + 1];
        for (j, &cj) in c.iter().enumerate() {
            next[j] += cj * shift;
            next[j + 1] += cj;
        }
        c = next;
    }
    c
}

const SERIES_MAX_TERMS: usize = 1 << 20;

fn gamma_series_with<F: Fn(f64, f64) -> bool>(n: u32, p: f64, accept: F) -> Result<SeriesResult> {
    require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
    require(p > 1.0 && p.is_finite(), || format!("exponent p must exceed 1, got {p}"))?;
    require(p > n as f64, || {
        format!("series for gamma diverges unless p > n (n = {n}, p = {p})")
    })?;
    let pref = gamma_prefactor(n, p);
    let coeffs = shifted_rising_coefficients(n);
    let half = n as f64 / 2.0;
    let scale = 2f64.powf(-p);
    let mut terms = 32usize;
    loop {
        let head = gamma_partial_sum(n, p, terms);
        let x0 = terms as f64 + half;
        let mut tail = 0.0;
        let mut bound = 0.0;
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (v, r) = power_tail(p - j as f64, x0, 8);
            tail += c * v;
            bound += c.abs() * r;
        }
        let value = pref * (head + scale * tail);
        // rounding in the recurrence grows roughly linearly with the term count
        let rounding = pref * head * f64::EPSILON * (4.0 + terms as f64).sqrt() * 4.0;
        let tail_bound = pref * scale * bound + rounding;
        if accept(value, tail_bound) {
            return Ok(SeriesResult { value, terms_used: terms, tail_bound });
        }
        if terms >= SERIES_MAX_TERMS {
            return Err(LabError::NonConvergence(format!(
                "gamma series for n = {n}, p = {p} did not reach tolerance within {terms} terms \
                 (bound {tail_bound:.3e})"
            )));
        }
        terms *= 2;
    }
}

/// `gamma_{s,n} = (2 omega^2 Gamma(p+1)/n!) sum_k (n+k-1)!/(k!(n+2k)^p)` with
/// absolute error bound `tail_bound <= tol`.
///
/// The head of the series is summed term by term. The tail is written, via
/// `(n+k-1)!/k! = P(k + n/2)` for a polynomial `P` of degree `n-1`, as a
/// combination of Hurwitz-type power sums, each evaluated by Euler-Maclaurin
/// with a certified remainder.
pub fn gamma_series(n: i64, p: f64, tol: f64) -> Result<SeriesResult> {
    require((1..=20).contains(&n), || format!("dimension n must lie in 1..=20, got {n}"))?;
    require(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
    gamma_series_with(n as u32, p, |_, b| b <= tol)
}

/// Like [`gamma_series`] but with a relative tolerance.
pub fn gamma_series_rel(n: u32, p: f64, rel_tol: f64) -> Result<SeriesResult> {
    require(rel_tol > 0.0, || format!("tolerance must be positive, got {rel_tol}"))?;
    gamma_series_with(n, p, |v, b| b <= rel_tol * v.abs())
}

/// Internal relative tolerance for constants derived from `gamma_{s,n}`.
pub const GAMMA_REL_TOL: f64 = 1e-13;

/// `gamma_{s,n}` for critical parameters.
pub fn gamma_constant(params: &CriticalParams) -> Result<f64> {
    Ok(gamma_series_rel(params.n(), params.p(), GAMMA_REL_TOL)?.value)
}

/// `alpha*_{s,n} = n gamma_{s,n}^{s/(n-s)}`.
pub fn alpha_star(params: &CriticalParams) -> Result<f64> {
    params.require_critical()?;
    let g = gamma_constant(params)?;
    let nf = params.nf();
    let s = params.s();
    Ok(nf * g.powf(s / (nf - s)))
}

fn check_psi_args(k: i64, z: f64) -> Result<()> {
    require(k >= 1, || format!("order k must be >= 1, got {k}"))?;
    require(z >= 0.0 && !z.is_nan(), || format!("argument z must be >= 0, got {z}"))
}

/// Ascending series `sum_{j >= k} z^j / j!` (exact in the small-`z` regime).
fn psi_series(k: u32, z: f64) -> f64 {
    let mut term = (f64::from(k) * z.ln() - ln_gamma(f64::from(k) + 1.0)).exp();
    if z == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut j = k;
    loop {
        sum += term;
        j += 1;
        term *= z / f64::from(j);
        if term <= f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    sum
}

/// Truncated exponential `Psi_k(z) = e^z - sum_{j<k} z^j/j!` for `z >= 0`.
pub fn truncated_exp(k: i64, z: f64) -> Result<f64> {
    check_psi_args(k, z)?;
    Ok(psi(k as u32, z))
}

pub(crate) fn psi(k: u32, z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if k == 1 && z < 0.5 {
        return z.exp_m1();
    }
    if z < 0.5 * f64::from(k) {
        return psi_series(k, z);
    }
    let mut partial = 0.0;
    let mut term = 1.0;
    for j in 0..k {
        partial += term;
        term *= z / f64::from(j + 1);
    }
    z.exp() - partial
}

/// Natural logarithm of `Psi_k(z)`, finite even where `e^z` overflows.
pub fn ln_truncated_exp(k: i64, z: f64) -> Result<f64> {
    check_psi_args(k, z)?;
    Ok(ln_psi(k as u32, z))
}

pub(crate) fn ln_psi(k: u32, z: f64) -> f64 {
    if z == 0.0 {
        return f64::NEG_INFINITY;
    }
    if z < 0.5 * f64::from(k) {
        return psi_series(k, z).ln();
    }
    if z < 600.0 {
        return psi(k, z).ln();
    }
    let lz = z.ln();
    let removed: f64 = (0..k)
        .map(|j| (f64::from(j) * lz - ln_gamma(f64::from(j) + 1.0) - z).exp())
        .sum();
    z + (-removed).ln_1p()
}

/// `C(k, M) = sup_{0 < z <= M} Psi_k(z) / z^k = Psi_k(M) / M^k`
/// (the ratio `sum_{j>=k} z^{j-k}/j!` is increasing).
pub fn psi_polynomial_bound(k: i64, m: f64) -> Result<f64> {
    require(k >= 1, || format!("order k must be >= 1, got {k}"))?;
    require(m > 0.0 && m.is_finite(), || format!("bound radius M must be positive, got {m}"))?;
    let k = k as u32;
    if m <= 50.0 {
        let mut term = (-ln_gamma(f64::from(k) + 1.0)).exp();
        let mut sum = 0.0;
        let mut j = k;
        loop {
            sum += term;
            j += 1;
            term *= m / f64::from(j);
            if term <= f64::EPSILON * 0.25 * sum && f64::from(j) > m {
                break;
            }
        }
        Ok(sum)
    } else {
        Ok((ln_psi(k, m) - f64::from(k) * m.ln()).exp())
    }
}

/// `(1 - s) gamma_{s,n} / K(n/s, n)`, which tends to `omega_{n-1}` as `s -> 1`.
pub fn asymptotic_ratio(s: f64, n: i64) -> Result<f64> {
    require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
    let params = CriticalParams::critical(n as u32, s)?;
    let g = gamma_constant(&params)?;
    Ok((1.0 - s) * g / bbm_constant(params.p(), n)?)
}
