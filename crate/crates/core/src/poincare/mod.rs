//! Fractional Poincare-type constants: Rayleigh-quotient estimates on unions
//! of intervals, analytic lower bounds, the finite-ball counterexample and
//! line-section certificates for planar domains.

mod rayleigh;
mod sections;

use serde::{Deserialize, Serialize};

use crate::constants::CriticalParams;
use crate::error::{require, Result};
use crate::funcspace::line::gagliardo_1d;
use crate::funcspace::norms::{lq_norm, lq_norm_1d, lq_norm_pow_1d};
use crate::funcspace::profile::{PiecewiseFunction1D, QuadratureSpec, RadialProfile};
use crate::funcspace::radial::gagliardo_profile;
use crate::funcspace::transforms::Rescale;

pub use rayleigh::{
    augmented_rayleigh, eigen_oracle, rayleigh_estimate, rayleigh_estimate_with, RayleighConfig, RayleighEstimate,
};
pub use sections::{
    ls_sections, uniform_poincare_check, DomainSpec, Graph, SectionFamily, SectionResult, UniformCheck,
};

/// A finite union of disjoint open intervals in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalUnionDomain {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for IntervalUnionDomain {
    type Error = crate::LabError;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<IntervalUnionDomain> for Vec<(f64, f64)> {
    fn from(d: IntervalUnionDomain) -> Self {
        d.intervals
    }
}

impl IntervalUnionDomain {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        require(!intervals.is_empty(), || "domain has no intervals".to_string())?;
        for (i, &(a, b)) in intervals.iter().enumerate() {
            require(a.is_finite() && b.is_finite() && a < b, || {
                format!("interval {i} = ({a}, {b}) is empty or unbounded")
            })?;
        }
        for (i, w) in intervals.windows(2).enumerate() {
            require(w[1].0 > w[0].1, || {
                format!("intervals {i} and {} overlap or touch", i + 1)
            })?;
        }
        Ok(Self { intervals })
    }

    /// `count` intervals of length `len` separated by gaps `gap`, from 0.
    pub fn periodic(count: usize, len: f64, gap: f64) -> Result<Self> {
        require(count >= 1, || "need at least one interval".to_string())?;
        Self::new((0..count).map(|k| (k as f64 * (len + gap), k as f64 * (len + gap) + len)).collect())
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.intervals.windows(2).map(|w| w[1].0 - w[0].1).collect()
    }

    /// Smallest gap between consecutive intervals (`inf` for one interval).
    pub fn m(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest gap between consecutive intervals (`inf` for one interval).
    pub fn m_max(&self) -> f64 {
        let g = self.gaps();
        if g.is_empty() { f64::INFINITY } else { g.into_iter().fold(0.0, f64::max) }
    }

    /// Longest interval.
    pub fn big_m(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Shortest bounded complementary interval.
    pub fn m1(&self) -> f64 {
        self.m()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals.last().unwrap().1)
    }

    pub fn diameter(&self) -> f64 {
        let (a, b) = self.span();
        b - a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| x > a && x < b)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        require(c > 0.0, || format!("scale must be positive, got {c}"))?;
        Self::new(self.intervals.iter().map(|&(a, b)| (c * a, c * b)).collect())
    }
}

/// Lower bound for `inf [u]^p / ||u||_p^p` over functions supported in the
/// union. A point of an interval sees the complementary piece `g` next to it
/// within distance `M + G` for any `G <= g`, giving `G / (M + G)^{1 + sp}`;
/// `G = min(g, M / sp)` is the best choice and end rays count as `g = inf`.
/// The bound is the smallest over intervals of the better side. For equal
/// gaps `m <= M / sp` it equals `m / (M + m)^{1 + sp}`.
pub fn analytic_lower_bound_1d(domain: &IntervalUnionDomain, s: f64, p: f64) -> Result<f64> {
    require(domain.intervals().len() >= 2, || {
        "the gap bound needs at least two intervals; use strong_fp_bound for one".to_string()
    })?;
    require(s > 0.0 && s < 1.0 && p >= 1.0, || format!("need 0 < s < 1 <= p, got s = {s}, p = {p}"))?;
    let sp = s * p;
    let big_m = domain.big_m();
    let side = |g: f64| {
        let g = g.min(big_m / sp);
        g / (big_m + g).powf(1.0 + sp)
    };
    let gaps = domain.gaps();
    let k = domain.intervals().len();
    let bound = (0..k)
        .map(|i| {
            let left = if i == 0 { f64::INFINITY } else { gaps[i - 1] };
            let right = if i + 1 == k { f64::INFINITY } else { gaps[i] };
            side(left).max(side(right))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(bound)
}

/// `(2 / sp) (2 / L)^{sp}`: the exterior kernel at the centre of a single
/// interval of length `L` bounds the quotient from below.
pub fn single_interval_bound(len: f64, s: f64, p: f64) -> f64 {
    let sp = s * p;
    2.0 / sp * (2.0 / len).powf(sp)
}

/// A ball `(centre - R, centre + R)` on the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball1D {
    pub center: f64,
    pub radius: f64,
}

impl Ball1D {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        require(radius > 0.0 && radius.is_finite() && center.is_finite(), || {
            format!("ball needs a positive finite radius, got {radius}")
        })?;
        Ok(Self { center, radius })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    /// `int_B |x - y|^{-1-sigma} dy` for `x` outside the ball.
    pub fn kernel_mass(&self, x: f64, sigma: f64) -> f64 {
        let (a, b) = self.bounds();
        let (near, far) = if x <= a { (a - x, b - x) } else { (x - b, x - a) };
        (near.powf(-sigma) - far.powf(-sigma)) / sigma
    }

    fn check_disjoint(&self, domain: &IntervalUnionDomain) -> Result<()> {
        let (a, b) = self.bounds();
        let clash = domain.intervals().iter().any(|&(c, d)| c < b && a < d);
        require(!clash, || "ball overlaps the domain".to_string())
    }
}

/// `diam(Omega u B)^{1 + sigma} / |B|`.
pub fn strong_fp_bound(domain: &IntervalUnionDomain, ball: &Ball1D, sigma: f64) -> Result<f64> {
    require(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    ball.check_disjoint(domain)?;
    let (a, b) = domain.span();
    let (c, d) = ball.bounds();
    let diam = b.max(d) - a.min(c);
    Ok(diam.powf(1.0 + sigma) / (2.0 * ball.radius))
}

/// Both sides of `int |u|^p <= bound * int_Omega int_B |u(x) - u(y)|^p / |x - y|^{1 + sigma}`.
#[derive(Debug, Clone, Serialize)]
pub struct StrongFpCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Evaluates both sides for a function supported in the domain.
pub fn verify_strong_fp(
    u: &PiecewiseFunction1D,
    domain: &IntervalUnionDomain,
    ball: &Ball1D,
    sigma: f64,
    p: f64,
) -> Result<StrongFpCheck> {
    let bound = strong_fp_bound(domain, ball, sigma)?;
    let (ua, ub) = u.support();
    require(u.breakpoints().iter().all(|&x| x == ua || x == ub || domain.contains(x) || u.eval(x) == 0.0), || {
        "function must vanish outside the domain".to_string()
    })?;
    let lhs = lq_norm_pow_1d(u, p)?;
    // u vanishes on the ball, so the cross term is int |u|^p times the kernel mass
    let x = u.breakpoints();
    let v = u.values();
    let rule = crate::funcspace::engine::legendre(12);
    let mut cross = 0.0;
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        for (t, w) in rule.iter() {
            let val = v[i] + (v[i + 1] - v[i]) * t;
            cross += w * h * val.abs().powf(p) * ball.kernel_mass(x[i] + h * t, sigma);
        }
    }
    let rhs = bound * cross;
    Ok(StrongFpCheck { lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs })
}

#[derive(Debug, Clone, Serialize)]
pub struct FbcRow {
    pub ell: f64,
    pub quotient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FbcScan {
    pub rows: Vec<FbcRow>,
    /// Least-squares slope of `log quotient` against `log ell`.
    pub slope: f64,
    pub expected_slope: f64,
}

/// Rayleigh quotient `[v]^p / ||v||_q^p` of `v = u((x - x_l) / l)` along the
/// grid, `x_l = 2 l e_1`. Radial profiles in `n >= 2` are rescaled about the
/// origin, which changes neither side by translation invariance.
pub fn fbc_decay_scan(
    base: &RadialProfile,
    q: f64,
    params: &CriticalParams,
    ell_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<FbcScan> {
    require(base.support_radius() <= 1.0 + 1e-12, || "base profile must be supported in the unit ball".to_string())?;
    require(!ell_grid.is_empty() && ell_grid.windows(2).all(|w| w[1] > w[0]), || {
        "ell grid must be increasing".to_string()
    })?;
    require(q >= 1.0, || format!("q must be >= 1, got {q}"))?;
    params.require_critical()?;
    let p = params.p();
    let n = params.n();
    let rows: Vec<Result<FbcRow>> = crate::parallel::map_slice(ell_grid, |&ell| {
        let quotient = if n == 1 {
            let v = base.to_line().translate_dilate(2.0 * ell, ell)?;
            gagliardo_1d(&v, params.s(), p, quad)? / lq_norm_1d(&v, q)?.powf(p)
        } else {
            let v = base.translate_dilate(vec![0.0; n as usize], ell)?;
            gagliardo_profile(&v, params, quad)? / lq_norm(&v, q, n)?.powf(p)
        };
        Ok(FbcRow { ell, quotient })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.ell.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.quotient.ln()).collect();
    Ok(FbcScan { slope: fit_slope(&xs, &ys), expected_slope: -params.nf() * p / q, rows })
}

pub(crate) fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_statistics() {
        let d = IntervalUnionDomain::periodic(4, 1.0, 1.0).unwrap();
        assert_eq!((d.m(), d.big_m(), d.m1()), (1.0, 1.0, 1.0));
        assert_eq!(analytic_lower_bound_1d(&d, 0.5, 2.0).unwrap(), 0.25);
        assert!(IntervalUnionDomain::new(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(IntervalUnionDomain::new(vec![(1.0, 1.0)]).is_err());
        let one = IntervalUnionDomain::new(vec![(0.0, 1.0)]).unwrap();
        assert!(analytic_lower_bound_1d(&one, 0.5, 2.0).is_err());
        let thin = IntervalUnionDomain::new(vec![(0.0, 1.0), (1.0 + 1e-9, 2.0), (2.0 + 1e-9, 3.0)]).unwrap();
        assert!(analytic_lower_bound_1d(&thin, 0.5, 2.0).unwrap() < 1e-8);
        // unbounded gaps: the end rays keep the bound positive
        let far = IntervalUnionDomain::new(vec![(0.0, 1.0), (1e9, 1e9 + 1.0)]).unwrap();
        assert!((analytic_lower_bound_1d(&far, 0.5, 2.0).unwrap() - 0.25).abs() < 1e-15);
        let json = serde_json::to_string(&d).unwrap();
        let back: IntervalUnionDomain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn strong_fp_example() {
        let d = IntervalUnionDomain::new(vec![(0.0, 1.0)]).unwrap();
        let b = Ball1D::new(2.5, 0.5).unwrap();
        assert!((strong_fp_bound(&d, &b, 1.0).unwrap() - 9.0).abs() < 1e-14);
        assert!(strong_fp_bound(&d, &Ball1D::new(0.9, 0.5).unwrap(), 1.0).is_err());
        let u = PiecewiseFunction1D::tent_sum(&[(0.5, 0.4, 1.0)]).unwrap();
        let c = verify_strong_fp(&u, &d, &b, 1.0, 2.0).unwrap();
        assert!(c.holds && c.slack > 0.0);
    }

    #[test]
    fn ball_kernel_mass() {
        let b = Ball1D::new(2.5, 0.5).unwrap();
        // int_2^3 (y - 1)^{-2} dy = 1 - 1/2
        assert!((b.kernel_mass(1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((b.kernel_mass(4.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fbc_slope_exact_for_line() {
        let params = CriticalParams::critical(1, 0.5).unwrap();
        let base = RadialProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.6, 0.0]).unwrap();
        let scan = fbc_decay_scan(&base, 4.0, &params, &[1.0, 2.0, 4.0, 8.0], &QuadratureSpec::default()).unwrap();
        assert!((scan.slope + 0.5).abs() < 1e-6, "{}", scan.slope);
        assert!(scan.rows.windows(2).all(|w| w[1].quotient < w[0].quotient));
    }
}
