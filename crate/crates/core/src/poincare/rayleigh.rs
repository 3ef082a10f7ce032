//! Discrete Rayleigh-quotient minimization on unions of intervals.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{analytic_lower_bound_1d, single_interval_bound, Ball1D, IntervalUnionDomain};
use crate::error::{require, LabError, Result};
use crate::funcspace::engine::{legendre, ExteriorRule, Level, Mesh, PairEngine, Term};
use crate::funcspace::line::{check_order_exponent, LineExterior, UnitKernel};
use crate::funcspace::profile::QuadratureSpec;
use crate::parallel;

/// Gauss points per cell for the `L^q` norm.
const NORM_ORDER: usize = 6;
/// Rows assembled per batch when building the quadratic form.
const ASSEMBLY_BATCH: usize = 64;
/// Terms per parallel chunk for the general energy.
const TERM_CHUNK: usize = 1 << 14;
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Serialize)]
pub struct RayleighConfig {
    /// Cells per interval.
    pub grid_n: usize,
    pub max_iter: usize,
    /// Stop when `||grad R|| ||u|| / R` falls below this.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for RayleighConfig {
    fn default() -> Self {
        Self { grid_n: 128, max_iter: 20_000, tol: 1e-6, restarts: 3, seed: 0 }
    }
}

impl RayleighConfig {
    pub fn with_grid(grid_n: usize) -> Self {
        Self { grid_n, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        require(self.grid_n >= 64, || format!("grid_n must be >= 64, got {}", self.grid_n))?;
        require(self.max_iter >= 1, || "max_iter must be positive".to_string())?;
        require(self.tol > 0.0, || format!("tol must be positive, got {}", self.tol))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RayleighEstimate {
    pub value: f64,
    /// Certified lower bound when one is available (`q = p`).
    pub lower_bound: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Inverse power iteration on the assembled form (`p = q = 2`).
    pub power_check: Option<f64>,
    pub nodes: Vec<f64>,
    pub minimizer: Vec<f64>,
    pub flags: Vec<String>,
}

enum Energy {
    /// `u^T A u` on the free nodes.
    Quadratic(DMatrix<f64>),
    Terms(Vec<Term>),
}

struct NormPoint {
    w: f64,
    l: usize,
    r: usize,
    lam: f64,
}

/// The discrete problem: unknowns are the interior nodes of each interval.
struct Problem {
    mesh: Mesh,
    free: Vec<usize>,
    energy: Energy,
    norm: Vec<NormPoint>,
    p: f64,
    q: f64,
}

/// Ball weight `int_B |x - y|^{-1 - sigma} dy` per cell, one ordering.
struct BallExterior {
    ball: Ball1D,
    sigma: f64,
}

impl ExteriorRule for BallExterior {
    fn visit(&self, mesh: &Mesh, cell: usize, level: Level, f: &mut dyn FnMut(&Term)) {
        let [l, r] = mesh.cells[cell];
        let (a, h) = (mesh.x[l], mesh.h(cell));
        let m = match level {
            Level::High => 16,
            Level::Low => 10,
        };
        for (t, wt) in legendre(m).iter() {
            let w = wt * h * self.ball.kernel_mass(a + h * t, self.sigma);
            f(&Term::two(w, l, 1.0 - t, r, t));
        }
    }
}

fn build_mesh(domain: &IntervalUnionDomain, grid_n: usize) -> Mesh {
    let comps: Vec<Vec<f64>> = domain
        .intervals()
        .iter()
        .map(|&(a, b)| (0..=grid_n).map(|k| a + (b - a) * k as f64 / grid_n as f64).collect())
        .collect();
    Mesh::from_components(&comps)
}

fn norm_points(mesh: &Mesh) -> Vec<NormPoint> {
    let rule = legendre(NORM_ORDER);
    let mut out = Vec::with_capacity(mesh.cells.len() * NORM_ORDER);
    for (c, &[l, r]) in mesh.cells.iter().enumerate() {
        let h = mesh.h(c);
        for (t, w) in rule.iter() {
            out.push(NormPoint { w: w * h, l, r, lam: t });
        }
    }
    out
}

fn free_nodes(mesh: &Mesh) -> Vec<usize> {
    mesh.comps.iter().flat_map(|&(a, b)| a + 1..b).collect()
}

fn assemble_quadratic<E: ExteriorRule>(engine: &PairEngine<'_, UnitKernel, E>, free: &[usize]) -> DMatrix<f64> {
    let mesh = engine.mesh;
    let n = mesh.x.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let rows = mesh.cells.len();
    let mut start = 0;
    while start < rows {
        let end = (start + ASSEMBLY_BATCH).min(rows);
        let batch = parallel::map_range(end - start, |k| {
            let mut out = Vec::new();
            engine.visit_row(start + k, Level::High, None, &mut |t| out.push(*t));
            out
        });
        for terms in batch {
            for t in terms {
                for i in 0..4 {
                    if t.c[i] == 0.0 {
                        continue;
                    }
                    for j in 0..4 {
                        if t.c[j] != 0.0 {
                            a[(t.idx[i], t.idx[j])] += t.w * t.c[i] * t.c[j];
                        }
                    }
                }
            }
        }
        start = end;
    }
    DMatrix::from_fn(free.len(), free.len(), |i, j| a[(free[i], free[j])])
}

impl Problem {
    fn new<E: ExteriorRule>(domain: &IntervalUnionDomain, s: f64, p: f64, q: f64, grid_n: usize, ext: Option<&E>) -> Self {
        let mesh = build_mesh(domain, grid_n);
        let free = free_nodes(&mesh);
        let norm = norm_points(&mesh);
        let mode = QuadratureSpec::default().diagonal_mode;
        let energy = match ext {
            Some(e) => Self::energy_with(&mesh, e, s, p, mode, &free),
            None => {
                let line = LineExterior::new(&mesh, s * p, p);
                Self::energy_with(&mesh, &line, s, p, mode, &free)
            }
        };
        Self { mesh, free, energy, norm, p, q }
    }

    fn energy_with<E: ExteriorRule>(
        mesh: &Mesh,
        ext: &E,
        s: f64,
        p: f64,
        mode: crate::funcspace::profile::DiagonalMode,
        free: &[usize],
    ) -> Energy {
        let engine = PairEngine::new(mesh, &UnitKernel, ext, p, s * p, mode);
        if p == 2.0 {
            Energy::Quadratic(assemble_quadratic(&engine, free))
        } else {
            Energy::Terms(engine.collect_terms().into_iter().flatten().collect())
        }
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.mesh.x.len()];
        for (k, &i) in self.free.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }

    /// Energy and its gradient in free coordinates.
    fn energy_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match &self.energy {
            Energy::Quadratic(a) => {
                let v = DVector::from_column_slice(x);
                let av = a * &v;
                (v.dot(&av), av.iter().map(|g| 2.0 * g).collect())
            }
            Energy::Terms(terms) => {
                let u = self.expand(x);
                let p = self.p;
                let n = u.len();
                let chunks = terms.len().div_ceil(TERM_CHUNK);
                let parts = parallel::map_range(chunks, |c| {
                    let mut e = 0.0;
                    let mut g = vec![0.0; n];
                    for t in &terms[c * TERM_CHUNK..((c + 1) * TERM_CHUNK).min(terms.len())] {
                        let d = t.diff(&u);
                        let ad = d.abs();
                        e += t.w * ad.powf(p);
                        if ad > 0.0 {
                            let f = t.w * p * ad.powf(p - 1.0) * d.signum();
                            for k in 0..4 {
                                g[t.idx[k]] += f * t.c[k];
                            }
                        }
                    }
                    (e, g)
                });
                let mut e = 0.0;
                let mut g = vec![0.0; n];
                for (pe, pg) in parts {
                    e += pe;
                    for (a, b) in g.iter_mut().zip(pg) {
                        *a += b;
                    }
                }
                (e, self.free.iter().map(|&i| g[i]).collect())
            }
        }
    }

    fn norm_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let u = self.expand(x);
        let q = self.q;
        let mut total = 0.0;
        let mut g = vec![0.0; u.len()];
        for pt in &self.norm {
            let v = (1.0 - pt.lam) * u[pt.l] + pt.lam * u[pt.r];
            let a = v.abs();
            total += pt.w * a.powf(q);
            if a > 0.0 {
                let f = pt.w * q * a.powf(q - 1.0) * v.signum();
                g[pt.l] += f * (1.0 - pt.lam);
                g[pt.r] += f * pt.lam;
            }
        }
        (total, self.free.iter().map(|&i| g[i]).collect())
    }

    fn norm_value(&self, x: &[f64]) -> f64 {
        self.norm_grad(x).0
    }

    fn normalize(&self, x: &mut [f64]) {
        let nq = self.norm_value(x);
        let c = nq.powf(-1.0 / self.q);
        x.iter_mut().for_each(|v| *v *= c);
    }

    fn quotient(&self, x: &[f64]) -> f64 {
        self.energy_grad(x).0 / self.norm_value(x).powf(self.p / self.q)
    }

    /// Quotient and gradient at a normalized point.
    fn quotient_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (e, ge) = self.energy_grad(x);
        let (nq, gn) = self.norm_grad(x);
        let scale = nq.powf(-self.p / self.q);
        let r = e * scale;
        let k = self.p / self.q * r / nq;
        let g = ge.iter().zip(&gn).map(|(a, b)| a * scale - k * b).collect();
        (r, g)
    }

    /// One interior hump per interval.
    fn hump(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.free.len());
        for &(a, b) in &self.mesh.comps {
            let (xa, xb) = (self.mesh.x[a], self.mesh.x[b]);
            for i in a + 1..b {
                x.push((std::f64::consts::PI * (self.mesh.x[i] - xa) / (xb - xa)).sin());
            }
        }
        x
    }

    fn random_start(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.free.len()).map(|_| rng.random_range(0.05..1.0)).collect()
    }

    fn descend(&self, mut x: Vec<f64>, cfg: &RayleighConfig) -> Descent {
        self.normalize(&mut x);
        let (mut r, mut g) = self.quotient_grad(&x);
        let norm2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        let mut residual = norm2(&g).sqrt() * norm2(&x).sqrt() / r;
        let mut step = 1e-2 * norm2(&x).sqrt() / norm2(&g).sqrt().max(f64::MIN_POSITIVE);
        let mut iterations = 0;
        let mut stalled = false;
        while residual > cfg.tol && iterations < cfg.max_iter {
            iterations += 1;
            let gg = norm2(&g);
            let mut alpha = step;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
                self.normalize(&mut y);
                let ry = self.quotient(&y);
                if ry.is_finite() && ry <= r - ARMIJO_C * alpha * gg {
                    accepted = Some(y);
                    break;
                }
                alpha *= 0.5;
            }
            let Some(y) = accepted else {
                stalled = true;
                break;
            };
            let (ry, gy) = self.quotient_grad(&y);
            // Barzilai-Borwein step for the next iteration
            let sy: f64 = y.iter().zip(&x).zip(gy.iter().zip(&g)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
            let ss: f64 = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            step = if sy > 0.0 && (ss / sy).is_finite() { ss / sy } else { 2.0 * alpha };
            x = y;
            r = ry;
            g = gy;
            residual = norm2(&g).sqrt() * norm2(&x).sqrt() / r;
        }
        Descent { value: r, x, iterations, residual, stalled }
    }

    /// Free-node mass matrix, exact for piecewise-linear functions.
    fn mass(&self) -> DMatrix<f64> {
        let n = self.mesh.x.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (c, &[l, r]) in self.mesh.cells.iter().enumerate() {
            let h = self.mesh.h(c);
            m[(l, l)] += h / 3.0;
            m[(r, r)] += h / 3.0;
            m[(l, r)] += h / 6.0;
            m[(r, l)] += h / 6.0;
        }
        DMatrix::from_fn(self.free.len(), self.free.len(), |i, j| m[(self.free[i], self.free[j])])
    }

    fn inverse_power(&self, a: &DMatrix<f64>, start: &[f64]) -> Option<f64> {
        let m = self.mass();
        let chol = a.clone().cholesky()?;
        let mut v = DVector::from_column_slice(start);
        let mut lam = f64::INFINITY;
        for _ in 0..500 {
            let w = chol.solve(&(&m * &v));
            let next = w.dot(&(a * &w)) / w.dot(&(&m * &w));
            v = &w / w.norm();
            if (next - lam).abs() <= 1e-15 * next {
                return Some(next);
            }
            lam = next;
        }
        Some(lam)
    }
}

struct Descent {
    value: f64,
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    stalled: bool,
}

fn check_exponents(s: f64, p: f64, q: f64) -> Result<()> {
    check_order_exponent(s, p)?;
    require(p > 1.0, || format!("the minimization needs p > 1, got {p}"))?;
    require(q >= 1.0 && q.is_finite(), || format!("q must be >= 1, got {q}"))
}

fn solve(problem: &Problem, cfg: &RayleighConfig) -> Result<RayleighEstimate> {
    let starts = 1 + cfg.restarts;
    let runs = parallel::map_range(starts, |k| {
        let x0 = if k == 0 { problem.hump() } else { problem.random_start(cfg.seed.wrapping_add(k as u64)) };
        problem.descend(x0, cfg)
    });
    let lowest = runs.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    // among runs tied at the lowest value prefer a converged one
    let best = runs
        .into_iter()
        .filter(|r| r.value <= lowest + 1e-10 * lowest.abs())
        .min_by(|a, b| (a.residual > cfg.tol).cmp(&(b.residual > cfg.tol)).then(a.value.total_cmp(&b.value)))
        .ok_or_else(|| LabError::NonConvergence("no descent run".to_string()))?;
    if !best.value.is_finite() {
        return Err(LabError::NonConvergence("Rayleigh quotient is not finite".to_string()));
    }
    let mut flags = Vec::new();
    let converged = best.residual <= cfg.tol;
    if !converged {
        flags.push(if best.stalled { "line_search_stalled" } else { "iteration_cap" }.to_string());
    }
    let power_check = match &problem.energy {
        Energy::Quadratic(a) if problem.q == 2.0 => problem.inverse_power(a, &best.x),
        _ => None,
    };
    if let Some(pc) = power_check {
        if (pc - best.value).abs() > 1e-6 * best.value {
            flags.push("power_iteration_disagrees".to_string());
        }
    }
    let mut x = best.x;
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(RayleighEstimate {
        value: best.value,
        lower_bound: None,
        iterations: best.iterations,
        residual: best.residual,
        converged,
        power_check,
        nodes: problem.mesh.x.clone(),
        minimizer: problem.expand(&x),
        flags,
    })
}

/// Upper estimate of `inf [u]^p / ||u||_q^p` over piecewise-linear `u`
/// supported in the domain, `grid_n` cells per interval.
pub fn rayleigh_estimate(domain: &IntervalUnionDomain, s: f64, p: f64, q: f64, grid_n: usize) -> Result<RayleighEstimate> {
    rayleigh_estimate_with(domain, s, p, q, &RayleighConfig::with_grid(grid_n))
}

pub fn rayleigh_estimate_with(
    domain: &IntervalUnionDomain,
    s: f64,
    p: f64,
    q: f64,
    cfg: &RayleighConfig,
) -> Result<RayleighEstimate> {
    check_exponents(s, p, q)?;
    cfg.validate()?;
    let problem = Problem::new::<BallExterior>(domain, s, p, q, cfg.grid_n, None);
    let mut est = solve(&problem, cfg)?;
    if q == p {
        est.lower_bound = Some(if domain.intervals().len() >= 2 {
            analytic_lower_bound_1d(domain, s, p)?
        } else {
            single_interval_bound(domain.big_m(), s, p)
        });
    }
    Ok(est)
}

/// Minimizes `(int_O int_O + int_O int_B |x - y|^{-1-sigma}) / ||u||_q^p`.
#[allow(clippy::too_many_arguments)]
pub fn augmented_rayleigh(
    domain: &IntervalUnionDomain,
    ball: &Ball1D,
    sigma: f64,
    s: f64,
    p: f64,
    q: f64,
    cfg: &RayleighConfig,
) -> Result<RayleighEstimate> {
    check_exponents(s, p, q)?;
    cfg.validate()?;
    ball.check_disjoint(domain)?;
    require(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    let ext = BallExterior { ball: *ball, sigma };
    let problem = Problem::new(domain, s, p, q, cfg.grid_n, Some(&ext));
    solve(&problem, cfg)
}

/// Smallest eigenvalue of the assembled `p = q = 2` problem by a dense
/// symmetric eigensolve.
pub fn eigen_oracle(domain: &IntervalUnionDomain, s: f64, grid_n: usize) -> Result<f64> {
    check_exponents(s, 2.0, 2.0)?;
    require(grid_n >= 2, || "grid_n must be >= 2".to_string())?;
    let problem = Problem::new::<BallExterior>(domain, s, 2.0, 2.0, grid_n, None);
    let Energy::Quadratic(a) = &problem.energy else { unreachable!() };
    let m = problem.mass();
    let l = m
        .cholesky()
        .ok_or_else(|| LabError::NonConvergence("mass matrix is not positive definite".to_string()))?
        .l();
    let li = l
        .try_inverse()
        .ok_or_else(|| LabError::NonConvergence("mass factor is singular".to_string()))?;
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> IntervalUnionDomain {
        IntervalUnionDomain::new(vec![(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn unit_interval_matches_eigensolve() {
        let est = rayleigh_estimate(&unit(), 0.5, 2.0, 2.0, 64).unwrap();
        let oracle = eigen_oracle(&unit(), 0.5, 64).unwrap();
        assert!(est.converged, "{:?}", est.flags);
        assert!((est.value - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", est.value);
        assert!((est.power_check.unwrap() - oracle).abs() < 1e-9 * oracle);
        assert!(est.lower_bound.unwrap() <= est.value);
        assert!(est.minimizer.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn scaling_law() {
        let a = rayleigh_estimate(&unit(), 0.5, 2.0, 4.0, 64).unwrap();
        let b = rayleigh_estimate(&unit().scaled(3.0).unwrap(), 0.5, 2.0, 4.0, 64).unwrap();
        let want = 3f64.powf(-0.5) * a.value;
        assert!((b.value - want).abs() < 1e-3 * want, "{} vs {want}", b.value);
    }

    #[test]
    fn general_p_is_positive() {
        let d = IntervalUnionDomain::new(vec![(0.0, 1.0), (2.0, 2.5)]).unwrap();
        let est = rayleigh_estimate(&d, 1.0 / 3.0, 3.0, 3.0, 64).unwrap();
        assert!(est.value > 0.0 && est.converged, "{est:?}");
        assert!(est.lower_bound.unwrap() <= est.value);
    }

    #[test]
    fn augmented_is_below_full_energy() {
        let ball = Ball1D::new(2.5, 0.5).unwrap();
        let cfg = RayleighConfig::with_grid(64);
        let aug = augmented_rayleigh(&unit(), &ball, 1.0, 0.5, 2.0, 2.0, &cfg).unwrap();
        let full = rayleigh_estimate_with(&unit(), 0.5, 2.0, 2.0, &cfg).unwrap();
        assert!(aug.value > 0.0 && aug.value <= full.value);
        // strong bound: int |u|^2 <= 9 int_O int_B ..., so the quotient is at least 1/9
        assert!(aug.value >= 1.0 / 9.0);
    }
}
