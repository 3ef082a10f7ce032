//! Acceptance checks with a deterministic pass/fail report.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{alpha_star, asymptotic_ratio, bbm_constant, gamma_series, surface_measure, CriticalParams};
use crate::error::{require, Result};
use crate::funcspace::{
    direct_seminorm_2d, directional_seminorm, gagliardo_1d, gagliardo_profile, lq_norm, lq_norm_1d, lq_norm_pow,
    moser_profile, rearrange, dilate, Grid2D, PiecewiseFunction1D, QuadratureSpec, RadialProfile,
};
use crate::functionals::{blowup_scan, eps_decades, normalize_fa1, takahashi_transform, Normalization, WeightSpec};
use crate::poincare::{
    analytic_lower_bound_1d, eigen_oracle, fbc_decay_scan, ls_sections, rayleigh_estimate_with,
    uniform_poincare_check, DomainSpec, IntervalUnionDomain, RayleighConfig,
};

pub const ALL: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
pub const FAST: [u8; 6] = [1, 2, 5, 6, 7, 9];

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<(String, String)>,
}

impl Outcome {
    fn new(id: u8, name: &'static str) -> Self {
        Self { id, name, passed: true, details: Vec::new() }
    }

    fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.details.push((key.into(), value.into()));
    }

    /// Records a named check; the outcome fails if any check fails.
    fn check(&mut self, key: impl Into<String>, ok: bool) {
        self.passed &= ok;
        self.note(key, if ok { "ok" } else { "FAIL" });
    }

    pub fn line(&self) -> String {
        let mut s = format!("[{:02}] {:<5} {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.name);
        for (k, v) in &self.details {
            let _ = write!(s, " | {k}={v}");
        }
        s
    }
}

fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
    pub passed: bool,
}

impl Report {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            s.push_str(&o.line());
            s.push('\n');
        }
        let passed = self.outcomes.iter().filter(|o| o.passed).count();
        let _ = writeln!(s, "summary: {passed}/{} passed (seed {})", self.outcomes.len(), self.seed);
        s
    }
}

/// Parses `all`, `fast` or a comma list of criterion numbers.
pub fn parse_suite(spec: &str) -> Result<Vec<u8>> {
    match spec {
        "all" => Ok(ALL.to_vec()),
        "fast" => Ok(FAST.to_vec()),
        _ => {
            let mut ids = Vec::new();
            for part in spec.split(',') {
                let id: u8 = part
                    .trim()
                    .parse()
                    .map_err(|_| crate::LabError::InvalidInput(format!("unknown suite entry '{part}'")))?;
                require(ALL.contains(&id), || format!("criterion {id} does not exist (1..=11)"))?;
                ids.push(id);
            }
            Ok(ids)
        }
    }
}

pub fn run_suite(ids: &[u8], seed: u64) -> Report {
    let outcomes: Vec<Outcome> = ids.iter().map(|&id| run_criterion(id, seed)).collect();
    let passed = outcomes.iter().all(|o| o.passed);
    Report { seed, outcomes, passed }
}

type Check = fn(&mut Outcome, u64) -> Result<()>;

pub fn run_criterion(id: u8, seed: u64) -> Outcome {
    let (name, f): (&'static str, Check) = match id {
        1 => ("constant exactness", c01_constants),
        2 => ("asymptotic ratio", c02_asymptotic),
        3 => ("moser seminorm limit", c03_moser_limit),
        4 => ("polya-szego and equimeasurability", c04_rearrangement),
        5 => ("critical scale invariance", c05_scaling),
        6 => ("poincare sandwich", c06_sandwich),
        7 => ("finite-ball counterexample", c07_fbc),
        8 => ("blow-up dichotomy", c08_blowup),
        9 => ("takahashi algebra", c09_takahashi),
        10 => ("loss-sloane consistency", c10_loss_sloane),
        11 => ("ls-domain certificate", c11_ls_certificate),
        _ => ("unknown criterion", |o, _| {
            o.check("exists", false);
            Ok(())
        }),
    };
    let mut out = Outcome::new(id, name);
    if let Err(e) = f(&mut out, seed) {
        out.note("error", e.to_string());
        out.passed = false;
    }
    out
}

fn c01_constants(o: &mut Outcome, _: u64) -> Result<()> {
    let g = gamma_series(1, 2.0, 1e-12)?;
    let k = bbm_constant(2.0, 2)?;
    let w = surface_measure(2)?;
    o.note("gamma(1,2)", sci(g.value));
    o.note("K(2,2)", sci(k));
    o.note("omega(2)", sci(w));
    o.check("gamma_within_1e-9", (g.value - 2.0 * PI * PI).abs() <= 1e-9);
    o.check("K_within_1e-12", (k - PI / 2.0).abs() <= 1e-12);
    o.check("omega_exact", w == 2.0 * PI);
    Ok(())
}

fn c02_asymptotic(o: &mut Outcome, _: u64) -> Result<()> {
    let mut errs = Vec::new();
    for s in [0.9, 0.99, 0.999] {
        let r = asymptotic_ratio(s, 2)?;
        let e = (r - 2.0 * PI).abs() / (2.0 * PI);
        o.note(format!("rel_err(s={s})"), sci(e));
        errs.push(e);
    }
    o.check("strictly_decreasing", errs.windows(2).all(|w| w[1] < w[0]));
    o.check("final_below_5pct", errs[2] < 0.05);
    Ok(())
}

/// Least-squares fit `y = c x` through the origin; returns `(c, R^2)`.
fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let c = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}

fn c03_moser_limit(o: &mut Outcome, _: u64) -> Result<()> {
    let params = CriticalParams::critical(1, 0.5)?;
    let gamma = 2.0 * PI * PI;
    let quad = QuadratureSpec::default();
    let eps = [1e-2, 1e-3, 1e-4];
    let ratios = crate::parallel::map_slice(&eps, |&e| -> Result<f64> {
        let u = moser_profile(&params, e)?;
        Ok(gagliardo_1d(&u.to_line(), 0.5, 2.0, &quad)? / gamma)
    });
    let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
    for (e, r) in eps.iter().zip(&ratios) {
        o.note(format!("ratio(eps={e:e})"), sci(*r));
    }
    let x: Vec<f64> = eps.iter().map(|e| 1.0 / (1.0 / e).ln()).collect();
    let y: Vec<f64> = ratios.iter().map(|r| r - 1.0).collect();
    let (c, r2) = fit_through_origin(&x, &y);
    o.note("fit_c", sci(c));
    o.note("fit_r2", sci(r2));
    o.check("ratio_above_1", ratios.iter().all(|&r| r > 1.0));
    o.check("r2_above_0.99", r2 > 0.99);
    Ok(())
}

fn random_tents(rng: &mut ChaCha8Rng) -> Result<PiecewiseFunction1D> {
    let count = rng.random_range(1..=5);
    let tents: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.1..1.0), rng.random_range(-1.0..2.0)))
        .collect();
    PiecewiseFunction1D::tent_sum(&tents)
}

fn c04_rearrangement(o: &mut Outcome, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x04);
    let funcs = (0..100).map(|_| random_tents(&mut rng)).collect::<Result<Vec<_>>>()?;
    let quad = QuadratureSpec::default();
    let rows = crate::parallel::map_slice(&funcs, |u| -> Result<(f64, f64)> {
        let star = rearrange(u, 1)?;
        let a = gagliardo_1d(u, 0.5, 2.0, &quad)?.sqrt();
        let b = gagliardo_1d(&star.to_line(), 0.5, 2.0, &quad)?.sqrt();
        let mut worst_norm: f64 = 0.0;
        for q in [1.0, 2.0, 4.0] {
            let nu = lq_norm_1d(u, q)?;
            let ns = lq_norm(&star, q, 1)?;
            worst_norm = worst_norm.max((nu - ns).abs() / nu);
        }
        Ok((b / a - 1.0, worst_norm))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let worst_ps = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_norm = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    o.note("functions", "100");
    o.note("max([u*]/[u]-1)", sci(worst_ps));
    o.note("max_norm_rel_err", sci(worst_norm));
    o.check("polya_szego", worst_ps <= 1e-6);
    o.check("equimeasurable", worst_norm <= 1e-6);
    Ok(())
}

fn c05_scaling(o: &mut Outcome, _: u64) -> Result<()> {
    let quad = QuadratureSpec::default();
    let p2 = CriticalParams::critical(2, 0.5)?;
    let p1 = CriticalParams::critical(1, 0.5)?;
    let line = RadialProfile::new(vec![0.0, 0.3, 0.7, 1.0], vec![1.0, 0.8, 0.25, 0.0])?;
    let cases = [("moser_n2", p2, moser_profile(&p2, 1e-2)?), ("profile_n1", p1, line)];
    let mut ok_semi = true;
    let mut ok_norm = true;
    for (tag, params, u) in &cases {
        let (n, p) = (params.n(), params.p());
        let base = gagliardo_profile(u, params, &quad)?;
        let base_lp = lq_norm_pow(u, p, n)?;
        for l in [2.0, 5.0] {
            let v = dilate(u, l)?;
            let semi = (gagliardo_profile(&v, params, &quad)? / base - 1.0).abs();
            let lp = (lq_norm_pow(&v, p, n)? / base_lp / l.powi(-(n as i32)) - 1.0).abs();
            o.note(format!("{tag}_semi_change(l={l})"), sci(semi));
            o.note(format!("{tag}_lp_dev(l={l})"), sci(lp));
            ok_semi &= semi < 1e-3;
            ok_norm &= lp < 1e-3;
        }
    }
    o.check("seminorm_invariant", ok_semi);
    o.check("lp_scales", ok_norm);
    Ok(())
}

fn c06_sandwich(o: &mut Outcome, seed: u64) -> Result<()> {
    let periodic = IntervalUnionDomain::periodic(4, 1.0, 1.0)?;
    let bound = analytic_lower_bound_1d(&periodic, 0.5, 2.0)?;
    let cfg = RayleighConfig { seed, ..RayleighConfig::with_grid(64) };
    let est = rayleigh_estimate_with(&periodic, 0.5, 2.0, 2.0, &cfg)?;
    o.note("lower_bound", sci(bound));
    o.note("rayleigh_periodic", sci(est.value));
    o.check("bound_is_0.25", bound == 0.25);
    o.check("rayleigh_above_bound", est.value >= 0.25);
    let unit = IntervalUnionDomain::new(vec![(0.0, 1.0)])?;
    let u = rayleigh_estimate_with(&unit, 0.5, 2.0, 2.0, &RayleighConfig { seed, ..RayleighConfig::with_grid(128) })?;
    let oracle = eigen_oracle(&unit, 0.5, 128)?;
    let rel = (u.value - oracle).abs() / oracle;
    o.note("rayleigh_unit", sci(u.value));
    o.note("eigen_oracle", sci(oracle));
    o.note("rel_diff", sci(rel));
    o.check("matches_oracle_1e-6", rel <= 1e-6);
    Ok(())
}

fn c07_fbc(o: &mut Outcome, _: u64) -> Result<()> {
    let params = CriticalParams::critical(1, 0.5)?;
    let base = RadialProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.6, 0.0])?;
    let ells = [1.0, 2.0, 4.0, 8.0, 16.0];
    for q in [2.0, 4.0] {
        let scan = fbc_decay_scan(&base, q, &params, &ells, &QuadratureSpec::default())?;
        let rel = (scan.slope / scan.expected_slope - 1.0).abs();
        o.note(format!("slope(q={q})"), sci(scan.slope));
        o.check(format!("within_1pct(q={q})"), rel <= 0.01);
    }
    Ok(())
}

fn c08_blowup(o: &mut Outcome, _: u64) -> Result<()> {
    let params = CriticalParams::critical(2, 0.5)?;
    let quad = QuadratureSpec::default();
    let grid = eps_decades(4, 1);
    let up = blowup_scan(1.0, WeightSpec::Identity, &grid, &params, Normalization::LpNormalized, &quad)?;
    let vals: Vec<f64> = up.rows.iter().map(|r| r.value).collect();
    require(vals.iter().all(|v| v.is_finite()), || "blow-up scan produced a failed row".to_string())?;
    let growth = vals[vals.len() - 1] / vals[0];
    o.note("critical_values", vals.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(";"));
    o.note("last_over_first", sci(growth));
    o.check("strictly_increasing", vals.windows(2).all(|w| w[1] > w[0]));
    o.check("growth_at_least_10", growth >= 10.0);
    let sub = blowup_scan(0.5, WeightSpec::One, &grid, &params, Normalization::SeminormBall, &quad)?;
    let sv: Vec<f64> = sub.rows.iter().map(|r| r.value).collect();
    let spread = sv.iter().copied().fold(f64::NEG_INFINITY, f64::max) / sv.iter().copied().fold(f64::INFINITY, f64::min);
    o.note("subcritical_max_over_min", sci(spread));
    o.check("subcritical_bounded", spread <= 2.0);
    let inner: Vec<f64> = up.rows.iter().map(|r| r.inner_ball).collect();
    let delta = 0.5 * inner[0];
    o.note("inner_ball_min", sci(inner.iter().copied().fold(f64::INFINITY, f64::min)));
    o.note("delta", sci(delta));
    o.check("inner_ball_above_delta", inner.iter().all(|&v| v >= delta));
    Ok(())
}

/// A random decreasing profile on `[0, 1]`.
fn random_profile(rng: &mut ChaCha8Rng) -> Result<RadialProfile> {
    let k = rng.random_range(3..=7);
    let mut radii = vec![0.0];
    for i in 1..k {
        radii.push((i as f64 + rng.random_range(-0.3..0.3)) / k as f64);
    }
    radii.push(1.0);
    let mut values = vec![1.0];
    let mut v: f64 = 1.0;
    for _ in 1..k {
        v *= rng.random_range(0.3..0.95);
        values.push(v);
    }
    values.push(0.0);
    RadialProfile::new(radii, values)
}

fn c09_takahashi(o: &mut Outcome, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x09);
    let quad = QuadratureSpec { target_rel_err: 1e-5, ..QuadratureSpec::default() };
    let mut cases = Vec::new();
    for i in 0..20 {
        let params = CriticalParams::critical(if i % 2 == 0 { 1 } else { 2 }, 0.5)?;
        cases.push((params, random_profile(&mut rng)?, rng.random_range(0.2..0.9)));
    }
    let rows = crate::parallel::map_slice(&cases, |(params, w, frac)| -> Result<(f64, f64)> {
        let semi = gagliardo_profile(w, params, &quad)?;
        let u = normalize_fa1(&w.scaled(semi.powf(-1.0 / params.p())), params)?;
        let alpha_eps = 0.95 * alpha_star(params)?;
        let (_, rep) = takahashi_transform(&u, frac * alpha_eps, alpha_eps, params, &quad)?;
        Ok((rep.full_norm_p, rep.relative_gap))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let worst_norm = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_gap = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    o.note("candidates", "20");
    o.note("max_full_norm_p", sci(worst_norm));
    o.note("max_relative_gap", sci(worst_gap));
    o.check("full_norm_within_ball", worst_norm <= 1.0 + 1e-3);
    o.check("value_relation", worst_gap <= 1e-3);
    Ok(())
}

fn bump(x: f64, y: f64) -> f64 {
    (1.0 - x * x - y * y).max(0.0).powi(2)
}

fn c10_loss_sloane(o: &mut Outcome, _: u64) -> Result<()> {
    type Shape = (&'static str, fn(f64, f64) -> f64);
    let shapes: [Shape; 2] = [
        ("radial", |x, y| bump(x, y)),
        ("skewed", |x, y| bump((x - 0.2) / 0.9, y / 0.6) * (1.0 + 0.3 * x)),
    ];
    let levels = [(48, 12), (96, 24)];
    for (tag, f) in shapes {
        let mut disc = Vec::new();
        for (cells, dirs) in levels {
            let u = Grid2D::from_fn((0.0, 0.0), 1.5, cells, f)?;
            let a = directional_seminorm(&u, 0.5, 4.0, dirs)?;
            let b = direct_seminorm_2d(&u, 0.5, 4.0)?;
            let d = (a - b).abs() / b;
            o.note(format!("{tag}_rel_diff(cells={cells},dirs={dirs})"), sci(d));
            disc.push(d);
        }
        o.check(format!("{tag}_within_5pct"), disc.iter().all(|&d| d <= 0.05));
        o.check(format!("{tag}_halves"), disc[1] <= 0.5 * disc[0]);
    }
    Ok(())
}

pub fn strips_example() -> DomainSpec {
    let intervals = IntervalUnionDomain::periodic(4, 1.0, 1.0).expect("static strips");
    DomainSpec::Strips { intervals, axis: 1 }
}

pub fn graphs_example() -> DomainSpec {
    let xs: Vec<f64> = (0..=64).map(|k| -8.0 + 0.25 * k as f64).collect();
    let lower = xs.iter().map(|&x| [x, 0.25 * x.sin()]).collect();
    let upper = xs.iter().map(|&x| [x, 1.2 + 0.3 * (0.7 * x).cos()]).collect();
    DomainSpec::BetweenGraphs {
        lower: crate::poincare::Graph::new(lower).expect("static graph"),
        upper: crate::poincare::Graph::new(upper).expect("static graph"),
    }
}

fn c11_ls_certificate(o: &mut Outcome, seed: u64) -> Result<()> {
    let offsets: Vec<f64> = (0..16).map(|k| -3.0 + 0.4 * k as f64).collect();
    let cfg = RayleighConfig { restarts: 0, seed, ..RayleighConfig::with_grid(64) };
    for (tag, spec) in [("strips", strips_example()), ("between_graphs", graphs_example())] {
        let mut worst = f64::INFINITY;
        let mut sandwich = true;
        for k in 0..8 {
            let angle = (k as f64 + 0.5) * PI / 8.0;
            let family = ls_sections(&spec, angle, &offsets)?;
            let check = uniform_poincare_check(&family, 0.5, 2.0, 2.0, Some(&cfg))?;
            worst = worst.min(check.inf_bound);
            sandwich &= check.sections.iter().all(|r| r.rayleigh.is_none_or(|v| r.bound <= v));
        }
        o.note(format!("{tag}_inf_bound"), sci(worst));
        o.check(format!("{tag}_positive"), worst > 0.0);
        o.check(format!("{tag}_bound_below_rayleigh"), sandwich);
    }
    Ok(())
}
