//! Gagliardo seminorm of radial profiles in `R^n`.
//!
//! For `u(x) = f(|x|)` the angular integrals reduce the seminorm to
//!
//! ```text
//! [u]^p = int_0^inf int_0^inf |f(r) - f(rho)|^p omega_{n-1} m^{n-1} k(m / M) |r - rho|^{-1-sp} dr drho
//! ```
//!
//! with `m = min(r, rho)`, `M = max(r, rho)` and
//! `k(t) = (1 - t)^{1+sp} omega_{n-2} int_0^pi sin^{n-2} th (1 + t^2 - 2 t cos th)^{-(n+sp)/2} dth`,
//! a bounded function on `[0, 1]`. It is tabulated once per `(n, sp)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::beta::beta;

use crate::constants::{omega, CriticalParams};
use crate::error::{require, Result};
use crate::funcspace::engine::{legendre, refine_nodes, ExteriorRule, Level, Mesh, PairEngine, PairKernel, Term};
use crate::funcspace::line::{check_error, SeminormEstimate};
use crate::funcspace::profile::{QuadratureSpec, RadialProfile};
use crate::quadrature::integrate_points;

const TABLE_STEPS: usize = 4096;

/// Angular kernel `omega_{n-1} m^{n-1} k(m/M)` of the radial reduction.
#[derive(Debug)]
pub struct RadialKernel {
    n: u32,
    sp: f64,
    omega: f64,
    table: Vec<f64>,
}

type KernelCache = Mutex<HashMap<(u32, u64), Arc<RadialKernel>>>;

impl RadialKernel {
    /// Shared instance for `(n, sp)`; the table is built on first use.
    pub fn shared(n: u32, sp: f64) -> Result<Arc<RadialKernel>> {
        static CACHE: OnceLock<KernelCache> = OnceLock::new();
        require(n >= 1, || format!("dimension n must be >= 1, got {n}"))?;
        require(sp > 0.0 && sp.is_finite(), || format!("s*p must be positive, got {sp}"))?;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (n, sp.to_bits());
        if let Some(k) = cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(k));
        }
        let k = Arc::new(Self::build(n, sp)?);
        cache.lock().unwrap().insert(key, Arc::clone(&k));
        Ok(k)
    }

    fn build(n: u32, sp: f64) -> Result<Self> {
        let table = if n == 1 {
            Vec::new()
        } else {
            let w = omega(n - 1);
            let nf = n as f64;
            let at_one = w * beta(0.5 * (nf - 1.0), 0.5 * (1.0 + sp)) / 2.0;
            let mut table = crate::parallel::map_range(TABLE_STEPS, |j| {
                let t = j as f64 / TABLE_STEPS as f64;
                angular_integral(n, sp, t).map(|a| w * a)
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
            table.push(at_one);
            table
        };
        Ok(Self { n, sp, omega: omega(n), table })
    }

    /// `k(t)` for `t` in `[0, 1]`.
    pub fn k(&self, t: f64) -> f64 {
        if self.n == 1 {
            return 1.0 + ((1.0 - t) / (1.0 + t)).powf(1.0 + self.sp);
        }
        let pos = t.clamp(0.0, 1.0) * TABLE_STEPS as f64;
        let j = (pos.floor() as usize).clamp(1, TABLE_STEPS - 2);
        let x = pos - j as f64;
        let f = &self.table[j - 1..j + 3];
        // cubic Lagrange through nodes -1, 0, 1, 2
        let (xm, x0, x1, x2) = (x + 1.0, x, x - 1.0, x - 2.0);
        -f[0] * x0 * x1 * x2 / 6.0 + f[1] * xm * x1 * x2 / 2.0 - f[2] * xm * x0 * x2 / 2.0
            + f[3] * xm * x0 * x1 / 6.0
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sp(&self) -> f64 {
        self.sp
    }
}

/// `(1 - t)^{1+sp} int_0^pi sin^{n-2} th ((1-t)^2 + 4 t sin^2(th/2))^{-(n+sp)/2} dth`.
fn angular_integral(n: u32, sp: f64, t: f64) -> Result<f64> {
    let d = 1.0 - t;
    let e = -0.5 * (n as f64 + sp);
    let f = |th: f64| {
        let s = (0.5 * th).sin();
        let base = d * d + 4.0 * t * s * s;
        th.sin().powi(n as i32 - 2) * (base / (d * d)).powf(e) * d.powf(1.0 + sp + 2.0 * e)
    };
    let mut pts = vec![0.0];
    let mut b = d;
    while b < std::f64::consts::PI {
        pts.push(b);
        b *= 4.0;
    }
    pts.push(std::f64::consts::PI);
    Ok(integrate_points(f, &pts, 1e-300, 1e-13, 4000)?.value)
}

impl PairKernel for RadialKernel {
    #[inline]
    fn g(&self, x: f64, y: f64) -> f64 {
        let (m, big) = if x < y { (x, y) } else { (y, x) };
        if big <= 0.0 {
            return 0.0;
        }
        self.omega * m.powi(self.n as i32 - 1) * self.k(m / big)
    }
    fn is_unit(&self) -> bool {
        false
    }
}

/// Exterior weight `E(r) = int_R^inf g(r, rho) (rho - r)^{-1-sp} drho` beyond
/// the tail radius `R`, evaluated by adaptive quadrature in `v = R / rho`.
pub(crate) struct RadialExterior<'a> {
    kernel: &'a RadialKernel,
    tail: f64,
    p: f64,
}

impl RadialExterior<'_> {
    fn weight(&self, r: f64) -> f64 {
        let sp = self.kernel.sp;
        let big_r = self.tail;
        let tau = r / big_r;
        // rho = R / v: drho = R v^-2 dv, (rho - r)^{-1-sp} = (R/v)^{-1-sp} (1 - tau v)^{-1-sp}
        let f = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            v.powf(sp - 1.0) * (1.0 - tau * v).powf(-1.0 - sp) * self.kernel.g(r, big_r / v)
        };
        let val = integrate_points(f, &[0.0, 0.5, 1.0], 1e-300, 1e-12, 2000)
            .map(|i| i.value)
            .unwrap_or(f64::NAN);
        val * big_r.powf(-sp)
    }
}

impl ExteriorRule for RadialExterior<'_> {
    fn visit(&self, mesh: &Mesh, cell: usize, level: Level, f: &mut dyn FnMut(&Term)) {
        let [l, r] = mesh.cells[cell];
        let h = mesh.h(cell);
        let a = mesh.x[l];
        let m = match level {
            Level::High => 6 + self.p.ceil() as usize / 2,
            Level::Low => 3 + self.p.ceil() as usize / 2,
        };
        for (t, wt) in legendre(m).iter() {
            let x = a + h * t;
            let w = 2.0 * wt * h * self.weight(x);
            f(&Term::two(w, l, 1.0 - t, r, t));
        }
    }
}

/// Builds the padded radial mesh: profile nodes refined to at least
/// `cells` cells on the support, then geometrically growing zero cells up to
/// the tail radius.
pub(crate) fn radial_mesh(u: &RadialProfile, cells: usize, tail: f64) -> (Mesh, Vec<f64>) {
    let support = u.support_radius();
    let mut nodes = refine_nodes(u.radii(), support, cells);
    let mut values: Vec<f64> = nodes.iter().map(|&r| u.eval(r)).collect();
    let mut h = nodes[nodes.len() - 1] - nodes[nodes.len() - 2];
    let mut r = support;
    while r < tail {
        h *= 1.5;
        r = (r + h).min(tail);
        if tail - r < 0.5 * h {
            r = tail;
        }
        nodes.push(r);
        values.push(0.0);
    }
    (Mesh::from_components(&[nodes]), values)
}

pub(crate) fn radial_estimate(
    u: &RadialProfile,
    n: u32,
    s: f64,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<SeminormEstimate> {
    crate::funcspace::line::check_order_exponent(s, p)?;
    quad.validate()?;
    let tail = quad.tail_for(u.support_radius())?;
    if u.is_zero() {
        return Ok(SeminormEstimate { value: 0.0, error_estimate: 0.0 });
    }
    let kernel = RadialKernel::shared(n, s * p)?;
    let (mesh, values) = radial_mesh(u, quad.cells_per_dim, tail);
    let ext = RadialExterior { kernel: &kernel, tail, p };
    let engine = PairEngine::new(&mesh, kernel.as_ref(), &ext, p, s * p, quad.diagonal_mode);
    let est = engine.energy(&values);
    check_error(est, quad)?;
    Ok(est.into())
}

/// `[u]^p_{s,p,R^n}` of a radial profile, `n >= 2`, with its error estimate.
pub fn gagliardo_radial_estimate(
    u: &RadialProfile,
    params: &CriticalParams,
    quad: &QuadratureSpec,
) -> Result<SeminormEstimate> {
    require(params.n() >= 2, || {
        "radial seminorm needs n >= 2; use the line seminorm for n = 1".to_string()
    })?;
    radial_estimate(u, params.n(), params.s(), params.p(), quad)
}

/// `[u]^p_{s,p,R^n}` (the p-th power) of a radial profile, `n >= 2`.
pub fn gagliardo_radial(u: &RadialProfile, params: &CriticalParams, quad: &QuadratureSpec) -> Result<f64> {
    Ok(gagliardo_radial_estimate(u, params, quad)?.value)
}

/// `[u]^p` for any `n >= 1`; dimension one goes through the line seminorm of
/// the even extension.
pub fn gagliardo_profile(u: &RadialProfile, params: &CriticalParams, quad: &QuadratureSpec) -> Result<f64> {
    if params.n() == 1 {
        crate::funcspace::line::gagliardo_1d(&u.to_line(), params.s(), params.p(), quad)
    } else {
        gagliardo_radial(u, params, quad)
    }
}
