//! One-dimensional quadrature primitives: Gauss rules built by the
//! Golub-Welsch algorithm and a globally adaptive Gauss-Kronrod integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};

/// A quadrature rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` (plain Legendre rules only).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a + h * t))
            .sum::<f64>()
            * h
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre rule with `m` points on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> GaussRule {
    gauss_jacobi(m, 0.0, 0.0)
}

/// Gauss rule with `m` points for the weight `t^a (1 - t)^b` on `[0, 1]`.
///
/// Panics if `a <= -1` or `b <= -1` (the weight is not integrable).
pub fn gauss_jacobi(m: usize, a: f64, b: f64) -> GaussRule {
    assert!(m >= 1, "rule needs at least one node");
    assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
    // Jacobi weight on [-1, 1]: (1 - x)^alpha (1 + x)^beta with t = (1 + x) / 2.
    let (alpha, beta) = (b, a);
    let ab = alpha + beta;
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    diag[0] = (beta - alpha) / (ab + 2.0);
    for (k, d) in diag.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        *d = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
    for (i, o) in off.iter_mut().enumerate() {
        let k = (i + 1) as f64;
        let s = 2.0 * k + ab;
        let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
        let den = s * s * (s + 1.0) * (s - 1.0);
        *o = (num / den).sqrt();
    }
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jac[(i, i)] = diag[i];
        if i + 1 < m {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    // mu0 = int_{-1}^{1} (1-x)^alpha (1+x)^beta dx; mapping to [0,1] divides by 2^{ab+1}.
    let ln_mu0_unit = ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0);
    let mu0_unit = ln_mu0_unit.exp();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            ((x + 1.0) / 2.0, mu0_unit * v0 * v0)
        })
        .collect();
    pairs.sort_by(|l, r| l.0.partial_cmp(&r.0).unwrap_or(Ordering::Equal));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over the
/// breakpoint-separated pieces of `points` (at least two, increasing).
pub fn integrate_points<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Integral> {
    if points.len() < 2 {
        return Err(LabError::InvalidInput("integration needs two endpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Segment { a: w[0], b: w[1], value: v, err: e });
    }
    let mut count = heap.len();
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if count >= max_segments {
            return Err(LabError::NonConvergence(format!(
                "adaptive quadrature stalled at error {total_err:.3e} after {count} segments"
            )));
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in floating point
            heap.push(Segment { err: 0.0, ..seg });
            total_err = heap.iter().map(|s| s.err).sum();
            continue;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        count += 1;
    }
    // recompute to shed accumulated rounding in the running totals
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.err).sum();
    Ok(Integral { value, error })
}

pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    integrate_points(f, &[a, b], abs_tol, rel_tol, 2000)
}
