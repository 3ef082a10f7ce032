//! Cell-pair quadrature for singular double integrals
//!
//! ```text
//! I(u) = sum_{cells i, j} int_i int_j |u(x) - u(y)|^p g(x, y) |x - y|^{-1-sp} dy dx
//!        + 2 int |u(x)|^p e(x) dx
//! ```
//!
//! for a continuous piecewise-linear `u` on a union of cells. `g` is smooth
//! and `e` is the exterior weight. Every quadrature node becomes a [`Term`]
//! `W |sum_k c_k u_k|^p`, so the same rule serves evaluation, gradients and
//! matrix assembly.
//!
//! Same-cell pairs use the exact linear model (`u(x) - u(y)` is a multiple of
//! `x - y`), adjacent cells a Duffy split of the square into two triangles
//! with the radial variable integrated against `R^{p - sp}`, and separated
//! cells tensor Gauss-Legendre rules whose order follows the Bernstein
//! ellipse of the kernel; cells too close for that are bisected. Each rule
//! comes in a high and a low order; their difference is the error estimate.

use std::sync::OnceLock;

use crate::funcspace::profile::DiagonalMode;
use crate::parallel;
use crate::quadrature::{gauss_jacobi, gauss_legendre, GaussRule};

const MAX_ORDER: usize = 24;

/// Gauss-Legendre rules of order 1..=MAX_ORDER on `[0, 1]`.
pub(crate) fn legendre(m: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=MAX_ORDER).map(gauss_legendre).collect());
    &rules[m.clamp(1, MAX_ORDER) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Level {
    High,
    Low,
}

/// Orders for an analytic integrand whose nearest singularity sits at
/// distance `d` from an interval of length `h`.
pub(crate) fn bernstein_order(d: f64, h: f64, level: Level) -> usize {
    let a = 1.0 + 2.0 * d / h;
    let rho = a + (a * a - 1.0).sqrt();
    let low = ((8.0 * std::f64::consts::LN_10) / (2.0 * rho.ln())).ceil() as usize;
    let low = low.clamp(2, 16);
    match level {
        Level::Low => low,
        Level::High => (low + (low / 2).max(2)).min(MAX_ORDER),
    }
}

/// One quadrature node: contributes `w * |sum_k c[k] * u[idx[k]]|^p`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub w: f64,
    pub idx: [usize; 4],
    pub c: [f64; 4],
}

impl Term {
    pub fn one(w: f64, i: usize) -> Self {
        Self { w, idx: [i, i, i, i], c: [1.0, 0.0, 0.0, 0.0] }
    }

    pub fn two(w: f64, i: usize, ci: f64, j: usize, cj: f64) -> Self {
        Self { w, idx: [i, j, i, i], c: [ci, cj, 0.0, 0.0] }
    }

    #[inline]
    pub fn diff(&self, u: &[f64]) -> f64 {
        self.c[0] * u[self.idx[0]]
            + self.c[1] * u[self.idx[1]]
            + self.c[2] * u[self.idx[2]]
            + self.c[3] * u[self.idx[3]]
    }
}

/// Cells between consecutive nodes of each component.
#[derive(Debug, Clone)]
pub(crate) struct Mesh {
    pub x: Vec<f64>,
    pub cells: Vec<[usize; 2]>,
    /// First and last node index of each component.
    pub comps: Vec<(usize, usize)>,
}

impl Mesh {
    /// Components must be sorted, disjoint and internally increasing.
    pub fn from_components(components: &[Vec<f64>]) -> Self {
        let mut x = Vec::new();
        let mut cells = Vec::new();
        let mut comps = Vec::new();
        for c in components {
            let first = x.len();
            x.extend_from_slice(c);
            for k in first..x.len() - 1 {
                cells.push([k, k + 1]);
            }
            comps.push((first, x.len() - 1));
        }
        Self { x, cells, comps }
    }

    #[inline]
    pub fn h(&self, c: usize) -> f64 {
        self.x[self.cells[c][1]] - self.x[self.cells[c][0]]
    }

    /// Cells active when either end value is nonzero.
    pub fn active_cells(&self, u: &[f64]) -> Vec<bool> {
        self.cells.iter().map(|&[a, b]| u[a] != 0.0 || u[b] != 0.0).collect()
    }
}

/// Splits every cell into equal parts so that no part exceeds
/// `total / min_cells`.
pub(crate) fn refine_nodes(nodes: &[f64], total: f64, min_cells: usize) -> Vec<f64> {
    let target = total / min_cells as f64;
    let mut out = vec![nodes[0]];
    for w in nodes.windows(2) {
        let k = ((w[1] - w[0]) / target).ceil().max(1.0) as usize;
        for j in 1..k {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
        }
        out.push(w[1]);
    }
    out
}

/// The smooth factor `g(x, y)` multiplying `|x - y|^{-1-sp}`.
pub(crate) trait PairKernel: Sync {
    fn g(&self, x: f64, y: f64) -> f64;
    /// `g` is identically one.
    fn is_unit(&self) -> bool;
}

/// Produces the exterior terms `2 int_cell |u|^p e` of one cell.
pub(crate) trait ExteriorRule: Sync {
    fn visit(&self, mesh: &Mesh, cell: usize, level: Level, f: &mut dyn FnMut(&Term));
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Estimate {
    pub value: f64,
    pub error: f64,
}

pub(crate) struct PairEngine<'a, K: PairKernel, E: ExteriorRule> {
    pub mesh: &'a Mesh,
    kernel: &'a K,
    exterior: &'a E,
    p: f64,
    sp: f64,
    mode: DiagonalMode,
    duffy_r: [GaussRule; 2],
    self_d: [GaussRule; 2],
}

const DUFFY_W: [usize; 2] = [12, 8];
const SELF_Z: [usize; 2] = [10, 6];

fn lvl(level: Level) -> usize {
    match level {
        Level::High => 0,
        Level::Low => 1,
    }
}

impl<'a, K: PairKernel, E: ExteriorRule> PairEngine<'a, K, E> {
    pub fn new(mesh: &'a Mesh, kernel: &'a K, exterior: &'a E, p: f64, sp: f64, mode: DiagonalMode) -> Self {
        let gamma = p - 1.0 - sp;
        let (duffy_r, self_d) = if kernel.is_unit() {
            (
                [gauss_jacobi(1, gamma + 1.0, 0.0), gauss_jacobi(1, gamma + 1.0, 0.0)],
                [gauss_jacobi(1, gamma, 1.0), gauss_jacobi(1, gamma, 1.0)],
            )
        } else {
            (
                [gauss_jacobi(8, gamma + 1.0, 0.0), gauss_jacobi(5, gamma + 1.0, 0.0)],
                [gauss_jacobi(10, gamma, 1.0), gauss_jacobi(6, gamma, 1.0)],
            )
        };
        Self { mesh, kernel, exterior, p, sp, mode, duffy_r, self_d }
    }

    /// Visits every term of row `i`: the same-cell pair, pairs `(i, j)` with
    /// `j > i` (weights doubled for symmetry) and the exterior terms.
    pub fn visit_row(&self, i: usize, level: Level, active: Option<&[bool]>, f: &mut dyn FnMut(&Term)) {
        let is_active = |c: usize| active.is_none_or(|a| a[c]);
        let mesh = self.mesh;
        if is_active(i) {
            if self.mode == DiagonalMode::ClosedFormLinear {
                self.same_cell(i, level, f);
            }
            self.exterior.visit(mesh, i, level, f);
        }
        for j in i + 1..mesh.cells.len() {
            if !is_active(i) && !is_active(j) {
                continue;
            }
            if mesh.cells[j][0] == mesh.cells[i][1] {
                self.adjacent(i, j, level, f);
            } else {
                self.separated(i, (0.0, 1.0), j, (0.0, 1.0), level, f);
            }
        }
    }

    fn same_cell(&self, i: usize, level: Level, f: &mut dyn FnMut(&Term)) {
        let [a, b] = self.mesh.cells[i];
        let h = self.mesh.h(i);
        let x0 = self.mesh.x[a];
        let scale = 2.0 * h.powf(1.0 - self.sp);
        if self.kernel.is_unit() {
            let w: f64 = self.self_d[0].weights.iter().sum();
            f(&Term::two(scale * w, a, -1.0, b, 1.0));
            return;
        }
        let dr = &self.self_d[lvl(level)];
        let zr = legendre(SELF_Z[lvl(level)]);
        for (d, wd) in dr.iter() {
            for (z, wz) in zr.iter() {
                let s = d + (1.0 - d) * z;
                let t = s - d;
                let g = self.kernel.g(x0 + h * s, x0 + h * t);
                f(&Term::two(scale * wd * wz * g, a, -1.0, b, 1.0));
            }
        }
    }

    /// Cells `A = [a0, a1]` and `B = [a1, b1]` sharing the node `a1`.
    fn adjacent(&self, ia: usize, ib: usize, level: Level, f: &mut dyn FnMut(&Term)) {
        let [a0, a1] = self.mesh.cells[ia];
        let b1 = self.mesh.cells[ib][1];
        let ha = self.mesh.h(ia);
        let hb = self.mesh.h(ib);
        let xm = self.mesh.x[a1];
        let e = -1.0 - self.sp;
        let rr = &self.duffy_r[lvl(level)];
        let wr = legendre(DUFFY_W[lvl(level)]);
        // triangle xi >= eta: x = a1 - ha R, y = a1 + hb R w
        for (w0, w1) in graded_pieces(ha / hb) {
            let span = w1 - w0;
            for (t, wt) in wr.iter() {
                let w = w0 + span * t;
                let base = 2.0 * ha * hb * wt * span * (ha + hb * w).powf(e);
                for (r, wrr) in rr.iter() {
                    let g = self.kernel.g(xm - ha * r, xm + hb * r * w);
                    f(&Term {
                        w: base * wrr * g,
                        idx: [a0, a1, b1, a1],
                        c: [1.0, w - 1.0, -w, 0.0],
                    });
                }
            }
        }
        // triangle eta > xi: y = a1 + hb R, x = a1 - ha R w
        for (w0, w1) in graded_pieces(hb / ha) {
            let span = w1 - w0;
            for (t, wt) in wr.iter() {
                let w = w0 + span * t;
                let base = 2.0 * ha * hb * wt * span * (ha * w + hb).powf(e);
                for (r, wrr) in rr.iter() {
                    let g = self.kernel.g(xm - ha * r * w, xm + hb * r);
                    f(&Term {
                        w: base * wrr * g,
                        idx: [a0, a1, b1, a1],
                        c: [w, 1.0 - w, -1.0, 0.0],
                    });
                }
            }
        }
    }

    /// Parameter ranges `li` of cell `i` and `lj` of cell `j`, cell `j` to the right.
    fn separated(
        &self,
        i: usize,
        li: (f64, f64),
        j: usize,
        lj: (f64, f64),
        level: Level,
        f: &mut dyn FnMut(&Term),
    ) {
        let mesh = self.mesh;
        let [i0, i1] = mesh.cells[i];
        let [j0, j1] = mesh.cells[j];
        let (hi, hj) = (mesh.h(i), mesh.h(j));
        // exact node coordinates at the cell ends keep d > 0 for tiny gaps
        let at = |c0: usize, c1: usize, h: f64, l: f64| match l {
            0.0 => mesh.x[c0],
            1.0 => mesh.x[c1],
            _ => mesh.x[c0] + h * l,
        };
        let xa = at(i0, i1, hi, li.0);
        let xb = at(i0, i1, hi, li.1);
        let ya = at(j0, j1, hj, lj.0);
        let yb = at(j0, j1, hj, lj.1);
        let (si, sj) = (xb - xa, yb - ya);
        let d = ya - xb;
        let big = si.max(sj);
        if big > d {
            let (lo, hi_) = if si >= sj { li } else { lj };
            let mid = 0.5 * (lo + hi_);
            // below parameter resolution the pair is integrated as is
            if mid > lo && mid < hi_ {
                if si >= sj {
                    self.separated(i, (li.0, mid), j, lj, level, f);
                    self.separated(i, (mid, li.1), j, lj, level, f);
                } else {
                    self.separated(i, li, j, (lj.0, mid), level, f);
                    self.separated(i, li, j, (mid, lj.1), level, f);
                }
                return;
            }
        }
        let m = bernstein_order(d.max(f64::MIN_POSITIVE), big, level);
        let rule = legendre(m);
        let e = -1.0 - self.sp;
        for (s, ws) in rule.iter() {
            let lam = li.0 + (li.1 - li.0) * s;
            let x = xa + si * s;
            for (t, wt) in rule.iter() {
                let mu = lj.0 + (lj.1 - lj.0) * t;
                let y = ya + sj * t;
                let w = 2.0 * ws * wt * si * sj * self.kernel.g(x, y) * (y - x).powf(e);
                f(&Term {
                    w,
                    idx: [i0, i1, j0, j1],
                    c: [1.0 - lam, lam, mu - 1.0, -mu],
                });
            }
        }
    }

    /// `sum W |diff|^p` at both levels, rows in parallel with an ordered fold.
    pub fn energy(&self, u: &[f64]) -> Estimate {
        let active = self.mesh.active_cells(u);
        let p = self.p;
        let rows = parallel::map_range(self.mesh.cells.len(), |i| {
            let mut hi = 0.0;
            let mut lo = 0.0;
            self.visit_row(i, Level::High, Some(&active), &mut |t| hi += t.w * t.diff(u).abs().powf(p));
            self.visit_row(i, Level::Low, Some(&active), &mut |t| lo += t.w * t.diff(u).abs().powf(p));
            (hi, lo)
        });
        let value = rows.iter().map(|r| r.0).sum();
        let error = rows.iter().map(|r| (r.0 - r.1).abs()).sum();
        Estimate { value, error }
    }

    /// All high-order terms, grouped by row.
    pub fn collect_terms(&self) -> Vec<Vec<Term>> {
        parallel::map_range(self.mesh.cells.len(), |i| {
            let mut out = Vec::new();
            self.visit_row(i, Level::High, None, &mut |t| out.push(*t));
            out
        })
    }
}

/// Pieces of `[0, 1]` for `int_0^1 (c + w)^{-1-sp} ... dw` with `c = ratio`:
/// geometric grading towards 0 when the singularity at `-c` is close.
fn graded_pieces(ratio: f64) -> Vec<(f64, f64)> {
    if ratio >= 0.5 {
        return vec![(0.0, 1.0)];
    }
    let mut out = Vec::new();
    let mut a = 0.0;
    let mut b = ratio;
    while b < 1.0 {
        out.push((a, b));
        a = b;
        b *= 4.0;
    }
    out.push((a, 1.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Unit;
    impl PairKernel for Unit {
        fn g(&self, _: f64, _: f64) -> f64 {
            1.0
        }
        fn is_unit(&self) -> bool {
            true
        }
    }
    struct NoExterior;
    impl ExteriorRule for NoExterior {
        fn visit(&self, _: &Mesh, _: usize, _: Level, _: &mut dyn FnMut(&Term)) {}
    }

    #[test]
    fn linear_function_on_square_matches_closed_form() {
        // u(x) = x on [0, 2], pairs inside [0,2]^2 only:
        // int int |x - y|^{p - 1 - sp} = 2 L^{gamma + 2} / ((gamma + 1)(gamma + 2))
        let (p, sp) = (2.0, 0.6);
        let gamma = p - 1.0 - sp;
        let mesh = Mesh::from_components(&[vec![0.0, 0.1, 0.35, 0.5, 1.2, 1.3, 2.0]]);
        let eng = PairEngine::new(&mesh, &Unit, &NoExterior, p, sp, DiagonalMode::ClosedFormLinear);
        let u = mesh.x.clone();
        let e = eng.energy(&u);
        let exact = 2.0 * 2f64.powf(gamma + 2.0) / ((gamma + 1.0) * (gamma + 2.0));
        assert!((e.value - exact).abs() < 1e-10 * exact, "{} vs {exact}", e.value);
        assert!(e.error < 1e-7 * exact);
    }

    #[test]
    fn graded_pieces_cover_unit_interval() {
        let pcs = graded_pieces(1e-3);
        assert_eq!(pcs[0].0, 0.0);
        assert_eq!(pcs.last().unwrap().1, 1.0);
        for w in pcs.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert_eq!(graded_pieces(0.7), vec![(0.0, 1.0)]);
    }

    #[test]
    fn refinement_respects_target() {
        let out = refine_nodes(&[0.0, 1.0, 4.0], 4.0, 8);
        assert!(out.windows(2).all(|w| w[1] - w[0] <= 0.5 + 1e-15));
        assert_eq!(out.first(), Some(&0.0));
        assert_eq!(out.last(), Some(&4.0));
    }
}
