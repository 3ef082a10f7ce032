//! Symmetric decreasing rearrangement from exact level-set measures.

use crate::error::{require, Result};
use crate::funcspace::profile::{PiecewiseFunction1D, RadialProfile};

/// Sub-levels inserted between node levels when the radius is not linear in
/// the level (radial input with `n >= 2`).
const SUB_LEVELS: usize = 32;

/// A cell on which `|u|` is linear, from `a` at `x0` to `b` at `x1`.
#[derive(Clone, Copy)]
struct Cell {
    x0: f64,
    x1: f64,
    a: f64,
    b: f64,
}

impl Cell {
    /// Sub-interval where `|u| > t` (or `>= t` when `closed`).
    fn above(&self, t: f64, closed: bool) -> Option<(f64, f64)> {
        let hit = |v: f64| if closed { v >= t } else { v > t };
        match (hit(self.a), hit(self.b)) {
            (true, true) => Some((self.x0, self.x1)),
            (false, false) => None,
            (ha, _) => {
                let z = self.x0 + (self.x1 - self.x0) * (t - self.a) / (self.b - self.a);
                let z = z.clamp(self.x0, self.x1);
                if ha { Some((self.x0, z)) } else { Some((z, self.x1)) }
            }
        }
    }
}

/// Level sets measured as `sum (hi^n - lo^n)` and mapped to the radius
/// `(sum)^{1/n}`; for line input `n = 1` and the sum is halved.
struct LevelSets {
    cells: Vec<Cell>,
    n: i32,
    line: bool,
}

impl LevelSets {
    fn radius(&self, t: f64, closed: bool) -> f64 {
        let mut acc = 0.0;
        for c in &self.cells {
            if let Some((lo, hi)) = c.above(t, closed) {
                acc += if self.n == 1 { hi - lo } else { hi.powi(self.n) - lo.powi(self.n) };
            }
        }
        if self.line {
            0.5 * acc
        } else if self.n == 1 {
            acc
        } else {
            acc.powf(1.0 / self.n as f64)
        }
    }

    fn profile(&self, node_levels: &[f64], extent: f64) -> Result<RadialProfile> {
        let mut levels: Vec<f64> = node_levels.iter().copied().filter(|&t| t > 0.0).collect();
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        if levels.is_empty() {
            return RadialProfile::zero(extent);
        }
        levels.push(0.0);
        if self.n >= 2 {
            let mut dense = Vec::with_capacity(levels.len() * SUB_LEVELS);
            for w in levels.windows(2) {
                for k in 0..SUB_LEVELS {
                    dense.push(w[0] + (w[1] - w[0]) * k as f64 / SUB_LEVELS as f64);
                }
            }
            dense.push(0.0);
            levels = dense;
        }
        let mut radii = vec![0.0];
        let mut values = vec![levels[0]];
        let push = |r: f64, v: f64, radii: &mut Vec<f64>, values: &mut Vec<f64>| {
            let last = *radii.last().unwrap();
            // open and closed level radii can differ by rounding only
            if r - last > 8.0 * f64::EPSILON * last {
                radii.push(r);
                values.push(v);
            }
        };
        for (i, &t) in levels.iter().enumerate() {
            if i > 0 {
                push(self.radius(t, false), t, &mut radii, &mut values);
            }
            if t > 0.0 {
                push(self.radius(t, true), t, &mut radii, &mut values);
            }
        }
        if *values.last().unwrap() != 0.0 {
            let r = *radii.last().unwrap();
            radii.push(r + r.max(1.0) * 1e-12);
            values.push(0.0);
        }
        RadialProfile::new_monotone(radii, values)
    }
}

/// Symmetric decreasing rearrangement `|u|^*` in dimension `n`.
pub trait Rearrange {
    fn rearrange(&self, n: u32) -> Result<RadialProfile>;
}

impl Rearrange for PiecewiseFunction1D {
    /// The line input only supports `n = 1`.
    fn rearrange(&self, n: u32) -> Result<RadialProfile> {
        require(n == 1, || format!("a function on the line rearranges in dimension 1, got {n}"))?;
        let u = self.with_sign_breaks();
        let x = u.breakpoints();
        let v: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
        let cells = (0..x.len() - 1)
            .map(|i| Cell { x0: x[i], x1: x[i + 1], a: v[i], b: v[i + 1] })
            .collect();
        let (a, b) = u.support();
        LevelSets { cells, n: 1, line: true }.profile(&v, 0.5 * (b - a))
    }
}

impl Rearrange for RadialProfile {
    /// A profile that is already nonnegative and nonincreasing is returned as is.
    fn rearrange(&self, n: u32) -> Result<RadialProfile> {
        require(n >= 1, || "dimension must be >= 1".to_string())?;
        if self.is_monotone() && self.values().iter().all(|&v| v >= 0.0) {
            return Ok(self.clone());
        }
        let u = self.to_line().with_sign_breaks();
        let (x, vals) = (u.breakpoints(), u.values());
        let start = x.iter().position(|&r| r >= 0.0).unwrap();
        let x = &x[start..];
        let v: Vec<f64> = vals[start..].iter().map(|v| v.abs()).collect();
        let cells = (0..x.len() - 1)
            .map(|i| Cell { x0: x[i], x1: x[i + 1], a: v[i], b: v[i + 1] })
            .collect();
        LevelSets { cells, n: n as i32, line: false }.profile(&v, self.support_radius())
    }
}

pub fn rearrange<T: Rearrange>(u: &T, n: u32) -> Result<RadialProfile> {
    u.rearrange(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::norms::{lq_norm_pow, lq_norm_pow_1d};

    #[test]
    fn two_plateaus_become_one() {
        let d = 1e-9;
        let u = PiecewiseFunction1D::new(
            vec![-d, 0.0, 1.0, 1.0 + d, 2.0 - d, 2.0, 3.0, 3.0 + d],
            vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
        )
        .unwrap();
        let r = rearrange(&u, 1).unwrap();
        assert!((r.eval(0.999) - 1.0).abs() < 1e-12);
        assert!((r.eval(0.5) - 1.0).abs() < 1e-12);
        assert_eq!(r.eval(1.0 + 4.0 * d), 0.0);
        assert!((r.support_radius() - 1.0).abs() < 3e-9);
    }

    #[test]
    fn monotone_radial_is_identity() {
        let u = RadialProfile::new(vec![0.0, 0.5, 1.0], vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(rearrange(&u, 3).unwrap(), u);
        let v = u.to_line();
        let w = rearrange(&v, 1).unwrap();
        for &r in &[0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((w.eval(r) - u.eval(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn line_norms_are_preserved() {
        let u = PiecewiseFunction1D::tent_sum(&[(0.0, 1.0, 1.0), (0.8, 0.5, -2.0), (3.0, 0.2, 0.7)])
            .unwrap();
        let r = rearrange(&u, 1).unwrap();
        assert!(r.is_monotone());
        for &q in &[1.0, 2.0, 4.0] {
            let a = lq_norm_pow_1d(&u, q).unwrap();
            let b = lq_norm_pow(&r, q, 1).unwrap();
            assert!((a - b).abs() < 1e-12 * a, "q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn radial_norms_are_close() {
        let u = RadialProfile::new(vec![0.0, 0.4, 0.7, 1.0, 1.5], vec![0.2, 1.0, -0.5, 0.8, 0.0])
            .unwrap();
        for n in 1..=3 {
            let r = rearrange(&u, n).unwrap();
            for &q in &[1.0, 2.0, 4.0] {
                let a = lq_norm_pow(&u, q, n).unwrap();
                let b = lq_norm_pow(&r, q, n).unwrap();
                assert!((a - b).abs() < 2e-3 * a, "n={n} q={q}: {a} vs {b}");
            }
        }
    }
}
