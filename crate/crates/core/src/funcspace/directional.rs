//! Planar grid functions and the directional (line-section) form of the
//! seminorm, with a direct lattice sum for comparison.

use std::f64::consts::PI;

use crate::error::{require, LabError, Result};
use crate::funcspace::engine::legendre;
use crate::funcspace::line::{check_order_exponent, gagliardo_1d_estimate};
use crate::funcspace::profile::{PiecewiseFunction1D, QuadratureSpec};
use crate::parallel::{map_range, sum_range};

/// Bilinear interpolant of node values on a uniform square grid, zero
/// outside the grid box. Boundary values must vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    x0: f64,
    y0: f64,
    h: f64,
    nx: usize,
    ny: usize,
    /// Row-major, `values[j * nx + i]` at `(x0 + i h, y0 + j h)`.
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        require(h > 0.0 && h.is_finite(), || format!("grid spacing must be positive, got {h}"))?;
        require(nx >= 3 && ny >= 3, || "grid needs at least 3 nodes per axis".to_string())?;
        require(values.len() == nx * ny, || {
            format!("grid expects {} values, got {}", nx * ny, values.len())
        })?;
        require(values.iter().all(|v| v.is_finite()), || "non-finite grid value".to_string())?;
        let edge = (0..nx).any(|i| values[i] != 0.0 || values[(ny - 1) * nx + i] != 0.0)
            || (0..ny).any(|j| values[j * nx] != 0.0 || values[j * nx + nx - 1] != 0.0);
        require(!edge, || "grid values must vanish on the boundary".to_string())?;
        Ok(Self { x0, y0, h, nx, ny, values })
    }

    /// Samples `f` on the square of half-width `half` about `(cx, cy)` with
    /// `cells` cells per axis; boundary nodes are set to 0.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(center: (f64, f64), half: f64, cells: usize, f: F) -> Result<Self> {
        require(cells >= 2, || "need at least 2 cells per axis".to_string())?;
        let h = 2.0 * half / cells as f64;
        let n = cells + 1;
        let (x0, y0) = (center.0 - half, center.1 - half);
        let mut values = vec![0.0; n * n];
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                values[j * n + i] = f(x0 + i as f64 * h, y0 + j as f64 * h);
            }
        }
        Self::new(x0, y0, h, n, n, values)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    fn center(&self) -> (f64, f64) {
        (
            self.x0 + 0.5 * (self.nx - 1) as f64 * self.h,
            self.y0 + 0.5 * (self.ny - 1) as f64 * self.h,
        )
    }

    fn half_diagonal(&self) -> f64 {
        0.5 * self.h * (((self.nx - 1).pow(2) + (self.ny - 1).pow(2)) as f64).sqrt()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.x0) / self.h;
        let fy = (y - self.y0) / self.h;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (self.nx - 1) as f64 && fy <= (self.ny - 1) as f64) {
            return 0.0;
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v = |a: usize, b: usize| self.values[b * self.nx + a];
        (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j)) + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1))
    }

    /// Rotation by a quarter turn about the grid centre: `(x, y) -> u(y', -x')`
    /// in centred coordinates.
    pub fn rotated90(&self) -> Self {
        let (nx, ny) = (self.ny, self.nx);
        let mut values = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                // new (i, j) takes old (j, nx - 1 - i)
                values[j * nx + i] = self.values[(nx - 1 - i) * self.nx + j];
            }
        }
        let (cx, cy) = self.center();
        Self {
            x0: cx - 0.5 * (nx - 1) as f64 * self.h,
            y0: cy - 0.5 * (ny - 1) as f64 * self.h,
            h: self.h,
            nx,
            ny,
            values,
        }
    }
}

/// Line quadrature used for each section.
pub fn section_quadrature() -> QuadratureSpec {
    QuadratureSpec { target_rel_err: 1e-5, ..QuadratureSpec::default() }
}

/// `int_{phi in [0, pi)} int_{P(phi)} [u restricted to the line]^p dz dphi`,
/// which equals `[u]^p_{s,p,R^2}`. Directions are the midpoints
/// `(k + 1/2) pi / N`; offsets and samples along each line are spaced by the
/// grid step.
pub fn directional_seminorm(u: &Grid2D, s: f64, p: f64, n_directions: usize) -> Result<f64> {
    directional_seminorm_with(u, s, p, n_directions, &section_quadrature())
}

pub fn directional_seminorm_with(
    u: &Grid2D,
    s: f64,
    p: f64,
    n_directions: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_order_exponent(s, p)?;
    require(n_directions >= 1, || "need at least one direction".to_string())?;
    if u.is_zero() {
        return Ok(0.0);
    }
    let big_r = u.half_diagonal();
    let step = u.h;
    let count = (2.0 * big_r / step).ceil() as usize;
    let (cx, cy) = u.center();
    let lines = n_directions * count;
    let rows: Vec<Result<f64>> = map_range(lines, |idx| {
        let k = idx / count;
        let j = idx % count;
        let phi = (k as f64 + 0.5) * PI / n_directions as f64;
        let (c, sn) = (phi.cos(), phi.sin());
        let z = -big_r + (j as f64 + 0.5) * step;
        let bx = cx - z * sn;
        let by = cy + z * c;
        let samples: Vec<f64> = (0..=count)
            .map(|m| {
                let t = -big_r + m as f64 * step;
                u.eval(bx + t * c, by + t * sn)
            })
            .collect();
        let Some(first) = samples.iter().position(|&v| v != 0.0) else {
            return Ok(0.0);
        };
        let last = samples.iter().rposition(|&v| v != 0.0).unwrap();
        let lo = first.saturating_sub(1);
        let hi = (last + 1).min(count);
        let ts: Vec<f64> = (lo..=hi).map(|m| -big_r + m as f64 * step).collect();
        let mut vs = samples[lo..=hi].to_vec();
        vs[0] = 0.0;
        *vs.last_mut().unwrap() = 0.0;
        let f = PiecewiseFunction1D::new(ts, vs)?;
        Ok(gagliardo_1d_estimate(&f, s, p, quad)?.value)
    });
    let mut acc = 0.0;
    for r in rows {
        acc += r?;
    }
    Ok(acc * step * PI / n_directions as f64)
}

/// `int_{R^2 \ B} |x - y|^{-2-sp} dy` for the closed rectangle `B`, by
/// integrating the distance to the boundary over the angle.
fn rectangle_exterior(x: f64, y: f64, rect: [f64; 4], sp: f64) -> f64 {
    let [xa, xb, ya, yb] = rect;
    let d = [xb - x, yb - y, x - xa, y - ya];
    // corner angles, counter-clockwise from the +x axis
    let corners = [
        (yb - y).atan2(xb - x),
        (yb - y).atan2(xa - x),
        (ya - y).atan2(xa - x) + 2.0 * PI,
        (ya - y).atan2(xb - x) + 2.0 * PI,
    ];
    let rule = legendre(24);
    let mut acc = 0.0;
    for side in 0..4 {
        let (a, b) = if side == 0 { (corners[3] - 2.0 * PI, corners[0]) } else { (corners[side - 1], corners[side]) };
        let normal = side as f64 * 0.5 * PI;
        let inner: f64 = rule.iter().map(|(t, w)| w * (a + (b - a) * t - normal).cos().powf(sp)).sum();
        acc += (b - a) * inner * d[side].powf(-sp);
    }
    acc / sp
}

/// Direct lattice evaluation of `[u]^p_{s,p,R^2}`: the midpoint sum over node
/// pairs, with each node standing for its cell, plus the exterior of the
/// cell union done by angular integration. The omitted self-pairs cost
/// `O(h^{p - sp})`.
pub fn direct_seminorm_2d(u: &Grid2D, s: f64, p: f64) -> Result<f64> {
    check_order_exponent(s, p)?;
    if u.is_zero() {
        return Ok(0.0);
    }
    let sp = s * p;
    let (nx, ny) = (u.nx, u.ny);
    let h = u.h;
    let kernel: Vec<f64> = (0..nx * ny)
        .map(|idx| {
            let (di, dj) = ((idx % nx) as f64, (idx / nx) as f64);
            let r2 = (di * di + dj * dj) * h * h;
            if idx == 0 { 0.0 } else { r2.powf(-0.5 * (2.0 + sp)) }
        })
        .collect();
    let active: Vec<usize> = (0..nx * ny).filter(|&i| u.values[i] != 0.0).collect();
    let ip = if p.fract() == 0.0 && p <= 16.0 { Some(p as i32) } else { None };
    let pow = |d: f64| match ip {
        Some(k) => d.abs().powi(k),
        None => d.abs().powf(p),
    };
    let h4 = h.powi(4);
    // pairs with at least one active node: active x all, minus double-counted active x active
    let pair_sum = sum_range(active.len(), |a| {
        let i = active[a];
        let (ii, ij) = (i % nx, i / nx);
        let ui = u.values[i];
        let mut row = 0.0;
        for j in 0..ny {
            let dj = ij.abs_diff(j);
            let base = j * nx;
            for k in 0..nx {
                let uj = u.values[base + k];
                let w = kernel[dj * nx + ii.abs_diff(k)];
                let factor = if uj != 0.0 { 1.0 } else { 2.0 };
                row += factor * w * pow(ui - uj);
            }
        }
        row
    });
    let rect = [u.x0 - 0.5 * h, u.x0 + (nx as f64 - 0.5) * h, u.y0 - 0.5 * h, u.y0 + (ny as f64 - 0.5) * h];
    let ext = sum_range(active.len(), |a| {
        let i = active[a];
        let (x, y) = u.node(i % nx, i / nx);
        pow(u.values[i]) * rectangle_exterior(x, y, rect, sp)
    });
    let value = pair_sum * h4 + 2.0 * ext * h * h;
    if !value.is_finite() {
        return Err(LabError::NonConvergence("lattice sum overflowed".to_string()));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CriticalParams;
    use crate::funcspace::profile::RadialProfile;
    use crate::funcspace::radial::gagliardo_radial;

    fn bump(x: f64, y: f64) -> f64 {
        (1.0 - x * x - y * y).max(0.0).powi(2)
    }

    #[test]
    fn rectangle_exterior_closed_form() {
        // centre of the square [-a, a]^2 with sp = 2: (1/2) int d(theta)^{-2}
        // = (1/2) 8 int_0^{pi/4} cos^2 / a^2 = (pi/2 + 1) / a^2 (times 1)
        let a = 1.5;
        let v = rectangle_exterior(0.0, 0.0, [-a, a, -a, a], 2.0);
        let want = 4.0 * (PI / 8.0 + 0.25) / (a * a);
        assert!((v - want).abs() < 1e-12 * want, "{v} vs {want}");
    }

    #[test]
    fn zero_and_rotation() {
        let z = Grid2D::from_fn((0.0, 0.0), 1.5, 16, |_, _| 0.0).unwrap();
        assert_eq!(directional_seminorm(&z, 0.5, 4.0, 4).unwrap(), 0.0);
        assert_eq!(direct_seminorm_2d(&z, 0.5, 4.0).unwrap(), 0.0);
        let u = Grid2D::from_fn((0.0, 0.0), 1.5, 24, |x, y| bump((x - 0.2) / 0.9, y / 0.6)).unwrap();
        let a = directional_seminorm(&u, 0.5, 4.0, 8).unwrap();
        let b = directional_seminorm(&u.rotated90(), 0.5, 4.0, 8).unwrap();
        assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
        let c = direct_seminorm_2d(&u, 0.5, 4.0).unwrap();
        let d = direct_seminorm_2d(&u.rotated90(), 0.5, 4.0).unwrap();
        assert!((c - d).abs() < 1e-12 * c);
    }

    #[test]
    fn radial_bump_matches_radial_engine() {
        let params = CriticalParams::critical(2, 0.5).unwrap();
        let m = 400;
        let radii: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let vals: Vec<f64> = radii.iter().map(|&r| bump(r, 0.0)).collect();
        let prof = RadialProfile::new(radii, vals).unwrap();
        let exact = gagliardo_radial(&prof, &params, &QuadratureSpec::default()).unwrap();
        let u = Grid2D::from_fn((0.0, 0.0), 1.25, 40, bump).unwrap();
        let v = directional_seminorm(&u, 0.5, 4.0, 6).unwrap();
        let w = direct_seminorm_2d(&u, 0.5, 4.0).unwrap();
        assert!((v - exact).abs() < 0.05 * exact, "directional {v} vs {exact}");
        assert!((w - exact).abs() < 0.05 * exact, "lattice {w} vs {exact}");
    }
}
