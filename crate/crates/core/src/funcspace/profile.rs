//! Sampled function representations and quadrature settings.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require, LabError, Result};

/// A radial function `u(x) = f(|x|)` given by piecewise-linear interpolation
/// of `values` on `radii`, zero beyond the last radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    monotone: bool,
}

fn check_grid(points: &[f64], values: &[f64], what: &str) -> Result<()> {
    require(points.len() == values.len(), || {
        format!("{what}: {} points but {} values", points.len(), values.len())
    })?;
    require(points.len() >= 2, || format!("{what}: need at least two points"))?;
    for (i, w) in points.windows(2).enumerate() {
        require(w[1] > w[0], || {
            format!("{what}: grid must be strictly increasing (index {})", i + 1)
        })?;
    }
    require(points.iter().all(|x| x.is_finite()), || format!("{what}: non-finite grid point"))?;
    require(values.iter().all(|v| v.is_finite()), || format!("{what}: non-finite value"))
}

impl RadialProfile {
    /// Builds a profile; the grid must start at 0 and the last value must be 0.
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&radii, &values, "radial profile")?;
        require(radii[0] == 0.0, || format!("radial profile: first radius must be 0, got {}", radii[0]))?;
        require(*values.last().unwrap() == 0.0, || {
            "radial profile: final value must be 0 (compact support)".to_string()
        })?;
        let monotone = values.windows(2).all(|w| w[1] <= w[0]);
        Ok(Self { radii, values, monotone })
    }

    /// Like [`RadialProfile::new`] but rejects profiles that are not nonincreasing.
    pub fn new_monotone(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let u = Self::new(radii, values)?;
        u.require_monotone()?;
        Ok(u)
    }

    pub fn zero(support_radius: f64) -> Result<Self> {
        require(support_radius > 0.0, || "support radius must be positive".to_string())?;
        Self::new(vec![0.0, support_radius], vec![0.0, 0.0])
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Values vanish beyond this radius.
    pub fn support_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Nonincreasing in `r`.
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn require_monotone(&self) -> Result<()> {
        if let Some(i) = self.values.windows(2).position(|w| w[1] > w[0]) {
            return Err(LabError::InvalidInput(format!(
                "profile is not nonincreasing: value rises after r = {}",
                self.radii[i]
            )));
        }
        Ok(())
    }

    pub fn require_nonnegative(&self) -> Result<()> {
        require(self.values.iter().all(|&v| v >= 0.0), || "profile must be nonnegative".to_string())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear evaluation at radius `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        interpolate(&self.radii, &self.values, r)
    }

    /// Multiplies the values by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|v| c * v).collect();
        let monotone = values.windows(2).all(|w| w[1] <= w[0]);
        Self { radii: self.radii.clone(), values, monotone }
    }

    /// The even extension `x -> u(|x|)` on the line.
    pub fn to_line(&self) -> PiecewiseFunction1D {
        let m = self.radii.len();
        let mut x = Vec::with_capacity(2 * m - 1);
        let mut v = Vec::with_capacity(2 * m - 1);
        for i in (1..m).rev() {
            x.push(-self.radii[i]);
            v.push(self.values[i]);
        }
        x.extend_from_slice(&self.radii);
        v.extend_from_slice(&self.values);
        PiecewiseFunction1D { breakpoints: x, values: v }
    }

    pub(crate) fn from_parts_unchecked(radii: Vec<f64>, values: Vec<f64>) -> Self {
        let monotone = values.windows(2).all(|w| w[1] <= w[0]);
        Self { radii, values, monotone }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (r, v) = read_two_columns(reader, "r")?;
        Self::new(r, v)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_two_columns(writer, "r", &self.radii, &self.values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// A continuous piecewise-linear function on the line, zero outside
/// `[breakpoints[0], breakpoints[last]]`. Both end values are 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseFunction1D {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseFunction1D {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&breakpoints, &values, "piecewise function")?;
        require(values[0] == 0.0 && *values.last().unwrap() == 0.0, || {
            "piecewise function: end values must be 0 so that the extension by zero is continuous"
                .to_string()
        })?;
        Ok(Self { breakpoints, values })
    }

    pub fn zero(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![0.0, 0.0])
    }

    /// Sum of tent functions `h_i * max(0, 1 - |x - c_i| / w_i)`.
    pub fn tent_sum(tents: &[(f64, f64, f64)]) -> Result<Self> {
        require(!tents.is_empty(), || "tent sum needs at least one tent".to_string())?;
        let mut pts: Vec<f64> = Vec::with_capacity(3 * tents.len());
        for &(c, w, _) in tents {
            require(w > 0.0, || format!("tent half-width must be positive, got {w}"))?;
            pts.extend_from_slice(&[c - w, c, c + w]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let vals: Vec<f64> = pts
            .iter()
            .map(|&x| {
                tents
                    .iter()
                    .map(|&(c, w, h)| h * (1.0 - (x - c).abs() / w).max(0.0))
                    .sum()
            })
            .collect::<Vec<f64>>();
        // round-off can leave tiny residues at the outer feet
        let last = vals.len() - 1;
        let mut vals = vals;
        vals[0] = 0.0;
        vals[last] = 0.0;
        Self::new(pts, vals)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a || x >= b {
            return 0.0;
        }
        interpolate(&self.breakpoints, &self.values, x)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `x -> u(-x)`.
    pub fn reflected(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().rev().map(|x| -x).collect(),
            values: self.values.iter().rev().copied().collect(),
        }
    }

    /// `x -> u(x - shift)`.
    pub fn translated(&self, shift: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|x| x + shift).collect(),
            values: self.values.clone(),
        }
    }

    /// Inserts the zeros of `u` inside cells where it changes sign, so that
    /// `|u|` is linear on every cell.
    pub(crate) fn with_sign_breaks(&self) -> Self {
        let mut x = vec![self.breakpoints[0]];
        let mut v = vec![self.values[0]];
        for i in 1..self.breakpoints.len() {
            let (x0, x1) = (self.breakpoints[i - 1], self.breakpoints[i]);
            let (v0, v1) = (self.values[i - 1], self.values[i]);
            if v0 * v1 < 0.0 {
                let t = v0 / (v0 - v1);
                let z = x0 + t * (x1 - x0);
                if z > x0 && z < x1 {
                    x.push(z);
                    v.push(0.0);
                }
            }
            x.push(x1);
            v.push(v1);
        }
        Self { breakpoints: x, values: v }
    }

    pub(crate) fn from_parts_unchecked(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        Self { breakpoints, values }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (x, v) = read_two_columns(reader, "x")?;
        Self::new(x, v)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_two_columns(writer, "x", &self.breakpoints, &self.values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub(crate) fn interpolate(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return vs[0];
    }
    if x >= xs[last] {
        return vs[last];
    }
    let j = xs.partition_point(|&p| p <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = (x - x0) / (x1 - x0);
    vs[j - 1] + t * (vs[j] - vs[j - 1])
}

fn parse_field(field: &str, line: u64) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|e| LabError::Format(format!("line {line}: cannot parse `{field}`: {e}")))
}

fn read_two_columns<R: Read>(reader: R, key: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != key || &headers[1] != "value" {
        return Err(LabError::Format(format!(
            "expected header `{key},value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        xs.push(parse_field(&rec[0], line)?);
        vs.push(parse_field(&rec[1], line)?);
    }
    Ok((xs, vs))
}

fn write_two_columns<W: Write>(writer: W, key: &str, xs: &[f64], vs: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([key, "value"])?;
    for (x, v) in xs.iter().zip(vs) {
        w.write_record([format_float(*x), format_float(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation.
pub(crate) fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Treatment of same-cell pairs in the singular double integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    /// Exact integration of the local linear model.
    ClosedFormLinear,
    /// Drops same-cell pairs (biased low; kept for comparison).
    BandExclusion,
}

/// Resolution and tolerance settings for the singular double integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub cells_per_dim: usize,
    pub diagonal_mode: DiagonalMode,
    /// Radius beyond which the inner integral is done analytically; `None`
    /// picks twice the support radius.
    pub tail_radius: Option<f64>,
    pub target_rel_err: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            cells_per_dim: 64,
            diagonal_mode: DiagonalMode::ClosedFormLinear,
            tail_radius: None,
            target_rel_err: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        require(self.cells_per_dim >= 8, || {
            format!("cells_per_dim must be >= 8, got {}", self.cells_per_dim)
        })?;
        require(self.target_rel_err > 0.0, || {
            format!("target_rel_err must be positive, got {}", self.target_rel_err)
        })
    }

    pub(crate) fn tail_for(&self, support_radius: f64) -> Result<f64> {
        match self.tail_radius {
            None => Ok(2.0 * support_radius),
            Some(t) => {
                require(t > support_radius, || {
                    format!("tail_radius {t} must exceed the support radius {support_radius}")
                })?;
                Ok(t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_ok());
        assert!(RadialProfile::new(vec![0.1, 1.0], vec![1.0, 0.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0, 1.0], vec![1.0, 0.5, 0.0]).is_err());
        assert!(RadialProfile::new_monotone(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 0.0]).is_err());
        assert!(PiecewiseFunction1D::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let u = RadialProfile::new(vec![0.0, 0.3, 1.0], vec![2.0, 1.0 / 3.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,value\n"));
        let back = RadialProfile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(u, back);
        let bad = "x,value\n0,1\n1,0\n";
        assert!(matches!(RadialProfile::read_csv(bad.as_bytes()), Err(LabError::Format(_))));
    }

    #[test]
    fn line_extension_and_sign_breaks() {
        let u = RadialProfile::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0]).unwrap();
        let l = u.to_line();
        assert_eq!(l.breakpoints(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(l.eval(-0.5), 0.75);
        let w = PiecewiseFunction1D::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, -1.0, 0.0])
            .unwrap()
            .with_sign_breaks();
        assert_eq!(w.breakpoints(), &[0.0, 1.0, 1.5, 2.0, 3.0]);
    }

    #[test]
    fn tent_sum_values() {
        let u = PiecewiseFunction1D::tent_sum(&[(0.0, 1.0, 2.0), (0.5, 0.5, 1.0)]).unwrap();
        assert_eq!(u.eval(0.0), 2.0);
        assert!((u.eval(0.5) - 2.0).abs() < 1e-15);
        assert_eq!(u.eval(5.0), 0.0);
    }
}
