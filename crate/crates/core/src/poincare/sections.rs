//! Line sections of planar domains and the uniform section certificate.

use serde::{Deserialize, Serialize};

use super::rayleigh::{rayleigh_estimate_with, RayleighConfig};
use super::{analytic_lower_bound_1d, single_interval_bound, IntervalUnionDomain};
use crate::error::{require, LabError, Result};
use crate::parallel;

/// Samples per section when locating the boundary crossings of a graph domain.
const SECTION_SAMPLES: usize = 4096;
const ROOT_TOL: f64 = 1e-10;
/// Sections shorter than this are dropped.
const MIN_PIECE: f64 = 1e-9;

/// A continuous piecewise-linear graph `y = f(x)` through `[x, y]` nodes,
/// constant beyond the first and last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Graph {
    nodes: Vec<[f64; 2]>,
}

impl TryFrom<Vec<[f64; 2]>> for Graph {
    type Error = LabError;

    fn try_from(nodes: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(nodes)
    }
}

impl From<Graph> for Vec<[f64; 2]> {
    fn from(g: Graph) -> Self {
        g.nodes
    }
}

impl Graph {
    pub fn new(nodes: Vec<[f64; 2]>) -> Result<Self> {
        require(!nodes.is_empty(), || "graph needs at least one node".to_string())?;
        require(nodes.iter().all(|n| n[0].is_finite() && n[1].is_finite()), || {
            "graph nodes must be finite".to_string()
        })?;
        require(nodes.windows(2).all(|w| w[1][0] > w[0][0]), || {
            "graph nodes must have increasing x".to_string()
        })?;
        Ok(Self { nodes })
    }

    pub fn constant(y: f64) -> Result<Self> {
        Self::new(vec![[0.0, y]])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = &self.nodes;
        if x <= n[0][0] {
            return n[0][1];
        }
        if x >= n[n.len() - 1][0] {
            return n[n.len() - 1][1];
        }
        let k = n.partition_point(|p| p[0] <= x) - 1;
        let t = (x - n[k][0]) / (n[k + 1][0] - n[k][0]);
        n[k][1] + t * (n[k + 1][1] - n[k][1])
    }

    fn range(&self) -> (f64, f64) {
        let lo = self.nodes.iter().map(|n| n[1]).fold(f64::INFINITY, f64::min);
        let hi = self.nodes.iter().map(|n| n[1]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Domain description read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    Intervals {
        intervals: IntervalUnionDomain,
    },
    /// `{x : x[axis] in union}` in the plane.
    Strips {
        intervals: IntervalUnionDomain,
        #[serde(default)]
        axis: usize,
    },
    /// `{(x, y) : lower(x) < y < upper(x)}`.
    BetweenGraphs {
        lower: Graph,
        upper: Graph,
    },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Intervals { .. } => Ok(()),
            DomainSpec::Strips { axis, .. } => require(*axis <= 1, || format!("strip axis must be 0 or 1, got {axis}")),
            DomainSpec::BetweenGraphs { lower, upper } => {
                let mut xs: Vec<f64> = lower.nodes.iter().chain(&upper.nodes).map(|n| n[0]).collect();
                xs.sort_by(f64::total_cmp);
                for x in xs {
                    require(upper.eval(x) > lower.eval(x), || {
                        format!("upper graph must lie above the lower graph (fails at x = {x})")
                    })?;
                }
                Ok(())
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| {
            if e.is_data() {
                LabError::InvalidInput(format!("domain JSON: {e}"))
            } else {
                LabError::Format(format!("domain JSON: {e}"))
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Sections `L(z, w) = {t : z w_perp + t w in domain}` for a fixed direction.
#[derive(Debug, Clone, Serialize)]
pub struct SectionFamily {
    /// Angle of `w` from the first axis.
    pub angle: f64,
    pub direction: [f64; 2],
    pub offsets: Vec<f64>,
    pub sections: Vec<IntervalUnionDomain>,
    /// Offsets whose line misses the domain.
    pub empty_offsets: Vec<f64>,
}

/// Slices a planar domain along direction `angle` at each perpendicular offset.
pub fn ls_sections(spec: &DomainSpec, angle: f64, offsets: &[f64]) -> Result<SectionFamily> {
    spec.validate()?;
    require(!offsets.is_empty(), || "need at least one offset".to_string())?;
    let (c, s) = (angle.cos(), angle.sin());
    let w = [c, s];
    let perp = [-s, c];
    let slices: Vec<Result<Option<IntervalUnionDomain>>> = parallel::map_slice(offsets, |&z| match spec {
        DomainSpec::Intervals { .. } => Err(LabError::InvalidInput("sections need a planar domain".to_string())),
        DomainSpec::Strips { intervals, axis } => strip_section(intervals, *axis, z, w, perp).map(Some),
        DomainSpec::BetweenGraphs { lower, upper } => graph_section(lower, upper, z, w, perp),
    });
    let mut family = SectionFamily { angle, direction: w, offsets: Vec::new(), sections: Vec::new(), empty_offsets: Vec::new() };
    for (&z, slice) in offsets.iter().zip(slices) {
        match slice? {
            Some(d) => {
                family.offsets.push(z);
                family.sections.push(d);
            }
            None => family.empty_offsets.push(z),
        }
    }
    require(!family.sections.is_empty(), || "no offset meets the domain".to_string())?;
    Ok(family)
}

fn strip_section(intervals: &IntervalUnionDomain, axis: usize, z: f64, w: [f64; 2], perp: [f64; 2]) -> Result<IntervalUnionDomain> {
    let wa = w[axis];
    if wa.abs() < 1e-12 {
        return Err(LabError::InvalidInput(format!(
            "direction is parallel to the strips; the section at offset {z} is a full line or empty"
        )));
    }
    let base = z * perp[axis];
    let mut pieces: Vec<(f64, f64)> = intervals
        .intervals()
        .iter()
        .map(|&(a, b)| {
            let (t0, t1) = ((a - base) / wa, (b - base) / wa);
            (t0.min(t1), t0.max(t1))
        })
        .collect();
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    IntervalUnionDomain::new(pieces)
}

fn graph_section(lower: &Graph, upper: &Graph, z: f64, w: [f64; 2], perp: [f64; 2]) -> Result<Option<IntervalUnionDomain>> {
    if w[1].abs() < 1e-12 {
        return Err(LabError::InvalidInput(format!(
            "direction is parallel to the graphs; the section at offset {z} may be unbounded"
        )));
    }
    let (ylo, _) = lower.range();
    let (_, yhi) = upper.range();
    let (ox, oy) = (z * perp[0], z * perp[1]);
    let (t0, t1) = ((ylo - oy) / w[1], (yhi - oy) / w[1]);
    let (ta, tb) = (t0.min(t1), t0.max(t1));
    let inside = |t: f64| {
        let (x, y) = (ox + t * w[0], oy + t * w[1]);
        (y - lower.eval(x)).min(upper.eval(x) - y)
    };
    let root = |mut a: f64, mut b: f64| {
        let fa_pos = inside(a) > 0.0;
        while b - a > ROOT_TOL {
            let m = 0.5 * (a + b);
            if (inside(m) > 0.0) == fa_pos {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut pieces = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev = ta;
    let mut prev_in = inside(ta) > 0.0;
    if prev_in {
        start = Some(ta);
    }
    for k in 1..=SECTION_SAMPLES {
        let t = ta + (tb - ta) * k as f64 / SECTION_SAMPLES as f64;
        let now_in = inside(t) > 0.0;
        if now_in != prev_in {
            let r = root(prev, t);
            if now_in {
                start = Some(r);
            } else if let Some(a) = start.take() {
                pieces.push((a, r));
            }
        }
        prev = t;
        prev_in = now_in;
    }
    if let Some(a) = start {
        pieces.push((a, tb));
    }
    pieces.retain(|(a, b)| b - a > MIN_PIECE);
    if pieces.is_empty() {
        return Ok(None);
    }
    IntervalUnionDomain::new(pieces).map(Some)
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionResult {
    pub offset: f64,
    pub intervals: usize,
    pub bound: f64,
    pub rayleigh: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformCheck {
    pub angle: f64,
    /// Infimum over sections; positive values certify the family.
    pub inf_bound: f64,
    /// True when the bounds are analytic (`q = p`).
    pub certified: bool,
    pub sections: Vec<SectionResult>,
}

/// Infimum over sections of the analytic lower bound (`q = p`); for `q != p`
/// the per-section Rayleigh estimates stand in and the result is not
/// certified. `rayleigh` adds per-section estimates when given.
pub fn uniform_poincare_check(
    family: &SectionFamily,
    s: f64,
    p: f64,
    q: f64,
    rayleigh: Option<&RayleighConfig>,
) -> Result<UniformCheck> {
    require(!family.sections.is_empty(), || "empty section family".to_string())?;
    let certified = q == p;
    let cfg = match (rayleigh, certified) {
        (Some(c), _) => Some(c.clone()),
        (None, false) => Some(RayleighConfig { restarts: 0, ..RayleighConfig::with_grid(64) }),
        (None, true) => None,
    };
    let rows: Vec<Result<SectionResult>> = parallel::map_range(family.sections.len(), |i| {
        let d = &family.sections[i];
        let tag = |e: LabError| LabError::InvalidInput(format!("section {i} (offset {}): {e}", family.offsets[i]));
        let est = match &cfg {
            Some(c) => Some(rayleigh_estimate_with(d, s, p, q, c).map_err(tag)?.value),
            None => None,
        };
        let bound = if !certified {
            est.unwrap()
        } else if d.intervals().len() >= 2 {
            analytic_lower_bound_1d(d, s, p).map_err(tag)?
        } else {
            single_interval_bound(d.big_m(), s, p)
        };
        require(bound.is_finite(), || format!("section {i}: bound is not finite"))?;
        Ok(SectionResult { offset: family.offsets[i], intervals: d.intervals().len(), bound, rayleigh: est })
    });
    let sections = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let inf_bound = sections.iter().map(|r| r.bound).fold(f64::INFINITY, f64::min);
    Ok(UniformCheck { angle: family.angle, inf_bound, certified, sections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn strips() -> DomainSpec {
        DomainSpec::from_json(r#"{"type":"strips","intervals":[[0,1],[2,3],[4,5]],"axis":1}"#).unwrap()
    }

    #[test]
    fn axis_aligned_strip_sections() {
        let f = ls_sections(&strips(), PI / 2.0, &[-1.0, 0.0, 2.5]).unwrap();
        for d in &f.sections {
            for (got, want) in d.intervals().iter().zip([(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]) {
                assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
            }
        }
        assert!(ls_sections(&strips(), 0.0, &[0.0]).is_err());
    }

    #[test]
    fn diagonal_strip_gaps_scale() {
        let f = ls_sections(&strips(), PI / 4.0, &[0.3]).unwrap();
        let d = &f.sections[0];
        assert!((d.m() - 2f64.sqrt()).abs() < 1e-12);
        assert!((d.big_m() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_graph_sections() {
        let spec = DomainSpec::BetweenGraphs { lower: Graph::constant(0.0).unwrap(), upper: Graph::constant(1.0).unwrap() };
        let f = ls_sections(&spec, PI / 2.0, &[-3.0, 0.0, 7.0]).unwrap();
        for d in &f.sections {
            let (a, b) = d.intervals()[0];
            assert_eq!(d.intervals().len(), 1);
            assert!(a.abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
        }
        assert!(ls_sections(&spec, 0.0, &[0.5]).is_err());
    }

    #[test]
    fn wavy_graph_sections_split() {
        let spec = DomainSpec::from_json(
            r#"{"type":"between_graphs","lower":[[-1,0],[0,0.8],[1,0]],"upper":[[-2,1],[2,1]]}"#,
        )
        .unwrap();
        // the horizontal-ish line y = 0.5 + 0.01 x cuts the bump twice
        let angle = 0.01f64.atan();
        let z = 0.5 * angle.cos();
        let f = ls_sections(&spec, angle, &[z]).unwrap();
        assert_eq!(f.sections[0].intervals().len(), 2);
        let bad = r#"{"type":"between_graphs","lower":[[0,1]],"upper":[[0,1]]}"#;
        assert!(DomainSpec::from_json(bad).is_err());
    }

    #[test]
    fn certificate_decreases_towards_parallel() {
        let offs: Vec<f64> = (0..5).map(|k| k as f64 * 0.7).collect();
        let mut last = f64::INFINITY;
        for &deg in &[90.0, 60.0, 30.0, 10.0] {
            let f = ls_sections(&strips(), f64::to_radians(deg), &offs).unwrap();
            let c = uniform_poincare_check(&f, 0.5, 2.0, 2.0, None).unwrap();
            assert!(c.inf_bound > 0.0 && c.inf_bound < last, "{deg}: {}", c.inf_bound);
            last = c.inf_bound;
        }
    }
}
