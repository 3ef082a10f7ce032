//! Dilations and translations of sampled functions.

use crate::error::{require, Result};
use crate::funcspace::profile::{PiecewiseFunction1D, RadialProfile};

fn check_scale(l: f64) -> Result<()> {
    require(l > 0.0 && l.is_finite(), || format!("scale must be positive and finite, got {l}"))
}

/// Change of variables on a sampled representation.
pub trait Rescale: Sized {
    type Point;

    /// `x -> u(l x)`.
    fn dilate(&self, l: f64) -> Result<Self>;

    /// `x -> u((x - x0) / l)`.
    fn translate_dilate(&self, x0: Self::Point, l: f64) -> Result<Self>;
}

impl Rescale for RadialProfile {
    /// Only the origin keeps a profile radial; other centres are rejected.
    type Point = Vec<f64>;

    fn dilate(&self, l: f64) -> Result<Self> {
        check_scale(l)?;
        let radii = self.radii().iter().map(|r| r / l).collect();
        Ok(RadialProfile::from_parts_unchecked(radii, self.values().to_vec()))
    }

    fn translate_dilate(&self, x0: Vec<f64>, l: f64) -> Result<Self> {
        require(x0.iter().all(|&c| c == 0.0), || {
            "a radial profile can only be rescaled about the origin".to_string()
        })?;
        self.dilate(1.0 / l)
    }
}

impl Rescale for PiecewiseFunction1D {
    type Point = f64;

    fn dilate(&self, l: f64) -> Result<Self> {
        check_scale(l)?;
        let x = self.breakpoints().iter().map(|x| x / l).collect();
        Ok(PiecewiseFunction1D::from_parts_unchecked(x, self.values().to_vec()))
    }

    fn translate_dilate(&self, x0: f64, l: f64) -> Result<Self> {
        check_scale(l)?;
        require(x0.is_finite(), || "centre must be finite".to_string())?;
        let x = self.breakpoints().iter().map(|x| x0 + l * x).collect();
        Ok(PiecewiseFunction1D::from_parts_unchecked(x, self.values().to_vec()))
    }
}

pub fn dilate<T: Rescale>(u: &T, l: f64) -> Result<T> {
    u.dilate(l)
}

pub fn translate_dilate<T: Rescale>(u: &T, x0: T::Point, l: f64) -> Result<T> {
    u.translate_dilate(x0, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::norms::{lq_norm_pow, lq_norm_pow_1d};

    fn tent() -> PiecewiseFunction1D {
        PiecewiseFunction1D::tent_sum(&[(0.3, 0.5, 1.0), (1.0, 0.4, -0.6)]).unwrap()
    }

    #[test]
    fn identity_and_support() {
        let u = tent();
        assert_eq!(dilate(&u, 1.0).unwrap(), u);
        assert_eq!(translate_dilate(&u, 0.0, 1.0).unwrap(), u);
        let (a, b) = u.support();
        let (c, d) = dilate(&u, 4.0).unwrap().support();
        assert!((c - a / 4.0).abs() < 1e-15 && (d - b / 4.0).abs() < 1e-15);
        let (c, d) = translate_dilate(&u, 2.0, 3.0).unwrap().support();
        assert!((d - c - 3.0 * (b - a)).abs() < 1e-12);
        assert!(dilate(&u, 0.0).is_err());
        assert!(dilate(&u, -1.0).is_err());
    }

    #[test]
    fn norm_laws() {
        let u = tent();
        for &q in &[1.0, 2.0, 3.5] {
            let base = lq_norm_pow_1d(&u, q).unwrap();
            let v = translate_dilate(&u, -1.5, 2.5).unwrap();
            assert!((lq_norm_pow_1d(&v, q).unwrap() - 2.5 * base).abs() < 1e-8 * base);
        }
        let r = RadialProfile::new(vec![0.0, 0.5, 2.0], vec![2.0, 1.0, 0.0]).unwrap();
        for n in 1..=3 {
            let base = lq_norm_pow(&r, 2.0, n).unwrap();
            let d = lq_norm_pow(&dilate(&r, 5.0).unwrap(), 2.0, n).unwrap();
            assert!((d - 5f64.powi(-(n as i32)) * base).abs() < 1e-10 * base);
        }
        assert!(translate_dilate(&r, vec![0.1, 0.0], 2.0).is_err());
        let t = translate_dilate(&r, vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(t.support_radius(), 4.0);
    }
}
