//! Background functions absorbing the Dirac sources of the string equation.
//!
//! For centers `p_s` with multiplicities `n_s`:
//!
//! ```text
//! u0      = Σ n_s ln(|x-p_s|² / (1+|x-p_s|²))
//! w0      = Σ n_s ln(1+|x-p_s|²)
//! g       = Δw0 = 4 Σ n_s / (1+|x-p_s|²)²
//! u0^δ    = Σ n_s ln((δ+|x-p_s|²) / (1+|x-p_s|²))
//! F_δ     = Π (δ+|x-p_s|²)^(-a n_s)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points closer than this to a center count as sitting on it.
pub const CENTER_EPS: f64 = 1e-12;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackgroundError {
    #[error("string center multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("string center ({0}, {1}) is not finite")]
    NonFinite(f64, f64),
    #[error("regularization parameter must lie in (0, 1), got {0}")]
    Delta(f64),
}

/// Evaluation landed on a string center, where `u0 = -∞`.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("evaluation point coincides with string center {center}")]
pub struct OnCenter {
    pub center: usize,
    /// Signed-infinity value of the function at the center.
    pub sentinel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringCenter {
    pub x: f64,
    pub y: f64,
    pub multiplicity: u32,
}

impl StringCenter {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

/// String centers with merged multiplicities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StringConfiguration {
    centers: Vec<StringCenter>,
    total: u32,
}

impl StringConfiguration {
    /// Builds a configuration, merging points that coincide to within
    /// [`CENTER_EPS`].
    pub fn new<I>(centers: I) -> Result<Self, BackgroundError>
    where
        I: IntoIterator<Item = (Point, u32)>,
    {
        let mut merged: Vec<StringCenter> = Vec::new();
        for (p, n) in centers {
            if n == 0 {
                return Err(BackgroundError::ZeroMultiplicity);
            }
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(BackgroundError::NonFinite(p[0], p[1]));
            }
            match merged
                .iter_mut()
                .find(|c| dist2(c.point(), p).sqrt() < CENTER_EPS)
            {
                Some(c) => c.multiplicity += n,
                None => merged.push(StringCenter { x: p[0], y: p[1], multiplicity: n }),
            }
        }
        let total = merged.iter().map(|c| c.multiplicity).sum();
        Ok(Self { centers: merged, total })
    }

    /// Every string at a single point.
    pub fn coincident(p: Point, n: u32) -> Self {
        if n == 0 {
            return Self::empty();
        }
        Self { centers: vec![StringCenter { x: p[0], y: p[1], multiplicity: n }], total: n }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn centers(&self) -> &[StringCenter] {
        &self.centers
    }

    /// Total string number `N`.
    pub fn n(&self) -> u32 {
        self.total
    }

    pub fn distinct_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn max_center_norm(&self) -> f64 {
        self.centers
            .iter()
            .map(|c| c.x.hypot(c.y))
            .fold(0.0, f64::max)
    }

    pub fn nearest_center(&self, x: Point) -> Option<(usize, f64)> {
        self.centers
            .iter()
            .enumerate()
            .map(|(i, c)| (i, dist2(c.point(), x).sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn check_off_center(&self, x: Point) -> Result<(), OnCenter> {
        match self.nearest_center(x) {
            Some((center, d)) if d < CENTER_EPS => Err(OnCenter { center, sentinel: f64::NEG_INFINITY }),
            _ => Ok(()),
        }
    }

    /// `u0(x) <= 0`; `-∞` at a center, reported through [`OnCenter`].
    pub fn u0(&self, x: Point) -> Result<f64, OnCenter> {
        self.check_off_center(x)?;
        Ok(-self.weighted_sum(x, |d2| (1.0 / d2).ln_1p()))
    }

    /// `w0(x) >= 0`.
    pub fn w0(&self, x: Point) -> f64 {
        self.weighted_sum(x, f64::ln_1p)
    }

    /// Smooth source `g = Δw0 > 0`.
    pub fn source_g(&self, x: Point) -> f64 {
        4.0 * self.weighted_sum(x, |d2| 1.0 / ((1.0 + d2) * (1.0 + d2)))
    }

    /// Regularized background, finite everywhere.
    pub fn u0_delta(&self, reg: RegularizationParam, x: Point) -> f64 {
        let delta = reg.delta();
        -self.weighted_sum(x, |d2| ((1.0 - delta) / (delta + d2)).ln_1p())
    }

    /// `F_δ(x) = Π (δ+|x-p_s|²)^(-a n_s)`.
    pub fn f_delta(&self, reg: RegularizationParam, a: f64, x: Point) -> f64 {
        (-a * self.weighted_sum(x, |d2| (reg.delta() + d2).ln())).exp()
    }

    /// `Σ n_s ln|x-p_s|²`, the harmonic part `u0 + w0`.
    pub fn log_distance_sum(&self, x: Point) -> Result<f64, OnCenter> {
        self.check_off_center(x)?;
        Ok(self.weighted_sum(x, f64::ln))
    }

    /// `Σ_s n_s φ(|x - p_s|²)`.
    fn weighted_sum(&self, x: Point, phi: impl Fn(f64) -> f64) -> f64 {
        self.centers
            .iter()
            .map(|c| c.multiplicity as f64 * phi(dist2(c.point(), x)))
            .sum()
    }
}

/// `δ ∈ (0, 1)`; the value 1 is admitted as the trivial end of the family
/// (`u0^1 ≡ 0`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RegularizationParam(f64);

impl RegularizationParam {
    pub fn new(delta: f64) -> Result<Self, BackgroundError> {
        if delta > 0.0 && delta <= 1.0 {
            Ok(Self(delta))
        } else {
            Err(BackgroundError::Delta(delta))
        }
    }

    pub fn delta(&self) -> f64 {
        self.0
    }
}

#[inline]
pub(crate) fn dist2(p: Point, q: Point) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    dx * dx + dy * dy
}
