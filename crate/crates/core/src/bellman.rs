//! Closed-form Bellman functions and the coordinate machinery around them.
//!
//! States live in two coordinate systems:
//!
//! * `(g, f, F)`, prescribed averages: `g` the mean of the transformed
//!   function, `f` the mean of the source, `F` the mean of its absolute
//!   value. Domain `Omega = {F >= |f|}`.
//! * `(y1, y2, F)` with `y1 = (f-g)/2`, `y2 = (-f-g)/2`, rotated
//!   coordinates in which admissible splits move only one of `y1`, `y2`.
//!   Domain `G = {|y1-y2| <= F}`.
//!
//! The three closed forms:
//!
//! * `bellman_b0(lambda, f, F)` = 1 for `lambda <= F`, else
//!   `1 - (lambda-F)^2/(lambda^2-f^2)`;
//! * `bellman_b(g, f, F)` = `bellman_b0(-g, f, F)`;
//! * `bellman_m(y1, y2, F)` = 1 for `F >= y1+y2` (this covers
//!   `min(y1,y2) <= 0`), else `1 - (F-y1-y2)^2/(4 y1 y2)`.
//!
//! In the fan region `0 < y2 <= y1`, `y1-y2 <= F <= y1+y2` the graph of `M`
//! is ruled by straight lines; [`characteristics`] returns the line
//! parameters `(t, t1, t2)` with `M = t1*F + t2*y2 + t` exactly.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative tolerance admitting rounded boundary points into the domains.
pub const DOMAIN_TOL: f64 = 1e-12;

/// A state given by prescribed averages `(g, f, F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointGff {
    pub g: f64,
    pub f: f64,
    #[serde(rename = "F")]
    pub big_f: f64,
}

/// A state in rotated coordinates `(y1, y2, F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointY {
    pub y1: f64,
    pub y2: f64,
    #[serde(rename = "F")]
    pub big_f: f64,
}

/// Characteristic line coordinates in the fan region: `M = t1*F + t2*y2 + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCoords {
    pub t: f64,
    pub t1: f64,
    pub t2: f64,
}

impl PointGff {
    pub fn new(g: f64, f: f64, big_f: f64) -> Result<Self> {
        let p = Self { g, f, big_f };
        p.check()?;
        Ok(p)
    }

    /// Membership in `Omega = {F >= |f|}` up to [`DOMAIN_TOL`].
    pub fn check(&self) -> Result<()> {
        if !self.g.is_finite() || !self.f.is_finite() || !self.big_f.is_finite() {
            return Err(Error::Domain(format!("non-finite point {self:?}")));
        }
        let scale = 1.0_f64.max(self.f.abs()).max(self.big_f.abs());
        if self.big_f + DOMAIN_TOL * scale < self.f.abs() {
            return Err(Error::Domain(format!(
                "point (g,f,F)=({}, {}, {}) violates F >= |f|",
                self.g, self.f, self.big_f
            )));
        }
        Ok(())
    }

    pub fn to_y(self) -> PointY {
        PointY {
            y1: (self.f - self.g) / 2.0,
            y2: (-self.f - self.g) / 2.0,
            big_f: self.big_f,
        }
    }
}

impl PointY {
    pub fn new(y1: f64, y2: f64, big_f: f64) -> Result<Self> {
        let p = Self { y1, y2, big_f };
        p.check()?;
        Ok(p)
    }

    /// Membership in `G = {|y1-y2| <= F}` up to [`DOMAIN_TOL`].
    pub fn check(&self) -> Result<()> {
        if !self.y1.is_finite() || !self.y2.is_finite() || !self.big_f.is_finite() {
            return Err(Error::Domain(format!("non-finite point {self:?}")));
        }
        let scale = 1.0_f64
            .max(self.y1.abs())
            .max(self.y2.abs())
            .max(self.big_f.abs());
        if self.big_f + DOMAIN_TOL * scale < (self.y1 - self.y2).abs() {
            return Err(Error::Domain(format!(
                "point (y1,y2,F)=({}, {}, {}) violates |y1-y2| <= F",
                self.y1, self.y2, self.big_f
            )));
        }
        Ok(())
    }

    pub fn to_gff(self) -> PointGff {
        PointGff {
            g: -self.y1 - self.y2,
            f: self.y1 - self.y2,
            big_f: self.big_f,
        }
    }
}

impl std::fmt::Display for PointGff {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(w, "(g,f,F)=({}, {}, {})", self.g, self.f, self.big_f)
    }
}

impl std::fmt::Display for PointY {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(w, "(y1,y2,F)=({}, {}, {})", self.y1, self.y2, self.big_f)
    }
}

/// One-sided tail form. `1` when `lambda <= F`; at the degenerate corner
/// `lambda = F = |f|` both branch limits agree at `1`.
pub fn bellman_b0(lambda: f64, f: f64, big_f: f64) -> Result<f64> {
    PointGff::new(-lambda, f, big_f)?;
    if lambda <= big_f {
        return Ok(1.0);
    }
    let denom = lambda * lambda - f * f;
    if denom <= 0.0 {
        // Only reachable at the corner lambda = F = |f| (up to rounding).
        return Ok(1.0);
    }
    let d = lambda - big_f;
    Ok(1.0 - d * d / denom)
}

/// Bellman function in `(g, f, F)`: `bellman_b0(-g, f, F)`.
pub fn bellman_b(x: PointGff) -> Result<f64> {
    bellman_b0(-x.g, x.f, x.big_f)
}

/// Bellman function in rotated coordinates.
pub fn bellman_m(y: PointY) -> Result<f64> {
    y.check()?;
    if y.big_f >= y.y1 + y.y2 {
        // This branch also covers min(y1,y2) <= 0: there |y1-y2| >= y1+y2.
        return Ok(1.0);
    }
    let d = y.big_f - y.y1 - y.y2;
    Ok(1.0 - d * d / (4.0 * y.y1 * y.y2))
}

/// Restriction of `M` to the lower cone `F = y1 - y2` (needs `y1 >= y2`):
/// `1` for `y2 <= 0`, else `1 - y2/y1`.
pub fn boundary_value(y1: f64, y2: f64) -> Result<f64> {
    let scale = 1.0_f64.max(y1.abs()).max(y2.abs());
    if y1 + DOMAIN_TOL * scale < y2 {
        return Err(Error::Domain(format!(
            "boundary point (y1,y2)=({y1}, {y2}) needs y1 >= y2 so that F = y1-y2 >= 0"
        )));
    }
    if y2 <= 0.0 {
        return Ok(1.0);
    }
    if y1 <= 0.0 {
        return Err(Error::Domain(format!(
            "boundary point (y1,y2)=({y1}, {y2}) needs y1 > 0 when y2 > 0"
        )));
    }
    Ok(1.0 - y2 / y1)
}

/// Characteristic coordinates in the fan region `0 < y2 <= y1`,
/// `y1-y2 <= F <= y1+y2`:
///
/// * `t  = (F - (y1-y2)) / (2 y2)`, so `t = 0` on `F = y1-y2` and `t = 1`
///   on `F = y1+y2`;
/// * `t1 = (1-t)/y1`, `t2 = -t(1-t)/y1`, and `M = t1*F + t2*y2 + t`.
pub fn characteristics(y: PointY) -> Result<CharacteristicCoords> {
    let scale = 1.0_f64.max(y.y1.abs()).max(y.y2.abs()).max(y.big_f.abs());
    let tol = DOMAIN_TOL * scale;
    if y.y2 <= 0.0 {
        return Err(Error::Domain(format!(
            "characteristics degenerate at y2 <= 0 (got {y})"
        )));
    }
    if y.y2 > y.y1 + tol {
        return Err(Error::Domain(format!(
            "characteristics need y2 <= y1 (got {y}); swap coordinates first"
        )));
    }
    if y.big_f + tol < y.y1 - y.y2 || y.big_f > y.y1 + y.y2 + tol {
        return Err(Error::Domain(format!(
            "characteristics need y1-y2 <= F <= y1+y2 (got {y})"
        )));
    }
    let t = 0.5 * (y.big_f - (y.y1 - y.y2)) / y.y2;
    let t1 = (1.0 - t) / y.y1;
    let t2 = -t * (1.0 - t) / y.y1;
    Ok(CharacteristicCoords { t, t1, t2 })
}
