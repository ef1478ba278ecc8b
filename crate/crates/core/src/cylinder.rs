//! Hyperbolic geometry of the flat cylinder `C(H) = {|Im z| < H} / <z -> z + 2pi>`.
//!
//! The complete hyperbolic metric on `C(H)` is
//! `pi / (2H cos(pi y / 2H)) |dz|`, so every quantity here is a closed form in
//! the half-height. A stretched cylinder at stage-local time `t` has half-height
//! `(1 + a t) H`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Period of the cylinder in the x direction.
pub const X_PERIOD: f64 = 2.0 * PI;

/// Cylinder half-height above which the injectivity radius of the stretched band
/// stays below 1/2 for every `t` in `[0, 1]` (with `a = 1/2`).
pub const INJ_RADIUS_HEIGHT_THRESHOLD: f64 = 2.0 * SQRT_2 * PI * PI;

/// A flat cylinder of half-height `h` with a central band `|y| <= a h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    h: f64,
    a: f64,
}

impl CylinderSpec {
    pub fn new(h: f64, a: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::domain("CylinderSpec::new", format!("half-height must be positive, got {h}")));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(LabError::domain("CylinderSpec::new", format!("band fraction must lie in (0, 1), got {a}")));
        }
        Ok(Self { h, a })
    }

    /// Cylinder with the default band fraction `a = 1/2`.
    pub fn with_height(h: f64) -> Result<Self> {
        Self::new(h, 0.5)
    }

    pub fn half_height(&self) -> f64 {
        self.h
    }

    pub fn band_fraction(&self) -> f64 {
        self.a
    }

    pub fn x_period(&self) -> f64 {
        X_PERIOD
    }

    /// Conformal modulus `H / pi`.
    pub fn modulus(&self) -> f64 {
        self.h / PI
    }

    /// Half-height `(1 + a t) H` of the cylinder after stretching up to time `t`.
    pub fn stretched_height(&self, t: f64) -> f64 {
        (1.0 + self.a * t) * self.h
    }
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(LabError::domain(op, format!("time must lie in [0, 1], got {t}")))
    }
}

/// Density of the hyperbolic metric of `C((1 + a t) H)` at height `y`.
pub fn metric_density(c: &CylinderSpec, t: f64, y: f64) -> Result<f64> {
    check_time("metric_density", t)?;
    let height = c.stretched_height(t);
    if y.abs() >= height {
        return Err(LabError::domain(
            "metric_density",
            format!("|y| = {} reaches the boundary at {height}", y.abs()),
        ));
    }
    Ok(PI / (2.0 * height * (PI * y / (2.0 * height)).cos()))
}

/// Hyperbolic length of the core curve `x -> x` of `C((1 + a t) H)`: `pi^2 / ((1 + a t) H)`.
pub fn core_length(c: &CylinderSpec, t: f64) -> Result<f64> {
    check_time("core_length", t)?;
    Ok(PI * PI / c.stretched_height(t))
}

/// Length of the horizontal closed curve at height `(1 + t) a H`, the top edge of
/// the stretched core band. It bounds the injectivity radius over that band.
pub fn horizontal_curve_length(c: &CylinderSpec, t: f64) -> Result<f64> {
    check_time("horizontal_curve_length", t)?;
    let a = c.band_fraction();
    let phase = a * (1.0 + t) * PI / (2.0 * (1.0 + a * t));
    Ok(PI * PI / (c.stretched_height(t) * phase.cos()))
}

/// Bounds on the injectivity radius over the stretched core band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjRadiusReport {
    pub t: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
}

/// Injectivity-radius bounds at stage-local time `t`.
///
/// Only defined for `a = 1/2`. The upper bound is the length of the horizontal
/// curve bounding the band; the lower bound is the core-curve length of the
/// stretched cylinder, a lower bound for the supremum of the radius over the band.
/// When `H > 2 sqrt(2) pi^2` the upper bound is at most 1/2.
pub fn inj_radius_bounds(c: &CylinderSpec, t: f64) -> Result<InjRadiusReport> {
    if c.band_fraction() != 0.5 {
        return Err(LabError::contract(
            "inj_radius_bounds",
            format!("requires a = 1/2, got {}", c.band_fraction()),
        ));
    }
    let upper_bound = horizontal_curve_length(c, t)?;
    let lower_bound = core_length(c, t)?;
    Ok(InjRadiusReport { t, upper_bound, lower_bound })
}

/// Ratio between consecutive stages of the iterated stretch: the band bound of
/// the next-stage cylinder `C(3H/2)` (its band `|y| <= 3H/4`, at `t = 0`) over the
/// core-curve length of `C(H)`. Equals `2 / (3 cos(pi/4)) = 2 sqrt(2) / 3`.
pub fn stretch_pair_ratio(c: &CylinderSpec) -> Result<f64> {
    let next = CylinderSpec::new(1.5 * c.half_height(), c.band_fraction())?;
    let upper = inj_radius_bounds(&next, 0.0)?.upper_bound;
    Ok(upper / core_length(c, 0.0)?)
}

/// Half-width `h(l)` of the embedded collar around a simple closed geodesic of length `l`.
///
/// Evaluated as `log coth(l/4) = log1p(2 / expm1(l/2))`, which stays accurate for
/// lengths down to the ~1e-12 scale where `h(l)` crosses `2 sqrt(2) pi^2`.
pub fn collar_width(l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(LabError::domain("collar_width", format!("geodesic length must be positive, got {l}")));
    }
    Ok((2.0 / (l / 2.0).exp_m1()).ln_1p())
}

/// Solve `collar_width(l) = target` by bisection in log space; `collar_width` is
/// strictly decreasing so the root is unique.
pub fn collar_threshold(target: f64, rel_tol: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(LabError::domain("collar_threshold", format!("target width must be positive, got {target}")));
    }
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0e3);
    if collar_width(hi)? > target || collar_width(lo)? < target {
        return Err(LabError::domain("collar_threshold", format!("target {target} outside the bracketed range")));
    }
    while hi / lo - 1.0 > rel_tol {
        let mid = (lo * hi).sqrt();
        if collar_width(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
