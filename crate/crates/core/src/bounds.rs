//! Step bounds and their series for the iterated stretch, plus the
//! quasiconformal length-distortion argument that rules out a limit map.
//!
//! Every bound is linear in the unknown constant `C` of the per-step estimate and
//! is reported in units of it.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Per-stage ratio of injectivity-radius bounds, `2 sqrt(2) / 3`.
pub const DEFAULT_RATIO: f64 = 2.0 * SQRT_2 / 3.0;

/// `int_0^1 dt / (2 + 2t)`.
const TIME_INTEGRAL: f64 = LN_2 / 2.0;

/// `x log(1/x)`, extended by 0 at `x = 0`.
fn s(x: f64) -> f64 {
    if x == 0.0 { 0.0 } else { -x * x.ln() }
}

/// `C (L log(1/L))^2 (ln 2) / 2`, the Bers-distance bound of one stretch stage
/// whose core band has injectivity radius at most `L`.
pub fn mcmullen_step(l: f64, c: f64) -> Result<f64> {
    if !(l > 0.0 && l <= 0.5) {
        return Err(LabError::domain("mcmullen_step", format!("radius bound must lie in (0, 1/2], got {l}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(LabError::domain("mcmullen_step", format!("constant must be nonnegative, got {c}")));
    }
    Ok(c * s(l).powi(2) * TIME_INTEGRAL)
}

/// `L'_j = L0 ratio^j` for `j = 0..stages`.
pub fn radius_sequence(l0: f64, ratio: f64, stages: usize) -> Result<Vec<f64>> {
    if !(l0 > 0.0 && l0 <= 0.5) {
        return Err(LabError::domain("radius_sequence", format!("initial bound must lie in (0, 1/2], got {l0}")));
    }
    if !(0.0..1.0).contains(&ratio) {
        return Err(LabError::domain("radius_sequence", format!("ratio must lie in [0, 1), got {ratio}")));
    }
    Ok((0..stages).map(|j| l0 * ratio.powi(j as i32)).collect())
}

/// `sum_{j=1}^{J} j^2 r^j`.
pub fn base_series_partial(r: f64, last: usize) -> f64 {
    (1..=last).map(|j| (j * j) as f64 * r.powi(j as i32)).sum()
}

/// `sum_{j >= 1} j^2 r^j = r (1 + r) / (1 - r)^3`.
pub fn base_series_closed(r: f64) -> f64 {
    r * (1.0 + r) / (1.0 - r).powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    /// `sum_{j=0}^{J} step_j`.
    pub partial_sum: f64,
    /// Exact value of the full series `sum_{j >= 0} step_j`.
    pub cap: f64,
    /// `C (ln 2 / 2) L0^2 log(1/ratio)^2 sum_{j>=1} j^2 ratio^{2j}`, the leading
    /// part of the cap; alone it undercounts when the ratio is small.
    pub leading_term: f64,
}

fn check_series(c: f64, l0: f64, ratio: f64) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(LabError::domain("series_sum", format!("constant must be nonnegative, got {c}")));
    }
    radius_sequence(l0, ratio, 0).map(|_| ())
}

/// Partial sum of the step bounds `C (L'_j log(1/L'_j))^2 (ln 2)/2` for `j = 0..=J` and
/// the exact series value. Writing `L'_j log(1/L'_j) = L0 r^{j/2} (lambda + j ell)`
/// with `lambda = log(1/L0)`, `ell = log(1/ratio)`, `r = ratio^2`, the series is
/// `C (ln 2 / 2) L0^2 (lambda^2 S0 + 2 lambda ell S1 + ell^2 S2)` with
/// `S_k = sum_j j^k r^j`.
pub fn series_sum(c: f64, l0: f64, ratio: f64, last: usize) -> Result<SeriesReport> {
    check_series(c, l0, ratio)?;
    let radii = radius_sequence(l0, ratio, last + 1)?;
    let partial_sum: f64 = radii.iter().map(|&l| c * s(l).powi(2) * TIME_INTEGRAL).sum();
    let scale = c * TIME_INTEGRAL * l0 * l0;
    let lambda = -l0.ln();
    let (cap, leading_term) = if ratio == 0.0 {
        (scale * lambda * lambda, 0.0)
    } else {
        let ell = -ratio.ln();
        let r = ratio * ratio;
        let s0 = 1.0 / (1.0 - r);
        let s1 = r / (1.0 - r).powi(2);
        let s2 = base_series_closed(r);
        (scale * (lambda * lambda * s0 + 2.0 * lambda * ell * s1 + ell * ell * s2), scale * ell * ell * s2)
    };
    Ok(SeriesReport { partial_sum, cap, leading_term })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub j: usize,
    pub radius: f64,
    pub step_bound: f64,
    pub partial_sum: f64,
}

/// Stage-by-stage table of radius bounds, step bounds and partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLedger {
    pub c: f64,
    pub l0: f64,
    pub ratio: f64,
    pub rows: Vec<LedgerRow>,
    pub cap: f64,
}

impl ConvergenceLedger {
    pub fn build(c: f64, l0: f64, ratio: f64, last: usize) -> Result<Self> {
        check_series(c, l0, ratio)?;
        if !(ratio > 0.0) {
            return Err(LabError::domain("ConvergenceLedger::build", "ratio must be positive"));
        }
        let mut acc = 0.0;
        let rows = radius_sequence(l0, ratio, last + 1)?
            .into_iter()
            .enumerate()
            .map(|(j, radius)| {
                let step_bound = c * s(radius).powi(2) * TIME_INTEGRAL;
                acc += step_bound;
                LedgerRow { j, radius, step_bound, partial_sum: acc }
            })
            .collect();
        let cap = series_sum(c, l0, ratio, 0)?.cap;
        Ok(Self { c, l0, ratio, rows, cap })
    }

    /// First stage whose radius bound is at most `1/e`; from there on the step
    /// bounds decrease.
    pub fn turnover_index(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.radius <= (-1.0f64).exp()).map(|r| r.j)
    }

    /// Table with columns `j, radius, step_bound, partial_sum`.
    pub fn write_csv(&self, path: &Path) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["j", "radius", "step_bound", "partial_sum"])?;
        for r in &self.rows {
            w.serialize((r.j, r.radius, r.step_bound, r.partial_sum))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(2/3)^{n-1} pi^2 / H`: the shortest geodesic of the `n`-times stretched cylinder
/// is at most this long.
pub fn geodesic_decay(n: usize, h: f64) -> Result<f64> {
    if n == 0 || !(h > 0.0) {
        return Err(LabError::domain("geodesic_decay", format!("need n >= 1 and H > 0, got n = {n}, H = {h}")));
    }
    Ok((2.0f64 / 3.0).powi(n as i32 - 1) * PI * PI / h)
}

/// Least `n` with `geodesic_decay(n, H) < short / K`: past this stage no
/// `K`-quasiconformal map from a surface with systole `short` can realise the
/// stretched surface, since such maps change lengths by at most a factor `K`.
pub fn wolpert_contradiction(short: f64, k: f64, h: f64) -> Result<usize> {
    if !(short > 0.0 && short.is_finite()) || !(k >= 1.0 && k.is_finite()) || !(h > 0.0) {
        return Err(LabError::domain(
            "wolpert_contradiction",
            format!("need short > 0, K >= 1, H > 0; got ({short}, {k}, {h})"),
        ));
    }
    let target = short / k;
    let first = PI * PI / h;
    // (2/3)^{n-1} first < target; start from the logarithmic estimate, then settle exactly
    let mut n = if first < target { 1 } else { ((first / target).ln() / 1.5f64.ln()).floor() as usize + 1 };
    n = n.max(1);
    while n > 1 && geodesic_decay(n - 1, h)? < target {
        n -= 1;
    }
    while geodesic_decay(n, h)? >= target {
        n += 1;
    }
    Ok(n)
}
