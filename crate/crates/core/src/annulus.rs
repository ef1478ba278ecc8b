//! L1 domination of a holomorphic function on a middle annulus by its mass on
//! the two flanking annuli.
//!
//! For `A = {1 < |z| < R}` and `A~ = {r1 < |z| < r2}`,
//! `||f||_{L1(A~)} <= C_a ||f||_{L1(A \ A~)}` with `C_a = R^2 log(2 r2 / (r1 - 1))`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPair {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub big_r: f64,
}

impl AnnulusPair {
    /// Pair with auxiliary radii `r0 = (1 + r1)/2`, `r3 = (r2 + R)/2`.
    pub fn new(r1: f64, r2: f64, big_r: f64) -> Result<Self> {
        Self::with_aux((1.0 + r1) / 2.0, r1, r2, (r2 + big_r) / 2.0, big_r)
    }

    pub fn with_aux(r0: f64, r1: f64, r2: f64, r3: f64, big_r: f64) -> Result<Self> {
        let ok = 1.0 < r0 && r0 < r1 && r1 < r2 && r2 < r3 && r3 < big_r && big_r.is_finite();
        if !ok {
            return Err(LabError::domain(
                "AnnulusPair",
                format!("need 1 < r0 < r1 < r2 < r3 < R, got {r0}, {r1}, {r2}, {r3}, {big_r}"),
            ));
        }
        Ok(Self { r0, r1, r2, r3, big_r })
    }
}

/// `C_a = R^2 log(2 r2 / (r1 - 1))`.
pub fn pudding_constant(p: &AnnulusPair) -> f64 {
    p.big_r * p.big_r * (2.0 * p.r2 / (p.r1 - 1.0)).ln()
}

/// `C_q = C_a + 1`, the constant for a surface split into collars of this shape
/// and the rest: the mass outside the middle annuli counts once more.
pub fn aggregate_cq(p: &AnnulusPair) -> f64 {
    pudding_constant(p) + 1.0
}

/// `int_{s < |z| < t} |z|^n dA`.
pub fn laurent_l1_norm(n: i32, s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0 && s <= t) {
        return Err(LabError::domain("laurent_l1_norm", format!("need 0 < s <= t, got s = {s}, t = {t}")));
    }
    if n == -2 {
        return Ok(2.0 * PI * (t / s).ln());
    }
    let k = n + 2;
    Ok(2.0 * PI * (t.powi(k) - s.powi(k)) / k as f64)
}

/// `sum_{n = lowest}^{lowest + len - 1} a_n z^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentSeries {
    pub lowest: i32,
    pub coeffs: Vec<Complex64>,
}

impl LaurentSeries {
    pub fn monomial(n: i32) -> Self {
        Self { lowest: n, coeffs: vec![Complex64::new(1.0, 0.0)] }
    }

    /// Coefficients of degrees `lowest..=highest` with real and imaginary parts
    /// uniform in `[-1, 1]`.
    pub fn random(rng: &mut impl Rng, lowest: i32, highest: i32) -> Self {
        let coeffs = (lowest..=highest)
            .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        Self { lowest, coeffs }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lowest)
    }

    /// The single exponent if this is a multiple of one monomial.
    fn as_monomial(&self) -> Option<(i32, f64)> {
        let nonzero: Vec<(usize, &Complex64)> = self.coeffs.iter().enumerate().filter(|(_, c)| c.norm() > 0.0).collect();
        match nonzero.as_slice() {
            [(k, c)] => Some((self.lowest + *k as i32, c.norm())),
            _ => None,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

const GL_ORDER: usize = 8;
const MAX_LEVELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadEstimate {
    pub value: f64,
    /// Change from the previous refinement level.
    pub change: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

fn tensor_rule(f: &LaurentSeries, s: f64, t: f64, panels: usize, angular: usize, gl: &[(f64, f64)]) -> f64 {
    let width = (t - s) / panels as f64;
    let radial: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = s + (p as f64 + 0.5) * width;
            gl.iter().map(move |&(x, w)| (mid + 0.5 * width * x, 0.5 * width * w))
        })
        .collect();
    let dtheta = 2.0 * PI / angular as f64;
    radial
        .par_iter()
        .map(|&(r, w)| {
            let ring: f64 = (0..angular).map(|k| f.eval(Complex64::from_polar(r, k as f64 * dtheta)).norm()).sum();
            ring * dtheta * r * w
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `int_{s < |z| < t} |f| dA` by composite Gauss-Legendre in `r` and the periodic
/// trapezoid rule in `theta`, doubling both until the relative change is below `rel_tol`.
pub fn l1_norm_quadrature(f: &LaurentSeries, s: f64, t: f64, rel_tol: f64) -> Result<QuadEstimate> {
    if !(s > 0.0 && s < t) {
        return Err(LabError::domain("l1_norm_quadrature", format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let gl = gauss_legendre(GL_ORDER);
    let (mut panels, mut angular) = (2usize, 32usize);
    let mut prev = tensor_rule(f, s, t, panels, angular, &gl);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_LEVELS {
        panels *= 2;
        angular *= 2;
        let value = tensor_rule(f, s, t, panels, angular, &gl);
        change = (value - prev).abs();
        prev = value;
        if change <= rel_tol * value.abs() {
            return Ok(QuadEstimate { value, change, radial_nodes: panels * GL_ORDER, angular_nodes: angular });
        }
    }
    Err(LabError::Quadrature { estimate: prev, change })
}

/// `||f||_{L1(s < |z| < t)}`: exact for monomials, by quadrature otherwise.
pub fn l1_norm(f: &LaurentSeries, s: f64, t: f64, rel_tol: f64) -> Result<f64> {
    match f.as_monomial() {
        Some((n, c)) => Ok(c * laurent_l1_norm(n, s, t)?),
        None => Ok(l1_norm_quadrature(f, s, t, rel_tol)?.value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuddingCheck {
    pub test_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// `lhs = ||f||_{L1(A~)}`, `rhs = ||f||_{L1(A \ A~)}` and the check `lhs <= C_a rhs`.
pub fn verify_pudding(test_id: impl Into<String>, p: &AnnulusPair, f: &LaurentSeries, rel_tol: f64) -> Result<PuddingCheck> {
    let lhs = l1_norm(f, p.r1, p.r2, rel_tol)?;
    let rhs = l1_norm(f, 1.0, p.r1, rel_tol)? + l1_norm(f, p.r2, p.big_r, rel_tol)?;
    let constant = pudding_constant(p);
    Ok(PuddingCheck { test_id: test_id.into(), lhs, rhs, constant, ratio: lhs / rhs, holds: lhs <= constant * rhs })
}

/// Monomials `z^n`, `n` in `lowest..=highest`, followed by `count` random series
/// of the same degree range drawn from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn pudding_suite(p: &AnnulusPair, lowest: i32, highest: i32, count: usize, seed: u64, rel_tol: f64) -> Result<Vec<PuddingCheck>> {
    let mut out = Vec::new();
    for n in lowest..=highest {
        out.push(verify_pudding(format!("monomial_{n}"), p, &LaurentSeries::monomial(n), rel_tol)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..count {
        let f = LaurentSeries::random(&mut rng, lowest, highest);
        out.push(verify_pudding(format!("random_{k}"), p, &f, rel_tol)?);
    }
    Ok(out)
}

/// Table with columns `test_id, lhs, rhs, constant, ratio, holds`.
pub fn write_checks_csv(checks: &[PuddingCheck], path: &Path) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["test_id", "lhs", "rhs", "constant", "ratio", "holds"])?;
    for c in checks {
        w.serialize((&c.test_id, c.lhs, c.rhs, c.constant, c.ratio, c.holds))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarAggregate {
    /// Total mass over every collar.
    pub total: f64,
    /// Mass outside the middle annuli.
    pub outer: f64,
    pub cq: f64,
    pub holds: bool,
}

/// A surface modelled as disjoint copies of `A`, copy `i` carrying `f_i`: the total
/// mass is at most `C_q` times the mass outside the middle annuli, whatever the
/// number of copies.
pub fn aggregate_collars(p: &AnnulusPair, fs: &[LaurentSeries], rel_tol: f64) -> Result<CollarAggregate> {
    let mut total = 0.0;
    let mut outer = 0.0;
    for (i, f) in fs.iter().enumerate() {
        let c = verify_pudding(format!("collar_{i}"), p, f, rel_tol)?;
        total += c.lhs + c.rhs;
        outer += c.rhs;
    }
    let cq = aggregate_cq(p);
    Ok(CollarAggregate { total, outer, cq, holds: total <= cq * outer })
}
