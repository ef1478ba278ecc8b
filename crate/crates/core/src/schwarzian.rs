//! Schwarzian derivatives, Bers norms on the exterior of the unit disk and the
//! derivative kernel of the Bers embedding.
//!
//! The counterexample family is `f_lambda(z) = z + lambda / z` outside the disk,
//! with `S(f_lambda) = -6 lambda / (z^2 - lambda)^2`. For every `lambda` in `[0, 1)`
//! the Bers distance to `f_1` is at least 6, attained in the limit `z -> 1` along
//! the real axis.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Stencil radius for [`schwarzian_fd`] balancing truncation and round-off.
pub const DEFAULT_FD_STEP: f64 = 0.1;

const FD_POINTS: usize = 16;

fn pole(z: Complex64) -> LabError {
    LabError::Pole { re: z.re, im: z.im }
}

/// `S(f)(z) = f'''/f' - 3/2 (f''/f')^2` from the three derivatives.
pub fn schwarzian_closed(
    fprime: impl Fn(Complex64) -> Complex64,
    fsecond: impl Fn(Complex64) -> Complex64,
    fthird: impl Fn(Complex64) -> Complex64,
    z: Complex64,
) -> Result<Complex64> {
    let d1 = fprime(z);
    if d1.norm() == 0.0 || !d1.is_finite() {
        return Err(pole(z));
    }
    let q = fsecond(z) / d1;
    Ok(fthird(z) / d1 - 1.5 * q * q)
}

/// Schwarzian from samples of `f` on the circle `|w - z| = h`.
///
/// The `k`-th derivative is read off the discrete Fourier coefficients,
/// `f^(k)(z) ~ k! / (N h^k) sum_m f(z + h w^m) w^{-km}` with `w = e^{2 pi i / N}`,
/// `N = 16`. This is exact for polynomials of degree below 16 and needs `h` to be
/// small against the distance to the nearest singularity.
pub fn schwarzian_fd(f: impl Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> Result<Complex64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::domain("schwarzian_fd", format!("step must be positive, got {h}")));
    }
    let samples: Vec<Complex64> = (0..FD_POINTS)
        .map(|m| f(z + Complex64::from_polar(h, 2.0 * PI * m as f64 / FD_POINTS as f64)))
        .collect();
    let derivative = |k: usize| -> Complex64 {
        let acc: Complex64 = samples
            .iter()
            .enumerate()
            .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / FD_POINTS as f64))
            .sum();
        let factorial = (1..=k).product::<usize>() as f64;
        acc * factorial / (FD_POINTS as f64 * h.powi(k as i32))
    };
    let (d1, d2, d3) = (derivative(1), derivative(2), derivative(3));
    let scale = samples.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    if d1.norm() <= 1e3 * f64::EPSILON * scale / h {
        return Err(pole(z));
    }
    let q = d2 / d1;
    Ok(d3 / d1 - 1.5 * q * q)
}

/// `S(z + lambda / z) = -6 lambda / (z^2 - lambda)^2`.
pub fn counterexample_schwarzian(lambda: f64, z: Complex64) -> Complex64 {
    let d = z * z - lambda;
    -6.0 * lambda / (d * d)
}

/// A holomorphic quadratic form on the exterior `|z| > 1`.
pub struct QuadraticForm {
    evaluator: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    description: String,
}

impl QuadraticForm {
    pub fn new(description: impl Into<String>, evaluator: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { evaluator: Box::new(evaluator), description: description.into() }
    }

    /// `S(f_lambda) - S(f_1)`.
    pub fn counterexample_difference(lambda: f64) -> Self {
        Self::new(format!("S(z + {lambda}/z) - S(z + 1/z)"), move |z| {
            counterexample_schwarzian(lambda, z) - counterexample_schwarzian(1.0, z)
        })
    }

    /// `z -> e^{2 i theta} phi(e^{i theta} z)`, the pull-back under a rotation.
    pub fn rotated(self, theta: f64) -> Self {
        let rot = Complex64::from_polar(1.0, theta);
        let description = format!("{} rotated by {theta}", self.description);
        let inner = self.evaluator;
        Self::new(description, move |z| rot * rot * inner(rot * z))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.evaluator)(z)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// Samples `r = 1 + exp(s)` with `s` uniform in `[ln min_gap, ln max_gap]` and
/// `theta = 2 pi k / angular`; concentrated near the unit circle, where the
/// weight `(|z|^2 - 1)^2` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorGrid {
    pub radial: usize,
    pub angular: usize,
    pub min_gap: f64,
    pub max_gap: f64,
}

impl ExteriorGrid {
    pub fn square(n: usize) -> Self {
        Self { radial: n, angular: n, min_gap: 1e-8, max_gap: 3.0 }
    }

    /// Nested refinement: every old sample is kept.
    pub fn refined(&self) -> Self {
        Self { radial: 2 * self.radial - 1, angular: 2 * self.angular, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.radial < 2 || self.angular < 1 || !(self.min_gap > 0.0 && self.min_gap < self.max_gap) {
            return Err(LabError::domain("ExteriorGrid", format!("bad grid {self:?}")));
        }
        Ok(())
    }

    /// `r - 1` of radial sample `i`.
    pub fn gap(&self, i: usize) -> f64 {
        let (a, b) = (self.min_gap.ln(), self.max_gap.ln());
        (a + (b - a) * (i as f64 / (self.radial - 1) as f64)).exp()
    }

    pub fn radius(&self, i: usize) -> f64 {
        1.0 + self.gap(i)
    }

    pub fn angle(&self, k: usize) -> f64 {
        2.0 * PI * (k as f64 / self.angular as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub norm: f64,
    pub argmax: Complex64,
}

/// `max |phi(z)| (|z|^2 - 1)^2` over the grid, a lower bound for the Bers norm.
pub fn bers_norm_exterior(phi: &QuadraticForm, grid: &ExteriorGrid) -> Result<NormEstimate> {
    grid.validate()?;
    let per_radius: Vec<NormEstimate> = (0..grid.radial)
        .into_par_iter()
        .map(|i| {
            let (r, gap) = (grid.radius(i), grid.gap(i));
            let weight = (gap * (2.0 + gap)).powi(2);
            let mut best = NormEstimate { norm: 0.0, argmax: Complex64::new(r, 0.0) };
            for k in 0..grid.angular {
                let z = Complex64::from_polar(r, grid.angle(k));
                let v = phi.eval(z).norm() * weight;
                if v > best.norm {
                    best = NormEstimate { norm: v, argmax: z };
                }
            }
            best
        })
        .collect();
    let mut best = per_radius[0];
    for e in &per_radius[1..] {
        if e.norm > best.norm {
            best = *e;
        }
    }
    Ok(best)
}

/// `h_lambda(x) = (x^4 - lambda) / (x^2 - lambda)^2`. Along the real axis
/// `|S(f_lambda) - S(f_1)| (x^2 - 1)^2 = 6 (1 - lambda) h_lambda(x)`.
pub fn h_lambda(lambda: f64, x: f64) -> f64 {
    (x.powi(4) - lambda) / (x * x - lambda).powi(2)
}

/// `h_lambda'(x) = 4 lambda x (1 - x^2) / (x^2 - lambda)^3`.
pub fn h_lambda_prime(lambda: f64, x: f64) -> f64 {
    4.0 * lambda * x * (1.0 - x * x) / (x * x - lambda).powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub lambda: f64,
    pub norm: f64,
    pub argmax: Complex64,
    /// `h_lambda(1)`.
    pub radial_max: f64,
    /// `1 / (1 - lambda)`.
    pub radial_expected: f64,
    /// Whether `h_lambda' < 0` on the sampled `x > 1`.
    pub decreasing: bool,
}

/// Norm of `S(f_lambda) - S(f_1)` and the radial-factor checks for each `lambda`.
pub fn counterexample_scan(lambdas: &[f64], grid: &ExteriorGrid) -> Result<Vec<CounterexampleRow>> {
    lambdas
        .iter()
        .map(|&lambda| {
            if !(0.0..1.0).contains(&lambda) {
                return Err(LabError::domain("counterexample_scan", format!("lambda must lie in [0, 1), got {lambda}")));
            }
            let est = bers_norm_exterior(&QuadraticForm::counterexample_difference(lambda), grid)?;
            let decreasing = lambda == 0.0
                || (1..=1000).all(|k| h_lambda_prime(lambda, 1.0 + 4.0 * k as f64 / 1000.0) < 0.0);
            Ok(CounterexampleRow {
                lambda,
                norm: est.norm,
                argmax: est.argmax,
                radial_max: h_lambda(lambda, 1.0),
                radial_expected: 1.0 / (1.0 - lambda),
                decreasing,
            })
        })
        .collect()
}

/// Table with columns `lambda, norm, argmax_re, argmax_im`.
pub fn write_scan_csv(rows: &[CounterexampleRow], path: &Path) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lambda", "norm", "argmax_re", "argmax_im"])?;
    for r in rows {
        w.serialize((r.lambda, r.norm, r.argmax.re, r.argmax.im))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    pub z: Complex64,
    pub value: Complex64,
    pub cells: usize,
    /// Difference from the same rule on a grid with half as many cells per side.
    pub error_estimate: f64,
}

fn disk_midpoint(cells: usize, integrand: &(dyn Fn(Complex64) -> Complex64 + Sync)) -> Complex64 {
    let h = 2.0 / cells as f64;
    let rows: Vec<Complex64> = (0..cells)
        .into_par_iter()
        .map(|b| {
            let y = -1.0 + (b as f64 + 0.5) * h;
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..cells {
                let x = -1.0 + (a as f64 + 0.5) * h;
                if x * x + y * y < 1.0 {
                    acc += integrand(Complex64::new(x, y));
                }
            }
            acc
        })
        .collect();
    rows.iter().sum::<Complex64>() * (h * h)
}

fn check_kernel_args(z: Complex64, cells: usize) -> Result<()> {
    if !(z.norm() > 1.0) {
        return Err(LabError::domain("bers_derivative_kernel", format!("|z| = {} must exceed 1", z.norm())));
    }
    if cells < 2 {
        return Err(LabError::domain("bers_derivative_kernel", format!("need at least 2 cells per side, got {cells}")));
    }
    Ok(())
}

/// `-(6/pi) int_D nu(zeta) / (z - zeta)^4 dA(zeta)` by the midpoint rule on the
/// `cells x cells` square grid over `[-1, 1]^2`, keeping cells whose centre lies in the disk.
pub fn bers_derivative_kernel(
    nu: impl Fn(Complex64) -> Complex64 + Sync,
    z: Complex64,
    cells: usize,
) -> Result<KernelResult> {
    check_kernel_args(z, cells)?;
    let integrand = |zeta: Complex64| nu(zeta) / (z - zeta).powi(4);
    let value = disk_midpoint(cells, &integrand) * (-6.0 / PI);
    let coarse = disk_midpoint(cells / 2, &integrand) * (-6.0 / PI);
    Ok(KernelResult { z, value, cells, error_estimate: (value - coarse).norm() })
}

/// The kernel pushed forward by a base map `f` with holomorphic derivative `f_z`:
/// `-(6/pi) f_z(z)^2 int_D nu(zeta) f_z(zeta)^2 / (f(z) - f(zeta))^4 dA(zeta)`.
pub fn bers_derivative_kernel_pushed(
    nu: impl Fn(Complex64) -> Complex64 + Sync,
    f: impl Fn(Complex64) -> Complex64 + Sync,
    fz: impl Fn(Complex64) -> Complex64 + Sync,
    z: Complex64,
    cells: usize,
) -> Result<KernelResult> {
    check_kernel_args(z, cells)?;
    let fzz = f(z);
    let integrand = |zeta: Complex64| {
        let d = fz(zeta);
        nu(zeta) * d * d / (fzz - f(zeta)).powi(4)
    };
    let outer = fz(z) * fz(z) * (-6.0 / PI);
    let value = disk_midpoint(cells, &integrand) * outer;
    let coarse = disk_midpoint(cells / 2, &integrand) * outer;
    Ok(KernelResult { z, value, cells, error_estimate: (value - coarse).norm() })
}
