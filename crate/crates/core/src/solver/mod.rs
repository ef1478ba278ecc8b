//! Least-squares solver for `f_zbar = mu f_z` on a periodic cylinder grid.
//!
//! The unknown is written `f = z + u` with `u` periodic in x, so the equation
//! becomes `u_zbar - mu u_z = mu`. Derivatives live at cell centres as averages
//! of the two parallel edge differences of the cell (a box scheme), which makes
//! maps that are affine on every cell exact solutions. The top and bottom node
//! rows are pinned and the normal equations are solved with a band Cholesky
//! factorisation plus two steps of iterative refinement.

mod banded;
mod grid;

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use banded::{BandCholesky, BandMatrix};
pub use grid::{GridField, MIN_GRID};

use crate::cylinder::X_PERIOD;
use crate::error::{LabError, Result};
use crate::stretch::PiecewiseVerticalMap;

const REFINEMENT_STEPS: usize = 2;

/// Boundary values imposed on the top and bottom node rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    Identity,
    /// `x + iy -> x + i map(y)`.
    Vertical(PiecewiseVerticalMap),
    /// `z -> alpha z + beta zbar + shift`; periodicity needs `alpha + beta = 1`.
    Affine { alpha: Complex64, beta: Complex64, shift: Complex64 },
}

impl Normalization {
    pub fn validate(&self) -> Result<()> {
        if let Normalization::Affine { alpha, beta, .. } = self {
            if (alpha + beta - 1.0).norm() > 1e-12 {
                return Err(LabError::contract(
                    "Normalization::validate",
                    format!("affine boundary map must commute with z -> z + 2pi (alpha + beta = {})", alpha + beta),
                ));
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Normalization::Identity => z,
            Normalization::Vertical(m) => Complex64::new(z.re, m.eval(z.im)),
            Normalization::Affine { alpha, beta, shift } => alpha * z + beta * z.conj() + shift,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Normalization::Identity => "identity on the boundary rows".into(),
            Normalization::Vertical(m) => format!(
                "vertical piecewise-affine map with {} pieces, half-heights {} -> {}",
                m.num_pieces(),
                m.source_halfheight(),
                m.target_halfheight()
            ),
            Normalization::Affine { alpha, beta, shift } => {
                format!("affine map {alpha} z + {beta} zbar + {shift}")
            }
        }
    }
}

/// Solution values at the `(ny + 1) x nx` grid nodes, row-major from the bottom row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    nx: usize,
    ny: usize,
    y_min: f64,
    y_max: f64,
    f: Vec<Complex64>,
    residual_norm: f64,
    normalization: String,
}

/// JSON header written next to the CSV of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMapHeader {
    pub nx: usize,
    pub ny: usize,
    pub x_period: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub residual_norm: f64,
    pub normalization: String,
}

impl GridMap {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn values(&self) -> &[Complex64] {
        &self.f
    }

    /// Position of node `(i, k)`, `0 <= k <= ny`.
    pub fn node(&self, i: usize, k: usize) -> Complex64 {
        node_position(self.nx, self.ny, self.y_min, self.y_max, i, k)
    }

    /// Solution at node `(i, k)`; column `nx` is column 0 shifted by `2 pi`.
    pub fn value(&self, i: usize, k: usize) -> Complex64 {
        let wraps = (i / self.nx) as f64;
        self.f[k * self.nx + i % self.nx] + wraps * X_PERIOD
    }

    /// `max |f - exact|` over all nodes.
    pub fn max_error(&self, exact: impl Fn(Complex64) -> Complex64) -> f64 {
        (0..=self.ny)
            .flat_map(|k| (0..self.nx).map(move |i| (i, k)))
            .map(|(i, k)| (self.value(i, k) - exact(self.node(i, k))).norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_distance_to_identity(&self) -> f64 {
        self.max_error(|z| z)
    }

    pub fn header(&self) -> GridMapHeader {
        GridMapHeader {
            nx: self.nx,
            ny: self.ny,
            x_period: X_PERIOD,
            y_min: self.y_min,
            y_max: self.y_max,
            residual_norm: self.residual_norm,
            normalization: self.normalization.clone(),
        }
    }

    /// Node table with columns `x, y, re_f, im_f`.
    pub fn write_csv(&self, path: &Path) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "re_f", "im_f"])?;
        for k in 0..=self.ny {
            for i in 0..self.nx {
                let (z, f) = (self.node(i, k), self.value(i, k));
                w.serialize((z.re, z.im, f.re, f.im))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json_header(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.header()).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}

fn node_position(nx: usize, ny: usize, y_min: f64, y_max: f64, i: usize, k: usize) -> Complex64 {
    Complex64::new(i as f64 * X_PERIOD / nx as f64, y_min + k as f64 * (y_max - y_min) / ny as f64)
}

/// Column order inside a node row that keeps periodic neighbours close:
/// 0, nx - 1, 1, nx - 2, ...
fn interleaved(i: usize, nx: usize) -> usize {
    if 2 * i < nx { 2 * i } else { 2 * (nx - 1 - i) + 1 }
}

/// Corner weights of the cell operator `u -> (1 - mu)/2 D_x u + i (1 + mu)/2 D_y u`
/// on the nodes `(i, k), (i + 1, k), (i, k + 1), (i + 1, k + 1)`.
fn cell_weights(mu: Complex64, hx: f64, hy: f64) -> [Complex64; 4] {
    let a = 0.5 * (1.0 - mu) / (2.0 * hx);
    let b = Complex64::i() * 0.5 * (1.0 + mu) / (2.0 * hy);
    [-a - b, a - b, -a + b, a + b]
}

struct System<'a> {
    mu: &'a GridField,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl System<'_> {
    fn corners(&self, i: usize, k: usize) -> [(usize, usize); 4] {
        let ip = (i + 1) % self.nx;
        [(i, k), (ip, k), (i, k + 1), (ip, k + 1)]
    }

    fn unknown(&self, i: usize, k: usize) -> Option<usize> {
        (k > 0 && k < self.ny).then(|| (k - 1) * self.nx + interleaved(i, self.nx))
    }

    /// Cell residuals `mu - L u` for node values `u` (all rows, row-major).
    fn residual(&self, u: &[Complex64]) -> Vec<Complex64> {
        let nx = self.nx;
        (0..self.ny)
            .into_par_iter()
            .flat_map_iter(|k| {
                (0..nx).map(move |i| {
                    let mu = self.mu.value(i, k);
                    let w = cell_weights(mu, self.hx, self.hy);
                    let lu: Complex64 =
                        self.corners(i, k).iter().zip(w).map(|(&(ci, ck), wq)| wq * u[ck * nx + ci]).sum();
                    mu - lu
                })
            })
            .collect()
    }

    /// Normal matrix `A^H A` over the interior unknowns.
    fn normal_matrix(&self) -> BandMatrix {
        let n = self.nx * (self.ny - 1);
        let bw = (self.nx + 2).min(n - 1);
        let mut m = BandMatrix::zeros(n, bw);
        for k in 0..self.ny {
            for i in 0..self.nx {
                let w = cell_weights(self.mu.value(i, k), self.hx, self.hy);
                let idx = self.corners(i, k).map(|(ci, ck)| self.unknown(ci, ck));
                for p in 0..4 {
                    let Some(rp) = idx[p] else { continue };
                    for q in 0..4 {
                        let Some(rq) = idx[q] else { continue };
                        if rp >= rq {
                            m.add(rp, rq, w[p].conj() * w[q]);
                        }
                    }
                }
            }
        }
        m
    }

    /// `A^H r` restricted to the unknowns.
    fn adjoint(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nx * (self.ny - 1)];
        for k in 0..self.ny {
            for i in 0..self.nx {
                let w = cell_weights(self.mu.value(i, k), self.hx, self.hy);
                let rc = r[k * self.nx + i];
                for (&(ci, ck), wq) in self.corners(i, k).iter().zip(w) {
                    if let Some(p) = self.unknown(ci, ck) {
                        out[p] += wq.conj() * rc;
                    }
                }
            }
        }
        out
    }
}

/// Solve `f_zbar = mu f_z` with the boundary rows of `f` pinned by `normalization`.
///
/// Returns the node values of `f` and the residual `sqrt(sum |r|^2 hx hy)` of
/// the discrete equation. Fails with [`LabError::Degenerate`] when some sample
/// has `|mu| >= 1`.
pub fn solve(mu: &GridField, normalization: &Normalization) -> Result<GridMap> {
    mu.validate()?;
    normalization.validate()?;
    let sup = mu.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(sup < 1.0) {
        return Err(LabError::Degenerate { sup_modulus: sup });
    }
    let (nx, ny) = (mu.nx(), mu.ny());
    let sys = System { mu, nx, ny, hx: mu.hx(), hy: mu.hy() };
    let node = |i: usize, k: usize| node_position(nx, ny, mu.y_min(), mu.y_max(), i, k);

    let mut u = vec![Complex64::new(0.0, 0.0); nx * (ny + 1)];
    for k in [0, ny] {
        for i in 0..nx {
            let z = node(i, k);
            u[k * nx + i] = normalization.eval(z) - z;
        }
    }

    let chol = sys.normal_matrix().cholesky()?;
    for _ in 0..=REFINEMENT_STEPS {
        let r = sys.residual(&u);
        let delta = chol.solve(&sys.adjoint(&r));
        for k in 1..ny {
            for i in 0..nx {
                u[k * nx + i] += delta[sys.unknown(i, k).unwrap()];
            }
        }
    }
    let r = sys.residual(&u);
    let residual_norm = (r.iter().map(Complex64::norm_sqr).sum::<f64>() * mu.cell_area()).sqrt();
    if !residual_norm.is_finite() {
        return Err(LabError::Singular { pivot: 0, value: residual_norm });
    }

    let f = (0..=ny)
        .flat_map(|k| (0..nx).map(move |i| (i, k)))
        .map(|(i, k)| node(i, k) + u[k * nx + i])
        .collect();
    Ok(GridMap {
        nx,
        ny,
        y_min: mu.y_min(),
        y_max: mu.y_max(),
        f,
        residual_norm,
        normalization: normalization.describe(),
    })
}

/// Modulus of continuity `16 pi^2 (1 + |a|^2 + |b|^2) / log(e + 1/|a - b|) * K_l1`
/// for the principal solutions with `||K||_{L^1} = K_l1`; `0` when `a = b`.
pub fn modulus_of_continuity_bound(a: Complex64, b: Complex64, k_l1: f64) -> Result<f64> {
    if !(k_l1 >= 0.0 && k_l1.is_finite()) {
        return Err(LabError::domain("modulus_of_continuity_bound", format!("bad L1 norm {k_l1}")));
    }
    let d = (a - b).norm();
    if d == 0.0 {
        return Ok(0.0);
    }
    let weight = 16.0 * PI * PI * (1.0 + a.norm_sqr() + b.norm_sqr());
    Ok(weight / (std::f64::consts::E + 1.0 / d).ln() * k_l1)
}

/// `||K_{mu_n}||_{L^1(D)}` for `mu_n = (1 - 1/n) 1_{|z| < 1/n}`:
/// the disk of radius `1/n` carries `K = 2n - 1`, the rest of the unit disk `K = 1`.
pub fn indicator_kernel_l1(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(LabError::domain("indicator_kernel_l1", format!("stage must be at least 2, got {n}")));
    }
    let r2 = 1.0 / (n * n) as f64;
    Ok(PI * r2 * (2 * n - 1) as f64 + PI * (1.0 - r2))
}

/// Grid size and sub-sampling of the convergence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub nx: usize,
    pub ny: usize,
    /// Sub-samples per cell side used for the area fraction of the disk.
    pub subsamples: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self { nx: 128, ny: 128, subsamples: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub kernel_l1: f64,
    pub sup_distance: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub grid: ExperimentGrid,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance)
    }

    /// Last sup-distance over the first.
    pub fn final_ratio(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.sup_distance / a.sup_distance,
            _ => f64::NAN,
        }
    }

    pub fn passes(&self) -> bool {
        self.strictly_decreasing() && self.final_ratio() < 0.25
    }

    pub fn write_csv(&self, path: &Path) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "kernel_l1", "sup_distance", "residual_norm"])?;
        for r in &self.rows {
            w.serialize((r.n, r.kernel_l1, r.sup_distance, r.residual_norm))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cell samples of `(1 - 1/n) 1_{|z - centre| < 1/n}` weighted by the fraction of
/// each cell inside the disk.
pub fn indicator_coefficient(n: usize, grid: ExperimentGrid, y_min: f64, y_max: f64, centre: Complex64) -> Result<GridField> {
    if n < 2 {
        return Err(LabError::domain("indicator_coefficient", format!("stage must be at least 2, got {n}")));
    }
    let (radius, height) = (1.0 / n as f64, 1.0 - 1.0 / n as f64);
    let hx = X_PERIOD / grid.nx as f64;
    let hy = (y_max - y_min) / grid.ny as f64;
    let s = grid.subsamples.max(1);
    GridField::sample(grid.nx, grid.ny, y_min, y_max, |xc, yc| {
        let mut inside = 0usize;
        for a in 0..s {
            for b in 0..s {
                let x = xc + hx * ((a as f64 + 0.5) / s as f64 - 0.5);
                let y = yc + hy * ((b as f64 + 0.5) / s as f64 - 0.5);
                let dx = (x - centre.re).rem_euclid(X_PERIOD);
                let dx = dx.min(X_PERIOD - dx);
                if dx * dx + (y - centre.im).powi(2) < radius * radius {
                    inside += 1;
                }
            }
        }
        Complex64::new(height * inside as f64 / (s * s) as f64, 0.0)
    })
}

/// Solve for each stage `mu_n` on `[0, 2pi) x [-pi, pi]` with identity boundary rows
/// and record `sup |f_n - id|` over the grid nodes.
pub fn convergence_experiment(n_list: &[usize], grid: ExperimentGrid) -> Result<ConvergenceTable> {
    let centre = Complex64::new(PI, 0.0);
    let rows = n_list
        .iter()
        .map(|&n| {
            let mu = indicator_coefficient(n, grid, -PI, PI, centre)?;
            let sol = solve(&mu, &Normalization::Identity)?;
            Ok(ConvergenceRow {
                n,
                kernel_l1: indicator_kernel_l1(n)?,
                sup_distance: sol.sup_distance_to_identity(),
                residual_norm: sol.residual_norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { grid, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stretch::{beltrami_of, stretch_map};
    use approx::assert_relative_eq;

    fn zero_field(nx: usize, ny: usize) -> GridField {
        GridField::sample(nx, ny, -1.0, 1.0, |_, _| Complex64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn conformal_case_is_identity() {
        let sol = solve(&zero_field(16, 16), &Normalization::Identity).unwrap();
        assert!(sol.sup_distance_to_identity() < 1e-12);
        assert!(sol.residual_norm() < 1e-12);
        // seam: column nx is column 0 shifted by the period
        assert_relative_eq!((sol.value(16, 5) - sol.value(0, 5)).re, X_PERIOD, epsilon = 1e-12);
    }

    #[test]
    fn constant_coefficient_gives_affine_map() {
        let mu = GridField::sample(16, 16, -1.0, 1.0, |_, _| Complex64::new(-1.0 / 3.0, 0.0)).unwrap();
        let norm = Normalization::Affine {
            alpha: Complex64::new(1.5, 0.0),
            beta: Complex64::new(-0.5, 0.0),
            shift: Complex64::new(0.0, 0.0),
        };
        let sol = solve(&mu, &norm).unwrap();
        assert!(sol.max_error(|z| Complex64::new(z.re, 2.0 * z.im)) < 1e-10);
        assert!(sol.residual_norm() < 1e-10);
    }

    #[test]
    fn stretch_solution_is_recovered_on_small_grid() {
        let map = stretch_map(3.0, 0.5, 1.0).unwrap();
        let mu = GridField::from_spec(&beltrami_of(&map), 16, 32, -3.0, 3.0).unwrap();
        let sol = solve(&mu, &Normalization::Vertical(map.clone())).unwrap();
        assert!(sol.max_error(|z| Complex64::new(z.re, map.eval(z.im))) < 1e-9);
    }

    #[test]
    fn degenerate_and_bad_normalization_rejected() {
        let mu = GridField::sample(8, 8, -1.0, 1.0, |x, _| Complex64::new(if x > 3.0 { 1.0 } else { 0.0 }, 0.0)).unwrap();
        assert!(matches!(solve(&mu, &Normalization::Identity), Err(LabError::Degenerate { .. })));
        let bad = Normalization::Affine {
            alpha: Complex64::new(2.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            shift: Complex64::new(0.0, 0.0),
        };
        assert!(solve(&zero_field(8, 8), &bad).is_err());
    }

    #[test]
    fn continuity_bound_values() {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let v = modulus_of_continuity_bound(o, one, 1.0).unwrap();
        assert_relative_eq!(v, 32.0 * PI * PI / (std::f64::consts::E + 1.0).ln(), max_relative = 1e-15);
        assert!((v - 240.5).abs() < 0.1);
        assert_eq!(modulus_of_continuity_bound(one, one, 3.0).unwrap(), 0.0);
        assert_relative_eq!(modulus_of_continuity_bound(o, one, 2.0).unwrap(), 2.0 * v, max_relative = 1e-15);
        assert_eq!(modulus_of_continuity_bound(one, o, 1.0).unwrap(), v);
        let tiny = modulus_of_continuity_bound(o, Complex64::new(1e-300, 0.0), 1.0).unwrap();
        assert!(tiny < 25.0);
        assert!(modulus_of_continuity_bound(o, one, -1.0).is_err());
    }

    #[test]
    fn kernel_norm_closed_form() {
        assert_relative_eq!(indicator_kernel_l1(10).unwrap(), 1.18 * PI, max_relative = 1e-14);
        let mut prev = f64::INFINITY;
        for n in 2..200 {
            let v = indicator_kernel_l1(n).unwrap();
            assert!(v < prev && v > PI);
            prev = v;
        }
        assert!(indicator_kernel_l1(1).is_err());
    }

    #[test]
    fn indicator_area_matches_disk() {
        let grid = ExperimentGrid { nx: 64, ny: 64, subsamples: 32 };
        let mu = indicator_coefficient(4, grid, -PI, PI, Complex64::new(PI, 0.0)).unwrap();
        let area: f64 = mu.values().iter().map(|v| v.re).sum::<f64>() * mu.cell_area() / 0.75;
        assert_relative_eq!(area, PI / 16.0, max_relative = 5e-3);
    }
}
