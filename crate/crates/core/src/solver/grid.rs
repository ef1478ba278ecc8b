use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cylinder::X_PERIOD;
use crate::error::{LabError, Result};
use crate::stretch::BeltramiSpec;

/// Smallest admissible grid dimension.
pub const MIN_GRID: usize = 8;

/// Cell-centred complex samples on `[0, 2pi) x [y_min, y_max]`, periodic in x.
///
/// Cell `(i, k)` spans `[i hx, (i + 1) hx] x [y_min + k hy, y_min + (k + 1) hy]`
/// and its sample sits at index `k * nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    nx: usize,
    ny: usize,
    x_period: f64,
    y_min: f64,
    y_max: f64,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn new(nx: usize, ny: usize, y_min: f64, y_max: f64, values: Vec<Complex64>) -> Result<Self> {
        let g = Self { nx, ny, x_period: X_PERIOD, y_min, y_max, values };
        g.validate()?;
        Ok(g)
    }

    /// Sample `f(x, y)` at every cell centre.
    pub fn sample(nx: usize, ny: usize, y_min: f64, y_max: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let hx = X_PERIOD / nx as f64;
        let hy = (y_max - y_min) / ny as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for k in 0..ny {
            let y = y_min + (k as f64 + 0.5) * hy;
            for i in 0..nx {
                values.push(f((i as f64 + 0.5) * hx, y));
            }
        }
        Self::new(nx, ny, y_min, y_max, values)
    }

    /// Sample a band or grid coefficient. Every band interface strictly inside
    /// `(y_min, y_max)` must fall on a node row.
    pub fn from_spec(spec: &BeltramiSpec, nx: usize, ny: usize, y_min: f64, y_max: f64) -> Result<Self> {
        const OP: &str = "GridField::from_spec";
        match spec {
            BeltramiSpec::Grid(g) => {
                if (g.nx, g.ny) != (nx, ny) || g.y_min != y_min || g.y_max != y_max {
                    return Err(LabError::contract(OP, "grid coefficient does not match the requested grid"));
                }
                Ok(g.clone())
            }
            BeltramiSpec::Bands { bands } => {
                let hy = (y_max - y_min) / ny as f64;
                for edge in bands.iter().flat_map(|b| [b.lo, b.hi]) {
                    if edge <= y_min || edge >= y_max {
                        continue;
                    }
                    let row = (edge - y_min) / hy;
                    if (row - row.round()).abs() > 1e-9 {
                        return Err(LabError::contract(
                            OP,
                            format!("band interface y = {edge} is not on a grid row (row index {row})"),
                        ));
                    }
                }
                Self::sample(nx, ny, y_min, y_max, |_, y| {
                    spec.band_value_at(y).unwrap_or(Complex64::new(0.0, 0.0))
                })
            }
            BeltramiSpec::Regions { .. } => Err(LabError::contract(
                OP,
                "region coefficients carry no geometry and cannot be sampled on a grid",
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        const OP: &str = "GridField::validate";
        if self.nx < MIN_GRID || self.ny < MIN_GRID {
            return Err(LabError::domain(OP, format!("grid {}x{} below the minimum {MIN_GRID}", self.nx, self.ny)));
        }
        if !(self.y_min < self.y_max) || !self.y_min.is_finite() || !self.y_max.is_finite() {
            return Err(LabError::domain(OP, format!("bad y range [{}, {}]", self.y_min, self.y_max)));
        }
        if self.values.len() != self.nx * self.ny {
            return Err(LabError::contract(
                OP,
                format!("{} samples for a {}x{} grid", self.values.len(), self.nx, self.ny),
            ));
        }
        if self.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::domain(OP, "non-finite sample"));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_period(&self) -> f64 {
        self.x_period
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn hx(&self) -> f64 {
        self.x_period / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize, k: usize) -> Complex64 {
        self.values[k * self.nx + i % self.nx]
    }

    pub fn cell_centre(&self, i: usize, k: usize) -> Complex64 {
        Complex64::new((i as f64 + 0.5) * self.hx(), self.y_min + (k as f64 + 0.5) * self.hy())
    }

    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// The field shifted by `shift` columns: the new cell `i` carries old cell `i - shift`.
    pub fn translated_columns(&self, shift: usize) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..self.ny {
            for i in 0..self.nx {
                values.push(self.value((i + self.nx - shift % self.nx) % self.nx, k));
            }
        }
        Self { values, ..self.clone() }
    }
}
