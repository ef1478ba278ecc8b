use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cylinder::X_PERIOD;
use crate::error::{LabError, Result};
use crate::solver::GridField;

/// A horizontal band `lo <= y <= hi` of the cylinder carrying a constant coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub value: Complex64,
}

/// A labelled region of known area on which `|mu|` is constant.
///
/// The area is kept as its natural logarithm and the distortion as the dilatation
/// `K = (1 + |mu|) / (1 - |mu|)`; deep stages of the David construction have
/// areas far below `f64::MIN_POSITIVE` and `|mu|` within 1e-6 of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: u64,
    pub ln_area: f64,
    pub dilatation: f64,
}

impl Region {
    pub fn with_modulus(label: u64, area: f64, modulus: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(LabError::domain("Region::with_modulus", format!("area must be positive, got {area}")));
        }
        if !(0.0..1.0).contains(&modulus) {
            return Err(LabError::Degenerate { sup_modulus: modulus });
        }
        Ok(Self { label, ln_area: area.ln(), dilatation: (1.0 + modulus) / (1.0 - modulus) })
    }

    pub fn with_dilatation(label: u64, ln_area: f64, dilatation: f64) -> Result<Self> {
        if !(dilatation >= 1.0 && dilatation.is_finite()) {
            return Err(LabError::Degenerate { sup_modulus: 1.0 });
        }
        if ln_area.is_nan() || ln_area == f64::INFINITY {
            return Err(LabError::domain("Region::with_dilatation", format!("bad log-area {ln_area}")));
        }
        Ok(Self { label, ln_area, dilatation })
    }

    pub fn area(&self) -> f64 {
        self.ln_area.exp()
    }

    pub fn modulus(&self) -> f64 {
        (self.dilatation - 1.0) / (self.dilatation + 1.0)
    }
}

/// A complex dilatation field in one of three representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeltramiSpec {
    /// Piecewise constant on horizontal bands of a cylinder of period `2 pi`.
    Bands { bands: Vec<Band> },
    /// Constant modulus on labelled regions inside a domain of area `domain_area`;
    /// the rest of the domain carries `mu = 0`.
    Regions { domain_area: f64, regions: Vec<Region> },
    /// Cell-centred samples on a periodic grid.
    Grid(GridField),
}

impl BeltramiSpec {
    /// The zero coefficient on a domain of the given area.
    pub fn zero_on(domain_area: f64) -> Self {
        BeltramiSpec::Regions { domain_area, regions: Vec::new() }
    }

    /// Check `|mu| < 1`, disjoint ordered bands and finite positive areas.
    pub fn validate(&self) -> Result<()> {
        let sup = self.sup_modulus();
        if !(sup < 1.0) {
            return Err(LabError::Degenerate { sup_modulus: sup });
        }
        match self {
            BeltramiSpec::Bands { bands } => {
                if bands.iter().any(|b| !(b.lo < b.hi)) {
                    return Err(LabError::contract("BeltramiSpec::validate", "empty or reversed band"));
                }
                if bands.windows(2).any(|w| w[1].lo < w[0].hi) {
                    return Err(LabError::contract("BeltramiSpec::validate", "bands overlap"));
                }
            }
            BeltramiSpec::Regions { domain_area, regions } => {
                let total: f64 = regions.iter().map(Region::area).sum();
                if !(total <= *domain_area) {
                    return Err(LabError::contract(
                        "BeltramiSpec::validate",
                        format!("regions cover {total} > domain area {domain_area}"),
                    ));
                }
            }
            BeltramiSpec::Grid(g) => g.validate()?,
        }
        Ok(())
    }

    /// Essential supremum of `|mu|`.
    pub fn sup_modulus(&self) -> f64 {
        match self {
            BeltramiSpec::Bands { bands } => bands.iter().map(|b| b.value.norm()).fold(0.0, f64::max),
            BeltramiSpec::Regions { regions, .. } => regions.iter().map(Region::modulus).fold(0.0, f64::max),
            BeltramiSpec::Grid(g) => g.values().iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Maximal dilatation `(1 + ||mu||) / (1 - ||mu||)`.
    pub fn max_dilatation(&self) -> f64 {
        match self {
            BeltramiSpec::Regions { regions, .. } => regions.iter().map(|r| r.dilatation).fold(1.0, f64::max),
            _ => {
                let m = self.sup_modulus();
                (1.0 + m) / (1.0 - m)
            }
        }
    }

    /// Multiply every value by the unimodular factor `exp(-2 i theta)`, the effect of
    /// conjugating by a conformal chart with derivative argument `theta`. Moduli
    /// (and so every distortion quantity) are unchanged.
    pub fn conformal_conjugation(&self, theta: f64) -> Self {
        let factor = Complex64::from_polar(1.0, -2.0 * theta);
        match self {
            BeltramiSpec::Bands { bands } => BeltramiSpec::Bands {
                bands: bands.iter().map(|b| Band { value: b.value * factor, ..*b }).collect(),
            },
            BeltramiSpec::Regions { .. } => self.clone(),
            BeltramiSpec::Grid(g) => BeltramiSpec::Grid(g.map_values(|v| v * factor)),
        }
    }

    /// Region form used by the distortion bookkeeping. Bands become regions of area
    /// `2 pi (hi - lo)` and grid cells regions of area `hx hy`; cells and bands with
    /// `mu = 0` are left to the background.
    pub fn to_regions(&self) -> Result<(f64, Vec<Region>)> {
        match self {
            BeltramiSpec::Regions { domain_area, regions } => Ok((*domain_area, regions.clone())),
            BeltramiSpec::Bands { bands } => {
                let domain = match (bands.first(), bands.last()) {
                    (Some(first), Some(last)) => X_PERIOD * (last.hi - first.lo),
                    _ => 0.0,
                };
                let regions = bands
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.value.norm() > 0.0)
                    .map(|(k, b)| Region::with_modulus(k as u64, X_PERIOD * (b.hi - b.lo), b.value.norm()))
                    .collect::<Result<Vec<_>>>()?;
                Ok((domain, regions))
            }
            BeltramiSpec::Grid(g) => {
                let cell = g.cell_area();
                let regions = g
                    .values()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.norm() > 0.0)
                    .map(|(k, v)| Region::with_modulus(k as u64, cell, v.norm()))
                    .collect::<Result<Vec<_>>>()?;
                Ok((cell * g.values().len() as f64, regions))
            }
        }
    }

    /// Value on the band containing `y`, if this is a band spec.
    pub fn band_value_at(&self, y: f64) -> Option<Complex64> {
        match self {
            BeltramiSpec::Bands { bands } => bands.iter().find(|b| b.lo <= y && y <= b.hi).map(|b| b.value),
            _ => None,
        }
    }
}
