//! Distortion budgets for David-type Beltrami coefficients.
//!
//! Stage `j` carries the coefficient of the `j`-fold stretch, of dilatation
//! `K_j = 2^j`, on a region of area `area_{M(j)}` chosen so that
//! `area_{M(j)} e^{2 K_j} < p_j`. Areas underflow quickly (`M(6)` is near 200 for
//! `area_m = 2^-m`), so every area is handled through its logarithm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::stretch::{BeltramiSpec, Region};

/// Area of the unit disk, the domain of the assembled coefficient.
pub const DISK_AREA: f64 = std::f64::consts::PI;

/// A positive sequence indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    /// `first * ratio^m`.
    Geometric { first: f64, ratio: f64 },
    /// A finite list; indices past the end are unavailable.
    Explicit { values: Vec<f64> },
}

impl Sequence {
    pub fn geometric(first: f64, ratio: f64) -> Self {
        Sequence::Geometric { first, ratio }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            Sequence::Geometric { .. } => None,
            Sequence::Explicit { values } => Some(values.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `ln(value_m)`, or `None` past the end of an explicit list.
    pub fn ln_at(&self, m: usize) -> Option<f64> {
        match self {
            Sequence::Geometric { first, ratio } => Some(first.ln() + m as f64 * ratio.ln()),
            Sequence::Explicit { values } => values.get(m).map(|v| v.ln()),
        }
    }

    pub fn at(&self, m: usize) -> Option<f64> {
        self.ln_at(m).map(f64::exp)
    }

    /// `sum_{m >= from} value_m`.
    pub fn tail_sum(&self, from: usize) -> f64 {
        match self {
            Sequence::Geometric { first, ratio } => first * ratio.powi(from as i32) / (1.0 - ratio),
            Sequence::Explicit { values } => values.iter().skip(from).sum(),
        }
    }

    fn check_positive(&self, op: &'static str) -> Result<()> {
        let ok = match self {
            Sequence::Geometric { first, ratio } => *first > 0.0 && first.is_finite() && *ratio > 0.0,
            Sequence::Explicit { values } => !values.is_empty() && values.iter().all(|v| *v > 0.0 && v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::contract(op, format!("sequence must be positive and finite: {self:?}")))
        }
    }

    fn check_summable(&self, op: &'static str) -> Result<()> {
        self.check_positive(op)?;
        if let Sequence::Geometric { ratio, .. } = self {
            if !(*ratio < 1.0) {
                return Err(LabError::contract(op, format!("geometric ratio {ratio} is not summable")));
            }
        }
        Ok(())
    }

    fn check_vanishing(&self, op: &'static str) -> Result<()> {
        self.check_summable(op)?;
        if let Sequence::Explicit { values } = self {
            if values.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(LabError::contract(op, "area sequence must be strictly decreasing"));
            }
        }
        Ok(())
    }

    /// Smallest `m >= from` with `ln(value_m) < bound`, assuming the sequence decreases.
    fn first_below(&self, from: usize, bound: f64) -> Option<usize> {
        match self {
            Sequence::Geometric { first, ratio } => {
                let x = (first.ln() - bound) / -ratio.ln();
                let mut m = if x < 0.0 { 0 } else { x.floor() as usize };
                m = m.saturating_sub(1).max(from);
                while self.ln_at(m)? >= bound {
                    m += 1;
                }
                Some(m)
            }
            Sequence::Explicit { values } => (from..values.len()).find(|&m| values[m].ln() < bound),
        }
    }
}

/// Stage data: stage `j` uses region `M(j)` of log-area `ln_area` and dilatation `K_j = 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetStage {
    pub j: usize,
    pub m: usize,
    pub ln_area: f64,
    pub dilatation: f64,
    pub ln_p: f64,
}

impl BudgetStage {
    /// `ln(area e^{2 K})`.
    pub fn ln_mass(&self) -> f64 {
        self.ln_area + 2.0 * self.dilatation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DavidBudget {
    pub p: Sequence,
    pub area: Sequence,
    pub stages: Vec<BudgetStage>,
}

impl DavidBudget {
    pub fn indices(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.m).collect()
    }

    /// `sum_j area_{M(j)} e^{2 K_j}`.
    pub fn total_mass(&self) -> f64 {
        self.stages.iter().map(|s| s.ln_mass().exp()).sum()
    }

    /// `sum_j p_j` over the selected stages.
    pub fn budget_sum(&self) -> f64 {
        self.stages.iter().map(|s| s.ln_p.exp()).sum()
    }
}

/// `K_j = 2^j`, the maximal dilatation of the `j`-fold stretch.
pub fn stage_dilatation(j: usize) -> f64 {
    2f64.powi(j as i32)
}

/// Select `M(0) < M(1) < ... < M(J - 1)`, each the smallest admissible index with
/// `area_{M(j)} e^{2^{j+1}} < p_j`.
pub fn select_budget(p: &Sequence, area: &Sequence, stages: usize) -> Result<DavidBudget> {
    const OP: &str = "select_budget";
    p.check_summable(OP)?;
    area.check_vanishing(OP)?;
    let total_area = area.tail_sum(0);
    if !(total_area < DISK_AREA) {
        return Err(LabError::contract(OP, format!("total area {total_area} does not fit in the unit disk")));
    }
    let mut out = Vec::with_capacity(stages);
    let mut next = 0usize;
    for j in 0..stages {
        let ln_p = p
            .ln_at(j)
            .ok_or_else(|| LabError::contract(OP, format!("budget sequence has no entry for stage {j}")))?;
        let k = stage_dilatation(j);
        let m = area.first_below(next, ln_p - 2.0 * k).ok_or_else(|| {
            LabError::contract(OP, format!("area sequence exhausted before stage {j} could be placed"))
        })?;
        let ln_area = area.ln_at(m).unwrap();
        out.push(BudgetStage { j, m, ln_area, dilatation: k, ln_p });
        next = m + 1;
    }
    Ok(DavidBudget { p: p.clone(), area: area.clone(), stages: out })
}

/// Region form of the assembled coefficient for stages `0..=last` on the unit disk:
/// region `M(j)` has modulus `(2^j - 1) / (2^j + 1)`, the complement `mu = 0`.
pub fn assemble_mu(budget: &DavidBudget, last: usize) -> Result<BeltramiSpec> {
    if last >= budget.stages.len() {
        return Err(LabError::contract(
            "assemble_mu",
            format!("stage {last} requested but the budget has {} stages", budget.stages.len()),
        ));
    }
    let regions = budget.stages[..=last]
        .iter()
        .map(|s| Region::with_dilatation(s.m as u64, s.ln_area, s.dilatation))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeltramiSpec::Regions { domain_area: DISK_AREA, regions })
}

fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Background area (where `mu = 0`) and the regions of a spec.
fn split(spec: &BeltramiSpec) -> Result<(f64, Vec<Region>)> {
    let (domain, regions) = spec.to_regions()?;
    let covered: f64 = regions.iter().map(Region::area).sum();
    let background = domain - covered;
    if !(background >= -1e-12 * domain.max(1.0)) {
        return Err(LabError::domain("exp_integrability", format!("regions cover {covered} > domain {domain}")));
    }
    Ok((background.max(0.0), regions))
}

/// `sum_regions area e^{p K}`, the region part of `int e^{p K}`.
pub fn region_exp_integral(spec: &BeltramiSpec, p: f64) -> Result<f64> {
    let (_, regions) = split(spec)?;
    check_regions(&regions)?;
    Ok(log_sum_exp(regions.iter().map(|r| r.ln_area + p * r.dilatation)).exp())
}

fn check_regions(regions: &[Region]) -> Result<()> {
    if let Some(r) = regions.iter().find(|r| !(r.dilatation.is_finite())) {
        return Err(LabError::domain("exp_integrability", format!("region {} has modulus 1", r.label)));
    }
    Ok(())
}

/// `int e^{p K}` over the domain: the region sum plus `background area * e^p`.
pub fn exp_integrability(spec: &BeltramiSpec, p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(LabError::domain("exp_integrability", format!("bad exponent {p}")));
    }
    let (background, regions) = split(spec)?;
    check_regions(&regions)?;
    let ln_terms = regions.iter().map(|r| r.ln_area + p * r.dilatation).chain([background.ln() + p]);
    Ok(log_sum_exp(ln_terms).exp())
}

/// `|{|mu| > 1 - eps}|` for a region spec.
pub fn superlevel_area(spec: &BeltramiSpec, eps: f64) -> Result<f64> {
    let (_, regions) = split(spec)?;
    // |mu| > 1 - eps  <=>  K > (2 - eps) / eps
    let threshold = (2.0 - eps) / eps;
    Ok(regions.iter().filter(|r| r.dilatation > threshold).map(Region::area).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelRow {
    pub eps: f64,
    pub measured_area: f64,
    pub bound: f64,
}

/// `|{|mu| > 1 - eps}| <= C exp(-alpha / eps)` for every grid `eps >= eps0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DavidCertificate {
    pub alpha: f64,
    pub c: f64,
    pub eps0: f64,
    pub exponent: f64,
    pub exp_integral: f64,
    pub rows: Vec<SuperlevelRow>,
}

impl DavidCertificate {
    pub fn bound(&self, eps: f64) -> f64 {
        self.c * (-self.alpha / eps).exp()
    }

    pub fn holds_on_grid(&self) -> bool {
        self.rows.iter().all(|r| r.eps < self.eps0 || r.measured_area <= r.bound)
    }

    /// Table with columns `eps, measured_area, bound`.
    pub fn write_csv(&self, path: &Path) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["eps", "measured_area", "bound"])?;
        for r in &self.rows {
            w.serialize((r.eps, r.measured_area, r.bound))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Chebyshev certificate with `alpha = 2`: on `{|mu| > 1 - eps}` one has
/// `K + 1 > 2 / eps`, so `|{|mu| > 1 - eps}| <= e^{-2p/eps} int e^{p (K + 1)}`,
/// which is at most `C e^{-2/eps}` with `C = e^p int e^{p K}` once `p >= 1`.
pub fn certify(spec: &BeltramiSpec, p: f64, eps_grid: &[f64]) -> Result<DavidCertificate> {
    if !(p >= 1.0) {
        return Err(LabError::Certification(format!("the alpha = 2 route needs an exponent p >= 1, got {p}")));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(LabError::domain("certify", "eps grid must be a non-empty subset of (0, 1]"));
    }
    let exp_integral = exp_integrability(spec, p)?;
    if !exp_integral.is_finite() {
        return Err(LabError::Certification(format!("int e^(pK) diverges for p = {p}")));
    }
    let alpha = 2.0;
    let c = p.exp() * exp_integral;
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows = grid
        .iter()
        .map(|&eps| {
            Ok(SuperlevelRow { eps, measured_area: superlevel_area(spec, eps)?, bound: c * (-alpha / eps).exp() })
        })
        .collect::<Result<Vec<_>>>()?;
    // smallest grid eps from which the bound holds all the way up
    let mut eps0 = None;
    for r in rows.iter().rev() {
        if r.measured_area <= r.bound {
            eps0 = Some(r.eps);
        } else {
            break;
        }
    }
    let eps0 = eps0.ok_or_else(|| {
        LabError::Certification(format!("bound fails at the largest eps {}", rows.last().unwrap().eps))
    })?;
    Ok(DavidCertificate { alpha, c, eps0, exponent: p, exp_integral, rows })
}

/// `sum_{n >= j} p_n`, the L1 distortion left after stage `j`.
pub fn l1_tail(budget: &DavidBudget, j: usize) -> f64 {
    budget.p.tail_sum(j)
}
