use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

const REL_TOL: f64 = 1e-12;

/// A continuous, piecewise-affine, increasing map acting on the vertical
/// coordinate of a cylinder: `x + iy -> x + i map(y)`.
///
/// `breakpoints` includes both ends `-source_halfheight` and `source_halfheight`;
/// piece `k` acts on `[breakpoints[k], breakpoints[k + 1]]` as
/// `y -> slopes[k] * y + offsets[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseVerticalMap {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    offsets: Vec<f64>,
    source_halfheight: f64,
    target_halfheight: f64,
}

impl PiecewiseVerticalMap {
    /// Build a map from its pieces, checking monotonicity, continuity, odd symmetry
    /// and that it carries `[-h_src, h_src]` onto `[-h_tgt, h_tgt]`.
    pub fn from_pieces(breakpoints: Vec<f64>, slopes: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        const OP: &str = "PiecewiseVerticalMap::from_pieces";
        let n = slopes.len();
        if n == 0 || breakpoints.len() != n + 1 || offsets.len() != n {
            return Err(LabError::contract(
                OP,
                format!("need k + 1 breakpoints for k pieces, got {} / {} / {}", breakpoints.len(), n, offsets.len()),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::contract(OP, "breakpoints must be strictly increasing"));
        }
        if slopes.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(LabError::contract(OP, "slopes must be positive and finite"));
        }
        let source = breakpoints[n];
        let scale = source.abs().max(1.0);
        if (breakpoints[0] + source).abs() > REL_TOL * scale {
            return Err(LabError::contract(OP, "domain must be symmetric about 0"));
        }
        for k in 1..n {
            let left = slopes[k - 1] * breakpoints[k] + offsets[k - 1];
            let right = slopes[k] * breakpoints[k] + offsets[k];
            if (left - right).abs() > REL_TOL * scale.max(left.abs()) {
                return Err(LabError::contract(OP, format!("discontinuous at y = {}", breakpoints[k])));
            }
        }
        let map = Self {
            target_halfheight: slopes[n - 1] * source + offsets[n - 1],
            breakpoints,
            slopes,
            offsets,
            source_halfheight: source,
        };
        let bottom = map.slopes[0] * map.breakpoints[0] + map.offsets[0];
        if (bottom + map.target_halfheight).abs() > REL_TOL * map.target_halfheight.abs().max(1.0) {
            return Err(LabError::contract(OP, "image interval must be symmetric about 0"));
        }
        if !map.is_odd() {
            return Err(LabError::contract(OP, "map must be odd: map(-y) = -map(y)"));
        }
        Ok(map)
    }

    pub fn identity(halfheight: f64) -> Self {
        Self {
            breakpoints: vec![-halfheight, halfheight],
            slopes: vec![1.0],
            offsets: vec![0.0],
            source_halfheight: halfheight,
            target_halfheight: halfheight,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn source_halfheight(&self) -> f64 {
        self.source_halfheight
    }

    pub fn target_halfheight(&self) -> f64 {
        self.target_halfheight
    }

    pub fn num_pieces(&self) -> usize {
        self.slopes.len()
    }

    /// Source intervals `(lo, hi)` of every piece, bottom to top.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// Index of the piece containing `y`, preferring the lower piece at a breakpoint.
    fn piece_at(&self, y: f64) -> usize {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        inner.partition_point(|&b| b < y)
    }

    /// Image of `y`; values outside the domain are extended affinely from the end pieces.
    pub fn eval(&self, y: f64) -> f64 {
        let k = self.piece_at(y);
        self.slopes[k] * y + self.offsets[k]
    }

    /// Slope of the piece containing `y`.
    pub fn slope_at(&self, y: f64) -> f64 {
        self.slopes[self.piece_at(y)]
    }

    fn images(&self) -> Vec<f64> {
        let n = self.num_pieces();
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.slopes[0] * self.breakpoints[0] + self.offsets[0]);
        for k in 0..n {
            out.push(self.slopes[k] * self.breakpoints[k + 1] + self.offsets[k]);
        }
        out
    }

    /// The inverse map, again piecewise affine with reciprocal slopes.
    pub fn inverse(&self) -> Self {
        let breakpoints = self.images();
        let slopes = self.slopes.iter().map(|s| 1.0 / s).collect();
        let offsets = self.slopes.iter().zip(&self.offsets).map(|(s, o)| -o / s).collect();
        Self {
            breakpoints,
            slopes,
            offsets,
            source_halfheight: self.target_halfheight,
            target_halfheight: self.source_halfheight,
        }
    }

    /// Merge neighbouring pieces that carry the same affine formula.
    pub fn simplified(&self) -> Self {
        let mut breakpoints = vec![self.breakpoints[0]];
        let mut slopes: Vec<f64> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        let scale = self.target_halfheight.abs().max(1.0);
        for k in 0..self.num_pieces() {
            let (s, o) = (self.slopes[k], self.offsets[k]);
            match (slopes.last(), offsets.last()) {
                (Some(&ls), Some(&lo)) if (ls - s).abs() <= REL_TOL * s && (lo - o).abs() <= REL_TOL * scale => {
                    *breakpoints.last_mut().unwrap() = self.breakpoints[k + 1];
                }
                _ => {
                    slopes.push(s);
                    offsets.push(o);
                    breakpoints.push(self.breakpoints[k + 1]);
                }
            }
        }
        Self { breakpoints, slopes, offsets, ..self.clone() }
    }

    /// Whether every slope is at least 1 (the map only expands).
    pub fn is_expanding(&self) -> bool {
        self.slopes.iter().all(|&s| s >= 1.0)
    }

    fn is_odd(&self) -> bool {
        let n = self.num_pieces();
        let scale = self.source_halfheight.abs().max(self.target_halfheight.abs()).max(1.0);
        (0..=n).all(|k| (self.breakpoints[k] + self.breakpoints[n - k]).abs() <= REL_TOL * scale)
            && (0..n).all(|k| {
                (self.slopes[k] - self.slopes[n - 1 - k]).abs() <= REL_TOL * self.slopes[k]
                    && (self.offsets[k] + self.offsets[n - 1 - k]).abs() <= REL_TOL * scale
            })
    }

    /// Largest distortion `max(s, 1/s)` over the pieces: the maximal dilatation of
    /// `x + iy -> x + i map(y)`.
    pub fn max_dilatation(&self) -> f64 {
        self.slopes.iter().map(|&s| s.max(1.0 / s)).fold(1.0, f64::max)
    }
}

/// Exact composition `outer ∘ inner`. Breakpoints of the result are the inner
/// breakpoints together with the preimages of the outer ones; slopes multiply.
pub fn compose(outer: &PiecewiseVerticalMap, inner: &PiecewiseVerticalMap) -> Result<PiecewiseVerticalMap> {
    let (mid, src) = (inner.target_halfheight, outer.source_halfheight);
    if (mid - src).abs() > REL_TOL * mid.abs().max(src.abs()).max(1.0) {
        return Err(LabError::contract(
            "compose",
            format!("inner target half-height {mid} does not match outer source half-height {src}"),
        ));
    }
    let inner_inv = inner.inverse();
    let mut cuts: Vec<f64> = inner.breakpoints.clone();
    cuts.extend(outer.breakpoints[1..outer.breakpoints.len() - 1].iter().map(|&b| inner_inv.eval(b)));
    cuts.sort_by(f64::total_cmp);
    let scale = inner.source_halfheight.abs().max(1.0);
    cuts.dedup_by(|b, a| (*b - *a).abs() <= REL_TOL * scale);
    // keep the exact domain ends after deduplication
    let n = cuts.len();
    cuts[0] = inner.breakpoints[0];
    cuts[n - 1] = inner.source_halfheight;

    let mut slopes = Vec::with_capacity(n - 1);
    let mut offsets = Vec::with_capacity(n - 1);
    for w in cuts.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let ki = inner.piece_at(m);
        let ko = outer.piece_at(inner.eval(m));
        slopes.push(outer.slopes[ko] * inner.slopes[ki]);
        offsets.push(outer.slopes[ko] * inner.offsets[ki] + outer.offsets[ko]);
    }
    let target = outer.target_halfheight;
    Ok(PiecewiseVerticalMap {
        breakpoints: cuts,
        slopes,
        offsets,
        source_halfheight: inner.source_halfheight,
        target_halfheight: target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_map() -> PiecewiseVerticalMap {
        PiecewiseVerticalMap::from_pieces(vec![-2.0, -0.5, 0.5, 2.0], vec![1.0, 3.0, 1.0], vec![-1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn rejects_malformed_pieces() {
        assert!(PiecewiseVerticalMap::from_pieces(vec![-1.0, 1.0], vec![], vec![]).is_err());
        assert!(PiecewiseVerticalMap::from_pieces(vec![-1.0, 1.0], vec![-1.0], vec![0.0]).is_err());
        // jump at 0.5
        assert!(PiecewiseVerticalMap::from_pieces(vec![-2.0, -0.5, 0.5, 2.0], vec![1.0, 3.0, 1.0], vec![-1.0, 0.0, 2.0]).is_err());
        // not odd
        assert!(PiecewiseVerticalMap::from_pieces(vec![-1.0, 0.0, 1.0], vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
        // asymmetric domain
        assert!(PiecewiseVerticalMap::from_pieces(vec![-1.0, 2.0], vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn eval_inverse_roundtrip() {
        let m = sample_map();
        assert_eq!(m.target_halfheight(), 3.0);
        let inv = m.inverse();
        for k in 0..=40 {
            let y = -2.0 + 4.0 * k as f64 / 40.0;
            assert_relative_eq!(inv.eval(m.eval(y)), y, epsilon = 1e-14);
            assert_relative_eq!(m.eval(-y), -m.eval(y), epsilon = 1e-14);
        }
        assert_eq!(m.max_dilatation(), 3.0);
        assert_eq!(inv.max_dilatation(), 3.0);
        assert!(m.is_expanding());
        assert!(!inv.is_expanding());
    }

    #[test]
    fn compose_identity_and_mismatch() {
        let m = sample_map();
        let left = compose(&PiecewiseVerticalMap::identity(3.0), &m).unwrap().simplified();
        let right = compose(&m, &PiecewiseVerticalMap::identity(2.0)).unwrap().simplified();
        assert_eq!(left, m);
        assert_eq!(right, m);
        assert!(compose(&m, &m).is_err());
        let back = compose(&m.inverse(), &m).unwrap().simplified();
        assert_eq!(back.num_pieces(), 1);
        assert_relative_eq!(back.slopes()[0], 1.0, epsilon = 1e-15);
    }
}
