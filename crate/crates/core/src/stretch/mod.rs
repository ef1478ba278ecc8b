//! Stretch deformations of a cylinder and the algebra of their Beltrami coefficients.
//!
//! `stretch_map(H, a, t)` multiplies the band `|y| <= aH` by `1 + t` and
//! translates the two outer bands by `±atH`, landing in `C((1 + at) H)`. The
//! iterated schedule composes full stretches of cylinders of half-heights
//! `H, 3H/2, (3/2)^2 H, ...` and interpolates the last one in time.

mod coefficient;
mod map;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use coefficient::{Band, BeltramiSpec, Region};
pub use map::{compose, PiecewiseVerticalMap};

use crate::error::{LabError, Result};

/// Growth factor of the half-height per full stretch with `a = 1/2`.
pub const STAGE_GROWTH: f64 = 1.5;

/// The stretch `psi_{H,t}` as an exact three-piece vertical map.
pub fn stretch_map(h: f64, a: f64, t: f64) -> Result<PiecewiseVerticalMap> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::domain("stretch_map", format!("half-height must be positive, got {h}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(LabError::domain("stretch_map", format!("band fraction must lie in (0, 1), got {a}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(LabError::domain("stretch_map", format!("time must lie in [0, 1], got {t}")));
    }
    let shift = a * t * h;
    PiecewiseVerticalMap::from_pieces(vec![-h, -a * h, a * h, h], vec![1.0, 1.0 + t, 1.0], vec![-shift, 0.0, shift])
}

/// Beltrami coefficient `(1 - s) / (1 + s)` of each piece of slope `s`, as bands
/// in source coordinates.
pub fn beltrami_of(map: &PiecewiseVerticalMap) -> BeltramiSpec {
    let bands = map
        .intervals()
        .zip(map.slopes())
        .map(|((lo, hi), &s)| Band { lo, hi, value: Complex64::new((1.0 - s) / (1.0 + s), 0.0) })
        .collect();
    BeltramiSpec::Bands { bands }
}

/// Derivative in `h` at `h = 0` of `bel(psi_{H,t+h} ∘ psi_{H,t}^{-1})`, as bands of
/// the target cylinder `C((1 + a t) H)`: `-1 / (2 + 2t)` on `|y| <= (1 + t) a H`.
pub fn infinitesimal_beltrami(h: f64, a: f64, t: f64) -> Result<BeltramiSpec> {
    if !(t >= 0.0) {
        return Err(LabError::domain("infinitesimal_beltrami", format!("time must be nonnegative, got {t}")));
    }
    if !(h > 0.0) || !(a > 0.0 && a < 1.0) {
        return Err(LabError::domain("infinitesimal_beltrami", format!("bad cylinder (H = {h}, a = {a})")));
    }
    let top = (1.0 + a * t) * h;
    let core = (1.0 + t) * a * h;
    let zero = Complex64::new(0.0, 0.0);
    Ok(BeltramiSpec::Bands {
        bands: vec![
            Band { lo: -top, hi: -core, value: zero },
            Band { lo: -core, hi: core, value: Complex64::new(-1.0 / (2.0 + 2.0 * t), 0.0) },
            Band { lo: core, hi: top, value: zero },
        ],
    })
}

/// A point of the iterated schedule: `stage` full stretches have been started and
/// the last one has run for `local` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTime {
    pub stage: usize,
    pub local: f64,
}

impl ScheduleTime {
    /// Split a global time `t` in `[0, stages]`. Integer times `k >= 1` map to the
    /// end of stage `k`, and `t = 0` to the start of stage 1.
    pub fn from_global(t: f64, stages: usize) -> Result<Self> {
        if stages == 0 {
            return Err(LabError::domain("ScheduleTime::from_global", "need at least one stage"));
        }
        if !(0.0..=stages as f64).contains(&t) {
            return Err(LabError::domain(
                "ScheduleTime::from_global",
                format!("global time {t} outside [0, {stages}]"),
            ));
        }
        let stage = (t.ceil() as usize).max(1);
        Ok(Self { stage, local: t - (stage - 1) as f64 })
    }

    pub fn global(&self) -> f64 {
        (self.stage - 1) as f64 + self.local
    }
}

/// The `j`-fold full stretch `psi_{(3/2)^{j-1} H} ∘ ... ∘ psi_{3H/2} ∘ psi_H` with
/// `a = 1/2`; `j = 0` is the identity.
pub fn full_schedule(h: f64, j: usize) -> Result<PiecewiseVerticalMap> {
    let mut acc = PiecewiseVerticalMap::identity(h);
    let mut height = h;
    for _ in 0..j {
        acc = compose(&stretch_map(height, 0.5, 1.0)?, &acc)?;
        height *= STAGE_GROWTH;
    }
    Ok(acc)
}

/// The interpolated schedule at `time`: the partial stretch of the stage cylinder
/// composed with the previous full stages.
pub fn schedule_at(h: f64, time: ScheduleTime) -> Result<PiecewiseVerticalMap> {
    if time.stage == 0 || !(0.0..=1.0).contains(&time.local) {
        return Err(LabError::domain("schedule_at", format!("bad schedule time {time:?}")));
    }
    let previous = full_schedule(h, time.stage - 1)?;
    let last = stretch_map(previous.target_halfheight(), 0.5, time.local)?;
    compose(&last, &previous)
}

/// `psi^{(t)}` for a global time `t` in `[0, j]`.
pub fn iterate_schedule(h: f64, j: usize, t: f64) -> Result<PiecewiseVerticalMap> {
    schedule_at(h, ScheduleTime::from_global(t, j)?)
}

/// Maximal dilatation of the vertical map.
pub fn max_dilatation(map: &PiecewiseVerticalMap) -> f64 {
    map.max_dilatation()
}

/// Conjugate a coefficient by a conformal chart with derivative argument `theta`.
pub fn conformal_conjugation_modulus_invariance(spec: &BeltramiSpec, theta: f64) -> BeltramiSpec {
    spec.conformal_conjugation(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// `f_zbar / f_z` of `x + i map(y)` from centred differences of the 2D map.
    fn fd_beltrami(map: &PiecewiseVerticalMap, x: f64, y: f64, step: f64) -> Complex64 {
        let f = |x: f64, y: f64| Complex64::new(x, map.eval(y));
        let fx = (f(x + step, y) - f(x - step, y)) / (2.0 * step);
        let fy = (f(x, y + step) - f(x, y - step)) / (2.0 * step);
        let i = Complex64::i();
        let fz = 0.5 * (fx - i * fy);
        let fzbar = 0.5 * (fx + i * fy);
        fzbar / fz
    }

    #[test]
    fn stretch_at_zero_is_identity() {
        let m = stretch_map(2.0, 0.5, 0.0).unwrap().simplified();
        assert_eq!(m, PiecewiseVerticalMap::identity(2.0));
    }

    #[test]
    fn stretch_values_at_unit_time() {
        let m = stretch_map(1.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(m.eval(0.25), 0.5, epsilon = 1e-15);
        assert_relative_eq!(m.eval(0.75), 1.25, epsilon = 1e-15);
        assert_relative_eq!(m.target_halfheight(), 1.5, epsilon = 1e-15);
        let (a, h, t) = (0.3, 2.0, 0.7);
        let m = stretch_map(h, a, t).unwrap();
        let inner = (1.0 + t) * a * h;
        let outer = a * h + a * t * h;
        assert_relative_eq!(inner, outer, epsilon = 1e-15);
        assert_relative_eq!(m.eval(a * h), inner, epsilon = 1e-15);
    }

    #[test]
    fn stretch_coefficient_values() {
        let spec = beltrami_of(&stretch_map(1.0, 0.5, 1.0).unwrap());
        assert_relative_eq!(spec.band_value_at(0.0).unwrap().re, -1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(spec.band_value_at(0.9).unwrap().re, 0.0);
        let id = beltrami_of(&PiecewiseVerticalMap::identity(4.0));
        assert_eq!(id.sup_modulus(), 0.0);
    }

    #[test]
    fn coefficient_independent_of_height_and_band() {
        for &t in &[0.0, 0.25, 0.5, 1.0] {
            let reference = -t / (2.0 + t);
            for &h in &[1.0, 10.0, 100.0] {
                for &a in &[0.25, 0.5] {
                    let spec = beltrami_of(&stretch_map(h, a, t).unwrap());
                    let BeltramiSpec::Bands { bands } = &spec else { unreachable!() };
                    assert_eq!(bands[1].value.re, reference);
                    assert_eq!(bands[0].value.norm(), 0.0);
                    assert_eq!(bands[2].value.norm(), 0.0);
                    assert!(spec.sup_modulus() <= 1.0 / 3.0 + 1e-16);
                }
            }
        }
    }

    #[test]
    fn finite_difference_oracle_recovers_coefficient() {
        for &h in &[1.0, 30.0] {
            let m = stretch_map(h, 0.5, 1.0).unwrap();
            let step = 1e-3 * h;
            for k in 0..200 {
                let y = -h + 2.0 * h * (k as f64 + 0.5) / 200.0;
                if m.breakpoints().iter().any(|b| (b - y).abs() < 2.0 * step) {
                    continue;
                }
                let x = 0.37 * k as f64;
                let fd = fd_beltrami(&m, x, y, step);
                let exact = if y.abs() <= 0.5 * h { -1.0 / 3.0 } else { 0.0 };
                assert!((fd - Complex64::new(exact, 0.0)).norm() <= 1e-10, "H = {h}, y = {y}: {fd}");
            }
        }
    }

    #[test]
    fn infinitesimal_coefficient_values_and_difference_quotient() {
        let at = |t: f64| infinitesimal_beltrami(3.0, 0.5, t).unwrap().band_value_at(0.0).unwrap().re;
        assert_relative_eq!(at(0.0), -0.5, epsilon = 1e-15);
        assert_relative_eq!(at(1.0), -0.25, epsilon = 1e-15);
        for &(h, a) in &[(1.0, 0.5), (30.0, 0.25)] {
            let t = 0.4;
            let exact = -1.0 / (2.0 + 2.0 * t);
            let base = stretch_map(h, a, t).unwrap();
            let mut errors = Vec::new();
            for &dh in &[1e-2, 1e-3, 1e-4] {
                let step = compose(&stretch_map(h, a, t + dh).unwrap(), &base.inverse()).unwrap();
                let q = beltrami_of(&step).band_value_at(0.0).unwrap().re / dh;
                errors.push((q - exact).abs());
            }
            // first order: each tenfold reduction of h cuts the error tenfold
            for w in errors.windows(2) {
                let ratio = w[0] / w[1];
                assert!(ratio > 9.0 && ratio < 11.0, "{errors:?}");
            }
            // support of the derivative is the stretched core band
            let spec = infinitesimal_beltrami(h, a, t).unwrap();
            assert!(spec.band_value_at((1.0 + t) * a * h * 0.999).unwrap().re < 0.0);
            assert_eq!(spec.band_value_at((1.0 + t) * a * h * 1.001).unwrap().re, 0.0);
        }
    }

    #[test]
    fn nested_composition_has_slope_four_near_zero() {
        let two = compose(&stretch_map(1.5, 0.5, 1.0).unwrap(), &stretch_map(1.0, 0.5, 1.0).unwrap()).unwrap();
        assert_eq!(two.max_dilatation(), 4.0);
        assert_eq!(two.slope_at(0.0), 4.0);
        assert_eq!(two.slope_at(0.3), 4.0);
        assert_relative_eq!(two.target_halfheight(), 2.25, epsilon = 1e-15);
    }

    #[test]
    fn schedule_heights_and_dilatation() {
        for j in 1..=8 {
            let m = full_schedule(2.0, j).unwrap();
            assert_eq!(max_dilatation(&m), 2f64.powi(j as i32));
            assert_relative_eq!(m.target_halfheight(), 1.5f64.powi(j as i32) * 2.0, max_relative = 1e-14);
            assert!(m.is_expanding());
        }
        assert_eq!(max_dilatation(&PiecewiseVerticalMap::identity(1.0)), 1.0);
        assert_eq!(max_dilatation(&full_schedule(1.0, 1).unwrap()), 2.0);
    }

    #[test]
    fn iterate_schedule_instances() {
        let one = iterate_schedule(1.0, 1, 1.0).unwrap();
        assert_eq!(one, compose(&stretch_map(1.0, 0.5, 1.0).unwrap(), &PiecewiseVerticalMap::identity(1.0)).unwrap());
        assert_eq!(iterate_schedule(1.0, 3, 3.0).unwrap().max_dilatation(), 8.0);
        let mid = iterate_schedule(1.0, 2, 1.5).unwrap();
        let expect = compose(&stretch_map(1.5, 0.5, 0.5).unwrap(), &full_schedule(1.0, 1).unwrap()).unwrap();
        assert_eq!(mid, expect);
        assert_eq!(iterate_schedule(1.0, 2, 0.0).unwrap().simplified(), PiecewiseVerticalMap::identity(1.0));
        assert!(iterate_schedule(1.0, 2, 2.5).is_err());
        assert!(iterate_schedule(1.0, 2, -0.1).is_err());
        assert!(iterate_schedule(1.0, 0, 0.0).is_err());
        let st = ScheduleTime::from_global(2.0, 3).unwrap();
        assert_eq!((st.stage, st.local), (2, 1.0));
        assert_eq!(st.global(), 2.0);
    }

    #[test]
    fn conjugation_preserves_dilatation() {
        for j in 1..=6 {
            let spec = beltrami_of(&full_schedule(1.0, j).unwrap());
            for &theta in &[0.0, 0.3, std::f64::consts::FRAC_PI_2, 2.0] {
                let turned = conformal_conjugation_modulus_invariance(&spec, theta);
                assert_relative_eq!(turned.max_dilatation(), spec.max_dilatation(), max_relative = 1e-12);
                assert_relative_eq!(turned.sup_modulus(), spec.sup_modulus(), max_relative = 1e-15);
            }
        }
    }

    fn arb_stretch() -> impl Strategy<Value = PiecewiseVerticalMap> {
        (0.5f64..5.0, 0.1f64..0.9, 0.0f64..=1.0).prop_map(|(h, a, t)| stretch_map(h, a, t).unwrap())
    }

    proptest! {
        #[test]
        fn composition_is_associative(f in arb_stretch(), g in arb_stretch(), k in arb_stretch()) {
            // rescale so heights chain: k then g then f
            let g = rescale(&g, k.target_halfheight());
            let f = rescale(&f, g.target_halfheight());
            let left = compose(&compose(&f, &g).unwrap(), &k).unwrap();
            let right = compose(&f, &compose(&g, &k).unwrap()).unwrap();
            let src = k.source_halfheight();
            for i in 0..=50 {
                let y = -src + 2.0 * src * i as f64 / 50.0;
                prop_assert!((left.eval(y) - right.eval(y)).abs() <= 1e-12 * left.target_halfheight());
            }
            prop_assert_eq!(left.breakpoints().len(), right.breakpoints().len());
            prop_assert!(left.max_dilatation() <= f.max_dilatation() * g.max_dilatation() * k.max_dilatation() * (1.0 + 1e-12));
        }

        #[test]
        fn stretch_is_odd_with_nonpositive_real_coefficient(m in arb_stretch()) {
            let h = m.source_halfheight();
            for i in 0..=20 {
                let y = h * i as f64 / 20.0;
                prop_assert!((m.eval(-y) + m.eval(y)).abs() <= 1e-14 * m.target_halfheight());
            }
            let BeltramiSpec::Bands { bands } = beltrami_of(&m) else { unreachable!() };
            for b in bands {
                prop_assert!(b.value.re <= 0.0 && b.value.im == 0.0 && b.value.norm() < 1.0);
            }
        }
    }

    /// Stretch map of the same shape on a cylinder of half-height `h`.
    fn rescale(m: &PiecewiseVerticalMap, h: f64) -> PiecewiseVerticalMap {
        let a = m.breakpoints()[2] / m.source_halfheight();
        let t = m.slopes()[1] - 1.0;
        stretch_map(h, a, t.clamp(0.0, 1.0)).unwrap()
    }
}
