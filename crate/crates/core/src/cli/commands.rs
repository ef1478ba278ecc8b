use std::f64::consts::SQRT_2;

use anyhow::Result;
use num_complex::Complex64;
use serde::Serialize;

use super::{Artifacts, BoundsArgs, Check, CylArgs, DavidArgs, PuddingArgs, SchwarzianArgs, SolveArgs, StretchArgs};
use crate::annulus::{
    aggregate_collars, laurent_l1_norm, l1_norm_quadrature, pudding_suite, write_checks_csv, AnnulusPair, LaurentSeries,
};
use crate::bounds::{
    base_series_closed, base_series_partial, geodesic_decay, series_sum, wolpert_contradiction, ConvergenceLedger,
    DEFAULT_RATIO,
};
use crate::cylinder::{
    collar_threshold, collar_width, core_length, inj_radius_bounds, stretch_pair_ratio, CylinderSpec,
    INJ_RADIUS_HEIGHT_THRESHOLD,
};
use crate::david::{assemble_mu, certify, region_exp_integral, select_budget, Sequence};
use crate::schwarzian::{
    bers_derivative_kernel, counterexample_schwarzian, counterexample_scan, schwarzian_fd, write_scan_csv, ExteriorGrid,
    DEFAULT_FD_STEP,
};
use crate::solver::{convergence_experiment, solve, ExperimentGrid, GridField, Normalization};
use crate::stretch::{beltrami_of, full_schedule, stretch_map, PiecewiseVerticalMap};

fn write_rows<T: Serialize>(out: &mut Artifacts, name: &str, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(out.path(name))?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(super) fn cyl(a: &CylArgs, out: &mut Artifacts) -> Result<Vec<Check>> {
    let c = CylinderSpec::with_height(a.h)?;
    let mut checks = vec![Check::at_least("height_above_threshold", a.h, INJ_RADIUS_HEIGHT_THRESHOLD)];
    let mut rows = Vec::with_capacity(a.samples);
    for k in 0..a.samples {
        let t = k as f64 / (a.samples - 1) as f64;
        let r = inj_radius_bounds(&c, t)?;
        rows.push((t, r.upper_bound, r.lower_bound));
    }
    let worst = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most("inj_radius_upper_bound", worst, 0.5));
    checks.push(Check::flag("lower_below_upper", rows.iter().all(|r| r.2 <= r.1)));
    write_rows(out, "cyl_inj_radius.csv", &["t", "upper_bound", "lower_bound"], &rows)?;

    checks.push(Check::close("pair_ratio", stretch_pair_ratio(&c)?, 2.0 * SQRT_2 / 3.0, 1e-12));
    let next = CylinderSpec::with_height(1.5 * a.h)?;
    let core_ratio = core_length(&next, 0.0)? / core_length(&c, 0.0)?;
    checks.push(Check::close("core_length_ratio", core_ratio, 2.0 / 3.0, 2.0 * f64::EPSILON));

    let l_star = collar_threshold(INJ_RADIUS_HEIGHT_THRESHOLD, a.bisection_tol)?;
    checks.push(Check::rel_close("collar_threshold_length", l_star, 3.0e-12, 2e-2));
    checks.push(Check::rel_close("collar_width_at_threshold", collar_width(l_star)?, INJ_RADIUS_HEIGHT_THRESHOLD, 1e-3));
    Ok(checks)
}

/// `f_zbar / f_z` of `x + i map(y)` from centred differences.
fn fd_beltrami(map: &PiecewiseVerticalMap, x: f64, y: f64, step: f64) -> Complex64 {
    let f = |x: f64, y: f64| Complex64::new(x, map.eval(y));
    let fx = (f(x + step, y) - f(x - step, y)) / (2.0 * step);
    let fy = (f(x, y + step) - f(x, y - step)) / (2.0 * step);
    let i = Complex64::i();
    (fx + i * fy) / (fx - i * fy)
}

pub(super) fn stretch(a: &StretchArgs, out: &mut Artifacts) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &h in &a.heights {
        let map = stretch_map(h, a.a, 1.0)?;
        let step = 1e-4 * h;
        let mut worst: f64 = 0.0;
        for k in 0..a.samples {
            let y = -h + (k as f64 + 0.5) * 2.0 * h / a.samples as f64;
            if map.breakpoints().iter().any(|b| (y - b).abs() <= 2.0 * step) {
                continue;
            }
            let expected = if y.abs() < a.a * h { -1.0 / 3.0 } else { 0.0 };
            let fd = fd_beltrami(&map, 0.7, y, step);
            let err = (fd - expected).norm();
            worst = worst.max(err);
            rows.push((h, y, fd.re, fd.im, expected));
        }
        checks.push(Check::at_most(format!("fd_coefficient_error_H{h}"), worst, a.tol));
    }
    write_rows(out, "stretch_fd.csv", &["H", "y", "mu_re", "mu_im", "expected"], &rows)?;

    let h0 = a.heights.first().copied().unwrap_or(1.0);
    let mut growth = Vec::new();
    for j in 1..=a.stages {
        let map = full_schedule(h0, j)?;
        let k = map.max_dilatation();
        checks.push(Check::close(format!("max_dilatation_j{j}"), k, 2f64.powi(j as i32), 0.0));
        growth.push((j, k, map.num_pieces()));
    }
    write_rows(out, "stretch_dilatation.csv", &["j", "max_dilatation", "pieces"], &growth)?;
    Ok(checks)
}

pub(super) fn david(a: &DavidArgs, out: &mut Artifacts) -> Result<Vec<Check>> {
    let p = Sequence::geometric(1.0, a.p_ratio);
    let area = Sequence::geometric(1.0, a.area_ratio);
    let budget = select_budget(&p, &area, a.stages)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for s in &budget.stages {
        // ln(area e^{2K}) - ln p < 0
        let margin = s.ln_area + 2.0 * s.dilatation - s.ln_p;
        checks.push(Check::below(format!("stage_{}_log_margin", s.j), margin, 0.0));
        rows.push((s.j, s.m, s.ln_area, s.dilatation, s.ln_p));
    }
    write_rows(out, "david_budget.csv", &["j", "m", "ln_area", "dilatation", "ln_p"], &rows)?;
    let spec = assemble_mu(&budget, a.stages.saturating_sub(1))?;
    checks.push(Check::below("exp_integral_sum", region_exp_integral(&spec, 2.0)?, p.tail_sum(0)));
    let cert = certify(&spec, a.exponent, &a.eps)?;
    checks.push(Check::flag("chebyshev_certificate", cert.holds_on_grid()));
    for r in &cert.rows {
        checks.push(Check::at_most(format!("superlevel_eps_{}", r.eps), r.measured_area, r.bound));
    }
    cert.write_csv(&out.path("david_certificate.csv"))?;
    Ok(checks)
}

/// `(short, K, H)` triples of the length-distortion sweep.
fn wolpert_sweep() -> Vec<(f64, f64, f64)> {
    let mut v = Vec::new();
    for &short in &[1e-3, 1e-2, 0.1, 0.5, 1.0] {
        for &k in &[1.0, 1.5, 2.0, 10.0] {
            for &h in &[30.0, 100.0, 1000.0] {
                v.push((short, k, h));
            }
        }
    }
    v
}

pub(super) fn bounds(a: &BoundsArgs, out: &mut Artifacts) -> Result<Vec<Check>> {
    let ratio = a.ratio.unwrap_or(DEFAULT_RATIO);
    let r = ratio * ratio;
    let mut checks = Vec::new();
    let closed = base_series_closed(r);
    let partial = base_series_partial(r, a.last);
    checks.push(Check::close("base_series_partial", partial, closed, a.tol));
    let mut prev = 0.0;
    let mut monotone = true;
    for j in 0..=a.last {
        let s = base_series_partial(r, j);
        monotone &= s >= prev;
        prev = s;
    }
    checks.push(Check::flag("base_series_monotone", monotone));

    let report = series_sum(a.c, a.l0, ratio, a.last)?;
    checks.push(Check::at_most("series_partial_below_cap", report.partial_sum, report.cap));
    checks.push(Check::close("series_partial_reaches_cap", report.partial_sum, report.cap, a.tol * report.cap.max(1.0)));
    let ledger = ConvergenceLedger::build(a.c, a.l0, ratio, a.last)?;
    ledger.write_csv(&out.path("bounds_ledger.csv"))?;

    let mut rows = Vec::new();
    let mut bracketed = true;
    for (short, k, h) in wolpert_sweep() {
        let n = wolpert_contradiction(short, k, h)?;
        let target = short / k;
        let ok = geodesic_decay(n, h)? < target && (n == 1 || target <= geodesic_decay(n - 1, h)?);
        bracketed &= ok;
        rows.push((short, k, h, n, ok));
    }
    checks.push(Check::flag("wolpert_bracketing", bracketed));
    write_rows(out, "bounds_wolpert.csv", &["short", "K", "H", "n", "bracketed"], &rows)?;
    Ok(checks)
}

pub(super) fn solve_cmd(a: &SolveArgs, out: &mut Artifacts) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let zero = GridField::sample(a.grid, a.grid, -a.h, a.h, |_, _| Complex64::new(0.0, 0.0))?;
    let id = solve(&zero, &Normalization::Identity)?;
    checks.push(Check::at_most("zero_coefficient_identity", id.sup_distance_to_identity(), 1e-10));

    let map = stretch_map(a.h, 0.5, 1.0)?;
    let mu = GridField::from_spec(&beltrami_of(&map), a.grid, a.grid, -a.h, a.h)?;
    let sol = solve(&mu, &Normalization::Vertical(map.clone()))?;
    let err = sol.max_error(|z| Complex64::new(z.re, map.eval(z.im)));
    checks.push(Check::at_most("stretch_solution_error", err, a.tol));
    checks.push(Check::at_most("stretch_residual", sol.residual_norm(), a.tol));
    sol.write_csv(&out.path("solve_stretch.csv"))?;
    sol.write_json_header(&out.path("solve_stretch_header.json"))?;

    let grid = ExperimentGrid { nx: a.experiment_grid, ny: a.experiment_grid, subsamples: a.subsamples };
    let table = convergence_experiment(&a.stages, grid)?;
    checks.push(Check::flag("convergence_strictly_decreasing", table.strictly_decreasing()));
    checks.push(Check::below("convergence_final_ratio", table.final_ratio(), 0.25));
    table.write_csv(&out.path("solve_convergence.csv"))?;
    Ok(checks)
}

/// Sample points `1.5 <= |z| <= 3` of the finite-difference comparison.
fn fd_points(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let r = 1.5 + 1.5 * k as f64 / (count.max(2) - 1) as f64;
            Complex64::from_polar(r, 0.61 * k as f64)
        })
        .collect()
}

/// Mobius maps with poles well inside the unit disk, plus an affine map.
type Sample = (&'static str, fn(Complex64) -> Complex64);

fn mobius_samples() -> Vec<Sample> {
    vec![
        ("1/z", |z| 1.0 / z),
        ("(2z+i)/(z-0.2)", |z| (2.0 * z + Complex64::i()) / (z - 0.2)),
        ("(z-0.3i)/(0.5z+0.1)", |z| (z - Complex64::new(0.0, 0.3)) / (0.5 * z + 0.1)),
        ("3z+2", |z| 3.0 * z + 2.0),
    ]
}

pub(super) fn schwarzian(a: &SchwarzianArgs, out: &mut Artifacts) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let points = fd_points(a.points);
    let mut rows = Vec::new();
    for &lambda in &[0.1, 0.5, 0.9] {
        let mut worst: f64 = 0.0;
        for &z in &points {
            let fd = schwarzian_fd(|w| w + lambda / w, z, DEFAULT_FD_STEP)?;
            let exact = counterexample_schwarzian(lambda, z);
            worst = worst.max((fd - exact).norm());
            rows.push((lambda, z.re, z.im, fd.re, fd.im, exact.re, exact.im));
        }
        checks.push(Check::at_most(format!("fd_error_lambda_{lambda}"), worst, 1e-6));
    }
    write_rows(out, "schwarzian_fd.csv", &["lambda", "z_re", "z_im", "fd_re", "fd_im", "exact_re", "exact_im"], &rows)?;
    for (name, f) in mobius_samples() {
        let mut worst: f64 = 0.0;
        for &z in &points {
            worst = worst.max(schwarzian_fd(f, z, DEFAULT_FD_STEP)?.norm());
        }
        checks.push(Check::at_most(format!("mobius_{name}"), worst, 1e-10));
    }

    let scan = counterexample_scan(&a.lambda, &ExteriorGrid::square(a.grid))?;
    for r in &scan {
        checks.push(Check::at_least(format!("norm_lambda_{}", r.lambda), r.norm, 6.0 - 1e-3));
        checks.push(Check::close(format!("radial_max_lambda_{}", r.lambda), r.radial_max, r.radial_expected, 1e-9));
        checks.push(Check::flag(format!("radial_decreasing_lambda_{}", r.lambda), r.decreasing));
    }
    write_scan_csv(&scan, &out.path("schwarzian_scan.csv"))?;

    let z = Complex64::new(2.0, 0.0);
    let one = bers_derivative_kernel(|_| Complex64::new(1.0, 0.0), z, a.cells)?;
    let conj = bers_derivative_kernel(|w: Complex64| w.conj(), z, a.cells)?;
    let (e1, e2) = (-6.0 / z.powi(4), -12.0 / z.powi(5));
    checks.push(Check::at_most("kernel_constant", (one.value - e1).norm(), 1e-3));
    checks.push(Check::at_most("kernel_conjugate", (conj.value - e2).norm(), 1e-3));
    let kernel_rows = [
        ("1", one.value.re, one.value.im, e1.re, e1.im, one.error_estimate),
        ("conj", conj.value.re, conj.value.im, e2.re, e2.im, conj.error_estimate),
    ];
    write_rows(out, "schwarzian_kernel.csv", &["nu", "re", "im", "expected_re", "expected_im", "error_estimate"], &kernel_rows)?;
    Ok(checks)
}

pub(super) fn pudding(a: &PuddingArgs, seed: u64, out: &mut Artifacts) -> Result<Vec<Check>> {
    let p = AnnulusPair::new(a.r1, a.r2, a.big_r)?;
    let suite = pudding_suite(&p, a.lowest, a.highest, a.random, seed, a.tol)?;
    let mut checks = vec![
        Check::equal_count("inequality_holds", suite.iter().filter(|c| c.holds).count(), suite.len()),
        Check::at_most("max_ratio", suite.iter().map(|c| c.ratio).fold(0.0, f64::max), suite[0].constant),
    ];
    write_checks_csv(&suite, &out.path("pudding_checks.csv"))?;

    // |z^n| is smooth, so the refinement reaches round-off in a few levels
    let mono_tol = a.tol.min(1e-10);
    let mut worst: f64 = 0.0;
    for n in a.lowest..=a.highest {
        for (s, t) in [(1.0, p.r1), (p.r1, p.r2), (p.r2, p.big_r)] {
            let exact = laurent_l1_norm(n, s, t)?;
            let quad = l1_norm_quadrature(&LaurentSeries::monomial(n), s, t, mono_tol)?.value;
            worst = worst.max(((quad - exact) / exact).abs());
        }
    }
    checks.push(Check::at_most("monomial_quadrature_rel_error", worst, 1e-8));

    let collars: Vec<LaurentSeries> = (a.lowest..=a.highest).map(LaurentSeries::monomial).collect();
    let agg = aggregate_collars(&p, &collars, a.tol)?;
    checks.push(Check::at_most("collar_aggregate", agg.total, agg.cq * agg.outer));
    Ok(checks)
}
