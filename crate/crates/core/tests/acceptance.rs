//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use beltrami_lab::annulus::{laurent_l1_norm, l1_norm_quadrature, pudding_constant, pudding_suite, AnnulusPair, LaurentSeries};
use beltrami_lab::bounds::{base_series_partial, geodesic_decay, wolpert_contradiction};
use beltrami_lab::cylinder::{
    collar_threshold, collar_width, core_length, inj_radius_bounds, stretch_pair_ratio, CylinderSpec,
    INJ_RADIUS_HEIGHT_THRESHOLD,
};
use beltrami_lab::david::{assemble_mu, certify, region_exp_integral, select_budget, Sequence};
use beltrami_lab::schwarzian::{
    bers_derivative_kernel, counterexample_scan, h_lambda, schwarzian_fd, ExteriorGrid, DEFAULT_FD_STEP,
};
use beltrami_lab::solver::{convergence_experiment, solve, ExperimentGrid, GridField, Normalization};
use beltrami_lab::stretch::{beltrami_of, full_schedule, stretch_map};
use num_complex::Complex64;
use twofloat::TwoFloat;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn stretch_coefficient() -> Outcome {
    let mut worst: f64 = 0.0;
    for h in [1.0, 30.0] {
        let map = stretch_map(h, 0.5, 1.0)?;
        let step = 1e-4 * h;
        for k in 0..1000 {
            let y = -h + (k as f64 + 0.5) * 2.0 * h / 1000.0;
            if (y.abs() - 0.5 * h).abs() < 2.0 * step {
                continue;
            }
            let f = |x: f64, y: f64| c64(x, map.eval(y));
            let (x, i) = (1.3, Complex64::i());
            let fx = (f(x + step, y) - f(x - step, y)) / (2.0 * step);
            let fy = (f(x, y + step) - f(x, y - step)) / (2.0 * step);
            let mu = (fx + i * fy) / (fx - i * fy);
            let expected = if y.abs() < 0.5 * h { -1.0 / 3.0 } else { 0.0 };
            worst = worst.max((mu - expected).norm());
        }
    }
    Ok((worst <= 1e-10, format!("max error {worst:.2e} (tol 1e-10)")))
}

fn injectivity_radius() -> Outcome {
    let c = CylinderSpec::with_height(30.0)?;
    let mut worst: f64 = 0.0;
    for k in 0..1001 {
        worst = worst.max(inj_radius_bounds(&c, k as f64 / 1000.0)?.upper_bound);
    }
    let ratio = stretch_pair_ratio(&c)?;
    let next = CylinderSpec::with_height(45.0)?;
    let core = core_length(&next, 0.0)? / core_length(&c, 0.0)?;
    let ok = 30.0 > INJ_RADIUS_HEIGHT_THRESHOLD
        && worst <= 0.5
        && (ratio - 2.0 * SQRT_2 / 3.0).abs() <= 1e-12
        && core == 2.0 / 3.0;
    Ok((ok, format!("max bound {worst:.6}, pair ratio {ratio:.15}, core ratio {core:?}")))
}

fn exp_dd(x: TwoFloat) -> TwoFloat {
    let mut term = TwoFloat::from(1.0);
    let mut sum = term;
    for n in 1..80 {
        term = term * x / n as f64;
        sum += term;
    }
    sum
}

/// `log coth(l/4) = log((e^{l/2} + 1) / (e^{l/2} - 1))` in double-double.
fn naive_collar_width(l: f64) -> f64 {
    let e = exp_dd(TwoFloat::from(l) / 2.0);
    let q = (e + 1.0) / (e - 1.0);
    let mut y = TwoFloat::from(q.hi().ln());
    for _ in 0..2 {
        y = y + q * exp_dd(-y) - 1.0;
    }
    y.hi()
}

fn collar() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..=700 {
        let l = 1e-6 * 10f64.powf(7.0 * k as f64 / 700.0);
        let stable = collar_width(l)?;
        worst = worst.max(((stable - naive_collar_width(l)) / stable).abs());
    }
    let target = 2.0 * SQRT_2 * PI * PI;
    let l = collar_threshold(target, 1e-3)?;
    let below = collar_width(l * (1.0 - 1e-3))?;
    let above = collar_width(l * (1.0 + 1e-3))?;
    let ok = worst <= 1e-12 && below > target && above < target && (2.9e-12..3.1e-12).contains(&l);
    Ok((ok, format!("max rel diff {worst:.2e}, l* = {l:.4e}")))
}

fn convergence_series() -> Outcome {
    let r = 8.0 / 9.0;
    let mut prev = 0.0;
    let mut monotone = true;
    for j in 0..=500 {
        let s = base_series_partial(r, j);
        monotone &= s >= prev;
        prev = s;
    }
    let diff = (prev - 1224.0).abs();
    Ok((monotone && diff <= 1e-6, format!("partial sum {prev:.9}, |diff| {diff:.2e}, monotone {monotone}")))
}

fn dilatation_growth() -> Outcome {
    let mut got = Vec::new();
    for j in 1..=8 {
        got.push(full_schedule(30.0, j)?.max_dilatation());
    }
    let ok = got.iter().enumerate().all(|(i, &k)| k == (1u32 << (i + 1)) as f64);
    Ok((ok, format!("{got:?}")))
}

fn david_budget() -> Outcome {
    let p = Sequence::geometric(1.0, 0.25);
    let area = Sequence::geometric(1.0, 0.5);
    let budget = select_budget(&p, &area, 7)?;
    let mut ok = true;
    let mut sum = 0.0;
    for s in &budget.stages {
        let k = 2f64.powi(s.j as i32);
        let mass = 2f64.powi(-(s.m as i32)) * (2.0 * k).exp();
        ok &= mass < 4f64.powi(-(s.j as i32));
        sum += mass;
    }
    ok &= sum < 4.0 / 3.0;
    let spec = assemble_mu(&budget, 6)?;
    let lib_sum = region_exp_integral(&spec, 2.0)?;
    ok &= ((lib_sum - sum) / sum).abs() < 1e-12;
    let eps = [0.05, 0.1, 0.2, 0.5, 1.0];
    let cert = certify(&spec, 2.0, &eps)?;
    ok &= cert.alpha == 2.0 && cert.holds_on_grid();
    for (row, &e) in cert.rows.iter().zip(&eps) {
        let measured: f64 = budget
            .stages
            .iter()
            .filter(|s| (2f64.powi(s.j as i32) - 1.0) / (2f64.powi(s.j as i32) + 1.0) > 1.0 - e)
            .map(|s| 2f64.powi(-(s.m as i32)))
            .sum();
        ok &= measured <= cert.c * (-2.0 / e).exp() && (row.measured_area - measured).abs() <= 1e-15 * measured.max(1.0);
    }
    let m: Vec<usize> = budget.indices();
    Ok((ok, format!("M(j) = {m:?}, integral {sum:.6} < 4/3")))
}

fn grid_solver() -> Outcome {
    let zero = GridField::sample(128, 128, -30.0, 30.0, |_, _| c64(0.0, 0.0))?;
    let id_err = solve(&zero, &Normalization::Identity)?.sup_distance_to_identity();
    let map = stretch_map(30.0, 0.5, 1.0)?;
    let mu = GridField::from_spec(&beltrami_of(&map), 128, 128, -30.0, 30.0)?;
    let sol = solve(&mu, &Normalization::Vertical(map.clone()))?;
    // exact solution x + i psi(y), psi written out
    let psi = |y: f64| if y.abs() <= 15.0 { 2.0 * y } else { y + 15.0 * y.signum() };
    let err = sol.max_error(|z| c64(z.re, psi(z.im)));
    Ok((id_err <= 1e-10 && err <= 1e-8, format!("identity error {id_err:.2e}, stretch error {err:.2e}")))
}

fn convergence_to_identity() -> Outcome {
    let table = convergence_experiment(&[2, 4, 8, 16, 32], ExperimentGrid::default())?;
    let sup: Vec<f64> = table.rows.iter().map(|r| r.sup_distance).collect();
    let decreasing = sup.windows(2).all(|w| w[1] < w[0]);
    let ratio = sup[sup.len() - 1] / sup[0];
    let shown: Vec<String> = sup.iter().map(|s| format!("{s:.3e}")).collect();
    Ok((decreasing && ratio < 0.25, format!("sup |f_n - id| = [{}], final/first {ratio:.3}", shown.join(", "))))
}

fn schwarzian_closed_form() -> Outcome {
    let points: Vec<Complex64> = (0..100)
        .map(|k| Complex64::from_polar(1.5 + 1.5 * k as f64 / 99.0, 0.61 * k as f64))
        .collect();
    let mut worst: f64 = 0.0;
    for lambda in [0.1, 0.5, 0.9] {
        for &z in &points {
            let fd = schwarzian_fd(|w| w + lambda / w, z, DEFAULT_FD_STEP)?;
            let exact = -6.0 * lambda / (z * z - lambda).powi(2);
            worst = worst.max((fd - exact).norm());
        }
    }
    let mobius: [fn(Complex64) -> Complex64; 3] =
        [|z| 1.0 / z, |z| (2.0 * z + Complex64::i()) / (z - 0.2), |z| (z - c64(0.0, 0.3)) / (0.5 * z + 0.1)];
    let mut mob: f64 = 0.0;
    for f in mobius {
        for &z in &points {
            mob = mob.max(schwarzian_fd(f, z, DEFAULT_FD_STEP)?.norm());
        }
    }
    Ok((worst <= 1e-6 && mob <= 1e-10, format!("fd error {worst:.2e}, mobius {mob:.2e}")))
}

fn counterexample() -> Outcome {
    let lambdas = [0.0, 0.3, 0.6, 0.9, 0.99];
    let rows = counterexample_scan(&lambdas, &ExteriorGrid::square(400))?;
    let mut ok = true;
    let mut min_norm = f64::INFINITY;
    for (r, &lambda) in rows.iter().zip(&lambdas) {
        min_norm = min_norm.min(r.norm);
        ok &= r.norm >= 6.0 - 1e-3;
        ok &= (h_lambda(lambda, 1.0) - 1.0 / (1.0 - lambda)).abs() <= 1e-9;
        // the radial factor peaks at x = 1
        ok &= (1..=400).all(|k| h_lambda(lambda, 1.0 + k as f64 / 100.0) <= h_lambda(lambda, 1.0));
    }
    Ok((ok, format!("min norm {min_norm:.9}")))
}

fn derivative_kernel() -> Outcome {
    let z = c64(2.0, 0.0);
    let one = bers_derivative_kernel(|_| c64(1.0, 0.0), z, 2048)?;
    let conj = bers_derivative_kernel(|w: Complex64| w.conj(), z, 2048)?;
    let e1 = (one.value - (-6.0 / 16.0)).norm();
    let e2 = (conj.value - (-12.0 / 32.0)).norm();
    Ok((e1 <= 1e-3 && e2 <= 1e-3, format!("errors {e1:.2e} and {e2:.2e}")))
}

fn puddings() -> Outcome {
    let p = AnnulusPair::new(2.0, 3.0, 4.0)?;
    let constant = 16.0 * 6f64.ln();
    let mut ok = (pudding_constant(&p) - constant).abs() <= 1e-12;
    let suite = pudding_suite(&p, -5, 5, 50, 20_240_601, 1e-6)?;
    ok &= suite.len() == 61 && suite.iter().all(|c| c.holds && c.lhs <= constant * c.rhs);
    let exact = |n: i32, s: f64, t: f64| {
        if n == -2 {
            2.0 * PI * (t / s).ln()
        } else {
            2.0 * PI * (t.powi(n + 2) - s.powi(n + 2)) / (n + 2) as f64
        }
    };
    let mut worst: f64 = 0.0;
    for n in -5..=5 {
        for (s, t) in [(1.0, 2.0), (2.0, 3.0), (3.0, 4.0)] {
            let e = exact(n, s, t);
            let lib = laurent_l1_norm(n, s, t)?;
            let quad = l1_norm_quadrature(&LaurentSeries::monomial(n), s, t, 1e-12)?.value;
            worst = worst.max(((quad - e) / e).abs()).max(((lib - e) / e).abs());
        }
    }
    ok &= worst <= 1e-8;
    let max_ratio = suite.iter().map(|c| c.ratio).fold(0.0, f64::max);
    Ok((ok, format!("61/61 checks, max ratio {max_ratio:.4} vs C_a {constant:.4}, quadrature {worst:.1e}")))
}

fn wolpert() -> Outcome {
    let mut count = 0;
    let mut ok = true;
    for short in [1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0, 2.0] {
        for k in [1.0, 1.2, 2.0, 5.0, 10.0, 100.0] {
            for h in [30.0, 50.0, 100.0, 1000.0] {
                let n = wolpert_contradiction(short, k, h)?;
                let decay = |m: usize| (2.0f64 / 3.0).powi(m as i32 - 1) * PI * PI / h;
                let target = short / k;
                ok &= decay(n) < target && (n == 1 || target <= decay(n - 1));
                ok &= (geodesic_decay(n, h)? - decay(n)).abs() <= 1e-15 * decay(n);
                count += 1;
            }
        }
    }
    Ok((ok, format!("{count} triples bracketed")))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "stretch Beltrami coefficient", budget: Duration::from_secs(1), run: stretch_coefficient },
        Criterion { id: 2, title: "injectivity-radius bound", budget: Duration::from_secs(1), run: injectivity_radius },
        Criterion { id: 3, title: "collar width", budget: Duration::from_secs(1), run: collar },
        Criterion { id: 4, title: "convergence series", budget: Duration::from_secs(1), run: convergence_series },
        Criterion { id: 5, title: "dilatation growth", budget: Duration::from_secs(1), run: dilatation_growth },
        Criterion { id: 6, title: "David budget", budget: Duration::from_secs(1), run: david_budget },
        Criterion { id: 7, title: "grid solver", budget: Duration::from_secs(10), run: grid_solver },
        Criterion { id: 8, title: "convergence to identity", budget: Duration::from_secs(60), run: convergence_to_identity },
        Criterion { id: 9, title: "Schwarzian closed form", budget: Duration::from_secs(1), run: schwarzian_closed_form },
        Criterion { id: 10, title: "counterexample norm", budget: Duration::from_secs(10), run: counterexample },
        Criterion { id: 11, title: "derivative kernel", budget: Duration::from_secs(30), run: derivative_kernel },
        Criterion { id: 12, title: "Puddings Lemma", budget: Duration::from_secs(5), run: puddings },
        Criterion { id: 13, title: "length-distortion bracketing", budget: Duration::from_secs(1), run: wolpert },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {}: {} [{:.3}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
