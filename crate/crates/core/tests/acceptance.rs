//! Acceptance criteria AC1-AC12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lek_core::frequencies::{hp_ratio_ceiling, lambda_pq, lambda_pq_with_solution};
use lek_core::onedim::{
    consistency_integral, localization_constant, localization_constant_q1, pi_pq, wi_center, wi_mass,
};
use lek_core::pde::{dirichlet_integral, fixed_point_solve, lq_integral, solve_lane_emden, Initial, SolveOptions};
use lek_core::verify::convexity::{
    check_equality_cases, check_hidden_convexity, empirical_infimum, quantified_gap_r_ge2,
};
use lek_core::verify::{check_linfty, check_localization, check_pointwise_bounds, check_slab_asymptotics};
use lek_core::{ConvexDomain, Exec, GridFunction, PQParams};

const PAIRS: [(f64, f64); 5] = [(2.0, 1.0), (2.0, 1.5), (3.0, 1.0), (3.0, 2.0), (4.0, 2.5)];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Debug>(e: E) -> String {
    format!("error: {e:?}")
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut cmp = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol || got.is_nan() {
            bad.push(format!("{name}={got} want {want}"));
        }
    };
    cmp("pi(2,2)", pi_pq(2.0, 2.0).map_err(fail)?, PI, 1e-9);
    cmp("pi(2,1)", pi_pq(2.0, 1.0).map_err(fail)?, 2.0 * 3f64.sqrt(), 1e-9);
    cmp("wI(0)", wi_center(2.0, 1.0).map_err(fail)?, 0.5, 1e-9);
    cmp("wI mass", wi_mass(2.0, 1.0).map_err(fail)?, 1.0 / 3.0, 1e-9);
    let target = 1.0 - 0.5f64.sqrt();
    cmp("C(2,2,1) integral", localization_constant(2, 2.0, 1.0).map_err(fail)?, target, 1e-6);
    cmp("C(2,2,1) closed", localization_constant_q1(2, 2.0).map_err(fail)?, target, 4.0 * f64::EPSILON);
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        bad.push(format!("runtime {secs:.2}s"));
    }
    ensure(bad.is_empty(), if bad.is_empty() { format!("{secs:.3}s") } else { bad.join("; ") })
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (p, q) in [(2.0, 1.5), (3.0, 1.0), (3.0, 2.0), (4.0, 2.5)] {
        worst = worst.max((consistency_integral(p, q).map_err(fail)? - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-8 && secs < 5.0, format!("max |E - 1| = {worst:.2e}, {secs:.2}s"))
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let d = ConvexDomain::interval(-1.0, 1.0).map_err(fail)?;
    let (w, rep) = solve_lane_emden(&d, &PQParams::unit(2.0, 1.0).map_err(fail)?, 2f64.powi(-8), &SolveOptions::default())
        .map_err(fail)?;
    let max = w.max_interior().1;
    let grid = w.grid();
    let err = grid
        .interior()
        .iter()
        .map(|&k| {
            let x = grid.coords(k)[0];
            (w.values()[k] - 0.5 * (1.0 - x * x)).abs()
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        rep.converged && (max - 0.5).abs() <= 5e-3 && err <= 5e-3 && secs < 10.0,
        format!("max {max:.6}, sup error {err:.2e}, {secs:.2}s"),
    )
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let n = 256;
    let oracle = common::poisson_sor(-1.0, 1.0, n, 1.0);
    let oracle_max = oracle.iter().cloned().fold(0.0, f64::max);
    let sq = ConvexDomain::rect([-1.0, -1.0], [1.0, 1.0]).map_err(fail)?;
    let (w, rep) = solve_lane_emden(&sq, &PQParams::unit(2.0, 1.0).map_err(fail)?, 2f64.powi(-7), &SolveOptions::default())
        .map_err(fail)?;
    let grid = w.grid();
    let half = (n / 2) as i64;
    let diff = grid
        .interior()
        .iter()
        .map(|&k| {
            let l = grid.lattice(k);
            let idx = (l[0] + half) as usize + (n + 1) * (l[1] + half) as usize;
            (w.values()[k] - oracle[idx]).abs()
        })
        .fold(0.0, f64::max);
    let max = w.max_interior().1;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        rep.converged && (max - 0.2947).abs() <= 5e-3 && (oracle_max - 0.2947).abs() <= 5e-3 && diff <= 5e-3 && secs < 60.0,
        format!("max {max:.6}, oracle max {oracle_max:.6}, sup diff {diff:.2e}, {secs:.2}s"),
    )
}

fn ac5() -> Outcome {
    let sq = ConvexDomain::rect([-1.0, -1.0], [1.0, 1.0]).map_err(fail)?;
    let params = PQParams::unit(3.0, 2.0).map_err(fail)?;
    let h = 1.0 / 64.0;
    let opts = SolveOptions::default().with_tol(1e-10);
    let (a, ra) = solve_lane_emden(&sq, &params, h, &opts).map_err(fail)?;
    let (b, rb) = solve_lane_emden(&sq, &params, h, &opts.clone().with_initial(Initial::Constant(0.01))).map_err(fail)?;
    let (c, rc) = solve_lane_emden(&sq, &params, h, &opts.clone().with_initial(Initial::Torsion)).map_err(fail)?;
    let unique = a.sup_distance(&b).map_err(fail)?.max(a.sup_distance(&c).map_err(fail)?);
    let (f, rf) = fixed_point_solve(&sq, &params, h, &SolveOptions::default().with_tol(1e-8)).map_err(fail)?;
    let cross = a.sup_distance(&f).map_err(fail)?;
    ensure(
        ra.converged && rb.converged && rc.converged && rf.converged && unique <= 1e-5 && cross <= 1e-3,
        format!("initializations {unique:.2e}, fixed point vs minimizer {cross:.2e}"),
    )
}

fn ac6() -> Outcome {
    let interval = ConvexDomain::interval(-1.0, 1.0).map_err(fail)?;
    let li = lambda_pq(&interval, 2.0, 1.0, 2f64.powi(-8), &SolveOptions::default()).map_err(fail)?.lambda;
    let disk = ConvexDomain::disk([0.0, 0.0], 1.0).map_err(fail)?;
    let (fd, w) = lambda_pq_with_solution(&disk, 2.0, 1.0, 1.0 / 256.0, &SolveOptions::default()).map_err(fail)?;
    let ei = (li / 1.5 - 1.0).abs();
    let ed = (fd.lambda / (8.0 / PI) - 1.0).abs();
    let mut identity = (dirichlet_integral(&w, 2.0) - lq_integral(&w, 1.0)).abs() / lq_integral(&w, 1.0);
    let sq = ConvexDomain::rect([-1.0, -1.0], [1.0, 1.0]).map_err(fail)?;
    let (_, w32) = lambda_pq_with_solution(&sq, 3.0, 2.0, 1.0 / 64.0, &SolveOptions::default()).map_err(fail)?;
    identity = identity.max((dirichlet_integral(&w32, 3.0) - lq_integral(&w32, 2.0)).abs() / lq_integral(&w32, 2.0));
    ensure(
        ei <= 0.01 && ed <= 0.01 && identity <= 1e-6,
        format!("interval {li:.5} ({ei:.2e}), disk {:.5} ({ed:.2e}), identity {identity:.2e}", fd.lambda),
    )
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (i, d) in common::corpus().iter().enumerate() {
        let h = d.metrics().map_err(fail)?.inradius / 32.0;
        for (p, q) in PAIRS {
            let f = lambda_pq(d, p, q, h, &opts).map_err(fail)?;
            let margin = f.hp_ratio - (1.0 - f.eps_h);
            worst = worst.min(f.hp_ratio);
            if margin < 0.0 {
                failures.push(format!("#{i} ({p},{q}) ratio {:.4}", f.hp_ratio));
            }
        }
    }
    let mut slab_ok = true;
    let mut slab_detail = Vec::new();
    for (p, q) in PAIRS {
        let ratios = [4.0, 8.0, 16.0]
            .iter()
            .map(|&l| {
                let d = ConvexDomain::slab(l)?;
                Ok((lambda_pq(&d, p, q, 1.0 / 32.0, &opts)?.hp_ratio, hp_ratio_ceiling(&d, p)?))
            })
            .collect::<lek_core::Result<Vec<_>>>()
            .map_err(fail)?;
        let decreasing = ratios.windows(2).all(|w| w[1].0 < w[0].0);
        let bracketed = ratios.iter().all(|(r, c)| *r >= 1.0 && r <= c);
        slab_ok &= decreasing && bracketed;
        slab_detail.push(format!("({p},{q}) {:.4}>{:.4}>{:.4}", ratios[0].0, ratios[1].0, ratios[2].0));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        failures.is_empty() && slab_ok && secs < 600.0,
        format!("min corpus ratio {worst:.4} {failures:?}; slabs {}; {secs:.1}s", slab_detail.join(" ")),
    )
}

fn ac8() -> Outcome {
    let opts = SolveOptions::default();
    let sq = ConvexDomain::rect([-1.0, -1.0], [1.0, 1.0]).map_err(fail)?;
    let lin = check_linfty(&sq, 2.0, 1.0, 1.0, 1.0 / 64.0, &opts).map_err(fail)?;
    let value = lin.metrics["value"];
    let square_ok = lin.pass && value >= 0.25 - lin.tol && value <= 0.5 + lin.tol;
    let h = 1.0 / 64.0;
    let disk = ConvexDomain::disk([0.0, 0.0], 1.0).map_err(fail)?;
    let dr = check_pointwise_bounds(&disk, 2.0, 1.0, 1.0, h, &opts).map_err(fail)?;
    let sat = dr.metrics["lower_saturation"];
    let rect = ConvexDomain::rect([-8.0, -1.0], [8.0, 1.0]).map_err(fail)?;
    let rr = check_pointwise_bounds(&rect, 2.0, 1.0, 1.0, 1.0 / 32.0, &opts).map_err(fail)?;
    let gap = rr.metrics["upper_relative_gap_at_max"];
    ensure(
        square_ok && dr.pass && sat <= 2.0 * h && rr.pass && gap <= 0.05,
        format!("square w(0) {value:.5}; disk saturation {sat:.2e} (2h = {:.2e}); rectangle gap {gap:.2e}", 2.0 * h),
    )
}

fn ac9() -> Outcome {
    let opts = SolveOptions::default();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (i, d) in common::corpus().iter().enumerate() {
        let h = d.metrics().map_err(fail)?.inradius / 32.0;
        for (p, q) in PAIRS {
            let rep = check_localization(d, p, q, h, &opts).map_err(fail)?;
            worst = worst.min(rep.worst + rep.tol);
            if !rep.pass {
                failures.push(format!("#{i} ({p},{q}) {:.3e}", rep.worst));
            }
        }
    }
    ensure(failures.is_empty(), format!("min (d - C r + h) {worst:.3e} {failures:?}"))
}

fn ac10() -> Outcome {
    let rep = check_slab_asymptotics(2.0, 1.0, &[2.0, 4.0, 8.0, 16.0], 1.0 / 32.0, &SolveOptions::default()).map_err(fail)?;
    let last = rep.metrics["final_central_error"];
    ensure(
        rep.pass && last < 0.02,
        format!(
            "monotonicity margin {:.2e}, error decrease margin {:.2e}, central error at L=16 {last:.2e}",
            rep.metrics["monotonicity_margin"], rep.metrics["error_decrease_margin"]
        ),
    )
}

fn random_pair(rng: &mut ChaCha8Rng, grid: &Arc<lek_core::Grid>) -> (GridFunction, GridFunction) {
    let mut draw = || {
        let mut f = GridFunction::zeros(grid.clone());
        for &k in grid.interior() {
            f.values_mut()[k] = rng.gen_range(0.0..1.0);
        }
        f
    };
    (draw(), draw())
}

fn ac11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let line = Arc::new(ConvexDomain::interval(0.0, 1.0).and_then(|d| d.rasterize(1.0 / 24.0)).map_err(fail)?);
    let disk = Arc::new(ConvexDomain::disk([0.0, 0.0], 1.0).and_then(|d| d.rasterize(0.25)).map_err(fail)?);
    let mut failures = 0usize;
    let mut checked = 0usize;
    for r in [1.0f64, 1.3, 2.0, 2.7] {
        for _ in 0..1000 {
            let (v, w) = random_pair(&mut rng, &line);
            let p = rng.gen_range(r.max(1.05)..5.0);
            let t = rng.gen_range(0.01..0.99);
            checked += 1;
            if !check_hidden_convexity(&v, &w, t, r, p).map_err(fail)?.pass {
                failures += 1;
            }
        }
    }
    for r in [1.0f64, 1.5, 2.0] {
        for _ in 0..1000 {
            let (v, w) = random_pair(&mut rng, &disk);
            let p = rng.gen_range(r.max(1.05)..5.0);
            let t = rng.gen_range(0.01..0.99);
            checked += 1;
            if !check_hidden_convexity(&v, &w, t, r, p).map_err(fail)?.pass {
                failures += 1;
            }
        }
    }
    let mut equality = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        let (_, w) = random_pair(&mut rng, &disk);
        let rep = check_equality_cases(&w.map(|x| 2.5 * x), &w, 0.4, p, p).map_err(fail)?;
        if !rep.pass {
            failures += 1;
        }
        equality = equality.max(-rep.worst);
    }
    ensure(
        failures == 0,
        format!("{checked} random pairs, {failures} failures, max relative gap at equality {equality:.2e}"),
    )
}

fn ac12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut dev: f64 = 0.0;
    for i in 0..1000 {
        let dim = 1 + i % 4;
        let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = rng.gen_range(0.01..0.99);
        dev = dev.max((quantified_gap_r_ge2(&z, &w, t, 2.0).map_err(fail)? - 1.0).abs());
    }
    let mut infima = Vec::new();
    for r in [1.5, 3.0, 4.0] {
        infima.push((r, empirical_infimum(r, 2, 100_000, 2024, Exec::default()).map_err(fail)?));
    }
    ensure(
        dev <= 1e-12 && infima.iter().all(|(_, m)| *m > 0.0),
        format!("r=2 deviation {dev:.2e}; infima {infima:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("AC1 constants", ac1),
        ("AC2 consistency identity", ac2),
        ("AC3 interval solver", ac3),
        ("AC4 square torsion", ac4),
        ("AC5 uniqueness and cross-solver", ac5),
        ("AC6 frequencies", ac6),
        ("AC7 Hersch-Protter corpus and slabs", ac7),
        ("AC8 pointwise and sup bounds", ac8),
        ("AC9 localization", ac9),
        ("AC10 slab asymptotics", ac10),
        ("AC11 hidden convexity", ac11),
        ("AC12 vector inequalities", ac12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.split(' ').next() == Some(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
