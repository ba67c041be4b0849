//! End-to-end acceptance gate. Each criterion prints exactly one line,
//! `[PASS]` or `[FAIL]`, with the measured quantities; the process exits
//! nonzero if any criterion fails or overruns its time budget.

use dyadic_bellman::bellman::{
    bellman_b, bellman_b0, bellman_m, boundary_value, characteristics, PointGff, PointY,
};
use dyadic_bellman::dp::{
    brute_force_lower_bound, oracle_compare, value_iteration_checkpoints, GridSpec,
    ORACLE_GAP_TOL,
};
use dyadic_bellman::extremize::{build_extremizer, corner_extremizer, ExtremizerParams};
use dyadic_bellman::rng::substream;
use dyadic_bellman::transform::{
    pair_weak_type_ratio, random_signs, random_step_function, two_sided_tail_ratio,
    weak_type_ratio,
};
use dyadic_bellman::verify::{
    characteristic_equality_report, euler_ma_report, euler_ma_suite_report, invariance_report,
    main_inequality_report, section_concavity_report,
};
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

type Check = fn() -> Result<String, String>;

fn closed_form_spots() -> Result<String, String> {
    let spots: [(f64, f64, &str); 10] = [
        (bellman_b0(2.0, 0.0, 1.0).map_err(|e| e.to_string())?, 0.75, "b0(2,0,1)"),
        (bellman_b0(1.0, 0.0, 2.0).map_err(|e| e.to_string())?, 1.0, "b0(1,0,2)"),
        (bellman_b0(3.0, 1.0, 1.0).map_err(|e| e.to_string())?, 0.5, "b0(3,1,1)"),
        (
            bellman_b(PointGff::new(-2.0, 0.0, 1.0).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            0.75,
            "B(-2,0,1)",
        ),
        (
            bellman_b(PointGff::new(-1.0, 1.0, 1.0).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            1.0,
            "B(-1,1,1)",
        ),
        (
            bellman_m(PointY::new(1.0, 1.0, 1.0).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            0.75,
            "M(1,1,1)",
        ),
        (
            bellman_m(PointY::new(1.0, 0.5, 1.5).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            1.0,
            "M(1,0.5,1.5)",
        ),
        (
            bellman_m(PointY::new(1.0, 1.5, 1.5).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            5.0 / 6.0,
            "M(1,1.5,1.5)",
        ),
        (boundary_value(1.0, 0.5).map_err(|e| e.to_string())?, 0.5, "boundary(1,0.5)"),
        (boundary_value(1.0, -0.25).map_err(|e| e.to_string())?, 1.0, "boundary(1,-0.25)"),
    ];
    for (got, want, name) in spots {
        ensure!((got - want).abs() <= 1e-12, "{name} = {got}, expected {want}");
    }
    let y = PointY::new(1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let c = characteristics(y).map_err(|e| e.to_string())?;
    ensure!((c.t - 0.5).abs() <= 1e-12, "t = {}", c.t);
    ensure!((c.t1 - 0.5).abs() <= 1e-12, "t1 = {}", c.t1);
    ensure!((c.t2 + 0.25).abs() <= 1e-12, "t2 = {}", c.t2);
    let rebuilt = c.t1 * y.big_f + c.t2 * y.y2 + c.t;
    ensure!((rebuilt - 0.75).abs() <= 1e-12, "characteristic form gives {rebuilt}");

    let worst = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(101, i);
            let g: f64 = rng.random_range(-3.0..3.0);
            let f: f64 = rng.random_range(-3.0..3.0);
            let big_f = f.abs() + rng.random_range(0.0..3.0);
            let x = PointGff { g, f, big_f };
            let b = bellman_b(x).unwrap_or(f64::NAN);
            let m = bellman_m(x.to_y()).unwrap_or(f64::NAN);
            let d = (b - m).abs();
            if d.is_nan() { f64::INFINITY } else { d }
        })
        .reduce(|| 0.0, f64::max);
    ensure!(worst <= 1e-12, "worst coordinate-change disagreement {worst:.3e}");
    Ok(format!("10 spot values exact, worst |B - M| over 1e5 points = {worst:.2e}"))
}

fn splitting_inequality() -> Result<String, String> {
    let mi = main_inequality_report(1_000_000, 2026, 1e-9);
    ensure!(mi.passed, "splitting inequality violated: worst residual {:.3e}", mi.worst_residual);
    let ch = characteristic_equality_report(1_000_000, 2026, 1e-10);
    ensure!(
        ch.passed,
        "characteristic splits not tight: worst |residual| {:.3e}",
        ch.worst_residual
    );
    Ok(format!(
        "1e6 random splits: worst residual {:.2e} >= -1e-9; 1e6 characteristic splits: \
         worst |residual| {:.2e} <= 1e-10",
        mi.worst_residual, ch.worst_residual
    ))
}

fn concavity_and_invariances() -> Result<String, String> {
    let cc = section_concavity_report(100_000, 31, 1e-9);
    ensure!(cc.passed, "section concavity violated: worst residual {:.3e}", cc.worst_residual);
    let inv = invariance_report(100_000, 31, 1e-10);
    ensure!(inv.passed, "invariance violated: worst residual {:.3e}", inv.worst_residual);
    Ok(format!(
        "1e5 concavity samples: worst residual {:.2e}; 1e5 invariance samples: worst {:.2e}",
        cc.worst_residual, inv.worst_residual
    ))
}

fn differential_identities() -> Result<String, String> {
    let rep = euler_ma_suite_report(1_000, 42, 1e-5);
    ensure!(
        rep.passed,
        "finite-difference identities failed: worst scaled residual {:.3e}",
        rep.worst_residual
    );
    let spot = euler_ma_report(PointY::new(1.0, 1.0, 1.0).map_err(|e| e.to_string())?, 1e-4)
        .map_err(|e| e.to_string())?;
    ensure!(spot.euler_residual <= 1e-8, "Euler residual at (1,1,1): {}", spot.euler_residual);
    ensure!(
        (spot.hessian_diag.0 + 0.5).abs() <= 1e-6,
        "M_FF at (1,1,1) = {}, expected -1/2",
        spot.hessian_diag.0
    );
    Ok(format!(
        "1e3 interior points at h = 1e-4: Euler <= 1e-6(1+|M|), det <= 1e-5, \
         diagonal <= 1e-8 (worst scaled {:.2e}); M_FF(1,1,1) = {:.6}",
        rep.worst_residual, spot.hessian_diag.0
    ))
}

fn near_extremal_build() -> Result<String, String> {
    let params = ExtremizerParams::new(5, 22, 40).map_err(|e| e.to_string())?;
    let (pair, cert) = build_extremizer(1.0, &params).map_err(|e| e.to_string())?;
    ensure!(pair.residual() <= 1e-9, "admissibility residual {:.3e}", pair.residual());
    let a = cert.achieved_measure;
    ensure!((0.72..=0.75 + 1e-9).contains(&a), "achieved measure {a} outside [0.72, 0.75]");
    let formula = cert.predicted_lower_bound + cert.truncation_slack;
    ensure!(
        (formula - 0.7503).abs() <= 5e-4,
        "recurrence value {formula} drifted from 0.7503"
    );
    ensure!(
        a + cert.truncation_slack >= formula - 1e-12,
        "slack {} does not account for the gap between {a} and {formula}",
        cert.truncation_slack
    );
    ensure!(a >= cert.predicted_lower_bound, "achieved {a} below certified bound");
    Ok(format!(
        "achieved {:.9} in [0.72, 0.75], residual {:.2e}, recurrence {:.6} = \
         predicted {:.6} + slack {:.6}",
        a,
        pair.residual(),
        formula,
        cert.predicted_lower_bound,
        cert.truncation_slack
    ))
}

fn large_target_build() -> Result<String, String> {
    let params = ExtremizerParams::new(5, 60, 40).map_err(|e| e.to_string())?;
    let (pair, cert) = build_extremizer(2.5, &params).map_err(|e| e.to_string())?;
    ensure!(pair.residual() <= 1e-9, "admissibility residual {:.3e}", pair.residual());
    ensure!(
        cert.achieved_measure >= 0.95,
        "achieved measure {} below 0.95",
        cert.achieved_measure
    );
    Ok(format!(
        "achieved {:.9} >= 0.95 at depth {}, residual {:.2e}",
        cert.achieved_measure,
        pair.depth(),
        pair.residual()
    ))
}

fn weak_type_bounds() -> Result<String, String> {
    let (one, two) = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(77, i);
            let phi = random_step_function(&mut rng, 10);
            if phi.abs_average() <= 0.0 {
                return (0.0, 0.0);
            }
            let eps = random_signs(&mut rng, &phi);
            let lambda: f64 = rng.random_range(0.05..4.0);
            let one = weak_type_ratio(&phi, &eps, lambda).unwrap_or(f64::INFINITY);
            let two = two_sided_tail_ratio(&phi, &eps, lambda).unwrap_or(f64::INFINITY);
            (one, two)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    ensure!(one <= 2.0 + 1e-9, "one-sided ratio {one} exceeds 2");
    ensure!(two <= 4.0 + 1e-9, "two-sided ratio {two} exceeds 4");
    let params = ExtremizerParams::new(8, 8, 30).map_err(|e| e.to_string())?;
    let (pair, _) = build_extremizer(0.0625, &params).map_err(|e| e.to_string())?;
    let family = pair_weak_type_ratio(&pair, 2.0).map_err(|e| e.to_string())?;
    ensure!(family >= 1.9, "near-extremal family ratio {family} below 1.9");
    Ok(format!(
        "1e4 trials: worst one-sided {one:.6} <= 2, worst two-sided {two:.6} <= 4; \
         family ratio {family:.6} >= 1.9"
    ))
}

fn grid_oracle() -> Result<String, String> {
    let spec = GridSpec::default();
    let grids =
        value_iteration_checkpoints(&spec, &[100, 200]).map_err(|e| e.to_string())?;
    let (coarse, fine) = (&grids[0], &grids[1]);
    let rep = oracle_compare(fine, ORACLE_GAP_TOL).map_err(|e| e.to_string())?;
    ensure!(
        rep.worst_residual <= ORACLE_GAP_TOL,
        "iterated value exceeds closed form by {:.3e}",
        rep.worst_residual
    );
    let probe = fine.interp(1.0, 1.0).ok_or("probe point not readable")?;
    ensure!((probe - 0.75).abs() <= 0.05, "probe value {probe} drifted from 0.75");
    ensure!(rep.passed, "oracle comparison failed");
    let mut mono = f64::NEG_INFINITY;
    for i in 0..=spec.nu {
        for j in 0..=spec.ng {
            if spec.in_domain(i, j) {
                mono = mono.max(coarse.value(i, j) - fine.value(i, j));
            }
        }
    }
    ensure!(mono <= 1e-12, "value iteration not monotone in depth: regression {mono:.3e}");
    Ok(format!(
        "401x401 nodes, 200 sweeps: max(value - closed form) = {:.2e} <= 0.01, \
         probe {probe:.6}, depth-monotone (max regression {mono:.2e})",
        rep.worst_residual
    ))
}

fn exhaustive_search() -> Result<String, String> {
    let x = PointGff::new(-2.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let d1 = brute_force_lower_bound(&x, 1, &grid).map_err(|e| e.to_string())?;
    let d2 = brute_force_lower_bound(&x, 2, &grid).map_err(|e| e.to_string())?;
    let d3 = brute_force_lower_bound(&x, 3, &grid).map_err(|e| e.to_string())?;
    ensure!(d2 >= 0.25, "depth-2 bound {d2} below 1/4");
    ensure!(d3 <= 0.75 + 1e-9, "depth-3 bound {d3} exceeds the closed form 3/4");
    ensure!(d1 <= d2 && d2 <= d3, "bounds not monotone in depth: {d1}, {d2}, {d3}");
    Ok(format!("depth 1/2/3 bounds {d1}/{d2}/{d3}: monotone, within [1/4, 3/4]"))
}

fn corner_recursion() -> Result<String, String> {
    for n in 1..=20u32 {
        let p = corner_extremizer(1.0, n).map_err(|e| e.to_string())?;
        let want = 1.0 - 0.5f64.powi(n as i32);
        ensure!(
            p.payoff_measure() == want,
            "payoff at {n} levels is {}, expected exactly {want}",
            p.payoff_measure()
        );
        ensure!(p.residual() == 0.0, "residual at {n} levels is {}", p.residual());
    }
    Ok("payoff exactly 1 - 2^-n and residual exactly 0 for n = 1..20".into())
}

fn determinism() -> Result<String, String> {
    let r1 = serde_json::to_string(&main_inequality_report(10_000, 7, 1e-9))
        .map_err(|e| e.to_string())?;
    let r2 = serde_json::to_string(&main_inequality_report(10_000, 7, 1e-9))
        .map_err(|e| e.to_string())?;
    ensure!(r1 == r2, "verification reports differ across runs");

    let params = ExtremizerParams::new(3, 5, 10).map_err(|e| e.to_string())?;
    let (p1, c1) = build_extremizer(1.0, &params).map_err(|e| e.to_string())?;
    let (p2, c2) = build_extremizer(1.0, &params).map_err(|e| e.to_string())?;
    ensure!(
        p1.payoff_measure().to_bits() == p2.payoff_measure().to_bits()
            && p1.residual().to_bits() == p2.residual().to_bits()
            && p1.depth() == p2.depth()
            && p1.leaf_count() == p2.leaf_count(),
        "extremizer pairs differ across runs"
    );
    let s1 = serde_json::to_string(&c1).map_err(|e| e.to_string())?;
    let s2 = serde_json::to_string(&c2).map_err(|e| e.to_string())?;
    ensure!(s1 == s2, "certificates differ across runs");

    let x = PointGff::new(-2.0, 0.0, 1.5).map_err(|e| e.to_string())?;
    let q1 = dyadic_bellman::extremize::canonical_pair(&x).map_err(|e| e.to_string())?;
    let q2 = dyadic_bellman::extremize::canonical_pair(&x).map_err(|e| e.to_string())?;
    let j1 = serde_json::to_string(&q1.to_json().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let j2 = serde_json::to_string(&q2.to_json().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure!(j1 == j2, "pair serialization differs across runs");

    let spec = GridSpec { nu: 100, ng: 100, ..GridSpec::default() };
    let g1 = value_iteration_checkpoints(&spec, &[10]).map_err(|e| e.to_string())?;
    let g2 = value_iteration_checkpoints(&spec, &[10]).map_err(|e| e.to_string())?;
    for i in 0..=spec.nu {
        for j in 0..=spec.ng {
            ensure!(
                g1[0].value(i, j) == g2[0].value(i, j),
                "grid values differ across runs at node ({i}, {j})"
            );
        }
    }
    Ok("reports, pairs, certificates, and grids byte-identical across runs".into())
}

fn main() {
    let checks: [(u32, &str, f64, Check); 11] = [
        (1, "closed-form spot values and coordinate consistency", 1.0, closed_form_spots),
        (2, "splitting inequality and characteristic tightness", 30.0, splitting_inequality),
        (3, "section concavity and invariances", 10.0, concavity_and_invariances),
        (4, "Euler identity and degenerate Hessian by finite differences", 5.0, differential_identities),
        (5, "near-extremal build at F = 1 with certificate accounting", 60.0, near_extremal_build),
        (6, "near-extremal build at F = 2.5", 120.0, large_target_build),
        (7, "weak-type ratio bounds and near-extremal family", 60.0, weak_type_bounds),
        (8, "grid value iteration against the closed form", 600.0, grid_oracle),
        (9, "exhaustive tree search bounds", 60.0, exhaustive_search),
        (10, "corner recursion payoff exactness", 1.0, corner_recursion),
        (11, "deterministic outputs", 60.0, determinism),
    ];
    let mut failures = 0u32;
    for (n, what, budget, check) in checks {
        let t0 = Instant::now();
        let outcome = check();
        let dt = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) if dt <= budget => {
                println!("[PASS] criterion {n}: {what} ({detail}; {dt:.2}s)");
            }
            Ok(detail) => {
                failures += 1;
                println!(
                    "[FAIL] criterion {n}: {what} (took {dt:.2}s, budget {budget}s; {detail})"
                );
            }
            Err(msg) => {
                failures += 1;
                println!("[FAIL] criterion {n}: {what} ({msg}; {dt:.2}s)");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
