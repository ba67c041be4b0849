//! Numerical verification of the closed forms: splitting inequalities,
//! section concavity, invariances, differential identities via finite
//! differences, and supermartingale behavior of the value along the cells
//! of an admissible pair.
//!
//! Samplers are deterministic: sample `i` of seed `s` comes from an
//! independent generator stream, so reports are reproducible regardless of
//! how the work is parallelized.

use crate::bellman::{bellman_b, bellman_m, characteristics, PointGff, PointY};
use crate::dyadic::AdmissiblePair;
use crate::error::{Error, Result};
use crate::extremize::{build_extremizer, corner_extremizer, ExtremizerParams};
use crate::rng::substream;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::collections::HashMap;

/// Default violation tolerance for the splitting inequality.
pub const MAIN_INEQUALITY_TOL: f64 = 1e-9;
/// Residual ceiling for splits taken along characteristic lines.
pub const CHARACTERISTIC_TOL: f64 = 1e-10;
/// Default violation tolerance for midpoint concavity on sections.
pub const CONCAVITY_TOL: f64 = 1e-9;
/// Default tolerance for scaling and sign invariances.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Default primary tolerance for the finite-difference suite; the Euler
/// identity is held to a tenth of it (relative to `1 + |M|`) and the
/// Hessian diagonal to a thousandth.
pub const EULER_MA_TOL: f64 = 1e-5;
/// Default finite-difference base step.
pub const EULER_MA_STEP: f64 = 1e-4;
/// Default tolerance on supermartingale monotonicity along pair cells.
pub const PATH_TOL: f64 = 1e-10;
/// Cells tracked per level before a path check gives up.
pub const PATH_CELL_BUDGET: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Split triples
// ---------------------------------------------------------------------------

/// A midpoint split `x = (x_plus + x_minus) / 2` along an admissible
/// direction: the first two coordinates move by jumps of equal absolute
/// size (equivalently, one of the `y` coordinates stays fixed) while the
/// third moves freely, and both children stay in the domain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitTriple {
    pub x: PointGff,
    pub x_plus: PointGff,
    pub x_minus: PointGff,
}

impl SplitTriple {
    pub fn new(x_plus: PointGff, x_minus: PointGff) -> Result<Self> {
        x_plus.check()?;
        x_minus.check()?;
        let df = (x_plus.f - x_minus.f).abs();
        let dg = (x_plus.g - x_minus.g).abs();
        if (df - dg).abs() > 1e-9 * (1.0 + df.max(dg)) {
            return Err(Error::Domain(format!(
                "split direction is not admissible: |df| = {df} but |dg| = {dg}"
            )));
        }
        let x = PointGff::new(
            0.5 * (x_plus.g + x_minus.g),
            0.5 * (x_plus.f + x_minus.f),
            0.5 * (x_plus.big_f + x_minus.big_f),
        )?;
        Ok(SplitTriple { x, x_plus, x_minus })
    }
}

/// Concavity residual of one split: `B(x) - (B(x+) + B(x-)) / 2`.
/// Nonnegative (up to rounding) for every admissible split.
pub fn main_inequality_residual(t: &SplitTriple) -> Result<f64> {
    Ok(bellman_b(t.x)? - 0.5 * (bellman_b(t.x_plus)? + bellman_b(t.x_minus)?))
}

fn sample_triple(seed: u64, index: u64) -> SplitTriple {
    let mut rng = substream(seed, index);
    for _ in 0..10_000 {
        let g: f64 = rng.random_range(-3.0..3.0);
        let f: f64 = rng.random_range(-3.0..3.0);
        let big_f = f.abs() + rng.random_range(0.0..3.0);
        // Jump directions: fixed y2 moves (f, g) by (s, -s); fixed y1 by
        // (s, s). The third coordinate moves by an independent amount.
        let (df, dg) = if rng.random_bool(0.5) { (1.0, -1.0) } else { (1.0, 1.0) };
        let d_big = rng.random_range(-1.0..1.0);
        let mut s = rng.random_range(0.0..1.0);
        for _ in 0..60 {
            let plus = PointGff::new(g + s * dg, f + s * df, big_f + s * d_big);
            let minus = PointGff::new(g - s * dg, f - s * df, big_f - s * d_big);
            if let (Ok(p), Ok(m)) = (plus, minus) {
                if let Ok(t) = SplitTriple::new(p, m) {
                    return t;
                }
            }
            s *= 0.5;
        }
    }
    unreachable!("split sampler exhausted its attempt budget");
}

fn sample_characteristic(seed: u64, index: u64) -> SplitTriple {
    let mut rng = substream(seed, index);
    for _ in 0..10_000 {
        let y2 = rng.random_range(0.05..1.5);
        let y1 = y2 + rng.random_range(0.0..1.5);
        let big_f = rng.random_range((y1 - y2)..(y1 + y2));
        let t = match characteristics(match PointY::new(y1, y2, big_f) {
            Ok(y) => y,
            Err(_) => continue,
        }) {
            Ok(c) => c.t,
            Err(_) => continue,
        };
        // Along (dy2, dF) = (1, 2t - 1) with y1 fixed, the value is affine.
        let slope = 2.0 * t - 1.0;
        let mut s = rng.random_range(0.0..0.5) * y2;
        for _ in 0..60 {
            let mk = |sig: f64| {
                let y2s = y2 + sig * s;
                let fs = big_f + sig * slope * s;
                if y2s <= 0.0 {
                    return None;
                }
                PointY::new(y1, y2s, fs).ok().map(PointY::to_gff)
            };
            if let (Some(p), Some(m)) = (mk(1.0), mk(-1.0)) {
                if let Ok(t) = SplitTriple::new(p, m) {
                    return t;
                }
            }
            s *= 0.5;
        }
    }
    unreachable!("characteristic sampler exhausted its attempt budget");
}

/// Random admissible split triples in a box around the origin
/// (`|g|, |f| <= 3`, `F <= |f| + 3`), deterministic per `(seed, index)`.
pub fn sample_split_triples(n: u64, seed: u64) -> Vec<SplitTriple> {
    (0..n).map(|i| sample_triple(seed, i)).collect()
}

/// Split triples taken along characteristic lines of the quadratic branch
/// (fixed `y1`, direction `(dy2, dF) = (1, 2t - 1)`), where the splitting
/// inequality holds with equality.
pub fn sample_characteristic_triples(n: u64, seed: u64) -> Vec<SplitTriple> {
    (0..n).map(|i| sample_characteristic(seed, i)).collect()
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Outcome of one verification suite. `worst_residual` is the extreme
/// violation-side statistic over all samples and `witness` reproduces the
/// sample that attained it.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub samples: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub worst_residual: f64,
    pub witness: Option<serde_json::Value>,
    pub passed: bool,
}

/// Deterministic parallel scan: the extreme value together with the lowest
/// index attaining it. `prefer` returns true when `a` beats `b`.
fn par_extreme<F>(samples: u64, eval: F, prefer: fn(f64, f64) -> bool) -> (f64, u64)
where
    F: Fn(u64) -> f64 + Sync,
{
    // The identity is the least preferred value, so any real sample beats
    // it; NaNs are forced to the most preferred (violating) side so a
    // failed evaluation can never be masked.
    let min_scan = prefer(-1.0, 1.0);
    let neutral = if min_scan {
        (f64::INFINITY, u64::MAX)
    } else {
        (f64::NEG_INFINITY, u64::MAX)
    };
    let nan_value = if min_scan { f64::NEG_INFINITY } else { f64::INFINITY };
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let v = eval(i);
            let v = if v.is_nan() { nan_value } else { v };
            (v, i)
        })
        .reduce(
            || neutral,
            |a, b| {
                if prefer(b.0, a.0) || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

fn triple_witness(t: &SplitTriple, index: u64, residual: f64) -> serde_json::Value {
    json!({
        "index": index,
        "x": t.x,
        "x_plus": t.x_plus,
        "x_minus": t.x_minus,
        "residual": residual,
    })
}

/// Splitting inequality on random triples: residuals must stay above
/// `-tol`. `worst_residual` is the smallest residual seen.
pub fn main_inequality_report(samples: u64, seed: u64, tol: f64) -> VerificationReport {
    let eval = |i: u64| {
        let t = sample_triple(seed, i);
        main_inequality_residual(&t).unwrap_or(f64::NAN)
    };
    let (worst, index) = par_extreme(samples, eval, |a, b| a < b);
    let witness = (index != u64::MAX).then(|| {
        let t = sample_triple(seed, index);
        triple_witness(&t, index, worst)
    });
    VerificationReport {
        suite: "main-inequality".into(),
        samples,
        seed,
        tolerance: tol,
        worst_residual: worst,
        witness,
        passed: worst >= -tol,
    }
}

/// Splitting residuals along characteristic lines must vanish: the report
/// tracks the largest `|residual|`.
pub fn characteristic_equality_report(samples: u64, seed: u64, tol: f64) -> VerificationReport {
    let eval = |i: u64| {
        let t = sample_characteristic(seed, i);
        main_inequality_residual(&t).map(f64::abs).unwrap_or(f64::NAN)
    };
    let (worst, index) = par_extreme(samples, eval, |a, b| a > b);
    let witness = (index != u64::MAX).then(|| {
        let t = sample_characteristic(seed, index);
        triple_witness(&t, index, worst)
    });
    VerificationReport {
        suite: "characteristic-equality".into(),
        samples,
        seed,
        tolerance: tol,
        worst_residual: worst,
        witness,
        passed: worst <= tol,
    }
}

/// One concavity sample: two points in a common section (fixed `y1` or
/// fixed `y2`), returning `M(mid) - (M(a) + M(b)) / 2`.
fn concavity_residual(seed: u64, index: u64) -> (f64, serde_json::Value) {
    let mut rng = substream(seed, index);
    loop {
        let fixed = rng.random_range(0.1..2.5);
        let fix_first = rng.random_bool(0.5);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let free: f64 = rng.random_range(-1.0..2.5);
            let big_f = (fixed - free).abs() + rng.random_range(0.0..2.5);
            if fix_first {
                PointY::new(fixed, free, big_f)
            } else {
                PointY::new(free, fixed, big_f)
            }
        };
        let (Ok(a), Ok(b)) = (draw(&mut rng), draw(&mut rng)) else { continue };
        let mid = PointY {
            y1: 0.5 * (a.y1 + b.y1),
            y2: 0.5 * (a.y2 + b.y2),
            big_f: 0.5 * (a.big_f + b.big_f),
        };
        let (Ok(ma), Ok(mb), Ok(mm)) = (bellman_m(a), bellman_m(b), bellman_m(mid)) else {
            continue;
        };
        let res = mm - 0.5 * (ma + mb);
        let wit = json!({
            "index": index,
            "a": [a.y1, a.y2, a.big_f],
            "b": [b.y1, b.y2, b.big_f],
            "mid": [mid.y1, mid.y2, mid.big_f],
            "residual": res,
        });
        return (res, wit);
    }
}

/// Midpoint concavity of the value on coordinate sections; the domain of
/// each section is convex, so midpoints never leave it.
pub fn section_concavity_report(samples: u64, seed: u64, tol: f64) -> VerificationReport {
    let (worst, index) = par_extreme(samples, |i| concavity_residual(seed, i).0, |a, b| a < b);
    let witness = (index != u64::MAX).then(|| concavity_residual(seed, index).1);
    VerificationReport {
        suite: "concavity".into(),
        samples,
        seed,
        tolerance: tol,
        worst_residual: worst,
        witness,
        passed: worst >= -tol,
    }
}

/// One invariance sample: the worst of positive homogeneity, sign symmetry
/// of the middle coordinate, and symmetry of the value in `(y1, y2)`.
fn invariance_residual(seed: u64, index: u64) -> (f64, serde_json::Value) {
    let mut rng = substream(seed, index);
    loop {
        let g: f64 = rng.random_range(-3.0..3.0);
        let f: f64 = rng.random_range(-3.0..3.0);
        let big_f = f.abs() + rng.random_range(0.0..3.0);
        let s: f64 = rng.random_range(0.1..8.0);
        let Ok(x) = PointGff::new(g, f, big_f) else { continue };
        let Ok(xs) = PointGff::new(s * g, s * f, s * big_f) else { continue };
        let Ok(xn) = PointGff::new(g, -f, big_f) else { continue };
        let y1: f64 = rng.random_range(-1.5..2.5);
        let y2: f64 = rng.random_range(-1.5..2.5);
        let fy = (y1 - y2).abs() + rng.random_range(0.0..3.0);
        let (Ok(b), Ok(bs), Ok(bn)) = (bellman_b(x), bellman_b(xs), bellman_b(xn)) else {
            continue;
        };
        let (Ok(m12), Ok(m21)) = (
            PointY::new(y1, y2, fy).and_then(bellman_m),
            PointY::new(y2, y1, fy).and_then(bellman_m),
        ) else {
            continue;
        };
        let res = (bs - b).abs().max((bn - b).abs()).max((m21 - m12).abs());
        let wit = json!({
            "index": index,
            "x": x,
            "scale": s,
            "y": [y1, y2, fy],
            "residual": res,
        });
        return (res, wit);
    }
}

/// Homogeneity `B(sx) = B(x)`, sign symmetry `B(g, -f, F) = B(g, f, F)`,
/// and coordinate symmetry `M(y1, y2, F) = M(y2, y1, F)`.
pub fn invariance_report(samples: u64, seed: u64, tol: f64) -> VerificationReport {
    let (worst, index) = par_extreme(samples, |i| invariance_residual(seed, i).0, |a, b| a > b);
    let witness = (index != u64::MAX).then(|| invariance_residual(seed, index).1);
    VerificationReport {
        suite: "invariance".into(),
        samples,
        seed,
        tolerance: tol,
        worst_residual: worst,
        witness,
        passed: worst <= tol,
    }
}

// ---------------------------------------------------------------------------
// Finite-difference identities
// ---------------------------------------------------------------------------

/// Finite-difference diagnostics at a point of the quadratic branch.
///
/// `euler_residual` is `|y1 M_1 + y2 M_2 + F M_3|` (zero for a function
/// homogeneous of degree zero); `ma_residual` is the absolute determinant
/// of the Hessian in `(y2, F)` at fixed `y1` (the quadratic branch
/// degenerates it); `hessian_diag = (M_FF, M_y2y2)` should be nonpositive.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EulerMaReport {
    pub euler_residual: f64,
    pub ma_residual: f64,
    pub hessian_diag: (f64, f64),
}

/// Evaluate the diagnostics with base step `h`. First derivatives use
/// steps `h * max(1, |coord|)`; second derivatives use four times that.
/// Errors if the point is within `10 h`-scaled distance of a branch
/// junction (`F = |y1 - y2|`, `F = y1 + y2`, or `min(y1, y2) = 0`), where
/// differencing is meaningless.
pub fn euler_ma_report(y: PointY, h: f64) -> Result<EulerMaReport> {
    y.check()?;
    if !(h > 0.0) || h > 1e-2 {
        return Err(Error::InvalidParams(format!(
            "finite-difference step must lie in (0, 1e-2], got {h}"
        )));
    }
    let scale = |v: f64| h * v.abs().max(1.0);
    let (h1, h2, h3) = (scale(y.y1), scale(y.y2), scale(y.big_f));
    let guard = 10.0 * h1.max(h2).max(h3);
    let d1 = y.big_f - (y.y1 - y.y2).abs();
    let d2 = (y.y1 + y.y2) - y.big_f;
    let d3 = y.y1.min(y.y2);
    if d1 < guard || d2 < guard || d3 < guard {
        return Err(Error::Domain(format!(
            "point ({}, {}, {}) is within {guard} of a branch junction \
             (margins {d1}, {d2}, {d3}); finite differences need distance >= {guard}",
            y.y1, y.y2, y.big_f
        )));
    }
    let m = |y1: f64, y2: f64, f: f64| bellman_m(PointY { y1, y2, big_f: f });
    let m0 = m(y.y1, y.y2, y.big_f)?;
    let d_1 = (m(y.y1 + h1, y.y2, y.big_f)? - m(y.y1 - h1, y.y2, y.big_f)?) / (2.0 * h1);
    let d_2 = (m(y.y1, y.y2 + h2, y.big_f)? - m(y.y1, y.y2 - h2, y.big_f)?) / (2.0 * h2);
    let d_3 = (m(y.y1, y.y2, y.big_f + h3)? - m(y.y1, y.y2, y.big_f - h3)?) / (2.0 * h3);
    let euler = (y.y1 * d_1 + y.y2 * d_2 + y.big_f * d_3).abs();

    // Wider steps for second differences: the noise floor of a second
    // difference scales like eps / step^2.
    let (k2, k3) = (4.0 * h2, 4.0 * h3);
    let m_ff = (m(y.y1, y.y2, y.big_f + k3)? - 2.0 * m0 + m(y.y1, y.y2, y.big_f - k3)?) / (k3 * k3);
    let m_22 = (m(y.y1, y.y2 + k2, y.big_f)? - 2.0 * m0 + m(y.y1, y.y2 - k2, y.big_f)?) / (k2 * k2);
    let m_2f = (m(y.y1, y.y2 + k2, y.big_f + k3)? - m(y.y1, y.y2 + k2, y.big_f - k3)?
        - m(y.y1, y.y2 - k2, y.big_f + k3)?
        + m(y.y1, y.y2 - k2, y.big_f - k3)?)
        / (4.0 * k2 * k3);
    Ok(EulerMaReport {
        euler_residual: euler,
        ma_residual: (m_ff * m_22 - m_2f * m_2f).abs(),
        hessian_diag: (m_ff, m_22),
    })
}

fn sample_fan_point(seed: u64, index: u64) -> PointY {
    let mut rng = substream(seed, index);
    let y2 = rng.random_range(0.75..1.25);
    let y1 = y2 + rng.random_range(0.0..1.0);
    let big_f = rng.random_range((y1 - y2 + 0.25)..(y1 + y2 - 0.25));
    PointY { y1, y2, big_f }
}

/// Finite-difference suite over interior points of the quadratic branch.
/// Passes when, at every sample, the Euler residual stays below
/// `0.1 tol (1 + |M|)`, the determinant below `tol`, and the Hessian
/// diagonal below `1e-3 tol`. `worst_residual` is the largest of the three
/// scaled quantities over all samples.
pub fn euler_ma_suite_report(samples: u64, seed: u64, tol: f64) -> VerificationReport {
    let score = |i: u64| -> f64 {
        let y = sample_fan_point(seed, i);
        let Ok(rep) = euler_ma_report(y, EULER_MA_STEP) else {
            return f64::INFINITY;
        };
        let m = bellman_m(y).unwrap_or(0.0);
        let euler_scaled = rep.euler_residual / (0.1 * (1.0 + m.abs()));
        let diag_scaled = rep.hessian_diag.0.max(rep.hessian_diag.1).max(0.0) / 1e-3;
        euler_scaled.max(rep.ma_residual).max(diag_scaled)
    };
    let (worst, index) = par_extreme(samples, score, |a, b| a > b);
    let witness = (index != u64::MAX).then(|| {
        let y = sample_fan_point(seed, index);
        let rep = euler_ma_report(y, EULER_MA_STEP).ok();
        json!({
            "index": index,
            "y": [y.y1, y.y2, y.big_f],
            "report": rep,
            "scaled_residual": worst,
        })
    });
    VerificationReport {
        suite: "euler-ma".into(),
        samples,
        seed,
        tolerance: tol,
        worst_residual: worst,
        witness,
        passed: worst <= tol,
    }
}

// ---------------------------------------------------------------------------
// Supermartingale path check
// ---------------------------------------------------------------------------

/// Level-by-level averages of the value over the cells of a pair.
#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    /// `values[n]` averages `B` over the depth-`n` cells (leaves shallower
    /// than `n` persist as virtual cells).
    pub values: Vec<f64>,
    pub payoff_measure: f64,
    /// Largest increase `values[n+1] - values[n]`, plus any deficit of the
    /// last value against the payoff; nonpositive means monotone.
    pub worst_increase: f64,
    pub passed: bool,
}

/// Check that cell averages of the value decrease level by level and end
/// above the payoff measure. Requires the pair to be admissible within
/// `tol`; tracks at most [`PATH_CELL_BUDGET`] distinct cells per level
/// (shared subtrees count once).
pub fn martingale_path_check(p: &AdmissiblePair, max_levels: u32, tol: f64) -> Result<PathReport> {
    if p.residual() > tol.max(1e-9) {
        return Err(Error::NotAdmissible { residual: p.residual() });
    }
    let levels = p.depth().min(max_levels);
    let mut frontier: Vec<(AdmissiblePair, f64)> = vec![(p.clone(), 1.0)];
    let mut values = Vec::with_capacity(levels as usize + 1);
    for level in 0..=levels {
        let mut acc = 0.0;
        for (node, w) in &frontier {
            acc += w * bellman_b(node.point())?;
        }
        values.push(acc);
        if level == levels {
            break;
        }
        let mut merged: HashMap<usize, usize> = HashMap::new();
        let mut next: Vec<(AdmissiblePair, f64)> = Vec::with_capacity(frontier.len() * 2);
        let mut push = |node: AdmissiblePair, w: f64, next: &mut Vec<(AdmissiblePair, f64)>| {
            match merged.entry(node.ptr_key()) {
                std::collections::hash_map::Entry::Occupied(e) => next[*e.get()].1 += w,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(next.len());
                    next.push((node, w));
                }
            }
        };
        for (node, w) in &frontier {
            match node.view() {
                crate::dyadic::PairView::Leaf { .. } => push(node.clone(), *w, &mut next),
                crate::dyadic::PairView::Branch(l, r) => {
                    push(l, 0.5 * w, &mut next);
                    push(r, 0.5 * w, &mut next);
                }
            }
        }
        if next.len() > PATH_CELL_BUDGET {
            return Err(Error::BudgetExceeded {
                needed: next.len() as u128,
                budget: PATH_CELL_BUDGET as u128,
            });
        }
        frontier = next;
    }
    let payoff = p.payoff_measure();
    let mut worst: f64 = payoff - values[values.len() - 1];
    for w in values.windows(2) {
        worst = worst.max(w[1] - w[0]);
    }
    Ok(PathReport {
        values,
        payoff_measure: payoff,
        worst_increase: worst,
        passed: worst <= tol,
    })
}

/// Path checks over a deterministic family: canonical pairs at sampled
/// points, corner recursions, and a small self-similar build.
pub fn path_suite_report(samples: u64, seed: u64, tol: f64) -> VerificationReport {
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut count = 0u64;
    let mut consider = |label: String, p: &AdmissiblePair| {
        count += 1;
        match martingale_path_check(p, 64, tol) {
            Ok(rep) => {
                if rep.worst_increase > worst {
                    worst = rep.worst_increase;
                    witness = Some(json!({
                        "pair": label,
                        "worst_increase": rep.worst_increase,
                        "payoff": rep.payoff_measure,
                    }));
                }
            }
            Err(e) => {
                worst = f64::INFINITY;
                witness = Some(json!({ "pair": label, "error": e.to_string() }));
            }
        }
    };

    for i in 0..samples.min(500) {
        let mut rng = substream(seed, i);
        let g: f64 = rng.random_range(-3.0..3.0);
        let f: f64 = rng.random_range(-3.0..3.0);
        let big_f = f.abs() + rng.random_range(0.0..3.0);
        let Ok(x) = PointGff::new(g, f, big_f) else { continue };
        let Ok(p) = crate::extremize::canonical_pair(&x) else { continue };
        consider(format!("canonical at {x}"), &p);
    }
    for n in 1..=10 {
        if let Ok(p) = corner_extremizer(1.0, n) {
            consider(format!("corner n = {n}"), &p);
        }
    }
    if let Ok(prm) = ExtremizerParams::new(2, 3, 6) {
        if let Ok((p, _)) = build_extremizer(1.0, &prm) {
            consider("build F = 1, r = 2, 3 steps".into(), &p);
        }
    }
    VerificationReport {
        suite: "path".into(),
        samples: count,
        seed,
        tolerance: tol,
        worst_residual: worst,
        witness,
        passed: worst <= tol,
    }
}

/// Dispatch a named suite with its default tolerance unless overridden.
pub fn run_suite(
    name: &str,
    samples: u64,
    seed: u64,
    tol: Option<f64>,
) -> Result<VerificationReport> {
    let report = match name {
        "main-inequality" => {
            main_inequality_report(samples, seed, tol.unwrap_or(MAIN_INEQUALITY_TOL))
        }
        "characteristic-equality" => {
            characteristic_equality_report(samples, seed, tol.unwrap_or(CHARACTERISTIC_TOL))
        }
        "concavity" => section_concavity_report(samples, seed, tol.unwrap_or(CONCAVITY_TOL)),
        "invariance" => invariance_report(samples, seed, tol.unwrap_or(INVARIANCE_TOL)),
        "euler-ma" => euler_ma_suite_report(samples, seed, tol.unwrap_or(EULER_MA_TOL)),
        "path" => path_suite_report(samples, seed, tol.unwrap_or(PATH_TOL)),
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown suite {other:?}; expected one of main-inequality, \
                 characteristic-equality, concavity, invariance, euler-ma, path"
            )))
        }
    };
    Ok(report)
}
