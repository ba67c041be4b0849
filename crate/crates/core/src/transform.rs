//! The martingale transform, admissibility diagnostics, and the weak-type
//! experiments behind the constants 2 (one-sided) and 4 (two-sided).

use crate::bellman::PointGff;
use crate::dyadic::{
    AdmissiblePair, DyadicPath, SignAssignment, StepFunction, StepView, DEFAULT_DEPTH_CAP,
};
use crate::error::{Error, Result};
use crate::rng::substream;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Expansion guard: the transform must walk every node of the (expanded)
/// tree, so heavily shared inputs are rejected rather than exploded.
pub const MAX_TRANSFORM_LEAVES: u128 = 1 << 20;

/// Threshold below which sign search is exhaustive over all assignments.
pub const EXHAUSTIVE_NODE_LIMIT: usize = 20;

/// Apply signs to the Haar expansion of `phi` and reset the mean to `g0`:
/// the result has the same tree, average `g0`, and Haar coefficient
/// `eps(p) * haar_coefficient(phi, p)` at every internal node `p`.
pub fn martingale_transform(
    phi: &StepFunction,
    eps: &SignAssignment,
    g0: f64,
) -> Result<StepFunction> {
    if phi.leaf_count() > MAX_TRANSFORM_LEAVES {
        return Err(Error::BudgetExceeded {
            needed: phi.leaf_count(),
            budget: MAX_TRANSFORM_LEAVES,
        });
    }
    if phi.depth() > DEFAULT_DEPTH_CAP {
        return Err(Error::DepthCap {
            cap: DEFAULT_DEPTH_CAP,
            needed: phi.depth(),
        });
    }
    enum Task {
        Enter(StepFunction, f64, DyadicPath),
        Combine,
    }
    let mut tasks = vec![Task::Enter(phi.clone(), g0, DyadicPath::root())];
    let mut built: Vec<StepFunction> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Enter(f, base, path) => match f.view() {
                StepView::Leaf(_) => built.push(StepFunction::constant(base)),
                StepView::Branch(l, r) => {
                    let jump = 0.5 * f64::from(eps.sign(&path)) * (r.average() - l.average());
                    tasks.push(Task::Combine);
                    tasks.push(Task::Enter(r, base + jump, path.child(true)?));
                    tasks.push(Task::Enter(l, base - jump, path.child(false)?));
                }
            },
            Task::Combine => {
                let r = built.pop().expect("right result");
                let l = built.pop().expect("left result");
                built.push(StepFunction::split(&l, &r));
            }
        }
    }
    Ok(built.pop().expect("root result"))
}

/// Worst admissibility defect of a pair together with its point.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub residual: f64,
    pub point: PointGff,
}

/// Max over internal nodes of the gap between the absolute Haar jumps of the
/// two components, plus the pair's `(g, f, F)` point. Both come from caches,
/// so this is O(1).
pub fn admissibility_residual(p: &AdmissiblePair) -> AdmissibilityReport {
    AdmissibilityReport {
        residual: p.residual(),
        point: p.point(),
    }
}

fn check_ratio_inputs(phi: &StepFunction, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if phi.abs_average() <= 0.0 {
        return Err(Error::InvalidParams(
            "phi must not vanish identically".into(),
        ));
    }
    Ok(())
}

/// One-sided tail ratio `lambda * |{sum >= lambda}| / mean|phi|` where `sum`
/// is the mean-zero signed Haar series of `phi`.
pub fn weak_type_ratio(phi: &StepFunction, eps: &SignAssignment, lambda: f64) -> Result<f64> {
    check_ratio_inputs(phi, lambda)?;
    let series = martingale_transform(phi, eps, 0.0)?;
    Ok(lambda * series.level_set_measure(lambda) / phi.abs_average())
}

/// Two-sided tail ratio `lambda * |{|sum| >= lambda}| / mean|phi|`.
///
/// Also asserts the exact decomposition of the two-sided event into the
/// one-sided events for `phi` and `-phi`: the series for `-phi` is the
/// pointwise negation, the two events are disjoint for `lambda > 0`, and all
/// measures are dyadic rationals, so the identity holds without tolerance.
pub fn two_sided_tail_ratio(phi: &StepFunction, eps: &SignAssignment, lambda: f64) -> Result<f64> {
    check_ratio_inputs(phi, lambda)?;
    let series = martingale_transform(phi, eps, 0.0)?;
    let m_plus = series.level_set_measure(lambda);
    let m_minus = series.negated().level_set_measure(lambda);
    let m_two = series.abs_values().level_set_measure(lambda);
    assert!(
        m_two == m_plus + m_minus,
        "two-sided tail measure must split exactly into the one-sided tails \
         ({m_two} vs {m_plus} + {m_minus})"
    );
    Ok(lambda * m_two / phi.abs_average())
}

/// One-sided tail ratio read off an already-built pair: the signed series is
/// `psi` minus its mean, so the event is a `psi` level set. Works on shared
/// self-similar pairs without expanding them.
pub fn pair_weak_type_ratio(p: &AdmissiblePair, lambda: f64) -> Result<f64> {
    let pt = p.point();
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if pt.big_f <= 0.0 {
        return Err(Error::InvalidParams(
            "phi must not vanish identically".into(),
        ));
    }
    Ok(lambda * p.psi_level_set(lambda + pt.g) / pt.big_f)
}

/// Internal-node paths of `phi`, ordered by depth then left-to-right.
pub fn internal_paths(phi: &StepFunction) -> Vec<DyadicPath> {
    let mut out = Vec::new();
    let mut stack = vec![(phi.clone(), DyadicPath::root())];
    while let Some((f, path)) = stack.pop() {
        if let StepView::Branch(l, r) = f.view() {
            stack.push((r, path.child(true).expect("within path cap")));
            stack.push((l, path.child(false).expect("within path cap")));
            out.push(path);
        }
    }
    out.sort_by(|a, b| a.depth().cmp(&b.depth()).then_with(|| a.cmp(b)));
    out
}

/// Best sign assignment found for the one-sided ratio at `lambda`.
#[derive(Debug, Clone)]
pub struct SignSearchResult {
    pub eps: SignAssignment,
    pub ratio: f64,
}

/// Search over sign assignments for the largest one-sided tail ratio.
///
/// Trees with at most [`EXHAUSTIVE_NODE_LIMIT`] internal nodes are searched
/// exhaustively (the result is the true optimum). Larger trees get seeded
/// greedy descent from random starts; restarts split the budget and merge
/// deterministically (best ratio, ties to the smaller restart index).
pub fn sign_search(
    phi: &StepFunction,
    lambda: f64,
    budget: u64,
    seed: u64,
) -> Result<SignSearchResult> {
    if budget < 1 {
        return Err(Error::InvalidParams("budget must be at least 1".into()));
    }
    check_ratio_inputs(phi, lambda)?;
    let nodes = internal_paths(phi);
    if nodes.len() <= EXHAUSTIVE_NODE_LIMIT {
        let mut best_mask = 0u64;
        let mut best_ratio = f64::NEG_INFINITY;
        for mask in 0..(1u64 << nodes.len()) {
            let eps = assignment_from_mask(&nodes, mask);
            let ratio = weak_type_ratio(phi, &eps, lambda)?;
            if ratio > best_ratio {
                best_ratio = ratio;
                best_mask = mask;
            }
        }
        return Ok(SignSearchResult {
            eps: assignment_from_mask(&nodes, best_mask),
            ratio: best_ratio,
        });
    }

    let restarts = (budget / nodes.len() as u64).max(1);
    let candidates: Vec<(u64, Vec<i8>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let mut signs: Vec<i8> = (0..nodes.len())
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let mut ratio = ratio_of(phi, &nodes, &signs, lambda);
            loop {
                let mut improved = false;
                for k in 0..signs.len() {
                    signs[k] = -signs[k];
                    let r = ratio_of(phi, &nodes, &signs, lambda);
                    if r > ratio {
                        ratio = r;
                        improved = true;
                    } else {
                        signs[k] = -signs[k];
                    }
                }
                if !improved {
                    break;
                }
            }
            (i, signs, ratio)
        })
        .collect();
    let (_, signs, ratio) = candidates
        .into_iter()
        .min_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .expect("ratios are finite")
                .then(a.0.cmp(&b.0))
        })
        .expect("at least one restart");
    let mut eps = SignAssignment::all(1);
    for (p, s) in nodes.iter().zip(&signs) {
        eps = eps.with(p.clone(), *s);
    }
    Ok(SignSearchResult { eps, ratio })
}

fn assignment_from_mask(nodes: &[DyadicPath], mask: u64) -> SignAssignment {
    let mut eps = SignAssignment::all(1);
    for (k, p) in nodes.iter().enumerate() {
        if mask >> k & 1 == 1 {
            eps = eps.with(p.clone(), -1);
        }
    }
    eps
}

fn ratio_of(phi: &StepFunction, nodes: &[DyadicPath], signs: &[i8], lambda: f64) -> f64 {
    let mut eps = SignAssignment::all(1);
    for (p, s) in nodes.iter().zip(signs) {
        eps = eps.with(p.clone(), *s);
    }
    weak_type_ratio(phi, &eps, lambda).expect("inputs validated by caller")
}

/// Random step function of depth at most `max_depth` with a mean-positive
/// |phi|: interior nodes split with probability 3/4, leaves are uniform in
/// [-3, 3], and a function that vanishes identically is nudged to 1.
pub fn random_step_function<R: Rng>(rng: &mut R, max_depth: u32) -> StepFunction {
    fn go<R: Rng>(rng: &mut R, depth: u32) -> StepFunction {
        if depth == 0 || !rng.random_bool(0.75) {
            StepFunction::constant(rng.random_range(-3.0..3.0))
        } else {
            let l = go(rng, depth - 1);
            let r = go(rng, depth - 1);
            StepFunction::split(&l, &r)
        }
    }
    let f = go(rng, max_depth);
    if f.abs_average() > 0.0 {
        f
    } else {
        StepFunction::constant(1.0)
    }
}

/// Random sign assignment on the internal nodes of `phi`.
pub fn random_signs<R: Rng>(rng: &mut R, phi: &StepFunction) -> SignAssignment {
    let mut eps = SignAssignment::all(1);
    for p in internal_paths(phi) {
        eps = eps.with(p, if rng.random::<bool>() { 1 } else { -1 });
    }
    eps
}
