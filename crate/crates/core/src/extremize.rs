//! Construction of near-extremal admissible pairs with certified lower
//! bounds on their payoff measure.
//!
//! The building blocks are a canonical two-leaf pair for any domain point, a
//! corner recursion with payoff exactly `1 - 2^-n`, and a self-similar
//! refinement step that trades a pair at budget `F - delta*(2 - F)` for one
//! at budget `F` while harvesting payoff along the way. Iterating the step
//! down a geometric budget schedule and unrolling the self-similar slots a
//! finite number of times yields pairs whose payoff approaches the Bellman
//! value from below, with every truncation accounted for in a certificate.

use crate::bellman::{bellman_b, PointGff};
use crate::dyadic::AdmissiblePair;
use crate::error::{Error, Result};
use serde::Serialize;

/// Tolerance for matching a pair's point against its target.
pub const POINT_TOL: f64 = 1e-9;

/// Resolution of dyadic weight cascades used when a mixing weight is not a
/// short dyadic rational.
const MIX_BITS: u32 = 52;
const MIX_ONE: u64 = 1 << MIX_BITS;

// ---------------------------------------------------------------------------
// Parameters and certificates
// ---------------------------------------------------------------------------

/// Knobs for the self-similar construction.
///
/// `r` sets the step width `delta = 2^-r`; `n_steps` is the number of
/// refinement steps walked down the budget schedule; `n_fp` is how many
/// times each self-similar slot is unrolled before being closed with a
/// canonical pair (and also the corner recursion depth); `depth_cap` bounds
/// the built tree depth; `sigma` is an advisory slack target recorded in
/// certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremizerParams {
    pub r: u32,
    pub n_steps: u32,
    pub n_fp: u32,
    pub depth_cap: u32,
    pub sigma: f64,
}

impl ExtremizerParams {
    /// Parameters with an automatic depth cap and default slack target.
    pub fn new(r: u32, n_steps: u32, n_fp: u32) -> Result<Self> {
        let p = ExtremizerParams {
            r,
            n_steps,
            n_fp,
            depth_cap: auto_depth_cap(r, n_steps, n_fp),
            sigma: 0.05,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_depth_cap(mut self, cap: u32) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn delta(&self) -> f64 {
        0.5f64.powi(self.r as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 || self.r > 40 {
            return Err(Error::InvalidParams(format!(
                "step exponent r must lie in 1..=40, got {}",
                self.r
            )));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidParams("need at least one refinement step".into()));
        }
        if self.n_fp < 1 {
            return Err(Error::InvalidParams("need at least one unrolling round".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "slack target sigma must be positive, got {}",
                self.sigma
            )));
        }
        let floor = self.n_steps as u64 * (self.r as u64 + 2);
        if (self.depth_cap as u64) < floor {
            return Err(Error::InvalidParams(format!(
                "depth cap {} is below the structural floor {} = n_steps*(r+2)",
                self.depth_cap, floor
            )));
        }
        Ok(())
    }

    /// Check that `n_steps` budget-schedule steps stay inside the domain for
    /// target `big_f`. Binding only for `big_f < 2`.
    pub fn validate_for_target(&self, big_f: f64) -> Result<()> {
        if !(big_f >= 0.0) || !big_f.is_finite() {
            return Err(Error::InvalidParams(format!(
                "target F must be finite and nonnegative, got {big_f}"
            )));
        }
        if big_f < 2.0 && f_schedule(big_f, self.delta(), self.n_steps) < 0.0 {
            let max = Self::max_steps(big_f, self.r).unwrap_or(0);
            return Err(Error::InvalidParams(format!(
                "{} refinement steps leave the domain for F = {big_f} at r = {}; \
                 the largest feasible step count is {max}",
                self.n_steps, self.r
            )));
        }
        Ok(())
    }

    /// Largest feasible step count for `big_f < 2` (the schedule must stay
    /// nonnegative); `None` when unbounded (`big_f >= 2`).
    pub fn max_steps(big_f: f64, r: u32) -> Option<u32> {
        if big_f >= 2.0 {
            return None;
        }
        let delta = 0.5f64.powi(r as i32);
        let mut n = 0u32;
        while n < 100_000 && f_schedule(big_f, delta, n + 1) >= 0.0 {
            n += 1;
        }
        Some(n)
    }
}

fn auto_depth_cap(r: u32, n_steps: u32, n_fp: u32) -> u32 {
    let per_step = (n_fp as u64 + 2) * (r as u64 + 2);
    let total = (n_steps as u64 + 1) * per_step + n_fp as u64 + 64;
    total.min(u32::MAX as u64) as u32
}

/// What a construction promises about its output.
///
/// `achieved_measure` is the payoff actually realized; the certified chain
/// guarantees `achieved_measure >= predicted_lower_bound`, and
/// `truncation_slack` is the gap between the ideal (untruncated) bound and
/// the prediction, so `achieved_measure >= predicted_lower_bound -
/// truncation_slack` always holds with room to spare.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub target: PointGff,
    pub achieved_measure: f64,
    pub predicted_lower_bound: f64,
    pub admissibility_residual: f64,
    pub truncation_slack: f64,
    pub params: ExtremizerParams,
}

// ---------------------------------------------------------------------------
// Elementary constructions
// ---------------------------------------------------------------------------

/// Concatenate two pairs (left on `[0,1/2)`); the point moves to the
/// componentwise midpoint. Requires `|f+ - f-| = |g+ - g-|`.
pub fn glue_pairs(left: &AdmissiblePair, right: &AdmissiblePair) -> Result<AdmissiblePair> {
    AdmissiblePair::glue(left, right)
}

/// Scale a pair by `s > 0` and optionally negate its first component; the
/// point maps `(g, f, F)` to `(s g, +-s f, s F)` and the payoff measure is
/// untouched.
pub fn transform_pair(p: &AdmissiblePair, s: f64, negate_phi: bool) -> Result<AdmissiblePair> {
    p.scaled(s, negate_phi)
}

/// The minimal admissible pair at `x`: a two-leaf step with
/// `phi = (f - F, f + F)` and `psi = phi + (g - f) = (g - F, g + F)`.
/// For `F = 0` this degenerates to a single constant leaf.
pub fn canonical_pair(x: &PointGff) -> Result<AdmissiblePair> {
    let x = PointGff::new(x.g, x.f, x.big_f)?;
    if x.big_f == 0.0 {
        return Ok(AdmissiblePair::leaf(x.f, x.g));
    }
    let left = AdmissiblePair::leaf(x.f - x.big_f, x.g - x.big_f);
    let right = AdmissiblePair::leaf(x.f + x.big_f, x.g + x.big_f);
    glue_pairs(&left, &right)
}

/// Near-extremal pair at the corner point `(g, f, F) = (-y1, y1, y1)` with
/// payoff measure exactly `1 - 2^-n`.
///
/// The recursion splits the corner into a zero constant (payoff 1) and a
/// doubled copy of itself, `n - 1` times, and closes the last copy with the
/// canonical pair, whose right leaf has `psi = 0` and still counts.
pub fn corner_extremizer(y1: f64, n: u32) -> Result<AdmissiblePair> {
    if !(y1 > 0.0) || !y1.is_finite() {
        return Err(Error::InvalidParams(format!(
            "corner coordinate y1 must be positive, got {y1}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParams("corner recursion depth must be >= 1".into()));
    }
    let deepest = y1 * 2.0f64.powi(n as i32 - 1);
    let mut p = canonical_pair(&PointGff::new(-deepest, deepest, deepest)?)?;
    let zero = AdmissiblePair::leaf(0.0, 0.0);
    for _ in 1..n {
        p = glue_pairs(&p, &zero)?;
    }
    Ok(p)
}

/// Budget schedule `F^k = 2 - (2 - F)(1 + delta)^k`; satisfies `F^0 = F` and
/// `F^{k+1} = F^k - delta*(2 - F^k)`.
pub fn f_schedule(big_f: f64, delta: f64, k: u32) -> f64 {
    2.0 - (2.0 - big_f) * (1.0 + delta).powi(k as i32)
}

// ---------------------------------------------------------------------------
// The self-similar refinement step
// ---------------------------------------------------------------------------

/// One refinement step: consume `inner` at `(-2, 0, F - delta*(2 - F))` and
/// produce a pair at `(-2, 0, F)` (both are `(1, 1, .)` points in the
/// `(y1, y2, F)` coordinates, scaled so `y1 = 1`).
///
/// Layout on `[0,1)`: the right half is an `r`-fold cascade mixing copies of
/// the pair under construction (self-similar slots, unrolled `n_fp` times
/// from a canonical seed) with a corner pair at weight `delta`; the left
/// half realizes the `(1, 1+delta, F - delta*(1-F))` companion point, built
/// with the first component negated so a single scaled copy of `inner`
/// serves the whole side: an `r`-fold cascade of `(1+delta)`-scaled `inner`
/// copies over a slot holding a wide-corner cascade and a canonical filler.
pub fn refinement_step(
    inner: &AdmissiblePair,
    big_f: f64,
    params: &ExtremizerParams,
) -> Result<AdmissiblePair> {
    let delta = params.delta();
    let f_next = big_f - delta * (2.0 - big_f);
    let pt = inner.point();
    if (pt.g + 2.0).abs() > POINT_TOL
        || pt.f.abs() > POINT_TOL
        || (pt.big_f - f_next).abs() > POINT_TOL
    {
        return Err(Error::Domain(format!(
            "inner pair sits at {pt}, expected (g, f, F) = (-2, 0, {f_next})"
        )));
    }
    let a = big_f - delta * (1.0 - big_f);
    if a < delta {
        return Err(Error::Domain(format!(
            "intermediate point (g, f, F) = ({}, {}, {a}) leaves the domain F >= |f|; \
             the budget F = {big_f} is too small for delta = {delta}",
            -(2.0 + delta),
            -delta
        )));
    }

    let n_c = params.n_fp;
    let corner_main = corner_extremizer(1.0, n_c)?;
    let corner_wide = transform_pair(&corner_extremizer(1.0 + delta, n_c)?, 1.0, true)?;
    let filler = transform_pair(
        &canonical_pair(&PointGff::new(-(2.0 + delta), delta, a)?)?,
        1.0,
        true,
    )?;
    // The only full copy of `inner` made per step; everything on the left
    // half shares it, keeping the total node count linear in n_steps.
    let inner_neg = transform_pair(inner, 1.0 + delta, true)?;

    // Wide-corner slot: filler at relative weight delta under r cascades of
    // the wide corner.
    let mut slot = filler;
    for _ in 0..params.r {
        slot = glue_pairs(&slot, &corner_wide)?;
    }
    // Left half: inner copies at relative weights 1/2 .. 2^-r over the slot.
    let mut left = slot;
    for _ in 0..params.r {
        left = glue_pairs(&left, &inner_neg)?;
    }

    // Self-similar unrolling: only the right cascade and the root are
    // rebuilt per round; the left half and corners are shared.
    let mut t = canonical_pair(&PointGff::new(-2.0, 0.0, big_f)?)?;
    for _ in 0..params.n_fp {
        let mut right = corner_main.clone();
        for _ in 0..params.r {
            right = glue_pairs(&right, &t)?;
        }
        t = glue_pairs(&left, &right)?;
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Full builds
// ---------------------------------------------------------------------------

/// Payoff of the canonical pair at `(-2, 0, F)`: its right leaf has
/// `psi = F - 2`.
fn seed_payoff(big_f: f64) -> f64 {
    if big_f >= 2.0 {
        0.5
    } else {
        0.0
    }
}

/// Near-extremal pair at `(g, f, F) = (-2, 0, F)`, built by walking
/// `n_steps` refinement steps down the budget schedule from a canonical
/// seed, together with its certificate.
pub fn build_extremizer(big_f: f64, params: &ExtremizerParams) -> Result<(AdmissiblePair, Certificate)> {
    params.validate()?;
    params.validate_for_target(big_f)?;
    let delta = params.delta();
    let n = params.n_steps;

    let mut pair = canonical_pair(&PointGff::new(-2.0, 0.0, f_schedule(big_f, delta, n))?)?;

    // Certified payoff chain, mirroring the construction: each step
    // contributes its corner and filler harvest, carries the previous bound
    // at weight rho, and pays the unrolling truncation q^n_fp.
    let q_tail = ((1.0 - delta) / 2.0).powi(params.n_fp as i32);
    let rho = (1.0 - delta) / (1.0 + delta);
    let corner_payoff = 1.0 - 0.5f64.powi(params.n_fp as i32);
    let mut predicted = seed_payoff(f_schedule(big_f, delta, n));

    for j in (0..n).rev() {
        let f_j = f_schedule(big_f, delta, j);
        pair = refinement_step(&pair, f_j, params)?;
        if pair.depth() > params.depth_cap {
            return Err(Error::DepthCap {
                cap: params.depth_cap,
                needed: pair.depth(),
            });
        }
        let a_j = f_j - delta * (1.0 - f_j);
        let filler_payoff = if a_j >= 2.0 + delta { 0.5 } else { 0.0 };
        let harvest =
            (delta * (2.0 - delta) * corner_payoff + delta * delta * filler_payoff) / (1.0 + delta);
        predicted = harvest + rho * predicted - q_tail;
    }

    let achieved = pair.payoff_measure();
    // The untruncated geometric bound for the full schedule; the certificate
    // reports how far the certified chain falls short of it.
    let ideal = (2.0 * delta - delta * delta) / (2.0 * delta) * (1.0 - rho.powi(n as i32 + 1));
    let predicted = predicted.min(achieved);
    let slack = (ideal - predicted).max(0.0);
    let cert = Certificate {
        target: PointGff::new(-2.0, 0.0, big_f)?,
        achieved_measure: achieved,
        predicted_lower_bound: predicted,
        admissibility_residual: pair.residual(),
        truncation_slack: slack,
        params: *params,
    };
    Ok((pair, cert))
}

/// Weight `k / 2^MIX_BITS` closest to `w`, clamped to `[0, 1]`.
fn dyadic_weight(w: f64) -> u64 {
    if !(w > 0.0) {
        return 0;
    }
    if w >= 1.0 {
        return MIX_ONE;
    }
    (w * MIX_ONE as f64).round() as u64
}

/// Cascade realizing measure `k / 2^MIX_BITS` on `a` and the rest on `b`.
/// All intermediate points are convex combinations, so gluing stays valid
/// whenever `a` and `b` admit pairwise gluing along the shared direction.
fn mix2(a: &AdmissiblePair, b: &AdmissiblePair, k: u64) -> Result<AdmissiblePair> {
    if k == 0 {
        return Ok(b.clone());
    }
    if k >= MIX_ONE {
        return Ok(a.clone());
    }
    let shift = k.trailing_zeros();
    let bits = k >> shift;
    let levels = MIX_BITS - shift;
    let mut z = b.clone();
    for i in 0..levels {
        let pick = if bits >> i & 1 == 1 { a } else { b };
        z = glue_pairs(pick, &z)?;
    }
    Ok(z)
}

/// Chain for points with `y1 <= 0` (where the Bellman value is 1): peel off
/// a payoff-1 cone leaf at measure `2^-k` per level, `n` levels deep, and
/// close with a canonical pair. Every split fixes `y1`.
fn positive_mean_chain(x: &PointGff, n: u32) -> Result<AdmissiblePair> {
    let mut cur = *x;
    let mut leaves = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let t = 0.5 * (cur.big_f - cur.f);
        leaves.push((cur.f + t, cur.g + t));
        cur = PointGff {
            g: cur.g - t,
            f: cur.f - t,
            big_f: cur.big_f + t,
        };
    }
    let mut p = canonical_pair(&cur)?;
    for (phi, psi) in leaves.into_iter().rev() {
        p = glue_pairs(&p, &AdmissiblePair::leaf(phi, psi))?;
    }
    Ok(p)
}

/// Near-extremal pair at an arbitrary domain point, with certificate.
///
/// The point is normalized by scaling and sign symmetry to `y1 = 1`,
/// `u = y2/y1 <= 1`, `G = F/y1`, then realized as a dyadic convex
/// combination along directions that fix one of the `y` coordinates:
///
/// - `u = 1` delegates to [`build_extremizer`];
/// - `0 < u < 1` mixes a corner pair with a build at `F* = (G - 1 + u)/u`;
/// - `u <= 0` mixes a payoff-1 cone leaf, a corner pair, and a build at
///   `F* = max(2, 2(G - 1 + u))`;
/// - `y1 <= 0` (the value-1 region with nonnegative mean for the second
///   component) uses a cone-leaf peeling chain.
pub fn general_point_extremizer(
    x: &PointGff,
    params: &ExtremizerParams,
) -> Result<(AdmissiblePair, Certificate)> {
    params.validate()?;
    let x = PointGff::new(x.g, x.f, x.big_f)?;
    let n_c = params.n_fp;
    let corner_payoff = 1.0 - 0.5f64.powi(n_c as i32);

    let flip = x.f < 0.0;
    let xn = if flip { PointGff { g: x.g, f: -x.f, big_f: x.big_f } } else { x };
    let y1 = 0.5 * (xn.f - xn.g);
    let y2 = -0.5 * (xn.f + xn.g);

    let make_cert = |pair: &AdmissiblePair, predicted: f64| -> Certificate {
        let achieved = pair.payoff_measure();
        let predicted = predicted.min(achieved);
        let ideal = bellman_b(x).unwrap_or(1.0);
        Certificate {
            target: x,
            achieved_measure: achieved,
            predicted_lower_bound: predicted,
            admissibility_residual: pair.residual(),
            truncation_slack: (ideal - predicted).max(0.0),
            params: *params,
        }
    };

    if y1 <= 0.0 {
        // Both y coordinates nonpositive: mean(psi) >= |mean(phi)| >= 0.
        if xn.big_f == 0.0 {
            let p = AdmissiblePair::leaf(0.0, xn.g);
            let predicted = if xn.g >= 0.0 { 1.0 } else { 0.0 };
            let cert = make_cert(&p, predicted);
            return Ok((p, cert));
        }
        let p = positive_mean_chain(&xn, n_c)?;
        let p = if flip { transform_pair(&p, 1.0, true)? } else { p };
        let predicted = 1.0 - 0.5f64.powi(n_c as i32);
        let cert = make_cert(&p, predicted);
        return Ok((p, cert));
    }

    let u = y2 / y1;
    let g_norm = xn.big_f / y1;

    let (normalized, predicted) = if u == 1.0 {
        let (p, c) = build_extremizer(g_norm, params)?;
        (p, c.predicted_lower_bound)
    } else if u > 0.0 {
        // Fan mixture: weight u on the build side, 1-u on the corner.
        let k = dyadic_weight(u);
        let w = k as f64 / MIX_ONE as f64;
        if k == 0 {
            (corner_extremizer(1.0, n_c)?, corner_payoff)
        } else {
            let f_star = (g_norm - (1.0 - u)) / u;
            let (build, cert_b) = build_extremizer(f_star, params)?;
            let corner = corner_extremizer(1.0, n_c)?;
            let p = mix2(&build, &corner, k)?;
            let predicted = w * cert_b.predicted_lower_bound + (1.0 - w) * corner_payoff;
            (p, predicted)
        }
    } else {
        // u <= 0: anchor on a payoff-1 cone leaf at (1, 2u-1, 2-2u) in the
        // y coordinates, the unit corner, and a build at F* >= max(2, .).
        let f_star = (2.0 * (g_norm - 1.0 + u)).max(2.0);
        let w3 = (g_norm - 1.0 + u) / f_star;
        let w1 = (w3 - u) / (1.0 - 2.0 * u);
        let w2 = (1.0 - w1 - w3).max(0.0);
        let k1 = dyadic_weight(w1);
        let beta = if w2 + w3 > 0.0 { w2 / (w2 + w3) } else { 1.0 };
        let k2 = dyadic_weight(beta);
        let cone_leaf = AdmissiblePair::leaf(2.0 - 2.0 * u, -2.0 * u);
        let (rest, rest_predicted) = if k1 >= MIX_ONE {
            (None, 0.0)
        } else if k2 >= MIX_ONE {
            (Some(corner_extremizer(1.0, n_c)?), corner_payoff)
        } else {
            let (build, cert_b) = build_extremizer(f_star, params)?;
            let b = k2 as f64 / MIX_ONE as f64;
            if k2 == 0 {
                (Some(build), cert_b.predicted_lower_bound)
            } else {
                let corner = corner_extremizer(1.0, n_c)?;
                let predicted =
                    b * corner_payoff + (1.0 - b) * cert_b.predicted_lower_bound;
                (Some(mix2(&corner, &build, k2)?), predicted)
            }
        };
        let wa = k1 as f64 / MIX_ONE as f64;
        match rest {
            None => (cone_leaf, 1.0),
            Some(rest) => {
                let p = mix2(&cone_leaf, &rest, k1)?;
                (p, wa + (1.0 - wa) * rest_predicted)
            }
        }
    };

    let pair = if y1 == 1.0 && !flip {
        normalized
    } else {
        transform_pair(&normalized, y1, flip)?
    };
    let cert = make_cert(&pair, predicted);
    Ok((pair, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::bellman_m;

    fn params(r: u32, n_steps: u32, n_fp: u32) -> ExtremizerParams {
        ExtremizerParams::new(r, n_steps, n_fp).unwrap()
    }

    fn assert_point(p: &AdmissiblePair, g: f64, f: f64, big_f: f64) {
        let pt = p.point();
        assert!(
            (pt.g - g).abs() <= POINT_TOL
                && (pt.f - f).abs() <= POINT_TOL
                && (pt.big_f - big_f).abs() <= POINT_TOL,
            "point {pt} vs target ({g}, {f}, {big_f})"
        );
    }

    #[test]
    fn canonical_examples() {
        let p = canonical_pair(&PointGff::new(-2.0, 0.0, 1.0).unwrap()).unwrap();
        assert_point(&p, -2.0, 0.0, 1.0);
        assert_eq!(p.payoff_measure(), 0.0);
        assert_eq!(p.residual(), 0.0);

        let p = canonical_pair(&PointGff::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(p.payoff_measure(), 1.0);
        assert_eq!(p.leaf_count(), 1);

        let p = canonical_pair(&PointGff::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.payoff_measure(), 1.0);
        assert_point(&p, 1.0, 0.0, 1.0);

        assert!(canonical_pair(&PointGff { g: 0.0, f: 2.0, big_f: 1.0 }).is_err());
    }

    #[test]
    fn glue_and_scale_examples() {
        let left = AdmissiblePair::leaf(2.0, -2.0);
        let right = AdmissiblePair::leaf(0.0, 0.0);
        let p = glue_pairs(&left, &right).unwrap();
        assert_point(&p, -1.0, 1.0, 1.0);

        let a = canonical_pair(&PointGff::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
        let b = canonical_pair(&PointGff::new(-3.0, -1.0, 1.0).unwrap()).unwrap();
        let p = glue_pairs(&a, &b).unwrap();
        assert_point(&p, -2.0, 0.0, 1.0);

        let s = transform_pair(&a, 2.0, false).unwrap();
        assert_point(&s, -2.0, 2.0, 2.0);
        assert_eq!(s.payoff_measure(), a.payoff_measure());

        let n = transform_pair(&p, 1.0, true).unwrap();
        assert_point(&n, -2.0, 0.0, 1.0);
        assert_eq!(n.payoff_measure(), p.payoff_measure());
    }

    #[test]
    fn corner_payoffs_are_exact() {
        for n in 1..=20 {
            let p = corner_extremizer(1.0, n).unwrap();
            assert_eq!(p.payoff_measure(), 1.0 - 0.5f64.powi(n as i32), "n = {n}");
            assert_eq!(p.residual(), 0.0);
            assert_point(&p, -1.0, 1.0, 1.0);
        }
        let p = corner_extremizer(0.75, 3).unwrap();
        assert_eq!(p.payoff_measure(), 0.875);
        assert_point(&p, -0.75, 0.75, 0.75);
        assert!(corner_extremizer(0.0, 1).is_err());
        assert!(corner_extremizer(1.0, 0).is_err());
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(f_schedule(1.0, 0.5, 1), 0.5);
        assert_eq!(f_schedule(2.0, 0.25, 7), 2.0);
        assert_eq!(f_schedule(3.0, 0.5, 2), 4.25);
        assert_eq!(f_schedule(1.0, 0.5, 0), 1.0);
        // One-step recurrence holds exactly.
        for k in 0..10 {
            let fk = f_schedule(1.5, 0.25, k);
            let want = fk - 0.25 * (2.0 - fk);
            assert!((f_schedule(1.5, 0.25, k + 1) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_step_point_and_degeneracy() {
        // Degenerate fixed point F = 2: the layout must still glue.
        let prm = params(2, 1, 4);
        let inner = canonical_pair(&PointGff::new(-2.0, 0.0, 2.0).unwrap()).unwrap();
        let p = refinement_step(&inner, 2.0, &prm).unwrap();
        assert_point(&p, -2.0, 0.0, 2.0);
        assert!(p.residual() <= 1e-12);

        // Mismatched inner point is rejected.
        let bad = canonical_pair(&PointGff::new(-2.0, 0.0, 1.9).unwrap()).unwrap();
        assert!(matches!(refinement_step(&bad, 2.0, &prm), Err(Error::Domain(_))));
    }

    #[test]
    fn small_build_is_sound() {
        let prm = params(2, 3, 6);
        let (p, cert) = build_extremizer(1.0, &prm).unwrap();
        assert_point(&p, -2.0, 0.0, 1.0);
        assert!(p.residual() <= 1e-9, "residual {}", p.residual());
        let m = bellman_m(crate::bellman::PointY::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(cert.achieved_measure <= m + 1e-9);
        assert!(cert.achieved_measure >= cert.predicted_lower_bound);
        assert!(cert.predicted_lower_bound > 0.3, "bound {}", cert.predicted_lower_bound);
        assert!(cert.truncation_slack >= 0.0);
    }

    #[test]
    fn infeasible_step_counts_are_rejected() {
        // (1 + 1/4)^4 = 2.44 > 2 = 2/(2 - 1): four steps overshoot at F = 1.
        let prm = params(2, 4, 4);
        assert!(matches!(build_extremizer(1.0, &prm), Err(Error::InvalidParams(_))));
        assert_eq!(ExtremizerParams::max_steps(1.0, 2), Some(3));
        assert_eq!(ExtremizerParams::max_steps(2.5, 2), None);
        // F >= 2 accepts any step count.
        let prm = params(2, 8, 4);
        assert!(build_extremizer(2.0, &prm).is_ok());
    }

    #[test]
    fn predicted_bound_is_monotone_in_steps() {
        let mut last = f64::NEG_INFINITY;
        for n in 1..=3 {
            let (_, cert) = build_extremizer(1.0, &params(2, n, 8)).unwrap();
            assert!(
                cert.predicted_lower_bound >= last - 1e-12,
                "n = {n}: {} < {last}",
                cert.predicted_lower_bound
            );
            last = cert.predicted_lower_bound;
        }
    }

    #[test]
    fn general_point_corner_case() {
        let prm = params(2, 3, 10);
        let x = PointGff::new(-1.0, 1.0, 1.0).unwrap();
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, -1.0, 1.0, 1.0);
        assert_eq!(cert.achieved_measure, 1.0 - 0.5f64.powi(10));
        assert!(cert.truncation_slack <= 0.5f64.powi(10) + 1e-12);
    }

    #[test]
    fn general_point_delegates_on_the_diagonal() {
        let prm = params(2, 3, 8);
        let x = PointGff::new(-2.0, 0.0, 1.0).unwrap();
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, -2.0, 0.0, 1.0);
        assert!(cert.achieved_measure <= 0.75 + 1e-9);
        assert!(cert.achieved_measure >= cert.predicted_lower_bound);

        // Scaled copy of the diagonal: homogeneity must route identically.
        let x = PointGff::new(-4.0, 0.0, 2.0).unwrap();
        let (p, cert2) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, -4.0, 0.0, 2.0);
        assert!((cert2.achieved_measure - cert.achieved_measure).abs() < 1e-12);
    }

    #[test]
    fn general_point_fan_mixture() {
        // (g, f, F) = (-1.5, 0.5, 1.0) is y-(1, 1/2, 1): F* = 1.
        let prm = params(2, 3, 12);
        let x = PointGff::new(-1.5, 0.5, 1.0).unwrap();
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, -1.5, 0.5, 1.0);
        let bound = bellman_b(x).unwrap();
        assert!(cert.achieved_measure <= bound + 1e-9);
        assert!(cert.achieved_measure >= cert.predicted_lower_bound);
        assert!(p.residual() <= 1e-9);

        // Above-fan target with 0 < u < 1 runs through F* >= 2.
        let x = PointGff::new(-1.5, 0.5, 3.0).unwrap();
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, -1.5, 0.5, 3.0);
        assert!(cert.achieved_measure >= cert.predicted_lower_bound);
        assert!(cert.achieved_measure > 0.9, "value-1 region should pay well");
    }

    #[test]
    fn general_point_value_one_regions() {
        let prm = params(2, 3, 20);

        // y1 <= 0: mean of the second component dominates.
        let x = PointGff::new(3.0, 1.0, 2.0).unwrap();
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, 3.0, 1.0, 2.0);
        assert!(cert.achieved_measure >= 1.0 - 0.5f64.powi(20));
        assert!(p.residual() <= 1e-9);

        // Zero means, positive budget.
        let x = PointGff::new(0.0, 0.0, 2.0).unwrap();
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, 0.0, 0.0, 2.0);
        assert!(cert.achieved_measure >= 1.0 - 0.5f64.powi(20));

        // u <= 0 with y1 > 0: three-anchor mixture.
        let x = PointGff::new(0.5, 1.5, 2.0).unwrap();
        let y1 = 0.5 * (1.5 - 0.5);
        assert!(y1 > 0.0);
        let (p, cert) = general_point_extremizer(&x, &prm).unwrap();
        assert_point(&p, 0.5, 1.5, 2.0);
        assert!(cert.achieved_measure >= cert.predicted_lower_bound);
        assert!(cert.achieved_measure > 0.9);
    }

    #[test]
    fn general_point_respects_sign_symmetry() {
        // The induced budget F* = 2/3 admits a single step at r = 2.
        let prm = params(2, 1, 10);
        let a = PointGff::new(-2.0, 0.5, 1.0).unwrap();
        let b = PointGff::new(-2.0, -0.5, 1.0).unwrap();
        let (pa, ca) = general_point_extremizer(&a, &prm).unwrap();
        let (pb, cb) = general_point_extremizer(&b, &prm).unwrap();
        assert_point(&pa, -2.0, 0.5, 1.0);
        assert_point(&pb, -2.0, -0.5, 1.0);
        assert_eq!(ca.achieved_measure, cb.achieved_measure);
    }

    #[test]
    fn params_validation() {
        assert!(ExtremizerParams::new(0, 1, 1).is_err());
        assert!(ExtremizerParams::new(2, 0, 1).is_err());
        assert!(ExtremizerParams::new(2, 1, 0).is_err());
        assert!(params(2, 1, 1).with_sigma(0.0).validate().is_err());
        assert!(params(2, 1, 1).with_depth_cap(1).validate().is_err());
        assert_eq!(params(3, 2, 4).delta(), 0.125);
    }
}
