//! Independent lower-bound oracles for the closed-form value: a grid value
//! iteration over the normalized domain, and a small exhaustive search over
//! dyadic trees at a single point.
//!
//! Both construct admissible configurations only, so every number they
//! produce is a certified lower bound for the value; comparing against the
//! closed form from above and below brackets it without assuming it.

use crate::bellman::{bellman_m, PointGff, PointY};
use crate::error::{Error, Result};
use crate::verify::VerificationReport;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub const DEFAULT_U_MIN: f64 = -3.125;
pub const DEFAULT_U_MAX: f64 = 3.125;
pub const DEFAULT_G_MAX: f64 = 6.25;
/// Default cell count per axis.
pub const DEFAULT_CELLS: usize = 400;
/// Default number of value-iteration sweeps.
pub const DEFAULT_DEPTH: u32 = 200;
/// Allowed overshoot of the iterated value above the closed form.
pub const ORACLE_GAP_TOL: f64 = 0.01;
/// Candidate enumeration budget for the exhaustive tree search.
pub const BRUTE_FORCE_BUDGET: u128 = 100_000_000;

const NODE_TOL: f64 = 1e-9;

/// Grid over the normalized coordinates `(u, G) = (y2 / y1, F / y1)`, on
/// which the value is a function of two variables by homogeneity. Node
/// `(i, j)` sits at `(u_min + i du, j dG)`; the domain is `G >= |1 - u|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub g_max: f64,
    /// Cell counts per axis; the grid has `nu + 1` by `ng + 1` nodes.
    pub nu: usize,
    pub ng: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            u_min: DEFAULT_U_MIN,
            u_max: DEFAULT_U_MAX,
            g_max: DEFAULT_G_MAX,
            nu: DEFAULT_CELLS,
            ng: DEFAULT_CELLS,
        }
    }
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-6
}

impl GridSpec {
    pub fn new(u_min: f64, u_max: f64, g_max: f64, nu: usize, ng: usize) -> Result<Self> {
        let spec = GridSpec { u_min, u_max, g_max, nu, ng };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid geometry constraints: the box must contain the corner point
    /// `u = -1` and the probe `u = 1`, steps on both axes must agree so
    /// that the boundary cone `G = |1 - u|` passes through nodes, and
    /// `u = 1` itself must be a node.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("u_min", self.u_min),
            ("u_max", self.u_max),
            ("g_max", self.g_max),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.u_min < -1.0 && self.u_max > 1.0) {
            return Err(Error::InvalidParams(format!(
                "grid box [{}, {}] must contain (-1, 1) strictly",
                self.u_min, self.u_max
            )));
        }
        if !(self.g_max > 0.0) {
            return Err(Error::InvalidParams(format!("g_max must be positive, got {}", self.g_max)));
        }
        if !(2..=4096).contains(&self.nu) || !(2..=4096).contains(&self.ng) {
            return Err(Error::InvalidParams(format!(
                "cell counts must lie in [2, 4096], got {} x {}",
                self.nu, self.ng
            )));
        }
        let (du, dg) = (self.du(), self.dg());
        if (du - dg).abs() > 1e-9 * du {
            return Err(Error::InvalidParams(format!(
                "axis steps must agree for node-aligned cone: du = {du}, dG = {dg}"
            )));
        }
        for (name, v) in [
            ("(1 - u_min) / du", (1.0 - self.u_min) / du),
            ("(u_max - 1) / du", (self.u_max - 1.0) / du),
            ("2 / du", 2.0 / du),
        ] {
            if !near_integer(v) {
                return Err(Error::InvalidParams(format!(
                    "grid is not aligned with the corner points: {name} = {v} is not an integer"
                )));
            }
        }
        Ok(())
    }

    pub fn du(&self) -> f64 {
        (self.u_max - self.u_min) / self.nu as f64
    }

    pub fn dg(&self) -> f64 {
        self.g_max / self.ng as f64
    }

    pub fn u_node(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.du()
    }

    pub fn g_node(&self, j: usize) -> f64 {
        j as f64 * self.dg()
    }

    /// Whether node `(i, j)` satisfies `G >= |1 - u|`.
    pub fn in_domain(&self, i: usize, j: usize) -> bool {
        self.g_node(j) + NODE_TOL >= (1.0 - self.u_node(i)).abs()
    }

    fn n_nodes(&self) -> usize {
        (self.nu + 1) * (self.ng + 1)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.ng + 1) + j
    }
}

/// Bilinear read of `vals` at `(u, G)`. Exact node hits read the node;
/// otherwise all four stencil corners must exist and lie in the domain.
fn bilinear(spec: &GridSpec, vals: &[f64], u: f64, big_g: f64) -> Option<f64> {
    let (du, dg) = (spec.du(), spec.dg());
    let fu = (u - spec.u_min) / du;
    let fg = big_g / dg;
    if fu < -NODE_TOL || fg < -NODE_TOL {
        return None;
    }
    let (iu, ig) = (fu.round(), fg.round());
    if (fu - iu).abs() <= NODE_TOL && (fg - ig).abs() <= NODE_TOL {
        let (i, j) = (iu as usize, ig as usize);
        if i > spec.nu || j > spec.ng || !spec.in_domain(i, j) {
            return None;
        }
        return Some(vals[spec.idx(i, j)]);
    }
    let i = (fu.floor() as usize).min(spec.nu.saturating_sub(1));
    let j = (fg.floor() as usize).min(spec.ng.saturating_sub(1));
    if fu > spec.nu as f64 + NODE_TOL || fg > spec.ng as f64 + NODE_TOL {
        return None;
    }
    for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        if !spec.in_domain(i + a, j + b) {
            return None;
        }
    }
    let (tu, tg) = (fu - i as f64, fg - j as f64);
    let v00 = vals[spec.idx(i, j)];
    let v10 = vals[spec.idx(i + 1, j)];
    let v01 = vals[spec.idx(i, j + 1)];
    let v11 = vals[spec.idx(i + 1, j + 1)];
    Some(
        v00 * (1.0 - tu) * (1.0 - tg)
            + v10 * tu * (1.0 - tg)
            + v01 * (1.0 - tu) * tg
            + v11 * tu * tg,
    )
}

/// Result of a value iteration: node values over the grid.
#[derive(Debug, Clone)]
pub struct ValueGrid {
    spec: GridSpec,
    values: Vec<f64>,
    pub depth: u32,
}

impl ValueGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.idx(i, j)]
    }

    /// Closed-form value at node `(i, j)` for comparison.
    pub fn closed_form(&self, i: usize, j: usize) -> Result<f64> {
        bellman_m(PointY {
            y1: 1.0,
            y2: self.spec.u_node(i),
            big_f: self.spec.g_node(j),
        })
    }

    pub fn interp(&self, u: f64, big_g: f64) -> Option<f64> {
        bilinear(&self.spec, &self.values, u, big_g)
    }
}

/// One-node split candidates along the axis where both children stay on
/// grid nodes: dyadic stretches with slopes -1, -1/2, 0, 1/2, 1.
fn axis_jumps(spec: &GridSpec) -> Vec<(usize, isize)> {
    let mut jumps = Vec::new();
    let mut s = 1usize;
    while s <= spec.nu.max(spec.ng) {
        let si = s as isize;
        for w in [-si, -si / 2, 0, si / 2, si] {
            if !jumps.contains(&(s, w)) {
                jumps.push((s, w));
            }
        }
        s *= 2;
    }
    jumps
}

fn obstacle(spec: &GridSpec) -> Vec<f64> {
    let mut v = vec![0.0; spec.n_nodes()];
    for i in 0..=spec.nu {
        let u = spec.u_node(i);
        if u > -1.0 + NODE_TOL {
            continue;
        }
        for j in 0..=spec.ng {
            // Exact leaves: on the cone with nonpositive u the pair stops
            // immediately with full payoff.
            if (spec.g_node(j) - (1.0 - u)).abs() <= NODE_TOL {
                v[spec.idx(i, j)] = 1.0;
            }
        }
    }
    v
}

fn sweep(spec: &GridSpec, jumps: &[(usize, isize)], old: &[f64], domain: &[bool]) -> Vec<f64> {
    let ng1 = spec.ng + 1;
    let mut next = vec![0.0; spec.n_nodes()];
    next.par_chunks_mut(ng1).enumerate().for_each(|(i, row)| {
        let u = spec.u_node(i);
        for (j, out) in row.iter_mut().enumerate() {
            let k = spec.idx(i, j);
            if !domain[k] {
                continue;
            }
            let big_g = spec.g_node(j);
            let mut best = old[k];
            // (a) Splits moving only the second coordinate pair: children
            // (u -+ s du, G -+ w dG) are exact nodes.
            for &(s, w) in jumps {
                let (Some(im), Some(jm)) = (i.checked_sub(s), j.checked_add_signed(-w)) else {
                    continue;
                };
                let (ip, jp) = (i + s, j.wrapping_add_signed(w));
                if ip > spec.nu || jm > spec.ng || jp > spec.ng {
                    continue;
                }
                let (km, kp) = (spec.idx(im, jm), spec.idx(ip, jp));
                if domain[km] && domain[kp] {
                    best = best.max(0.5 * (old[km] + old[kp]));
                }
            }
            // (b) Splits scaling the first coordinate by 1 -+ h; children
            // renormalize off-node and are read bilinearly.
            for h in [0.25, 0.5, 0.75] {
                for w in [-h, 0.0, h] {
                    let c1 = bilinear(spec, old, u / (1.0 - h), (big_g - w) / (1.0 - h));
                    let c2 = bilinear(spec, old, u / (1.0 + h), (big_g + w) / (1.0 + h));
                    if let (Some(v1), Some(v2)) = (c1, c2) {
                        best = best.max(0.5 * (v1 + v2));
                    }
                }
            }
            // (c) Corner rule: scale the first coordinate to 0 and 2. The
            // vanishing child is an exact full-payoff leaf when u <= 0.
            if u <= NODE_TOL {
                if let Some(v2) = bilinear(spec, old, 0.5 * u, big_g + 0.5 * u) {
                    best = best.max(0.5 * (1.0 + v2));
                }
            }
            *out = best;
        }
    });
    // Symmetry pass: the value is invariant under swapping the pair of
    // homogeneous coordinates, which maps (u, G) to (1/u, G/u).
    let mut sym = next.clone();
    sym.par_chunks_mut(ng1).enumerate().for_each(|(i, row)| {
        let u = spec.u_node(i);
        if u <= 1.0 + NODE_TOL {
            return;
        }
        for (j, out) in row.iter_mut().enumerate() {
            if !domain[spec.idx(i, j)] {
                continue;
            }
            if let Some(v) = bilinear(spec, &next, 1.0 / u, spec.g_node(j) / u) {
                *out = out.max(v);
            }
        }
    });
    sym
}

/// Run `depth` sweeps of monotone value iteration from the leaf obstacle.
pub fn value_iteration(spec: &GridSpec, depth: u32) -> Result<ValueGrid> {
    Ok(value_iteration_checkpoints(spec, &[depth])?.pop().expect("one checkpoint"))
}

/// As [`value_iteration`], snapshotting the grid at each listed depth.
/// Depths must be strictly increasing.
pub fn value_iteration_checkpoints(spec: &GridSpec, depths: &[u32]) -> Result<Vec<ValueGrid>> {
    spec.validate()?;
    if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(format!(
            "checkpoint depths must be strictly increasing and nonempty, got {depths:?}"
        )));
    }
    let max_depth = *depths.last().expect("nonempty");
    if !(1..=100_000).contains(&max_depth) {
        return Err(Error::InvalidParams(format!(
            "sweep count must lie in [1, 100000], got {max_depth}"
        )));
    }
    let jumps = axis_jumps(spec);
    let domain: Vec<bool> = (0..=spec.nu)
        .flat_map(|i| (0..=spec.ng).map(move |j| (i, j)))
        .map(|(i, j)| spec.in_domain(i, j))
        .collect();
    let mut cur = obstacle(spec);
    let mut out = Vec::with_capacity(depths.len());
    for d in 1..=max_depth {
        cur = sweep(spec, &jumps, &cur, &domain);
        if depths.contains(&d) {
            out.push(ValueGrid { spec: *spec, values: cur.clone(), depth: d });
        }
    }
    Ok(out)
}

/// Compare an iterated grid against the closed form: the iteration builds
/// admissible configurations only, so it must stay below the closed form
/// up to `tol`; the pass verdict also requires the probe value at
/// `(u, G) = (1, 1)` to sit within 0.05 of 3/4.
pub fn oracle_compare(grid: &ValueGrid, tol: f64) -> Result<VerificationReport> {
    let spec = grid.spec();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_node = (0usize, 0usize);
    let mut samples = 0u64;
    for i in 0..=spec.nu {
        for j in 0..=spec.ng {
            if !spec.in_domain(i, j) {
                continue;
            }
            samples += 1;
            let gap = grid.value(i, j) - grid.closed_form(i, j)?;
            if gap > worst {
                worst = gap;
                worst_node = (i, j);
            }
        }
    }
    let probe = grid.interp(1.0, 1.0);
    let probe_ok = probe.is_some_and(|v| (v - 0.75).abs() <= 0.05);
    let (wi, wj) = worst_node;
    let witness = json!({
        "u": spec.u_node(wi),
        "G": spec.g_node(wj),
        "value": grid.value(wi, wj),
        "closed_form": grid.closed_form(wi, wj)?,
        "probe_at_1_1": probe,
        "depth": grid.depth,
    });
    Ok(VerificationReport {
        suite: "dp-oracle".into(),
        samples,
        seed: 0,
        tolerance: tol,
        worst_residual: worst,
        witness: Some(witness),
        passed: worst <= tol && probe_ok,
    })
}

fn enumerate_leaf_tuples(
    grid: &[f64],
    n: usize,
    target_sum: f64,
    target_abs: f64,
    cap: usize,
) -> Result<Vec<Vec<f64>>> {
    let min = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_abs = grid.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_abs = grid.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let mut out = Vec::new();
    let mut cur = vec![0.0; n];
    // Depth-first enumeration with interval pruning on the running sum and
    // running absolute sum.
    fn rec(
        grid: &[f64],
        cur: &mut Vec<f64>,
        k: usize,
        sum: f64,
        abs: f64,
        bounds: (f64, f64, f64, f64),
        targets: (f64, f64),
        out: &mut Vec<Vec<f64>>,
        cap: usize,
    ) -> Result<()> {
        let n = cur.len();
        let (min, max, min_abs, max_abs) = bounds;
        let (ts, ta) = targets;
        let m = (n - k) as f64;
        if ts - sum < m * min - 1e-9 || ts - sum > m * max + 1e-9 {
            return Ok(());
        }
        if ta - abs < m * min_abs - 1e-9 || ta - abs > m * max_abs + 1e-9 {
            return Ok(());
        }
        if k == n {
            if (sum - ts).abs() <= 1e-12 && (abs - ta).abs() <= 1e-12 {
                if out.len() >= cap {
                    return Err(Error::BudgetExceeded {
                        needed: out.len() as u128 + 1,
                        budget: cap as u128,
                    });
                }
                out.push(cur.clone());
            }
            return Ok(());
        }
        for &v in grid {
            cur[k] = v;
            rec(grid, cur, k + 1, sum + v, abs + v.abs(), bounds, targets, out, cap)?;
        }
        Ok(())
    }
    rec(
        grid,
        &mut cur,
        0,
        0.0,
        0.0,
        (min, max, min_abs, max_abs),
        (target_sum, target_abs),
        &mut out,
        cap,
    )?;
    Ok(out)
}

/// Exhaustive lower bound at `x`: enumerate full dyadic trees of the given
/// depth with leaf values drawn from `leaf_grid` that realize the mean and
/// absolute mean of `x`, then every choice of transform signs, and take
/// the best payoff. Every enumerated configuration is admissible, so the
/// result is a true lower bound for the value at `x`.
pub fn brute_force_lower_bound(x: &PointGff, depth: u32, leaf_grid: &[f64]) -> Result<f64> {
    x.check()?;
    if !(1..=5).contains(&depth) {
        return Err(Error::InvalidParams(format!("tree depth must lie in [1, 5], got {depth}")));
    }
    if leaf_grid.is_empty() || leaf_grid.len() > 64 || leaf_grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(
            "leaf grid must hold between 1 and 64 finite values".into(),
        ));
    }
    let n = 1usize << depth;
    let n_internal = n - 1;
    let patterns: u128 = 1u128 << n_internal;
    let cap = (BRUTE_FORCE_BUDGET / patterns).min(10_000_000) as usize;
    let tuples = enumerate_leaf_tuples(
        leaf_grid,
        n,
        x.f * n as f64,
        x.big_f * n as f64,
        cap.max(1),
    )?;
    let total = tuples.len() as u128 * patterns * n as u128;
    if total > BRUTE_FORCE_BUDGET {
        return Err(Error::BudgetExceeded { needed: total, budget: BRUTE_FORCE_BUDGET });
    }

    let best = tuples
        .par_iter()
        .map(|leaves| {
            // Heap-ordered subtree averages: node t has children 2t, 2t+1.
            let mut avg = vec![0.0; 2 * n];
            avg[n..2 * n].copy_from_slice(leaves);
            for t in (1..n).rev() {
                avg[t] = 0.5 * (avg[2 * t] + avg[2 * t + 1]);
            }
            let mut local_best = 0.0f64;
            for pat in 0..patterns as u64 {
                // psi starts at the third coordinate and accumulates the
                // signed increments of the subtree averages.
                let mut psi = vec![x.g; 2 * n];
                for t in 1..n {
                    let sign = if pat >> (t - 1) & 1 == 1 { 1.0 } else { -1.0 };
                    psi[2 * t] = psi[t] + sign * (avg[2 * t] - avg[t]);
                    psi[2 * t + 1] = psi[t] + sign * (avg[2 * t + 1] - avg[t]);
                }
                let hits = (n..2 * n).filter(|&k| psi[k] >= 0.0).count();
                local_best = local_best.max(hits as f64 / n as f64);
            }
            local_best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}
