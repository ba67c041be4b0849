//! Dyadic intervals, piecewise-constant functions on `[0,1)`, Haar analysis,
//! and admissible pairs.
//!
//! Trees are immutable values behind `Arc`; surgery returns new trees and
//! self-similar constructions share subtrees freely. Consequently a "tree"
//! here is really a DAG whose expansion can be astronomically larger than its
//! node count, and every aggregate a caller can ask for in O(1) (averages,
//! payoff measure, admissibility residual, depth, leaf count) is cached at
//! construction time. Traversals that do walk the structure are iterative
//! with explicit stacks: constructed pairs reach depths in the tens of
//! thousands, far beyond any safe recursion budget.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::Arc;

/// Default depth cap for path addressing and grafting.
pub const DEFAULT_DEPTH_CAP: u32 = 48;

/// Absolute tolerance for admissibility (`|delta phi| = |delta psi|`) and
/// exact-value comparisons on averages.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Serialization guards: expanding a shared self-similar pair into explicit
/// JSON is only permitted for modest trees.
pub const MAX_JSON_LEAVES: u128 = 1 << 22;
pub const MAX_JSON_DEPTH: u32 = 120;

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

/// Address of a dyadic subinterval of `[0,1)`: the empty path is the root
/// interval, bit `0` selects `[0,1/2)` and bit `1` selects `[1/2,1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DyadicPath {
    bits: Vec<bool>,
}

impl DyadicPath {
    pub fn root() -> Self {
        Self::default()
    }

    /// Parse a string of `0`/`1` digits; the empty string is the root.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::Format(format!("invalid path digit {c:?} in {s:?}"))),
            }
        }
        if bits.len() > DEFAULT_DEPTH_CAP as usize {
            return Err(Error::DepthCap {
                cap: DEFAULT_DEPTH_CAP,
                needed: bits.len() as u32,
            });
        }
        Ok(Self { bits })
    }

    pub fn depth(&self) -> u32 {
        self.bits.len() as u32
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Child address; `right = false` is the left half.
    pub fn child(&self, right: bool) -> Result<Self> {
        if self.bits.len() as u32 >= DEFAULT_DEPTH_CAP {
            return Err(Error::DepthCap {
                cap: DEFAULT_DEPTH_CAP,
                needed: self.depth() + 1,
            });
        }
        let mut bits = self.bits.clone();
        bits.push(right);
        Ok(Self { bits })
    }

    /// Half-open interval `[lo, lo + 2^-depth)` denoted by this path.
    pub fn interval(&self) -> (f64, f64) {
        let mut lo = 0.0;
        let mut len = 1.0;
        for &b in &self.bits {
            len *= 0.5;
            if b {
                lo += len;
            }
        }
        (lo, lo + len)
    }
}

impl std::fmt::Display for DyadicPath {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.bits.is_empty() {
            return write!(w, "(root)");
        }
        for &b in &self.bits {
            write!(w, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Step functions
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum StepKind {
    Leaf(f64),
    Branch(Arc<StepNode>, Arc<StepNode>),
}

#[derive(Debug)]
struct StepNode {
    kind: StepKind,
    avg: f64,
    abs_avg: f64,
    min: f64,
    max: f64,
    depth: u32,
    leaves: u128,
}

impl StepNode {
    fn leaf(v: f64) -> Arc<Self> {
        Arc::new(StepNode {
            kind: StepKind::Leaf(v),
            avg: v,
            abs_avg: v.abs(),
            min: v,
            max: v,
            depth: 0,
            leaves: 1,
        })
    }

    fn branch(l: Arc<StepNode>, r: Arc<StepNode>) -> Arc<Self> {
        Arc::new(StepNode {
            avg: 0.5 * (l.avg + r.avg),
            abs_avg: 0.5 * (l.abs_avg + r.abs_avg),
            min: l.min.min(r.min),
            max: l.max.max(r.max),
            depth: 1 + l.depth.max(r.depth),
            leaves: l.leaves.saturating_add(r.leaves),
            kind: StepKind::Branch(l, r),
        })
    }
}

/// A piecewise-constant function on `[0,1)` over a finite dyadic partition.
#[derive(Debug, Clone)]
pub struct StepFunction {
    root: Arc<StepNode>,
}

/// One level of structure, for external traversals.
pub enum StepView {
    Leaf(f64),
    Branch(StepFunction, StepFunction),
}

impl StepFunction {
    pub fn constant(v: f64) -> Self {
        Self { root: StepNode::leaf(v) }
    }

    /// Concatenate: `left` on `[0,1/2)`, `right` on `[1/2,1)`.
    pub fn split(left: &StepFunction, right: &StepFunction) -> Self {
        Self {
            root: StepNode::branch(left.root.clone(), right.root.clone()),
        }
    }

    pub fn view(&self) -> StepView {
        match &self.root.kind {
            StepKind::Leaf(v) => StepView::Leaf(*v),
            StepKind::Branch(l, r) => StepView::Branch(
                StepFunction { root: l.clone() },
                StepFunction { root: r.clone() },
            ),
        }
    }

    pub fn depth(&self) -> u32 {
        self.root.depth
    }

    pub fn leaf_count(&self) -> u128 {
        self.root.leaves
    }

    pub fn min_value(&self) -> f64 {
        self.root.min
    }

    pub fn max_value(&self) -> f64 {
        self.root.max
    }

    /// Mean over `[0,1)`.
    pub fn average(&self) -> f64 {
        self.root.avg
    }

    /// Mean of `|f|` over `[0,1)`.
    pub fn abs_average(&self) -> f64 {
        self.root.abs_avg
    }

    /// Measure-weighted mean over the interval of `p`; inside a leaf this is
    /// the leaf constant. Total on all paths.
    pub fn average_on(&self, p: &DyadicPath) -> f64 {
        let mut node = &self.root;
        for &b in p.bits() {
            match &node.kind {
                StepKind::Leaf(_) => break,
                StepKind::Branch(l, r) => node = if b { r } else { l },
            }
        }
        node.avg
    }

    /// Unnormalized Haar coefficient at `p`: (right-half average) minus
    /// (left-half average); zero inside a leaf.
    pub fn haar_coefficient(&self, p: &DyadicPath) -> f64 {
        let mut node = &self.root;
        for &b in p.bits() {
            match &node.kind {
                StepKind::Leaf(_) => return 0.0,
                StepKind::Branch(l, r) => node = if b { r } else { l },
            }
        }
        match &node.kind {
            StepKind::Leaf(_) => 0.0,
            StepKind::Branch(l, r) => r.avg - l.avg,
        }
    }

    /// Lebesgue measure of `{x: f(x) >= c}`; leaves equal to `c` count fully.
    pub fn level_set_measure(&self, c: f64) -> f64 {
        // Memoized on node identity so shared subtrees are visited once; the
        // min/max caches resolve fully-above/fully-below subtrees in O(1).
        let mut memo: HashMap<*const StepNode, f64> = HashMap::new();
        let mut stack: Vec<(Arc<StepNode>, bool)> = vec![(self.root.clone(), false)];
        while let Some((node, children_done)) = stack.pop() {
            let key = Arc::as_ptr(&node);
            if memo.contains_key(&key) {
                continue;
            }
            if node.min >= c {
                memo.insert(key, 1.0);
                continue;
            }
            if node.max < c {
                memo.insert(key, 0.0);
                continue;
            }
            match &node.kind {
                StepKind::Leaf(v) => {
                    memo.insert(key, if *v >= c { 1.0 } else { 0.0 });
                }
                StepKind::Branch(l, r) => {
                    if children_done {
                        let m = 0.5 * (memo[&Arc::as_ptr(l)] + memo[&Arc::as_ptr(r)]);
                        memo.insert(key, m);
                    } else {
                        stack.push((node.clone(), true));
                        stack.push((l.clone(), false));
                        stack.push((r.clone(), false));
                    }
                }
            }
        }
        memo[&Arc::as_ptr(&self.root)]
    }

    /// Leafwise negation; structure and sharing preserved.
    pub fn negated(&self) -> StepFunction {
        StepFunction { root: map_step(&self.root, &|v| -v) }
    }

    /// Leafwise absolute value; structure and sharing preserved.
    pub fn abs_values(&self) -> StepFunction {
        StepFunction { root: map_step(&self.root, &|v| v.abs()) }
    }

    /// Replace the subinterval of `p` by `sub` rescaled onto it, splitting
    /// leaf constants on the way down as needed. Everything outside `p` is
    /// untouched. Uses [`DEFAULT_DEPTH_CAP`].
    pub fn graft(&self, p: &DyadicPath, sub: &StepFunction) -> Result<StepFunction> {
        self.graft_capped(p, sub, DEFAULT_DEPTH_CAP)
    }

    pub fn graft_capped(&self, p: &DyadicPath, sub: &StepFunction, cap: u32) -> Result<StepFunction> {
        let needed = p.depth() + sub.depth();
        if needed > cap {
            return Err(Error::DepthCap { cap, needed });
        }
        fn go(node: &Arc<StepNode>, bits: &[bool], sub: &Arc<StepNode>) -> Arc<StepNode> {
            match bits.split_first() {
                None => sub.clone(),
                Some((&b, rest)) => {
                    let (l, r) = match &node.kind {
                        StepKind::Branch(l, r) => (l.clone(), r.clone()),
                        // Entering a leaf region: a constant subdivides losslessly.
                        StepKind::Leaf(v) => (StepNode::leaf(*v), StepNode::leaf(*v)),
                    };
                    if b {
                        StepNode::branch(l, go(&r, rest, sub))
                    } else {
                        StepNode::branch(go(&l, rest, sub), r)
                    }
                }
            }
        }
        Ok(StepFunction {
            root: go(&self.root, p.bits(), &sub.root),
        })
    }

    /// Leaves with their depths, in left-to-right order. Errors if the
    /// expansion exceeds `max_leaves`.
    pub fn leaves(&self, max_leaves: u128) -> Result<Vec<(u32, f64)>> {
        if self.root.leaves > max_leaves {
            return Err(Error::BudgetExceeded {
                needed: self.root.leaves,
                budget: max_leaves,
            });
        }
        let mut out = Vec::new();
        let mut stack: Vec<(Arc<StepNode>, u32)> = vec![(self.root.clone(), 0)];
        while let Some((node, d)) = stack.pop() {
            match &node.kind {
                StepKind::Leaf(v) => out.push((d, *v)),
                StepKind::Branch(l, r) => {
                    stack.push((r.clone(), d + 1));
                    stack.push((l.clone(), d + 1));
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        if self.root.leaves > MAX_JSON_LEAVES {
            return Err(Error::BudgetExceeded {
                needed: self.root.leaves,
                budget: MAX_JSON_LEAVES,
            });
        }
        if self.root.depth > MAX_JSON_DEPTH {
            return Err(Error::DepthCap {
                cap: MAX_JSON_DEPTH,
                needed: self.root.depth,
            });
        }
        let node = build_json(&self.root, &|n| match &n.kind {
            StepKind::Leaf(v) => LeafOrPair::Step(*v),
            StepKind::Branch(l, r) => LeafOrPair::Children(l.clone(), r.clone()),
        });
        Ok(serde_json::json!({ "kind": "step", "root": node }))
    }

    pub fn from_json(v: &serde_json::Value) -> Result<StepFunction> {
        expect_kind(v, "step")?;
        let root = parse_step_node(v.get("root").ok_or_else(|| miss("root"))?)?;
        Ok(StepFunction { root })
    }
}

// ---------------------------------------------------------------------------
// Admissible pairs
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum PairKind {
    Leaf { phi: f64, psi: f64 },
    Branch(Arc<PairNode>, Arc<PairNode>),
}

#[derive(Debug)]
struct PairNode {
    kind: PairKind,
    phi_avg: f64,
    psi_avg: f64,
    abs_phi_avg: f64,
    /// Measure fraction of `{psi >= 0}` within this subtree.
    payoff: f64,
    psi_min: f64,
    psi_max: f64,
    /// Max over internal nodes of `||delta phi| - |delta psi||`.
    residual: f64,
    depth: u32,
    leaves: u128,
}

impl PairNode {
    fn leaf(phi: f64, psi: f64) -> Arc<Self> {
        Arc::new(PairNode {
            kind: PairKind::Leaf { phi, psi },
            phi_avg: phi,
            psi_avg: psi,
            abs_phi_avg: phi.abs(),
            payoff: if psi >= 0.0 { 1.0 } else { 0.0 },
            psi_min: psi,
            psi_max: psi,
            residual: 0.0,
            depth: 0,
            leaves: 1,
        })
    }

    fn branch(l: Arc<PairNode>, r: Arc<PairNode>) -> Arc<Self> {
        let d_phi = (r.phi_avg - l.phi_avg).abs();
        let d_psi = (r.psi_avg - l.psi_avg).abs();
        let here = (d_phi - d_psi).abs();
        Arc::new(PairNode {
            phi_avg: 0.5 * (l.phi_avg + r.phi_avg),
            psi_avg: 0.5 * (l.psi_avg + r.psi_avg),
            abs_phi_avg: 0.5 * (l.abs_phi_avg + r.abs_phi_avg),
            payoff: 0.5 * (l.payoff + r.payoff),
            psi_min: l.psi_min.min(r.psi_min),
            psi_max: l.psi_max.max(r.psi_max),
            residual: here.max(l.residual).max(r.residual),
            depth: 1 + l.depth.max(r.depth),
            leaves: l.leaves.saturating_add(r.leaves),
            kind: PairKind::Branch(l, r),
        })
    }
}

/// A pair `(phi, psi)` of step functions on a common partition with
/// `|delta phi| = |delta psi|` at every internal node.
///
/// The pair's *point* is `(g, f, F) = (mean psi, mean phi, mean |phi|)` and
/// its *payoff* is the measure of `{psi >= 0}` (value exactly `0` counts).
#[derive(Debug, Clone)]
pub struct AdmissiblePair {
    root: Arc<PairNode>,
}

/// One level of structure, for external traversals.
pub enum PairView {
    Leaf { phi: f64, psi: f64 },
    Branch(AdmissiblePair, AdmissiblePair),
}

impl AdmissiblePair {
    /// Constant pair on `[0,1)`.
    pub fn leaf(phi: f64, psi: f64) -> Self {
        Self { root: PairNode::leaf(phi, psi) }
    }

    /// Concatenate `left` on `[0,1/2)` with `right` on `[1/2,1)`. Fails
    /// unless the averages jump by the same absolute amount in both
    /// components (tolerance [`ADMISSIBILITY_TOL`], absolute).
    pub fn glue(left: &AdmissiblePair, right: &AdmissiblePair) -> Result<AdmissiblePair> {
        let df = (right.root.phi_avg - left.root.phi_avg).abs();
        let dg = (right.root.psi_avg - left.root.psi_avg).abs();
        if (df - dg).abs() > ADMISSIBILITY_TOL {
            return Err(Error::GlueMismatch { df, dg, tol: ADMISSIBILITY_TOL });
        }
        Ok(AdmissiblePair {
            root: PairNode::branch(left.root.clone(), right.root.clone()),
        })
    }

    /// Pair two step functions of identical tree shape. Does not require
    /// admissibility: the caller can interrogate [`Self::residual`]. Shared
    /// subtrees are zipped once.
    pub fn zip(phi: &StepFunction, psi: &StepFunction) -> Result<AdmissiblePair> {
        let mut memo: HashMap<(*const StepNode, *const StepNode), Arc<PairNode>> = HashMap::new();
        let mut stack: Vec<(Arc<StepNode>, Arc<StepNode>, bool)> =
            vec![(phi.root.clone(), psi.root.clone(), false)];
        while let Some((a, b, children_done)) = stack.pop() {
            let key = (Arc::as_ptr(&a), Arc::as_ptr(&b));
            if memo.contains_key(&key) {
                continue;
            }
            match (&a.kind, &b.kind) {
                (StepKind::Leaf(x), StepKind::Leaf(y)) => {
                    memo.insert(key, PairNode::leaf(*x, *y));
                }
                (StepKind::Branch(al, ar), StepKind::Branch(bl, br)) => {
                    if children_done {
                        let l = memo[&(Arc::as_ptr(al), Arc::as_ptr(bl))].clone();
                        let r = memo[&(Arc::as_ptr(ar), Arc::as_ptr(br))].clone();
                        memo.insert(key, PairNode::branch(l, r));
                    } else {
                        stack.push((a.clone(), b.clone(), true));
                        stack.push((al.clone(), bl.clone(), false));
                        stack.push((ar.clone(), br.clone(), false));
                    }
                }
                _ => {
                    return Err(Error::Format(
                        "cannot pair step functions with different tree shapes".into(),
                    ))
                }
            }
        }
        Ok(AdmissiblePair {
            root: memo[&(Arc::as_ptr(&phi.root), Arc::as_ptr(&psi.root))].clone(),
        })
    }

    pub fn view(&self) -> PairView {
        match &self.root.kind {
            PairKind::Leaf { phi, psi } => PairView::Leaf { phi: *phi, psi: *psi },
            PairKind::Branch(l, r) => PairView::Branch(
                AdmissiblePair { root: l.clone() },
                AdmissiblePair { root: r.clone() },
            ),
        }
    }

    /// `(g, f, F)` = (mean of psi, mean of phi, mean of |phi|).
    pub fn point(&self) -> crate::bellman::PointGff {
        crate::bellman::PointGff {
            g: self.root.psi_avg,
            f: self.root.phi_avg,
            big_f: self.root.abs_phi_avg,
        }
    }

    /// Measure of `{psi >= 0}`.
    pub fn payoff_measure(&self) -> f64 {
        self.root.payoff
    }

    /// Measure of `{psi >= c}`.
    pub fn psi_level_set(&self, c: f64) -> f64 {
        let mut memo: HashMap<*const PairNode, f64> = HashMap::new();
        let mut stack: Vec<(Arc<PairNode>, bool)> = vec![(self.root.clone(), false)];
        while let Some((node, children_done)) = stack.pop() {
            let key = Arc::as_ptr(&node);
            if memo.contains_key(&key) {
                continue;
            }
            if node.psi_min >= c {
                memo.insert(key, 1.0);
                continue;
            }
            if node.psi_max < c {
                memo.insert(key, 0.0);
                continue;
            }
            match &node.kind {
                PairKind::Leaf { psi, .. } => {
                    memo.insert(key, if *psi >= c { 1.0 } else { 0.0 });
                }
                PairKind::Branch(l, r) => {
                    if children_done {
                        let m = 0.5 * (memo[&Arc::as_ptr(l)] + memo[&Arc::as_ptr(r)]);
                        memo.insert(key, m);
                    } else {
                        stack.push((node.clone(), true));
                        stack.push((l.clone(), false));
                        stack.push((r.clone(), false));
                    }
                }
            }
        }
        memo[&Arc::as_ptr(&self.root)]
    }

    /// Worst internal-node admissibility residual `||dphi| - |dpsi||`.
    pub fn residual(&self) -> f64 {
        self.root.residual
    }

    pub fn depth(&self) -> u32 {
        self.root.depth
    }

    pub fn leaf_count(&self) -> u128 {
        self.root.leaves
    }

    /// Stable identity of the underlying shared node, for traversal memos.
    pub(crate) fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.root) as usize
    }

    /// Leaf values scaled by `s > 0`, with `phi` optionally negated. The
    /// point maps to `(s*g, +-s*f, s*F)`; the payoff measure is unchanged.
    pub fn scaled(&self, s: f64, negate_phi: bool) -> Result<AdmissiblePair> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParams(format!("scale must be positive, got {s}")));
        }
        let sf = if negate_phi { -s } else { s };
        let root = map_pair(&self.root, &|phi, psi| (sf * phi, s * psi));
        Ok(AdmissiblePair { root })
    }

    /// First component as a step function (shared subtrees stay shared).
    pub fn phi(&self) -> StepFunction {
        StepFunction { root: extract(&self.root, true) }
    }

    /// Second component as a step function.
    pub fn psi(&self) -> StepFunction {
        StepFunction { root: extract(&self.root, false) }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        if self.root.leaves > MAX_JSON_LEAVES {
            return Err(Error::BudgetExceeded {
                needed: self.root.leaves,
                budget: MAX_JSON_LEAVES,
            });
        }
        if self.root.depth > MAX_JSON_DEPTH {
            return Err(Error::DepthCap {
                cap: MAX_JSON_DEPTH,
                needed: self.root.depth,
            });
        }
        let node = build_json(&self.root, &|n| match &n.kind {
            PairKind::Leaf { phi, psi } => LeafOrPair::Pair(*phi, *psi),
            PairKind::Branch(l, r) => LeafOrPair::Children(l.clone(), r.clone()),
        });
        Ok(serde_json::json!({ "kind": "pair", "root": node }))
    }

    pub fn from_json(v: &serde_json::Value) -> Result<AdmissiblePair> {
        expect_kind(v, "pair")?;
        let root = parse_pair_node(v.get("root").ok_or_else(|| miss("root"))?)?;
        Ok(AdmissiblePair { root })
    }
}

/// Map leaf values over a step DAG, preserving sharing; iterative.
fn map_step(root: &Arc<StepNode>, f: &dyn Fn(f64) -> f64) -> Arc<StepNode> {
    let mut memo: HashMap<*const StepNode, Arc<StepNode>> = HashMap::new();
    let mut stack: Vec<(Arc<StepNode>, bool)> = vec![(root.clone(), false)];
    while let Some((node, children_done)) = stack.pop() {
        let key = Arc::as_ptr(&node);
        if memo.contains_key(&key) {
            continue;
        }
        match &node.kind {
            StepKind::Leaf(v) => {
                memo.insert(key, StepNode::leaf(f(*v)));
            }
            StepKind::Branch(l, r) => {
                if children_done {
                    let nl = memo[&Arc::as_ptr(l)].clone();
                    let nr = memo[&Arc::as_ptr(r)].clone();
                    memo.insert(key, StepNode::branch(nl, nr));
                } else {
                    stack.push((node.clone(), true));
                    stack.push((l.clone(), false));
                    stack.push((r.clone(), false));
                }
            }
        }
    }
    memo[&Arc::as_ptr(root)].clone()
}

/// Map leaf values over a pair DAG, preserving sharing; iterative.
fn map_pair(root: &Arc<PairNode>, f: &dyn Fn(f64, f64) -> (f64, f64)) -> Arc<PairNode> {
    let mut memo: HashMap<*const PairNode, Arc<PairNode>> = HashMap::new();
    let mut stack: Vec<(Arc<PairNode>, bool)> = vec![(root.clone(), false)];
    while let Some((node, children_done)) = stack.pop() {
        let key = Arc::as_ptr(&node);
        if memo.contains_key(&key) {
            continue;
        }
        match &node.kind {
            PairKind::Leaf { phi, psi } => {
                let (a, b) = f(*phi, *psi);
                memo.insert(key, PairNode::leaf(a, b));
            }
            PairKind::Branch(l, r) => {
                if children_done {
                    let nl = memo[&Arc::as_ptr(l)].clone();
                    let nr = memo[&Arc::as_ptr(r)].clone();
                    memo.insert(key, PairNode::branch(nl, nr));
                } else {
                    stack.push((node.clone(), true));
                    stack.push((l.clone(), false));
                    stack.push((r.clone(), false));
                }
            }
        }
    }
    memo[&Arc::as_ptr(root)].clone()
}

fn extract(root: &Arc<PairNode>, first: bool) -> Arc<StepNode> {
    let mut memo: HashMap<*const PairNode, Arc<StepNode>> = HashMap::new();
    let mut stack: Vec<(Arc<PairNode>, bool)> = vec![(root.clone(), false)];
    while let Some((node, children_done)) = stack.pop() {
        let key = Arc::as_ptr(&node);
        if memo.contains_key(&key) {
            continue;
        }
        match &node.kind {
            PairKind::Leaf { phi, psi } => {
                memo.insert(key, StepNode::leaf(if first { *phi } else { *psi }));
            }
            PairKind::Branch(l, r) => {
                if children_done {
                    let nl = memo[&Arc::as_ptr(l)].clone();
                    let nr = memo[&Arc::as_ptr(r)].clone();
                    memo.insert(key, StepNode::branch(nl, nr));
                } else {
                    stack.push((node.clone(), true));
                    stack.push((l.clone(), false));
                    stack.push((r.clone(), false));
                }
            }
        }
    }
    memo[&Arc::as_ptr(root)].clone()
}

// ---------------------------------------------------------------------------
// Sign assignments
// ---------------------------------------------------------------------------

/// Map from dyadic node paths to `+1`/`-1`; unspecified paths default to the
/// assignment's base sign (`+1` unless stated otherwise).
#[derive(Debug, Clone)]
pub struct SignAssignment {
    default_sign: i8,
    overrides: HashMap<DyadicPath, i8>,
}

impl Default for SignAssignment {
    fn default() -> Self {
        Self::all(1)
    }
}

impl SignAssignment {
    /// Constant assignment; `sign` must be `+1` or `-1`.
    pub fn all(sign: i8) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
        Self { default_sign: sign, overrides: HashMap::new() }
    }

    /// Override the sign at one path.
    pub fn with(mut self, p: DyadicPath, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
        self.overrides.insert(p, sign);
        self
    }

    pub fn sign(&self, p: &DyadicPath) -> i8 {
        *self.overrides.get(p).unwrap_or(&self.default_sign)
    }
}

// ---------------------------------------------------------------------------
// JSON plumbing (shared schema: {"kind": "pair"|"step", "root": node},
// node = {"left":, "right":} | {"phi":, "psi":} | {"val":}).
// ---------------------------------------------------------------------------

enum LeafOrPair<T> {
    Step(f64),
    Pair(f64, f64),
    Children(Arc<T>, Arc<T>),
}

/// Bottom-up JSON assembly with an explicit stack; recursion-free because
/// tree depths routinely exceed safe stack budgets.
fn build_json<T>(
    root: &Arc<T>,
    classify: &dyn Fn(&T) -> LeafOrPair<T>,
) -> serde_json::Value {
    let mut done: HashMap<*const T, serde_json::Value> = HashMap::new();
    let mut stack: Vec<(Arc<T>, bool)> = vec![(root.clone(), false)];
    while let Some((node, children_done)) = stack.pop() {
        let key = Arc::as_ptr(&node);
        if done.contains_key(&key) {
            continue;
        }
        match classify(&node) {
            LeafOrPair::Step(v) => {
                done.insert(key, serde_json::json!({ "val": v }));
            }
            LeafOrPair::Pair(a, b) => {
                done.insert(key, serde_json::json!({ "phi": a, "psi": b }));
            }
            LeafOrPair::Children(l, r) => {
                if children_done {
                    let lv = done[&Arc::as_ptr(&l)].clone();
                    let rv = done[&Arc::as_ptr(&r)].clone();
                    done.insert(key, serde_json::json!({ "left": lv, "right": rv }));
                } else {
                    stack.push((node.clone(), true));
                    stack.push((l, false));
                    stack.push((r, false));
                }
            }
        }
    }
    done.remove(&Arc::as_ptr(root)).expect("root assembled")
}

fn miss(field: &str) -> Error {
    Error::Format(format!("missing field {field:?}"))
}

fn expect_kind(v: &serde_json::Value, want: &str) -> Result<()> {
    match v.get("kind").and_then(|k| k.as_str()) {
        Some(k) if k == want => Ok(()),
        Some(k) => Err(Error::Format(format!("expected kind {want:?}, found {k:?}"))),
        None => Err(miss("kind")),
    }
}

fn num(v: &serde_json::Value, field: &str) -> Result<f64> {
    v.get(field)
        .and_then(|x| x.as_f64())
        .ok_or_else(|| Error::Format(format!("field {field:?} must be a number")))
}

fn parse_step_node(v: &serde_json::Value) -> Result<Arc<StepNode>> {
    // serde_json's own parser caps nesting depth, so recursion is safe here.
    if v.get("val").is_some() {
        return Ok(StepNode::leaf(num(v, "val")?));
    }
    if v.get("left").is_some() || v.get("right").is_some() {
        let l = parse_step_node(v.get("left").ok_or_else(|| miss("left"))?)?;
        let r = parse_step_node(v.get("right").ok_or_else(|| miss("right"))?)?;
        return Ok(StepNode::branch(l, r));
    }
    Err(Error::Format("node must carry \"val\" or \"left\"/\"right\"".into()))
}

fn parse_pair_node(v: &serde_json::Value) -> Result<Arc<PairNode>> {
    if v.get("phi").is_some() || v.get("psi").is_some() {
        return Ok(PairNode::leaf(num(v, "phi")?, num(v, "psi")?));
    }
    if v.get("left").is_some() || v.get("right").is_some() {
        let l = parse_pair_node(v.get("left").ok_or_else(|| miss("left"))?)?;
        let r = parse_pair_node(v.get("right").ok_or_else(|| miss("right"))?)?;
        return Ok(PairNode::branch(l, r));
    }
    Err(Error::Format("node must carry \"phi\"/\"psi\" or \"left\"/\"right\"".into()))
}
