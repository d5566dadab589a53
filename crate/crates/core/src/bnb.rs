//! Exact binary IP by best-bound-first branch-and-bound.
//!
//! Every node's LP relaxation is solved when the node is created and its
//! value is the node's priority. The open node with the largest bound is
//! always expanded next (ties go to the node created first), so the sequence
//! of expanded bounds is non-increasing; the solver counts violations of that
//! order instead of trusting it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{Basis, LpModel, LpOptions, LpSolution, CLASSIFY_TOL};

/// Bound comparisons: prune at `bound <= incumbent + PRUNE_TOL`.
pub const PRUNE_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchRule {
    /// Coordinate closest to 1/2, lowest index on ties.
    #[default]
    MostFractional,
    /// Lowest-index fractional coordinate.
    FirstFractional,
}

#[derive(Debug, Clone, Copy)]
pub struct BnbOptions {
    pub node_limit: usize,
    pub branch: BranchRule,
    pub warm_start: bool,
    /// Disable to keep every feasible node regardless of its bound.
    pub prune: bool,
    pub lp: LpOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            node_limit: 1_000_000,
            branch: BranchRule::MostFractional,
            warm_start: true,
            prune: true,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnbStatus {
    Optimal,
    NodeLimit,
    Infeasible,
}

impl BnbStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BnbStatus::Optimal => "optimal",
            BnbStatus::NodeLimit => "node_limit",
            BnbStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BnbResult {
    /// Incumbent value; `-inf` when no feasible point was found.
    pub opt_value: f64,
    /// Incumbent as a 0/1 vector.
    pub x_opt: Option<Vec<f64>>,
    /// Tree size, root included.
    pub nodes_created: usize,
    pub nodes_expanded: usize,
    pub incumbent_updates: usize,
    pub status: BnbStatus,
    /// Largest bound of any unexplored node (equals `opt_value` when optimal).
    pub best_bound: f64,
    /// Expanded nodes whose bound exceeded the previous one by more than [`PRUNE_TOL`].
    pub order_violations: usize,
    pub max_depth: usize,
}

/// A node of the search tree: the fixings and what its LP told us.
#[derive(Debug, Clone)]
pub struct BnbNode {
    pub fixed0: Vec<usize>,
    pub fixed1: Vec<usize>,
    pub bound: f64,
    pub depth: usize,
    seq: usize,
    /// `None` when the node LP is integral.
    branch_on: Option<usize>,
    basis: Basis,
}

impl PartialEq for BnbNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BnbNode {}

impl PartialOrd for BnbNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BnbNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Coordinate to branch on, or an error if `x` is integral.
pub fn branch_variable(x: &[f64], rule: BranchRule) -> Result<usize> {
    let frac = |v: f64| v.min(1.0 - v);
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in x.iter().enumerate() {
        let f = frac(v);
        if f <= CLASSIFY_TOL {
            continue;
        }
        match rule {
            BranchRule::FirstFractional => return Ok(i),
            BranchRule::MostFractional => {
                if best.is_none_or(|(_, bf)| f > bf + 1e-12) {
                    best = Some((i, f));
                }
            }
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::domain("branch_variable called on an integral LP solution"))
}

struct Tree<'a> {
    inst: &'a Instance,
    model: LpModel,
    opts: BnbOptions,
    seq: usize,
    nodes_created: usize,
}

impl Tree<'_> {
    fn bounds(&self, fixed0: &[usize], fixed1: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let n = self.inst.n;
        let (mut lo, mut hi) = (vec![0.0; n], vec![1.0; n]);
        for &i in fixed0 {
            hi[i] = 0.0;
        }
        for &i in fixed1 {
            lo[i] = 1.0;
        }
        (lo, hi)
    }

    /// Creates a node; `Ok(None)` when its LP is infeasible.
    fn make_node(
        &mut self,
        fixed0: Vec<usize>,
        fixed1: Vec<usize>,
        depth: usize,
        warm: Option<&Basis>,
    ) -> Result<Option<(BnbNode, LpSolution)>> {
        self.nodes_created += 1;
        let (lo, hi) = self.bounds(&fixed0, &fixed1);
        let warm = if self.opts.warm_start { warm } else { None };
        let sol = match self.model.solve(&lo, &hi, warm, &self.opts.lp) {
            Ok(sol) => sol,
            Err(Error::Infeasible { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let branch_on = if sol.is_integral() {
            None
        } else {
            Some(branch_variable(&sol.x_star, self.opts.branch)?)
        };
        self.seq += 1;
        let node = BnbNode {
            fixed0,
            fixed1,
            bound: sol.value,
            depth,
            seq: self.seq,
            branch_on,
            basis: sol.basis.clone(),
        };
        Ok(Some((node, sol)))
    }
}

/// Solves the binary IP exactly unless `node_limit` nodes are created first.
pub fn solve_ip(inst: &Instance, opts: &BnbOptions) -> Result<BnbResult> {
    if opts.node_limit == 0 {
        return Err(Error::domain("node_limit must be at least 1"));
    }
    let mut tree = Tree {
        inst,
        model: LpModel::new(inst),
        opts: *opts,
        seq: 0,
        nodes_created: 0,
    };
    let mut result = BnbResult {
        opt_value: f64::NEG_INFINITY,
        x_opt: None,
        nodes_created: 0,
        nodes_expanded: 0,
        incumbent_updates: 0,
        status: BnbStatus::Optimal,
        best_bound: f64::NEG_INFINITY,
        order_violations: 0,
        max_depth: 0,
    };
    let mut heap = BinaryHeap::new();
    if let Some((root, _)) = tree.make_node(Vec::new(), Vec::new(), 0, None)? {
        heap.push(root);
    }
    let mut last_bound = f64::INFINITY;
    let mut hit_limit: Option<f64> = None;

    while let Some(node) = heap.pop() {
        if opts.prune && node.bound <= result.opt_value + PRUNE_TOL {
            // Everything left is no better.
            heap.clear();
            break;
        }
        if node.bound > last_bound + PRUNE_TOL {
            result.order_violations += 1;
        }
        debug_assert!(
            node.bound <= last_bound + 1e-7,
            "best-bound order broken: {} after {}",
            node.bound,
            last_bound
        );
        last_bound = node.bound;
        result.nodes_expanded += 1;
        result.max_depth = result.max_depth.max(node.depth);

        let Some(var) = node.branch_on else {
            let (lo, hi) = tree.bounds(&node.fixed0, &node.fixed1);
            let sol = tree.model.solve(&lo, &hi, Some(&node.basis), &opts.lp)?;
            let x = sol.rounded();
            if inst.is_feasible(&x, FEAS_TOL) {
                let value = inst.objective(&x);
                if value > result.opt_value + PRUNE_TOL || result.x_opt.is_none() {
                    result.opt_value = value;
                    result.x_opt = Some(x);
                    result.incumbent_updates += 1;
                }
            }
            continue;
        };

        let mut children_done = true;
        for fix_one in [false, true] {
            if tree.nodes_created >= opts.node_limit {
                children_done = false;
                break;
            }
            let (mut f0, mut f1) = (node.fixed0.clone(), node.fixed1.clone());
            if fix_one {
                f1.push(var);
            } else {
                f0.push(var);
            }
            if let Some((child, _)) = tree.make_node(f0, f1, node.depth + 1, Some(&node.basis))? {
                if opts.prune && child.bound <= result.opt_value + PRUNE_TOL {
                    continue;
                }
                heap.push(child);
            }
        }
        if !children_done {
            hit_limit = Some(node.bound);
            break;
        }
    }

    result.nodes_created = tree.nodes_created;
    if let Some(open_bound) = hit_limit {
        let queued = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
        result.status = BnbStatus::NodeLimit;
        result.best_bound = open_bound.max(queued).max(result.opt_value);
    } else if result.x_opt.is_none() {
        result.status = BnbStatus::Infeasible;
    } else {
        result.status = BnbStatus::Optimal;
        result.best_bound = result.opt_value;
    }
    Ok(result)
}

/// Largest brute-force dimension.
pub const BRUTE_FORCE_MAX_N: usize = 25;

/// Exhaustive optimum over all `2^n` binary points (Gray-code order).
/// Returns `None` when no point is feasible.
pub fn brute_force_ip(inst: &Instance) -> Result<Option<(f64, Vec<f64>)>> {
    let (m, n) = (inst.m, inst.n);
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Budget(format!(
            "brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|j| inst.column(j)).collect();
    let mut ax = vec![0.0; m];
    let mut cx = 0.0;
    let mut mask: u32 = 0;
    let feasible = |ax: &[f64]| ax.iter().zip(&inst.b).all(|(a, b)| *a <= b + FEAS_TOL);
    let mut best: Option<(f64, u32)> = feasible(&ax).then_some((0.0, 0));
    for step in 1u32..(1u32 << n) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        let sign = if mask & (1 << bit) != 0 { 1.0 } else { -1.0 };
        for (a, col) in ax.iter_mut().zip(&cols[bit]) {
            *a += sign * col;
        }
        cx += sign * inst.c[bit];
        if feasible(&ax) && best.is_none_or(|(v, _)| cx > v) {
            best = Some((cx, mask));
        }
    }
    Ok(best.map(|(_, mask)| {
        let x: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
        (inst.objective(&x), x)
    }))
}

/// `val_LP - val_IP`, clipped at zero.
pub fn ipgap(inst: &Instance, opts: &BnbOptions) -> Result<f64> {
    let lp = crate::lp::solve_lp_with(inst, &opts.lp)?;
    let ip = solve_ip(inst, opts)?;
    match ip.status {
        BnbStatus::Optimal => Ok((lp.value - ip.opt_value).max(0.0)),
        BnbStatus::Infeasible => Err(Error::Infeasible { certificate: None }),
        BnbStatus::NodeLimit => Err(Error::Budget(format!(
            "node limit {} reached before the IP was solved",
            opts.node_limit
        ))),
    }
}
