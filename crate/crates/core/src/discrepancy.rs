//! Subset-sum discrepancy: pick `k` of `a*k` vectors whose sum lies within
//! `theta` of a target in the infinity norm.
//!
//! [`disc_exact`] enumerates every `k`-subset and is the oracle for small
//! universes. [`disc_search`] is a swap local search for the sizes the
//! rounding pipeline needs. [`disc_success_mc`] estimates how often a good
//! subset exists for random columns.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{calibrate_theta, ln_binomial, universe_multiplier};
use crate::random::{gaussian_vector, mixture_sample, RngHandle};
use crate::stats::binomial_stderr;

/// Largest number of subsets [`disc_exact`] will enumerate.
pub const EXACT_BUDGET: f64 = 2e6;
/// Probability of a sideways move at a local minimum.
pub const SIDEWAYS_PROB: f64 = 0.1;
/// Moves without improving the restart's best, in units of `k`, before restarting.
pub const STAGNATION_FACTOR: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscInstance {
    pub columns: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub theta: f64,
    pub k: usize,
}

impl DiscInstance {
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>, theta: f64, k: usize) -> Result<Self> {
        if k == 0 || k > columns.len() {
            return Err(Error::domain(format!(
                "need 1 <= k <= {} columns, got k = {k}",
                columns.len()
            )));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::domain(format!("theta must be finite and >= 0, got {theta}")));
        }
        let m = target.len();
        if m == 0 {
            return Err(Error::Dimension("target must be nonempty".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != m {
                return Err(Error::Dimension(format!(
                    "column {j} has length {}, target has {m}",
                    col.len()
                )));
            }
        }
        let all = columns.iter().flatten().chain(&target);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("columns and target must be finite"));
        }
        Ok(DiscInstance {
            columns,
            target,
            theta,
            k,
        })
    }

    pub fn m(&self) -> usize {
        self.target.len()
    }

    /// Number of candidate columns, `a*k`.
    pub fn universe(&self) -> usize {
        self.columns.len()
    }

    /// `||sum_{j in subset} Y_j - D||_inf`, summing in increasing index order.
    pub fn deviation(&self, subset: &[usize]) -> f64 {
        let mut idx = subset.to_vec();
        idx.sort_unstable();
        let mut sum = vec![0.0; self.m()];
        for &j in &idx {
            for (s, y) in sum.iter_mut().zip(&self.columns[j]) {
                *s += y;
            }
        }
        inf_dist(&sum, &self.target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscOutcome {
    pub found: bool,
    /// Best subset examined, sorted; present even when `found` is false.
    pub subset: Vec<usize>,
    pub deviation: f64,
    pub evaluations: u64,
}

fn inf_dist(sum: &[f64], target: &[f64]) -> f64 {
    sum.iter().zip(target).fold(0.0, |acc, (s, d)| acc.max((s - d).abs()))
}

fn sq_dist(sum: &[f64], target: &[f64]) -> f64 {
    sum.iter().zip(target).map(|(s, d)| (s - d) * (s - d)).sum()
}

fn check_exact_budget(inst: &DiscInstance) -> Result<()> {
    let (n, k) = (inst.universe() as u64, inst.k as u64);
    if ln_binomial(n, k) > EXACT_BUDGET.ln() {
        return Err(Error::Budget(format!(
            "C({n}, {k}) subsets exceeds the exact budget of {EXACT_BUDGET}"
        )));
    }
    Ok(())
}

/// Depth-first walk over all k-subsets in lexicographic order; calls
/// `visit(subset, sum)` on each.
fn for_each_subset(inst: &DiscInstance, mut visit: impl FnMut(&[usize], &[f64])) {
    let (n, k, m) = (inst.universe(), inst.k, inst.m());
    let mut chosen = Vec::with_capacity(k);
    // sums[d] is the sum of the first d chosen columns.
    let mut sums = vec![vec![0.0; m]; k + 1];
    fn rec(
        inst: &DiscInstance,
        start: usize,
        n: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        sums: &mut [Vec<f64>],
        visit: &mut dyn FnMut(&[usize], &[f64]),
    ) {
        let depth = chosen.len();
        if depth == k {
            visit(chosen, &sums[k]);
            return;
        }
        for j in start..=(n - (k - depth)) {
            let (lo, hi) = sums.split_at_mut(depth + 1);
            for ((next, prev), y) in hi[0].iter_mut().zip(&lo[depth]).zip(&inst.columns[j]) {
                *next = prev + y;
            }
            chosen.push(j);
            rec(inst, j + 1, n, k, chosen, sums, visit);
            chosen.pop();
        }
    }
    rec(inst, 0, n, k, &mut chosen, &mut sums, &mut visit);
}

/// Minimum-deviation subset by full enumeration. Refuses more than
/// [`EXACT_BUDGET`] subsets.
pub fn disc_exact(inst: &DiscInstance) -> Result<DiscOutcome> {
    check_exact_budget(inst)?;
    let mut best = (f64::INFINITY, Vec::new());
    let mut evaluations = 0u64;
    for_each_subset(inst, |subset, sum| {
        evaluations += 1;
        let dev = inf_dist(sum, &inst.target);
        if dev < best.0 {
            best = (dev, subset.to_vec());
        }
    });
    Ok(DiscOutcome {
        found: best.0 <= inst.theta,
        subset: best.1,
        deviation: best.0,
        evaluations,
    })
}

/// Number of k-subsets within `theta` of the target.
pub fn disc_count(inst: &DiscInstance) -> Result<u64> {
    check_exact_budget(inst)?;
    let mut hits = 0u64;
    for_each_subset(inst, |_, sum| {
        if inf_dist(sum, &inst.target) <= inst.theta {
            hits += 1;
        }
    });
    Ok(hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub moves_per_restart: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 50,
            moves_per_restart: 1000,
        }
    }
}

/// Swap local search. Each restart starts from a uniformly random k-subset
/// and repeatedly applies the swap that most reduces the objective
/// `(||.||_inf, ||.||_2^2)` compared lexicographically. At a local minimum it
/// takes the least-bad swap with probability [`SIDEWAYS_PROB`] and a random
/// swap otherwise; after `STAGNATION_FACTOR * k` moves without beating the
/// restart's best it restarts. Stops as soon as the deviation is `<= theta`.
pub fn disc_search(inst: &DiscInstance, rng: &mut RngHandle, opts: SearchOptions) -> DiscOutcome {
    let (n, k, m) = (inst.universe(), inst.k, inst.m());
    let target = &inst.target;
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut evaluations = 0u64;
    let window = STAGNATION_FACTOR * k;

    'restarts: for _ in 0..opts.restarts.max(1) {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + rng.below(n - i);
            perm.swap(i, j);
        }
        let (mut inside, mut outside) = (perm[..k].to_vec(), perm[k..].to_vec());
        let mut sum = vec![0.0; m];
        for &j in &inside {
            for (s, y) in sum.iter_mut().zip(&inst.columns[j]) {
                *s += y;
            }
        }
        let mut cur = (inf_dist(&sum, target), sq_dist(&sum, target));
        evaluations += 1;
        let mut restart_best = cur;
        let mut stale = 0usize;
        let mut cand = vec![0.0; m];

        for _ in 0..opts.moves_per_restart {
            if best.as_ref().is_none_or(|b| (cur.0, cur.1) < (b.0, b.1)) {
                best = Some((cur.0, cur.1, inside.clone()));
            }
            if cur.0 <= inst.theta || stale >= window {
                break;
            }
            // Full neighbourhood scan for the best swap.
            let mut top: Option<((f64, f64), usize, usize)> = None;
            for (pi, &i) in inside.iter().enumerate() {
                for (po, &o) in outside.iter().enumerate() {
                    for ((c, s), (yi, yo)) in cand
                        .iter_mut()
                        .zip(&sum)
                        .zip(inst.columns[i].iter().zip(&inst.columns[o]))
                    {
                        *c = s - yi + yo;
                    }
                    let score = (inf_dist(&cand, target), sq_dist(&cand, target));
                    evaluations += 1;
                    if top.is_none_or(|(t, _, _)| score < t) {
                        top = Some((score, pi, po));
                    }
                }
            }
            let Some((score, mut pi, mut po)) = top else {
                // k == n: the only subset is the full set.
                break;
            };
            if score >= cur && rng.uniform() >= SIDEWAYS_PROB {
                pi = rng.below(k);
                po = rng.below(n - k);
            }
            let (i, o) = (inside[pi], outside[po]);
            for ((s, yi), yo) in sum.iter_mut().zip(&inst.columns[i]).zip(&inst.columns[o]) {
                *s += yo - yi;
            }
            inside[pi] = o;
            outside[po] = i;
            cur = (inf_dist(&sum, target), sq_dist(&sum, target));
            if cur < restart_best {
                restart_best = cur;
                stale = 0;
            } else {
                stale += 1;
            }
        }
        if best.as_ref().is_none_or(|b| (cur.0, cur.1) < (b.0, b.1)) {
            best = Some((cur.0, cur.1, inside.clone()));
        }
        if cur.0 <= inst.theta {
            break 'restarts;
        }
    }

    let (_, _, mut subset) = best.expect("at least one restart ran");
    subset.sort_unstable();
    // Recompute from scratch so the result is comparable with `disc_exact`.
    let deviation = inst.deviation(&subset);
    DiscOutcome {
        found: deviation <= inst.theta,
        subset,
        deviation,
        evaluations,
    }
}

/// Distribution of the columns in [`disc_success_mc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnLaw {
    Gaussian,
    /// Each coordinate is `sqrt(eps) U + sqrt(1-eps) Z`.
    Mixture(f64),
}

impl ColumnLaw {
    pub fn sample(&self, m: usize, rng: &mut RngHandle) -> Result<Vec<f64>> {
        match *self {
            ColumnLaw::Gaussian => Ok(gaussian_vector(m, rng)),
            ColumnLaw::Mixture(eps) => (0..m).map(|_| mixture_sample(eps, rng)).collect(),
        }
    }
}

impl fmt::Display for ColumnLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLaw::Gaussian => write!(f, "gaussian"),
            ColumnLaw::Mixture(eps) => write!(f, "mixture:{eps}"),
        }
    }
}

impl FromStr for ColumnLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "gaussian" => Ok(ColumnLaw::Gaussian),
            Some(("mixture", eps)) => {
                let eps: f64 = eps
                    .parse()
                    .map_err(|_| Error::parse("dist", format!("bad mixture weight `{eps}`")))?;
                if !(0.0..=1.0).contains(&eps) {
                    return Err(Error::parse("dist", format!("mixture weight {eps} outside [0, 1]")));
                }
                Ok(ColumnLaw::Mixture(eps))
            }
            _ => Err(Error::parse(
                "dist",
                format!("expected `gaussian` or `mixture:EPS`, got `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscMcConfig {
    pub m: usize,
    pub k: usize,
    /// Universe multiplier; defaults to `ceil(2 sqrt(m))`.
    pub a: Option<usize>,
    pub law: ColumnLaw,
    pub target: Vec<f64>,
    /// Overrides the calibrated `theta`.
    pub theta: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Search budget used when exact enumeration is too large.
    pub search: SearchOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscMode {
    Exact,
    /// Search failures do not prove nonexistence: the rate is a lower bound.
    SearchLowerBound,
}

impl DiscMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiscMode::Exact => "exact",
            DiscMode::SearchLowerBound => "search",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscMcResult {
    pub m: usize,
    pub k: usize,
    pub a: usize,
    pub theta: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub stderr: f64,
    pub mode: DiscMode,
}

/// Columns for trial `trial`; shared by the paired comparisons in tests.
pub fn draw_columns(
    law: ColumnLaw,
    m: usize,
    count: usize,
    seed: u64,
    trial: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = RngHandle::new(seed, trial);
    (0..count).map(|_| law.sample(m, &mut rng)).collect()
}

/// Fraction of trials in which a k-subset within `theta` of the target
/// exists, with its binomial standard error.
pub fn disc_success_mc(cfg: &DiscMcConfig) -> Result<DiscMcResult> {
    if cfg.trials < 100 {
        return Err(Error::domain(format!("need at least 100 trials, got {}", cfg.trials)));
    }
    if cfg.target.len() != cfg.m {
        return Err(Error::Dimension(format!(
            "target has length {}, m = {}",
            cfg.target.len(),
            cfg.m
        )));
    }
    let a = cfg.a.unwrap_or_else(|| universe_multiplier(cfg.m));
    let params = calibrate_theta(cfg.m, cfg.k)?;
    let theta = match cfg.theta {
        Some(t) => t,
        None if a == params.a => params.theta,
        None => {
            // The calibration identity with the requested universe.
            let ln_c = ln_binomial((a * cfg.k) as u64, cfg.k as u64);
            let k = cfg.k as f64;
            (2.0 * std::f64::consts::PI * k).sqrt() / 2.0 * (-ln_c / cfg.m as f64).exp()
        }
    };
    let universe = a * cfg.k;
    let exact = ln_binomial(universe as u64, cfg.k as u64) <= EXACT_BUDGET.ln();
    let hits: Vec<bool> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<bool> {
            let columns = draw_columns(cfg.law, cfg.m, universe, cfg.seed, trial)?;
            let inst = DiscInstance::new(columns, cfg.target.clone(), theta, cfg.k)?;
            if exact {
                Ok(disc_exact(&inst)?.found)
            } else {
                let mut rng = RngHandle::new(cfg.seed, trial).fork(1);
                Ok(disc_search(&inst, &mut rng, cfg.search).found)
            }
        })
        .collect::<Result<_>>()?;
    let successes = hits.iter().filter(|h| **h).count();
    let rate = successes as f64 / cfg.trials as f64;
    Ok(DiscMcResult {
        m: cfg.m,
        k: cfg.k,
        a,
        theta,
        trials: cfg.trials,
        successes,
        rate,
        stderr: binomial_stderr(rate, cfg.trials),
        mode: if exact {
            DiscMode::Exact
        } else {
            DiscMode::SearchLowerBound
        },
    })
}
