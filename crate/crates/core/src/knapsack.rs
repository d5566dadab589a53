//! Exact counting of binary knapsack solutions.
//!
//! `K(w, g) = |{x in {0,1}^n : sum x_i w_i <= g}|` is the quantity that
//! controls best-bound-first tree sizes when `w` are reduced costs and `g`
//! is the integrality gap.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::LpSolution;
use crate::random::{gaussian_matrix, mixture_sample, RngHandle};
use crate::stats::mean_stderr;

pub const MAX_N: usize = 48;
/// Above this size counting switches to meet-in-the-middle.
pub const DFS_MAX_N: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    DfsPruned,
    MeetInMiddle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackCount {
    pub count: BigUint,
    pub capacity: f64,
    pub n: usize,
    pub method: CountMethod,
}

impl KnapsackCount {
    pub fn as_f64(&self) -> f64 {
        self.count.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Capacity slack `1e-12 n`, applied identically by both counting methods.
fn slack(n: usize) -> f64 {
    1e-12 * n as f64
}

fn check_inputs(weights: &[f64], capacity: f64) -> Result<()> {
    if weights.len() > MAX_N {
        return Err(Error::Budget(format!(
            "knapsack counting limited to n <= {MAX_N}, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::domain("knapsack weights must be finite and >= 0"));
    }
    if !(capacity.is_finite() && capacity >= 0.0) {
        return Err(Error::domain(format!("knapsack capacity must be >= 0, got {capacity}")));
    }
    Ok(())
}

/// Number of subsets of `weights` with sum at most `capacity`.
pub fn knapsack_count(weights: &[f64], capacity: f64) -> Result<KnapsackCount> {
    let method = if weights.len() > DFS_MAX_N {
        CountMethod::MeetInMiddle
    } else {
        CountMethod::DfsPruned
    };
    knapsack_count_with(weights, capacity, method)
}

pub fn knapsack_count_with(
    weights: &[f64],
    capacity: f64,
    method: CountMethod,
) -> Result<KnapsackCount> {
    check_inputs(weights, capacity)?;
    let n = weights.len();
    let cap = capacity + slack(n);
    let count = match method {
        CountMethod::DfsPruned => count_dfs(weights, cap),
        CountMethod::MeetInMiddle => count_mitm(weights, cap),
    };
    Ok(KnapsackCount {
        count: BigUint::from(count),
        capacity,
        n,
        method,
    })
}

fn count_dfs(weights: &[f64], cap: f64) -> u64 {
    let mut w = weights.to_vec();
    w.sort_by(|a, b| b.total_cmp(a));
    let n = w.len();
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + w[i];
    }
    fn rec(w: &[f64], tail: &[f64], i: usize, budget: f64) -> u64 {
        let n = w.len();
        if tail[i] <= budget {
            return 1u64 << (n - i);
        }
        // Sorted descending, so the smallest remaining weight is the last.
        if w[n - 1] > budget {
            return 1;
        }
        let mut total = rec(w, tail, i + 1, budget);
        if w[i] <= budget {
            total += rec(w, tail, i + 1, budget - w[i]);
        }
        total
    }
    rec(&w, &tail, 0, cap)
}

fn subset_sums(w: &[f64]) -> Vec<f64> {
    let mut sums = Vec::with_capacity(1 << w.len());
    sums.push(0.0);
    for &x in w {
        for j in 0..sums.len() {
            sums.push(sums[j] + x);
        }
    }
    sums
}

fn count_mitm(weights: &[f64], cap: f64) -> u64 {
    let (left, right) = weights.split_at(weights.len() / 2);
    let ls = subset_sums(left);
    let mut rs = subset_sums(right);
    rs.sort_by(f64::total_cmp);
    ls.iter()
        .filter(|&&l| l <= cap)
        .map(|&l| rs.partition_point(|&r| l + r <= cap) as u64)
        .sum()
}

/// Distribution of the knapsack weights `|omega_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightLaw {
    Uniform01,
    AbsGaussian,
    AbsMixture(f64),
}

impl WeightLaw {
    pub fn sample(&self, rng: &mut RngHandle) -> Result<f64> {
        Ok(match *self {
            WeightLaw::Uniform01 => rng.uniform(),
            WeightLaw::AbsGaussian => rng.normal().abs(),
            WeightLaw::AbsMixture(eps) => mixture_sample(eps, rng)?.abs(),
        })
    }
}

impl fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightLaw::Uniform01 => write!(f, "uniform01"),
            WeightLaw::AbsGaussian => write!(f, "absgauss"),
            WeightLaw::AbsMixture(eps) => write!(f, "absmix:{eps}"),
        }
    }
}

impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(WeightLaw::Uniform01),
            "absgauss" => Ok(WeightLaw::AbsGaussian),
            _ => {
                let eps = s
                    .strip_prefix("absmix:")
                    .and_then(|e| e.parse::<f64>().ok())
                    .filter(|e| (0.0..=1.0).contains(e))
                    .ok_or_else(|| {
                        Error::parse(
                            "dist",
                            format!("expected uniform01, absgauss or absmix:EPS, got `{s}`"),
                        )
                    })?;
                Ok(WeightLaw::AbsMixture(eps))
            }
        }
    }
}

/// The expected-count bound `exp(2 sqrt(2 n g))`.
pub fn count_bound(n: usize, g: f64) -> f64 {
    (2.0 * (2.0 * n as f64 * g).sqrt()).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackMc {
    pub n: usize,
    pub g: f64,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    /// Trials whose individual count exceeded `bound`.
    pub violations: usize,
    /// Per-trial exact counts, in trial order.
    pub counts: Vec<u64>,
}

impl KnapsackMc {
    /// Fraction of trials with count at least `threshold`.
    pub fn fraction_at_least(&self, threshold: u64) -> f64 {
        let hits = self.counts.iter().filter(|c| **c >= threshold).count();
        hits as f64 / self.trials as f64
    }
}

/// Monte Carlo mean of the exact count for i.i.d. weights from `law`.
/// Trial `i` draws its weights from stream `i` of `seed`.
pub fn knapsack_expectation_mc(
    n: usize,
    law: WeightLaw,
    g: f64,
    trials: usize,
    seed: u64,
) -> Result<KnapsackMc> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let counts: Vec<u64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngHandle::new(seed, trial);
            let w: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect::<Result<_>>()?;
            let c = knapsack_count(&w, g)?;
            Ok(c.count.to_u64().expect("n <= 48 fits in u64"))
        })
        .collect::<Result<_>>()?;
    let as_f: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let (mean, stderr) = mean_stderr(&as_f);
    let bound = count_bound(n, g);
    Ok(KnapsackMc {
        n,
        g,
        trials,
        mean,
        stderr,
        bound,
        violations: as_f.iter().filter(|c| **c > bound).count(),
        counts,
    })
}

/// Knapsack count with weights `|(A^T u - c)_i|` and capacity `gap`.
pub fn reduced_cost_knapsack(inst: &Instance, lp: &LpSolution, gap: f64) -> Result<KnapsackCount> {
    let lambda = &lp.u_star;
    lambda_knapsack(inst, lambda, gap)
}

/// Knapsack count for an arbitrary dual proxy `lambda`.
pub fn lambda_knapsack(inst: &Instance, lambda: &[f64], gap: f64) -> Result<KnapsackCount> {
    if lambda.len() != inst.m {
        return Err(Error::Dimension(format!(
            "lambda has length {}, instance has m = {}",
            lambda.len(),
            inst.m
        )));
    }
    let atu = inst.a.tr_mul_vec(lambda);
    let weights: Vec<f64> = atu.iter().zip(&inst.c).map(|(a, c)| (a - c).abs()).collect();
    knapsack_count(&weights, gap.max(0.0))
}

/// Unit vectors of `R^dim` spaced about `spacing` apart (`dim` is 2 or 3).
pub fn sphere_net(dim: usize, spacing: f64) -> Result<Vec<Vec<f64>>> {
    use std::f64::consts::PI;
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let count = (2.0 * PI / spacing).ceil() as usize;
            Ok((0..count)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / count as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect())
        }
        3 => {
            // Fibonacci lattice; each point covers area about spacing^2.
            let count = (4.0 * PI / (spacing * spacing)).ceil() as usize;
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::domain(format!("sphere nets are built for dimension <= 3, got {dim}"))),
    }
}

/// `||u^T W||_1` for a row-major `W`.
pub fn l1_projection(u: &[f64], w: &crate::numerics::DenseMatrix) -> f64 {
    w.tr_mul_vec(u).iter().map(|v| v.abs()).sum()
}

/// Monte Carlo frequency of `max_{|u|=1} ||u^T W||_1 >= 4n` for a Gaussian
/// `(m+1) x n` matrix `W`. The maximum is bounded above by `4/3` times its
/// value on a 0.25-net, so the reported rate over-estimates the true one.
pub fn logcon_tail_check(m: usize, n: usize, trials: usize, seed: u64, relaxed: bool) -> Result<f64> {
    let d = m + 1;
    if !relaxed && n < 100 * d {
        return Err(Error::domain(format!(
            "tail check needs n >= 100 (m+1) = {}, got n = {n}",
            100 * d
        )));
    }
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let spacing = 0.25;
    let net = sphere_net(d, spacing)?;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&trial| {
            let w = gaussian_matrix(d, n, &mut RngHandle::new(seed, trial));
            let best = net.iter().map(|u| l1_projection(u, &w)).fold(0.0, f64::max);
            best / (1.0 - spacing) >= 4.0 * n as f64
        })
        .count();
    Ok(hits as f64 / trials as f64)
}
