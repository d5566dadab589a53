//! Constructive rounding of an optimal LP vertex to a feasible binary point
//! with a certified gap.
//!
//! 1. Round the fractional coordinates `S` of `x*` at random, giving `x'`.
//! 2. Keep the zero-variables whose reduced cost is at most `t * delta`.
//! 3. Rotate `u*` onto the last axis, centre and scale the kept columns.
//! 4. In disjoint pools of `ceil(2 sqrt m) k` columns, search for a
//!    `k`-subset `T` whose sum hits `d' = A(x* - x') - theta' 1` to within
//!    `theta`; flipping `T` to one gives `x''` with `A x'' <= A x* <= b`.
//! 5. Verify `x''` directly and certify `val(x*) - val(x'')`.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::discrepancy::{disc_search, DiscInstance, SearchOptions};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{gap_formula, LpSolution};
use crate::numerics::{calibrate_theta, householder_to_axis, norm2, norm_inf, universe_multiplier, DenseMatrix};
use crate::random::{acceptance_ratio, RngHandle};

/// Feasibility tolerance for `A x'' <= b`.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingParams {
    /// Flip-set size.
    pub k: usize,
    /// Filtering width.
    pub delta: f64,
    /// Number of disjoint candidate pools.
    pub t: usize,
    /// Discrepancy tolerance; `None` uses the calibrated value for `(m, k)`.
    pub theta: Option<f64>,
    /// Slack tolerance; `None` uses `2 sqrt(m) theta`.
    pub theta_prime: Option<f64>,
    pub max_restarts: usize,
    pub moves_per_restart: usize,
    /// Attempts at the randomized rounding of `S`.
    pub max_round_tries: usize,
    /// Thin the filtered columns with the band rejection sampler.
    pub thin: bool,
}

impl RoundingParams {
    /// Small defaults: `k = ceil(2m(ln n + m))`, `delta = 4 sqrt(m) k / n`, `t = 5`.
    pub fn defaults_for(m: usize, n: usize) -> Self {
        let mf = m as f64;
        let k = (2.0 * mf * ((n as f64).ln() + mf)).ceil().max(1.0) as usize;
        Self::with_k(m, n, k)
    }

    /// Defaults with an explicit flip-set size.
    pub fn with_k(m: usize, n: usize, k: usize) -> Self {
        RoundingParams {
            k,
            delta: 4.0 * (m as f64).sqrt() * k as f64 / n as f64,
            t: 5,
            theta: None,
            theta_prime: None,
            max_restarts: 50,
            moves_per_restart: 1000,
            max_round_tries: 1000,
            thin: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.t == 0 {
            return Err(Error::domain("rounding needs k >= 1 and t >= 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::domain(format!("delta must be > 0, got {}", self.delta)));
        }
        for (name, v) in [("theta", self.theta), ("theta_prime", self.theta_prime)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::domain(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        if self.max_round_tries == 0 {
            return Err(Error::domain("max_round_tries must be >= 1"));
        }
        Ok(())
    }

    /// `(theta, theta')` for an `m`-row instance.
    pub fn resolve_theta(&self, m: usize) -> Result<(f64, f64)> {
        let theta = match self.theta {
            Some(t) => t,
            None => calibrate_theta(m, self.k)?.theta,
        };
        let theta_prime = self.theta_prime.unwrap_or(2.0 * (m as f64).sqrt() * theta);
        Ok((theta, theta_prime))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingCertificate {
    pub x_prime: Vec<f64>,
    /// Sorted indices flipped from 0 to 1.
    pub flip_set: Vec<usize>,
    pub x_double_prime: Vec<f64>,
    /// The search met `theta` and `A x'' <= b + FEAS_TOL` was verified.
    pub feasible: bool,
    /// `||A(x'' - x*)||_inf`.
    pub slack_inf_norm: f64,
    /// `val(x*) - val(x'')`; NaN when no flip set was found.
    pub certified_gap: f64,
    /// Pool that produced the flip set; `None` for the empty flip set or on failure.
    pub pool_index_used: Option<usize>,
    /// `t * delta`, the reduced-cost window the flip set was drawn from.
    pub filter_width: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Centred and scaled 0-columns of one pool.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredColumns {
    pub indices: Vec<usize>,
    /// `B_i = R A_i` as columns.
    pub rotated: DenseMatrix,
    /// `Sigma^{-1} (B_i - mu e_m)` as columns.
    pub normalized: DenseMatrix,
    pub rotation: DenseMatrix,
    pub mu_t: f64,
    pub sigma_t: f64,
}

/// Result of [`randomized_round`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedPoint {
    pub x_prime: Vec<f64>,
    /// `||A(x* - x')||_2` achieved.
    pub norm: f64,
    /// Target `C_max sqrt(|S|) / 2`.
    pub bound: f64,
    pub tries: usize,
}

fn fractional_support(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.min(1.0 - **v) > crate::lp::CLASSIFY_TOL)
        .map(|(i, _)| i)
        .collect()
}

/// Rounds each fractional coordinate of `x*` to one with probability `x*_i`,
/// retrying until `||A(x* - x')||_2 <= C_max sqrt(|S|) / 2`.
pub fn randomized_round(
    x_star: &[f64],
    a: &DenseMatrix,
    rng: &mut RngHandle,
    max_tries: usize,
) -> Result<RoundedPoint> {
    if x_star.len() != a.cols() {
        return Err(Error::Dimension(format!(
            "x has length {}, A has {} columns",
            x_star.len(),
            a.cols()
        )));
    }
    if x_star.iter().any(|v| !(-1e-9..=1.0 + 1e-9).contains(v)) {
        return Err(Error::domain("x* must lie in [0, 1]^n"));
    }
    let support = fractional_support(x_star);
    let base: Vec<f64> = x_star.iter().map(|v| v.round()).collect();
    if support.is_empty() {
        return Ok(RoundedPoint {
            x_prime: base,
            norm: 0.0,
            bound: 0.0,
            tries: 0,
        });
    }
    let cols: Vec<Vec<f64>> = support.iter().map(|&i| a.column(i)).collect();
    let c_max = cols.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    let bound = c_max * (support.len() as f64).sqrt() / 2.0;
    let mut best = f64::INFINITY;
    for tries in 1..=max_tries {
        let mut x = base.clone();
        let mut diff = vec![0.0; a.rows()];
        for (&i, col) in support.iter().zip(&cols) {
            x[i] = if rng.uniform() < x_star[i] { 1.0 } else { 0.0 };
            let d = x_star[i] - x[i];
            for (acc, v) in diff.iter_mut().zip(col) {
                *acc += d * v;
            }
        }
        let norm = norm2(&diff);
        // The bound can be attained with equality (|S| = 1, x* = 1/2).
        if norm <= bound * (1.0 + 1e-12) {
            return Ok(RoundedPoint {
                x_prime: x,
                norm,
                bound,
                tries,
            });
        }
        best = best.min(norm);
    }
    Err(Error::RoundingBoundNotMet {
        bound,
        best,
        tries: max_tries,
    })
}

/// Zero-variables with reduced cost magnitude at most `t * delta`.
pub fn filter_reduced_costs(lp: &LpSolution, delta: f64, t: usize) -> Result<Vec<usize>> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::domain(format!("delta must be >= 0, got {delta}")));
    }
    let width = delta * t as f64;
    Ok(lp
        .n0
        .iter()
        .copied()
        .filter(|&i| lp.reduced_costs[i].abs() <= width)
        .collect())
}

/// Rotation sending `u*` to `||u*|| e_m` (identity when `u* = 0`).
pub fn dual_rotation(u: &[f64]) -> Result<DenseMatrix> {
    let m = u.len();
    if norm2(u) == 0.0 {
        Ok(DenseMatrix::identity(m))
    } else {
        householder_to_axis(u, m - 1)
    }
}

/// `(mu_t, sigma_t)` for dual norm `u_norm` and window `t * delta`.
pub fn band_moments(u_norm: f64, delta: f64, t: usize) -> (f64, f64) {
    let w = delta * t as f64;
    let q = 1.0 + u_norm * u_norm;
    let var = 1.0 / q + (u_norm * w / q).powi(2) / 12.0;
    (w / 2.0, var.sqrt())
}

/// Rotates and normalizes the columns of `pool`.
pub fn prepare_columns(
    inst: &Instance,
    lp: &LpSolution,
    pool: &[usize],
    t: usize,
    params: &RoundingParams,
) -> Result<FilteredColumns> {
    if pool.is_empty() {
        return Err(Error::domain("prepare_columns needs a nonempty pool"));
    }
    let m = inst.m;
    let rotation = dual_rotation(&lp.u_star)?;
    let (mu_t, sigma_t) = band_moments(norm2(&lp.u_star), params.delta, t);
    let mut rotated = DenseMatrix::zeros(m, pool.len());
    let mut normalized = DenseMatrix::zeros(m, pool.len());
    for (j, &i) in pool.iter().enumerate() {
        let b = rotation.mul_vec(&inst.column(i));
        rotated.set_column(j, &b);
        let mut z = b;
        z[m - 1] = (z[m - 1] - mu_t) / sigma_t;
        normalized.set_column(j, &z);
    }
    Ok(FilteredColumns {
        indices: pool.to_vec(),
        rotated,
        normalized,
        rotation,
        mu_t,
        sigma_t,
    })
}

/// `Sigma^{-1} (R d' - e_m k mu)`.
fn normalized_target(d_prime: &[f64], cols: &FilteredColumns, k: usize) -> Vec<f64> {
    let m = d_prime.len();
    let mut target = cols.rotation.mul_vec(d_prime);
    target[m - 1] = (target[m - 1] - k as f64 * cols.mu_t) / cols.sigma_t;
    target
}

fn a_times(inst: &Instance, x: &[f64]) -> Vec<f64> {
    inst.a.mul_vec(x)
}

/// Runs the full rounding for an optimal LP solution.
pub fn round_pipeline(
    inst: &Instance,
    lp: &LpSolution,
    params: &RoundingParams,
    rng: &mut RngHandle,
) -> Result<RoundingCertificate> {
    params.validate()?;
    let (m, n) = (inst.m, inst.n);
    if lp.x_star.len() != n || lp.u_star.len() != m {
        return Err(Error::Dimension("LP solution does not match the instance".into()));
    }
    let (theta, theta_prime) = params.resolve_theta(m)?;
    let u_norm = norm2(&lp.u_star);
    let filter_width = params.t as f64 * params.delta;
    let mut diag = BTreeMap::new();
    diag.insert("theta".to_string(), theta);
    diag.insert("theta_prime".to_string(), theta_prime);
    diag.insert("u_norm".to_string(), u_norm);
    diag.insert("n0".to_string(), lp.n0.len() as f64);
    diag.insert("s".to_string(), lp.s.len() as f64);
    // Event E is assumed by the analysis, not enforced.
    diag.insert("event_u_norm_le_3".to_string(), f64::from(u8::from(u_norm <= 3.0)));
    diag.insert(
        "event_n0_ge_n_over_500".to_string(),
        f64::from(u8::from(lp.n0.len() as f64 >= n as f64 / 500.0)),
    );

    let rounded = randomized_round(&lp.x_star, &inst.a, rng, params.max_round_tries)?;
    diag.insert("round_tries".to_string(), rounded.tries as f64);
    diag.insert("round_norm".to_string(), rounded.norm);
    let x_prime = rounded.x_prime;
    let ax_star = a_times(inst, &lp.x_star);

    let certify = |x2: &[f64], flip: Vec<usize>, pool: Option<usize>, mut diag: BTreeMap<String, f64>| {
        let ax2 = a_times(inst, x2);
        let slack: Vec<f64> = ax2.iter().zip(&ax_star).map(|(a, b)| a - b).collect();
        let feasible = inst.is_feasible(x2, FEAS_TOL);
        let certified_gap = lp.value - inst.objective(x2);
        if let Ok(g) = gap_formula(x2, &lp.u_star, inst) {
            diag.insert("gap_formula_total".to_string(), g.total);
        }
        RoundingCertificate {
            x_prime: x_prime.clone(),
            flip_set: flip,
            x_double_prime: x2.to_vec(),
            feasible,
            slack_inf_norm: norm_inf(&slack),
            certified_gap: if feasible { certified_gap } else { f64::NAN },
            pool_index_used: pool,
            filter_width,
            diagnostics: diag,
        }
    };

    if lp.s.is_empty() {
        // Integral LP: nothing to repair.
        return Ok(certify(&x_prime.clone(), Vec::new(), None, diag));
    }

    let mut z_t = filter_reduced_costs(lp, params.delta, params.t)?;
    diag.insert("z_t".to_string(), z_t.len() as f64);
    if params.thin {
        let s = (1.0 + u_norm * u_norm).sqrt();
        z_t.retain(|&i| rng.uniform() < acceptance_ratio(lp.reduced_costs[i].abs(), filter_width, s));
        diag.insert("z_t_thinned".to_string(), z_t.len() as f64);
    }
    let pool_size = universe_multiplier(m) * params.k;
    let pools = params.t.min(z_t.len() / pool_size);
    diag.insert("pools".to_string(), pools as f64);
    if pools == 0 {
        return Err(Error::PoolTooSmall {
            available: z_t.len(),
            required: pool_size,
        });
    }

    let d: Vec<f64> = ax_star
        .iter()
        .zip(a_times(inst, &x_prime))
        .map(|(a, b)| a - b)
        .collect();
    let d_prime: Vec<f64> = d.iter().map(|v| v - theta_prime).collect();

    let base_seed = rng.next_u64();
    let mut best_dev = f64::INFINITY;
    let mut evaluations = 0u64;
    for (l, pool) in z_t.chunks_exact(pool_size).take(pools).enumerate() {
        let cols = prepare_columns(inst, lp, pool, params.t, params)?;
        if l == 0 {
            diag.insert("mu_t".to_string(), cols.mu_t);
            diag.insert("sigma_t".to_string(), cols.sigma_t);
        }
        let target = normalized_target(&d_prime, &cols, params.k);
        let columns: Vec<Vec<f64>> = (0..pool.len()).map(|j| cols.normalized.column(j)).collect();
        let disc = DiscInstance::new(columns, target, theta, params.k)?;
        let mut pool_rng = RngHandle::new(base_seed, l as u64);
        let out = disc_search(
            &disc,
            &mut pool_rng,
            SearchOptions {
                restarts: params.max_restarts,
                moves_per_restart: params.moves_per_restart,
            },
        );
        evaluations += out.evaluations;
        best_dev = best_dev.min(out.deviation);
        if out.found {
            let mut flip: Vec<usize> = out.subset.iter().map(|&j| pool[j]).collect();
            flip.sort_unstable();
            let mut x2 = x_prime.clone();
            for &i in &flip {
                x2[i] = 1.0;
            }
            diag.insert("best_deviation".to_string(), out.deviation);
            diag.insert("evaluations".to_string(), evaluations as f64);
            let cert = certify(&x2, flip, Some(l), diag.clone());
            if cert.feasible {
                return Ok(cert);
            }
            *diag.entry("verification_failures".to_string()).or_insert(0.0) += 1.0;
        }
    }
    diag.insert("best_deviation".to_string(), best_dev);
    diag.insert("evaluations".to_string(), evaluations as f64);
    Ok(RoundingCertificate {
        x_prime: x_prime.clone(),
        flip_set: Vec::new(),
        x_double_prime: x_prime.clone(),
        feasible: false,
        slack_inf_norm: f64::NAN,
        certified_gap: f64::NAN,
        pool_index_used: None,
        filter_width,
        diagnostics: diag,
    })
}

/// `certified_gap <= sqrt(m) ||u*|| slack_inf_norm + t delta |T| + 1e-7`.
pub fn gap_chain_check(cert: &RoundingCertificate, inst: &Instance, lp: &LpSolution) -> bool {
    if !cert.feasible {
        return false;
    }
    let rhs = (inst.m as f64).sqrt() * norm2(&lp.u_star) * cert.slack_inf_norm
        + cert.filter_width * cert.flip_set.len() as f64;
    cert.certified_gap <= rhs + 1e-7
}
