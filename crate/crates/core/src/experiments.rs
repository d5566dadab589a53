//! Sweep harness: instance grids, exact gaps, rounding certificates and
//! tree sizes, written as CSV.
//!
//! Row `j` of a cell `(m, n)` uses seed `config.seed + j`. The instance comes
//! from stream 0 of that seed and the rounding from stream 1, so every row can
//! be recomputed on its own from `(seed, m, n, b_spec)` and the flags.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnb::{solve_ip, BnbOptions, BnbStatus};
use crate::error::{Error, Result};
use crate::instance::{BSpec, Instance};
use crate::knapsack::{count_bound, reduced_cost_knapsack};
use crate::lp::solve_lp;
use crate::numerics::{norm2, TheoryParams};
use crate::random::RngHandle;
use crate::rounding::{round_pipeline, RoundingParams};

pub const CSV_HEADER: &str = "seed,m,n,bspec,lp_value,ip_value,ipgap,tree_size,nodes_expanded,u_norm,n0,s,round_ok,cert_gap,lp_ms,ip_ms,round_ms,status";
pub const TREE_CSV_HEADER_EXTRA: &str = "knap_count,envelope";

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "GIPLAB_THREADS";

/// Rounding settings of a sweep; unset fields take the per-`(m, n)` defaults
/// of [`RoundingParams::defaults_for`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoundingConfig {
    pub k: Option<usize>,
    pub delta: Option<f64>,
    pub t: Option<usize>,
    pub theta: Option<f64>,
    pub max_restarts: Option<usize>,
    pub moves_per_restart: Option<usize>,
    pub thin: bool,
}

impl RoundingConfig {
    pub fn params(&self, m: usize, n: usize) -> RoundingParams {
        let mut p = match self.k {
            Some(k) => RoundingParams::with_k(m, n, k),
            None => RoundingParams::defaults_for(m, n),
        };
        if let Some(d) = self.delta {
            p.delta = d;
        }
        if let Some(t) = self.t {
            p.t = t;
        }
        p.theta = self.theta;
        if let Some(r) = self.max_restarts {
            p.max_restarts = r;
        }
        if let Some(mv) = self.moves_per_restart {
            p.moves_per_restart = mv;
        }
        p.thin = self.thin;
        p
    }
}

fn default_seeds() -> usize {
    10
}
fn default_b_spec() -> String {
    "zeros".into()
}
fn default_node_limit() -> usize {
    200_000
}
fn default_exact_n_max() -> usize {
    30
}
fn default_true() -> bool {
    true
}

/// A sweep, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m_list: Vec<usize>,
    pub n_list: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds_per_cell: usize,
    /// Master seed; row `j` of each cell uses `seed + j`.
    #[serde(default)]
    pub seed: u64,
    /// `zeros`, `gaussian` or `scaled:B1,B2,..`.
    #[serde(default = "default_b_spec")]
    pub b_spec: String,
    #[serde(default)]
    pub rounding: RoundingConfig,
    /// Run the rounding pipeline on every row.
    #[serde(default = "default_true")]
    pub round: bool,
    #[serde(default = "default_node_limit")]
    pub node_limit: usize,
    /// Largest `n` solved exactly; bigger rows report the certificate only.
    #[serde(default = "default_exact_n_max")]
    pub exact_n_max: usize,
    #[serde(default = "default_true")]
    pub prune: bool,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses all cores. `GIPLAB_THREADS` wins over both.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Fill the `*_ms` columns. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timings: bool,
}

impl SweepConfig {
    pub fn new(m_list: Vec<usize>, n_list: Vec<usize>, seeds_per_cell: usize) -> Self {
        SweepConfig {
            m_list,
            n_list,
            seeds_per_cell,
            seed: 0,
            b_spec: default_b_spec(),
            rounding: RoundingConfig::default(),
            round: true,
            node_limit: default_node_limit(),
            exact_n_max: default_exact_n_max(),
            prune: true,
            warm_start: true,
            output: None,
            parallelism: None,
            timings: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::Config("m_list and n_list must be nonempty".into()));
        }
        if self.m_list.contains(&0) || self.n_list.contains(&0) {
            return Err(Error::Config("m and n must be positive".into()));
        }
        if self.seeds_per_cell == 0 {
            return Err(Error::Config("seeds_per_cell must be >= 1".into()));
        }
        if self.node_limit == 0 {
            return Err(Error::Config("node_limit must be >= 1".into()));
        }
        if self.parallelism == Some(0) {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        self.bspec()?;
        Ok(())
    }

    pub fn bspec(&self) -> Result<BSpec> {
        BSpec::parse_cli(&self.b_spec).map_err(|e| Error::Config(e.to_string()))
    }

    fn bnb_options(&self) -> BnbOptions {
        BnbOptions {
            node_limit: self.node_limit,
            prune: self.prune,
            warm_start: self.warm_start,
            ..Default::default()
        }
    }

    /// `(m, n, seed)` for every row, in output order.
    pub fn jobs(&self) -> Vec<(usize, usize, u64)> {
        let mut jobs = Vec::new();
        for &m in &self.m_list {
            for &n in &self.n_list {
                for j in 0..self.seeds_per_cell as u64 {
                    jobs.push((m, n, self.seed.wrapping_add(j)));
                }
            }
        }
        jobs
    }

    fn threads(&self) -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(t) if t >= 1 => Ok(Some(t)),
                _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
            },
            Err(_) => Ok(self.parallelism),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads()? {
            builder = builder.num_threads(t);
        }
        builder.build().map_err(|e| Error::Config(e.to_string()))
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub b_spec: String,
    pub lp_value: Option<f64>,
    pub ip_value: Option<f64>,
    /// `lp_value - ip_value`, clipped at zero.
    pub ipgap: Option<f64>,
    pub tree_size: Option<usize>,
    pub nodes_expanded: Option<usize>,
    pub u_star_norm: Option<f64>,
    pub n0_size: Option<usize>,
    pub s_size: Option<usize>,
    pub round_success: Option<bool>,
    pub certified_gap: Option<f64>,
    pub lp_ms: Option<f64>,
    pub ip_ms: Option<f64>,
    pub round_ms: Option<f64>,
    pub status: String,
    /// Tree sweeps only.
    pub knap_count: Option<f64>,
    pub envelope: Option<f64>,
}

impl ExperimentRecord {
    fn empty(seed: u64, m: usize, n: usize, b_spec: &str) -> Self {
        ExperimentRecord {
            seed,
            m,
            n,
            b_spec: b_spec.to_string(),
            lp_value: None,
            ip_value: None,
            ipgap: None,
            tree_size: None,
            nodes_expanded: None,
            u_star_norm: None,
            n0_size: None,
            s_size: None,
            round_success: None,
            certified_gap: None,
            lp_ms: None,
            ip_ms: None,
            round_ms: None,
            status: String::new(),
            knap_count: None,
            envelope: None,
        }
    }

    /// CSV line without the trailing newline.
    pub fn csv_line(&self, tree_columns: bool) -> String {
        fn f(v: Option<f64>) -> String {
            v.map(|x| format!("{x}")).unwrap_or_default()
        }
        fn u(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.m,
            self.n,
            self.b_spec,
            f(self.lp_value),
            f(self.ip_value),
            f(self.ipgap),
            u(self.tree_size),
            u(self.nodes_expanded),
            f(self.u_star_norm),
            u(self.n0_size),
            u(self.s_size),
            self.round_success.map(|b| b.to_string()).unwrap_or_default(),
            f(self.certified_gap),
            f(self.lp_ms),
            f(self.ip_ms),
            f(self.round_ms),
            self.status
        );
        if tree_columns {
            let _ = write!(line, ",{},{}", f(self.knap_count), f(self.envelope));
        }
        line
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Clone, Copy)]
struct RowFlags {
    tree: bool,
}

fn run_row(cfg: &SweepConfig, bspec: &BSpec, m: usize, n: usize, seed: u64, flags: RowFlags) -> ExperimentRecord {
    let mut rec = ExperimentRecord::empty(seed, m, n, &bspec.label());
    let timed = |ms: f64| cfg.timings.then_some(ms);
    let inst = match Instance::generate(m, n, bspec.clone(), &mut RngHandle::new(seed, 0)) {
        Ok(i) => i,
        Err(e) => {
            rec.status = format!("instance_error: {e}").replace(',', ";");
            return rec;
        }
    };

    let start = Instant::now();
    let lp = solve_lp(&inst);
    rec.lp_ms = timed(elapsed_ms(start));
    let lp = match lp {
        Ok(lp) => lp,
        Err(Error::Infeasible { .. }) => {
            rec.status = "lp_infeasible".into();
            return rec;
        }
        Err(e) => {
            rec.status = format!("lp_error: {e}").replace(',', ";");
            return rec;
        }
    };
    rec.lp_value = Some(lp.value);
    rec.u_star_norm = Some(norm2(&lp.u_star));
    rec.n0_size = Some(lp.n0.len());
    rec.s_size = Some(lp.s.len());

    let mut status = Vec::new();
    if n <= cfg.exact_n_max {
        let start = Instant::now();
        let ip = solve_ip(&inst, &cfg.bnb_options());
        rec.ip_ms = timed(elapsed_ms(start));
        match ip {
            Ok(ip) => {
                rec.tree_size = Some(ip.nodes_created);
                rec.nodes_expanded = Some(ip.nodes_expanded);
                status.push(ip.status.as_str().to_string());
                if ip.status == BnbStatus::Optimal {
                    let gap = (lp.value - ip.opt_value).max(0.0);
                    rec.ip_value = Some(ip.opt_value);
                    rec.ipgap = Some(gap);
                    if flags.tree {
                        if let Ok(k) = reduced_cost_knapsack(&inst, &lp, gap) {
                            rec.knap_count = Some(k.as_f64());
                        }
                        rec.envelope = Some(count_bound(n, gap));
                    }
                }
            }
            Err(e) => status.push(format!("ip_error: {e}")),
        }
    } else {
        status.push("certified".into());
    }

    if cfg.round {
        let params = cfg.rounding.params(m, n);
        let start = Instant::now();
        let cert = round_pipeline(&inst, &lp, &params, &mut RngHandle::new(seed, 1));
        rec.round_ms = timed(elapsed_ms(start));
        match cert {
            Ok(cert) => {
                rec.round_success = Some(cert.feasible);
                if cert.feasible {
                    rec.certified_gap = Some(cert.certified_gap);
                }
            }
            Err(Error::PoolTooSmall { .. }) => {
                rec.round_success = Some(false);
                status.push("pool_too_small".into());
            }
            Err(e) => {
                rec.round_success = Some(false);
                status.push(format!("round_error: {e}"));
            }
        }
    }
    rec.status = status.join(";").replace(',', ";");
    rec
}

fn run_sweep(cfg: &SweepConfig, flags: RowFlags) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let bspec = cfg.bspec()?;
    let pool = cfg.pool()?;
    let mut writer = match &cfg.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_header(&mut w, flags.tree)?;
            Some(w)
        }
        None => None,
    };
    let mut all = Vec::new();
    for &m in &cfg.m_list {
        for &n in &cfg.n_list {
            let seeds: Vec<u64> = (0..cfg.seeds_per_cell as u64)
                .map(|j| cfg.seed.wrapping_add(j))
                .collect();
            // Ordered collect: output order never depends on completion order.
            let rows: Vec<ExperimentRecord> = pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&s| run_row(cfg, &bspec, m, n, s, flags))
                    .collect()
            });
            if let Some(w) = writer.as_mut() {
                for r in &rows {
                    writeln!(w, "{}", r.csv_line(flags.tree))?;
                }
                w.flush()?;
            }
            all.extend(rows);
        }
    }
    Ok(all)
}

fn write_header(w: &mut impl Write, tree: bool) -> Result<()> {
    if tree {
        writeln!(w, "{CSV_HEADER},{TREE_CSV_HEADER_EXTRA}")?;
    } else {
        writeln!(w, "{CSV_HEADER}")?;
    }
    Ok(())
}

/// Exact gaps (where `n <= exact_n_max`) and rounding certificates per row.
pub fn gap_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    run_sweep(cfg, RowFlags { tree: false })
}

/// As [`gap_sweep`], plus the reduced-cost knapsack count and the
/// `exp(2 sqrt(2 n gap))` envelope per row.
pub fn tree_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    run_sweep(cfg, RowFlags { tree: true })
}

/// CSV text for a set of records.
pub fn to_csv(records: &[ExperimentRecord], tree: bool) -> String {
    let mut out = Vec::new();
    write_header(&mut out, tree).expect("writing to memory");
    for r in records {
        out.extend_from_slice(r.csv_line(tree).as_bytes());
        out.push(b'\n');
    }
    String::from_utf8(out).expect("CSV is ASCII")
}

/// Empirical frequencies of the LP structure events for one `(m, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub epsilon: f64,
    /// Theory constants of the first instance (they depend on `b` only
    /// through `||b^-||_2`).
    pub alpha: f64,
    pub beta: f64,
    pub dual_norm_bound: f64,
    /// `c^T x* >= alpha n`.
    pub freq_value: f64,
    /// `||u*||_2 <= (1 + eps) / (1 - 3 eps - (1 - eps) delta)`.
    pub freq_dual_bound: f64,
    /// `|N0| >= (1 - beta) n - m`.
    pub freq_zero_bound: f64,
    /// `||u*||_2 <= 3`.
    pub freq_dual_3: f64,
    /// `|N0| >= n / 500`.
    pub freq_zero_500: f64,
    /// Rows where the instance violated `||b^-||_2 <= n/10` or the LP failed.
    pub skipped: usize,
}

pub const STATS_EPSILON: f64 = 1.0 / 9.0;

/// Frequencies of the LP structure events, one summary per `(m, n)` cell.
pub fn stats_check(cfg: &SweepConfig) -> Result<Vec<StatsSummary>> {
    cfg.validate()?;
    let bspec = cfg.bspec()?;
    let pool = cfg.pool()?;
    let mut out = Vec::new();
    for &m in &cfg.m_list {
        for &n in &cfg.n_list {
            let rows: Vec<Option<(TheoryParams, [bool; 5])>> = pool.install(|| {
                (0..cfg.seeds_per_cell as u64)
                    .into_par_iter()
                    .map(|j| {
                        let seed = cfg.seed.wrapping_add(j);
                        let inst =
                            Instance::generate(m, n, bspec.clone(), &mut RngHandle::new(seed, 0)).ok()?;
                        let theory = TheoryParams::new(STATS_EPSILON, &inst.b, n).ok()?;
                        let lp = solve_lp(&inst).ok()?;
                        let u = norm2(&lp.u_star);
                        let n0 = lp.n0.len() as f64;
                        Some((
                            theory,
                            [
                                lp.value >= theory.alpha * n as f64,
                                u <= theory.dual_norm_bound(),
                                n0 >= theory.zero_count_bound(n, m),
                                u <= 3.0,
                                n0 >= n as f64 / 500.0,
                            ],
                        ))
                    })
                    .collect()
            });
            let ok: Vec<&(TheoryParams, [bool; 5])> = rows.iter().flatten().collect();
            let freq = |e: usize| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().filter(|(_, f)| f[e]).count() as f64 / ok.len() as f64
                }
            };
            let first = ok.first().map(|(t, _)| *t);
            out.push(StatsSummary {
                m,
                n,
                trials: cfg.seeds_per_cell,
                epsilon: STATS_EPSILON,
                alpha: first.map_or(f64::NAN, |t| t.alpha),
                beta: first.map_or(f64::NAN, |t| t.beta),
                dual_norm_bound: first.map_or(f64::NAN, |t| t.dual_norm_bound()),
                freq_value: freq(0),
                freq_dual_bound: freq(1),
                freq_zero_bound: freq(2),
                freq_dual_3: freq(3),
                freq_zero_500: freq(4),
                skipped: rows.len() - ok.len(),
            });
        }
    }
    Ok(out)
}
