use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use giplab_core::discrepancy::{disc_success_mc, ColumnLaw, DiscMcConfig, SearchOptions};
use giplab_core::experiments::{gap_sweep, stats_check, to_csv, tree_sweep, SweepConfig};
use giplab_core::knapsack::{knapsack_expectation_mc, WeightLaw};
use giplab_core::{
    round_pipeline, solve_ip, solve_lp, BSpec, BnbOptions, BnbStatus, BranchRule, Error, Instance,
    RngHandle, RoundingParams,
};

const SWEEP_HELP: &str = "\
The config is one JSON object. Keys and defaults:
  m_list          required, e.g. [2]
  n_list          required, e.g. [12, 16, 20, 24]
  seeds_per_cell  10
  seed            0      (row j of a cell uses seed + j)
  b_spec          \"zeros\" (also \"gaussian\", \"scaled:B1,B2,..\")
  rounding        {}     (k, delta, t, theta, max_restarts, moves_per_restart, thin)
  round           true
  node_limit      200000
  exact_n_max     30     (larger n report the rounding certificate only)
  prune           true
  warm_start      true
  output          null   (CSV path; stdout when unset)
  parallelism     null   (all cores; GIPLAB_THREADS overrides)
  timings         false  (fill the *_ms columns)";

#[derive(Parser)]
#[command(name = "giplab", version, about = "Random Gaussian binary IPs: solvers, rounding certificates and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// zeros | gaussian | scaled:B1[,B2..] | explicit:V1,V2,..
        #[arg(long, default_value = "zeros")]
        b: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the LP relaxation.
    Lp { instance: PathBuf },
    /// Solve the binary IP by best-bound-first branch-and-bound.
    Ip {
        instance: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        node_limit: usize,
        /// most-frac | first-frac
        #[arg(long, default_value = "most-frac")]
        branch: String,
        #[arg(long)]
        no_warm_start: bool,
        #[arg(long)]
        no_prune: bool,
    },
    /// Round the LP optimum and certify the gap of the rounded point.
    Round {
        instance: PathBuf,
        /// Flip-set size [default: ceil(2m(ln n + m))]
        #[arg(long)]
        k: Option<usize>,
        /// Filtering width [default: 4 sqrt(m) k / n]
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 5)]
        t: usize,
        /// Discrepancy tolerance [default: calibrated for (m, k)]
        #[arg(long)]
        theta: Option<f64>,
        /// Thin the filtered columns by rejection sampling.
        #[arg(long)]
        thin: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also print the full rounded vector.
        #[arg(long)]
        show_x: bool,
    },
    /// Exact gaps and rounding certificates over a grid.
    #[command(after_help = SWEEP_HELP)]
    GapSweep(SweepArgs),
    /// Branch-and-bound tree sizes with knapsack proxy counts.
    #[command(after_help = SWEEP_HELP)]
    TreeSweep(SweepArgs),
    /// Frequencies of the LP structure events, as JSON.
    #[command(after_help = SWEEP_HELP)]
    Stats(SweepArgs),
    /// Monte Carlo success rate of the subset discrepancy problem.
    DiscMc {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        /// gaussian | mixture:EPS
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Euclidean norm of the target, placed along the all-ones direction.
        #[arg(long, default_value_t = 0.0)]
        target_norm: f64,
    },
    /// Monte Carlo mean of the knapsack count against its bound.
    KnapMc {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        g: f64,
        /// uniform01 | absgauss | absmix:EPS
        #[arg(long, default_value = "uniform01")]
        dist: String,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep config.
    #[arg(long)]
    config: PathBuf,
    /// CSV path; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Parse { .. } | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Gen { m, n, b, seed, out } => {
            let spec = BSpec::parse_cli(&b)?;
            let inst = Instance::generate(m, n, spec, &mut RngHandle::new(seed, 0))?;
            inst.write_file(&out).map_err(|e| with_path(&out, e))?;
            println!("wrote {} ({m} x {n})", out.display());
            Ok(())
        }
        Command::Lp { instance } => lp(&instance),
        Command::Ip {
            instance,
            node_limit,
            branch,
            no_warm_start,
            no_prune,
        } => {
            let branch = match branch.as_str() {
                "most-frac" => BranchRule::MostFractional,
                "first-frac" => BranchRule::FirstFractional,
                other => return Err(Failure::Usage(format!("unknown branch rule `{other}`"))),
            };
            let opts = BnbOptions {
                node_limit,
                branch,
                warm_start: !no_warm_start,
                prune: !no_prune,
                ..Default::default()
            };
            ip(&load(&instance)?, &opts)
        }
        Command::Round {
            instance,
            k,
            delta,
            t,
            theta,
            thin,
            seed,
            show_x,
        } => {
            let inst = load(&instance)?;
            let mut params = match k {
                Some(k) => RoundingParams::with_k(inst.m, inst.n, k),
                None => RoundingParams::defaults_for(inst.m, inst.n),
            };
            if let Some(d) = delta {
                params.delta = d;
            }
            params.t = t;
            params.theta = theta;
            params.thin = thin;
            round(&inst, &params, seed, show_x)
        }
        Command::GapSweep(args) => sweep(&args, false),
        Command::TreeSweep(args) => sweep(&args, true),
        Command::Stats(args) => {
            let cfg = load_config(&args)?;
            let out = stats_check(&cfg)?;
            let text = serde_json::to_string_pretty(&out).expect("summaries serialize");
            emit(args.out.as_deref().or(cfg.output.as_deref()), &format!("{text}\n"))
        }
        Command::DiscMc {
            m,
            k,
            dist,
            trials,
            seed,
            target_norm,
        } => {
            let law: ColumnLaw = dist.parse()?;
            if m == 0 {
                return Err(Failure::Usage("--m must be >= 1".into()));
            }
            let coord = target_norm / (m as f64).sqrt();
            let cfg = DiscMcConfig {
                m,
                k,
                a: None,
                law,
                target: vec![coord; m],
                theta: None,
                trials,
                seed,
                search: SearchOptions::default(),
            };
            let r = disc_success_mc(&cfg)?;
            println!("m,k,a,theta,trials,successes,rate,stderr,mode");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                r.m,
                r.k,
                r.a,
                r.theta,
                r.trials,
                r.successes,
                r.rate,
                r.stderr,
                r.mode.as_str()
            );
            Ok(())
        }
        Command::KnapMc {
            n,
            g,
            dist,
            trials,
            seed,
        } => {
            let law: WeightLaw = dist.parse()?;
            let r = knapsack_expectation_mc(n, law, g, trials, seed)?;
            println!("n,g,trials,mean,stderr,bound,violations");
            println!(
                "{},{},{},{},{},{},{}",
                r.n, r.g, r.trials, r.mean, r.stderr, r.bound, r.violations
            );
            Ok(())
        }
    }
}

fn with_path(path: &Path, e: Error) -> Failure {
    match e {
        Error::Io(io) => Failure::Usage(format!("{}: {io}", path.display())),
        other => Failure::from(other),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    Instance::read_file(path).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("{}: {io}", path.display())),
        Error::Parse { .. } => Failure::Usage(format!("{}: {e}", path.display())),
        other => Failure::from(other),
    })
}

fn load_config(args: &SweepArgs) -> Result<SweepConfig, Failure> {
    let mut cfg = SweepConfig::read_file(&args.config).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("{}: {io}", args.config.display())),
        other => Failure::Usage(format!("{}: {other}", args.config.display())),
    })?;
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Failure::Compute(e.to_string()))
        }
    }
}

fn sweep(args: &SweepArgs, tree: bool) -> CmdResult {
    let cfg = load_config(args)?;
    let rows = if tree { tree_sweep(&cfg)? } else { gap_sweep(&cfg)? };
    match &cfg.output {
        // The sweep already wrote the file row by row.
        Some(path) => eprintln!("wrote {} rows to {}", rows.len(), path.display()),
        None => emit(None, &to_csv(&rows, tree))?,
    }
    Ok(())
}

fn lp(path: &Path) -> CmdResult {
    let inst = load(path)?;
    let sol = solve_lp(&inst)?;
    let mut doc = String::new();
    let _ = writeln!(doc, "value: {}", sol.value);
    let nonzeros: Vec<String> = sol
        .x_star
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| format!("{i}:{v}"))
        .collect();
    let _ = writeln!(doc, "x_nonzero: {}", nonzeros.join(" "));
    let duals: Vec<String> = sol.u_star.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(doc, "u: {}", duals.join(" "));
    let _ = writeln!(doc, "n0: {}", sol.n0.len());
    let _ = writeln!(doc, "n1: {}", sol.n1.len());
    let _ = writeln!(doc, "s: {}", sol.s.len());
    let _ = writeln!(doc, "pivots: {}", sol.pivots);
    emit(None, &doc)
}

fn ip(inst: &Instance, opts: &BnbOptions) -> CmdResult {
    let r = solve_ip(inst, opts)?;
    let mut doc = String::new();
    match r.status {
        BnbStatus::Infeasible => {
            let _ = writeln!(doc, "value: none");
        }
        _ => {
            let _ = writeln!(doc, "value: {}", r.opt_value);
        }
    }
    let ones: Vec<String> = r
        .x_opt
        .iter()
        .flat_map(|x| x.iter().enumerate().filter(|(_, v)| **v == 1.0).map(|(i, _)| i.to_string()))
        .collect();
    let _ = writeln!(doc, "ones: {}", ones.join(" "));
    let _ = writeln!(doc, "nodes_created: {}", r.nodes_created);
    let _ = writeln!(doc, "nodes_expanded: {}", r.nodes_expanded);
    let _ = writeln!(doc, "best_bound: {}", r.best_bound);
    let _ = writeln!(doc, "status: {}", r.status.as_str());
    emit(None, &doc)
}

fn round(inst: &Instance, params: &RoundingParams, seed: u64, show_x: bool) -> CmdResult {
    let lp = solve_lp(inst)?;
    let cert = round_pipeline(inst, &lp, params, &mut RngHandle::new(seed, 1))?;
    let mut doc = String::new();
    let _ = writeln!(doc, "lp_value: {}", lp.value);
    let _ = writeln!(doc, "feasible: {}", cert.feasible);
    let _ = writeln!(doc, "certified_gap: {}", cert.certified_gap);
    let _ = writeln!(doc, "slack_inf_norm: {}", cert.slack_inf_norm);
    let _ = writeln!(doc, "filter_width: {}", cert.filter_width);
    let pool = cert.pool_index_used.map_or("none".to_string(), |p| p.to_string());
    let _ = writeln!(doc, "pool_index_used: {pool}");
    let flips: Vec<String> = cert.flip_set.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(doc, "flip_set: {}", flips.join(" "));
    for (key, value) in &cert.diagnostics {
        let _ = writeln!(doc, "{key}: {value}");
    }
    if show_x {
        let xs: Vec<String> = cert.x_double_prime.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(doc, "x: {}", xs.join(" "));
    }
    emit(None, &doc)?;
    if cert.feasible {
        Ok(())
    } else {
        Err(Failure::Compute("no flip set met the discrepancy tolerance".into()))
    }
}
