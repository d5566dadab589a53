use std::path::Path;
use std::process::{Command, Output};

use giplab_core::experiments::CSV_HEADER;
use giplab_core::{solve_lp, Instance};

fn giplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_giplab"))
        .args(args)
        .env("GIPLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(doc: &'a str, key: &str) -> &'a str {
    doc.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{doc}"))
}

fn gen(dir: &Path, name: &str, m: &str, n: &str, seed: &str) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let o = giplab(&["gen", "--m", m, "--n", n, "--b", "zeros", "--seed", seed, "--out", &p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn gen_then_lp_reproduces_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "a.gip", "2", "50", "1");
    let o = giplab(&["lp", &p]);
    assert_eq!(o.status.code(), Some(0));
    let printed: f64 = field(&stdout(&o), "value").parse().unwrap();
    let direct = solve_lp(&Instance::read_file(Path::new(&p)).unwrap()).unwrap().value;
    assert!((printed - direct).abs() <= 1e-12);
}

#[test]
fn ip_reports_status_and_counters() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "a.gip", "2", "14", "3");
    let o = giplab(&["ip", &p, "--branch", "first-frac", "--no-warm-start"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = stdout(&o);
    assert_eq!(field(&doc, "status"), "optimal");
    assert!(field(&doc, "nodes_created").parse::<usize>().unwrap() >= 1);
}

#[test]
fn missing_file_is_a_usage_error_naming_the_path() {
    let o = giplab(&["ip", "missing.gip"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.gip"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = giplab(&["lp", "x.gip", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--bogus"));
}

#[test]
fn help_exits_zero_on_every_subcommand() {
    for sub in [
        "gen", "lp", "ip", "round", "gap-sweep", "tree-sweep", "stats", "disc-mc", "knap-mc",
    ] {
        let o = giplab(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
    assert!(stdout(&giplab(&["gap-sweep", "--help"])).contains("node_limit"));
}

#[test]
fn round_prints_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "r.gip", "2", "400", "0");
    let o = giplab(&["round", &p, "--k", "12", "--theta", "0.01", "--show-x"]);
    let doc = stdout(&o);
    match o.status.code() {
        Some(0) => {
            assert_eq!(field(&doc, "feasible"), "true");
            assert_eq!(field(&doc, "x").split(' ').count(), 400);
        }
        Some(2) => assert_eq!(field(&doc, "feasible"), "false"),
        c => panic!("exit {c:?}"),
    }
}

#[test]
fn gap_sweep_writes_the_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"m_list": [2], "n_list": [10, 12], "seeds_per_cell": 3, "output": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = giplab(&["gap-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 6);

    let o = giplab(&["tree-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",knap_count,envelope"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"m_list": [2], "n_list": [10], "colour": 1}"#).unwrap();
    let o = giplab(&["gap-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

#[test]
fn stats_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stats.json");
    std::fs::write(&cfg, r#"{"m_list": [2], "n_list": [60], "seeds_per_cell": 5}"#).unwrap();
    let o = giplab(&["stats", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["trials"], 5);
}

#[test]
fn monte_carlo_commands_emit_csv_rows() {
    let o = giplab(&["disc-mc", "--m", "1", "--k", "2", "--trials", "200", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "m,k,a,theta,trials,successes,rate,stderr,mode");
    assert!(rows[1].starts_with("1,2,2,") && rows[1].ends_with(",exact"));

    let o = giplab(&["knap-mc", "--n", "12", "--g", "1", "--dist", "absmix:0.5", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("n,g,trials,mean,stderr,bound,violations"));

    let o = giplab(&["knap-mc", "--n", "12", "--g", "1", "--dist", "cauchy"]);
    assert_eq!(o.status.code(), Some(1));
}
