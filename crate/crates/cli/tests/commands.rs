use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eib_harness::manifest::RunManifest;

struct Workspace {
    root: PathBuf,
}

impl Workspace {
    fn new(name: &str) -> Self {
        let root = std::env::temp_dir().join(format!("eib-harness-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&root);
        fs::create_dir_all(&root).unwrap();
        Self { root }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.root.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.root);
    }
}

fn eib(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eib"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("EIB_THREADS")
        .output()
        .unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

fn json(dir: &Path, file: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, file)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn single_cluster_solve_reports_zeros() {
    let ws = Workspace::new("t1");
    let cfg = ws.config(
        "c.json",
        r#"{"command": "solve", "source": {"random": {"nx": 5, "ny": 3, "seed": 4}}, "solver": {"t_cardinality": 1, "n_restarts": 2}}"#,
    );
    let out = ws.out("o");
    assert!(eib("solve", &cfg, &out, &[]).status.success());
    let s = json(&out, "summary.json");
    for key in ["h_t", "i_xt", "i_yt"] {
        assert_eq!(s[key].as_f64().unwrap(), 0.0, "{key}");
    }
    assert!(read(&out, "trace.csv").starts_with("iter,f_eib,max_delta\n"));
    assert!(json(&out, "state.json")["encoder"].is_object());
}

#[test]
fn noiseless_toy_labels_are_fully_recovered() {
    let ws = Workspace::new("noiseless");
    let cfg = ws.config(
        "c.json",
        r#"{"source": {"toy": {"r": 0.5, "m": 100, "seed": 1}}, "solver": {"alpha": 1.0, "beta": 10.0, "t_cardinality": 2}}"#,
    );
    let out = ws.out("o");
    assert!(eib("solve", &cfg, &out, &[]).status.success());
    let i_yt = json(&out, "summary.json")["i_yt"].as_f64().unwrap();
    assert!((i_yt - 2f64.ln()).abs() < 1e-6, "{i_yt}");
}

#[test]
fn manifest_lists_every_output_with_its_checksum() {
    let ws = Workspace::new("manifest");
    let cfg = ws.config("c.json", r#"{"axis": "beta", "grid": {"start": 2.0, "stop": 20.0, "points": 6}}"#);
    let out = ws.out("o");
    assert!(eib("sweep", &cfg, &out, &["--set", "solver.n_restarts=2"]).status.success());
    let m: RunManifest = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    let mut listed: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
    listed.sort();
    assert_eq!(listed, ["sweep.csv", "sweep.svg"]);
    for o in &m.outputs {
        let bytes = fs::read(out.join(&o.file)).unwrap();
        assert_eq!(o.bytes, bytes.len());
        assert_eq!(o.sha256.len(), 64);
    }
    assert_eq!(m.config["solver"]["n_restarts"], 2);
    assert_eq!(m.config["grid"]["points"], 6);
    assert_eq!(m.command, "sweep");
}

#[test]
fn beta_sweep_gains_relevance_within_the_label_entropy() {
    let ws = Workspace::new("beta");
    let cfg = ws.config("c.json", r#"{"axis": "beta", "grid": {"start": 1.5, "stop": 51.5, "points": 26}}"#);
    let out = ws.out("o");
    assert!(eib("sweep", &cfg, &out, &[]).status.success());
    let text = read(&out, "sweep.csv");
    assert!(text.starts_with("beta,h_t,h_t_given_x,i_xt,i_yt,f_eib,converged\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 26);
    let i_yt: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(i_yt[25] >= i_yt[0]);
    // default joint: 8×2 Dirichlet(0.3) draw at seed 0, H(Y) from its label marginal
    let joint = eib_harness::config::random_joint(8, 2, 0, 0.3).unwrap();
    let h_y = eib_core::prob::entropy(&joint.marginal_y()).unwrap();
    assert!(i_yt.iter().all(|&v| v <= h_y + 1e-12));
}

#[test]
fn svg_outputs_are_well_formed_with_one_polyline_per_series() {
    let ws = Workspace::new("svg");
    let cfg = ws.config("c.json", r#"{"ms": [10, 1000, 100000], "trials": 4}"#);
    let out = ws.out("o");
    assert!(eib("bounds-sim", &cfg, &out, &[]).status.success());
    for g in ["uniform", "normal"] {
        for kind in ["error_rate", "mean"] {
            let text = read(&out, &format!("bounds_{kind}_{g}.svg"));
            let doc = roxmltree::Document::parse(&text).unwrap();
            let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
            assert_eq!(lines, 2, "{kind} {g}");
        }
    }
}

#[test]
fn single_trial_simulation_is_reproducible() {
    let ws = Workspace::new("single");
    let cfg = ws.config("c.json", r#"{"ms": [1000], "trials": 1, "seed": 9, "generators": ["normal"]}"#);
    let (a, b) = (ws.out("a"), ws.out("b"));
    assert!(eib("bounds-sim", &cfg, &a, &[]).status.success());
    assert!(eib("bounds-sim", &cfg, &b, &[]).status.success());
    let trials = read(&a, "bounds_trials_normal.csv");
    assert_eq!(trials, read(&b, "bounds_trials_normal.csv"));
    // one trial yields one row per bound
    assert_eq!(csv_rows(&trials).len(), 2);
    assert!(!a.join("bounds_trials_uniform.csv").exists());
}

#[test]
fn noiseless_transfer_is_perfect_for_every_alpha() {
    let ws = Workspace::new("transfer");
    let cfg = ws.config(
        "c.json",
        r#"{"alphas": [0.0, 0.5, 1.0], "source_rs": [0.5], "target_r": 0.5, "m": 200, "n_restarts": 2}"#,
    );
    let out = ws.out("o");
    assert!(eib("toy-transfer", &cfg, &out, &[]).status.success());
    let text = read(&out, "toy_transfer.csv");
    assert!(text.lines().next().unwrap().contains("qualitative_analog"));
    for row in csv_rows(&text) {
        assert_eq!(row[1], "1", "{row:?}");
    }
    assert!(read(&out, "toy_best_alpha.csv").contains("0.5,5000,0,1\n"));
}

#[test]
fn identical_domains_have_no_discrepancy() {
    let ws = Workspace::new("rd");
    let joint = r#"{"random": {"nx": 5, "ny": 2, "seed": 6}}"#;
    let cfg = ws.config("c.json", &format!(r#"{{"domains": {{"joints": {{"source": {joint}, "target": {joint}}}}}}}"#));
    let out = ws.out("o");
    assert!(eib("rd-compare", &cfg, &out, &[]).status.success());
    let rows = csv_rows(&read(&out, "rd_compare.csv"));
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["dib", "ib", "ib_minus_dib"]);
    for r in &rows {
        assert_eq!((r[2].as_str(), r[3].as_str()), ("0", "0"));
    }
}

#[test]
fn toy_domains_report_both_methods_and_their_difference() {
    let ws = Workspace::new("rdtoy");
    let cfg = ws.config("c.json", r#"{"domains": {"toy": {"source_r": 2.0, "target_r": 3.0, "m": 400, "seed": 5}}}"#);
    let out = ws.out("o");
    assert!(eib("rd-compare", &cfg, &out, &[]).status.success());
    let rows = csv_rows(&read(&out, "rd_compare.csv"));
    let v = |i: usize, j: usize| rows[i][j].parse::<f64>().unwrap();
    assert!((v(2, 3) - (v(1, 3) - v(0, 3))).abs() < 1e-15);
    assert!((v(0, 2) - v(0, 3)).abs() < 1e-12);
}

#[test]
fn gauss_reports_formula_and_oracle() {
    let ws = Workspace::new("gauss");
    let cfg = ws.config(
        "c.json",
        r#"{"g1": {"mean": [0.0], "var": [0.64]}, "g2": {"mean": [1.6], "var": [0.64]}, "mc_samples": 200000, "seed": 3}"#,
    );
    let out = ws.out("o");
    assert!(eib("gauss", &cfg, &out, &[]).status.success());
    let r = json(&out, "gauss.json");
    let formula = r["l1"]["formula"].as_f64().unwrap();
    assert!((formula - 1.365_378_984_274_171_8).abs() < 1e-12);
    assert!(r["l1"]["gap_in_standard_errors"].as_f64().unwrap() <= 4.0);

    let same = ws.config("s.json", r#"{"g1": {"mean": [1.0], "var": [2.0]}, "g2": {"mean": [1.0], "var": [2.0]}, "mc_samples": 5000}"#);
    assert!(eib("gauss", &same, &out, &[]).status.success());
    let r = json(&out, "gauss.json");
    assert_eq!((r["l1"]["formula"].as_f64(), r["l1"]["monte_carlo"].as_f64()), (Some(0.0), Some(0.0)));

    let split = ws.config(
        "d.json",
        r#"{"g1": {"mean": [0.0, 0.0], "var": [1.0, 1.0]}, "g2": {"mean": [0.0, 2.0], "var": [1.0, 1.0]}, "mc_samples": 20000}"#,
    );
    assert!(eib("gauss", &split, &out, &[]).status.success());
    let r = json(&out, "gauss.json");
    assert_eq!(r["l1"]["formula"].as_f64(), Some(0.0));
    assert!(r["l1"]["monte_carlo"].as_f64().unwrap() > 0.5);
    assert!(r["l1"]["gap"].as_f64().unwrap() < -0.5);
}

#[test]
fn decomposition_report_covers_the_class() {
    let ws = Workspace::new("dec");
    let cfg = ws.config(
        "c.json",
        r#"{"source": {"random": {"nx": 4, "ny": 2, "seed": 1}}, "target": {"random": {"nx": 4, "ny": 2, "seed": 2}},
            "encoder": {"inline": {"probs": [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4], [0.0, 0.5, 0.5]]}},
            "empirical": {"sample": {"m": 60, "seed": 3}}}"#,
    );
    let out = ws.out("o");
    assert!(eib("decompose", &cfg, &out, &[]).status.success());
    let r = json(&out, "decomposition.json");
    assert_eq!(r["hypotheses"], 8);
    assert_eq!(r["all_hold"], true);
    assert_eq!(r["reports"].as_array().unwrap().len(), 8);
    let rows = csv_rows(&read(&out, "decomposition.csv"));
    assert_eq!(rows[0][0], "0-0-0");
    assert_eq!(rows[7][0], "1-1-1");
}

#[test]
fn malformed_input_exits_with_two() {
    let ws = Workspace::new("bad");
    let out = ws.out("o");
    let cases = [
        ("syntax.json", "{not json", "solve"),
        ("field.json", r#"{"axis": "alpha", "gird": {}}"#, "sweep"),
        ("dist.json", r#"{"source": {"inline": {"probs": [[0.5, 0.6]]}}}"#, "solve"),
        ("cov.json", r#"{"g1": {"mean": [0.0], "var": [1.0]}, "g2": {"mean": [1.0], "var": [2.0]}}"#, "gauss"),
        ("other.json", r#"{"command": "gauss"}"#, "solve"),
    ];
    for (name, text, command) in cases {
        let cfg = ws.config(name, text);
        let o = eib(command, &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = eib("solve", &ws.root.join("missing.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn strict_mode_flags_unconverged_solves() {
    let ws = Workspace::new("strict");
    let cfg = ws.config(
        "c.json",
        r#"{"source": {"random": {"nx": 6, "ny": 3, "seed": 2}}, "solver": {"alpha": 0.7, "beta": 9.0, "t_cardinality": 3, "max_iter": 1}}"#,
    );
    let out = ws.out("o");
    assert_eq!(eib("solve", &cfg, &out, &[]).status.code(), Some(0));
    assert_eq!(eib("solve", &cfg, &out, &["--strict"]).status.code(), Some(3));
    assert_eq!(eib("solve", &cfg, &out, &["--strict", "--set", "solver.max_iter=10000"]).status.code(), Some(0));
}

#[test]
fn enumeration_budget_exits_with_four() {
    let ws = Workspace::new("budget");
    let cfg = ws.config(
        "c.json",
        r#"{"source": {"random": {"nx": 3, "ny": 3, "seed": 1}}, "target": {"random": {"nx": 3, "ny": 3, "seed": 2}},
            "encoder": {"solve": {"t_cardinality": 4}}, "empirical": {"sample": {"m": 30, "seed": 3}}, "budget": 80}"#,
    );
    let out = ws.out("o");
    let o = eib("decompose", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(eib("decompose", &cfg, &out, &["--set", "budget=81"]).status.code(), Some(0));
}

#[test]
fn low_beta_triggers_a_warning_and_threads_are_respected() {
    let ws = Workspace::new("warn");
    let cfg = ws.config("c.json", r#"{"source": {"random": {"nx": 4, "ny": 2, "seed": 0}}, "solver": {"beta": 0.8}}"#);
    let out = ws.out("o");
    let o = Command::new(env!("CARGO_BIN_EXE_eib"))
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("EIB_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: beta = 0.8"));
    assert_eq!(json(&out, "manifest.json")["threads"], 2);
}

#[test]
fn unknown_command_is_rejected() {
    let ws = Workspace::new("unknown");
    let cfg = ws.config("c.json", "{}");
    assert_eq!(eib("plot", &cfg, &ws.out("o"), &[]).status.code(), Some(2));
}
