use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use copfdr::simulate::{generate_dataset, SimulationConfig};
use flate2::write::GzEncoder;
use flate2::Compression;
use tempfile::TempDir;

const TWO_GENES: &str = "gene_id\tko_1\tko_2\tko_3\twt_1\twt_2\twt_3\n\
g1\t1\t2\t3\t1\t1\t1\n\
g2\t5.5\t7.25\t3.1\t2\t9.75\t4.4\n";

const STANDARD_NULL: &str = r#"{"weights": [1.0], "means": [0.0], "sds": [1.0]}"#;

fn copfdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copfdr")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = copfdr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Effects file drawn from the simulation design, with the standard normal null.
fn effects(dir: &Path, m: usize, p0: f64) -> (PathBuf, PathBuf) {
    let cfg = SimulationConfig {
        m,
        p0,
        ..SimulationConfig::default()
    };
    let (t, _) = generate_dataset(&cfg, 0).unwrap();
    let mut text = String::from("id\tbeta_hat\ty\n");
    for r in t.records() {
        text.push_str(&format!("{}\t{:?}\t{:?}\n", r.id, r.beta_hat, r.y));
    }
    let path = dir.join("effects.tsv");
    fs::write(&path, text).unwrap();
    let null = dir.join("null.json");
    fs::write(&null, STANDARD_NULL).unwrap();
    (path, null)
}

fn rejected_ids(decisions: &str) -> Vec<String> {
    decisions
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| l.ends_with("\t1"))
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect()
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["bootstrap", "fit", "test", "simulate"] {
        assert!(ok(&[sub, "--help"]).contains("Usage"));
    }
}

#[test]
fn bootstrap_writes_oracle_values_and_reads_gzip() {
    let dir = TempDir::new().unwrap();
    let plain = dir.path().join("counts.tsv");
    fs::write(&plain, TWO_GENES).unwrap();
    let gz = dir.path().join("counts.tsv.gz");
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(TWO_GENES.as_bytes()).unwrap();
    fs::write(&gz, enc.finish().unwrap()).unwrap();

    let out_a = dir.path().join("a.tsv");
    let out_b = dir.path().join("b.tsv");
    ok(&["bootstrap", "--input", s(&plain), "--output", s(&out_a)]);
    ok(&["bootstrap", "--input", s(&gz), "--output", s(&out_b)]);
    let a = fs::read_to_string(&out_a).unwrap();
    assert_eq!(a, fs::read_to_string(&out_b).unwrap());
    assert!(a.starts_with("# copfdr"));
    assert!(a.contains("seed=20240001"));

    let rows: Vec<Vec<&str>> = a.lines().skip(2).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0][0], "g1");
    let sd = |r: &Vec<&str>| r[2].parse::<f64>().unwrap();
    // References from an arbitrary-precision enumeration of all 729 resamples.
    assert!((sd(&rows[0]) - 0.362_688_186_165_392_6).abs() < 1e-14);
    assert!((sd(&rows[1]) - 0.614_614_681_613_860_2).abs() < 1e-14);
    assert!((rows[0][1].parse::<f64>().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn bootstrap_rejects_empty_input_without_output() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.tsv");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("out.tsv");
    let r = copfdr(&["bootstrap", "--input", s(&empty), "--output", s(&out)]);
    assert!(!r.status.success());
    assert!(!String::from_utf8_lossy(&r.stderr).is_empty());
    assert!(!out.exists());
}

#[test]
fn fit_picks_the_generating_family() {
    let dir = TempDir::new().unwrap();
    let (eff, null) = effects(dir.path(), 2000, 1.0);
    let out = dir.path().join("fit");
    let text = ok(&["fit", "--input", s(&eff), "--null", s(&null), "--out-dir", s(&out)]);
    assert!(text.contains("BIC Clayton R90"), "{text}");
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("selection.json")).unwrap()).unwrap();
    assert_eq!(j["seed"], 20240001);
    assert_eq!(j["result"]["candidates"].as_array().unwrap().len(), 5);
}

#[test]
fn fit_needs_ten_rows() {
    let dir = TempDir::new().unwrap();
    let eff = dir.path().join("one.tsv");
    fs::write(&eff, "id\tbeta_hat\ty\nh1\t0.3\t0.5\n").unwrap();
    let out = dir.path().join("fit");
    let r = copfdr(&["fit", "--input", s(&eff), "--out-dir", s(&out)]);
    assert!(!r.status.success());
    assert!(!out.exists());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let (eff, null) = effects(dir.path(), 1500, 0.95);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["--threads", "1", "test", "--input", s(&eff), "--null", s(&null), "--out-dir", s(&a)]);
    ok(&["--threads", "3", "test", "--input", s(&eff), "--null", s(&null), "--out-dir", s(&b)]);
    for f in ["decisions.tsv", "outcome.json", "gamma1_curve.tsv", "selection.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn independence_soft_equals_storey() {
    let dir = TempDir::new().unwrap();
    let (eff, null) = effects(dir.path(), 1500, 0.9);
    let s_dir = dir.path().join("s");
    let st_dir = dir.path().join("storey");
    let base = ["test", "--input", s(&eff), "--null", s(&null), "--copula", "independence"];
    ok(&[&base[..], &["--method", "s", "--out-dir", s(&s_dir)]].concat());
    ok(&[&base[..], &["--method", "storey", "--out-dir", s(&st_dir)]].concat());
    let a = fs::read_to_string(s_dir.join("decisions.tsv")).unwrap();
    let b = fs::read_to_string(st_dir.join("decisions.tsv")).unwrap();
    assert!(!rejected_ids(&a).is_empty());
    assert_eq!(a, b);
    assert!(!s_dir.join("gamma1_curve.tsv").exists());
}

/// Storey's rule by enumeration: the largest p with π̂0 p M / #{q <= p} <= α.
fn brute_force_storey(p: &[f64], alpha: f64, lambda: f64) -> usize {
    let m = p.len() as f64;
    let pi0 = (p.iter().filter(|&&x| x > lambda).count() as f64 / ((1.0 - lambda) * m)).min(1.0);
    let mut best: Option<f64> = None;
    for &g in p {
        let r = p.iter().filter(|&&x| x <= g).count() as f64;
        if pi0 * g * m / r <= alpha && best.is_none_or(|b| g > b) {
            best = Some(g);
        }
    }
    best.map_or(0, |g| p.iter().filter(|&&x| x <= g).count())
}

#[test]
fn small_fixture_matches_brute_force() {
    let dir = TempDir::new().unwrap();
    let betas = [
        4.1, -3.7, 0.2, 3.3, -0.4, 1.1, -2.9, 0.05, 0.7, -1.6, 2.6, 0.3, -0.9, 5.0, 0.01, -0.6, 1.9, -3.1, 0.45, 0.8,
    ];
    let mut text = String::from("id\tbeta_hat\ty\n");
    for (i, b) in betas.iter().enumerate() {
        text.push_str(&format!("h{}\t{b}\t{}\n", i + 1, 0.1 * (i + 1) as f64));
    }
    let eff = dir.path().join("e.tsv");
    fs::write(&eff, text).unwrap();
    let null = dir.path().join("null.json");
    fs::write(&null, STANDARD_NULL).unwrap();
    let out = dir.path().join("o");
    ok(&[
        "test", "--input", s(&eff), "--null", s(&null), "--method", "storey", "--alpha", "0.2", "--out-dir", s(&out),
    ]);
    let d = fs::read_to_string(out.join("decisions.tsv")).unwrap();
    let p2: Vec<f64> = d
        .lines()
        .skip(2)
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect();
    let expected = brute_force_storey(&p2, 0.2, 0.5);
    assert!(expected > 0);
    assert_eq!(rejected_ids(&d).len(), expected);
}

#[test]
fn zero_alpha_rejects_nothing_and_flags_override_config() {
    let dir = TempDir::new().unwrap();
    let (eff, _) = effects(dir.path(), 1000, 0.8);
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"input": "{}", "alpha": 0.2, "method": "s", "copula": "clayton:r90:1.3333333333333333", "null": {STANDARD_NULL}}}"#,
            s(&eff)
        ),
    )
    .unwrap();
    let a = dir.path().join("a");
    ok(&["test", "--config", s(&cfg), "--out-dir", s(&a)]);
    assert!(!rejected_ids(&fs::read_to_string(a.join("decisions.tsv")).unwrap()).is_empty());
    let b = dir.path().join("b");
    ok(&["test", "--config", s(&cfg), "--alpha", "0", "--out-dir", s(&b)]);
    assert!(rejected_ids(&fs::read_to_string(b.join("decisions.tsv")).unwrap()).is_empty());
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(b.join("outcome.json")).unwrap()).unwrap();
    assert_eq!(j["result"]["outcome"]["n_rejected"], 0);
    assert_eq!(j["result"]["copula"]["family"], "Clayton");
}

#[test]
fn bad_flags_and_configs_leave_no_outputs() {
    let dir = TempDir::new().unwrap();
    let (eff, null) = effects(dir.path(), 500, 0.9);
    let out = dir.path().join("out");
    let bad = [
        vec!["test", "--input", s(&eff), "--bogus", "--out-dir", s(&out)],
        vec!["test", "--input", s(&eff), "--method", "x", "--out-dir", s(&out)],
        vec!["test", "--input", s(&eff), "--copula", "clayton:r45", "--out-dir", s(&out)],
        vec!["test", "--input", s(&eff), "--null", s(&null), "--lambda", "1.5", "--out-dir", s(&out)],
    ];
    for args in bad {
        assert!(!copfdr(&args).status.success(), "{args:?}");
        assert!(!out.exists());
    }
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"alpah": 0.1}"#).unwrap();
    assert!(!copfdr(&["test", "--config", s(&cfg), "--input", s(&eff), "--out-dir", s(&out)]).status.success());
    fs::write(&cfg, r#"{"study": "cell", "sim": {"mu": 3.0, "kk": 2}}"#).unwrap();
    assert!(!copfdr(&["simulate", "--config", s(&cfg), "--out-dir", s(&out)]).status.success());
    assert!(!out.exists());
}

#[test]
fn simulate_writes_tables_reproducibly() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(&cfg, r#"{"study": "cell", "sim": {"m": 600, "k": 2}, "mu": [2.0, 4.0]}"#).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["simulate", "--config", s(&cfg), "--out-dir", s(&a), "--seed", "7"]);
    ok(&["--threads", "2", "simulate", "--config", s(&cfg), "--out-dir", s(&b), "--seed", "7"]);
    let t = fs::read_to_string(a.join("simtable.tsv")).unwrap();
    assert_eq!(t, fs::read_to_string(b.join("simtable.tsv")).unwrap());
    assert!(t.starts_with("# copfdr") && t.contains("seed=7"));
    assert_eq!(t.lines().count(), 2 + 6);

    let c = dir.path().join("c");
    ok(&["simulate", "--config", s(&cfg), "--out-dir", s(&c), "--seed", "8"]);
    assert_ne!(t, fs::read_to_string(c.join("simtable.tsv")).unwrap().replace("seed=8", "seed=7"));

    fs::write(&cfg, r#"{"study": "selection", "n": 400, "reps": 1}"#).unwrap();
    let sel = dir.path().join("sel");
    ok(&["simulate", "--config", s(&cfg), "--out-dir", s(&sel)]);
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(sel.join("selection.json")).unwrap()).unwrap();
    let wins: u64 = j["result"]["families"].as_array().unwrap().iter().map(|f| f["wins_bic"].as_u64().unwrap()).sum();
    assert_eq!(wins, 1);

    fs::write(
        &cfg,
        r#"{"study": "misspecification", "sim": {"m": 600, "k": 2}, "families": ["Clayton", "Frank"], "mode": "fixed"}"#,
    )
    .unwrap();
    let mis = dir.path().join("mis");
    ok(&["simulate", "--config", s(&cfg), "--out-dir", s(&mis)]);
    let t = fs::read_to_string(mis.join("simtable.tsv")).unwrap();
    assert!(t.contains("fixed clayton\t") && t.contains("fixed frank\t"));
}
