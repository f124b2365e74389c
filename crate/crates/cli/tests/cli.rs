//! End-to-end checks of the binary: artifact determinism, config schema
//! enforcement, exit codes, and the embedded-config round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 7

[architecture]
kind = "single_loop"
num_time_bins = 12
photons_per_bin = 1
fock_dim = 4

[[architecture.couplers]]
theta_over_pi = 0.25

[outputs]
studies = [
  "entropy_profile",
  "max_entropy_vs_n",
  "schmidt",
  "correlations",
  "samples",
  "graph_report",
]

[sampling]
count = 40

[correlations]
anchor = 6
max_separation = 4

[max_entropy]
n_values = [0, 1, 2]
"#;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("timebin-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn timebin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_is_deterministic_and_artifacts_embed_the_config() {
    let dir = workdir("determinism");
    let config = write_config(&dir, CONFIG);
    for run in ["a", "b"] {
        let out = timebin(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.join(run).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in [
        "entropy_profile.csv",
        "max_entropy_vs_n.csv",
        "schmidt.csv",
        "correlations.csv",
        "samples.csv",
        "graph.edges",
        "graph_report.txt",
    ] {
        let a = std::fs::read(dir.join("a").join(file)).unwrap();
        let b = std::fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    let correlations = std::fs::read_to_string(dir.join("a/correlations.csv")).unwrap();
    assert!(correlations.contains("x,C,g2\n"));
    let schmidt = std::fs::read_to_string(dir.join("a/schmidt.csv")).unwrap();
    assert!(schmidt.contains("k,lambda\n"));
    let max_entropy = std::fs::read_to_string(dir.join("a/max_entropy_vs_n.csv")).unwrap();
    assert!(max_entropy.contains("n,E_max,bound\n"));
    let entropy = std::fs::read_to_string(dir.join("a/entropy_profile.csv")).unwrap();
    assert!(entropy.starts_with("# library = timebin-core"));
    assert!(entropy.contains("# resolved configuration:"));
    assert!(entropy.contains("i,E\n"));
    assert_eq!(entropy.lines().filter(|l| !l.starts_with('#')).count(), 13); // header + 12 cuts
}

#[test]
fn embedded_config_reruns_to_identical_artifacts() {
    let dir = workdir("roundtrip");
    let config = write_config(&dir, CONFIG);
    let out = timebin(&[
        "sample",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("first").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let artifact = std::fs::read_to_string(dir.join("first/samples.csv")).unwrap();
    // Extract the embedded resolved config: the `# `-prefixed TOML block.
    let embedded: String = artifact
        .lines()
        .skip_while(|l| !l.starts_with("# resolved configuration:"))
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches("# ").trim_start_matches('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let resolved_path = dir.join("resolved.toml");
    std::fs::write(&resolved_path, embedded).unwrap();
    let out = timebin(&[
        "sample",
        "--config",
        resolved_path.to_str().unwrap(),
        "--out",
        dir.join("second").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = std::fs::read(dir.join("second/samples.csv")).unwrap();
    assert_eq!(std::fs::read(dir.join("first/samples.csv")).unwrap(), again);
}

#[test]
fn unknown_config_fields_exit_with_code_2() {
    let dir = workdir("schema");
    let config = write_config(&dir, &CONFIG.replace("seed = 7", "seed = 7\nmystery = true"));
    let out = timebin(&[
        "entropy",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mystery"), "{stderr}");
}

#[test]
fn oversized_oracle_check_exits_with_code_3() {
    let dir = workdir("cap");
    let config = write_config(
        &dir,
        &CONFIG.replace("num_time_bins = 12", "num_time_bins = 64"),
    );
    let out = timebin(&[
        "oracle-check",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seed_override_changes_samples() {
    let dir = workdir("seed");
    let config = write_config(&dir, CONFIG);
    for (run, seed) in [("s7", "7"), ("s8", "8")] {
        let out = timebin(&[
            "sample",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            dir.join(run).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.join("s7/samples.csv")).unwrap();
    let b = std::fs::read(dir.join("s8/samples.csv")).unwrap();
    assert_ne!(a, b);
    let text = String::from_utf8(b).unwrap();
    assert!(text.contains("\n0,8,"), "seed column reflects the override");
}

#[test]
fn graph_report_for_a_single_loop_is_tractable() {
    let dir = workdir("graph");
    let config = write_config(&dir, CONFIG);
    let out = timebin(&[
        "graph",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.join("graph_report.txt")).unwrap();
    assert!(report.contains("treewidth_bound_min_fill = 1"));
    assert!(report.contains("family_class = tractable"));

    // The emitted edge list is consumable by the graph subcommand.
    let out = timebin(&[
        "graph",
        "--edges",
        dir.join("graph.edges").to_str().unwrap(),
        "--out",
        dir.join("from-edges").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.join("from-edges/graph_report.txt")).unwrap();
    assert!(report.contains("treewidth_bound_min_fill = 1"));
}

#[test]
fn converge_ladder_starts_at_ten_times_the_mean_occupation() {
    let dir = workdir("ladder");
    let config = write_config(
        &dir,
        &CONFIG.replace("[outputs]", "[convergence]\nenabled = true\n\n[outputs]"),
    );
    let out = timebin(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("converge.csv")).unwrap();
    let rung0 = report.lines().find(|l| l.starts_with("0,")).unwrap();
    assert!(rung0.starts_with("0,10,10,"), "{rung0}");
}

#[test]
fn converge_reports_immediate_convergence_for_vacuum() {
    let dir = workdir("converge");
    let config = write_config(
        &dir,
        &CONFIG
            .replace("photons_per_bin = 1", "photons_per_bin = 0")
            .replace("[outputs]", "[convergence]\nenabled = true\n\n[outputs]"),
    );
    let out = timebin(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("converge.csv")).unwrap();
    let first_data_line = report
        .lines()
        .find(|l| l.starts_with("1,"))
        .expect("second rung present");
    assert!(first_data_line.ends_with("true"), "{first_data_line}");
    // The first rung's values already match the converged ones.
    let rung0 = report.lines().find(|l| l.starts_with("0,")).unwrap();
    let e0: f64 = rung0.split(',').nth(3).unwrap().parse().unwrap();
    assert!(e0.abs() < 1e-12);
}

#[test]
fn studies_incompatible_with_the_kind_are_config_errors() {
    let dir = workdir("kindcheck");
    let config = write_config(
        &dir,
        r#"
[architecture]
kind = "tritter_cylinder"
num_loops = 3
num_time_bins = 4
photons_per_bin = 1
fock_dim = 3
couplers = [
  { theta_over_pi = 0.2 }, { theta_over_pi = 0.2 }, { theta_over_pi = 0.2 },
  { theta_over_pi = 0.2 }, { theta_over_pi = 0.2 }, { theta_over_pi = 0.2 },
  { theta_over_pi = 0.2 }, { theta_over_pi = 0.2 }, { theta_over_pi = 0.2 },
]

[outputs]
studies = ["entropy_profile"]
"#,
    );
    let out = timebin(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Graph analysis of the same architecture is fine.
    let out = timebin(&[
        "graph",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn threads_flag_produces_the_same_artifacts() {
    let dir = workdir("threads");
    let config = write_config(&dir, CONFIG);
    for (run, threads) in [("t1", "1"), ("t4", "4")] {
        let out = timebin(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            dir.join(run).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for file in ["entropy_profile.csv", "samples.csv", "graph_report.txt"] {
        let a = std::fs::read(dir.join("t1").join(file)).unwrap();
        let b = std::fs::read(dir.join("t4").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between thread counts");
    }
}
