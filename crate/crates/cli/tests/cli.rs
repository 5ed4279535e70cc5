use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn auditlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auditlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn usage_errors_exit_2_runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let none = auditlab(&[], dir.path());
    assert_eq!(none.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&none.stderr).contains("Usage"));
    assert_eq!(auditlab(&["sweep", "--strategy", "sideways"], dir.path()).status.code(), Some(2));
    assert_eq!(auditlab(&["pareto", "--betas", "0:2:0.5"], dir.path()).status.code(), Some(2));
    assert_eq!(auditlab(&["frobnicate"], dir.path()).status.code(), Some(2));

    let missing = auditlab(&["audit", "--config", "nowhere.json"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nowhere.json"));
    assert_eq!(auditlab(&["audit", "--t", "10", "--full-scrape"], dir.path()).status.code(), Some(1));
}

#[test]
fn pareto_writes_one_row_per_beta_with_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "pareto", "--t", "200", "--strategy", "demote-privileged:x=0.2", "--betas", "0:1:0.05", "--runs", "50", "--seed",
        "1", "--out", "out/pareto.csv",
    ];
    let out = auditlab(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "out/pareto.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "beta,epsilon_mean,p_detect,runs,q10,q90,on_frontier");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().any(|r| r.ends_with(",true")));

    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "out/pareto.manifest.json")).unwrap();
    assert_eq!(manifest["command"], "pareto");
    assert_eq!(manifest["config"]["runs"], 50);
    assert_eq!(manifest["config"]["betas"].as_array().unwrap().len(), 21);
    assert_eq!(manifest["argv"].as_array().unwrap().len(), args.len());

    // Same argv, same bytes.
    assert!(auditlab(&args, dir.path()).status.success());
    assert_eq!(read(dir.path(), "out/pareto.csv"), csv);
}

/// Parity of a platform whose earnings were fully sorted along popularity:
/// every pair with distinct popularity agrees except pairs whose sorted
/// earnings collide, which the strict tie rule counts as failures.
fn fully_sorted_parity(platform_json: &str) -> f64 {
    let state = auditlab_core::platform::PlatformState::from_json(platform_json).unwrap();
    let mut samples = state.true_samples();
    let mut earnings: Vec<u64> = samples.iter().map(|s| s.1 .0).collect();
    earnings.sort_unstable();
    samples.sort_by_key(|s| s.0);
    let (mut pairs, mut ok) = (0u64, 0u64);
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            if samples[i].0 < samples[j].0 {
                pairs += 1;
                ok += u64::from(earnings[i] < earnings[j]);
            }
        }
    }
    ok as f64 / pairs as f64
}

#[test]
fn bubble_sweep_ends_fully_sorted() {
    let dir = tempfile::tempdir().unwrap();
    assert!(auditlab(&["gen", "--seed", "2", "--out", "p.json"], dir.path()).status.success());
    let out = auditlab(
        &["sweep", "--strategy", "bubble", "--xs", "0:1:0.1", "--runs", "50", "--config", "p.json", "--out", "sweep.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "sweep.csv");
    let last: Vec<f64> = csv
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("1"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(last.len(), 50);
    let expected = fully_sorted_parity(&read(dir.path(), "p.json"));
    assert!(expected > 0.9999, "{expected}");
    assert!(last.iter().all(|&p| p == expected), "{last:?} vs {expected}");
    let threshold: serde_json::Value = serde_json::from_str(&read(dir.path(), "sweep.threshold.json")).unwrap();
    assert_eq!(threshold["strategy"], "bubble-swap");
    assert!(threshold["x_star"].as_f64().is_some());
}

#[test]
fn gen_is_reproducible_and_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    assert!(auditlab(&["gen", "--seed", "4", "--out", "a.json"], dir.path()).status.success());
    assert!(auditlab(&["gen", "--seed", "4", "--out", "b.json"], dir.path()).status.success());
    assert_eq!(read(dir.path(), "a.json"), read(dir.path(), "b.json"));
    let out = auditlab(
        &[
            "audit", "--config", "a.json", "--t", "300", "--beta", "0.2", "--strategy", "demote:x=0.5", "--format", "csv",
            "--out", "audit.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(dir.path(), "audit.csv").starts_with("parity,decision,t_a,epsilon,detected,"));
    assert!(read(dir.path(), "audit.flags.csv").starts_with("creator_id,declared_e,reconstructed_e,complete"));
}

#[test]
fn census_on_synthetic_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = auditlab(&["census", "--synthetic", "6000", "--seed", "2", "--out", "census.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "census.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "channel,di,violation,proxy_error_rate,seed");
    assert!(rows[1].starts_with("A,") && rows[2].starts_with("B,"));
    assert!(dir.path().join("census.manifest.json").exists());
}

#[test]
fn remote_audit_matches_local_audit() {
    let dir = tempfile::tempdir().unwrap();
    assert!(auditlab(&["gen", "--seed", "9", "--out", "p.json"], dir.path()).status.success());
    let strategy = "demote-privileged:x=0.2:seed=3";
    let mut server = Command::new(env!("CARGO_BIN_EXE_auditlab"))
        .args(["serve", "--bind", "127.0.0.1:0", "--config", "p.json", "--strategy", strategy])
        .current_dir(dir.path())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.split_whitespace().nth(2).unwrap().to_string();

    let common = ["audit", "--t", "250", "--beta", "0.3", "--seed", "5"];
    let remote = auditlab(&[&common[..], &["--remote", &addr, "--out", "remote.json"]].concat(), dir.path());
    let local = auditlab(
        &[&common[..], &["--config", "p.json", "--strategy", strategy, "--out", "local.json"]].concat(),
        dir.path(),
    );
    server.kill().unwrap();
    let _ = server.wait();
    assert!(remote.status.success(), "{}", String::from_utf8_lossy(&remote.stderr));
    assert!(local.status.success(), "{}", String::from_utf8_lossy(&local.stderr));
    assert_eq!(read(dir.path(), "remote.json"), read(dir.path(), "local.json"));
}
