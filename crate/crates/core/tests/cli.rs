use std::path::Path;
use std::process::Command;

fn idphase() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_idphase"));
    c.env("RUST_LOG", "warn").env_remove("IDPHASE_OUT");
    c
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn theory_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = idphase()
        .args(["theory", "--eps-min", "0.01", "--eps-max", "0.99", "--steps", "99", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("theory_curve.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,mu_star,delta_star,asymptote_2eps_log,residual"));
    assert_eq!(lines.count(), 99);
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "theory");
    assert_eq!(manifest["config"]["steps"], 99);
}

#[test]
fn theory_domain_error_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = idphase().args(["theory", "--eps-min", "1.5", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = idphase().args(["theory", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--no-such-flag"));
}

#[test]
fn help_lists_flags_with_defaults() {
    for sub in ["theory", "statdim", "certify", "phase", "transition", "compare-semirandom", "rank-scan", "spectrum"] {
        let out = idphase().args([sub, "--help"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{sub}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--out"), "{sub}");
        assert!(text.contains("--config"), "{sub}");
    }
    let text = String::from_utf8_lossy(&idphase().args(["phase", "--help"]).output().unwrap().stdout).into_owned();
    for flag in ["--model", "--n-full", "--alpha", "--eps", "--trials", "--seed", "--tol-feas", "--tol-rank", "--workers"] {
        assert!(text.contains(flag), "{flag}");
    }
    assert!(text.contains("[default: 50]"));
}

#[test]
fn certify_identity_is_identifiable() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("a.txt");
    std::fs::write(&m, "3 3\n1 0 0\n0 1 0\n0 0 1\n").unwrap();
    let out = idphase()
        .args(["certify", "--k", "1", "--matrix"])
        .arg(&m)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["verdict"], "Identifiable");
    assert_eq!(cert["lp_opt"], 0.0);
    assert_eq!(cert["rank_Ic"], 1);
    assert!(cert.get("witness").is_none());
}

#[test]
fn certify_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("a.txt");
    std::fs::write(&m, "1 3\n1 1 -1\n").unwrap();
    let out = idphase()
        .args(["certify", "--k", "1", "--matrix"])
        .arg(&m)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["verdict"], "NotIdentifiable");
    let w: Vec<f64> = serde_json::from_value(cert["witness"].clone()).unwrap();
    assert!((w[0] + w[1] - w[2]).abs() < 1e-12);
    assert!(w[0] >= 0.0 && w[1] >= 0.0);
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = idphase()
        .args(["certify", "--n", "200", "--alpha", "0.5", "--eps", "0.3", "--max-iterations", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"steps": 4, "eps-min": 0.2, "eps-max": 0.8}"#).unwrap();
    let out = idphase()
        .args(["theory", "--steps", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("theory_curve.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("0.2,"));
    assert!(rows[2].starts_with("0.8,"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = idphase()
        .env("IDPHASE_OUT", dir.path())
        .args(["spectrum", "--n", "20", "--l", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("spectrum.csv"));
    assert_eq!(csv.lines().next(), Some("sigma"));
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn manifest_reproduces_phase_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = idphase()
        .args(["phase", "--n", "40", "--alpha", "0.5", "--eps", "0.1,0.4,0.7", "--trials", "6", "--model", "rademacher", "--out"])
        .arg(a.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = idphase()
        .arg("phase")
        .arg("--config")
        .arg(a.path().join("manifest.json"))
        .arg("--out")
        .arg(b.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["phase_diagram.csv", "transitions.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let phase = read(&a.path().join("phase_diagram.csv"));
    assert_eq!(
        phase.lines().next(),
        Some("model,N,L,d,K,alpha_target,alpha_achieved,epsilon,trials,identifiable_count,ambiguous_count,base_seed")
    );
    assert_eq!(phase.lines().count(), 4);
    assert_eq!(
        read(&a.path().join("transitions.csv")).lines().next(),
        Some("model,N,alpha,epsilon_50,method,censored")
    );
}

#[test]
fn rank_scan_writes_both_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let out = idphase()
        .args(["rank-scan", "--n-full", "256", "--n", "100", "--l", "12", "--seeds", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("rank_scan.csv"));
    assert_eq!(csv.lines().next(), Some("N,L,d,seed,measured_rank,oracle_rank"));
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[4], f[5]);
    }
}
