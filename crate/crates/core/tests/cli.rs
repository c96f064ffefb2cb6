use std::fs;
use std::process::Command;

fn ulgrant() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ulgrant"));
    cmd.env_remove("ULGRANT_TBS_TABLE");
    cmd
}

#[test]
fn single_run_prints_statistics() {
    let out = ulgrant()
        .args(["--period", "4", "--alpha", "2", "--duration-ms", "20000"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("period_ms=4 alpha=2"));
    assert!(text.contains("prbs_per_grant=2"));
    assert!(text.contains("p999_ms="));
}

#[test]
fn errors_are_machine_parsable() {
    let out = ulgrant().args(["--alpha", "0.5"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=config msg=\""), "{err}");
    assert!(err.contains("0.5"));

    let out = ulgrant()
        .args(["--prbs", "1", "--mcs", "0", "--period", "40"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error kind=infeasible"));
}

#[test]
fn config_file_with_flag_overrides_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let trace = dir.path().join("trace.txt");
    fs::write(
        &cfg,
        "period = 49\nalpha = 1.5\nduration_ms = 15000\nwarmup_ms = 0\n",
    )
    .unwrap();
    let out = ulgrant()
        .arg("--config")
        .arg(&cfg)
        .args(["--period", "7"])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("period_ms=7 alpha=1.5"), "{text}");
    let lines: Vec<String> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert!(lines.len() > 600);
    for line in &lines {
        let f: Vec<f64> = line.split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f.len(), 5);
        assert!((f[3] - f[2] - f[4]).abs() < 1e-9);
    }
}

#[test]
fn sweep_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ulgrant()
        .args(["--sweep", "--duration-ms", "15000", "--jobs", "2"])
        .args(["--set", "periods=1,25", "--set", "alphas=1,2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "sweep.csv",
        "skipped.csv",
        "table1.csv",
        "fig2_delay.svg",
        "fig3_reliability.svg",
        "fig4_resources.svg",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with(
        "period_ms,alpha,seed,count,mean_ms,std_ms,p999_ms,exceed50,prbs_per_grant,alloc_bps,overalloc,users\n"
    ));
}

#[test]
fn tbs_table_can_be_replaced_through_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("tbs.txt");
    fs::write(&bad, "0 1 16\n").unwrap();
    let out = ulgrant()
        .env("ULGRANT_TBS_TABLE", &bad)
        .args(["--duration-ms", "15000"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error kind=parse"));

    let copy = dir.path().join("copy.txt");
    fs::write(&copy, include_str!("../data/tbs_ul.txt")).unwrap();
    let out = ulgrant()
        .env("ULGRANT_TBS_TABLE", &copy)
        .args(["--duration-ms", "15000"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
