use std::path::PathBuf;
use std::process::{Command, Output};

fn qai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qai"))
        .args(args)
        .env_remove("QAI_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qai-cli-test-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn qubit_report() {
    let v = json(&qai(&[
        "qubit", "--r", "0.8", "--theta", "1.0", "--phi", "0.5",
    ]));
    assert!((v["report"]["r"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(v["report"]["compat_bound"], 2);
    assert_eq!(v["report"]["spectrum"].as_array().unwrap().len(), 3);
}

#[test]
fn qubit_outside_ball_fails_with_domain_error() {
    let out = qai(&["qubit", "--r", "1.0", "--theta", "1.0", "--phi", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: DomainError:"));
}

#[test]
fn qubit_at_pole_fails_with_degenerate_chart() {
    let out = qai(&["qubit", "--r", "0.5", "--theta", "0", "--phi", "0.5"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: DegenerateChart:"));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn gaussian_report() {
    let v = json(&qai(&[
        "gaussian", "--n", "0.5", "--r", "0.3", "--phi", "0.2",
    ]));
    assert!((v["report"]["r"].as_f64().unwrap() - 0.8).abs() < 1e-6);
    assert_eq!(v["report"]["spectrum"].as_array().unwrap().len(), 5);
    assert_eq!(v["report"]["compat_bound"], 3);
    assert_eq!(v["chart"], "polar");
    assert_eq!(v["moments"]["sigma"].as_array().unwrap().len(), 2);
}

#[test]
fn gaussian_without_squeezing_uses_cartesian_chart() {
    let v = json(&qai(&["gaussian", "--n", "0.5"]));
    assert_eq!(v["chart"], "cartesian");
    assert!((v["report"]["r"].as_f64().unwrap() - 0.8).abs() < 1e-6);
}

#[test]
fn gaussian_pure_state_is_rejected() {
    let out = qai(&["gaussian", "--n", "0", "--r", "0.3"]);
    assert_eq!(out.status.code(), Some(14));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PureStateSingular"));
}

#[test]
fn csv_report_format() {
    let text = stdout(&qai(&[
        "qubit", "--r", "0.5", "--theta", "1", "--phi", "0", "--format", "csv",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    assert!(text.lines().any(|l| l.starts_with("report.compat_bound,2")));
}

#[test]
fn sweep_rows_and_reproducibility() {
    let args = ["sweep", "-d", "3", "-n", "40", "--seed", "9"];
    let a = stdout(&qai(&args));
    assert_eq!(
        a.lines().next(),
        Some("d,seed,purity,ai,beta_delta_m,residual")
    );
    assert_eq!(a.lines().count(), 41);
    assert_eq!(a, stdout(&qai(&args)));
    for line in a.lines().skip(1) {
        let residual: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual <= 1e-7);
    }
    let other = stdout(&qai(&["sweep", "-d", "3", "-n", "40", "--seed", "10"]));
    assert_ne!(a, other);
}

#[test]
fn sweep_json_lines() {
    let text = stdout(&qai(&[
        "sweep",
        "--dim",
        "4",
        "--samples",
        "3",
        "--format",
        "json",
    ]));
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["d"], 4);
    }
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn sweep_rejects_qubits() {
    let out = qai(&["sweep", "-d", "2", "-n", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("qubit"));
}

#[test]
fn sweep_writes_out_file() {
    let dir = scratch("out");
    let path = dir.join("s.csv");
    let out = qai(&[
        "sweep",
        "-d",
        "3",
        "-n",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 6);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn gibbs_curve_degenerate_hamiltonian() {
    let text = stdout(&qai(&[
        "gibbs-curve",
        "--deltas",
        "1,1,0,0",
        "--beta-min",
        "0",
        "--beta-max",
        "40",
        "--steps",
        "40",
    ]));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[0][1], 0.25);
    assert_eq!(rows[0][2], 0.0);
    let last = rows.last().unwrap();
    assert!((last[1] - 0.5).abs() < 1e-9 && (last[2] - 1.0).abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
}

#[test]
fn dynamics_rows() {
    let text = stdout(&qai(&[
        "dynamics", "--n-mean", "4", "--eta", "1", "--steps", "20",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,mu,r5,r2"));
    let first = lines.next().unwrap();
    assert!(
        first.ends_with(','),
        "t = 0 has no two-parameter AI: {first}"
    );
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3] <= f[2] + 1e-8);
    }
}

#[test]
fn dynamics_coherent_state_stays_pure() {
    let text = stdout(&qai(&[
        "dynamics", "--n-mean", "4", "--eta", "0", "--steps", "10",
    ]));
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert!((f[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn submodel_examples() {
    let v = json(&qai(&[
        "submodel", "--model", "gaussian", "--subset", "r,phi",
    ]));
    assert!(v["r_sub"].as_f64().unwrap() > 0.1);
    let v = json(&qai(&[
        "submodel",
        "--model",
        "gaussian",
        "--subset",
        "re_alpha,n",
    ]));
    assert!(v["r_sub"].as_f64().unwrap().abs() < 1e-12);
    let v = json(&qai(&[
        "submodel", "--model", "random", "--dim", "3", "--subset", "0,1,2,6",
    ]));
    assert_eq!(v["holds"], true);
    assert_eq!(v["removed"], 4);
    let v = json(&qai(&[
        "submodel",
        "--model",
        "qubit",
        "--subset",
        "theta,phi",
        "--r",
        "0.5",
    ]));
    assert!((v["r_sub"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn submodel_unknown_parameter() {
    let out = qai(&["submodel", "--model", "qubit", "--subset", "psi"]);
    assert_eq!(out.status.code(), Some(16));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: InvalidSubset:"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# sweep defaults\ndim = 3\nsamples = 4\nseed = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_config = stdout(&qai(&["sweep", "--config", c]));
    assert_eq!(
        from_config,
        stdout(&qai(&["sweep", "-d", "3", "-n", "4", "--seed", "2"]))
    );
    let overridden = stdout(&qai(&["sweep", "--config", c, "--seed", "3"]));
    assert_eq!(
        overridden,
        stdout(&qai(&["sweep", "-d", "3", "-n", "4", "--seed", "3"]))
    );
    std::fs::write(&cfg, "not a pair\n").unwrap();
    let out = qai(&["sweep", "--config", c]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: ConfigError:"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn thread_count_from_environment() {
    let base = stdout(&qai(&["sweep", "-d", "3", "-n", "30", "--threads", "1"]));
    let env = Command::new(env!("CARGO_BIN_EXE_qai"))
        .args(["sweep", "-d", "3", "-n", "30"])
        .env("QAI_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(base, stdout(&env));
}

#[test]
fn invalid_tolerance_is_rejected() {
    let out = qai(&[
        "qubit",
        "--r",
        "0.5",
        "--theta",
        "1",
        "--phi",
        "0",
        "--rank-tol",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(qai(&["qubit", "--r", "0.5"]).status.code(), Some(2));
    assert_eq!(qai(&["frobnicate"]).status.code(), Some(2));
}
