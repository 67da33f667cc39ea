use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn batchmac(args: &[&str], cfg: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_batchmac"));
    cmd.args(&args[..1])
        .arg("--config")
        .arg(cfg)
        .args(&args[1..]);
    cmd.output().unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unknown_key_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "frobnicate=1\n");
    let out = batchmac(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));
}

#[test]
fn chain_with_cw2_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "cw=2\nN=2\nL=1\n");
    let out = batchmac(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cw=1"));
}

#[test]
fn io_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    assert_eq!(batchmac(&["run"], &missing).status.code(), Some(2));

    let cfg = write_cfg(dir.path(), "N=2\nL=1\ntrials=10\n");
    let bad_out = dir.path().join("no-such-dir").join("r.csv");
    let out = batchmac(&["run", "--out", bad_out.to_str().unwrap()], &cfg);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_and_json_carry_identical_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "be_min=1\nbe_max=2\nnb_max=1\nN=2,3\nL=1,2\ntrials=2000\nseed=9\n",
    );
    let csv = batchmac(&["run"], &cfg);
    let json = batchmac(&["run", "--format", "json"], &cfg);
    assert!(csv.status.success() && json.status.success());

    let rows = parse_csv(&String::from_utf8(csv.stdout).unwrap());
    let header = rows[0].clone();
    assert_eq!(
        header.join(","),
        "N,L,method,S_N,S_N_leibnitz,residual_mass,p50,p90,max,stderr"
    );
    let objects: Vec<Value> = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(objects.len(), rows.len() - 1);
    // 2 points × 2 sizes × (2 chains + sim + exact).
    assert_eq!(objects.len(), 16);
    for (row, obj) in rows[1..].iter().zip(&objects) {
        for (name, cell) in header.iter().zip(row) {
            let v = &obj[name.as_str()];
            if cell.is_empty() {
                assert!(v.is_null(), "{name}: {v}");
            } else if name == "method" {
                assert_eq!(v.as_str().unwrap(), cell);
            } else {
                assert_eq!(v.as_f64().unwrap(), cell.parse::<f64>().unwrap(), "{name}");
            }
        }
    }
}

#[test]
fn config_out_key_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let from_cfg = dir.path().join("from_cfg.csv");
    let cfg = write_cfg(
        dir.path(),
        &format!("N=1\nL=2\ntrials=50\nout={}\n", from_cfg.display()),
    );
    assert!(batchmac(&["run"], &cfg).status.success());
    let text = fs::read_to_string(&from_cfg).unwrap();
    assert!(text.lines().any(|l| l.starts_with("1,2,sim,1.00000000,")));

    let flag = dir.path().join("flag.json");
    assert!(batchmac(
        &["run", "--out", flag.to_str().unwrap(), "--format", "json"],
        &cfg
    )
    .status
    .success());
    let v: Value = serde_json::from_str(&fs::read_to_string(flag).unwrap()).unwrap();
    assert!(v.is_array());
}

#[test]
fn residual_column_grows_along_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "L=3\nN=5,15,30\nkernels=original\nsim=false\n");
    let out = batchmac(&["run"], &cfg);
    assert!(out.status.success());
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let residual: Vec<f64> = rows[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert_eq!(residual.len(), 3);
    assert!(
        residual[0] < residual[1] && residual[1] < residual[2],
        "{residual:?}"
    );
    assert!(rows[1..]
        .iter()
        .all(|r| r[2] == "original-chain" && !r[4].is_empty()));
}

#[test]
fn profile_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "semantics=naive\n");
    let out = batchmac(&["profile"], &cfg);
    assert!(out.status.success());
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0].join(","), "t,a,d0,d1,d2,d3,d4");
    // Naive t_max = 115.
    assert_eq!(rows.len(), 1 + 116);
    assert_eq!(rows[1][1], "0.133064508");
    let total: f64 = rows[1..].iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 5.0).abs() < 1e-6);
}
