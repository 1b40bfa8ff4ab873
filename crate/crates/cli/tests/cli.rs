//! End-to-end checks of the command-line surface: determinism of artifacts,
//! config validation, manifest completeness and the norm recomputation path.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

fn rotbl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotbl"))
}

const SMALL_CONFIG: &str = "\
[grid]
n_x1 = 64
n_y = 33
n_x3 = 33
L = 10.0
Y = 8.0

[time]
dt = 2e-3
T = 0.01
sample_every = 2

[scenario]
id = smalldata
amplitude = 0.05
";

fn manifest_checksums(dir: &Path) -> BTreeMap<String, String> {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("sha256") => {
                let hash = parts.next().unwrap().to_string();
                let name = parts.next().unwrap().to_string();
                map.insert(name, hash);
            }
            Some("config_sha256") => {
                map.insert("<config>".into(), parts.next().unwrap().to_string());
            }
            _ => {}
        }
    }
    map
}

#[test]
fn run_is_deterministic_and_manifest_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    fs::write(&cfg_path, SMALL_CONFIG).unwrap();

    let out_a = tmp.path().join("out_a");
    let out_b = tmp.path().join("out_b");
    for out in [&out_a, &out_b] {
        let status = rotbl()
            .args(["run", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let ma = manifest_checksums(&out_a);
    let mb = manifest_checksums(&out_b);
    assert_eq!(ma, mb, "artifacts differ between identical runs");
    assert!(ma.len() > 10, "manifest too small: {ma:?}");

    // every listed file exists and hashes to the recorded value
    for (name, hash) in &ma {
        if name == "<config>" {
            continue;
        }
        let bytes = fs::read(out_a.join(name)).unwrap();
        let digest = {
            use sha2::{Digest, Sha256};
            let h = Sha256::digest(&bytes);
            h.iter().map(|b| format!("{b:02x}")).collect::<String>()
        };
        assert_eq!(&digest, hash, "checksum mismatch for {name}");
    }
    // every emitted file is listed (manifest completeness)
    for entry in fs::read_dir(&out_a).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().to_string();
        if name == "manifest.txt" {
            continue;
        }
        assert!(ma.contains_key(&name), "file {name} missing from manifest");
    }
}

#[test]
fn validate_reports_violations_with_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "[weights]\nell = 0.4\n").unwrap();
    let out = rotbl()
        .args(["validate", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ell"), "stdout: {text}");

    let good = tmp.path().join("good.cfg");
    fs::write(&good, SMALL_CONFIG).unwrap();
    let out = rotbl()
        .args(["validate", "--config"])
        .arg(&good)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
}

#[test]
fn validate_parse_error_carries_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("broken.cfg");
    fs::write(&bad, "[grid]\nn_x1 == 64\n").unwrap();
    let out = rotbl()
        .args(["validate", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("line 2"), "stderr: {text}");
}

#[test]
fn norms_subcommand_reads_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    fs::write(&cfg_path, SMALL_CONFIG).unwrap();
    let out_dir = tmp.path().join("out");
    assert!(rotbl()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap()
        .success());
    let out = rotbl()
        .args(["norms", "--dump"])
        .arg(out_dir.join("u_B1_3.bin"))
        .args(["--rho", "0.5", "--a", "0.25", "--m-max", "6"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("X ="), "stdout: {text}");
    assert!(text.contains("Z ="));
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    fs::write(&cfg_path, SMALL_CONFIG).unwrap();
    let out_env = tmp.path().join("via_env");
    assert!(rotbl()
        .env("ROTBL_OUT", &out_env)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap()
        .success());
    assert!(out_env.join("manifest.txt").exists());
}

#[test]
fn sweep_emits_residual_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    // sweep needs enough resolution for the smallest eps; keep it small
    fs::write(
        &cfg_path,
        "[grid]\nn_x1 = 64\nn_y = 65\nn_x3 = 65\n[time]\ndt = 1e-3\nT = 0.004\n[sweep]\neps = 1e-2,3e-3\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = rotbl()
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fitted residual slope"), "stdout: {text}");
    assert!(out_dir.join("residual.csv").exists());
    assert!(out_dir.join("residual_summary.txt").exists());
    assert!(out_dir.join("manifest.txt").exists());
}

#[test]
fn zero_config_produces_zero_norm_history() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/zero.cfg");
    let out_dir = tmp.path().join("out");
    assert!(rotbl()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap()
        .success());
    let norms = fs::read_to_string(out_dir.join("norms.csv")).unwrap();
    for line in norms.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        for v in &cols[3..6] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "line: {line}");
        }
    }
}

#[test]
fn failing_run_exits_nonzero_and_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    // time step far beyond the advective stability limit
    fs::write(
        &cfg_path,
        "[grid]\nn_x1 = 64\nn_y = 33\nn_x3 = 33\n[time]\ndt = 50.0\nT = 100.0\n[scenario]\nid = smalldata\namplitude = 0.5\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = rotbl()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("stability limit"), "stderr: {text}");
    // partial artifacts retained, including the report naming the failure
    assert!(out_dir.join("run_report.txt").exists());
    let report = fs::read_to_string(out_dir.join("run_report.txt")).unwrap();
    assert!(report.contains("failed"), "report: {report}");
    assert!(out_dir.join("manifest.txt").exists());
}
