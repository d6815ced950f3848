use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chsim"))
        .args(args)
        .output()
        .expect("chsim runs")
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let path = dir.join("in.cfg");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn equilibrium_run_keeps_zero_energy() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "dim = 2\nN = 16\nepsilon = 0.5\ntau = 0.1\nt_final = 2\nic = constant(1)\nsnapshot_every = 5\n",
    );
    let out_dir = tmp.path().join("run");
    let o = chsim(&["run", "--config", &cfg, "--out-dir", out_dir.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    let energy = column(&csv, "energy");
    assert_eq!(energy.len(), 21);
    assert!(energy.iter().all(|&e| e.abs() < 1e-14), "{energy:?}");
    let volume = (2.0 * std::f64::consts::PI).powi(2);
    assert!(column(&csv, "mass").iter().all(|&m| (m - volume).abs() < 1e-12 * volume));

    let snap = fs::read(out_dir.join("snap_00000000.chfs")).unwrap();
    assert_eq!(snap.len(), 22 + 8 * 16 * 16);
    assert!(out_dir.join("snap_00000020.chfs").exists());
    assert!(out_dir.join("config.cfg").exists());

    let o = chsim(&["audit", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violations           0"));
}

#[test]
fn spinodal_run_passes_audit() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "dim = 2\nN = 32\nepsilon = 0.5\ntau = 0.1\nt_final = 5\nic = spinodal(0.05, 42)\n",
    );
    let run = tmp.path().join("run");
    let o = chsim(&["run", "--config", &cfg, "--out-dir", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let energy = column(&fs::read_to_string(run.join("diagnostics.csv")).unwrap(), "energy");
    assert!(energy.windows(2).all(|w| w[1] <= w[0] + 1e-10 * (1.0 + w[0].abs())));
    let o = chsim(&["audit", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn odd_grid_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "dim = 2\nN = 7\nepsilon = 0.5\ntau = 0.1\nt_final = 1\n");
    let o = chsim(&["run", "--config", &cfg, "--out-dir", tmp.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "dim = 2\nN = 8\nepsilon = 0.5\ntau = 0.1\nt_final = 1\ncolour = red\n");
    assert_eq!(chsim(&["run", "--config", &cfg]).status.code(), Some(2));
    let gone = tmp.path().join("nope.cfg");
    assert_eq!(chsim(&["run", "--config", gone.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn tampered_trace_fails_audit() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "dim = 2\nN = 16\nepsilon = 0.5\ntau = 0.1\nt_final = 2\nic = spinodal(0.05, 7)\n",
    );
    let run = tmp.path().join("run");
    assert_eq!(
        chsim(&["run", "--config", &cfg, "--out-dir", run.to_str().unwrap(), "--quiet"]).status.code(),
        Some(0)
    );
    let path = run.join("diagnostics.csv");
    let csv = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let idx = lines[0].split(',').position(|h| h == "energy").unwrap();
    let mut cells: Vec<String> = lines[5].split(',').map(String::from).collect();
    let e: f64 = cells[idx].parse().unwrap();
    cells[idx] = format!("{:.16e}", e + 1.0);
    lines[5] = cells.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert_eq!(chsim(&["audit", run.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn temporal_study_on_linear_problem() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "dim = 1\nN = 32\nepsilon = 0.5\ntau = 0.1\nt_final = 0.8\nic = two_mode\n\
         linear_only = true\ntau_list = 0.1, 0.05, 0.025\n",
    );
    let out = tmp.path().join("conv");
    let o = chsim(&["converge-time", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("convergence_time.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(column(&csv, "error").iter().all(|&e| e < 1e-11));
}

#[test]
fn temporal_study_without_list_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "dim = 1\nN = 16\nepsilon = 0.5\ntau = 0.1\nt_final = 1\n");
    assert_eq!(chsim(&["converge-time", "--config", &cfg, "--quiet"]).status.code(), Some(2));
}

#[test]
fn spatial_study_converges_spectrally() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "dim = 2\nN = 32\nepsilon = 0.5\ntau = 0.001\nt_final = 0.05\nic = two_mode\nn_list = 8, 16, 32\n",
    );
    let out = tmp.path().join("conv");
    let o = chsim(&["converge-space", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("convergence_space.csv").exists());
}

#[test]
fn selftest_passes() {
    let o = chsim(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains(" 0 failed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn sample_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ch_spectral::config::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
