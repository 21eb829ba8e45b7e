use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn tbgp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbgp")).args(args).arg("--out").arg(out).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn no_partials(dir: &Path) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(!name.to_string_lossy().ends_with(".partial"), "leftover {name:?}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.conf");
    std::fs::write(&bad, "[grids]\nn_x = 64\nn_x = 32\n").unwrap();
    let out = tbgp(&["bands", "--config", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = tmp.path().join("missing.conf");
    let out = tbgp(&["bands", "--config", missing.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = tbgp(&["bands", "--eps", "-1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bands_output_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let out = tbgp(&["bands", "--threads", "2"], &a);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tbgp(&["bands"], &b).status.success());
    assert_eq!(read(&a, "bands.csv"), read(&b, "bands.csv"));
    assert_eq!(read(&a, "band_edges.csv"), read(&b, "band_edges.csv"));
    no_partials(&a);

    let bands = read(&a, "bands.csv");
    let mut lines = bands.lines();
    assert_eq!(lines.next(), Some("l,k,omega"));
    assert_eq!(lines.count(), 6 * 64);
    let edges = read(&a, "band_edges.csv");
    let first: Vec<f64> = edges.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert!(first[1] < first[2] && first[3] > 0.0);

    // rerunning from the recorded manifest reproduces the output exactly
    let manifest = a.join("manifest");
    assert!(tbgp(&["bands", "--config", manifest.to_str().unwrap()], &c).status.success());
    assert_eq!(read(&a, "bands.csv"), read(&c, "bands.csv"));
    assert_eq!(read(&a, "manifest").replace(a.to_str().unwrap(), ""), read(&c, "manifest").replace(c.to_str().unwrap(), ""));
}

#[test]
fn wannier_and_couplings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tbgp(&["wannier", "--eps", "0.25"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(tmp.path(), "wannier_eps0.25.csv");
    assert!(csv.starts_with("x,u0,u0_asymptotic\n"));
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    let peak = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    // the Wannier function peaks inside the home well, where the profile does
    assert!(peak[0] > std::f64::consts::PI && peak[0] < 2.0 * std::f64::consts::PI);
    assert!((peak[1] - peak[2]).abs() < 0.2);

    let out = tbgp(&["couplings"], tmp.path());
    assert!(out.status.success());
    let table = read(tmp.path(), "couplings.csv");
    assert_eq!(table.lines().next(), Some("eps,mu,omega_hat_0,omega_hat_1,omega_hat_2,alpha,beta,profile_error"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn quick_simulations_and_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let quick = configs_dir().join("quick.conf");
    let cfg = quick.to_str().unwrap();

    let out = tbgp(&["simulate", "--model", "dnls", "--config", cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dnls = read(tmp.path(), "dnls_eps0.5.csv");
    assert_eq!(dnls.lines().next(), Some("T,n,re_phi,im_phi"));
    assert_eq!(dnls.lines().count(), 1 + 5 * 13);

    let out = tbgp(&["simulate", "--model", "gp", "--config", cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = read(tmp.path(), "conservation_eps0.5.csv");
    let q: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(q.iter().all(|x| ((x - q[0]) / q[0]).abs() < 1e-10));

    let out = tbgp(&["correction", "--config", cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = tbgp(&["validate", "--config", cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("criterion 9 PASS") || l.starts_with("criterion 9 FAIL")));
    assert!(stdout.lines().any(|l| l.starts_with("criterion 11 SKIP")));
    let summary = read(tmp.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 4);
    for name in ["errors_eps0.6.csv", "errors_eps0.55.csv", "errors_eps0.5.csv", "fit.csv", "manifest"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
    no_partials(tmp.path());
}
