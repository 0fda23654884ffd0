use std::fs;
use std::path::Path;
use std::process::Command;

fn landau(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_landau")).args(args).current_dir(dir).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn penrose_on_maxwellian_reports_stability() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = landau(&["penrose", "--out", "o"], tmp.path());
    assert_eq!(code, 0);
    let table = fs::read_to_string(tmp.path().join("o/penrose.csv")).unwrap();
    let last = table.lines().last().unwrap();
    assert!(last.starts_with("all,") && last.ends_with(",true"), "{last}");
    assert!(table.lines().skip(1).all(|l| l.split(',').nth(3) == Some("0")));
}

#[test]
fn unstable_two_stream_fails_the_hypothesis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "equilibrium.profile = two_stream_scan\npenrose.kmax = 4\n");
    let (code, stdout) = landau(&["penrose", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("Penrose stability fails"));
    let cfg = write_config(tmp.path(), "d.cfg", "equilibrium.profile = two_stream_scan\npenrose.kmax = 4\npenrose.require_stable = false\n");
    assert_eq!(landau(&["penrose", "--config", &cfg, "--out", "p"], tmp.path()).0, 0);
}

#[test]
fn config_errors_exit_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "gevrey.gamma = 0.3\n");
    let (code, stdout) = landau(&["penrose", "--config", &cfg], tmp.path());
    assert_eq!(code, 4);
    assert!(stdout.contains("γ ∈ (1/3, 1)"), "{stdout}");
    let cfg = write_config(tmp.path(), "d.cfg", "# ok\ngrid.kmax = 2\ngrid.nope = 1\n");
    let (code, stdout) = landau(&["penrose", "--config", &cfg], tmp.path());
    assert_eq!(code, 4);
    assert!(stdout.contains("line 3") && stdout.contains("grid.nope"), "{stdout}");
    assert_eq!(landau(&["penrose", "--config", "missing.cfg"], tmp.path()).0, 4);
}

#[test]
fn oversized_datum_exits_with_divergence_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "datum.amplitude = 10\ngrid.kmax = 2\ngrid.horizon = 8\ngrid.dt = 0.1\n");
    let (code, stdout) = landau(&["scatter", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(code, 3, "{stdout}");
    let report = fs::read_to_string(tmp.path().join("o/divergence.txt")).unwrap();
    assert!(report.contains("reduce the amplitude"));
}

#[test]
fn selftest_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout) = landau(&["selftest", "--out", "o"], tmp.path());
    assert_eq!(code, 0, "{stdout}");
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "kernel.modes = 1, 2\ngrid.horizon = 6\n");
    assert_eq!(landau(&["kernel", "--config", &cfg, "--out", "a"], tmp.path()).0, 0);
    let manifest = tmp.path().join("a/manifest.txt");
    assert_eq!(landau(&["kernel", "--config", manifest.to_str().unwrap(), "--out", "b"], tmp.path()).0, 0);
    for f in ["kernel_k1.csv", "kernel_k2.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn vpme_poisson_command_recovers_the_density() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "model.preset = vpme\n");
    let (code, stdout) = landau(&["poisson", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(code, 0);
    let err: f64 = stdout.split("relative error = ").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(err <= 1e-12, "{stdout}");
}
