use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dirac2d(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirac2d"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

const GAUSSIAN: &str = r#"
[potential]
family = "gaussian"
amplitude = { a11 = -1.0, a22 = -1.0 }
width = 2.0
coupling = 0.5

[grid]
n_per_axis = 12
"#;

#[test]
fn zero_potential_is_regular() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "zero.toml", "[potential]\nfamily = \"zero\"\n");
    let out = dirac2d(d.path(), &["classify", "--config", "zero.toml", "--grid-n", "12", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(d.path().join("o/report.txt")).unwrap();
    assert!(report.starts_with("classification = regular\n"), "{report}");
    for f in ["manifest.json", "basis_s1.snap", "resonance_functions.snap"] {
        assert!(d.path().join("o").join(f).exists(), "{f}");
    }
}

#[test]
fn bad_config_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let out = dirac2d(d.path(), &["classify", "--grid-L", "-3", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    write(d.path(), "typo.toml", "[grid]\nn_per_axes = 12\n");
    let out = dirac2d(d.path(), &["classify", "--config", "typo.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    write(d.path(), "short.toml", "[free]\nt_min = 4.0\nt_max = 16.0\n");
    let out = dirac2d(d.path(), &["free-check", "--config", "short.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = dirac2d(d.path(), &["selftest", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(d.path().join("o/selftest.txt")).unwrap();
    assert!(!text.is_empty() && text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}

#[test]
fn serial_tune_is_bit_reproducible() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "g.toml", GAUSSIAN);
    for o in ["a", "b"] {
        let out = dirac2d(d.path(), &["tune", "--config", "g.toml", "--serial", "--out", o]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["tune.txt", "scan.csv", "report.txt", "basis_s1.snap"] {
        let a = fs::read(d.path().join("a").join(f)).unwrap();
        let b = fs::read(d.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    let manifest = |o: &str| -> serde_json::Value {
        serde_json::from_slice(&fs::read(d.path().join(o).join("manifest.json")).unwrap()).unwrap()
    };
    let (a, b) = (manifest("a"), manifest("b"));
    assert_eq!(a["config_sha256"], b["config_sha256"]);
    assert_eq!(a["outputs"], b["outputs"]);
    let tune = fs::read_to_string(d.path().join("a/tune.txt")).unwrap();
    let s: f64 = tune.lines().next().unwrap().trim_start_matches("s_star = ").parse().unwrap();
    assert!(s > 0.1 && s < 10.0);
}

#[test]
fn free_check_writes_fits() {
    let d = tempfile::tempdir().unwrap();
    let out = dirac2d(d.path(), &["free-check", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("o/decay.csv")).unwrap();
    assert!(csv.starts_with("t,norm,gamma,provenance\n"));
    let fits = fs::read_to_string(d.path().join("o/fits.txt")).unwrap();
    let e: f64 = fits.lines().next().unwrap().split("exponent = ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((e + 0.5).abs() < 0.1, "{fits}");
}

#[test]
fn evolve_on_small_grid() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{GAUSSIAN}\n[evolve]\nt_min = 4.0\nt_max = 32.0\nt_ratio = 1.5\ngammas = [0.0]\nsources = [[0.0, 0.0]]\nsnapshots = false\n"
    );
    write(d.path(), "e.toml", &cfg);
    let out = dirac2d(d.path(), &["evolve", "--config", "e.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fits = fs::read_to_string(d.path().join("o/fits.txt")).unwrap();
    assert!(fits.starts_with("stone_low_energy gamma = 0 "), "{fits}");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "evolve");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn gamma_out_of_range_is_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"
[potential]
family = "polynomial_decay"
amplitude = { a11 = -1.0, a22 = -1.0 }
beta_decay = 3.0
coupling = 0.5

[grid]
n_per_axis = 12

[evolve]
gammas = [1.0]
"#;
    write(d.path(), "p.toml", cfg);
    let out = dirac2d(d.path(), &["evolve", "--config", "p.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
