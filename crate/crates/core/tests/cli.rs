use cosmic_strings::io::{read_table, write_table, FIELD_COLUMNS, FIELD_FILE, PROFILE_FILE, SUMMARY_FILE, SWEEP_FILE, VERIFY_FILE};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosmic-strings")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const TWO_CENTERS: &str = "[model]\nm = 1.0\na = 0.25\ng0 = \"auto\"\n\
    [[centers]]\nx = -1.0\ny = 0.0\n[[centers]]\nx = 1.0\ny = 0.0\n\
    [grid]\nradius = 16.0\nnodes = 129\n";

const RADIAL: &str = "[model]\nn = 1\nm = 1.0\na = 1.0\ng0 = \"auto\"\n[radial]\nt_end = 25.0\n";

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let one_center = write(d, "one.toml", "[model]\nn = 1\nm = 1.0\na = 1.0\ng0 = \"auto\"\n[grid]\nnodes = 33\n");
    let out = run(&["solve-planar", &one_center], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solve-radial"));

    let outside = write(d, "outside.toml", "[model]\nn = 3\nm = 1.0\na = 0.5\ng0 = 2.0\n");
    assert_eq!(run(&["solve-planar", &outside], d).status.code(), Some(2));

    let subcritical = write(d, "sub.toml", "[model]\nn = 2\nm = 1.0\na = 0.25\ng0 = \"auto\"\n");
    assert_eq!(run(&["solve-radial", &subcritical], d).status.code(), Some(2));

    let unknown = write(d, "unknown.toml", "[model]\nn = 1\nm = 1.0\na = 0.1\ng0 = 1.0\nbeta = 2\n");
    let out = run(&["solve-planar", &unknown], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected one of"));

    assert_eq!(run(&["solve-planar", "missing.toml"], d).status.code(), Some(3));
    assert_eq!(run(&["verify", "--artifact", "nowhere"], d).status.code(), Some(1));
}

#[test]
fn empty_configuration_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "empty.toml", "[model]\nn = 0\nm = 1.0\na = 0.1\ng0 = 1.0\n[grid]\nradius = 4.0\nnodes = 17\n");
    let out = run(&["verify", &cfg, "--out", "empty"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = read_table(&d.join("empty").join(FIELD_FILE), &FIELD_COLUMNS).unwrap();
    assert_eq!(rows.len(), 17 * 17);
    assert!(rows.iter().all(|r| r[3] == 0.0 && r[4] == 0.0));
    assert!(d.join("empty").join(VERIFY_FILE).exists());
}

#[test]
fn planar_artifact_verifies_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "two.toml", TWO_CENTERS);
    let out = run(&["solve-planar", &cfg, "--out", "two"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(d.join("two").join(SUMMARY_FILE)).unwrap();
    assert!(summary.contains("kind = \"planar\""));

    let out = run(&["verify", "--artifact", "two"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    // bump u at one far-field node
    let path = d.join("two").join(FIELD_FILE);
    let mut rows = read_table(&path, &FIELD_COLUMNS).unwrap();
    let k = rows.iter().position(|r| (r[0] - 4.0).abs() < 1e-9 && r[1].abs() < 0.2).unwrap();
    rows[k][3] += 0.1;
    write_table(&path, &FIELD_COLUMNS, rows).unwrap();
    let out = run(&["verify", "--artifact", "two"], d);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL self-dual consistency"), "{stdout}");
}

#[test]
fn field_dumps_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "two.toml", TWO_CENTERS);
    for out in ["first", "second"] {
        assert!(run(&["solve-planar", &cfg, "--out", out], d).status.success());
    }
    let first = fs::read(d.join("first").join(FIELD_FILE)).unwrap();
    let second = fs::read(d.join("second").join(FIELD_FILE)).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn radial_run_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "radial.toml", RADIAL);
    let out = run(&["verify", &cfg, "--out", "radial"], d);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("PASS first-integral conservation"));
    assert!(stdout.contains("PASS decay rate relative error"));
    let summary = fs::read_to_string(d.join("radial").join(SUMMARY_FILE)).unwrap();
    assert!(summary.contains("g0 = 5.43656365691809"), "{summary}");
    let header = fs::read_to_string(d.join("radial").join(PROFILE_FILE)).unwrap();
    assert!(header.starts_with("t,r,U,Uprime,u,u_r,first_integral_residual\n"));
}

#[test]
fn sweep_covers_the_product() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "sweep.toml", &format!("{RADIAL}[sweep]\nn = [1, 2]\nm = [1.0, 2.0]\n"));
    let out = run(&["sweep", &cfg, "--out", "sweep"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(d.join("sweep").join(SWEEP_FILE)).unwrap();
    assert_eq!(table.lines().count(), 5);
    for sub in ["N1_m1", "N1_m2", "N2_m1", "N2_m2"] {
        assert!(d.join("sweep").join(sub).join(PROFILE_FILE).exists(), "{sub}");
    }
}
