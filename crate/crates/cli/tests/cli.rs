use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use umc_core::mesh_core::io;
use umc_core::metrics::{rel_l2_error, REPORT_COLUMNS};
use umc_core::Field;

fn umc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_umc")).current_dir(dir).args(args).env_remove("UMC_JOBS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = umc(dir, args);
    assert_eq!(code(&out), 0, "umc {args:?} failed: {}", stderr(&out));
    stdout(&out)
}

/// A small synthetic dataset with its grid and mapping.
fn dataset() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--n", "3000", "--mesh", "m.umcm", "--field", "f.umcf"]);
    ok(dir.path(), &["build-grid", "--mesh", "m.umcm", "--grid", "g.umcg", "--mapping", "p.umcp"]);
    dir
}

const LAYOUT: [&str; 6] = ["--grid", "g.umcg", "--mapping", "p.umcp", "--mesh", "m.umcm"];

fn with_layout<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(LAYOUT).collect()
}

#[test]
fn compress_decompress_verify() {
    let d = dataset();
    let p = d.path();
    for interp in ["nearest", "multilinear"] {
        let out = ok(p, &with_layout(&["compress", "--field", "f.umcf", "--out", "a.umcz", "--tau", "1e-3", "--interp", interp]));
        assert!(out.contains("CR"));
        ok(p, &with_layout(&["decompress", "--archive", "a.umcz", "--out", "r.umcf"]));
        let out = ok(p, &["verify", "--field", "f.umcf", "--reconstructed", "r.umcf", "--tau", "1e-3", "--mesh", "m.umcm"]);
        assert!(out.contains("PASS"), "{out}");
    }
}

#[test]
fn compress_builds_grid_from_mesh() {
    let d = dataset();
    let p = d.path();
    ok(p, &["compress", "--field", "f.umcf", "--mesh", "m.umcm", "--out", "a.umcz", "--tau", "1e-4", "--g-max", "32"]);
    ok(p, &["decompress", "--archive", "a.umcz", "--mesh", "m.umcm", "--g-max", "32", "--out", "r.umcf"]);
    ok(p, &["verify", "--field", "f.umcf", "--reconstructed", "r.umcf", "--tau", "1e-4"]);
    // a different grid changes the mapping digest
    let out = umc(p, &["decompress", "--archive", "a.umcz", "--mesh", "m.umcm", "--out", "r.umcf"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("mapping"), "{}", stderr(&out));
}

#[test]
fn build_grid_is_deterministic() {
    let d = dataset();
    let p = d.path();
    let out = ok(p, &["build-grid", "--mesh", "m.umcm", "--grid", "g2.umcg", "--mapping", "p2.umcp"]);
    assert!(out.contains("visited_fraction"));
    assert!(out.contains("axis 0: spacing"));
    for (a, b) in [("g.umcg", "g2.umcg"), ("p.umcp", "p2.umcp")] {
        assert_eq!(std::fs::read(p.join(a)).unwrap(), std::fs::read(p.join(b)).unwrap());
    }
}

#[test]
fn usage_errors_exit_2() {
    let d = dataset();
    let p = d.path();
    let out = umc(p, &["build-grid", "--mesh", "m.umcm", "--grid", "x", "--mapping", "y", "--percentile", "0"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&umc(p, &["compress", "--bogus"])), 2);
    assert_eq!(code(&umc(p, &[])), 2);
    let missing = umc(p, &["verify", "--field", "nope.umcf", "--reconstructed", "f.umcf", "--tau", "1"]);
    assert_eq!(code(&missing), 2);
    let no_dir = umc(p, &["compress", "--field", "f.umcf", "--baseline", "--tau", "1e-3", "--out", "no/such/dir/a"]);
    assert_eq!(code(&no_dir), 2);
    let no_mesh = umc(p, &["compress", "--field", "f.umcf", "--grid", "g.umcg", "--mapping", "p.umcp", "--interp", "multilinear", "--tau", "1e-3", "--out", "a"]);
    assert_eq!(code(&no_mesh), 2);
}

#[test]
fn inadmissible_rho_exits_1() {
    let d = dataset();
    let out = umc(d.path(), &with_layout(&["compress", "--field", "f.umcf", "--out", "a.umcz", "--tau", "1e-3", "--rho", "1.0"]));
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("rho"), "{}", stderr(&out));
    assert!(!d.path().join("a.umcz").exists());
}

#[test]
fn baseline_archive_decompresses_without_layout() {
    let d = dataset();
    let p = d.path();
    ok(p, &["compress", "--field", "f.umcf", "--baseline", "--tau", "1e-2", "--out", "b.umcz"]);
    ok(p, &["decompress", "--archive", "b.umcz", "--out", "r.umcf"]);
    ok(p, &["verify", "--field", "f.umcf", "--reconstructed", "r.umcf", "--tau", "1e-2"]);
}

fn write_field(path: &PathBuf, values: Vec<f64>) {
    io::save_field(&Field::new("f", values).unwrap(), path).unwrap();
}

fn parse_metric(out: &str, key: &str) -> f64 {
    out.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
}

#[test]
fn verify_reports_metrics_and_offending_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin()).collect();
    write_field(&p.join("x.umcf"), x.clone());

    let out = ok(p, &["verify", "--field", "x.umcf", "--reconstructed", "x.umcf", "--tau", "0", "--tau-kind", "abs"]);
    assert_eq!(parse_metric(&out, "max_abs_err"), 0.0);

    let tau = 1e-3;
    let mut y: Vec<f64> = x.iter().map(|v| v + 0.5 * tau).collect();
    let out = ok(p, &{
        write_field(&p.join("y.umcf"), y.clone());
        ["verify", "--field", "x.umcf", "--reconstructed", "y.umcf", "--tau", "1e-3", "--tau-kind", "abs"]
    });
    let expected = rel_l2_error(&x, &y).unwrap();
    assert!((parse_metric(&out, "rel_l2") - expected).abs() <= 1e-6 * expected);

    y[37] = x[37] + 2.0 * tau;
    write_field(&p.join("y.umcf"), y);
    let out = umc(p, &["verify", "--field", "x.umcf", "--reconstructed", "y.umcf", "--tau", "1e-3", "--tau-kind", "abs"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("vertex 37"), "{}", stderr(&out));
}

fn cr_column(csv: &str) -> Vec<String> {
    let cr = REPORT_COLUMNS.iter().position(|&c| c == "CR").unwrap();
    csv.lines().skip(1).map(|l| l.split(',').nth(cr).unwrap().to_owned()).collect()
}

#[test]
fn sweep_counts_rows_and_reuses_mappings() {
    let d = dataset();
    let p = d.path();
    let base = ["sweep", "--mesh", "m.umcm", "--field", "f.umcf", "--percentile", "50,90", "--rho", "0.15,0.5", "--tau", "1e-3,1e-2"];
    let run = |extra: &[&str], out: &str| {
        let args: Vec<&str> = base.iter().chain(extra).copied().chain(["--out", out]).collect();
        ok(p, &args);
        std::fs::read_to_string(p.join(out)).unwrap()
    };
    let fresh = run(&["--jobs", "3"], "fresh.csv");
    let reused = run(&["--reuse-map", "--jobs", "1"], "reused.csv");

    let header: Vec<&str> = fresh.lines().next().unwrap().split(',').collect();
    assert_eq!(header, REPORT_COLUMNS);
    let method = |csv: &str, m: &str| csv.lines().skip(1).filter(|l| l.split(',').nth(2) == Some(m)).count();
    assert_eq!(method(&fresh, "mc"), 8);
    assert_eq!(method(&fresh, "default"), 2);
    assert_eq!(cr_column(&fresh), cr_column(&reused));
}

#[test]
fn sweep_honours_jobs_env_and_json() {
    let d = dataset();
    let out = Command::new(env!("CARGO_BIN_EXE_umc"))
        .current_dir(d.path())
        .args(["sweep", "--mesh", "m.umcm", "--field", "f.umcf", "--tau", "1e-2", "--json", "r.json"])
        .env("UMC_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);
    let json = std::fs::read_to_string(d.path().join("r.json")).unwrap();
    assert!(json.contains("\"method\": \"mc\""));
    let bad = Command::new(env!("CARGO_BIN_EXE_umc"))
        .current_dir(d.path())
        .args(["sweep", "--mesh", "m.umcm", "--field", "f.umcf"])
        .env("UMC_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn config_file_supplies_defaults() {
    let d = dataset();
    let p = d.path();
    std::fs::write(p.join("umc.conf"), "# compress defaults\ntau = 1e-2\nrho = 0.99\nbaseline = true\n").unwrap();
    // --rho on the command line beats the config value
    ok(p, &["compress", "--config", "umc.conf", "--field", "f.umcf", "--out", "c.umcz", "--rho", "0.3"]);
    ok(p, &["decompress", "--archive", "c.umcz", "--out", "r.umcf"]);
    ok(p, &["verify", "--field", "f.umcf", "--reconstructed", "r.umcf", "--tau", "1e-2"]);
    let tight = umc(p, &["verify", "--field", "f.umcf", "--reconstructed", "r.umcf", "--tau", "1e-4"]);
    assert_eq!(code(&tight), 1);

    std::fs::write(p.join("bad.conf"), "percentile = 0\n").unwrap();
    let out = umc(p, &["build-grid", "--config", "bad.conf", "--mesh", "m.umcm", "--grid", "x", "--mapping", "y"]);
    assert_eq!(code(&out), 2);
    std::fs::write(p.join("unknown.conf"), "colour = blue\n").unwrap();
    let out = umc(p, &["compress", "--config", "unknown.conf", "--field", "f.umcf", "--out", "x", "--tau", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn external_codec_through_the_cli() {
    let d = dataset();
    let p = d.path();
    let ext = "--external=200=sh -c cat";
    ok(p, &with_layout(&["compress", "--field", "f.umcf", "--out", "e.umcz", "--tau", "1e-3", "--codec", "200", ext]));
    ok(p, &with_layout(&["decompress", "--archive", "e.umcz", "--out", "r.umcf", ext]));
    ok(p, &["verify", "--field", "f.umcf", "--reconstructed", "r.umcf", "--tau", "1e-3"]);
    // reserved ids cannot be claimed by plugins
    let out = umc(p, &with_layout(&["compress", "--field", "f.umcf", "--out", "e.umcz", "--tau", "1e-3", "--external=5=sh -c cat"]));
    assert_eq!(code(&out), 1);
}
