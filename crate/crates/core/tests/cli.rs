use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tenslet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tenslet"))
        .args(args)
        .env_remove("TENSLET_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(out: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    out.split_whitespace()
        .find_map(|t| t.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in output:\n{out}"))
        .parse()
        .unwrap()
}

fn sd_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/sd")
}

#[test]
fn quad_gl_counts_and_passes() {
    let o = tenslet(&["quad", "gl", "--level", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("n=8450"), "{s}");
    assert!(s.contains("degree=128"));
    assert!(s.trim_end().ends_with("PASS"));
}

#[test]
fn quad_level_zero_is_usage_error() {
    let o = tenslet(&["quad", "gl", "--level", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quad_sd_fixtures_pass() {
    for (file, n) in [("level1.txt", 12), ("level2.txt", 48), ("level3.txt", 160)] {
        let path = sd_dir().join(file);
        let o = tenslet(&["quad", "sd", "--file", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{file}");
        let s = stdout(&o);
        assert!(s.contains(&format!("n={n}")), "{s}");
        assert!(s.contains("equal_weights=true"));
        assert!(value(&s, "max_deviation") < 1e-12);
    }
}

#[test]
fn quad_sd_needs_file() {
    assert_eq!(tenslet(&["quad", "sd"]).status.code(), Some(2));
}

#[test]
fn quad_writes_rule_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = tenslet(&["quad", "gl", "-J", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("gl_level2.txt")).unwrap();
    assert_eq!(text.lines().next(), Some("# degree 8"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn roundtrip_field_a() {
    let o = tenslet(&["transform", "roundtrip", "-J", "5", "--coarse", "4", "--field", "a"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(value(&s, "relative_error") <= 1e-8, "{s}");
    assert!(value(&s, "parseval_deviation") < 1e-10);
    let timing = s.lines().find(|l| l.starts_with("level=5 n=2178 t_dec=")).expect("timing line");
    assert!(timing.contains("t_rec="));
}

#[test]
fn roundtrip_drop_details_loses_energy() {
    let o = tenslet(&["transform", "roundtrip", "-J", "4", "--coarse", "2", "--field", "a", "--drop-details"]);
    assert_eq!(o.status.code(), Some(0));
    // Field A has degree 6, above the coarse bandlimit 2.
    assert!(value(&stdout(&o), "relative_error") > 1e-3);
}

#[test]
fn roundtrip_on_designs() {
    let rule = format!("sd:{}", sd_dir().display());
    let o = tenslet(&["transform", "roundtrip", "--rule", &rule, "-J", "3", "--coarse", "1", "--field", "a"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(value(&s, "transform_error") < 1e-12);
    assert!(s.contains("level=3 n=160"));
}

#[test]
fn design_directory_from_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_tenslet"))
        .args(["transform", "roundtrip", "--rule", "sd:sd", "-J", "2", "--coarse", "1", "--field", "a"])
        .env("TENSLET_DATA", sd_dir().parent().unwrap())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn design_level_too_coarse_is_error() {
    // level2.txt (degree 8) cannot serve level 3 which needs degree 16.
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(sd_dir().join("level2.txt"), dir.path().join("level3.txt")).unwrap();
    let rule = format!("sd:{}", dir.path().display());
    let o = tenslet(&["transform", "roundtrip", "--rule", &rule, "-J", "3", "--coarse", "3", "--field", "a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bundle_then_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    let b = bundle.to_str().unwrap();
    let o = tenslet(&["transform", "decompose", "-J", "5", "--coarse", "3", "--field", "a", "--out", b]);
    assert_eq!(o.status.code(), Some(0));
    assert!(bundle.join("manifest.json").exists());

    let out = dir.path().join("rec");
    let o = tenslet(&[
        "transform", "reconstruct", "-J", "5", "--coarse", "3", "--field", "a", "--bundle", b, "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(value(&s, "relative_error") <= 1e-8);
    assert!(s.contains("level=5 n=2178 t_rec="));
    let map = std::fs::read_to_string(out.join("error_map.csv")).unwrap();
    assert_eq!(map.lines().next(), Some("x,y,z,Tx,Ty,Tz,Ex,Ey,Ez"));
    assert_eq!(map.lines().count(), 2179);

    let o = tenslet(&["transform", "reconstruct", "-J", "5", "--coarse", "2", "--bundle", b]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn memory_guard() {
    let o = tenslet(&["transform", "roundtrip", "-J", "10", "--coarse", "9", "--field", "a"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
}

#[test]
fn bench_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = tenslet(&["bench", "--jmin", "2", "--jmax", "4", "--runs", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, j) in rows.iter().zip(2u32..) {
        let n: usize = row[1].parse().unwrap();
        let m: usize = row[2].parse().unwrap();
        let k = (1usize << j) + 1;
        assert_eq!(n, 2 * k * k);
        assert_eq!(m, k * k - 1);
    }
    assert!(rows[0][5].is_empty());
    assert!(rows[1][5].parse::<f64>().is_ok());
}

#[test]
fn verify_all_passes() {
    let o = tenslet(&["verify", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn verify_detects_defect() {
    let o = tenslet(&["verify", "frame", "--inject-defect", "0.9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL frame.reconstruction"));
}

#[test]
fn unknown_suite_and_field() {
    assert_eq!(tenslet(&["verify", "bogus"]).status.code(), Some(2));
    let o = tenslet(&["transform", "roundtrip", "-J", "3", "--coarse", "2", "--field", "z"]);
    assert_eq!(o.status.code(), Some(2));
}
