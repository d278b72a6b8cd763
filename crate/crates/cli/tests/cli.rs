use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fsde::io::{read_csv, read_path_csv};

fn fsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsde")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let text = format!("{body}\nout_dir = {:?}\n", dir.join("out"));
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "sigma = \"sin-offset\"\nb = \"logistic-tanh\"\ny0 = 0.5\nscheme = \"milstein:2\"\nH = 0.3\nm_levels = [3]\nm_ref = 4\nn_paths = 2\nseed = 11";

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn sample_fbm_writes_one_file_per_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = fsde(&["--reproducible", "sample-fbm", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files = sorted_files(&tmp.path().join("out"));
    assert_eq!(files, ["path_00000.csv", "path_00001.csv", "sample-fbm.json"]);
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let cfg = write_config(d.path(), SMALL);
        assert!(fsde(&["--reproducible", "--workers", "1", "error-table", &cfg]).status.success());
        assert!(fsde(&["--reproducible", "sample-fbm", &cfg]).status.success());
    }
    let files = sorted_files(&a.path().join("out"));
    assert!(files.contains(&"error_table.csv".to_string()));
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn path_header_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert!(fsde(&["sample-fbm", &cfg]).status.success());
    let text = fs::read(tmp.path().join("out/path_00001.csv")).unwrap();
    let path = read_path_csv(&text[..]).unwrap();
    assert_eq!(path.grid().level(), 4);
    assert_eq!(path.grid().horizon(), 1);
    assert_eq!(path.hurst().value(), 0.3);
    let seed = path.seed().unwrap();
    assert_eq!((seed.seed, seed.stream), (11, 1));
    assert_eq!(path.values().len(), 17);
    let table = read_csv(&text[..]).unwrap();
    assert!(table.meta_value("generated_unix").is_some());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    for (body, key) in [
        (SMALL.replace("m_ref = 4", "m_ref = 3"), "m_levels"),
        (SMALL.replace("H = 0.3", "H = 0.0"), "H"),
        (format!("{SMALL}\nspeed = 2"), "speed"),
    ] {
        let cfg = write_config(tmp.path(), &body);
        let out = fsde(&["error-table", &cfg]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains(key));
    }
}

#[test]
fn open_regime_still_emits_table() {
    let tmp = tempfile::tempdir().unwrap();
    // Milstein(2) at H = 0.2 has no closed-form limit
    let cfg = write_config(tmp.path(), &SMALL.replace("H = 0.3", "H = 0.2").replace("m_ref = 4", "m_ref = 12"));
    let out = fsde(&["--reproducible", "error-table", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read(tmp.path().join("out/error_table.csv")).unwrap();
    let table = read_csv(&text[..]).unwrap();
    assert!(table.meta_value("regime").unwrap().contains("H=0.2"));
    assert!(table.meta_value("prediction").unwrap().starts_with("absent"));
    assert!(table.column("prediction").unwrap().iter().all(|p| p.is_nan()));
    assert_eq!(table.rows.len(), 2);
    let verify = fsde(&["verify-limit", &cfg]);
    assert_eq!(verify.status.code(), Some(3));
}

#[test]
fn verify_limit_reports_each_level() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMALL.replace("m_levels = [3]", "m_levels = [5, 6]").replace("m_ref = 4", "m_ref = 9");
    let cfg = write_config(tmp.path(), &body);
    let out = fsde(&["--reproducible", "verify-limit", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read(tmp.path().join("out/verify_limit.csv")).unwrap();
    let table = read_csv(&text[..]).unwrap();
    assert_eq!(table.column("m").unwrap(), [5.0, 6.0]);
    assert!(table.meta_value("regime").is_some());
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("out/verify-limit.json")).unwrap()).unwrap();
    assert_eq!(json["check"]["kind"], "AlmostSure");
    assert!(json.get("generated_unix").is_none());
}

#[test]
fn constants_table() {
    let out = fsde(&["constants", "--hurst", "0.5", "--orders", "2,3,4", "--reproducible"]);
    assert!(out.status.success());
    let table = read_csv_text(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(table.len(), 4);
    let c2: Vec<&str> = table[0].split(',').collect();
    assert_eq!(c2[0], "C_(2)");
    assert!((c2[2].parse::<f64>().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(table[1].split(',').last().unwrap(), "3");
    assert_eq!(table[2].split(',').last().unwrap(), "3");
    assert!(table[3].starts_with("C_10*"));
}

fn read_csv_text(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_string).collect()
}

#[test]
fn solve_writes_reference_and_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("n_paths = 2", "n_paths = 1"));
    assert!(fsde(&["--reproducible", "solve", &cfg]).status.success());
    let files = sorted_files(&tmp.path().join("out"));
    assert_eq!(files, ["reference_00000.csv", "solution_00000_m03.csv", "solve.json"]);
    let text = fs::read(tmp.path().join("out/reference_00000.csv")).unwrap();
    let table = read_csv(&text[..]).unwrap();
    assert_eq!(table.columns, ["t", "B", "Y", "J"]);
}

#[test]
fn classify_prints_regime() {
    let out = fsde(&["classify", "--scheme", "cn", "--hurst", "0.3,0.45"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("MixedNormal"));
    let bad = fsde(&["classify", "--scheme", "rk4", "--hurst", "0.3"]);
    assert_eq!(bad.status.code(), Some(2));
}
