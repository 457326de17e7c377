use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ito-edgeworth");

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("ITO_EDGEWORTH_THREADS").output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

const MINIMAL: &str = r#"{"model": {"name": "brownian_identity"},
    "test_function": {"id": "monomial", "params": {"j": 3}},
    "n_list": [16], "paths": 10000, "seed": 5}"#;

#[test]
fn minimal_run_gives_exact_skewness() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", MINIMAL);
    let out = dir.path().join("r.csv");
    let o = run(&["run", arg(&cfg), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# schema=1\n"));
    assert_eq!(column(&csv, "expansion_mean"), ["0.25"]);
    assert_eq!(column(&csv, "m"), ["64"]);
    assert_eq!(column(&csv, "v0_mean"), ["0.5"]);
}

#[test]
fn thread_count_does_not_change_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        r#"{"model": "exp_pair", "test_function": {"id": "cos_shifted", "params": {"a": 1, "c": 1}},
            "n_list": [4, 16], "m": 16, "paths": 2000, "seed": 3}"#,
    );
    let bytes = |threads: &str| {
        let o = run(&["run", arg(&cfg), "--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
        o.stdout
    };
    let one = bytes("1");
    assert_eq!(one, bytes("8"));
    let env = Command::new(BIN).args(["run", arg(&cfg)]).env("ITO_EDGEWORTH_THREADS", "3").output().unwrap();
    assert_eq!(one, env.stdout);
    let reseeded = run(&["run", arg(&cfg), "--seed", "4"]);
    assert_ne!(one, reseeded.stdout);
}

#[test]
fn exit_codes_name_the_problem() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"model": "brownian_identity", "test_function": "logistic", "paths": 10}"#, 2, "paths below minimum"),
        (r#"{"test_function": "logistic"}"#, 2, "`model`"),
        (r#"{"model": "heston", "test_function": "logistic"}"#, 3, "heston"),
        (r#"{"model": "brownian_identity", "test_function": "wavelet"}"#, 3, "test_function"),
        (
            r#"{"model": {"name": "exp_pair", "params": {"a": 0}}, "test_function": "logistic"}"#,
            4,
            "model",
        ),
        (
            r#"{"model": {"name": "exp_pair", "params": {"a": 400}}, "test_function": "logistic",
                "n_list": [4], "m": 64, "paths": 200}"#,
            4,
            "non-finite",
        ),
    ];
    for (i, (text, code, needle)) in cases.into_iter().enumerate() {
        let cfg = write(&dir, &format!("c{i}.json"), text);
        let o = run(&["run", arg(&cfg)]);
        assert_eq!(o.status.code(), Some(code), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let o = run(&["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_clt_reports_ratio_near_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"model": "brownian_identity", "n_list": [4, 16], "m": 256, "paths": 40000}"#);
    let o = run(&["check-clt", arg(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.contains("n,paths,empirical_var,empirical_stderr,predicted,ratio\n"));
    assert_eq!(column(&csv, "predicted"), ["0.3333333333333333"; 2]);
    let ratio: f64 = column(&csv, "ratio")[1].parse().unwrap();
    assert!((0.95..=1.05).contains(&ratio), "{ratio}");

    let missing = write(&dir, "m.json", r#"{"n_list": [4]}"#);
    assert_eq!(run(&["check-clt", arg(&missing)]).status.code(), Some(2));
}

#[test]
fn selftest_passes_and_catches_a_corrupted_recurrence() {
    let names = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| l.starts_with("ok"))
            .map(|l| l[5..33].trim().to_string())
            .collect()
    };
    let one = run(&["selftest", "--threads", "1"]);
    let eight = run(&["selftest", "--threads", "8"]);
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stdout));
    assert!(eight.status.success());
    assert_eq!(names(&one), names(&eight));
    assert_eq!(names(&one).len(), 9);

    let broken = run(&["selftest", "--inject-fault", "hermite-recurrence"]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(stderr(&broken).contains("hermite recurrence"), "{}", stderr(&broken));
}

#[test]
fn plot_renders_a_report_and_rejects_garbage() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        r#"{"model": "exp_pair", "test_function": "gauss_bump", "n_list": [4, 8, 16], "m": 8, "paths": 400}"#,
    );
    let report = dir.path().join("r.csv");
    assert!(run(&["run", arg(&cfg), "--out", arg(&report)]).status.success());
    let svg = dir.path().join("r.svg");
    let o = run(&["plot", arg(&report), arg(&svg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(first.matches("<polyline").count(), 2);
    assert_eq!(first.matches(r#"class="point""#).count(), 6);
    assert!(run(&["plot", arg(&report), arg(&svg)]).status.success());
    assert_eq!(first, std::fs::read_to_string(&svg).unwrap());

    let empty = write(&dir, "empty.csv", "");
    assert_eq!(run(&["plot", arg(&empty), arg(&svg)]).status.code(), Some(2));
    let junk = write(&dir, "junk.csv", "a,b\n1\n");
    assert_eq!(run(&["plot", arg(&junk), arg(&svg)]).status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
