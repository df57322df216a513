use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bfgsqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfgsqp")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn solve(dir: &TempDir, config: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir.path(), "config.json", config);
    let out = dir.path().join(out);
    let mut args = vec!["solve", "--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bfgsqp(&args)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_quadratic_is_optimal() {
    let dir = TempDir::new().unwrap();
    let out = solve(&dir, r#"{"problem": {"name": "quadratic"}}"#, "q", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sol = json(&dir.path().join("q/solution.json"));
    assert_eq!(sol["code"], "Optimal");
    assert_eq!(sol["vars"]["x"]["shape"], serde_json::json!([10]));
    let csv = fs::read_to_string(dir.path().join("q/iterates.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,f,v_total,v_max,mu,stationarity,step,fn_evals");
    assert_eq!(csv.lines().count() - 1, sol["iterations"].as_u64().unwrap() as usize);
}

#[test]
fn solve_exit_codes() {
    let dir = TempDir::new().unwrap();
    let capped = solve(&dir, r#"{"problem": {"name": "odl", "m": 200}, "options": {"max_iter": 1}}"#, "o", &[]);
    assert_eq!(code(&capped), 2);
    assert_eq!(json(&dir.path().join("o/solution.json"))["code"], "MaxIter");
    for bad in [
        r#"{"problem": "#,
        r#"{"problem": {"name": "quadratic"}, "colour": 1}"#,
        r#"{"problem": {"name": "nope"}}"#,
        r#"{"problem": {"name": "disk"}, "options": {"wolfe_c1": 0.9}}"#,
        r#"{"problem": {"name": "odl", "theta": 2.0}}"#,
        r#"{"problem": {"name": "attack"}, "options": {"qp": {"max_iter": 0}}}"#,
    ] {
        let out = solve(&dir, bad, "bad", &[]);
        assert_eq!(code(&out), 64, "{bad}");
        assert!(!out.stderr.is_empty());
    }
    let missing = bfgsqp(&["solve", "--config", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(code(&missing), 64);
    assert_eq!(code(&bfgsqp(&["frobnicate"])), 64);
}

#[test]
fn solve_reruns_are_identical_and_seed_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"name": "odl", "m": 200}, "options": {"max_iter": 60}, "seed": 3}"#;
    solve(&dir, cfg, "a", &[]);
    solve(&dir, cfg, "b", &[]);
    solve(&dir, cfg, "c", &["--seed", "4"]);
    let read = |d: &str, f: &str| fs::read_to_string(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "iterates.csv"), read("b", "iterates.csv"));
    let strip = |d: &str| {
        let mut v = json(&dir.path().join(d).join("solution.json"));
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    assert_eq!(strip("a"), strip("b"));
    assert_ne!(read("a", "iterates.csv"), read("c", "iterates.csv"));
}

#[test]
fn bench_rows_pair_up_across_modes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench");
    let args = ["bench", "--suite", "odl", "--restarts", "2", "--m", "200", "--out", out.to_str().unwrap()];
    assert_eq!(code(&bfgsqp(&args)), 0);
    let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert_eq!((a[1], b[1]), ("analytic", "autodiff"));
        assert_eq!((a[0], a[3]), (b[0], b[3]), "same restart and seed");
        let (fa, fb): (f64, f64) = (a[4].parse().unwrap(), b[4].parse().unwrap());
        assert!((fa - fb).abs() <= 1e-8 * fa.abs().max(1e-300));
        assert_eq!(a[7], b[7]);
        let x0 = |mode: &str| {
            let log = fs::read_to_string(out.join(format!("iterates/odl_{:03}_{mode}.csv", a[0].parse::<usize>().unwrap())))
                .unwrap();
            log.lines().nth(1).unwrap().to_string()
        };
        assert_eq!(x0("analytic"), x0("autodiff"));
    }
    assert_ne!(rows[0][3], rows[2][3]);
}

#[test]
fn bench_validation() {
    assert_eq!(code(&bfgsqp(&["bench", "--suite", "odl", "--restarts", "0"])), 64);
    assert_eq!(code(&bfgsqp(&["bench", "--suite", "cifar", "--restarts", "1"])), 64);
}

#[test]
fn bench_analytic_and_attack_suites() {
    let dir = TempDir::new().unwrap();
    for (suite, rows) in [("analytic", 16), ("attack", 2)] {
        let out = dir.path().join(suite);
        assert_eq!(code(&bfgsqp(&["bench", "--suite", suite, "--restarts", "2", "--out", out.to_str().unwrap()])), 0);
        let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
        assert_eq!(csv.lines().count() - 1, rows);
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "{csv}");
    }
}

#[test]
fn gradcheck_exit_codes() {
    for p in ["odl", "attack"] {
        let out = bfgsqp(&["gradcheck", "--problem", p, "--trials", "20"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
        assert!(String::from_utf8_lossy(&out.stdout).contains("max"));
    }
    assert_eq!(code(&bfgsqp(&["gradcheck", "--problem", "odl", "--trials", "0"])), 64);
    assert_eq!(code(&bfgsqp(&["gradcheck", "--problem", "rosenbrock"])), 64);
    assert_eq!(code(&bfgsqp(&["gradcheck", "--problem", "disk", "--h", "-1"])), 64);
    let out = bfgsqp(&["gradcheck", "--problem", "disk", "--h", "1e-1"]);
    assert_eq!(code(&out), 0, "quadratic data: central differences are exact");
    let out = bfgsqp(&["gradcheck", "--problem", "odl", "--h", "0.5"]);
    assert_eq!(code(&out), 1, "coarse steps cross kinks");
}
