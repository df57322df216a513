//! CSV and JSON writers. Floats are written with 17 significant digits so
//! reruns can be compared byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use bfgsqp::problem::GradientMode;
use bfgsqp::solver::Solution;
use serde::Serialize;

use crate::CliError;

pub const ITERATES_HEADER: &str = "k,f,v_total,v_max,mu,stationarity,step,fn_evals";
pub const BENCH_HEADER: &str = "restart,mode,problem,seed,f,v_max,stationarity,code,iterations,success";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn mode_name(mode: GradientMode) -> &'static str {
    match mode {
        GradientMode::Analytic => "analytic",
        GradientMode::Autodiff => "autodiff",
    }
}

pub fn iterates_csv(sol: &Solution) -> String {
    let mut s = String::from(ITERATES_HEADER);
    s.push('\n');
    for r in &sol.iterate_log {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.k,
            num(r.f),
            num(r.v_total),
            num(r.v_max),
            num(r.mu),
            num(r.stationarity),
            num(r.step),
            r.fn_evals
        );
    }
    s
}

#[derive(Serialize)]
struct VarOut<'a> {
    shape: &'a [usize],
    data: &'a [f64],
}

#[derive(Serialize)]
struct SolutionOut<'a> {
    vars: BTreeMap<&'a str, VarOut<'a>>,
    f: f64,
    v_total: f64,
    v_max: f64,
    stationarity: f64,
    code: &'static str,
    iterations: usize,
    wall_time_s: f64,
}

pub fn solution_json(sol: &Solution, wall_time_s: f64) -> String {
    let vars = sol
        .best_x
        .iter()
        .map(|(k, t)| (k.as_str(), VarOut { shape: t.shape(), data: t.data() }))
        .collect();
    let out = SolutionOut {
        vars,
        f: sol.f,
        v_total: sol.v_total,
        v_max: sol.v_max,
        stationarity: sol.stationarity,
        code: sol.code.as_str(),
        iterations: sol.iterations(),
        wall_time_s,
    };
    let mut s = serde_json::to_string_pretty(&out).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub restart: usize,
    pub mode: GradientMode,
    pub problem: &'static str,
    pub seed: u64,
    pub f: f64,
    pub v_max: f64,
    pub stationarity: f64,
    pub code: &'static str,
    pub iterations: usize,
    pub success: bool,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BENCH_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.restart,
            mode_name(r.mode),
            r.problem,
            r.seed,
            num(r.f),
            num(r.v_max),
            num(r.stationarity),
            r.code,
            r.iterations,
            u8::from(r.success)
        );
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 1.0 / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn bench_rows_format() {
        let row = BenchRow {
            restart: 1,
            mode: GradientMode::Analytic,
            problem: "odl",
            seed: 42,
            f: 0.5,
            v_max: 0.0,
            stationarity: 1e-9,
            code: "Optimal",
            iterations: 12,
            success: true,
        };
        let csv = bench_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(
            line,
            "1,analytic,odl,42,5.0000000000000000e-1,0.0000000000000000e0,1.0000000000000001e-9,Optimal,12,1"
        );
    }
}
