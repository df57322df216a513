use std::path::PathBuf;
use std::process::ExitCode;

use bfgsqp_cli::{cmd_bench, cmd_gradcheck, cmd_solve, BenchArgs, CliError, Suite, EXIT_USAGE, GRADCHECK_TOL};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bfgsqp", version, about = "BFGS-SQP solver harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured problem and write iterates.csv and solution.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a restart benchmark in both gradient modes and write bench.csv.
    Bench {
        /// odl, analytic or attack.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        restarts: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 0.3)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare autodiff gradients with central differences.
    Gradcheck {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Solve { config, out, seed } => cmd_solve(&config, &out, seed),
        Command::Bench { suite, restarts, n, m, theta, seed, out } => {
            let args = BenchArgs { suite: Suite::parse(&suite)?, restarts, seed, n, m, theta, out };
            let rows = cmd_bench(&args)?;
            let ok = rows.iter().filter(|r| r.success).count();
            println!("{suite}: {ok}/{} runs successful, wrote {}", rows.len(), args.out.join("bench.csv").display());
            Ok(0)
        }
        Command::Gradcheck { problem, trials, h, seed } => {
            let report = cmd_gradcheck(&problem, trials, h, seed)?;
            for (label, err) in &report.outputs {
                println!("{label}\t{err:.3e}");
            }
            println!("max\t{:.3e}", report.max);
            Ok(if report.max <= GRADCHECK_TOL { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
