use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ergolab::runner::{self, EXIT_PASS};

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Run integer-part polynomial ergodic experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides run.output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List scenarios, their required keys and what they exercise.
    List,
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ERGOLAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("ERGOLAB_THREADS must be a positive integer, got {:?}", v))?;
    if n == 0 {
        return Err("ERGOLAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {}", e);
        return ExitCode::from(runner::EXIT_CONFIG as u8);
    }
    let code = match cli.cmd {
        Cmd::List => {
            for s in runner::scenario_catalog() {
                println!("{:<11} {}", s.name, s.anchor);
                println!("{:<11} keys: {}", "", s.keys.join(", "));
            }
            EXIT_PASS
        }
        Cmd::Validate { config } => match runner::validate(&config) {
            Ok(cfg) => {
                println!("ok: {} ({})", cfg.run.name, cfg.run.scenario.name());
                EXIT_PASS
            }
            Err(e) => {
                eprintln!("error: {}", e);
                runner::error_exit_code(&e)
            }
        },
        Cmd::Run { config, out } => match runner::validate(&config).and_then(|cfg| {
            let dir = runner::output_dir(&cfg, out.as_deref());
            runner::run(&cfg, &dir).map(|r| (r, dir))
        }) {
            Ok((report, dir)) => {
                for c in &report.checks {
                    println!("{} {} value={:e} tol={:e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
                }
                println!("report: {}", dir.join("report.json").display());
                report.exit_code()
            }
            Err(e) => {
                eprintln!("error: {}", e);
                runner::error_exit_code(&e)
            }
        },
    };
    ExitCode::from(code as u8)
}
