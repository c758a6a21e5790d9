use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hawking_lab::{catalog, run, LabError, RunConfig};

#[derive(Parser)]
#[command(name = "hawklab", version, about = "Run the collapsing-star Dirac experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<id>.csv` and `<id>.json`.
    Run {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value` override; keys without a section prefix refer to the experiment's section.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Shorthand for `--set kappa=<value>`.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment ids.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (id, what) in catalog() {
                println!("{id:<22} {what}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, mut overrides, kappa, out } => {
            if let Some(k) = kappa {
                overrides.push(format!("kappa={k}"));
            }
            match execute(&experiment, config, &overrides, out) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("hawklab: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

fn execute(experiment: &str, config: Option<PathBuf>, overrides: &[String], out: Option<PathBuf>) -> Result<bool, LabError> {
    if !catalog().iter().any(|(id, _)| *id == experiment) {
        return Err(LabError::Config(format!("unknown experiment `{experiment}`; see `hawklab list`")));
    }
    let cfg = RunConfig::load(config.as_deref(), experiment, overrides)?;
    if let Ok(n) = std::env::var("HAWKLAB_THREADS") {
        let n: usize = n.parse().map_err(|_| LabError::Config(format!("HAWKLAB_THREADS=`{n}` is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Resource(e.to_string()))?;
    }
    let dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let report = run(experiment, &cfg)?;
    for p in report.write(&dir)? {
        println!("wrote {}", p.display());
    }
    for a in &report.assertions {
        println!("{} {:<34} {}", if a.passed { "PASS" } else { "FAIL" }, a.id, a.note);
    }
    let failing = report.failing();
    if !failing.is_empty() {
        eprintln!("failing assertions: {}", failing.join(", "));
    }
    Ok(failing.is_empty())
}
