use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qreset_cli::config::{parse_config, parse_list};
use qreset_cli::experiment::Recipe;
use qreset_cli::{execute, CliError, ERROR_LOG};

/// Quantum first-detection simulator: runs a figure recipe and writes CSV.
#[derive(Debug, Parser)]
#[command(name = "qreset", version)]
struct Args {
    /// pdet | reset-survival | mfdt-sweep | optimal-tr | delta-pr
    recipe: String,
    /// Flat `key = value` run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_path`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated τ values (overrides `tau_sweep`).
    #[arg(long, value_name = "V1,V2,...")]
    sweep_tau: Option<String>,
    /// Comma-separated t_r values (overrides `tr_sweep`).
    #[arg(long, value_name = "V1,V2,...")]
    sweep_tr: Option<String>,
}

fn run(args: Args) -> Result<ExitCode, CliError> {
    let recipe: Recipe = args.recipe.parse()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(raw) = &args.sweep_tau {
        config.tau_sweep = Some(parse_list("--sweep-tau", raw)?);
    }
    if let Some(raw) = &args.sweep_tr {
        config.tr_sweep = Some(parse_list("--sweep-tr", raw)?);
    }
    config.validate()?;
    let out_dir = args.out.unwrap_or_else(|| config.output_path.clone());

    let report = execute(&config, recipe, &out_dir)?;
    for path in &report.written {
        println!("wrote {}", path.display());
    }
    for line in &report.summary {
        println!("{line}");
    }
    if report.is_partial() {
        for line in &report.failures {
            eprintln!("failed {line}");
        }
        eprintln!("see {}", out_dir.join(ERROR_LOG).display());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qreset: {e}");
            ExitCode::from(1)
        }
    }
}
