use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polaron_cli::{run, CliError, CliResult, Config, ExperimentSpec, Kind, Sweep};

/// Numerical experiments on a harmonically bound particle attached to an
/// elastic string.
#[derive(Debug, Parser)]
#[command(name = "polaron-lab", version)]
struct Args {
    /// spectrum | modes | oracle | fluct | profile | decay | validate
    experiment: String,
    /// `key = value` file; `#` starts a comment
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set rho=0.1`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run once per value, e.g. `--sweep damping_ratio=0.1,0.5,1`; repeat
    /// to sweep the product of several keys
    #[arg(long, value_name = "KEY=V1,V2,...")]
    sweep: Vec<String>,
}

fn build(args: &Args) -> CliResult<ExperimentSpec> {
    let kind = Kind::parse(&args.experiment)?;
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for s in &args.set {
        config.apply_override(s)?;
    }
    let sweeps = args.sweep.iter().map(|s| Sweep::parse(s)).collect::<CliResult<_>>()?;
    Ok(ExperimentSpec {
        kind,
        config,
        sweeps,
        out: args.out.clone(),
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = build(&args).and_then(|spec| run(&spec));
    match outcome {
        Ok(res) => {
            print!("{}", res.text);
            ExitCode::from(res.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("polaron-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
