use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use bufdstc::config::{apply, parse_unvalidated};
use bufdstc::protocol::{run_sweep, SimConfig};
use bufdstc::report::{emit_results, OutputFormat, RunManifest};

/// Monte Carlo BER and delay sweep of buffer-aided relay-pair selection.
#[derive(Debug, Parser)]
#[command(name = "bufdstc", version)]
struct Cli {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scheme name, overriding the configuration
    #[arg(long)]
    scheme: Option<String>,
    /// SNR grid in dB as a:b:step, overriding the configuration
    #[arg(long)]
    snr: Option<String>,
}

fn load(cli: &Cli) -> Result<SimConfig, String> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut config = parse_unvalidated(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(scheme) = &cli.scheme {
        apply(&mut config, "scheme", scheme).map_err(|e| e.to_string())?;
    }
    if let Some(snr) = &cli.snr {
        apply(&mut config, "snr", snr).map_err(|e| e.to_string())?;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), String> {
    let config = load(cli)?;
    let start = Instant::now();
    let result = run_sweep(&config).map_err(|e| e.to_string())?;
    let manifest = RunManifest::new(&config, result, start.elapsed().as_secs_f64());
    let written = match &cli.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            emit_results(&manifest, cli.format, BufWriter::new(file))
        }
        None => emit_results(&manifest, cli.format, io::stdout().lock()),
    };
    written.map_err(|e| format!("cannot write results: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            let _ = writeln!(io::stderr(), "bufdstc: {message}");
            ExitCode::FAILURE
        }
    }
}
