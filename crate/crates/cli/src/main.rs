//! `cyclosc`: gain factors, scans and verification runs for oscillators with
//! cyclic time-dependent frequency.

mod commands;
mod fail;
mod params;
mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fail::CliError;
use params::{Format, Params};

#[derive(Debug, Parser)]
#[command(name = "cyclosc", version, about = "Harmonic oscillators with cyclic time-dependent frequency")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolution matrix and final energy of one outbound leg.
    Propagate(Params),
    /// Evolution matrix and gain factor of a full cycle, repeated `--cycles` times.
    Cycle(Params),
    /// Gain factor over a grid in `v`, `lambda` and `omega0`.
    Scan(Params),
    /// Forced oscillator over a closed cycle.
    Forced(Params),
    /// First-order transition probabilities, or the matrix-element inequality.
    Perturb(Params),
    /// Black-body spectrum in a contracted or expanded cavity.
    Spectrum(Params),
    /// Randomized invariant suite; exits 1 on any violation.
    Verify(Params),
}

type Handler = fn(&Params) -> Result<commands::Outcome, CliError>;

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let (params, f): (Params, Handler) = match cli.command {
        Command::Propagate(p) => (p, commands::propagate),
        Command::Cycle(p) => (p, commands::cycle),
        Command::Scan(p) => (p, commands::scan),
        Command::Forced(p) => (p, commands::forced),
        Command::Perturb(p) => (p, commands::perturb),
        Command::Spectrum(p) => (p, commands::spectrum),
        Command::Verify(p) => (p, commands::verify),
    };
    let params = params.resolve()?;
    if params.workers == Some(0) {
        return Err(CliError::Config("worker count must be at least 1".into()));
    }
    let outcome = f(&params)?;
    let text = outcome.table.render(params.format.unwrap_or(Format::Csv));
    match &params.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Numeric(format!("cannot write output: {e}")))?,
    }
    Ok(outcome.deferred)
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("{}", e.json_line());
    ExitCode::from(e.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::Config(e.to_string().trim().to_string())),
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => report(&e),
    }
}
