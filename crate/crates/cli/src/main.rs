use std::process::ExitCode;

use clap::Parser;
use qol_cli::args::{load_config_file, Cli, Command};
use qol_cli::run::summary_line;
use qol_cli::{cmd_report, cmd_run, cmd_sweep, CliError};

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            run,
            config,
            output,
            force,
        } => {
            let cfg = match config {
                Some(path) => load_config_file(&path)?,
                None => run.to_config()?,
            };
            let (doc, warnings) = cmd_run(cfg, force, output.as_deref())?;
            warn_all(&warnings);
            println!("{}", summary_line(&doc));
        }
        Command::Sweep {
            run,
            grid,
            out_dir,
            force,
        } => {
            let outcome = cmd_sweep(&run.to_config()?, &grid.into(), force, &out_dir)?;
            warn_all(&outcome.warnings);
            for f in &outcome.failures {
                eprintln!("warning: grid point failed: {}", f.error);
            }
            println!(
                "wrote {} result(s) to {}, {} failure(s)",
                outcome.written.len(),
                out_dir.display(),
                outcome.failures.len()
            );
            if outcome.written.is_empty() {
                return Err(CliError::Data("every grid point failed".into()));
            }
        }
        Command::Report { inputs, format } => {
            let (table, warnings) = cmd_report(&inputs, format)?;
            warn_all(&warnings);
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
