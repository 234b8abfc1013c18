use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use freebound_cli::{execute, Cli, CliError};

fn emit(cli: &Cli) -> Result<u8, CliError> {
    let output = execute(cli.command, &cli.flags)?;
    let text = output.render();
    match &cli.flags.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                detail: e.to_string(),
            })?;
        }
    }
    for f in &output.document.outcome.failures {
        eprintln!("fail: {f}");
    }
    Ok(output.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match emit(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::EXIT_CODE)
        }
    }
}
