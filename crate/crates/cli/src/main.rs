mod args;
mod commands;
mod data;
mod error;
mod manifest;
mod resolve;

use std::io::Write;
use std::path::Path;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            fail(&CliError::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    if let Err(e) = run(cli, argv) {
        fail(&e);
    }
}

fn fail(e: &CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code());
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    if let Command::Replay { manifest_path } = &cli.command {
        let m = RunManifest::read(manifest_path)?;
        let output = m.replay()?;
        return emit(cli.global.out.as_deref(), &output);
    }
    let extra_inputs: Vec<_> = match &cli.command {
        Command::Simulate(a) => a.config.iter().map(|p| std::fs::canonicalize(p).unwrap_or_else(|_| p.clone())).collect(),
        _ => Vec::new(),
    };
    let invocation = resolve::resolve(cli.command, &cli.global)?;
    let output = invocation.execute()?;
    emit(cli.global.out.as_deref(), &output)?;
    if let Some(path) = &cli.global.manifest {
        RunManifest::new(argv, invocation, &extra_inputs, &output)?.write(path)?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, output: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, output).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
