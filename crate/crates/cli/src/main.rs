use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod chart;
mod commands;
mod output;

use args::{Cli, Command};
use output::Run;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation; exit code 1.
    Usage(String),
    /// Unreadable or invalid input, or a failed computation; exit code 2.
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

/// Flags from `--config FILE`, placed right after the subcommand so that
/// later command-line flags override them.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strs.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let mut extra = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{path} line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key == "config" {
            return Err(CliError::Usage(format!("{path} line {}: nested config files are not supported", i + 1)));
        }
        match v.trim() {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            v => extra.push(OsString::from(format!("--{key}={v}"))),
        }
    }
    let at = 2.min(argv.len());
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

fn dispatch(command: Command) -> Result<Vec<String>, CliError> {
    let name = command.name();
    let mut run = Run::new(name, command.opts().clone())?;
    match command {
        Command::Analyze(_) => commands::analyze(&mut run)?,
        Command::ValidateLexicon(_) => commands::validate_lexicon(&mut run)?,
        Command::Novelty(_) => commands::novelty(&mut run)?,
        Command::Regress(_) => commands::regress(&mut run)?,
        Command::Experiment(_) => commands::experiment(&mut run)?,
        Command::Robustness(_) => commands::robustness(&mut run)?,
        Command::Synth(_) => commands::synth(&mut run)?,
    }
    let dir = run.opts.out.clone();
    Ok(run.finish()?.into_iter().map(|n| dir.join(n).display().to_string()).collect())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
