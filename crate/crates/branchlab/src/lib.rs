//! Command-line front end: configuration, dispatch to the numerical
//! stages, and file emission.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::Path;

use branchlab_core::error::Error;
use clap::{Arg, ArgMatches};

use crate::config::{parse_config, Command, RunConfig};
use crate::output::Output;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Io(_) => 1,
            RunError::Numerical(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Usage(_) => "usage",
            RunError::Io(_) => "io",
            RunError::Numerical(_) => "numerical",
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => RunError::Usage(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

fn cli() -> clap::Command {
    let config = Arg::new("config")
        .long("config")
        .value_name("FILE")
        .global(true)
        .help("key = value config file");
    let mut app = clap::Command::new("branchlab")
        .about("Branched minimal graphs from spherical reflection symmetry")
        .version(env!("CARGO_PKG_VERSION"))
        .arg(config);
    for c in Command::ALL {
        let mut sub = clap::Command::new(c.name()).about(c.about());
        for k in c.keys() {
            sub = sub.arg(
                Arg::new(k.name)
                    .long(k.name.replace('_', "-"))
                    .value_name("VALUE")
                    .help(format!("{} [default: {}]", k.help, k.default)),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

/// Resolves the command line and optional config file into a run
/// configuration.
pub fn resolve(matches: &ArgMatches) -> Result<RunConfig, RunError> {
    let sub = matches.subcommand();
    let config_path = sub
        .and_then(|(_, m)| m.get_one::<String>("config"))
        .or_else(|| matches.get_one::<String>("config"));
    let file = match config_path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| RunError::Usage(format!("{p}: {e}")))?;
            parse_config(&text)?
        }
        None => Vec::new(),
    };
    let from_file = file
        .iter()
        .find(|(k, _)| k == "command")
        .map(|(_, v)| v.parse::<Command>())
        .transpose()?;
    let command = match (
        sub.map(|(name, _)| name.parse::<Command>()).transpose()?,
        from_file,
    ) {
        (Some(a), Some(b)) if a != b => {
            return Err(RunError::Usage(format!(
                "command line says {a} but config says {b}"
            )));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            return Err(RunError::Usage(
                "no command given on the command line or in the config".into(),
            ))
        }
    };
    let mut flags = Vec::new();
    if let Some((_, m)) = sub {
        for k in command.keys() {
            if let Some(v) = m.get_one::<String>(k.name) {
                flags.push((k.name.to_string(), v.clone()));
            }
        }
    }
    RunConfig::build(command, &file, &flags)
}

/// Runs one configured stage and returns the output directory contents
/// written.
pub fn run(cfg: &RunConfig) -> Result<Output, RunError> {
    let mut out = Output::new(Path::new(cfg.str("out")))?;
    match cfg.command {
        Command::Tile => commands::tile::run(cfg, &mut out)?,
        Command::Eig => commands::eig::run(cfg, &mut out)?,
        Command::Harmonic => commands::harmonic::run(cfg, &mut out)?,
        Command::Mse => commands::mse::run(cfg, &mut out)?,
        Command::Branch => commands::branch::run(cfg, &mut out)?,
        Command::Bifurcate => commands::bifurcate::run(cfg, &mut out)?,
    }
    Ok(out)
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                eprintln!("error: kind=usage reason=\"invalid command line\"");
            }
            return code;
        }
    };
    let result = resolve(&matches).and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            for p in out.written() {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!(
                "error: kind={} reason=\"{}\"",
                e.kind(),
                e.to_string().replace('"', "'")
            );
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        cli().debug_assert();
    }
}
