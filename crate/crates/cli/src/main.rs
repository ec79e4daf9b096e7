//! `logenc` command-line driver.
//!
//! Exit codes: 0 success, 1 other failure, 2 verification failure,
//! 3 parse or file-format error, 4 configuration error.

mod args;
mod commands;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Invalid flags or flag combinations.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use logenc::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::VerificationFailed(_) => 2,
                E::Syntax { .. }
                | E::UndefinedNet { .. }
                | E::DuplicateDefinition { .. }
                | E::Invalid(_)
                | E::Json(_)
                | E::InterfaceMismatch(_)
                | E::LengthMismatch { .. }
                | E::MissingAssignment(_) => 3,
                E::InvalidArgument(_) => 4,
                E::Unsupported(_) | E::FrozenNetLost(_) | E::Io(_) => 1,
            };
        }
    }
    1
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Encrypt(a) => commands::encrypt(cli, a),
        Command::Verify(a) => commands::verify(cli, a),
        Command::Attack(a) => commands::attack(cli, a),
        Command::Stats(a) => commands::stats(cli, a),
        Command::Map(a) => commands::map(cli, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
