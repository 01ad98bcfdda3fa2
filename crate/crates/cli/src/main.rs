//! `scenediff`: change detection against a view-sequence map.
//!
//! Exit status is 0 on success, 1 on a pipeline error (one JSON object on
//! stderr: `{"error": <kind>, "message": <text>}`), 2 on a usage error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.verbose { "debug" } else { "info" }),
    )
    .format_timestamp(None)
    .init();

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .downcast_ref::<scenediff::Error>()
                .map(scenediff::Error::kind)
                .unwrap_or("internal");
            let line = serde_json::json!({ "error": kind, "message": format!("{e:#}") });
            eprintln!("{line}");
            ExitCode::from(1)
        }
    }
}
