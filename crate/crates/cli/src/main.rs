//! `spectral-spike` command-line tool.
//!
//! Every command prints one JSON document on stdout. Exit status is 0 on
//! success, 1 for runtime or data errors and 2 for usage errors; failures
//! also print `{"error": ...}`.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::Failure;

/// Writes the document to stdout. A closed pipe (say, `| head`) is not an error.
fn print_json(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            print_json(&json!({ "error": e.kind().to_string() }));
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("--threads must be at least 1");
            print_json(&json!({ "error": "--threads must be at least 1" }));
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            print_json(&json!({ "error": e.to_string() }));
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Detect(a) => commands::detect_cmd(a),
        Command::Asd(a) => commands::asd_cmd(a),
        Command::Poles(a) => commands::poles_cmd(a),
    };
    match outcome {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun with --help for usage.");
            print_json(&json!({ "error": msg }));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            print_json(&json!({ "error": msg }));
            ExitCode::from(1)
        }
    }
}
