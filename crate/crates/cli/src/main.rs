use std::process::ExitCode;

use clap::Parser;
use tokvec_cli::commands::{run, Cli};
use tokvec_cli::wire::error_kind;

fn main() -> ExitCode {
    let cli = Cli::parse();
    tokvec_cli::init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = err.downcast_ref::<tokvec::Error>().map_or("invalid_argument", error_kind);
            let body = serde_json::json!({ "error": kind, "message": format!("{err:#}") });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
