use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use jobmatch_server::cli::{run, Cli};

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let json = cli.json;
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if json {
                let body = serde_json::json!({ "error": e.code(), "message": e.to_string() });
                let _ = writeln!(std::io::stderr(), "{body}");
            } else {
                let _ = writeln!(std::io::stderr(), "error: {e}");
            }
            ExitCode::FAILURE
        }
    }
}
