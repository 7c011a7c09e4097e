use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use annotator_service::{serve, ServiceConfig, DEFAULT_BODY_LIMIT};
use clap::Parser;

/// Serve feature detection and headline recommendations over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Store file written by `annotator ingest`.
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Maximum request body size in bytes.
    #[arg(long, default_value_t = DEFAULT_BODY_LIMIT)]
    body_limit: usize,
    /// Browser origin allowed to call the API. Repeatable.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let config = ServiceConfig {
        listen: args.listen,
        store_path: args.store,
        body_limit: args.body_limit,
        cors_origins: args.cors_origins,
    };
    match serve(config).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
