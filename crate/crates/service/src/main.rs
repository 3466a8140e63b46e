use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use bvr_service::{serve, ServiceConfig};
use clap::Parser;

#[derive(Parser)]
#[command(name = "bvr-service", version, about = "Serve engagement-index predictions over HTTP")]
struct Args {
    /// Model artifact written by `bvr train`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, env = "SERVICE_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Allowed browser origin; repeatable, `*` for any.
    #[arg(long = "cors-origin", env = "SERVICE_CORS_ORIGINS", value_delimiter = ',')]
    cors_origins: Vec<String>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let config = ServiceConfig {
        addr: args.addr,
        model: args.model,
        cors_origins: args.cors_origins,
    };
    match serve(config).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
