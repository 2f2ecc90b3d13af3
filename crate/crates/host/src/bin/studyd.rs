//! Study server.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;
use tracing_subscriber::EnvFilter;

use circuitlab::server::SystemClock;
use circuitlab::store::Store;
use circuitlab::{load_studies, router, Host, DATA_DIR_ENV};

#[derive(Parser)]
#[command(name = "studyd", about = "Serve circuit studies over HTTP")]
struct Cli {
    /// Study configuration file.
    #[arg(long, default_value = "study.toml")]
    config: PathBuf,
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Root directory for session logs.
    #[arg(long, env = DATA_DIR_ENV, default_value = "study-data")]
    data_dir: PathBuf,
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let cli = Cli::parse();

    let studies =
        load_studies(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?;
    let store = Store::open(&cli.data_dir)?;
    let host = Arc::new(Host::new(studies, store, Arc::new(SystemClock)));
    let report = host.recover()?;
    tracing::info!(
        recovered = report.recovered.len(),
        skipped = report.skipped.len(),
        "session logs loaded"
    );

    let listener = tokio::net::TcpListener::bind(cli.listen)
        .await
        .with_context(|| format!("binding {}", cli.listen))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(host))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
