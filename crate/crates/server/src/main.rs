use std::path::PathBuf;

use clap::{Parser, Subcommand};
use proofbench_core::Role;
use proofbench_server::auth::TokenMinter;
use proofbench_server::{router, App, Config};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(version, about = "proofbench API server")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the server, configured from PB_* environment variables (the default).
    Serve,
    /// Print a signed token, for local development.
    MintToken {
        /// Ed25519 private key in PEM form.
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        kid: Option<String>,
        #[arg(long)]
        subject: String,
        #[arg(long)]
        username: Option<String>,
        /// Repeatable: student, teacher or admin.
        #[arg(long = "role", default_value = "student")]
        roles: Vec<Role>,
        #[arg(long, default_value_t = 3600)]
        ttl: i64,
    },
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    match Cli::parse().command.unwrap_or(Command::Serve) {
        Command::Serve => serve().await,
        Command::MintToken { key, issuer, kid, subject, username, roles, ttl } => {
            let pem = std::fs::read(&key)?;
            let minter = TokenMinter::from_ed_pem(&issuer, kid.as_deref(), &pem)?;
            println!("{}", minter.mint(&subject, username.as_deref().unwrap_or(&subject), &roles, ttl));
            Ok(())
        }
    }
}

async fn serve() -> Result<(), Box<dyn std::error::Error>> {
    let config = Config::from_env()?;
    if config.issuers.is_empty() {
        tracing::warn!("no token issuer configured; only /v1/health will answer");
    }
    let addr = config.listen_addr;
    let state = App::build(config).await?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let pool = state.pool.clone();
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            tokio::signal::ctrl_c().await.ok();
        })
        .await?;
    pool.shutdown().await;
    Ok(())
}
