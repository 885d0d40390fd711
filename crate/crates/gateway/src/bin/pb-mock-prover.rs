//! Stand-alone mock prover. Prints `listening <addr>` once bound.

use std::path::PathBuf;

use clap::Parser;
use proofbench_gateway::mock::{MockConfig, MockMode, MockServer};
use proofbench_gateway::FixtureSet;

#[derive(Parser)]
#[command(version, about = "Mock prover speaking the proofbench line protocol")]
struct Args {
    #[arg(long, default_value_t = 0)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value = "structural")]
    mode: MockMode,
    /// Fixture file or directory of *.json fixture files.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Stop answering after this many checks.
    #[arg(long)]
    fail_after: Option<u64>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let mut config = MockConfig::structural();
    if let Some(path) = &args.fixtures {
        config.fixtures = FixtureSet::load(path)?.into();
    }
    config.mode = args.mode;
    config.fail_after = args.fail_after;
    let server = MockServer::bind(format!("{}:{}", args.host, args.port).parse()?, config).await?;
    println!("listening {}", server.addr());
    tokio::signal::ctrl_c().await?;
    server.stop();
    Ok(())
}
