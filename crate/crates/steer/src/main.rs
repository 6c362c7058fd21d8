use std::net::TcpListener;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use gne_core::harness::ScenarioConfig;
use gne_steer::{serve, ServerOptions, SessionDefaults};

/// Serves live steering sessions over websockets.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 8700)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Scenario used when a client's hello names none.
    #[arg(long, default_value = "scenario2")]
    preset: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write a replayable transcript of each connection.
    #[arg(long)]
    record: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    ScenarioConfig::preset(&args.preset)?;
    anyhow::ensure!(args.alpha > 0.0 && args.alpha < 1.0, "--alpha must lie in (0, 1)");
    let listener = TcpListener::bind((args.bind.as_str(), args.port))
        .with_context(|| format!("binding {}:{}", args.bind, args.port))?;
    log::info!("listening on ws://{}", listener.local_addr()?);
    serve(
        listener,
        ServerOptions {
            defaults: SessionDefaults {
                preset: args.preset,
                alpha: args.alpha,
            },
            record: args.record,
            max_connections: None,
        },
    )?;
    Ok(())
}
