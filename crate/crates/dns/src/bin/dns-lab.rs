use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use helab_dns::{QueryLog, Server, ServerConfig, UdpServer, ZoneSpec};

/// Authoritative name server for Happy Eyeballs tests.
///
/// Answers `d<ms>-<a|aaaa|https|none>-<nonce>.<base-zone>` and holds the
/// answer for the named record type by the given number of milliseconds.
#[derive(Debug, Parser)]
struct Args {
    /// UDP addresses to listen on.
    #[arg(long = "listen", default_values = ["127.0.0.1:5353", "[::1]:5353"])]
    listen: Vec<SocketAddr>,
    /// TOML server config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    base_zone: Option<String>,
    /// Addresses returned for A and AAAA queries on encoded names.
    #[arg(long = "address")]
    addresses: Vec<std::net::IpAddr>,
    /// TOML file with a `zones` array of zone specs.
    #[arg(long)]
    zones: Option<PathBuf>,
    /// Append received queries to this JSON-lines file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
struct ZoneFile {
    zones: Vec<ZoneSpec>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .init();
    let args = Args::parse();

    let mut config = match &args.config {
        Some(path) => toml::from_str(&std::fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => ServerConfig::default(),
    };
    if let Some(zone) = args.base_zone {
        config.base_zone = zone;
    }
    if !args.addresses.is_empty() {
        config.v4.clear();
        config.v6.clear();
        for a in args.addresses {
            match a {
                std::net::IpAddr::V4(a) => config.v4.push(a),
                std::net::IpAddr::V6(a) => config.v6.push(a),
            }
        }
    }
    if let Some(path) = &args.zones {
        let file: ZoneFile = toml::from_str(&std::fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        config.zones.extend(file.zones);
    }

    let server = Arc::new(Server::new(&config)?);
    let log = match &args.log {
        Some(path) => QueryLog::file_only(path)?,
        None => QueryLog::disabled(),
    };
    let udp = UdpServer::bind(&args.listen, server, Instant::now(), log).await?;
    for addr in udp.local_addrs() {
        tracing::info!(%addr, zone = %config.base_zone, "serving");
    }
    tokio::signal::ctrl_c().await?;
    Ok(())
}
