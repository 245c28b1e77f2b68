use std::net::{Ipv4Addr, Ipv6Addr, SocketAddr};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use helab_labd::{AcceptLog, Labd, LabdConfig, Ladder, ShapingHook, DEFAULT_DELAYS};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Hook {
    None,
    Command,
    ResponseHold,
    Blackhole,
}

#[derive(Debug, Parser)]
#[command(about = "Serve the delay-tier ladder and collect browser results")]
struct Args {
    /// Ladder TOML; defaults to the built-in loopback ladder.
    #[arg(long)]
    ladder: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, default_value = "he-test.example")]
    base_domain: String,
    #[arg(long, default_value_t = Ipv4Addr::LOCALHOST)]
    tier_v4: Ipv4Addr,
    #[arg(long, default_value_t = Ipv6Addr::LOCALHOST)]
    tier_v6: Ipv6Addr,
    /// Tier i listens on base_port + i; 0 picks ephemeral ports.
    #[arg(long, default_value_t = 18000)]
    base_port: u16,
    /// Do not bind per-tier endpoints (a proxy routes by Host).
    #[arg(long)]
    no_tiers: bool,
    #[arg(long, default_value = "results.jsonl")]
    storage: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    hook: Hook,
    /// Command template for `--hook command`.
    #[arg(long)]
    hook_command: Option<String>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .init();
    let args = Args::parse();
    let ladder = match &args.ladder {
        Some(path) => Ladder::from_toml(&std::fs::read_to_string(path).with_context(|| path.display().to_string())?)?,
        None => Ladder::desk_scale(&DEFAULT_DELAYS, &args.base_domain, args.tier_v4, args.tier_v6, args.base_port)?,
    };
    let hook = match (args.hook, args.hook_command) {
        (Hook::None, _) => ShapingHook::None,
        (Hook::ResponseHold, _) => ShapingHook::ResponseHold,
        (Hook::Blackhole, _) => ShapingHook::Blackhole,
        (Hook::Command, Some(template)) => ShapingHook::Command { template },
        (Hook::Command, None) => bail!("--hook command needs --hook-command"),
    };
    let config = LabdConfig { ladder, listen: args.listen, storage: args.storage, hook, bind_tiers: !args.no_tiers };
    let labd = Labd::start(config, AcceptLog::new(Instant::now())).await?;
    for cmd in labd.shaping_commands() {
        let status = Command::new("sh").arg("-c").arg(&cmd).status()?;
        if !status.success() {
            bail!("shaping command failed ({status}): {cmd}");
        }
    }
    tracing::info!(addr = %labd.local_addr(), tiers = labd.ladder().tiers.len(), "labd listening");
    tokio::signal::ctrl_c().await?;
    Ok(())
}
