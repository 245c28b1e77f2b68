use std::collections::BTreeSet;
use std::net::IpAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use helab_dns::querylog::read_json_lines;
use helab_dns::{ZoneSpec, ZoneTemplate};
use helab_resolver_probe::{build_campaign, classify, render, traces_from_log, ClassifyOptions, TABLE_HEADER};
use rand::distributions::{Alphanumeric, DistString};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(about = "Measure a recursive resolver's IPv6 use toward authoritative servers")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write one zone per delay plus the names to query.
    Campaign {
        #[arg(long, value_delimiter = ',', required = true)]
        delays: Vec<u64>,
        #[arg(long)]
        glue: bool,
        #[arg(long, default_value = "res.he-test.example.")]
        parent: String,
        /// Campaign tag; random when omitted.
        #[arg(long)]
        tag: Option<String>,
        /// Addresses of our name server (both families).
        #[arg(long = "ns-address", required = true)]
        ns_addresses: Vec<IpAddr>,
        #[arg(long = "target-address", default_values = ["192.0.2.80", "2001:db8::80"])]
        target_addresses: Vec<IpAddr>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read `zones.toml` and `*.jsonl` query logs from a directory.
    Classify {
        #[arg(long)]
        traces: PathBuf,
        /// Only count queries from these source addresses.
        #[arg(long)]
        sources: Option<PathBuf>,
        #[arg(long, default_value = "resolver")]
        name: String,
        #[arg(long, default_value_t = 1.5)]
        backoff_ratio: f64,
        /// JSON verdict output.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
struct ZonesFile {
    zones: Vec<ZoneSpec>,
}

#[derive(Deserialize)]
struct Sources {
    addresses: Vec<IpAddr>,
}

fn main() -> anyhow::Result<()> {
    match Args::parse().command {
        Cmd::Campaign { delays, glue, parent, tag, ns_addresses, target_addresses, out } => {
            let campaign = tag.unwrap_or_else(|| Alphanumeric.sample_string(&mut rand::thread_rng(), 6).to_ascii_lowercase());
            let template = ZoneTemplate { parent, campaign, ns_addresses, target_addresses, glue, ttl: 0 };
            let c = build_campaign(&delays, glue, &template)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("zones.toml"), c.zones_toml())?;
            std::fs::write(out.join("queries.txt"), c.queries.join("\n") + "\n")?;
            println!("{} zones written to {}", c.zones.len(), out.display());
        }
        Cmd::Classify { traces, sources, name, backoff_ratio, json } => {
            let zones_path = traces.join("zones.toml");
            let zones: ZonesFile = toml::from_str(
                &std::fs::read_to_string(&zones_path).with_context(|| zones_path.display().to_string())?,
            )?;
            let mut entries = Vec::new();
            for entry in std::fs::read_dir(&traces)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "jsonl") {
                    entries.extend(read_json_lines(&path)?);
                }
            }
            if let Some(path) = sources {
                let s: Sources = toml::from_str(&std::fs::read_to_string(&path)?)?;
                let allowed: BTreeSet<IpAddr> = s.addresses.into_iter().collect();
                entries.retain(|e| allowed.contains(&e.source.ip()));
            }
            let t = traces_from_log(&entries, &zones.zones);
            let opts = ClassifyOptions { backoff_ratio, ..ClassifyOptions::default() };
            let verdict = classify(&t, &opts)?;
            print!("{TABLE_HEADER}{}", render(&name, &verdict));
            let text = serde_json::to_string_pretty(&verdict)?;
            match json {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}
