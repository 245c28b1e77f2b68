use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use helab_probe::demo::{run_demo_client, DemoClientConfig};
use helab_probe::{render_report, sweep, RealLab, SimLab, TestPlan};

#[derive(Debug, Parser)]
#[command(about = "Measure Happy Eyeballs behaviour of a client")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sweep a client per a test plan and print its feature row.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Client label in the report.
        #[arg(long, default_value = "client")]
        name: String,
    },
    /// The reference client: fetch a URL, resolving through `--dns`.
    DemoClient {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dns: SocketAddr,
        url: url::Url,
    },
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match Args::parse().command {
        Cmd::Run { plan, out, name } => {
            let text = std::fs::read_to_string(&plan).with_context(|| plan.display().to_string())?;
            let plan = TestPlan::from_toml(&text)?;
            let outcome = match SimLab::from_plan(&plan) {
                Some(mut lab) => sweep(&plan, &mut lab)?,
                None => {
                    let mut lab = RealLab::from_plan(&plan)?.expect("command client");
                    sweep(&plan, &mut lab)?
                }
            };
            let report = render_report(&name, &outcome.verdict);
            print!("{}", report.to_text());
            std::fs::write(&out, report.to_json())?;
            Ok(())
        }
        Cmd::DemoClient { config, dns, url } => {
            let config: DemoClientConfig = match config {
                Some(path) => toml::from_str(&std::fs::read_to_string(&path).with_context(|| path.display().to_string())?)?,
                None => DemoClientConfig::default(),
            };
            let report = run_demo_client(&config, dns, &url)?;
            println!("{}", serde_json::to_string(&report)?);
            if !report.ok {
                std::process::exit(1);
            }
            Ok(())
        }
    }
}
