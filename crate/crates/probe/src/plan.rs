use helab_core::simnet::Scenario;
use helab_core::Millis;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::ClientProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Delay IPv6 connection setup.
    Cad,
    /// Delay the AAAA answer.
    Rd,
    /// Delay the A answer.
    RdADelay,
    /// Every address of both families is dead.
    AddressSelection,
}

/// Coarse sweep `coarse_start..=coarse_end`, then a fine sweep of
/// `±fine_window` around the first coarse IPv4 point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayGrid {
    pub coarse_start: Millis,
    pub coarse_end: Millis,
    pub coarse_step: Millis,
    pub fine_window: Millis,
    pub fine_step: Millis,
}

impl Default for DelayGrid {
    fn default() -> Self {
        // One step past the 2 s CAD ceiling so a maximal delay still shows a
        // transition.
        Self { coarse_start: 0, coarse_end: 2100, coarse_step: 100, fine_window: 100, fine_step: 5 }
    }
}

impl DelayGrid {
    pub fn coarse(&self) -> Vec<Millis> {
        (self.coarse_start..=self.coarse_end).step_by(self.coarse_step as usize).collect()
    }

    pub fn fine_around(&self, transition: Millis) -> Vec<Millis> {
        let lo = transition.saturating_sub(self.fine_window).max(self.coarse_start);
        (lo..=transition + self.fine_window).step_by(self.fine_step as usize).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientSpec {
    /// In-process client on the simulated network.
    Simulated {
        profile: ClientProfile,
        #[serde(default = "default_rtt")]
        base_rtt_ms: Millis,
    },
    /// External program against real loopback sockets. The template may use
    /// `{url}`, `{dns}`, `{name}`, `{port}` and `{nonce}`.
    Command {
        template: String,
        #[serde(default = "default_timeout")]
        timeout_ms: Millis,
    },
}

fn default_rtt() -> Millis {
    1
}

fn default_timeout() -> Millis {
    10_000
}

fn default_repetitions() -> u32 {
    1
}

fn default_addresses() -> usize {
    10
}

fn default_port() -> u16 {
    443
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestPlan {
    pub client: ClientSpec,
    pub target_kind: TargetKind,
    #[serde(default)]
    pub delay_grid: DelayGrid,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    /// Run between grid points.
    #[serde(default)]
    pub reset_hook: Option<String>,
    #[serde(default = "default_addresses")]
    pub addresses_per_family: usize,
    /// Simulated destination port.
    #[serde(default = "default_port")]
    pub port: u16,
    /// Base scenario for simulated clients; the probe adds the swept delay.
    #[serde(default)]
    pub network: Scenario,
    /// Seeds nonce generation.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("grid steps must be positive")]
    ZeroStep,
    #[error("fine step {fine} exceeds coarse step {coarse}")]
    FineCoarserThanCoarse { fine: Millis, coarse: Millis },
    #[error("coarse grid ends before it starts")]
    EmptyGrid,
    #[error("addresses_per_family must be in 1..=250")]
    AddressCount,
    #[error("address selection needs a simulated client")]
    AddressSelectionNeedsSimulation,
}

impl TestPlan {
    pub fn simulated(profile: ClientProfile, target_kind: TargetKind) -> Self {
        Self {
            client: ClientSpec::Simulated { profile, base_rtt_ms: default_rtt() },
            target_kind,
            delay_grid: DelayGrid::default(),
            repetitions: default_repetitions(),
            reset_hook: None,
            addresses_per_family: default_addresses(),
            port: default_port(),
            network: Scenario::default(),
            seed: 0,
        }
    }

    pub fn command(template: impl Into<String>, target_kind: TargetKind) -> Self {
        Self {
            client: ClientSpec::Command { template: template.into(), timeout_ms: default_timeout() },
            ..Self::simulated(ClientProfile::default(), target_kind)
        }
    }

    pub fn from_toml(input: &str) -> anyhow::Result<Self> {
        let plan: Self = toml::from_str(input)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let g = &self.delay_grid;
        if self.repetitions == 0 {
            return Err(PlanError::NoRepetitions);
        }
        if g.coarse_step == 0 || g.fine_step == 0 {
            return Err(PlanError::ZeroStep);
        }
        if g.fine_step > g.coarse_step {
            return Err(PlanError::FineCoarserThanCoarse { fine: g.fine_step, coarse: g.coarse_step });
        }
        if g.coarse_end < g.coarse_start {
            return Err(PlanError::EmptyGrid);
        }
        if !(1..=250).contains(&self.addresses_per_family) {
            return Err(PlanError::AddressCount);
        }
        if self.target_kind == TargetKind::AddressSelection && matches!(self.client, ClientSpec::Command { .. }) {
            return Err(PlanError::AddressSelectionNeedsSimulation);
        }
        Ok(())
    }
}
