//! How a tier's IPv6 delay is realized.

use std::io;
use std::net::SocketAddr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::net::{TcpSocket, TcpStream};

use crate::ladder::DelayTier;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapingHook {
    /// Delay is applied outside labd, or not at all.
    #[default]
    None,
    /// Run a privileged command per tier at startup, e.g. a `tc netem` rule.
    Command { template: String },
    /// Hold the IPv6 echo response for the tier delay. Only the application
    /// layer is delayed; the TCP handshake is not.
    ResponseHold,
    /// IPv6 endpoints of tiers with a nonzero delay never complete a
    /// handshake.
    Blackhole,
}

/// Substitutes `{tier}`, `{delay_ms}`, `{domain}`, `{v4}`, `{v6}`,
/// `{port_v4}` and `{port_v6}`.
pub fn render_command(template: &str, tier: &DelayTier) -> String {
    template
        .replace("{tier}", &tier.tier_index.to_string())
        .replace("{delay_ms}", &tier.delay_ms.to_string())
        .replace("{domain}", &tier.domain)
        .replace("{v4}", &tier.v4_endpoint.ip().to_string())
        .replace("{v6}", &tier.v6_endpoint.ip().to_string())
        .replace("{port_v4}", &tier.v4_endpoint.port().to_string())
        .replace("{port_v6}", &tier.v6_endpoint.port().to_string())
}

/// A bound port whose SYNs go unanswered: the listen queue is filled by
/// connections that are never accepted, so the kernel drops further SYNs.
#[derive(Debug)]
pub struct BlackholeListener {
    local: SocketAddr,
    _listener: tokio::net::TcpListener,
    _fillers: Vec<TcpStream>,
}

impl BlackholeListener {
    pub async fn bind(addr: SocketAddr) -> io::Result<Self> {
        let socket = if addr.is_ipv6() { TcpSocket::new_v6()? } else { TcpSocket::new_v4()? };
        socket.bind(addr)?;
        let listener = socket.listen(0)?;
        let local = listener.local_addr()?;
        let mut fillers = Vec::new();
        for _ in 0..8 {
            match tokio::time::timeout(Duration::from_millis(100), TcpStream::connect(local)).await {
                Ok(Ok(stream)) => fillers.push(stream),
                Ok(Err(e)) => return Err(e),
                Err(_) => return Ok(Self { local, _listener: listener, _fillers: fillers }),
            }
        }
        Err(io::Error::other("listen queue never filled"))
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::Ladder;

    #[test]
    fn renders_placeholders() {
        let l = Ladder::default_loopback(18000);
        let cmd = render_command("tc qdisc add dev lo netem delay {delay_ms}ms # {domain} [{v6}]:{port_v6}", &l.tiers[4]);
        assert_eq!(cmd, "tc qdisc add dev lo netem delay 200ms # t4-d200.he-test.example [::1]:18004");
    }

    #[test]
    fn hook_toml() {
        let h: ShapingHook = toml::from_str("kind = \"command\"\ntemplate = \"true\"\n").unwrap();
        assert_eq!(h, ShapingHook::Command { template: "true".into() });
        let h: ShapingHook = toml::from_str("kind = \"response_hold\"\n").unwrap();
        assert_eq!(h, ShapingHook::ResponseHold);
    }

    #[tokio::test]
    async fn blackhole_never_completes() {
        let hole = BlackholeListener::bind("127.0.0.1:0".parse().unwrap()).await.unwrap();
        let r = tokio::time::timeout(Duration::from_millis(300), TcpStream::connect(hole.local_addr())).await;
        assert!(r.is_err(), "connect completed: {r:?}");
    }
}
