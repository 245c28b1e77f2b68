use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::net::UdpSocket;
use tokio::task::JoinHandle;

use crate::querylog::QueryLog;
use crate::server::{QueryContext, Server};

/// UDP front-end: one receive loop per bound address. Held responses are
/// sent from their own task so a long hold never blocks other queries.
pub struct UdpServer {
    local_addrs: Vec<SocketAddr>,
    log: QueryLog,
    tasks: Vec<JoinHandle<()>>,
}

impl UdpServer {
    /// Timestamps in the log are ms since `epoch`.
    pub async fn bind(
        addrs: &[SocketAddr],
        server: Arc<Server>,
        epoch: Instant,
        log: QueryLog,
    ) -> io::Result<Self> {
        let mut local_addrs = Vec::new();
        let mut tasks = Vec::new();
        for addr in addrs {
            let socket = Arc::new(UdpSocket::bind(addr).await?);
            local_addrs.push(socket.local_addr()?);
            tasks.push(tokio::spawn(receive_loop(socket, server.clone(), epoch, log.clone())));
        }
        Ok(Self {
            local_addrs,
            log,
            tasks,
        })
    }

    pub fn local_addrs(&self) -> &[SocketAddr] {
        &self.local_addrs
    }

    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    /// Also happens on drop.
    pub fn shutdown(self) {}
}

impl Drop for UdpServer {
    fn drop(&mut self) {
        for task in &self.tasks {
            task.abort();
        }
    }
}

async fn receive_loop(socket: Arc<UdpSocket>, server: Arc<Server>, epoch: Instant, log: QueryLog) {
    let mut buf = vec![0u8; 4096];
    loop {
        let (len, source) = match socket.recv_from(&mut buf).await {
            Ok(v) => v,
            Err(e) => {
                tracing::warn!(error = %e, "udp receive failed");
                continue;
            }
        };
        let received = Instant::now();
        let ctx = QueryContext {
            source,
            received_at: received.duration_since(epoch).as_millis() as u64,
        };
        let Some(served) = server.serve(&buf[..len], &ctx) else {
            continue;
        };
        if let Err(e) = log.append(served.log.clone()) {
            tracing::warn!(error = %e, "query log write failed");
        }
        let socket = socket.clone();
        let send_at = received + Duration::from_millis(served.delay_ms);
        tokio::spawn(async move {
            tokio::time::sleep_until(send_at.into()).await;
            if let Err(e) = socket.send_to(&served.response, source).await {
                tracing::debug!(error = %e, %source, "udp send failed");
            }
        });
    }
}
