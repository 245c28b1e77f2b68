use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;
use std::time::{Duration, Instant};

use helab_core::Family;
use helab_dns::wire::{rtype, Message, Name};
use helab_dns::zone::{synthesize_resolver_zones, ZoneTemplate};
use helab_dns::{QueryLog, Server, ServerConfig, UdpServer};
use tokio::net::UdpSocket;

async fn start(config: ServerConfig) -> UdpServer {
    let addrs: [SocketAddr; 2] = ["127.0.0.1:0".parse().unwrap(), "[::1]:0".parse().unwrap()];
    let server = Arc::new(Server::new(&config).unwrap());
    UdpServer::bind(&addrs, server, Instant::now(), QueryLog::in_memory())
        .await
        .unwrap()
}

/// Sends one query and returns the decoded answer with the client-side
/// round trip.
async fn ask(server: SocketAddr, name: &str, qtype: u16) -> (Message, Duration) {
    let bind: SocketAddr = if server.is_ipv6() { "[::1]:0" } else { "127.0.0.1:0" }.parse().unwrap();
    let socket = UdpSocket::bind(bind).await.unwrap();
    let q = Message::query(rand_id(name), Name::parse(name).unwrap(), qtype).encode();
    let sent = Instant::now();
    socket.send_to(&q, server).await.unwrap();
    let mut buf = [0u8; 1500];
    let (n, _) = tokio::time::timeout(Duration::from_secs(5), socket.recv_from(&mut buf))
        .await
        .expect("answer within 5 s")
        .unwrap();
    (Message::decode(&buf[..n]).unwrap(), sent.elapsed())
}

fn rand_id(name: &str) -> u16 {
    name.bytes().fold(7u16, |h, b| h.wrapping_mul(31).wrapping_add(b as u16))
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn encoded_delay_is_applied_to_target_type_only() {
    let udp = start(ServerConfig::default()).await;
    let addr = udp.local_addrs()[0];
    let name = "d200-aaaa-udp1.he-test.example.";
    let (aaaa, aaaa_rtt) = ask(addr, name, rtype::AAAA).await;
    let (a, a_rtt) = ask(addr, name, rtype::A).await;
    assert!(aaaa_rtt >= Duration::from_millis(200), "{aaaa_rtt:?}");
    assert!(aaaa_rtt < Duration::from_millis(210), "{aaaa_rtt:?}");
    assert!(a_rtt < Duration::from_millis(10), "{a_rtt:?}");
    assert_eq!(aaaa.answer_addresses(), vec!["::1".parse::<IpAddr>().unwrap()]);
    assert_eq!(a.answer_addresses(), vec!["127.0.0.1".parse::<IpAddr>().unwrap()]);

    let log = udp.log().entries();
    assert_eq!(log.len(), 2);
    assert_eq!((log[0].qtype, log[0].delay_ms, log[0].family), (rtype::AAAA, 200, Family::V4));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn held_answer_does_not_block_others() {
    let udp = start(ServerConfig::default()).await;
    let addr = udp.local_addrs()[1];
    let slow = tokio::spawn(ask(addr, "d500-a-slow.he-test.example.", rtype::A));
    tokio::time::sleep(Duration::from_millis(20)).await;
    let (_, fast) = ask(addr, "d0-a-fast.he-test.example.", rtype::A).await;
    assert!(fast < Duration::from_millis(50), "{fast:?}");
    let (_, slow) = slow.await.unwrap();
    assert!(slow >= Duration::from_millis(500));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn resolver_zone_delays_ipv6_transport_only() {
    let zones = synthesize_resolver_zones(
        &[300],
        &ZoneTemplate {
            parent: "res.he-test.example.".into(),
            campaign: "t".into(),
            ns_addresses: vec!["127.0.0.1".parse().unwrap(), "::1".parse().unwrap()],
            target_addresses: vec!["192.0.2.80".parse().unwrap()],
            glue: false,
            ttl: 0,
        },
    );
    let test_name = zones[0].test_name();
    let ns_name = zones[0].ns_names[0].clone();
    let udp = start(ServerConfig {
        zones,
        ..ServerConfig::default()
    })
    .await;
    let (v4, v6) = (udp.local_addrs()[0], udp.local_addrs()[1]);

    let (m, rtt) = ask(v4, &test_name, rtype::A).await;
    assert!(rtt < Duration::from_millis(50));
    assert_eq!(m.answer_addresses(), vec!["192.0.2.80".parse::<IpAddr>().unwrap()]);
    let (_, rtt) = ask(v6, &test_name, rtype::A).await;
    assert!(rtt >= Duration::from_millis(300), "{rtt:?}");
    // NS host lookups are never held.
    let (m, rtt) = ask(v6, &ns_name, rtype::AAAA).await;
    assert!(rtt < Duration::from_millis(50));
    assert_eq!(m.answer_addresses(), vec!["::1".parse::<IpAddr>().unwrap()]);
}
