//! Mapping between HTTPS rdata and the dialer's [`ServiceBinding`].

use std::net::{Ipv4Addr, Ipv6Addr};

use helab_core::he::ServiceBinding;

use crate::wire::{rtype, Name, Svcb, SvcParam, WireError};

pub const KEY_ALPN: u16 = 1;
pub const KEY_PORT: u16 = 3;
pub const KEY_IPV4HINT: u16 = 4;
pub const KEY_ECH: u16 = 5;
pub const KEY_IPV6HINT: u16 = 6;

/// Parameters come out in ascending key order. The ECH value is an empty
/// placeholder config list; only its presence matters to the dialer.
pub fn to_rdata(binding: &ServiceBinding) -> Result<Svcb, WireError> {
    let target = Name::parse(if binding.target.is_empty() { "." } else { &binding.target })?;
    let mut params = Vec::new();
    if !binding.alpn.is_empty() {
        let mut value = Vec::new();
        for id in &binding.alpn {
            let bytes = id.as_bytes();
            if bytes.is_empty() || bytes.len() > 255 {
                return Err(WireError::BadRdata(rtype::HTTPS));
            }
            value.push(bytes.len() as u8);
            value.extend_from_slice(bytes);
        }
        params.push(SvcParam { key: KEY_ALPN, value });
    }
    if let Some(port) = binding.port {
        params.push(SvcParam {
            key: KEY_PORT,
            value: port.to_be_bytes().to_vec(),
        });
    }
    if !binding.ipv4_hints.is_empty() {
        params.push(SvcParam {
            key: KEY_IPV4HINT,
            value: binding.ipv4_hints.iter().flat_map(|a| a.octets()).collect(),
        });
    }
    if binding.ech {
        params.push(SvcParam {
            key: KEY_ECH,
            value: vec![0, 0],
        });
    }
    if !binding.ipv6_hints.is_empty() {
        params.push(SvcParam {
            key: KEY_IPV6HINT,
            value: binding.ipv6_hints.iter().flat_map(|a| a.octets()).collect(),
        });
    }
    Ok(Svcb {
        priority: binding.priority,
        target,
        params,
    })
}

/// Unknown keys are skipped.
pub fn from_rdata(svcb: &Svcb) -> Result<ServiceBinding, WireError> {
    let bad = || WireError::BadRdata(rtype::HTTPS);
    let mut binding = ServiceBinding {
        priority: svcb.priority,
        target: svcb.target.to_string(),
        ..ServiceBinding::default()
    };
    for p in &svcb.params {
        match p.key {
            KEY_ALPN => {
                let mut rest = p.value.as_slice();
                while let Some((&len, tail)) = rest.split_first() {
                    let (id, tail) = tail.split_at_checked(len as usize).ok_or_else(bad)?;
                    binding.alpn.push(String::from_utf8_lossy(id).into_owned());
                    rest = tail;
                }
            }
            KEY_PORT => {
                let b: [u8; 2] = p.value.as_slice().try_into().map_err(|_| bad())?;
                binding.port = Some(u16::from_be_bytes(b));
            }
            KEY_IPV4HINT => {
                if p.value.len() % 4 != 0 {
                    return Err(bad());
                }
                binding.ipv4_hints = p
                    .value
                    .chunks_exact(4)
                    .map(|c| Ipv4Addr::new(c[0], c[1], c[2], c[3]))
                    .collect();
            }
            KEY_ECH => binding.ech = true,
            KEY_IPV6HINT => {
                if p.value.len() % 16 != 0 {
                    return Err(bad());
                }
                binding.ipv6_hints = p
                    .value
                    .chunks_exact(16)
                    .map(|c| Ipv6Addr::from(<[u8; 16]>::try_from(c).expect("16 bytes")))
                    .collect();
            }
            _ => {}
        }
    }
    Ok(binding)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binding_round_trips() {
        let b = ServiceBinding {
            priority: 1,
            target: ".".into(),
            port: Some(8443),
            alpn: vec!["h3".into(), "h2".into()],
            ech: true,
            ipv4_hints: vec!["192.0.2.1".parse().unwrap()],
            ipv6_hints: vec!["2001:db8::1".parse().unwrap()],
        };
        let rdata = to_rdata(&b).unwrap();
        let keys: Vec<_> = rdata.params.iter().map(|p| p.key).collect();
        assert_eq!(keys, vec![1, 3, 4, 5, 6]);
        assert_eq!(from_rdata(&rdata).unwrap(), b);
    }

    #[test]
    fn truncated_alpn_rejected() {
        let s = Svcb {
            priority: 1,
            target: Name::root(),
            params: vec![SvcParam { key: KEY_ALPN, value: vec![5, b'h'] }],
        };
        assert!(from_rdata(&s).is_err());
    }
}
