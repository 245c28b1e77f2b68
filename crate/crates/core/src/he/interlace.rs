use super::candidate::EndpointCandidate;
use super::config::{HeConfig, Interleave, ProtocolFeature, Version};
use super::error::HeError;
use crate::net::Transport;

/// Orders candidates for connection racing.
///
/// With [`Interleave::Alternate`] the output starts with up to
/// `first_address_family_count` preferred-family candidates, then alternates
/// families while both have entries left, then appends the rest. With
/// [`Interleave::None`] it is the preferred block followed by the other
/// block. Relative order inside a family is kept, except that v3 first
/// sorts each family by protocol preference (ECH, then QUIC, then TCP by
/// default).
pub fn sort_and_interlace(
    candidates: &[EndpointCandidate],
    config: &HeConfig,
) -> Result<Vec<EndpointCandidate>, HeError> {
    if candidates.is_empty() {
        return Err(HeError::EmptyCandidateSet);
    }
    let (mut preferred, mut other): (Vec<_>, Vec<_>) = candidates
        .iter()
        .cloned()
        .partition(|c| c.family() == config.preferred_family);

    if config.version == Version::V3 {
        let rank = |c: &EndpointCandidate| protocol_rank(c, &config.protocol_preference);
        preferred.sort_by_key(rank);
        other.sort_by_key(rank);
    }

    let out = match config.interleave {
        Interleave::None => {
            preferred.extend(other);
            preferred
        }
        Interleave::Alternate => {
            let head = (config.first_address_family_count as usize).min(preferred.len());
            let mut preferred = preferred.into_iter();
            let mut other = other.into_iter();
            let mut out: Vec<_> = preferred.by_ref().take(head).collect();
            loop {
                match (other.next(), preferred.next()) {
                    (Some(o), Some(p)) => {
                        out.push(o);
                        out.push(p);
                    }
                    (Some(o), None) => {
                        out.push(o);
                        out.extend(other);
                        break;
                    }
                    (None, Some(p)) => {
                        out.push(p);
                        out.extend(preferred);
                        break;
                    }
                    (None, None) => break,
                }
            }
            out
        }
    };
    Ok(out)
}

fn protocol_rank(candidate: &EndpointCandidate, preference: &[ProtocolFeature]) -> usize {
    let position = |feature| {
        preference
            .iter()
            .position(|p| *p == feature)
            .unwrap_or(preference.len())
    };
    let mut rank = match candidate.transport() {
        Transport::Quic => position(ProtocolFeature::Quic),
        Transport::Tcp => position(ProtocolFeature::Tcp),
    };
    if candidate.ech_available() {
        rank = rank.min(position(ProtocolFeature::Ech));
    }
    rank
}

#[cfg(test)]
mod tests {
    use std::net::IpAddr;

    use super::*;
    use crate::net::{Family, RecordType};

    fn v6(i: u16) -> EndpointCandidate {
        EndpointCandidate::tcp(IpAddr::V6(format!("2001:db8::{i:x}").parse().unwrap()), 443)
    }

    fn v4(i: u8) -> EndpointCandidate {
        EndpointCandidate::tcp(IpAddr::V4([192, 0, 2, i].into()), 443)
    }

    #[test]
    fn alternates_after_one_preferred() {
        let input = vec![v6(1), v6(2), v4(1), v4(2)];
        let out = sort_and_interlace(&input, &HeConfig::v2()).unwrap();
        assert_eq!(out, vec![v6(1), v4(1), v6(2), v4(2)]);
    }

    #[test]
    fn single_candidate_is_identity() {
        for config in [HeConfig::v1(), HeConfig::v2(), HeConfig::v3()] {
            assert_eq!(sort_and_interlace(&[v6(1)], &config).unwrap(), vec![v6(1)]);
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(
            sort_and_interlace(&[], &HeConfig::v2()),
            Err(HeError::EmptyCandidateSet)
        );
    }

    #[test]
    fn fafc_two_with_ten_per_family() {
        let mut input: Vec<_> = (1..=10).map(v6).collect();
        input.extend((1..=10).map(v4));
        let config = HeConfig::v2().with_first_address_family_count(2);
        let out = sort_and_interlace(&input, &config).unwrap();
        // Frozen from enumerating the rule by hand.
        let mut expected = vec![v6(1), v6(2)];
        for i in 1..=8u8 {
            expected.push(v4(i));
            expected.push(v6(i as u16 + 2));
        }
        expected.push(v4(9));
        expected.push(v4(10));
        assert_eq!(out, expected);
    }

    #[test]
    fn no_interleave_is_block_order() {
        let input = vec![v4(1), v6(1), v4(2), v6(2)];
        let config = HeConfig::v2().with_interleave(Interleave::None);
        let out = sort_and_interlace(&input, &config).unwrap();
        assert_eq!(out, vec![v6(1), v6(2), v4(1), v4(2)]);
    }

    #[test]
    fn preferred_v4_flips_the_head() {
        let input = vec![v6(1), v6(2), v4(1)];
        let config = HeConfig::v2().with_preferred_family(Family::V4);
        let out = sort_and_interlace(&input, &config).unwrap();
        assert_eq!(out, vec![v4(1), v6(1), v6(2)]);
    }

    #[test]
    fn v3_orders_by_protocol_within_family() {
        let tcp = v6(1);
        let quic = v6(2).with_transport(Transport::Quic);
        let ech = EndpointCandidate::new(
            "2001:db8::3".parse().unwrap(),
            443,
            Transport::Tcp,
            true,
            RecordType::Https,
        )
        .unwrap();
        let v4_tcp = v4(1);
        let v4_quic = v4(2).with_transport(Transport::Quic);
        let input = vec![tcp.clone(), quic.clone(), ech.clone(), v4_tcp.clone(), v4_quic.clone()];

        let out = sort_and_interlace(&input, &HeConfig::v3()).unwrap();
        assert_eq!(out, vec![ech.clone(), v4_quic.clone(), quic.clone(), v4_tcp.clone(), tcp.clone()]);

        // v2 ignores protocol preference entirely.
        let out = sort_and_interlace(&input, &HeConfig::v2()).unwrap();
        assert_eq!(out, vec![tcp, v4_tcp, quic, v4_quic, ech]);
    }
}
