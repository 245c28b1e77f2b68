use serde::{Deserialize, Serialize};

use crate::analysis::Verdict;
use crate::plan::TargetKind;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Full,
    Partial,
    Absent,
    NotMeasured,
}

impl Mark {
    pub fn glyph(self) -> char {
        match self {
            Mark::Full => '●',
            Mark::Partial => '◐',
            Mark::Absent => '○',
            Mark::NotMeasured => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub prefers_ipv6: Mark,
    pub cad_impl: Mark,
    pub rd_impl: Mark,
    pub address_selection: Mark,
    pub consistency: Mark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub client: String,
    pub row: FeatureRow,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl Report {
    pub fn to_text(&self) -> String {
        let r = &self.row;
        let mut out = String::new();
        out.push_str("client               | v6 pref | CAD | RD | addr sel | consistency\n");
        out.push_str(&format!(
            "{:<20} |    {}    |  {}  | {}  |    {}     |      {}\n",
            self.client,
            r.prefers_ipv6.glyph(),
            r.cad_impl.glyph(),
            r.rd_impl.glyph(),
            r.address_selection.glyph(),
            r.consistency.glyph(),
        ));
        for note in &self.notes {
            out.push_str(&format!("  - {note}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn flag(measured: bool, value: bool) -> Mark {
    match (measured, value) {
        (false, _) => Mark::NotMeasured,
        (true, true) => Mark::Full,
        (true, false) => Mark::Absent,
    }
}

/// One feature-matrix row plus notes.
///
/// Address selection is full when several addresses of both families were
/// tried, partial when only one family got more than one, absent when a
/// family was never tried.
pub fn render_report(client: &str, verdict: &Verdict) -> Report {
    let m = |k| verdict.measured.contains(&k);
    let mut notes = Vec::new();
    let pref_measured = m(TargetKind::Cad) || m(TargetKind::Rd);
    let rd_mark = if verdict.waits_for_a {
        notes.push("waits for the A answer before connecting; RD not observed".to_string());
        Mark::Absent
    } else {
        flag(m(TargetKind::Rd), verdict.rd_impl)
    };
    let address_selection = if !m(TargetKind::AddressSelection) {
        Mark::NotMeasured
    } else if verdict.v4_addrs_used == 0 || verdict.v6_addrs_used == 0 {
        Mark::Absent
    } else if verdict.v4_addrs_used > 1 && verdict.v6_addrs_used > 1 {
        Mark::Full
    } else {
        Mark::Partial
    };
    let consistency = match &verdict.consistency {
        None => Mark::NotMeasured,
        Some(c) if c.total_repetitions == 0 => Mark::NotMeasured,
        Some(c) if c.inconsistent_repetitions == 0 => Mark::Full,
        Some(c) if c.inconsistent_repetitions < c.total_repetitions => Mark::Partial,
        Some(_) => Mark::Absent,
    };
    if let Some(cad) = verdict.cad_estimate_ms {
        notes.push(format!("CAD {cad} ms"));
    }
    if let Some(i) = verdict.cad_interval {
        notes.push(format!("CAD in {i}"));
    }
    if let Some(rd) = verdict.rd_estimate_ms {
        notes.push(format!("RD {rd} ms"));
    }
    if m(TargetKind::Cad) && !verdict.cad_impl {
        notes.push("no IPv4 fallback observed".to_string());
    }
    if verdict.dynamic {
        notes.push("switch point not stable across the fine pass".to_string());
    }
    if m(TargetKind::AddressSelection) {
        notes.push(format!(
            "addresses tried: {} IPv6, {} IPv4",
            verdict.v6_addrs_used, verdict.v4_addrs_used
        ));
    }
    Report {
        schema_version: REPORT_SCHEMA_VERSION,
        client: client.to_string(),
        row: FeatureRow {
            prefers_ipv6: flag(pref_measured, verdict.prefers_ipv6),
            cad_impl: flag(m(TargetKind::Cad), verdict.cad_impl),
            rd_impl: rd_mark,
            address_selection,
            consistency,
        },
        notes,
        verdict: verdict.clone(),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use helab_core::Family;
    use helab_labd::ConsistencyScore;

    use super::*;

    fn full() -> Verdict {
        Verdict {
            measured: BTreeSet::from([TargetKind::Cad, TargetKind::Rd, TargetKind::RdADelay, TargetKind::AddressSelection]),
            prefers_ipv6: true,
            cad_impl: true,
            cad_estimate_ms: Some(250.0),
            rd_impl: true,
            rd_estimate_ms: Some(50.0),
            aaaa_first: true,
            v4_addrs_used: 10,
            v6_addrs_used: 10,
            address_sequence: vec![Family::V6, Family::V6, Family::V4],
            consistency: Some(ConsistencyScore { tiers: vec![], inconsistent_repetitions: 0, total_repetitions: 10 }),
            ..Verdict::default()
        }
    }

    #[test]
    fn full_feature_row() {
        let r = render_report("demo", &full());
        assert!(r.to_text().contains("●    |  ●  | ●  |    ●     |      ●"), "{}", r.to_text());
    }

    #[test]
    fn waits_for_a_marks_rd_absent() {
        let v = Verdict { waits_for_a: true, ..full() };
        let r = render_report("demo", &v);
        assert_eq!(r.row.rd_impl, Mark::Absent);
        assert!(r.notes.iter().any(|n| n.contains("waits for the A answer")));
    }

    #[test]
    fn json_round_trip() {
        let r = render_report("demo", &full());
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unmeasured_columns() {
        let v = Verdict { measured: BTreeSet::from([TargetKind::AddressSelection]), v4_addrs_used: 1, v6_addrs_used: 3, ..Verdict::default() };
        let r = render_report("x", &v);
        assert_eq!(r.row.cad_impl, Mark::NotMeasured);
        assert_eq!(r.row.address_selection, Mark::Partial);
    }
}
