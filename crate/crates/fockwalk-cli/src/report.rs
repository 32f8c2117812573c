//! Machine-readable run summary.
//!
//! The report carries the complexity counters and output inventory, and
//! nothing timing-related: two runs of the same input must produce
//! byte-identical reports, which is also what the thread-count determinism
//! check diffs.

use serde::Serialize;

/// FNV-1a over the raw input bytes, as 16 hex digits. Stable, dependency-free
/// fingerprint to tie a report back to the circuit file it consumed.
pub fn input_digest(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeBreakdown {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diag: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub single: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub double: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub up_up: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub up_down: Option<u64>,
    pub total: u64,
}

impl AmplitudeBreakdown {
    pub fn total_only(total: u64) -> Self {
        AmplitudeBreakdown { diag: None, single: None, double: None, up_up: None, up_down: None, total }
    }

    pub fn from_counts(c: &fockwalk::store::OffsetCounts) -> Self {
        AmplitudeBreakdown {
            diag: Some(c.diag),
            single: Some(c.single),
            double: Some(c.double),
            up_up: Some(c.up_up),
            up_down: Some(c.up_down),
            total: c.total(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub input_digest: String,
    pub pivots_applied: u64,
    pub amplitudes_written: AmplitudeBreakdown,
    pub peak_buffer_bytes: u64,
    /// Reached probability for mass-bounded runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_reached: Option<f64>,
    /// File names written next to this report, in write order.
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }
}
