use serde::{Deserialize, Serialize};

/// Highest interval bucket; `floor(log2(1 + delta))` is capped here.
pub const MAX_INTERVAL_BUCKET: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalMode {
    /// Relative position of the behavior (1 = most recent), capped at `max_len`.
    Position { max_len: usize },
    /// Log2-bucketed time interval in seconds to the target.
    Interval,
}

impl TemporalMode {
    /// Rows needed by a table indexed by this mode's buckets.
    pub fn bucket_count(&self) -> usize {
        match *self {
            TemporalMode::Position { max_len } => max_len + 1,
            TemporalMode::Interval => MAX_INTERVAL_BUCKET + 1,
        }
    }
}

/// Maps a position or a non-negative interval to a bucket id.
/// Negative intervals are clamped to zero.
pub fn temporal_bucket(value: i64, mode: TemporalMode) -> usize {
    let v = value.max(0) as u64;
    match mode {
        TemporalMode::Position { max_len } => (v as usize).min(max_len),
        TemporalMode::Interval => {
            let b = 63 - (v.saturating_add(1)).leading_zeros() as usize;
            b.min(MAX_INTERVAL_BUCKET)
        }
    }
}
