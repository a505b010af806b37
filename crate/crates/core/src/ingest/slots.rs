//! One-second slotting and nearest-reading lookup.

use super::logs::{ActivitySession, SensorRecord};
use crate::dataset::{LabelId, UserId};

pub const SLOT_MS: i64 = 1000;

/// Readings further than this from a slot start count as missing.
pub const DEFAULT_HORIZON_MS: i64 = 30_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub start: i64,
    pub label: LabelId,
    pub user: UserId,
}

/// Splits each session into whole one-second slots; a trailing partial
/// slot is dropped, so a session yields `floor((end - start) / 1000)` slots.
pub fn slot_sessions(sessions: &[ActivitySession]) -> Vec<Slot> {
    let mut out = Vec::new();
    for s in sessions {
        let mut t = s.start;
        while t + SLOT_MS <= s.end {
            out.push(Slot { start: t, label: s.label, user: s.user });
            t += SLOT_MS;
        }
    }
    out
}

/// The record closest in time to `t` within `horizon` ms. On equal distance
/// the earlier record wins (first in order among equal timestamps).
pub fn fetch_nearest(records: &[SensorRecord], t: i64, horizon: i64) -> Option<&SensorRecord> {
    let after = records.partition_point(|r| r.t < t);
    let next = records.get(after);
    let prev = after.checked_sub(1).map(|i| {
        let pt = records[i].t;
        &records[records[..=i].partition_point(|r| r.t < pt)]
    });
    let best = match (prev, next) {
        (Some(p), Some(n)) => {
            if t - p.t <= n.t - t {
                p
            } else {
                n
            }
        }
        (Some(p), None) => p,
        (None, Some(n)) => n,
        (None, None) => return None,
    };
    ((best.t - t).abs() <= horizon).then_some(best)
}
