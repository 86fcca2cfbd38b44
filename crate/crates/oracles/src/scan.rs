//! Linear-scan oracles for binning, interval filtering and log queries.

use fmds_core::ntml::{NtmlEntry, NtmlEventType};
use fmds_core::schedule::ConstraintOverlay;

/// Counts per bin by scanning every time for every bin.
pub fn bin_counts(times: &[i64], start: i64, end: i64, width: i64) -> Vec<u32> {
    let mut out = Vec::new();
    let mut lo = start;
    while lo < end {
        out.push(times.iter().filter(|t| lo <= **t && **t < lo + width).count() as u32);
        lo += width;
    }
    out
}

/// Overlay ids whose active interval overlaps `[start, end)`, sorted by
/// (severity desc, start asc, id asc) using a selection sort.
pub fn summary_ids(overlays: &[ConstraintOverlay], start: i64, end: i64) -> Vec<String> {
    let mut picked: Vec<&ConstraintOverlay> = overlays
        .iter()
        .filter(|o| o.active_window.start.secs().max(start) < o.active_window.end.secs().min(end))
        .collect();
    let rank = |o: &ConstraintOverlay| (-(o.severity as i64), o.active_window.start.secs(), o.overlay_id.clone());
    let mut out = Vec::new();
    while !picked.is_empty() {
        let mut best = 0;
        for i in 1..picked.len() {
            if rank(picked[i]) < rank(picked[best]) {
                best = i;
            }
        }
        out.push(picked.remove(best).overlay_id.clone());
    }
    out
}

/// Sequences of entries matching every supplied criterion.
pub fn query_sequences(
    entries: &[NtmlEntry],
    range: Option<(i64, i64)>,
    types: Option<&[NtmlEventType]>,
    subject: Option<&str>,
) -> Vec<u64> {
    let mut out = Vec::new();
    for e in entries {
        let t = e.timestamp.secs();
        if let Some((lo, hi)) = range {
            if t < lo || t >= hi {
                continue;
            }
        }
        if let Some(types) = types {
            if !types.contains(&e.event_type) {
                continue;
            }
        }
        if let Some(s) = subject {
            if e.subject_id != s {
                continue;
            }
        }
        out.push(e.sequence);
    }
    out
}
