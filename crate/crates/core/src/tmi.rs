//! Airspace Flow Programs: ration-by-schedule slot allocation, Data Cards,
//! program lifecycle types and card comparison.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{FmdsError, Result};
use crate::geometry::{
    aligned_span, capture_flights_within, DemandHistogram, Designation, FlowArea, DEFAULT_BIN_WIDTH,
};
use crate::schedule::{ExemptCategory, Flight};
use crate::time::{TimeWindow, Timestamp};
use crate::trajectory::DepartureBasis;

pub const MAX_RATE: u32 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Eligibility {
    Controlled,
    Exempt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub flight_id: String,
    pub original_entry: Timestamp,
    pub assigned_slot: Timestamp,
    pub delay_seconds: i64,
    pub edct: Timestamp,
    pub eligibility: Eligibility,
    /// Grid slot this flight uses up. Equals `assigned_slot` for controlled
    /// flights; exempt flights may consume one without being moved to it.
    pub consumed_slot: Option<Timestamp>,
}

/// Inputs of one modeled program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AfpParameters {
    pub area_id: String,
    pub rate: u32,
    pub window: TimeWindow,
    #[serde(default)]
    pub exempt_categories: BTreeSet<ExemptCategory>,
}

impl AfpParameters {
    pub fn validate_for(&self, area: &FlowArea) -> Result<()> {
        if area.designation != Designation::Fca {
            return Err(FmdsError::NotAnFca(area.area_id.clone()));
        }
        check_rate(self.rate)?;
        self.window.validate()
    }
}

pub fn check_rate(rate: u32) -> Result<()> {
    if (1..=MAX_RATE).contains(&rate) {
        Ok(())
    } else {
        Err(FmdsError::InvalidRate(rate as i64))
    }
}

/// Seconds between consecutive slots, `floor(3600 / rate)`.
pub fn slot_spacing(rate: u32) -> i64 {
    3600 / rate as i64
}

/// A captured flight awaiting a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbsCandidate {
    pub flight_id: String,
    pub original_entry: Timestamp,
    pub scheduled_departure: Timestamp,
    pub exempt: bool,
    /// Earliest admissible slot; normally `original_entry`.
    pub not_before: Timestamp,
}

/// Consumed slot times. Any two consumed slots are at least `spacing`
/// seconds apart.
struct Slots {
    spacing: i64,
    consumed: BTreeSet<Timestamp>,
}

impl Slots {
    fn conflict(&self, t: Timestamp) -> Option<Timestamp> {
        self.consumed
            .range((t - (self.spacing - 1))..=(t + (self.spacing - 1)))
            .next_back()
            .copied()
    }

    fn is_free(&self, t: Timestamp) -> bool {
        self.conflict(t).is_none()
    }

    /// Earliest free time at or after `t`.
    fn earliest_from(&self, mut t: Timestamp) -> Timestamp {
        while let Some(c) = self.conflict(t) {
            t = c + self.spacing;
        }
        t
    }
}

/// Ration-by-schedule over `candidates` at `rate` per hour.
///
/// `fixed` assignments (flights already departed) are kept verbatim and
/// their consumed slots stay taken. Exempt candidates keep their entry time;
/// in `(original_entry, flight_id)` order each consumes its entry as a slot
/// unless that lies within one spacing of a slot already consumed. Then
/// controlled candidates, in the same order, take the earliest second at or
/// after `not_before` and after the previous controlled slot that is at
/// least one spacing from every consumed slot. Slots past the program
/// window are allowed. Output is ordered by `(original_entry, flight_id)`.
pub fn ration_by_schedule(candidates: &[RbsCandidate], rate: u32, fixed: &[SlotAssignment]) -> Vec<SlotAssignment> {
    let mut slots = Slots {
        spacing: slot_spacing(rate),
        consumed: fixed.iter().filter_map(|f| f.consumed_slot).collect(),
    };
    let mut order: Vec<&RbsCandidate> = candidates.iter().collect();
    order.sort_by(|a, b| {
        a.original_entry
            .cmp(&b.original_entry)
            .then_with(|| a.flight_id.cmp(&b.flight_id))
    });

    let mut out: Vec<SlotAssignment> = fixed.to_vec();
    for c in order.iter().filter(|c| c.exempt) {
        let consumed = slots.is_free(c.original_entry).then_some(c.original_entry);
        if let Some(t) = consumed {
            slots.consumed.insert(t);
        }
        out.push(SlotAssignment {
            flight_id: c.flight_id.clone(),
            original_entry: c.original_entry,
            assigned_slot: c.original_entry,
            delay_seconds: 0,
            edct: c.scheduled_departure,
            eligibility: Eligibility::Exempt,
            consumed_slot: consumed,
        });
    }
    let mut previous: Option<Timestamp> = None;
    for c in order.iter().filter(|c| !c.exempt) {
        let mut lower = c.not_before.max(c.original_entry);
        if let Some(p) = previous {
            lower = lower.max(p + 1);
        }
        let slot = slots.earliest_from(lower);
        slots.consumed.insert(slot);
        previous = Some(slot);
        let delay = slot - c.original_entry;
        out.push(SlotAssignment {
            flight_id: c.flight_id.clone(),
            original_entry: c.original_entry,
            assigned_slot: slot,
            delay_seconds: delay,
            edct: c.scheduled_departure + delay,
            eligibility: Eligibility::Controlled,
            consumed_slot: Some(slot),
        });
    }
    out.sort_by(|a, b| {
        a.original_entry
            .cmp(&b.original_entry)
            .then_with(|| a.flight_id.cmp(&b.flight_id))
    });
    out
}

/// Captures against `params.window` on scheduled trajectories and runs
/// ration-by-schedule.
///
/// With `now` set, prior assignments whose EDCT is at or before `now` are
/// departed and kept; newly captured flights already past their scheduled
/// departure are treated as exempt; and undeparted flights cannot receive an
/// EDCT earlier than `now`.
pub fn plan_assignments(
    area: &FlowArea,
    params: &AfpParameters,
    flights: &[Flight],
    prior: &[SlotAssignment],
    now: Option<Timestamp>,
) -> Vec<SlotAssignment> {
    let fixed: Vec<SlotAssignment> = match now {
        Some(now) => prior.iter().filter(|a| a.edct <= now).cloned().collect(),
        None => Vec::new(),
    };
    let fixed_ids: HashSet<&str> = fixed.iter().map(|a| a.flight_id.as_str()).collect();
    let prior_ids: HashSet<&str> = prior.iter().map(|a| a.flight_id.as_str()).collect();
    let by_id: HashMap<&str, &Flight> = flights.iter().map(|f| (f.flight_id.as_str(), f)).collect();

    let candidates: Vec<RbsCandidate> = capture_flights_within(area, flights, params.window, DepartureBasis::Scheduled)
        .into_iter()
        .filter(|c| !fixed_ids.contains(c.flight_id.as_str()))
        .map(|c| {
            let flight = by_id[c.flight_id.as_str()];
            let airborne_uncontrolled =
                now.is_some_and(|now| !prior_ids.contains(c.flight_id.as_str()) && flight.scheduled_departure <= now);
            let hold = now.map_or(0, |now| (now - flight.scheduled_departure).max(0));
            RbsCandidate {
                original_entry: c.entry_time,
                scheduled_departure: flight.scheduled_departure,
                exempt: airborne_uncontrolled || params.exempt_categories.contains(&flight.exempt_category),
                not_before: c.entry_time + hold,
                flight_id: c.flight_id,
            }
        })
        .collect();
    ration_by_schedule(&candidates, params.rate, &fixed)
}

/// Side-effect-free modeling of a proposed program.
pub fn model_afp(
    area: &FlowArea,
    params: &AfpParameters,
    flights: &[Flight],
) -> Result<(Vec<SlotAssignment>, DataCard)> {
    params.validate_for(area)?;
    let assignments = plan_assignments(area, params, flights, &[], None);
    let card = DataCard::summarize(None, params, assignments.clone())?;
    Ok((assignments, card))
}

/// Proposal summary: delay metrics plus post-assignment demand against
/// capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCard {
    pub card_id: String,
    pub afp_id: Option<String>,
    pub area_id: String,
    pub rate: u32,
    pub window: TimeWindow,
    pub exempt_categories: BTreeSet<ExemptCategory>,
    pub flights_captured: u32,
    pub flights_delayed: u32,
    pub flights_exempt: u32,
    pub average_delay_seconds: f64,
    pub max_delay_seconds: i64,
    pub total_delay_seconds: i64,
    pub histogram: DemandHistogram,
    pub assignments: Vec<SlotAssignment>,
}

impl DataCard {
    pub fn summarize(afp_id: Option<&str>, params: &AfpParameters, assignments: Vec<SlotAssignment>) -> Result<Self> {
        let controlled: Vec<&SlotAssignment> = assignments
            .iter()
            .filter(|a| a.eligibility == Eligibility::Controlled)
            .collect();
        let total: i64 = controlled.iter().map(|a| a.delay_seconds).sum();
        let max = controlled.iter().map(|a| a.delay_seconds).max().unwrap_or(0);
        let average = if controlled.is_empty() {
            0.0
        } else {
            total as f64 / controlled.len() as f64
        };

        let last = assignments
            .iter()
            .map(|a| a.assigned_slot)
            .max()
            .unwrap_or(params.window.start);
        let cover = TimeWindow {
            start: params.window.start,
            end: params.window.end.max(last + 1),
        };
        let histogram = DemandHistogram::from_times(
            &params.area_id,
            assignments.iter().map(|a| a.assigned_slot),
            aligned_span(cover, DEFAULT_BIN_WIDTH),
            DEFAULT_BIN_WIDTH,
            Some(params.rate),
        )?;

        let mut card = DataCard {
            card_id: String::new(),
            afp_id: afp_id.map(str::to_string),
            area_id: params.area_id.clone(),
            rate: params.rate,
            window: params.window,
            exempt_categories: params.exempt_categories.clone(),
            flights_captured: assignments.len() as u32,
            flights_delayed: controlled.iter().filter(|a| a.delay_seconds > 0).count() as u32,
            flights_exempt: (assignments.len() - controlled.len()) as u32,
            average_delay_seconds: average,
            max_delay_seconds: max,
            total_delay_seconds: total,
            histogram,
            assignments,
        };
        card.card_id = card.content_id();
        Ok(card)
    }

    fn content_id(&self) -> String {
        let mut hasher = FnvHasher::default();
        let content = serde_json::to_vec(&(
            &self.afp_id,
            &self.area_id,
            self.rate,
            &self.window,
            &self.exempt_categories,
            &self.assignments,
        ))
        .expect("card content serializes");
        hasher.write(&content);
        format!("card-{:016x}", hasher.finish())
    }

    pub fn controlled_count(&self) -> u32 {
        self.flights_captured - self.flights_exempt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardMetrics {
    pub flights_captured: i64,
    pub flights_delayed: i64,
    pub flights_exempt: i64,
    pub average_delay_seconds: f64,
    pub max_delay_seconds: i64,
    pub total_delay_seconds: i64,
}

impl CardMetrics {
    fn of(card: &DataCard) -> Self {
        CardMetrics {
            flights_captured: card.flights_captured as i64,
            flights_delayed: card.flights_delayed as i64,
            flights_exempt: card.flights_exempt as i64,
            average_delay_seconds: card.average_delay_seconds,
            max_delay_seconds: card.max_delay_seconds,
            total_delay_seconds: card.total_delay_seconds,
        }
    }

    fn minus(&self, base: &CardMetrics) -> CardMetrics {
        CardMetrics {
            flights_captured: self.flights_captured - base.flights_captured,
            flights_delayed: self.flights_delayed - base.flights_delayed,
            flights_exempt: self.flights_exempt - base.flights_exempt,
            average_delay_seconds: self.average_delay_seconds - base.average_delay_seconds,
            max_delay_seconds: self.max_delay_seconds - base.max_delay_seconds,
            total_delay_seconds: self.total_delay_seconds - base.total_delay_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub card_id: String,
    pub afp_id: Option<String>,
    pub area_id: String,
    pub rate: u32,
    pub metrics: CardMetrics,
    /// Metrics minus those of the first row.
    pub delta: CardMetrics,
}

/// Orders cards by total delay, then delayed count, then card id, and
/// reports each card's metrics relative to the best one.
pub fn compare_cards(cards: &[DataCard]) -> Result<Vec<ComparisonRow>> {
    let mut sorted: Vec<&DataCard> = cards.iter().collect();
    sorted.sort_by(|a, b| {
        a.total_delay_seconds
            .cmp(&b.total_delay_seconds)
            .then_with(|| a.flights_delayed.cmp(&b.flights_delayed))
            .then_with(|| a.card_id.cmp(&b.card_id))
    });
    let base = CardMetrics::of(sorted.first().ok_or(FmdsError::EmptyInput)?);
    Ok(sorted
        .into_iter()
        .map(|card| {
            let metrics = CardMetrics::of(card);
            ComparisonRow {
                card_id: card.card_id.clone(),
                afp_id: card.afp_id.clone(),
                area_id: card.area_id.clone(),
                rate: card.rate,
                delta: metrics.minus(&base),
                metrics,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AfpStatus {
    Proposed,
    Scheduled,
    Active,
    Purged,
}

impl AfpStatus {
    pub fn can_become(self, next: AfpStatus) -> bool {
        use AfpStatus::*;
        matches!(
            (self, next),
            (Proposed, Scheduled) | (Proposed, Active) | (Scheduled, Active) | (Proposed | Scheduled | Active, Purged)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AfpStatus::Proposed => "PROPOSED",
            AfpStatus::Scheduled => "SCHEDULED",
            AfpStatus::Active => "ACTIVE",
            AfpStatus::Purged => "PURGED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub revision_index: u32,
    pub revised_at: Timestamp,
    pub new_rate: Option<u32>,
    pub new_window: Option<TimeWindow>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfpProgram {
    pub afp_id: String,
    pub area_id: String,
    pub rate: u32,
    pub program_window: TimeWindow,
    pub exempt_categories: BTreeSet<ExemptCategory>,
    pub status: AfpStatus,
    pub revisions: Vec<Revision>,
    pub created_by: String,
    pub created_at: Timestamp,
    pub activated_at: Option<Timestamp>,
    pub purged_at: Option<Timestamp>,
    pub assignments: Vec<SlotAssignment>,
    pub card_id: String,
}

impl AfpProgram {
    pub fn parameters(&self) -> AfpParameters {
        AfpParameters {
            area_id: self.area_id.clone(),
            rate: self.rate,
            window: self.program_window,
            exempt_categories: self.exempt_categories.clone(),
        }
    }

    /// Programs that hold slots on their FCA.
    pub fn is_in_effect(&self) -> bool {
        matches!(self.status, AfpStatus::Scheduled | AfpStatus::Active)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(s: i64, e: i64) -> TimeWindow {
        TimeWindow::new(Timestamp(s), Timestamp(e)).unwrap()
    }

    fn candidate(id: &str, entry: i64, exempt: bool) -> RbsCandidate {
        RbsCandidate {
            flight_id: id.into(),
            original_entry: Timestamp(entry),
            scheduled_departure: Timestamp(entry - 1000),
            exempt,
            not_before: Timestamp(entry),
        }
    }

    #[test]
    fn three_flights_rate_sixty() {
        let cs = [
            candidate("A", 0, false),
            candidate("B", 10, false),
            candidate("C", 20, false),
        ];
        let out = ration_by_schedule(&cs, 60, &[]);
        let slots: Vec<_> = out.iter().map(|a| a.assigned_slot.secs()).collect();
        let delays: Vec<_> = out.iter().map(|a| a.delay_seconds).collect();
        assert_eq!(slots, [0, 60, 120]);
        assert_eq!(delays, [0, 50, 100]);
        assert_eq!(out[1].edct, Timestamp(10 - 1000 + 50));
    }

    #[test]
    fn exempt_flight_consumes_slot_without_delay() {
        let cs = [candidate("A", 0, true), candidate("B", 10, false)];
        let out = ration_by_schedule(&cs, 60, &[]);
        assert_eq!(out[0].delay_seconds, 0);
        assert_eq!(out[0].consumed_slot, Some(Timestamp(0)));
        assert_eq!(out[1].assigned_slot, Timestamp(60));
    }

    #[test]
    fn slots_continue_past_window() {
        let cs = [
            candidate("A", 0, false),
            candidate("B", 1, false),
            candidate("C", 2, false),
        ];
        let out = ration_by_schedule(&cs, 2, &[]);
        let slots: Vec<_> = out.iter().map(|a| a.assigned_slot.secs()).collect();
        assert_eq!(slots, [0, 1800, 3600]);
    }

    #[test]
    fn unspaced_entries_keep_their_times() {
        let cs = [
            candidate("A", 5, false),
            candidate("B", 700, false),
            candidate("C", 1333, false),
        ];
        let out = ration_by_schedule(&cs, 6, &[]);
        assert!(out.iter().all(|a| a.delay_seconds == 0));
    }

    #[test]
    fn exempt_conflicts() {
        // Two exempt flights 10 s apart: only the first consumes a slot;
        // the controlled flight keeps clear of it.
        let cs = [
            candidate("X", 0, true),
            candidate("Y", 10, true),
            candidate("A", 20, false),
        ];
        let out = ration_by_schedule(&cs, 60, &[]);
        assert_eq!(out[0].consumed_slot, Some(Timestamp(0)));
        assert_eq!(out[1].consumed_slot, None);
        assert_eq!(out[1].delay_seconds, 0);
        assert_eq!(out[2].assigned_slot, Timestamp(60));
        // A controlled flight may slot in ahead of a later exempt one.
        let cs = [candidate("A", 0, false), candidate("X", 200, true)];
        let out = ration_by_schedule(&cs, 60, &[]);
        assert_eq!(out[0].assigned_slot, Timestamp(0));
    }

    #[test]
    fn rate_bounds() {
        assert!(check_rate(1).is_ok());
        assert!(check_rate(3600).is_ok());
        assert_eq!(check_rate(0), Err(FmdsError::InvalidRate(0)));
        assert_eq!(check_rate(3601).unwrap_err().code(), "INVALID_RATE");
    }

    #[test]
    fn lifecycle_transitions() {
        use AfpStatus::*;
        assert!(Proposed.can_become(Scheduled));
        assert!(Proposed.can_become(Active));
        assert!(Scheduled.can_become(Active));
        assert!(Active.can_become(Purged));
        assert!(!Active.can_become(Scheduled));
        assert!(!Purged.can_become(Active));
        assert!(!Purged.can_become(Purged));
    }

    fn card(total: i64, delayed: u32, id: &str) -> DataCard {
        let params = AfpParameters {
            area_id: "a".into(),
            rate: 60,
            window: window(0, 3600),
            exempt_categories: BTreeSet::new(),
        };
        let mut c = DataCard::summarize(None, &params, vec![]).unwrap();
        c.total_delay_seconds = total;
        c.flights_delayed = delayed;
        c.card_id = id.into();
        c
    }

    #[test]
    fn comparison_orders_and_deltas() {
        assert_eq!(compare_cards(&[]), Err(FmdsError::EmptyInput));
        let single = compare_cards(&[card(150, 2, "x")]).unwrap();
        assert_eq!(single[0].delta.total_delay_seconds, 0);
        let a = card(150, 2, "a");
        let b = card(90, 1, "b");
        let table = compare_cards(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(table[0].card_id, "b");
        assert_eq!(table[1].delta.total_delay_seconds, 60);
        assert_eq!(table[0].delta.total_delay_seconds, 0);
        assert_eq!(compare_cards(&[b, a]).unwrap(), table);
    }

    #[test]
    fn empty_card_metrics() {
        let c = card(0, 0, "c");
        assert_eq!(c.average_delay_seconds, 0.0);
        assert_eq!(c.flights_captured, 0);
        assert_eq!(c.histogram.capacity_per_bin, Some(15.0));
        assert_eq!(c.histogram.bins.len(), 4);
    }
}
