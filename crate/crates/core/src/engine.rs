//! The stateful FMDS engine. All mutations enter through [`Engine::execute`]
//! as [`Command`]s; each successful command returns an [`Outcome`] and the
//! sequenced [`StreamEvent`]s it produced. The engine is deterministic: the
//! same scenario and command sequence reproduce the same state, NTML and
//! events, which is what journal-based recovery relies on.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::clock::{phase_at, phase_changes, positions, ClockState, FlightPosition, Phase};
use crate::collab::{Collaboration, Meeting, MeetingSource, Message, MessageBody, Thread};
use crate::error::{FmdsError, Result};
use crate::geometry::{
    aligned_span, capture_flights, capture_flights_within, demand_histogram, AreaDefinition, DemandHistogram, FlowArea,
    DEFAULT_BIN_WIDTH,
};
use crate::ntml::{NewEntry, NtmlEntry, NtmlEventType, NtmlFilter, NtmlLog, StatusMap, SubjectStatus};
use crate::schedule::{constraint_summary, sort_flights, ConstraintOverlay, ExemptCategory, Flight};
use crate::time::{TimeWindow, Timestamp};
use crate::tmi::{
    check_rate, compare_cards, model_afp, plan_assignments, AfpParameters, AfpProgram, AfpStatus, ComparisonRow,
    DataCard, Eligibility, Revision, SlotAssignment,
};
use crate::trajectory::DepartureBasis;

/// Area creation, optionally modeling an AFP on the new FCA in the same step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRequest {
    #[serde(flatten)]
    pub definition: AreaDefinition,
    #[serde(default)]
    pub rate: Option<u32>,
    #[serde(default)]
    pub exempt_categories: BTreeSet<ExemptCategory>,
    /// Defaults to the area's active window.
    #[serde(default)]
    pub program_window: Option<TimeWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    CreateArea {
        request: AreaRequest,
    },
    /// Models a proposal and registers its card; no program or flight state
    /// changes and nothing is logged.
    ModelAfp {
        params: AfpParameters,
    },
    ProposeAfp {
        params: AfpParameters,
    },
    ImplementAfp {
        params: AfpParameters,
        #[serde(default)]
        schedule_only: bool,
        #[serde(default)]
        proposal_id: Option<String>,
    },
    ReviseAfp {
        afp_id: String,
        #[serde(default)]
        new_rate: Option<u32>,
        #[serde(default)]
        new_window: Option<TimeWindow>,
        #[serde(default)]
        reason: String,
    },
    PurgeAfp {
        afp_id: String,
    },
    AddNote {
        subject_id: String,
        text: String,
    },
    CreateThread {
        topic: String,
        members: BTreeSet<String>,
    },
    PostMessage {
        thread_id: String,
        body: MessageBody,
    },
    SetEmphasis {
        thread_id: String,
        emphasized: bool,
    },
    SetMute {
        thread_id: String,
        member: String,
        muted: bool,
    },
    SetVoicePresence {
        thread_id: String,
        count: u32,
    },
    ScheduleMeeting {
        thread_id: String,
        scheduled_for: Timestamp,
        title: String,
        created_via: MeetingSource,
    },
    Advance {
        to: Timestamp,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CreateArea { .. } => "create_area",
            Command::ModelAfp { .. } => "model_afp",
            Command::ProposeAfp { .. } => "propose_afp",
            Command::ImplementAfp { .. } => "implement_afp",
            Command::ReviseAfp { .. } => "revise_afp",
            Command::PurgeAfp { .. } => "purge_afp",
            Command::AddNote { .. } => "add_note",
            Command::CreateThread { .. } => "create_thread",
            Command::PostMessage { .. } => "post_message",
            Command::SetEmphasis { .. } => "set_emphasis",
            Command::SetMute { .. } => "set_mute",
            Command::SetVoicePresence { .. } => "set_voice_presence",
            Command::ScheduleMeeting { .. } => "schedule_meeting",
            Command::Advance { .. } => "advance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modeled {
    pub assignments: Vec<SlotAssignment>,
    pub card: DataCard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    AreaCreated { area: FlowArea, model: Option<Modeled> },
    Modeled(Modeled),
    Afp { program: AfpProgram, card: DataCard },
    Note { entry: NtmlEntry },
    Thread { thread: Thread },
    Message { message: Message },
    Meeting { meeting: Meeting },
    Advanced { now: Timestamp, events: Vec<StreamEvent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Ntml {
        entry: NtmlEntry,
    },
    FlightPhase {
        flight_id: String,
        phase: Phase,
    },
    CardStored {
        card_id: String,
        area_id: String,
    },
    ThreadCreated {
        thread: Thread,
    },
    MessagePosted {
        message: Message,
        /// Members whose notifications for this thread are muted.
        muted_members: BTreeSet<String>,
    },
    EmphasisChanged {
        thread_id: String,
        emphasized: bool,
    },
    MuteChanged {
        thread_id: String,
        member: String,
        muted: bool,
    },
    VoicePresence {
        thread_id: String,
        count: u32,
    },
    MeetingScheduled {
        meeting: Meeting,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub seq: u64,
    pub at: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceBin {
    pub bin_start: Timestamp,
    pub actual: u32,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceRecord {
    pub afp_id: String,
    pub status: AfpStatus,
    pub rate: u32,
    /// Entries strictly before this instant are counted.
    pub as_of: Timestamp,
    pub capacity_per_bin: f64,
    pub bins: Vec<ComplianceBin>,
    pub total_actual: u32,
    pub total_planned: u32,
}

/// Engine state. Cloning yields an independent snapshot.
#[derive(Debug, Clone)]
pub struct Engine {
    clock: ClockState,
    flights: IndexMap<String, Flight>,
    overlays: Vec<ConstraintOverlay>,
    areas: IndexMap<String, FlowArea>,
    afps: IndexMap<String, AfpProgram>,
    cards: IndexMap<String, DataCard>,
    collab: Collaboration,
    ntml: NtmlLog,
    phases: BTreeMap<String, Phase>,
    /// Compliance of purged programs as of their purge; releasing EDCTs
    /// rewrites trajectories, so it cannot be recomputed afterwards.
    frozen_compliance: BTreeMap<String, ComplianceRecord>,
    next_event_seq: u64,
}

/// Collects the events of one command.
struct Emitter<'a> {
    next_seq: &'a mut u64,
    events: Vec<StreamEvent>,
}

impl Emitter<'_> {
    fn emit(&mut self, at: Timestamp, kind: EventKind) {
        self.events.push(StreamEvent {
            seq: *self.next_seq,
            at,
            kind,
        });
        *self.next_seq += 1;
    }
}

impl Engine {
    pub fn new(mut flights: Vec<Flight>, overlays: Vec<ConstraintOverlay>, start: Timestamp) -> Self {
        sort_flights(&mut flights);
        let phases = flights
            .iter()
            .map(|f| (f.flight_id.clone(), phase_at(f, start)))
            .collect();
        Engine {
            clock: ClockState::starting_at(start),
            flights: flights.into_iter().map(|f| (f.flight_id.clone(), f)).collect(),
            overlays,
            areas: IndexMap::new(),
            afps: IndexMap::new(),
            cards: IndexMap::new(),
            collab: Collaboration::default(),
            ntml: NtmlLog::in_memory(),
            phases,
            frozen_compliance: BTreeMap::new(),
            next_event_seq: 1,
        }
    }

    // ----- reads -------------------------------------------------------

    pub fn now(&self) -> Timestamp {
        self.clock.now
    }

    pub fn clock(&self) -> &ClockState {
        &self.clock
    }

    pub fn set_speedup(&mut self, speedup: f64, running: bool) {
        self.clock.speedup = speedup;
        self.clock.running = running;
    }

    pub fn set_step_seconds(&mut self, step_seconds: u32) {
        self.clock.step_seconds = step_seconds;
    }

    pub fn flights(&self) -> impl Iterator<Item = &Flight> {
        self.flights.values()
    }

    pub fn flight_list(&self) -> Vec<Flight> {
        self.flights.values().cloned().collect()
    }

    pub fn flight(&self, id: &str) -> Option<&Flight> {
        self.flights.get(id)
    }

    pub fn overlays(&self) -> &[ConstraintOverlay] {
        &self.overlays
    }

    pub fn constraint_summary(&self, window: TimeWindow) -> Result<Vec<ConstraintOverlay>> {
        constraint_summary(&self.overlays, window)
    }

    pub fn areas(&self) -> impl Iterator<Item = &FlowArea> {
        self.areas.values()
    }

    pub fn area(&self, id: &str) -> Result<&FlowArea> {
        self.areas.get(id).ok_or_else(|| FmdsError::UnknownArea(id.to_string()))
    }

    pub fn afps(&self) -> impl Iterator<Item = &AfpProgram> {
        self.afps.values()
    }

    pub fn afp(&self, id: &str) -> Result<&AfpProgram> {
        self.afps.get(id).ok_or_else(|| FmdsError::UnknownAfp(id.to_string()))
    }

    pub fn cards(&self) -> impl Iterator<Item = &DataCard> {
        self.cards.values()
    }

    pub fn card(&self, id: &str) -> Result<&DataCard> {
        self.cards.get(id).ok_or_else(|| FmdsError::UnknownCard(id.to_string()))
    }

    pub fn collaboration(&self) -> &Collaboration {
        &self.collab
    }

    pub fn ntml(&self) -> &NtmlLog {
        &self.ntml
    }

    pub fn query_ntml(&self, filter: &NtmlFilter) -> Vec<NtmlEntry> {
        self.ntml.query(filter)
    }

    /// Sequence number the next event will carry.
    pub fn next_event_seq(&self) -> u64 {
        self.next_event_seq
    }

    pub fn positions(&self, at: Option<Timestamp>) -> Vec<FlightPosition> {
        positions(at.unwrap_or(self.clock.now), &self.flight_list())
    }

    /// Canonical dump of everything commands can change. Two engines that
    /// went through the same commands produce equal values.
    pub fn state_json(&self) -> serde_json::Value {
        json!({
            "now": self.clock.now,
            "flights": self.flights.values().collect::<Vec<_>>(),
            "areas": self.areas.values().collect::<Vec<_>>(),
            "afps": self.afps.values().collect::<Vec<_>>(),
            "cards": self.cards.values().collect::<Vec<_>>(),
            "collaboration": self.collab,
            "ntml": self.ntml.entries(),
            "phases": self.phases,
            "frozen_compliance": self.frozen_compliance,
            "next_event_seq": self.next_event_seq,
        })
    }

    /// Status of every area and AFP; comparable with `ntml::replay`.
    pub fn status_map(&self) -> StatusMap {
        let mut map = StatusMap::new();
        for area in self.areas.values() {
            map.insert(area.area_id.clone(), SubjectStatus::Area(area.designation));
        }
        for afp in self.afps.values() {
            map.insert(afp.afp_id.clone(), SubjectStatus::Afp(afp.status));
        }
        map
    }

    /// Demand over an area's active window on current (controlled)
    /// trajectories.
    pub fn area_demand(&self, area_id: &str, bin_width: i64, rate: Option<u32>) -> Result<DemandHistogram> {
        if bin_width <= 0 {
            return Err(FmdsError::InvalidBinWidth(bin_width));
        }
        let area = self.area(area_id)?;
        let crossings = capture_flights(area, &self.flight_list());
        demand_histogram(
            area_id,
            &crossings,
            aligned_span(area.active_window, bin_width),
            bin_width,
            rate,
        )
    }

    /// Pure modeling against the current flight set.
    pub fn model(&self, params: &AfpParameters) -> Result<Modeled> {
        let area = self.area(&params.area_id)?;
        let (assignments, card) = model_afp(area, params, &self.flight_list())?;
        Ok(Modeled { assignments, card })
    }

    pub fn compare(&self, card_ids: &[String]) -> Result<Vec<ComparisonRow>> {
        let cards = card_ids
            .iter()
            .map(|id| self.card(id).cloned())
            .collect::<Result<Vec<_>>>()?;
        compare_cards(&cards)
    }

    pub fn compliance(&self, afp_id: &str, at: Option<Timestamp>) -> Result<ComplianceRecord> {
        let program = self.afp(afp_id)?;
        if let Some(frozen) = self.frozen_compliance.get(afp_id) {
            return Ok(frozen.clone());
        }
        if !matches!(program.status, AfpStatus::Active | AfpStatus::Purged) {
            return Err(FmdsError::NotYetActive(afp_id.to_string()));
        }
        let area = self.area(&program.area_id)?;
        let mut as_of = at.unwrap_or(self.clock.now).min(self.clock.now);
        if let Some(purged_at) = program.purged_at {
            as_of = as_of.min(purged_at);
        }
        let crossings = capture_flights_within(
            area,
            &self.flight_list(),
            program.program_window,
            DepartureBasis::Effective,
        );
        let span = aligned_span(program.program_window, DEFAULT_BIN_WIDTH);
        let histogram = DemandHistogram::from_times(
            afp_id,
            crossings.iter().map(|c| c.entry_time).filter(|t| *t < as_of),
            span,
            DEFAULT_BIN_WIDTH,
            Some(program.rate),
        )?;
        let capacity = histogram.capacity_per_bin.unwrap_or(0.0);
        Ok(ComplianceRecord {
            afp_id: afp_id.to_string(),
            status: program.status,
            rate: program.rate,
            as_of,
            capacity_per_bin: capacity,
            total_actual: histogram.total() as u32,
            total_planned: program.assignments.len() as u32,
            bins: histogram
                .bins
                .iter()
                .map(|b| ComplianceBin {
                    bin_start: b.bin_start,
                    actual: b.demand_count,
                    capacity,
                })
                .collect(),
        })
    }

    // ----- commands ----------------------------------------------------

    /// Applies one command atomically: on error nothing changes.
    pub fn execute(&mut self, actor: &str, command: Command) -> Result<(Outcome, Vec<StreamEvent>)> {
        let mut next_seq = self.next_event_seq;
        let mut staged = self.clone();
        let mut emitter = Emitter {
            next_seq: &mut next_seq,
            events: Vec::new(),
        };
        let outcome = staged.apply(actor, command, &mut emitter)?;
        let events = emitter.events;
        *self = staged;
        self.next_event_seq = next_seq;
        Ok((outcome, events))
    }

    fn apply(&mut self, actor: &str, command: Command, out: &mut Emitter) -> Result<Outcome> {
        match command {
            Command::CreateArea { request } => self.create_area(actor, request, out),
            Command::ModelAfp { params } => {
                let modeled = self.model(&params)?;
                self.store_card(modeled.card.clone(), out);
                Ok(Outcome::Modeled(modeled))
            }
            Command::ProposeAfp { params } => self.propose_afp(actor, params, out),
            Command::ImplementAfp {
                params,
                schedule_only,
                proposal_id,
            } => self.implement_afp(actor, params, schedule_only, proposal_id, out),
            Command::ReviseAfp {
                afp_id,
                new_rate,
                new_window,
                reason,
            } => self.revise_afp(actor, &afp_id, new_rate, new_window, reason, out),
            Command::PurgeAfp { afp_id } => self.purge_afp(actor, &afp_id, out),
            Command::AddNote { subject_id, text } => {
                let entry = self.log(actor, NtmlEventType::Note, &subject_id, json!({ "text": text }), out)?;
                Ok(Outcome::Note { entry })
            }
            Command::CreateThread { topic, members } => {
                let thread = self.collab.create_thread(&topic, members, self.clock.now)?;
                out.emit(self.clock.now, EventKind::ThreadCreated { thread: thread.clone() });
                Ok(Outcome::Thread { thread })
            }
            Command::PostMessage { thread_id, body } => {
                let cards = &self.cards;
                let message = self
                    .collab
                    .post_message(&thread_id, actor, body, self.clock.now, |id| cards.contains_key(id))?;
                let muted_members = self.collab.thread(&thread_id)?.muted_members();
                out.emit(
                    self.clock.now,
                    EventKind::MessagePosted {
                        message: message.clone(),
                        muted_members,
                    },
                );
                Ok(Outcome::Message { message })
            }
            Command::SetEmphasis { thread_id, emphasized } => {
                let (thread, changed) = self.collab.set_emphasis(&thread_id, emphasized)?;
                if changed {
                    out.emit(self.clock.now, EventKind::EmphasisChanged { thread_id, emphasized });
                }
                Ok(Outcome::Thread { thread })
            }
            Command::SetMute {
                thread_id,
                member,
                muted,
            } => {
                let (thread, changed) = self.collab.set_mute(&thread_id, &member, muted)?;
                if changed {
                    out.emit(
                        self.clock.now,
                        EventKind::MuteChanged {
                            thread_id,
                            member,
                            muted,
                        },
                    );
                }
                Ok(Outcome::Thread { thread })
            }
            Command::SetVoicePresence { thread_id, count } => {
                let (thread, changed) = self.collab.set_voice_presence(&thread_id, count)?;
                if changed {
                    out.emit(self.clock.now, EventKind::VoicePresence { thread_id, count });
                }
                Ok(Outcome::Thread { thread })
            }
            Command::ScheduleMeeting {
                thread_id,
                scheduled_for,
                title,
                created_via,
            } => {
                let meeting =
                    self.collab
                        .schedule_meeting(&thread_id, scheduled_for, &title, created_via, self.clock.now)?;
                out.emit(
                    self.clock.now,
                    EventKind::MeetingScheduled {
                        meeting: meeting.clone(),
                    },
                );
                Ok(Outcome::Meeting { meeting })
            }
            Command::Advance { to } => self.advance(actor, to, out),
        }
    }

    fn log(
        &mut self,
        actor: &str,
        event_type: NtmlEventType,
        subject_id: &str,
        payload: serde_json::Value,
        out: &mut Emitter,
    ) -> Result<NtmlEntry> {
        self.log_at(self.clock.now, actor, event_type, subject_id, payload, out)
    }

    fn log_at(
        &mut self,
        at: Timestamp,
        actor: &str,
        event_type: NtmlEventType,
        subject_id: &str,
        payload: serde_json::Value,
        out: &mut Emitter,
    ) -> Result<NtmlEntry> {
        let entry = self
            .ntml
            .append(NewEntry {
                timestamp: at,
                actor: actor.to_string(),
                event_type,
                subject_id: subject_id.to_string(),
                payload,
            })?
            .clone();
        out.emit(at, EventKind::Ntml { entry: entry.clone() });
        Ok(entry)
    }

    fn store_card(&mut self, card: DataCard, out: &mut Emitter) {
        if !self.cards.contains_key(&card.card_id) {
            out.emit(
                self.clock.now,
                EventKind::CardStored {
                    card_id: card.card_id.clone(),
                    area_id: card.area_id.clone(),
                },
            );
        }
        self.cards.insert(card.card_id.clone(), card);
    }

    fn create_area(&mut self, actor: &str, request: AreaRequest, out: &mut Emitter) -> Result<Outcome> {
        let area_id = format!("area-{}", self.areas.len() + 1);
        let area = FlowArea::create(&area_id, request.definition)?;
        let model = match request.rate {
            Some(rate) => {
                let params = AfpParameters {
                    area_id: area_id.clone(),
                    rate,
                    window: request.program_window.unwrap_or(area.active_window),
                    exempt_categories: request.exempt_categories,
                };
                let (assignments, card) = model_afp(&area, &params, &self.flight_list())?;
                Some(Modeled { assignments, card })
            }
            None => None,
        };
        let event_type = match area.designation {
            crate::geometry::Designation::Fea => NtmlEventType::FeaCreated,
            crate::geometry::Designation::Fca => NtmlEventType::FcaCreated,
        };
        self.log(actor, event_type, &area_id, json!({ "area": area }), out)?;
        self.areas.insert(area_id, area.clone());
        if let Some(modeled) = &model {
            self.store_card(modeled.card.clone(), out);
        }
        Ok(Outcome::AreaCreated { area, model })
    }

    fn check_overlap(&self, params: &AfpParameters, ignore: Option<&str>) -> Result<()> {
        let clash = self.afps.values().find(|p| {
            Some(p.afp_id.as_str()) != ignore
                && p.is_in_effect()
                && p.area_id == params.area_id
                && p.program_window.intersects(&params.window)
        });
        match clash {
            Some(p) => Err(FmdsError::OverlappingAfp {
                existing: p.afp_id.clone(),
            }),
            None => Ok(()),
        }
    }

    fn propose_afp(&mut self, actor: &str, params: AfpParameters, out: &mut Emitter) -> Result<Outcome> {
        let area = self.area(&params.area_id)?.clone();
        params.validate_for(&area)?;
        let afp_id = format!("afp-{}", self.afps.len() + 1);
        let assignments = plan_assignments(&area, &params, &self.flight_list(), &[], None);
        let card = DataCard::summarize(Some(&afp_id), &params, assignments.clone())?;
        let program = AfpProgram {
            afp_id: afp_id.clone(),
            area_id: params.area_id.clone(),
            rate: params.rate,
            program_window: params.window,
            exempt_categories: params.exempt_categories.clone(),
            status: AfpStatus::Proposed,
            revisions: Vec::new(),
            created_by: actor.to_string(),
            created_at: self.clock.now,
            activated_at: None,
            purged_at: None,
            assignments,
            card_id: card.card_id.clone(),
        };
        self.log(
            actor,
            NtmlEventType::AfpProposed,
            &afp_id,
            program_payload(&program, &card),
            out,
        )?;
        self.afps.insert(afp_id, program.clone());
        self.store_card(card.clone(), out);
        Ok(Outcome::Afp { program, card })
    }

    fn implement_afp(
        &mut self,
        actor: &str,
        params: AfpParameters,
        schedule_only: bool,
        proposal_id: Option<String>,
        out: &mut Emitter,
    ) -> Result<Outcome> {
        let area = self.area(&params.area_id)?.clone();
        params.validate_for(&area)?;
        if let Some(id) = &proposal_id {
            let proposal = self.afp(id)?;
            match proposal.status {
                AfpStatus::Proposed => {}
                AfpStatus::Purged => return Err(FmdsError::AfpTerminal(id.clone())),
                other => {
                    return Err(FmdsError::InvalidAfpState {
                        id: id.clone(),
                        status: other.as_str().into(),
                        needed: "PROPOSED".into(),
                    })
                }
            }
        }
        self.check_overlap(&params, proposal_id.as_deref())?;

        let now = self.clock.now;
        let afp_id = proposal_id.unwrap_or_else(|| format!("afp-{}", self.afps.len() + 1));
        let assignments = plan_assignments(&area, &params, &self.flight_list(), &[], Some(now));
        let card = DataCard::summarize(Some(&afp_id), &params, assignments.clone())?;
        let status = if schedule_only && params.window.start > now {
            AfpStatus::Scheduled
        } else {
            AfpStatus::Active
        };
        let previous = self.afps.get(&afp_id);
        let program = AfpProgram {
            afp_id: afp_id.clone(),
            area_id: params.area_id.clone(),
            rate: params.rate,
            program_window: params.window,
            exempt_categories: params.exempt_categories.clone(),
            status,
            revisions: Vec::new(),
            created_by: previous.map_or_else(|| actor.to_string(), |p| p.created_by.clone()),
            created_at: previous.map_or(now, |p| p.created_at),
            activated_at: (status == AfpStatus::Active).then_some(now),
            purged_at: None,
            assignments,
            card_id: card.card_id.clone(),
        };
        let event_type = match status {
            AfpStatus::Scheduled => NtmlEventType::AfpScheduled,
            _ => NtmlEventType::AfpImplemented,
        };
        self.log(actor, event_type, &afp_id, program_payload(&program, &card), out)?;
        self.write_edcts(&program, &[]);
        self.afps.insert(afp_id, program.clone());
        self.store_card(card.clone(), out);
        Ok(Outcome::Afp { program, card })
    }

    fn revise_afp(
        &mut self,
        actor: &str,
        afp_id: &str,
        new_rate: Option<u32>,
        new_window: Option<TimeWindow>,
        reason: String,
        out: &mut Emitter,
    ) -> Result<Outcome> {
        let program = self.afp(afp_id)?.clone();
        match program.status {
            AfpStatus::Scheduled | AfpStatus::Active => {}
            AfpStatus::Purged => return Err(FmdsError::AfpTerminal(afp_id.to_string())),
            AfpStatus::Proposed => {
                return Err(FmdsError::InvalidAfpState {
                    id: afp_id.to_string(),
                    status: "PROPOSED".into(),
                    needed: "SCHEDULED or ACTIVE".into(),
                })
            }
        }
        let new_rate = new_rate.filter(|r| *r != program.rate);
        let new_window = new_window.filter(|w| *w != program.program_window);
        if new_rate.is_none() && new_window.is_none() {
            return Err(FmdsError::NoChange);
        }
        if let Some(rate) = new_rate {
            check_rate(rate)?;
        }
        if let Some(window) = new_window {
            window.validate()?;
        }
        let params = AfpParameters {
            rate: new_rate.unwrap_or(program.rate),
            window: new_window.unwrap_or(program.program_window),
            ..program.parameters()
        };
        self.check_overlap(&params, Some(afp_id))?;

        let now = self.clock.now;
        let area = self.area(&program.area_id)?.clone();
        let assignments = plan_assignments(&area, &params, &self.flight_list(), &program.assignments, Some(now));
        let card = DataCard::summarize(Some(afp_id), &params, assignments.clone())?;
        let mut revised = program.clone();
        revised.rate = params.rate;
        revised.program_window = params.window;
        revised.revisions.push(Revision {
            revision_index: program.revisions.len() as u32 + 1,
            revised_at: now,
            new_rate,
            new_window,
            reason: reason.clone(),
        });
        revised.assignments = assignments;
        revised.card_id = card.card_id.clone();

        let mut payload = program_payload(&revised, &card);
        payload["revision"] = json!(revised.revisions.last());
        self.log(actor, NtmlEventType::AfpRevised, afp_id, payload, out)?;
        self.write_edcts(&revised, &program.assignments);
        self.afps.insert(afp_id.to_string(), revised.clone());
        self.store_card(card.clone(), out);
        Ok(Outcome::Afp { program: revised, card })
    }

    fn purge_afp(&mut self, actor: &str, afp_id: &str, out: &mut Emitter) -> Result<Outcome> {
        let mut program = self.afp(afp_id)?.clone();
        if program.status == AfpStatus::Purged {
            return Err(FmdsError::AfpTerminal(afp_id.to_string()));
        }
        let now = self.clock.now;
        let released: Vec<String> = self
            .flights
            .values()
            .filter(|f| f.controlling_afp.as_deref() == Some(afp_id) && f.effective_departure() > now)
            .map(|f| f.flight_id.clone())
            .collect();
        if program.status == AfpStatus::Active {
            let mut record = self.compliance(afp_id, Some(now))?;
            record.status = AfpStatus::Purged;
            self.frozen_compliance.insert(afp_id.to_string(), record);
        }
        program.status = AfpStatus::Purged;
        program.purged_at = Some(now);
        let card = self.card(&program.card_id)?.clone();
        self.log(
            actor,
            NtmlEventType::AfpPurged,
            afp_id,
            json!({ "released_flights": released, "previous_card_id": program.card_id }),
            out,
        )?;
        for id in &released {
            if let Some(f) = self.flights.get_mut(id) {
                f.edct = None;
                f.controlling_afp = None;
            }
        }
        self.afps.insert(afp_id.to_string(), program.clone());
        Ok(Outcome::Afp { program, card })
    }

    /// Writes EDCTs of controlled flights and releases flights this program
    /// no longer controls. Where another program in effect already holds a
    /// flight to a later EDCT, the later EDCT stands.
    fn write_edcts(&mut self, program: &AfpProgram, previous: &[SlotAssignment]) {
        let now = self.clock.now;
        let controlled: BTreeMap<&str, &SlotAssignment> = program
            .assignments
            .iter()
            .filter(|a| a.eligibility == Eligibility::Controlled)
            .map(|a| (a.flight_id.as_str(), a))
            .collect();
        for old in previous {
            if controlled.contains_key(old.flight_id.as_str()) {
                continue;
            }
            if let Some(f) = self.flights.get_mut(&old.flight_id) {
                if f.controlling_afp.as_deref() == Some(program.afp_id.as_str()) && f.effective_departure() > now {
                    f.edct = None;
                    f.controlling_afp = None;
                }
            }
        }
        for (id, assignment) in controlled {
            let other_holds = self.flights.get(id).and_then(|f| {
                let other = f.controlling_afp.as_deref().filter(|o| *o != program.afp_id)?;
                let in_effect = self.afps.get(other).is_some_and(AfpProgram::is_in_effect);
                (in_effect && f.edct.is_some_and(|e| e >= assignment.edct)).then_some(())
            });
            if other_holds.is_some() {
                continue;
            }
            if let Some(f) = self.flights.get_mut(id) {
                f.edct = Some(assignment.edct);
                f.controlling_afp = Some(program.afp_id.clone());
            }
        }
    }

    fn advance(&mut self, actor: &str, to: Timestamp, out: &mut Emitter) -> Result<Outcome> {
        let from = self.clock.now;
        if to < from {
            return Err(FmdsError::TimeRegression {
                last: from.to_iso(),
                attempted: to.to_iso(),
            });
        }

        enum Pending {
            Activate(String),
            Phase(String, Phase),
        }
        // (time, kind rank, id) orders events identically however the
        // interval is split.
        let mut pending: Vec<(Timestamp, u8, String, Pending)> = Vec::new();
        for p in self.afps.values() {
            if p.status == AfpStatus::Scheduled && p.program_window.start <= to {
                let at = p.program_window.start.max(from);
                pending.push((at, 0, p.afp_id.clone(), Pending::Activate(p.afp_id.clone())));
            }
        }
        for f in self.flights.values() {
            let current = self.phases.get(&f.flight_id).copied().unwrap_or(Phase::Predep);
            for change in phase_changes(f, current, to) {
                let rank = if change.phase == Phase::Enroute { 1 } else { 2 };
                pending.push((
                    change.at,
                    rank,
                    f.flight_id.clone(),
                    Pending::Phase(change.flight_id, change.phase),
                ));
            }
        }
        pending.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));

        let first_seq = *out.next_seq;
        for (at, _, _, item) in pending {
            match item {
                Pending::Activate(afp_id) => {
                    let program = self.afps.get_mut(&afp_id).expect("pending activation of known AFP");
                    program.status = AfpStatus::Active;
                    program.activated_at = Some(at);
                    let payload = json!({ "activated_by_clock": true, "card_id": program.card_id });
                    self.log_at(at, actor, NtmlEventType::AfpImplemented, &afp_id, payload, out)?;
                }
                Pending::Phase(flight_id, phase) => {
                    self.phases.insert(flight_id.clone(), phase);
                    out.emit(at, EventKind::FlightPhase { flight_id, phase });
                }
            }
        }
        self.clock.now = to;
        let events = out.events.iter().filter(|e| e.seq >= first_seq).cloned().collect();
        Ok(Outcome::Advanced { now: to, events })
    }
}

fn program_payload(program: &AfpProgram, card: &DataCard) -> serde_json::Value {
    json!({
        "area_id": program.area_id,
        "rate": program.rate,
        "window": program.program_window,
        "exempt_categories": program.exempt_categories,
        "status": program.status,
        "card_id": card.card_id,
        "flights_captured": card.flights_captured,
        "flights_delayed": card.flights_delayed,
        "total_delay_seconds": card.total_delay_seconds,
        "edcts": program
            .assignments
            .iter()
            .filter(|a| a.eligibility == Eligibility::Controlled)
            .map(|a| (a.flight_id.clone(), a.edct))
            .collect::<BTreeMap<_, _>>(),
    })
}
