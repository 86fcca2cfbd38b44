//! Simulated NAS time: clock state, flight phases and positions.

use serde::{Deserialize, Serialize};

use crate::schedule::{Flight, Waypoint};
use crate::time::Timestamp;
use crate::trajectory::{DepartureBasis, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockState {
    pub now: Timestamp,
    pub step_seconds: u32,
    pub running: bool,
    /// Simulated seconds per wall-clock second while running. Affects pacing
    /// only, never outcomes.
    pub speedup: f64,
}

impl ClockState {
    pub fn starting_at(now: Timestamp) -> Self {
        ClockState {
            now,
            step_seconds: 1,
            running: false,
            speedup: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Predep,
    Enroute,
    Arrived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPosition {
    pub flight_id: String,
    pub position: Waypoint,
    pub phase: Phase,
}

/// Phase at integer time `at`, driven by the effective departure.
pub fn phase_at(flight: &Flight, at: Timestamp) -> Phase {
    let trajectory = Trajectory::of(flight, DepartureBasis::Effective);
    phase_on(&trajectory, at)
}

fn phase_on(trajectory: &Trajectory, at: Timestamp) -> Phase {
    if at < trajectory.departure {
        Phase::Predep
    } else if at >= trajectory.arrival_second() {
        Phase::Arrived
    } else {
        Phase::Enroute
    }
}

/// Positions of `flights` at `at`. Flights on the ground report their
/// origin (before departure) or destination (after arrival).
pub fn positions(at: Timestamp, flights: &[Flight]) -> Vec<FlightPosition> {
    flights
        .iter()
        .map(|f| {
            let trajectory = Trajectory::of(f, DepartureBasis::Effective);
            let phase = phase_on(&trajectory, at);
            let position = match phase {
                Phase::Predep => f.route[0],
                Phase::Arrived => *f.route.last().expect("routes have at least two waypoints"),
                Phase::Enroute => trajectory
                    .position_at(at.secs() as f64)
                    .unwrap_or_else(|| *f.route.last().expect("non-empty route")),
            };
            FlightPosition {
                flight_id: f.flight_id.clone(),
                position,
                phase,
            }
        })
        .collect()
}

/// A phase change and the second at which it happened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseChange {
    pub flight_id: String,
    pub phase: Phase,
    pub at: Timestamp,
}

/// Changes needed to bring a flight from phase `from` to its phase at `to`.
/// A flight that departs and arrives within the step yields both changes.
pub fn phase_changes(flight: &Flight, from: Phase, to: Timestamp) -> Vec<PhaseChange> {
    let trajectory = Trajectory::of(flight, DepartureBasis::Effective);
    let target = phase_on(&trajectory, to);
    let change = |phase, at| PhaseChange {
        flight_id: flight.flight_id.clone(),
        phase,
        at,
    };
    match (from, target) {
        (Phase::Predep, Phase::Enroute) => vec![change(Phase::Enroute, trajectory.departure)],
        (Phase::Predep, Phase::Arrived) => vec![
            change(Phase::Enroute, trajectory.departure),
            change(Phase::Arrived, trajectory.arrival_second()),
        ],
        (Phase::Enroute, Phase::Arrived) => vec![change(Phase::Arrived, trajectory.arrival_second())],
        _ => Vec::new(),
    }
}
