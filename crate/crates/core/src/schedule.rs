//! Flight schedules and constraint overlays: domain types, line-delimited
//! file formats, validation and the constraint summary.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FmdsError, Result};
use crate::planar::{check_simple_ring, open_ring, Projection};
use crate::time::{TimeWindow, Timestamp};

/// A route or shape vertex. Serialized as a `[lat, lon]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Waypoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl Waypoint {
    pub const fn new(latitude: f64, longitude: f64) -> Self {
        Waypoint { latitude, longitude }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.latitude.is_finite() && (-90.0..=90.0).contains(&self.latitude)) {
            return Err(format!("latitude {} out of [-90, 90]", self.latitude));
        }
        if !(self.longitude.is_finite() && (-180.0..=180.0).contains(&self.longitude)) {
            return Err(format!("longitude {} out of [-180, 180]", self.longitude));
        }
        Ok(())
    }
}

impl From<(f64, f64)> for Waypoint {
    fn from((latitude, longitude): (f64, f64)) -> Self {
        Waypoint { latitude, longitude }
    }
}

impl From<Waypoint> for (f64, f64) {
    fn from(w: Waypoint) -> Self {
        (w.latitude, w.longitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExemptCategory {
    None,
    Airborne,
    International,
    Lifeguard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flight {
    pub flight_id: String,
    pub callsign: String,
    pub origin: String,
    pub destination: String,
    pub scheduled_departure: Timestamp,
    pub cruise_altitude_ft: f64,
    pub ground_speed_kt: f64,
    pub route: Vec<Waypoint>,
    pub exempt_category: ExemptCategory,
    #[serde(default)]
    pub edct: Option<Timestamp>,
    #[serde(default)]
    pub controlling_afp: Option<String>,
}

impl Flight {
    /// EDCT when one is assigned, otherwise the scheduled departure.
    pub fn effective_departure(&self) -> Timestamp {
        self.edct.unwrap_or(self.scheduled_departure)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.flight_id.trim().is_empty() {
            return Err("flight_id is empty".into());
        }
        if self.route.len() < 2 {
            return Err(format!("route needs at least 2 waypoints, got {}", self.route.len()));
        }
        for (i, w) in self.route.iter().enumerate() {
            w.validate().map_err(|e| format!("waypoint {i}: {e}"))?;
        }
        if let Some(i) = self.route.windows(2).position(|pair| pair[0] == pair[1]) {
            return Err(format!("waypoints {i} and {} coincide", i + 1));
        }
        if !(self.ground_speed_kt.is_finite() && self.ground_speed_kt > 0.0) {
            return Err(format!("ground speed {} must be positive", self.ground_speed_kt));
        }
        if !(self.cruise_altitude_ft.is_finite() && self.cruise_altitude_ft > 0.0) {
            return Err(format!("cruise altitude {} must be positive", self.cruise_altitude_ft));
        }
        if let Some(edct) = self.edct {
            if edct < self.scheduled_departure {
                return Err("edct precedes scheduled departure".into());
            }
        }
        Ok(())
    }
}

/// One schedule file line. The key set is closed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlightRecord {
    flight_id: String,
    callsign: String,
    origin: String,
    destination: String,
    scheduled_departure: Timestamp,
    cruise_altitude_ft: f64,
    ground_speed_kt: f64,
    route: Vec<Waypoint>,
    exempt_category: ExemptCategory,
}

impl From<FlightRecord> for Flight {
    fn from(r: FlightRecord) -> Self {
        Flight {
            flight_id: r.flight_id,
            callsign: r.callsign,
            origin: r.origin,
            destination: r.destination,
            scheduled_departure: r.scheduled_departure,
            cruise_altitude_ft: r.cruise_altitude_ft,
            ground_speed_kt: r.ground_speed_kt,
            route: r.route,
            exempt_category: r.exempt_category,
            edct: None,
            controlling_afp: None,
        }
    }
}

impl From<&Flight> for FlightRecord {
    fn from(f: &Flight) -> Self {
        FlightRecord {
            flight_id: f.flight_id.clone(),
            callsign: f.callsign.clone(),
            origin: f.origin.clone(),
            destination: f.destination.clone(),
            scheduled_departure: f.scheduled_departure,
            cruise_altitude_ft: f.cruise_altitude_ft,
            ground_speed_kt: f.ground_speed_kt,
            route: f.route.clone(),
            exempt_category: f.exempt_category,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverlayKind {
    Weather,
    SpaceLaunch,
    Sua,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Severity {
    Info,
    Moderate,
    Severe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintOverlay {
    pub overlay_id: String,
    pub kind: OverlayKind,
    pub polygon: Vec<Waypoint>,
    pub active_window: TimeWindow,
    pub severity: Severity,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlayRecord {
    overlay_id: String,
    kind: OverlayKind,
    polygon: Vec<Waypoint>,
    active_start: Timestamp,
    active_end: Timestamp,
    severity: Severity,
    label: String,
}

/// Validates a closed polygon given as waypoints; a repeated closing vertex
/// is optional.
pub fn check_polygon(points: &[Waypoint]) -> std::result::Result<(), String> {
    for (i, w) in points.iter().enumerate() {
        w.validate().map_err(|e| format!("vertex {i}: {e}"))?;
    }
    let ring = open_ring(points);
    let projection = Projection::centered_on(ring);
    check_simple_ring(&projection.project_all(ring))
}

fn records<'a>(text: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line))
        .filter(|(_, line)| !line.trim().is_empty())
}

fn malformed(line: usize, reason: impl ToString) -> FmdsError {
    FmdsError::MalformedRecord {
        line,
        reason: reason.to_string(),
    }
}

/// Parses schedule text. Flights come back sorted by scheduled departure,
/// ties broken by `flight_id`.
pub fn parse_schedule(text: &str) -> Result<Vec<Flight>> {
    let mut seen = HashSet::new();
    let mut flights = Vec::new();
    for (line, raw) in records(text) {
        let record: FlightRecord = serde_json::from_str(raw).map_err(|e| malformed(line, e))?;
        let flight = Flight::from(record);
        flight.validate().map_err(|e| malformed(line, e))?;
        if !seen.insert(flight.flight_id.clone()) {
            return Err(FmdsError::DuplicateId(flight.flight_id));
        }
        flights.push(flight);
    }
    if flights.is_empty() {
        return Err(FmdsError::EmptySchedule);
    }
    sort_flights(&mut flights);
    Ok(flights)
}

pub fn sort_flights(flights: &mut [Flight]) {
    flights.sort_by(|a, b| {
        a.scheduled_departure
            .cmp(&b.scheduled_departure)
            .then_with(|| a.flight_id.cmp(&b.flight_id))
    });
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<Vec<Flight>> {
    parse_schedule(&fs::read_to_string(path)?)
}

/// One record per line in the order given; runtime fields (EDCT, controlling
/// AFP) are not part of the file format.
pub fn format_schedule(flights: &[Flight]) -> String {
    let mut out = String::new();
    for flight in flights {
        out.push_str(&serde_json::to_string(&FlightRecord::from(flight)).expect("flight record serializes"));
        out.push('\n');
    }
    out
}

pub fn save_schedule(path: impl AsRef<Path>, flights: &[Flight]) -> Result<()> {
    fs::write(path, format_schedule(flights))?;
    Ok(())
}

pub fn parse_overlays(text: &str) -> Result<Vec<ConstraintOverlay>> {
    let mut seen = HashSet::new();
    let mut overlays = Vec::new();
    for (line, raw) in records(text) {
        let r: OverlayRecord = serde_json::from_str(raw).map_err(|e| malformed(line, e))?;
        if r.overlay_id.trim().is_empty() {
            return Err(malformed(line, "overlay_id is empty"));
        }
        if r.active_start >= r.active_end {
            return Err(malformed(line, "active_start must precede active_end"));
        }
        check_polygon(&r.polygon)
            .map_err(|e| FmdsError::InvalidPolygon(format!("line {line} ({}): {e}", r.overlay_id)))?;
        if !seen.insert(r.overlay_id.clone()) {
            return Err(FmdsError::DuplicateId(r.overlay_id));
        }
        overlays.push(ConstraintOverlay {
            overlay_id: r.overlay_id,
            kind: r.kind,
            polygon: r.polygon,
            active_window: TimeWindow {
                start: r.active_start,
                end: r.active_end,
            },
            severity: r.severity,
            label: r.label,
        });
    }
    Ok(overlays)
}

pub fn load_overlays(path: impl AsRef<Path>) -> Result<Vec<ConstraintOverlay>> {
    parse_overlays(&fs::read_to_string(path)?)
}

pub fn format_overlays(overlays: &[ConstraintOverlay]) -> String {
    let mut out = String::new();
    for o in overlays {
        let record = OverlayRecord {
            overlay_id: o.overlay_id.clone(),
            kind: o.kind,
            polygon: o.polygon.clone(),
            active_start: o.active_window.start,
            active_end: o.active_window.end,
            severity: o.severity,
            label: o.label.clone(),
        };
        out.push_str(&serde_json::to_string(&record).expect("overlay record serializes"));
        out.push('\n');
    }
    out
}

pub fn save_overlays(path: impl AsRef<Path>, overlays: &[ConstraintOverlay]) -> Result<()> {
    fs::write(path, format_overlays(overlays))?;
    Ok(())
}

/// Overlays active at any point of `[start, end)`, most severe first, then
/// by activation start (overlay id as a final tie-break).
pub fn constraint_summary(overlays: &[ConstraintOverlay], window: TimeWindow) -> Result<Vec<ConstraintOverlay>> {
    window.validate()?;
    let mut summary: Vec<ConstraintOverlay> = overlays
        .iter()
        .filter(|o| o.active_window.intersects(&window))
        .cloned()
        .collect();
    summary.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then_with(|| a.active_window.start.cmp(&b.active_window.start))
            .then_with(|| a.overlay_id.cmp(&b.overlay_id))
    });
    Ok(summary)
}
