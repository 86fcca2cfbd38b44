//! Flow evaluation / constrained areas, trajectory crossing detection and
//! demand histograms.

use serde::{Deserialize, Serialize};

use crate::error::{FmdsError, Result};
use crate::planar::{check_simple_ring, open_ring, point_in_polygon, segment_intersection, Projection, Vec2};
use crate::schedule::{Flight, Waypoint};
use crate::time::{TimeWindow, Timestamp};
use crate::trajectory::{ceil_second, DepartureBasis, Trajectory};

pub const DEFAULT_BIN_WIDTH: i64 = 900;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Designation {
    Fea,
    Fca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "vertices", rename_all = "snake_case")]
pub enum AreaShape {
    /// Open line; any crossing counts, in either direction.
    Polyline(Vec<Waypoint>),
    /// Closed ring (closing vertex optional); only outside-to-inside
    /// boundary crossings count.
    Polygon(Vec<Waypoint>),
}

impl AreaShape {
    pub fn vertices(&self) -> &[Waypoint] {
        match self {
            AreaShape::Polyline(v) => v,
            AreaShape::Polygon(v) => open_ring(v),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let all = match self {
            AreaShape::Polyline(v) | AreaShape::Polygon(v) => v,
        };
        for (i, w) in all.iter().enumerate() {
            w.validate().map_err(|e| format!("vertex {i}: {e}"))?;
        }
        match self {
            AreaShape::Polyline(v) => {
                if v.len() < 2 {
                    return Err(format!("polyline needs at least 2 vertices, got {}", v.len()));
                }
                if v.windows(2).any(|p| p[0] == p[1]) {
                    return Err("polyline has repeated consecutive vertices".into());
                }
                Ok(())
            }
            AreaShape::Polygon(_) => {
                let ring = self.vertices();
                if ring.len() < 3 {
                    return Err(format!("polygon needs at least 3 vertices, got {}", ring.len()));
                }
                let projection = Projection::centered_on(ring);
                check_simple_ring(&projection.project_all(ring))
            }
        }
    }
}

/// Everything needed to draw an area; the id is assigned on creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDefinition {
    pub designation: Designation,
    pub shape: AreaShape,
    pub floor_ft: f64,
    pub ceiling_ft: f64,
    pub active_window: TimeWindow,
    #[serde(default)]
    pub name: String,
}

impl AreaDefinition {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate().map_err(FmdsError::InvalidShape)?;
        if !(self.floor_ft.is_finite() && self.ceiling_ft.is_finite() && self.floor_ft < self.ceiling_ft) {
            return Err(FmdsError::InvalidAltitudeBand {
                floor_ft: self.floor_ft,
                ceiling_ft: self.ceiling_ft,
            });
        }
        self.active_window.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowArea {
    pub area_id: String,
    pub designation: Designation,
    pub shape: AreaShape,
    pub floor_ft: f64,
    pub ceiling_ft: f64,
    pub active_window: TimeWindow,
    pub name: String,
}

impl FlowArea {
    /// Validates a definition and binds it to `area_id`.
    pub fn create(area_id: impl Into<String>, def: AreaDefinition) -> Result<Self> {
        def.validate()?;
        Ok(FlowArea {
            area_id: area_id.into(),
            designation: def.designation,
            shape: def.shape,
            floor_ft: def.floor_ft,
            ceiling_ft: def.ceiling_ft,
            active_window: def.active_window,
            name: def.name,
        })
    }

    pub fn admits_altitude(&self, altitude_ft: f64) -> bool {
        self.floor_ft <= altitude_ft && altitude_ft <= self.ceiling_ft
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub flight_id: String,
    pub area_id: String,
    pub entry_time: Timestamp,
    pub entry_point: Waypoint,
}

/// Captures flights against the area's active window using controlled
/// trajectories (EDCT when present).
pub fn capture_flights(area: &FlowArea, flights: &[Flight]) -> Vec<Crossing> {
    capture_flights_within(area, flights, area.active_window, DepartureBasis::Effective)
}

/// Capture with an explicit time filter and departure basis. Each flight
/// yields at most one crossing: its earliest qualifying intersection whose
/// entry second falls inside `window`.
pub fn capture_flights_within(
    area: &FlowArea,
    flights: &[Flight],
    window: TimeWindow,
    basis: DepartureBasis,
) -> Vec<Crossing> {
    let projection = Projection::centered_on(area.shape.vertices());
    let shape: Vec<Vec2> = projection.project_all(area.shape.vertices());
    let mut crossings: Vec<Crossing> = flights
        .iter()
        .filter(|f| area.admits_altitude(f.cruise_altitude_ft))
        .filter_map(|f| {
            let trajectory = Trajectory::of(f, basis);
            first_entry(&area.shape, &shape, &projection, &trajectory, window).map(|(entry_time, entry_point)| {
                Crossing {
                    flight_id: f.flight_id.clone(),
                    area_id: area.area_id.clone(),
                    entry_time,
                    entry_point,
                }
            })
        })
        .collect();
    crossings.sort_by(|a, b| {
        a.entry_time
            .cmp(&b.entry_time)
            .then_with(|| a.flight_id.cmp(&b.flight_id))
    });
    crossings
}

fn first_entry(
    shape: &AreaShape,
    projected: &[Vec2],
    projection: &Projection,
    trajectory: &Trajectory,
    window: TimeWindow,
) -> Option<(Timestamp, Waypoint)> {
    let is_polygon = matches!(shape, AreaShape::Polygon(_));
    let edges: Vec<(Vec2, Vec2)> = if is_polygon {
        (0..projected.len())
            .map(|i| (projected[i], projected[(i + 1) % projected.len()]))
            .collect()
    } else {
        projected.windows(2).map(|p| (p[0], p[1])).collect()
    };
    let mut inside = match trajectory.legs.first() {
        Some(leg) if is_polygon => point_in_polygon(projection.project(leg.from), projected),
        _ => false,
    };
    for leg in &trajectory.legs {
        let a = projection.project(leg.from);
        let b = projection.project(leg.to);
        let mut params: Vec<f64> = edges
            .iter()
            .filter_map(|(q0, q1)| segment_intersection(a, b, *q0, *q1))
            .collect();
        params.sort_by(f64::total_cmp);
        params.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

        for (i, &t) in params.iter().enumerate() {
            let entering = if is_polygon {
                if t > 1.0 - 1e-12 {
                    // Leg endpoint: the next leg decides the state change.
                    continue;
                }
                let next = params.get(i + 1).copied().unwrap_or(1.0);
                let after = point_in_polygon(a.lerp(b, (t + next) / 2.0), projected);
                let entering = !inside && after;
                inside = after;
                entering
            } else {
                true
            };
            if !entering {
                continue;
            }
            let entry = Timestamp(ceil_second(leg.time_at(t)));
            if window.contains(entry) {
                let point = Waypoint::new(
                    leg.from.latitude + (leg.to.latitude - leg.from.latitude) * t,
                    leg.from.longitude + (leg.to.longitude - leg.from.longitude) * t,
                );
                return Some((entry, point));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_start: Timestamp,
    pub demand_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandHistogram {
    pub area_id: String,
    pub bin_width: i64,
    pub bins: Vec<HistogramBin>,
    /// `rate * bin_width / 3600` when a rate is supplied.
    pub capacity_per_bin: Option<f64>,
}

impl DemandHistogram {
    /// Bins arbitrary event times over `span`; times outside the span are
    /// ignored.
    pub fn from_times(
        area_id: &str,
        times: impl IntoIterator<Item = Timestamp>,
        span: TimeWindow,
        bin_width: i64,
        rate: Option<u32>,
    ) -> Result<Self> {
        if bin_width <= 0 {
            return Err(FmdsError::InvalidBinWidth(bin_width));
        }
        span.validate()?;
        if span.duration() % bin_width != 0 {
            return Err(FmdsError::MisalignedSpan);
        }
        let n = (span.duration() / bin_width) as usize;
        let mut counts = vec![0u32; n];
        for t in times {
            if span.contains(t) {
                counts[((t - span.start) / bin_width) as usize] += 1;
            }
        }
        Ok(DemandHistogram {
            area_id: area_id.to_string(),
            bin_width,
            bins: counts
                .into_iter()
                .enumerate()
                .map(|(i, demand_count)| HistogramBin {
                    bin_start: span.start + i as i64 * bin_width,
                    demand_count,
                })
                .collect(),
            capacity_per_bin: rate.map(|r| r as f64 * bin_width as f64 / 3600.0),
        })
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.demand_count as u64).sum()
    }

    pub fn span(&self) -> TimeWindow {
        let start = self.bins.first().map_or(Timestamp(0), |b| b.bin_start);
        TimeWindow {
            start,
            end: start + self.bins.len() as i64 * self.bin_width,
        }
    }
}

pub fn demand_histogram(
    area_id: &str,
    crossings: &[Crossing],
    span: TimeWindow,
    bin_width: i64,
    rate: Option<u32>,
) -> Result<DemandHistogram> {
    DemandHistogram::from_times(area_id, crossings.iter().map(|c| c.entry_time), span, bin_width, rate)
}

/// Smallest bin-aligned span covering `window`.
pub fn aligned_span(window: TimeWindow, bin_width: i64) -> TimeWindow {
    TimeWindow {
        start: window.start.floor_to(bin_width),
        end: window.end.ceil_to(bin_width),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ExemptCategory;
    use crate::trajectory::leg_nm;

    fn window(s: i64, e: i64) -> TimeWindow {
        TimeWindow::new(Timestamp(s), Timestamp(e)).unwrap()
    }

    fn def(designation: Designation, shape: AreaShape) -> AreaDefinition {
        AreaDefinition {
            designation,
            shape,
            floor_ft: 18_000.0,
            ceiling_ft: 45_000.0,
            active_window: window(0, 7200),
            name: "ZTL east".into(),
        }
    }

    fn flight(id: &str, dep: i64, route: Vec<Waypoint>, speed: f64) -> Flight {
        Flight {
            flight_id: id.into(),
            callsign: id.into(),
            origin: "KATL".into(),
            destination: "KJFK".into(),
            scheduled_departure: Timestamp(dep),
            cruise_altitude_ft: 35_000.0,
            ground_speed_kt: speed,
            route,
            exempt_category: ExemptCategory::None,
            edct: None,
            controlling_afp: None,
        }
    }

    #[test]
    fn creation_errors() {
        let line = AreaShape::Polyline(vec![Waypoint::new(30.0, -80.0), Waypoint::new(32.0, -80.0)]);
        assert!(FlowArea::create("a", def(Designation::Fea, line.clone())).is_ok());
        let two_point_polygon = AreaShape::Polygon(vec![Waypoint::new(30.0, -80.0), Waypoint::new(32.0, -80.0)]);
        assert_eq!(
            FlowArea::create("a", def(Designation::Fca, two_point_polygon))
                .unwrap_err()
                .code(),
            "INVALID_SHAPE"
        );
        let mut flat = def(Designation::Fea, line.clone());
        flat.floor_ft = 35_000.0;
        flat.ceiling_ft = 35_000.0;
        assert_eq!(FlowArea::create("a", flat).unwrap_err().code(), "INVALID_ALTITUDE_BAND");
        let mut empty_window = def(Designation::Fea, line);
        empty_window.active_window = TimeWindow {
            start: Timestamp(10),
            end: Timestamp(10),
        };
        assert_eq!(
            FlowArea::create("a", empty_window).unwrap_err().code(),
            "INVALID_WINDOW"
        );
    }

    #[test]
    fn route_far_west_of_line_is_not_captured() {
        let area = FlowArea::create(
            "a",
            def(
                Designation::Fea,
                AreaShape::Polyline(vec![Waypoint::new(30.0, -70.0), Waypoint::new(34.0, -70.0)]),
            ),
        )
        .unwrap();
        let f = flight(
            "F1",
            0,
            vec![Waypoint::new(30.0, -90.0), Waypoint::new(34.0, -88.0)],
            450.0,
        );
        assert!(capture_flights(&area, &[f]).is_empty());
    }

    #[test]
    fn perpendicular_bisector_entry_time() {
        // Polyline north-south at lon -80 between lat 31 and 33; the flight
        // flies east along lat 32 from -81 to -79 and so meets the polyline
        // midpoint halfway along its single leg.
        let area = FlowArea::create(
            "a",
            def(
                Designation::Fea,
                AreaShape::Polyline(vec![Waypoint::new(31.0, -80.0), Waypoint::new(33.0, -80.0)]),
            ),
        )
        .unwrap();
        let start = Waypoint::new(32.0, -81.0);
        let end = Waypoint::new(32.0, -79.0);
        let length = leg_nm(start, end, start.latitude);
        // Choose a speed so the midpoint is reached exactly 1800 s after departure.
        let speed = length / 2.0 / 1800.0 * 3600.0;
        let f = flight("F1", 100, vec![start, end], speed);
        let crossings = capture_flights(&area, &[f]);
        assert_eq!(crossings.len(), 1);
        assert_eq!(crossings[0].entry_time, Timestamp(1900));
        assert!((crossings[0].entry_point.longitude + 80.0).abs() < 1e-9);
    }

    #[test]
    fn polygon_counts_only_entries() {
        let square = AreaShape::Polygon(vec![
            Waypoint::new(31.0, -81.0),
            Waypoint::new(31.0, -79.0),
            Waypoint::new(33.0, -79.0),
            Waypoint::new(33.0, -81.0),
        ]);
        let area = FlowArea::create("sq", def(Designation::Fca, square)).unwrap();
        // Departs inside and leaves: no outside-to-inside crossing.
        let outbound = flight(
            "OUT",
            0,
            vec![Waypoint::new(32.0, -80.0), Waypoint::new(32.0, -77.0)],
            450.0,
        );
        // Passes through: exactly one crossing, at the western edge.
        let through = flight(
            "THRU",
            0,
            vec![Waypoint::new(32.0, -83.0), Waypoint::new(32.0, -77.0)],
            450.0,
        );
        let crossings = capture_flights(&area, &[outbound, through]);
        assert_eq!(crossings.len(), 1);
        assert_eq!(crossings[0].flight_id, "THRU");
        assert!((crossings[0].entry_point.longitude + 81.0).abs() < 1e-9);
    }

    #[test]
    fn altitude_band_filters() {
        let area = FlowArea::create(
            "a",
            def(
                Designation::Fea,
                AreaShape::Polyline(vec![Waypoint::new(31.0, -80.0), Waypoint::new(33.0, -80.0)]),
            ),
        )
        .unwrap();
        let mut low = flight(
            "LOW",
            0,
            vec![Waypoint::new(32.0, -81.0), Waypoint::new(32.0, -79.0)],
            300.0,
        );
        low.cruise_altitude_ft = 12_000.0;
        assert!(capture_flights(&area, &[low]).is_empty());
    }

    #[test]
    fn histogram_boundaries() {
        let crossing = |t| Crossing {
            flight_id: format!("F{t}"),
            area_id: "a".into(),
            entry_time: Timestamp(t),
            entry_point: Waypoint::new(0.0, 0.0),
        };
        let cs: Vec<_> = [0, 899, 900, 1799].into_iter().map(crossing).collect();
        let h = demand_histogram("a", &cs, window(0, 1800), 900, Some(30)).unwrap();
        let counts: Vec<_> = h.bins.iter().map(|b| b.demand_count).collect();
        assert_eq!(counts, [2, 2]);
        assert_eq!(h.capacity_per_bin, Some(7.5));
        let empty = demand_histogram("a", &[], window(0, 1800), 900, None).unwrap();
        assert!(empty.bins.iter().all(|b| b.demand_count == 0));
        assert_eq!(empty.capacity_per_bin, None);
        assert_eq!(
            demand_histogram("a", &cs, window(0, 1000), 900, None),
            Err(FmdsError::MisalignedSpan)
        );
        assert_eq!(
            demand_histogram("a", &cs, window(0, 900), 0, None),
            Err(FmdsError::InvalidBinWidth(0))
        );
    }
}
