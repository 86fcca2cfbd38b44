//! Dense-sampling crossing oracle: positions every whole second, with a
//! point-in-polygon test for polygons and a side-of-line test for polylines.

use fmds_core::schedule::{Flight, Waypoint};

#[derive(Debug, Clone)]
pub enum OracleShape {
    Polyline(Vec<Waypoint>),
    /// Open ring.
    Polygon(Vec<Waypoint>),
}

impl OracleShape {
    fn vertices(&self) -> &[Waypoint] {
        match self {
            OracleShape::Polyline(v) | OracleShape::Polygon(v) => v,
        }
    }
}

const R_NM: f64 = 3440.065;

/// Flat-earth leg length with longitude scaled at `ref_lat`.
fn leg_length_nm(a: Waypoint, b: Waypoint, ref_lat: f64) -> f64 {
    let dy = (b.latitude - a.latitude) * std::f64::consts::PI / 180.0;
    let dx =
        (b.longitude - a.longitude) * std::f64::consts::PI / 180.0 * (ref_lat * std::f64::consts::PI / 180.0).cos();
    R_NM * (dx * dx + dy * dy).sqrt()
}

fn leg_seconds(flight: &Flight, a: Waypoint, b: Waypoint) -> f64 {
    leg_length_nm(a, b, flight.route[0].latitude) / flight.ground_speed_kt * 3600.0
}

/// Position at absolute time `t` for a flight departing at `departure`.
fn sample_position(flight: &Flight, departure: f64, t: f64) -> Waypoint {
    let mut leg_start = departure;
    for pair in flight.route.windows(2) {
        let duration = leg_seconds(flight, pair[0], pair[1]);
        if t <= leg_start + duration {
            let s = ((t - leg_start) / duration).clamp(0.0, 1.0);
            return Waypoint::new(
                pair[0].latitude + s * (pair[1].latitude - pair[0].latitude),
                pair[0].longitude + s * (pair[1].longitude - pair[0].longitude),
            );
        }
        leg_start += duration;
    }
    *flight.route.last().unwrap()
}

fn route_duration(flight: &Flight) -> f64 {
    flight.route.windows(2).map(|p| leg_seconds(flight, p[0], p[1])).sum()
}

struct Plane {
    lat0: f64,
    lon0: f64,
    k: f64,
}

impl Plane {
    fn xy(&self, w: Waypoint) -> (f64, f64) {
        ((w.longitude - self.lon0) * self.k, w.latitude - self.lat0)
    }
}

fn inside(p: (f64, f64), ring: &[(f64, f64)]) -> bool {
    let mut c = false;
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        if ((a.1 > p.1) != (b.1 > p.1)) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            c = !c;
        }
    }
    c
}

fn side(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn straddles(p: (f64, f64), q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let d1 = side(a, b, p);
    let d2 = side(a, b, q);
    let d3 = side(p, q, a);
    let d4 = side(p, q, b);
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0 && !(d1 == 0.0 && d2 == 0.0)
}

/// `(flight_id, entry_second)` for each flight whose first qualifying
/// crossing, sampled at 1 s, falls inside `[window_start, window_end)`.
/// `departure_of` picks the departure time (scheduled or controlled).
pub fn sampled_capture(
    shape: &OracleShape,
    floor_ft: f64,
    ceiling_ft: f64,
    flights: &[Flight],
    window_start: i64,
    window_end: i64,
    departure_of: impl Fn(&Flight) -> i64,
) -> Vec<(String, i64)> {
    let verts = shape.vertices();
    let n = verts.len() as f64;
    let lat0 = verts.iter().map(|v| v.latitude).sum::<f64>() / n;
    let lon0 = verts.iter().map(|v| v.longitude).sum::<f64>() / n;
    let plane = Plane {
        lat0,
        lon0,
        k: lat0.to_radians().cos(),
    };
    let pts: Vec<(f64, f64)> = verts.iter().map(|v| plane.xy(*v)).collect();

    let mut out = Vec::new();
    for flight in flights {
        if flight.cruise_altitude_ft < floor_ft || flight.cruise_altitude_ft > ceiling_ft {
            continue;
        }
        let dep = departure_of(flight);
        let arrival = dep as f64 + route_duration(flight);
        let last = arrival.ceil() as i64 + 1;
        let mut prev = plane.xy(sample_position(flight, dep as f64, dep as f64));
        let mut prev_inside = match shape {
            OracleShape::Polygon(_) => inside(prev, &pts),
            OracleShape::Polyline(_) => false,
        };
        for t in (dep + 1)..=last {
            let cur = plane.xy(sample_position(flight, dep as f64, t as f64));
            let hit = match shape {
                OracleShape::Polygon(_) => {
                    let now_inside = inside(cur, &pts);
                    let entered = !prev_inside && now_inside;
                    prev_inside = now_inside;
                    entered
                }
                OracleShape::Polyline(_) => pts.windows(2).any(|seg| straddles(prev, cur, seg[0], seg[1])),
            };
            prev = cur;
            if hit && window_start <= t && t < window_end {
                out.push((flight.flight_id.clone(), t));
                break;
            }
        }
    }
    out.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    out
}
