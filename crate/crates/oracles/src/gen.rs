//! Seeded generators for random test instances.

use std::collections::BTreeSet;

use fmds_core::engine::{AreaRequest, Command};
use fmds_core::geometry::{AreaDefinition, AreaShape, Designation};
use fmds_core::schedule::{ExemptCategory, Flight, Waypoint};
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_core::tmi::AfpParameters;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const CENTER: Waypoint = Waypoint::new(40.0, -80.0);
pub const START: Timestamp = Timestamp(1_717_236_000);

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

pub fn flight(id: &str, departure: Timestamp, speed: f64, route: Vec<Waypoint>) -> Flight {
    Flight {
        flight_id: id.into(),
        callsign: id.split('-').next().unwrap_or(id).into(),
        origin: "KAAA".into(),
        destination: "KBBB".into(),
        scheduled_departure: departure,
        cruise_altitude_ft: 35_000.0,
        ground_speed_kt: speed,
        route,
        exempt_category: ExemptCategory::None,
        edct: None,
        controlling_afp: None,
    }
}

/// A north-south line through `CENTER`.
pub fn gate_line() -> AreaShape {
    AreaShape::Polyline(vec![Waypoint::new(38.5, -80.0), Waypoint::new(41.5, -80.0)])
}

/// Axis-aligned box of half-size `half` degrees around `CENTER`.
pub fn box_polygon(half: f64) -> AreaShape {
    let (la, lo) = (CENTER.latitude, CENTER.longitude);
    AreaShape::Polygon(vec![
        Waypoint::new(la - half, lo - half),
        Waypoint::new(la - half, lo + half),
        Waypoint::new(la + half, lo + half),
        Waypoint::new(la + half, lo - half),
    ])
}

pub fn definition(designation: Designation, shape: AreaShape, window: TimeWindow) -> AreaDefinition {
    AreaDefinition {
        designation,
        shape,
        floor_ft: 0.0,
        ceiling_ft: 60_000.0,
        active_window: window,
        name: String::new(),
    }
}

/// Small RBS instance: flights flying due east across `gate_line` with
/// departures on a coarse grid, so entries tie and congest. Some flights
/// carry the LIFEGUARD category.
#[derive(Debug, Clone)]
pub struct RbsInstance {
    pub flights: Vec<Flight>,
    pub rate: u32,
    pub window: TimeWindow,
}

pub fn rbs_instance(rng: &mut impl Rng, max_flights: usize) -> RbsInstance {
    let n = rng.gen_range(1..=max_flights);
    let rate = rng.gen_range(4..=60);
    let window = TimeWindow {
        start: START,
        end: START + 3600,
    };
    let flights = (0..n)
        .map(|i| {
            let dep = START + rng.gen_range(0..100) * 30 - 300;
            let mut f = flight(
                &format!("F{i:02}-{i}"),
                dep,
                450.0,
                vec![Waypoint::new(40.0, -81.0), Waypoint::new(40.0, -79.0)],
            );
            if rng.gen_bool(0.2) {
                f.exempt_category = ExemptCategory::Lifeguard;
            }
            f
        })
        .collect();
    RbsInstance { flights, rate, window }
}

/// Random area shape near `CENTER`: a polyline of 2..4 vertices or a
/// star-shaped polygon of 3..8 vertices.
pub fn random_shape(rng: &mut impl Rng) -> AreaShape {
    let c = Waypoint::new(
        CENTER.latitude + rng.gen_range(-1.0..1.0),
        CENTER.longitude + rng.gen_range(-1.0..1.0),
    );
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(2..=4);
        let mut lat = c.latitude - 1.5;
        let pts = (0..n)
            .map(|_| {
                lat += rng.gen_range(0.3..1.2);
                Waypoint::new(round4(lat), round4(c.longitude + rng.gen_range(-0.6..0.6)))
            })
            .collect();
        AreaShape::Polyline(pts)
    } else {
        let n = rng.gen_range(3..=8);
        let step = std::f64::consts::TAU / n as f64;
        let pts = (0..n)
            .map(|k| {
                let a = k as f64 * step + rng.gen_range(-0.3..0.3) * step;
                let r = rng.gen_range(0.4..1.5);
                Waypoint::new(round4(c.latitude + r * a.cos()), round4(c.longitude + r * a.sin()))
            })
            .collect();
        AreaShape::Polygon(pts)
    }
}

/// Flight crossing the `CENTER` neighbourhood on a random bearing, with
/// 2..4 waypoints.
pub fn random_flight(rng: &mut impl Rng, id: &str) -> Flight {
    let bearing: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = rng.gen_range(2.5..4.0);
    let at = |b: f64, r: f64| {
        Waypoint::new(
            round4(CENTER.latitude + r * b.cos()),
            round4(CENTER.longitude + r * b.sin() / CENTER.latitude.to_radians().cos()),
        )
    };
    let mut route = vec![at(bearing, r)];
    for _ in 0..rng.gen_range(0..=2) {
        route.push(at(rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..1.5)));
    }
    route.push(at(bearing + std::f64::consts::PI + rng.gen_range(-0.6..0.6), r));
    route.dedup();
    let mut f = flight(
        id,
        START + rng.gen_range(0..3600),
        rng.gen_range(300..=520) as f64,
        route,
    );
    f.cruise_altitude_ft = rng.gen_range(10..=45) as f64 * 1000.0;
    f
}

/// Static lifecycle script of `len` commands. Identifiers are guessed from
/// the engine's sequential naming, so some commands fail; failures must
/// leave no trace. Advance targets are strictly increasing.
pub fn lifecycle_script(seed: u64, len: usize) -> Vec<Command> {
    let mut rng = rng(seed);
    let mut now = START;
    let mut areas = 0usize;
    let mut afps = 0usize;
    let mut script = Vec::with_capacity(len);
    let categories = [ExemptCategory::Lifeguard, ExemptCategory::International];

    let window_near = |rng: &mut ChaCha8Rng, now: Timestamp| {
        let start = (now + rng.gen_range(-1800..5400)).floor_to(300);
        TimeWindow {
            start,
            end: start + rng.gen_range(2..=12) * 900,
        }
    };

    while script.len() < len {
        let roll = if areas == 0 { 0 } else { rng.gen_range(0..100) };
        let area_id = format!("area-{}", rng.gen_range(1..=areas.max(1)));
        let afp_id = format!("afp-{}", rng.gen_range(1..=afps.max(1) + 1));
        let mut exempt = BTreeSet::new();
        if rng.gen_bool(0.3) {
            exempt.insert(*categories.choose(&mut rng).unwrap());
        }
        let params = AfpParameters {
            area_id,
            rate: rng.gen_range(10..=60),
            window: window_near(&mut rng, now),
            exempt_categories: exempt,
        };
        let cmd = match roll {
            0..=9 => {
                areas += 1;
                let fca = areas == 1 || rng.gen_bool(0.7);
                let shape = if fca {
                    box_polygon(rng.gen_range(0.5..1.5))
                } else {
                    gate_line()
                };
                let designation = if fca { Designation::Fca } else { Designation::Fea };
                let active = TimeWindow {
                    start: START,
                    end: START + 8 * 3600,
                };
                let rate = (fca && rng.gen_bool(0.6)).then(|| rng.gen_range(10..=60));
                Command::CreateArea {
                    request: AreaRequest {
                        definition: definition(designation, shape, active),
                        rate,
                        exempt_categories: BTreeSet::new(),
                        program_window: None,
                    },
                }
            }
            10..=17 => Command::ModelAfp { params },
            18..=27 => {
                afps += 1;
                Command::ProposeAfp { params }
            }
            28..=45 => {
                let from_proposal = rng.gen_bool(0.4);
                if !from_proposal {
                    afps += 1;
                }
                Command::ImplementAfp {
                    params,
                    schedule_only: rng.gen_bool(0.5),
                    proposal_id: from_proposal.then_some(afp_id),
                }
            }
            46..=60 => Command::ReviseAfp {
                afp_id,
                new_rate: rng.gen_bool(0.7).then(|| rng.gen_range(10..=60)),
                new_window: rng.gen_bool(0.4).then(|| window_near(&mut rng, now)),
                reason: "script".into(),
            },
            61..=70 => Command::PurgeAfp { afp_id },
            71..=76 => Command::AddNote {
                subject_id: afp_id,
                text: "note".into(),
            },
            _ => {
                now = now + rng.gen_range(60..=1800);
                Command::Advance { to: now }
            }
        };
        script.push(cmd);
    }
    script
}

/// Increasing advance targets starting after `from`, splitting
/// `[from, to]` at `cuts` random points.
pub fn split_points(rng: &mut impl Rng, from: Timestamp, to: Timestamp, cuts: usize) -> Vec<Timestamp> {
    let mut pts: Vec<i64> = (0..cuts).map(|_| rng.gen_range(from.secs()..=to.secs())).collect();
    pts.push(to.secs());
    pts.sort_unstable();
    pts.into_iter().map(Timestamp).collect()
}
