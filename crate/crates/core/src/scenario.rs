//! Seeded synthetic scenarios: flights streaming across a region of
//! interest and constraint overlays around it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schedule::{ConstraintOverlay, ExemptCategory, Flight, OverlayKind, Severity, Waypoint};
use crate::time::{TimeWindow, Timestamp};

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub flights: usize,
    pub start: Timestamp,
    /// Departures are spread uniformly over `[start, start + spread)`.
    pub spread_seconds: i64,
    pub center: Waypoint,
    /// Routes begin and end roughly this far (degrees) from the center.
    pub radius_deg: f64,
    /// Share of flights carrying a non-NONE exemption category.
    pub exempt_share: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 7,
            flights: 200,
            start: Timestamp(1_717_236_000), // 2024-06-01T10:00:00Z
            spread_seconds: 4 * 3600,
            center: Waypoint::new(40.0, -80.0),
            radius_deg: 4.0,
            exempt_share: 0.1,
        }
    }
}

const AIRLINES: [&str; 6] = ["DAL", "AAL", "UAL", "SWA", "JBU", "ASA"];

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

fn offset(center: Waypoint, bearing: f64, dist_deg: f64) -> Waypoint {
    let lat = center.latitude + dist_deg * bearing.cos();
    let lon = center.longitude + dist_deg * bearing.sin() / center.latitude.to_radians().cos();
    Waypoint::new(round4(lat.clamp(-89.0, 89.0)), round4(lon.clamp(-179.0, 179.0)))
}

fn airport(rng: &mut impl Rng) -> String {
    let letters: String = (0..3).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect();
    format!("K{letters}")
}

pub fn generate_flights(cfg: &ScenarioConfig) -> Vec<Flight> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut flights: Vec<Flight> = (0..cfg.flights)
        .map(|i| {
            let bearing = rng.gen_range(0.0..std::f64::consts::TAU);
            let r_in = cfg.radius_deg * rng.gen_range(1.0..1.5);
            let r_out = cfg.radius_deg * rng.gen_range(1.0..1.5);
            let from = offset(cfg.center, bearing, r_in);
            let to = offset(
                cfg.center,
                bearing + std::f64::consts::PI + rng.gen_range(-0.5..0.5),
                r_out,
            );
            let mid = offset(
                cfg.center,
                rng.gen_range(0.0..std::f64::consts::TAU),
                cfg.radius_deg * rng.gen_range(0.0..0.4),
            );
            let route = if rng.gen_bool(0.5) && mid != from && mid != to {
                vec![from, mid, to]
            } else {
                vec![from, to]
            };
            let airline = AIRLINES.choose(&mut rng).expect("non-empty");
            let callsign = format!("{airline}{}", rng.gen_range(100..10_000));
            let exempt_category = if rng.gen_bool(cfg.exempt_share.clamp(0.0, 1.0)) {
                *[
                    ExemptCategory::Airborne,
                    ExemptCategory::International,
                    ExemptCategory::Lifeguard,
                ]
                .choose(&mut rng)
                .expect("non-empty")
            } else {
                ExemptCategory::None
            };
            Flight {
                flight_id: format!("{callsign}-{i:04}"),
                callsign,
                origin: airport(&mut rng),
                destination: airport(&mut rng),
                scheduled_departure: cfg.start + rng.gen_range(0..cfg.spread_seconds.max(1)),
                cruise_altitude_ft: rng.gen_range(24..=41) as f64 * 1000.0,
                ground_speed_kt: rng.gen_range(380..=520) as f64,
                route,
                exempt_category,
                edct: None,
                controlling_afp: None,
            }
        })
        .collect();
    crate::schedule::sort_flights(&mut flights);
    flights
}

/// Star-shaped (hence simple) polygons scattered around the center.
pub fn generate_overlays(cfg: &ScenarioConfig, count: usize) -> Vec<ConstraintOverlay> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let kinds = [
        OverlayKind::Weather,
        OverlayKind::SpaceLaunch,
        OverlayKind::Sua,
        OverlayKind::Other,
    ];
    let severities = [Severity::Info, Severity::Moderate, Severity::Severe];
    (0..count)
        .map(|i| {
            let center = offset(
                cfg.center,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..cfg.radius_deg),
            );
            let n = rng.gen_range(3..9);
            // Evenly spaced bearings with jitter keep every gap below a half
            // turn, so the ring is star-shaped about its center.
            let step = std::f64::consts::TAU / n as f64;
            let angles: Vec<f64> = (0..n)
                .map(|k| k as f64 * step + rng.gen_range(-0.3..0.3) * step)
                .collect();
            let polygon = angles
                .iter()
                .map(|a| offset(center, *a, rng.gen_range(0.3..1.2)))
                .collect();
            let start = cfg.start + rng.gen_range(0..cfg.spread_seconds.max(1));
            ConstraintOverlay {
                overlay_id: format!("ovl-{}", i + 1),
                kind: kinds[i % kinds.len()],
                polygon,
                active_window: TimeWindow {
                    start,
                    end: start + rng.gen_range(1800..4 * 3600),
                },
                severity: *severities.choose(&mut rng).expect("non-empty"),
                label: format!("constraint {}", i + 1),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_flights_are_valid_and_deterministic() {
        let cfg = ScenarioConfig {
            flights: 100,
            ..Default::default()
        };
        let a = generate_flights(&cfg);
        assert_eq!(a, generate_flights(&cfg));
        assert!(a.iter().all(|f| f.validate().is_ok()));
        for o in generate_overlays(&cfg, 12) {
            crate::schedule::check_polygon(&o.polygon).unwrap();
        }
    }
}
