//! Constant-ground-speed flight timing along a waypoint route.
//!
//! Positions within a leg move linearly in latitude/longitude. Leg lengths
//! use a flat-earth metric scaled at the route's first latitude, which makes
//! length proportional to the lat/lon parameter: splitting a leg at any
//! point on it leaves every timing unchanged.

use crate::schedule::{Flight, Waypoint};
use crate::time::Timestamp;

pub const EARTH_RADIUS_NM: f64 = 3440.065;

/// Length of the straight lat/lon segment `a -> b` with longitude scaled
/// by `cos(ref_lat)`.
pub fn leg_nm(a: Waypoint, b: Waypoint, ref_lat: f64) -> f64 {
    let dlat = (b.latitude - a.latitude).to_radians();
    let dlon = (b.longitude - a.longitude).to_radians() * ref_lat.to_radians().cos();
    EARTH_RADIUS_NM * dlat.hypot(dlon)
}

/// Which departure time drives the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepartureBasis {
    /// Uncontrolled: the scheduled departure.
    Scheduled,
    /// Controlled: the EDCT when one is set.
    Effective,
}

#[derive(Debug, Clone, Copy)]
pub struct Leg {
    pub from: Waypoint,
    pub to: Waypoint,
    /// Absolute time (epoch seconds) at which the leg starts.
    pub start: f64,
    pub duration: f64,
}

impl Leg {
    pub fn time_at(&self, fraction: f64) -> f64 {
        self.start + fraction * self.duration
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub departure: Timestamp,
    pub legs: Vec<Leg>,
}

impl Trajectory {
    pub fn of(flight: &Flight, basis: DepartureBasis) -> Self {
        let departure = match basis {
            DepartureBasis::Scheduled => flight.scheduled_departure,
            DepartureBasis::Effective => flight.effective_departure(),
        };
        let mut clock = departure.secs() as f64;
        let ref_lat = flight.route.first().map_or(0.0, |w| w.latitude);
        let legs = flight
            .route
            .windows(2)
            .map(|pair| {
                let duration = leg_nm(pair[0], pair[1], ref_lat) / flight.ground_speed_kt * 3600.0;
                let leg = Leg {
                    from: pair[0],
                    to: pair[1],
                    start: clock,
                    duration,
                };
                clock += duration;
                leg
            })
            .collect();
        Trajectory { departure, legs }
    }

    /// Fractional arrival time at the last waypoint.
    pub fn arrival(&self) -> f64 {
        self.legs
            .last()
            .map_or(self.departure.secs() as f64, |leg| leg.start + leg.duration)
    }

    /// First whole second at or after arrival.
    pub fn arrival_second(&self) -> Timestamp {
        Timestamp(ceil_second(self.arrival()))
    }

    /// Position while airborne, `None` before departure or after arrival.
    pub fn position_at(&self, t: f64) -> Option<Waypoint> {
        if t < self.departure.secs() as f64 || t > self.arrival() {
            return None;
        }
        let leg = self
            .legs
            .iter()
            .find(|leg| t <= leg.start + leg.duration)
            .or(self.legs.last())?;
        let fraction = if leg.duration > 0.0 {
            ((t - leg.start) / leg.duration).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Some(Waypoint::new(
            leg.from.latitude + (leg.to.latitude - leg.from.latitude) * fraction,
            leg.from.longitude + (leg.to.longitude - leg.from.longitude) * fraction,
        ))
    }
}

/// Rounds a fractional time up to the whole second, absorbing float noise
/// so that exact integer instants stay put.
pub fn ceil_second(t: f64) -> i64 {
    (t - 1e-6).ceil() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ExemptCategory;

    fn flight(route: Vec<Waypoint>, speed: f64) -> Flight {
        Flight {
            flight_id: "F1".into(),
            callsign: "F1".into(),
            origin: "AAAA".into(),
            destination: "BBBB".into(),
            scheduled_departure: Timestamp(1000),
            cruise_altitude_ft: 35000.0,
            ground_speed_kt: speed,
            route,
            exempt_category: ExemptCategory::None,
            edct: Some(Timestamp(1600)),
            controlling_afp: None,
        }
    }

    #[test]
    fn leg_lengths() {
        let d = leg_nm(Waypoint::new(0.0, 0.0), Waypoint::new(1.0, 0.0), 0.0);
        assert!((d - 60.04).abs() < 0.01, "{d}");
        let e = leg_nm(Waypoint::new(60.0, 0.0), Waypoint::new(60.0, 1.0), 60.0);
        assert!((e - 30.02).abs() < 0.01, "{e}");
        // Splitting a leg splits its length exactly.
        let (a, b) = (Waypoint::new(40.0, -81.0), Waypoint::new(43.0, -75.0));
        let m = Waypoint::new(41.0, -79.0);
        assert!((leg_nm(a, m, 40.0) + leg_nm(m, b, 40.0) - leg_nm(a, b, 40.0)).abs() < 1e-9);
    }

    #[test]
    fn basis_selects_departure() {
        let f = flight(vec![Waypoint::new(0.0, 0.0), Waypoint::new(1.0, 0.0)], 360.0);
        let scheduled = Trajectory::of(&f, DepartureBasis::Scheduled);
        let effective = Trajectory::of(&f, DepartureBasis::Effective);
        assert_eq!(scheduled.departure, Timestamp(1000));
        assert_eq!(effective.departure, Timestamp(1600));
        assert!((effective.arrival() - scheduled.arrival() - 600.0).abs() < 1e-9);
    }

    #[test]
    fn midpoint_position() {
        let f = flight(vec![Waypoint::new(10.0, 20.0), Waypoint::new(12.0, 24.0)], 480.0);
        let traj = Trajectory::of(&f, DepartureBasis::Scheduled);
        let mid = traj.position_at((1000.0 + traj.arrival()) / 2.0).unwrap();
        assert!((mid.latitude - 11.0).abs() < 1e-6 && (mid.longitude - 22.0).abs() < 1e-6);
        assert!(traj.position_at(999.0).is_none());
    }
}
