use fmds_core::geometry::{
    aligned_span, capture_flights, capture_flights_within, demand_histogram, AreaShape, Crossing, DemandHistogram,
    Designation, FlowArea,
};
use fmds_core::schedule::Waypoint;
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_core::trajectory::DepartureBasis;
use fmds_oracles::capture::{sampled_capture, OracleShape};
use fmds_oracles::gen::{self, definition, random_flight, random_shape};
use fmds_oracles::scan::bin_counts;
use proptest::prelude::*;
use rand::Rng;

fn oracle_shape(shape: &AreaShape) -> OracleShape {
    match shape {
        AreaShape::Polyline(_) => OracleShape::Polyline(shape.vertices().to_vec()),
        AreaShape::Polygon(_) => OracleShape::Polygon(shape.vertices().to_vec()),
    }
}

fn area(shape: AreaShape, window: TimeWindow, floor: f64, ceiling: f64) -> FlowArea {
    let mut def = definition(Designation::Fea, shape, window);
    def.floor_ft = floor;
    def.ceiling_ft = ceiling;
    FlowArea::create("area-1", def).unwrap()
}

#[test]
fn random_pairs_match_sampling_oracle() {
    let mut rng = gen::rng(0xC0DE);
    let mut captured = 0;
    let mut worst = 0;
    for i in 0..300 {
        let shape = random_shape(&mut rng);
        let start = gen::START + rng.gen_range(0..7200);
        let window = TimeWindow::new(start, start + rng.gen_range(600..4 * 3600)).unwrap();
        let a = area(shape, window, 15_000.0, 42_000.0);
        let flight = random_flight(&mut rng, &format!("R{i}-x"));
        let got: Vec<(String, i64)> = capture_flights(&a, std::slice::from_ref(&flight))
            .into_iter()
            .map(|c| (c.flight_id, c.entry_time.secs()))
            .collect();
        let want = sampled_capture(
            &oracle_shape(&a.shape),
            a.floor_ft,
            a.ceiling_ft,
            std::slice::from_ref(&flight),
            window.start.secs(),
            window.end.secs(),
            |f| f.effective_departure().secs(),
        );
        let ids = |v: &[(String, i64)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&got), ids(&want), "pair {i}: {:?} {:?}", a.shape, flight.route);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g.1 - w.1).abs());
        }
        captured += got.len();
    }
    assert!(captured > 50, "only {captured} captures; generator too sparse");
    assert!(worst <= 1, "entry times differ by {worst} s");
}

#[test]
fn perpendicular_bisector_entry_time() {
    // Line from (31,-80) to (33,-80); flight along latitude 32 from -81 to
    // -79. At 1 deg of longitude per 1800 s the midpoint is reached 1800 s
    // after departure.
    let half_nm = fmds_core::trajectory::leg_nm(Waypoint::new(32.0, -81.0), Waypoint::new(32.0, -80.0), 32.0);
    let mut f = gen::flight(
        "P1-x",
        Timestamp(100),
        0.0,
        vec![Waypoint::new(32.0, -81.0), Waypoint::new(32.0, -79.0)],
    );
    f.ground_speed_kt = half_nm / 0.5;
    let window = TimeWindow::new(Timestamp(0), Timestamp(7200)).unwrap();
    let a = area(
        AreaShape::Polyline(vec![Waypoint::new(31.0, -80.0), Waypoint::new(33.0, -80.0)]),
        window,
        0.0,
        60_000.0,
    );
    let c = capture_flights(&a, &[f]);
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].entry_time, Timestamp(1900));
    assert!((c[0].entry_point.latitude - 32.0).abs() < 1e-6);
    assert!((c[0].entry_point.longitude + 80.0).abs() < 1e-6);
}

#[test]
fn no_intersection_no_capture() {
    let f = gen::flight(
        "W1-x",
        gen::START,
        450.0,
        vec![Waypoint::new(40.0, -90.0), Waypoint::new(41.0, -89.0)],
    );
    let window = TimeWindow::new(gen::START, gen::START + 7200).unwrap();
    let a = area(gen::gate_line(), window, 0.0, 60_000.0);
    assert!(capture_flights(&a, &[f]).is_empty());
}

#[test]
fn altitude_band_filters() {
    let mut f = gen::flight(
        "A1-x",
        gen::START,
        450.0,
        vec![Waypoint::new(40.0, -81.0), Waypoint::new(40.0, -79.0)],
    );
    let window = TimeWindow::new(gen::START, gen::START + 7200).unwrap();
    let a = area(gen::gate_line(), window, 18_000.0, 35_000.0);
    f.cruise_altitude_ft = 35_000.0;
    assert_eq!(capture_flights(&a, &[f.clone()]).len(), 1);
    f.cruise_altitude_ft = 35_001.0;
    assert!(capture_flights(&a, &[f]).is_empty());
}

#[test]
fn enlarging_the_window_never_removes_crossings() {
    let mut rng = gen::rng(77);
    for i in 0..100 {
        let shape = random_shape(&mut rng);
        let flights: Vec<_> = (0..20)
            .map(|k| random_flight(&mut rng, &format!("M{i}{k}-x")))
            .collect();
        let start = gen::START + rng.gen_range(0..3600);
        let small = TimeWindow::new(start, start + rng.gen_range(300..3600)).unwrap();
        let big = TimeWindow::new(small.start - rng.gen_range(0..3600), small.end + rng.gen_range(0..3600)).unwrap();
        let a = area(shape, small, 0.0, 60_000.0);
        let inner = capture_flights_within(&a, &flights, small, DepartureBasis::Scheduled);
        let outer = capture_flights_within(&a, &flights, big, DepartureBasis::Scheduled);
        for c in &inner {
            let o = outer.iter().find(|o| o.flight_id == c.flight_id);
            assert!(o.is_some_and(|o| o.entry_time <= c.entry_time), "{} lost", c.flight_id);
        }
    }
}

#[test]
fn subdividing_a_route_keeps_crossings() {
    let mut rng = gen::rng(78);
    for i in 0..100 {
        let shape = random_shape(&mut rng);
        let f = random_flight(&mut rng, &format!("S{i}-x"));
        let mut g = f.clone();
        let k = rng.gen_range(0..f.route.len() - 1);
        let s: f64 = rng.gen_range(0.2..0.8);
        let (p, q) = (f.route[k], f.route[k + 1]);
        g.route.insert(
            k + 1,
            Waypoint::new(
                p.latitude + s * (q.latitude - p.latitude),
                p.longitude + s * (q.longitude - p.longitude),
            ),
        );
        let window = TimeWindow::new(gen::START, gen::START + 6 * 3600).unwrap();
        let a = area(shape, window, 0.0, 60_000.0);
        let cf = capture_flights(&a, &[f]);
        let cg = capture_flights(&a, &[g]);
        assert_eq!(cf.len(), cg.len(), "pair {i}");
        for (x, y) in cf.iter().zip(&cg) {
            assert!(
                (x.entry_time - y.entry_time).abs() <= 1,
                "pair {i}: {:?} vs {:?}",
                x.entry_time,
                y.entry_time
            );
        }
    }
}

#[test]
fn capture_is_deterministic_and_sorted() {
    let mut rng = gen::rng(79);
    let flights: Vec<_> = (0..200)
        .map(|k| random_flight(&mut rng, &format!("D{k:03}-x")))
        .collect();
    let window = TimeWindow::new(gen::START, gen::START + 6 * 3600).unwrap();
    let a = area(gen::box_polygon(1.0), window, 0.0, 60_000.0);
    let x = capture_flights(&a, &flights);
    let y = capture_flights(&a, &flights);
    assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
    assert!(x
        .windows(2)
        .all(|w| (w[0].entry_time, &w[0].flight_id) <= (w[1].entry_time, &w[1].flight_id)));
}

#[test]
fn boundary_bins() {
    let h = DemandHistogram::from_times(
        "a",
        [0, 899, 900, 1799].map(Timestamp),
        TimeWindow::new(Timestamp(0), Timestamp(1800)).unwrap(),
        900,
        None,
    )
    .unwrap();
    assert_eq!(h.bins.iter().map(|b| b.demand_count).collect::<Vec<_>>(), vec![2, 2]);
    assert_eq!(h.capacity_per_bin, None);
}

#[test]
fn histogram_errors() {
    let span = TimeWindow::new(Timestamp(0), Timestamp(1000)).unwrap();
    assert_eq!(
        demand_histogram("a", &[], span, 900, None).unwrap_err().code(),
        "MISALIGNED_SPAN"
    );
    assert_eq!(
        demand_histogram("a", &[], span, 0, None).unwrap_err().code(),
        "INVALID_BIN_WIDTH"
    );
    let h = demand_histogram("a", &[], aligned_span(span, 900), 900, Some(30)).unwrap();
    assert!(h.bins.iter().all(|b| b.demand_count == 0));
    assert_eq!(h.capacity_per_bin, Some(7.5));
}

#[test]
fn three_hundred_crossings_match_brute_force_binning() {
    let mut rng = gen::rng(80);
    let times: Vec<i64> = (0..300).map(|_| rng.gen_range(-3600..4 * 3600)).collect();
    let crossings: Vec<Crossing> = times
        .iter()
        .enumerate()
        .map(|(i, t)| Crossing {
            flight_id: format!("F{i}"),
            area_id: "a".into(),
            entry_time: Timestamp(*t),
            entry_point: Waypoint::new(0.0, 0.0),
        })
        .collect();
    let span = TimeWindow::new(Timestamp(0), Timestamp(3 * 3600)).unwrap();
    let h = demand_histogram("a", &crossings, span, 900, None).unwrap();
    let counts: Vec<u32> = h.bins.iter().map(|b| b.demand_count).collect();
    assert_eq!(counts, bin_counts(&times, 0, 3 * 3600, 900));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn histogram_conserves_crossings(
        times in prop::collection::vec(-20_000i64..40_000, 0..200),
        width in prop::sample::select(vec![60i64, 300, 900, 1800, 3600]),
        first_bin in -20i64..20,
        bins in 1i64..40,
    ) {
        let start = first_bin * width;
        let end = start + bins * width;
        let span = TimeWindow::new(Timestamp(start), Timestamp(end)).unwrap();
        let h = DemandHistogram::from_times("a", times.iter().map(|t| Timestamp(*t)), span, width, Some(30)).unwrap();
        let in_span = times.iter().filter(|t| start <= **t && **t < end).count() as u64;
        prop_assert_eq!(h.total(), in_span);
        let counts: Vec<u32> = h.bins.iter().map(|b| b.demand_count).collect();
        prop_assert_eq!(counts, bin_counts(&times, start, end, width));
        prop_assert!(h.bins.windows(2).all(|w| w[1].bin_start - w[0].bin_start == width));
    }
}
