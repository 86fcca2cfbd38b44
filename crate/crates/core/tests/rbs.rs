use std::time::Instant;

use fmds_core::geometry::{capture_flights_within, Designation, FlowArea};
use fmds_core::scenario::{generate_flights, ScenarioConfig};
use fmds_core::schedule::{ExemptCategory, Waypoint};
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_core::tmi::{
    compare_cards, model_afp, ration_by_schedule, AfpParameters, DataCard, Eligibility, RbsCandidate, SlotAssignment,
};
use fmds_core::trajectory::DepartureBasis;
use fmds_oracles::capture::{sampled_capture, OracleShape};
use fmds_oracles::gen::{self, box_polygon, definition, gate_line, rbs_instance};
use fmds_oracles::rbs::{brute_force_rbs, property_violation, Assigned, OracleFlight};

fn fca(shape: fmds_core::geometry::AreaShape, window: TimeWindow) -> FlowArea {
    FlowArea::create("area-1", definition(Designation::Fca, shape, window)).unwrap()
}

fn params(rate: u32, window: TimeWindow, exempt: &[ExemptCategory]) -> AfpParameters {
    AfpParameters {
        area_id: "area-1".into(),
        rate,
        window,
        exempt_categories: exempt.iter().copied().collect(),
    }
}

fn candidate(id: &str, entry: i64, exempt: bool) -> RbsCandidate {
    RbsCandidate {
        flight_id: id.into(),
        original_entry: Timestamp(entry),
        scheduled_departure: Timestamp(entry - 600),
        exempt,
        not_before: Timestamp(entry),
    }
}

fn as_checked(assignments: &[SlotAssignment]) -> Vec<Assigned> {
    assignments
        .iter()
        .map(|a| Assigned {
            flight_id: a.flight_id.clone(),
            entry: a.original_entry.secs(),
            slot: a.assigned_slot.secs(),
            delay: a.delay_seconds,
            exempt: a.eligibility == Eligibility::Exempt,
            consumed: a.consumed_slot.map(|s| s.secs()),
        })
        .collect()
}

#[test]
fn hand_traced_three_flights() {
    let out = ration_by_schedule(
        &[
            candidate("A", 0, false),
            candidate("B", 10, false),
            candidate("C", 20, false),
        ],
        60,
        &[],
    );
    let slots: Vec<i64> = out.iter().map(|a| a.assigned_slot.secs()).collect();
    let delays: Vec<i64> = out.iter().map(|a| a.delay_seconds).collect();
    assert_eq!(slots, vec![0, 60, 120]);
    assert_eq!(delays, vec![0, 50, 100]);
    let oracle = brute_force_rbs(
        &[
            OracleFlight {
                flight_id: "A".into(),
                entry: 0,
                exempt: false,
            },
            OracleFlight {
                flight_id: "B".into(),
                entry: 10,
                exempt: false,
            },
            OracleFlight {
                flight_id: "C".into(),
                entry: 20,
                exempt: false,
            },
        ],
        60,
    );
    assert_eq!(oracle.min_total_delay, delays.iter().sum::<i64>());
}

#[test]
fn model_afp_matches_brute_force_on_small_instances() {
    let mut rng = gen::rng(0xAF9);
    for round in 0..200 {
        let inst = rbs_instance(&mut rng, 10);
        let area = fca(gate_line(), inst.window);
        let p = params(inst.rate, inst.window, &[ExemptCategory::Lifeguard]);
        let (assignments, card) = model_afp(&area, &p, &inst.flights).unwrap();

        let entries = sampled_capture(
            &OracleShape::Polyline(area.shape.vertices().to_vec()),
            area.floor_ft,
            area.ceiling_ft,
            &inst.flights,
            inst.window.start.secs(),
            inst.window.end.secs(),
            |f| f.scheduled_departure.secs(),
        );
        let oracle_flights: Vec<OracleFlight> = entries
            .iter()
            .map(|(id, entry)| OracleFlight {
                flight_id: id.clone(),
                entry: *entry,
                exempt: inst
                    .flights
                    .iter()
                    .any(|f| &f.flight_id == id && f.exempt_category == ExemptCategory::Lifeguard),
            })
            .collect();
        let oracle = brute_force_rbs(&oracle_flights, inst.rate);

        assert_eq!(card.total_delay_seconds, oracle.min_total_delay, "round {round}");
        let slots: Vec<Option<i64>> = assignments
            .iter()
            .map(|a| match a.eligibility {
                Eligibility::Controlled => Some(a.assigned_slot.secs()),
                Eligibility::Exempt => a.consumed_slot.map(|s| s.secs()),
            })
            .collect();
        assert_eq!(slots, oracle.slots, "round {round}");
    }
}

#[test]
fn properties_hold_at_scale() {
    let cfg = ScenarioConfig {
        flights: 200,
        spread_seconds: 3 * 3600,
        ..Default::default()
    };
    let flights = generate_flights(&cfg);
    let window = TimeWindow::new(cfg.start, cfg.start + 4 * 3600).unwrap();
    let area = fca(box_polygon(1.0), window);
    let p = params(30, window, &[ExemptCategory::Lifeguard, ExemptCategory::International]);
    let t0 = Instant::now();
    let (assignments, card) = model_afp(&area, &p, &flights).unwrap();
    let elapsed = t0.elapsed();
    assert!(assignments.len() >= 100, "captured {}", assignments.len());
    assert!(card.flights_delayed > 0);
    assert!(card.flights_exempt > 0);
    assert_eq!(property_violation(&as_checked(&assignments), 30), None);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
}

#[test]
fn uncongested_schedule_has_no_delay() {
    // Entries 300 s apart; rate 12 gives 300 s spacing.
    let window = TimeWindow::new(gen::START, gen::START + 3600).unwrap();
    let flights: Vec<_> = (0..10)
        .map(|i| {
            gen::flight(
                &format!("U{i}-x"),
                gen::START + i * 300,
                450.0,
                vec![Waypoint::new(40.0, -81.0), Waypoint::new(40.0, -79.0)],
            )
        })
        .collect();
    let area = fca(gate_line(), window);
    let (assignments, card) = model_afp(&area, &params(12, window, &[]), &flights).unwrap();
    assert_eq!(assignments.len(), 10);
    assert!(assignments.iter().all(|a| a.delay_seconds == 0));
    assert_eq!(card.flights_delayed, 0);
    assert_eq!(card.total_delay_seconds, 0);
}

#[test]
fn model_is_pure() {
    let cfg = ScenarioConfig::default();
    let flights = generate_flights(&cfg);
    let before = flights.clone();
    let window = TimeWindow::new(cfg.start, cfg.start + 3 * 3600).unwrap();
    let area = fca(box_polygon(1.0), window);
    let p = params(20, window, &[]);
    let a = model_afp(&area, &p, &flights).unwrap();
    let b = model_afp(&area, &p, &flights).unwrap();
    assert_eq!(a, b);
    assert_eq!(flights, before);
}

#[test]
fn slots_continue_past_window() {
    let cands: Vec<_> = (0..5).map(|i| candidate(&format!("F{i}"), i, false)).collect();
    let out = ration_by_schedule(&cands, 60, &[]);
    let slots: Vec<i64> = out.iter().map(|a| a.assigned_slot.secs()).collect();
    assert_eq!(slots, vec![0, 60, 120, 180, 240]);
}

#[test]
fn capture_for_rbs_uses_scheduled_trajectories() {
    let window = TimeWindow::new(gen::START, gen::START + 3600).unwrap();
    let mut f = gen::flight(
        "E1-x",
        gen::START,
        450.0,
        vec![Waypoint::new(40.0, -81.0), Waypoint::new(40.0, -79.0)],
    );
    f.edct = Some(gen::START + 7200);
    let area = fca(gate_line(), window);
    let scheduled = capture_flights_within(&area, &[f.clone()], window, DepartureBasis::Scheduled);
    let (assignments, _) = model_afp(&area, &params(30, window, &[]), &[f]).unwrap();
    assert_eq!(assignments.len(), 1);
    assert_eq!(assignments[0].original_entry, scheduled[0].entry_time);
}

fn card_with(total: i64, id: &str) -> DataCard {
    let window = TimeWindow::new(Timestamp(0), Timestamp(3600)).unwrap();
    let mut card = DataCard::summarize(Some(id), &params(60, window, &[]), vec![]).unwrap();
    card.total_delay_seconds = total;
    card.card_id = id.into();
    card
}

#[test]
fn compare_orders_by_total_delay() {
    let a = card_with(150, "card-a");
    let b = card_with(90, "card-b");
    let rows = compare_cards(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(rows[0].card_id, "card-b");
    assert_eq!(rows[1].delta.total_delay_seconds, 60);
    assert_eq!(rows, compare_cards(&[b, a.clone()]).unwrap());
    let single = compare_cards(&[a]).unwrap();
    assert_eq!(single[0].delta.total_delay_seconds, 0);
    assert_eq!(compare_cards(&[]).unwrap_err().code(), "EMPTY_INPUT");
}

#[test]
fn exemptions_are_zero_delay_and_excluded_from_average() {
    let window = TimeWindow::new(Timestamp(0), Timestamp(3600)).unwrap();
    let out = ration_by_schedule(
        &[
            candidate("A", 0, true),
            candidate("B", 0, false),
            candidate("C", 0, false),
        ],
        60,
        &[],
    );
    let p = params(60, window, &[ExemptCategory::Lifeguard]);
    let card = DataCard::summarize(None, &p, out.clone()).unwrap();
    let a = out.iter().find(|a| a.flight_id == "A").unwrap();
    assert_eq!(a.delay_seconds, 0);
    assert_eq!(a.consumed_slot, Some(Timestamp(0)));
    assert_eq!(card.flights_exempt, 1);
    assert_eq!(card.total_delay_seconds, 60 + 120);
    assert!((card.average_delay_seconds - 90.0).abs() < 1e-9);
}
