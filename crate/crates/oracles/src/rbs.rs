//! Exhaustive search over order-preserving slot assignments.

use std::collections::HashMap;

/// One captured flight input to the oracle.
#[derive(Debug, Clone)]
pub struct OracleFlight {
    pub flight_id: String,
    pub entry: i64,
    pub exempt: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Minimum total delay over controlled flights.
    pub min_total_delay: i64,
    /// Lexicographically earliest optimal consumed slot per flight, in
    /// `(entry, flight_id)` order; `None` for an exempt flight that
    /// consumes nothing.
    pub slots: Vec<Option<i64>>,
    /// Number of complete feasible assignments over the searched values.
    pub feasible_assignments: u64,
}

/// Exempt flights keep their entry; in order, each consumes it unless an
/// earlier consumed exempt slot is closer than `spacing`.
fn exempt_consumption(order: &[&OracleFlight], spacing: i64) -> Vec<Option<i64>> {
    let mut taken: Vec<i64> = Vec::new();
    order
        .iter()
        .map(|f| {
            if !f.exempt {
                return None;
            }
            if taken.iter().all(|x| (f.entry - x).abs() >= spacing) {
                taken.push(f.entry);
                Some(f.entry)
            } else {
                None
            }
        })
        .collect()
}

/// Feasible assignment: controlled flights, in `(entry, id)` order, get
/// strictly increasing integer slot times at or after their entries, every
/// pair of consumed slots (controlled and consumed exempt) at least
/// `floor(3600 / rate)` apart. Minimizes total controlled delay.
///
/// The search ranges over `base + m * spacing` for every entry or exempt
/// slot `base` and `m` up to the number of controlled flights; any optimal
/// assignment can be shifted left onto such values.
pub fn brute_force_rbs(flights: &[OracleFlight], rate: u32) -> OracleResult {
    let spacing = 3600 / rate as i64;
    search(flights, spacing, |order, exempt_slots| {
        let n = order.iter().filter(|f| !f.exempt).count() as i64;
        let mut values: Vec<i64> = order
            .iter()
            .filter(|f| !f.exempt)
            .map(|f| f.entry)
            .chain(exempt_slots.iter().copied())
            .flat_map(|b| (0..=n).map(move |m| b + m * spacing))
            .collect();
        values.sort_unstable();
        values.dedup();
        values
    })
}

/// Same search over every integer second up to a horizon that no optimal
/// assignment can pass. Only practical for small instances.
pub fn brute_force_rbs_dense(flights: &[OracleFlight], rate: u32) -> OracleResult {
    let spacing = 3600 / rate as i64;
    search(flights, spacing, |order, exempt_slots| {
        let lo = order.iter().map(|f| f.entry).min().unwrap_or(0);
        let hi = order.iter().map(|f| f.entry).max().unwrap_or(0)
            + (order.len() as i64 + exempt_slots.len() as i64 + 1) * spacing;
        (lo..=hi).collect()
    })
}

fn search(
    flights: &[OracleFlight],
    spacing: i64,
    values: impl Fn(&[&OracleFlight], &[i64]) -> Vec<i64>,
) -> OracleResult {
    let mut order: Vec<&OracleFlight> = flights.iter().collect();
    order.sort_by(|a, b| (a.entry, &a.flight_id).cmp(&(b.entry, &b.flight_id)));
    let exempt = exempt_consumption(&order, spacing);
    let exempt_slots: Vec<i64> = exempt.iter().flatten().copied().collect();
    let controlled: Vec<i64> = order.iter().filter(|f| !f.exempt).map(|f| f.entry).collect();
    let values: Vec<i64> = values(&order, &exempt_slots)
        .into_iter()
        .filter(|v| exempt_slots.iter().all(|x| (v - x).abs() >= spacing))
        .collect();

    let mut s = Search {
        controlled: &controlled,
        values: &values,
        spacing,
        memo: HashMap::new(),
    };
    let (total, _, feasible) = s.best(0, None);
    let mut chosen = Vec::new();
    let mut prev = None;
    for i in 0..controlled.len() {
        let (_, pick, _) = s.best(i, prev);
        let v = pick.expect("feasible continuation exists");
        chosen.push(values[v]);
        prev = Some(v);
    }
    let mut next = chosen.into_iter();
    let slots = order
        .iter()
        .zip(exempt)
        .map(|(f, e)| if f.exempt { e } else { next.next() })
        .collect();
    OracleResult {
        min_total_delay: total,
        slots,
        feasible_assignments: feasible,
    }
}

/// (next controlled flight, value index used by the previous one).
type MemoKey = (usize, Option<usize>);
type Best = (i64, Option<usize>, u64);

struct Search<'a> {
    controlled: &'a [i64],
    values: &'a [i64],
    spacing: i64,
    memo: HashMap<MemoKey, Best>,
}

impl Search<'_> {
    /// (best total from controlled flight `i` on, value index achieving it,
    /// number of feasible completions).
    fn best(&mut self, i: usize, prev: Option<usize>) -> Best {
        if i == self.controlled.len() {
            return (0, None, 1);
        }
        if let Some(hit) = self.memo.get(&(i, prev)) {
            return *hit;
        }
        let entry = self.controlled[i];
        let floor = prev.map(|p| self.values[p] + self.spacing);
        let mut result = (i64::MAX, None, 0u64);
        for k in 0..self.values.len() {
            let v = self.values[k];
            if v < entry || floor.is_some_and(|f| v < f) {
                continue;
            }
            let (rest, _, n) = self.best(i + 1, Some(k));
            if n == 0 {
                continue;
            }
            result.2 = result.2.saturating_add(n);
            if v - entry + rest < result.0 {
                result.0 = v - entry + rest;
                result.1 = Some(k);
            }
        }
        self.memo.insert((i, prev), result);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn f(id: &str, entry: i64, exempt: bool) -> OracleFlight {
        OracleFlight {
            flight_id: id.into(),
            entry,
            exempt,
        }
    }

    #[test]
    fn hand_traced_case() {
        let r = brute_force_rbs(&[f("A", 0, false), f("B", 10, false), f("C", 20, false)], 60);
        assert_eq!(r.min_total_delay, 150);
        assert_eq!(r.slots, vec![Some(0), Some(60), Some(120)]);
        assert!(r.feasible_assignments > 1);
    }

    #[test]
    fn candidate_values_agree_with_dense_search() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..=4);
            let flights: Vec<_> = (0..n)
                .map(|i| f(&format!("F{i}"), rng.gen_range(0..120), rng.gen_bool(0.25)))
                .collect();
            let rate = rng.gen_range(60..=240);
            let a = brute_force_rbs(&flights, rate);
            let b = brute_force_rbs_dense(&flights, rate);
            assert_eq!((a.min_total_delay, &a.slots), (b.min_total_delay, &b.slots));
        }
    }
}

/// One assignment as seen by the property checker.
#[derive(Debug, Clone)]
pub struct Assigned {
    pub flight_id: String,
    pub entry: i64,
    pub slot: i64,
    pub delay: i64,
    pub exempt: bool,
    pub consumed: Option<i64>,
}

/// Describes the first violated RBS property, if any: order preservation
/// among controlled flights, slot exclusivity with minimum spacing, no
/// early assignment, zero delay for exempt flights.
pub fn property_violation(assigned: &[Assigned], rate: u32) -> Option<String> {
    let spacing = 3600 / rate as i64;
    let mut controlled: Vec<&Assigned> = assigned.iter().filter(|a| !a.exempt).collect();
    controlled.sort_by(|a, b| (a.entry, &a.flight_id).cmp(&(b.entry, &b.flight_id)));
    for w in controlled.windows(2) {
        if w[0].slot >= w[1].slot {
            return Some(format!(
                "order: {} at {} vs {} at {}",
                w[0].flight_id, w[0].slot, w[1].flight_id, w[1].slot
            ));
        }
    }
    let mut consumed: Vec<i64> = assigned.iter().filter_map(|a| a.consumed).collect();
    consumed.sort_unstable();
    for w in consumed.windows(2) {
        if w[1] - w[0] < spacing {
            return Some(format!(
                "exclusivity: slots {} and {} closer than {spacing}",
                w[0], w[1]
            ));
        }
    }
    for a in assigned {
        if a.slot < a.entry {
            return Some(format!(
                "early: {} slot {} before entry {}",
                a.flight_id, a.slot, a.entry
            ));
        }
        if a.delay != a.slot - a.entry {
            return Some(format!("delay mismatch for {}", a.flight_id));
        }
        if a.exempt && a.delay != 0 {
            return Some(format!("exempt {} delayed {}", a.flight_id, a.delay));
        }
    }
    None
}
