use super::*;
use crate::vehicle::{ModeGear, VehicleParams};
use alloc::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt(s: f64, alpha: f64, v_min: f64, v_max: f64) -> RoutePoint {
    RoutePoint { s, alpha, v_min, v_max }
}

#[test]
fn three_row_profile() {
    let r = RouteProfile::new(vec![
        pt(0.0, 0.0, 2.0, 20.0),
        pt(500.0, 0.01, 2.0, 25.0),
        pt(1000.0, 0.0, 2.0, 25.0),
    ])
    .unwrap();
    assert_eq!(r.points().len(), 3);
    assert_eq!(r.length(), 1000.0);
    assert_eq!(r.at(499.0).v_max, 20.0);
    assert_eq!(r.at(500.0).v_max, 25.0);
}

#[test]
fn invalid_rows_are_named() {
    let err = RouteProfile::new(vec![pt(0.0, 0.0, 2.0, 20.0), pt(10.0, 0.0, 21.0, 20.0)]).unwrap_err();
    assert!(matches!(err, RouteError::BoundsInverted { index: 1, .. }));
    let err = RouteProfile::new(vec![pt(0.0, 0.0, 2.0, 20.0), pt(0.0, 0.0, 2.0, 20.0)]).unwrap_err();
    assert_eq!(err, RouteError::NotIncreasing { index: 1 });
    let err = RouteProfile::new(vec![pt(5.0, 0.0, 2.0, 20.0), pt(10.0, 0.0, 2.0, 20.0)]).unwrap_err();
    assert_eq!(err, RouteError::NotIncreasing { index: 0 });
    let err = RouteProfile::new(vec![pt(0.0, f64::NAN, 2.0, 20.0), pt(10.0, 0.0, 2.0, 20.0)]).unwrap_err();
    assert_eq!(err, RouteError::InvalidValue { index: 0 });
    assert_eq!(RouteProfile::new(vec![pt(0.0, 0.0, 2.0, 20.0)]).unwrap_err(), RouteError::TooShort);
}

#[test]
fn constant_route_resamples_to_constants() {
    let r = RouteProfile::new(vec![pt(0.0, 0.01, 5.0, 22.0), pt(2000.0, 0.01, 5.0, 22.0)]).unwrap();
    let h = r.resample(100.0, 40, 25.0).unwrap();
    assert_eq!(h.alpha, vec![0.01; 40]);
    assert_eq!(h.v_min, vec![5.0; 41]);
    assert_eq!(h.v_max, vec![22.0; 41]);
    assert!(matches!(
        r.resample(100.0, 100, 25.0),
        Err(RouteError::HorizonExceedsRoute { .. })
    ));
    // exactly up to the end is fine
    assert!(r.resample(0.0, 80, 25.0).is_ok());
}

#[test]
fn step_inside_stage_takes_lower_limit() {
    let r = RouteProfile::new(vec![
        pt(0.0, 0.0, 5.0, 25.0),
        pt(60.0, 0.0, 5.0, 15.0),
        pt(140.0, 0.0, 5.0, 25.0),
        pt(300.0, 0.0, 5.0, 25.0),
    ])
    .unwrap();
    let h = r.resample(0.0, 8, 25.0).unwrap();
    // node i covers [25 i, 25 i + 25)
    assert_eq!(h.v_max, vec![25.0, 25.0, 15.0, 15.0, 15.0, 15.0, 25.0, 25.0, 25.0]);
}

/// Bounds by scanning the stage at 1000 sub-points.
fn fine_resample(r: &RouteProfile, s0: f64, n: usize, ds: f64) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for i in 0..=n {
        let si = s0 + i as f64 * ds;
        let count = if i < n { 1000 } else { 1 };
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..count {
            let s = si + ds * k as f64 / 1000.0;
            let p = r.points().iter().rev().find(|p| p.s <= s).unwrap();
            a = a.max(p.v_min);
            b = b.min(p.v_max);
        }
        lo.push(a);
        hi.push(b);
    }
    (lo, hi)
}

proptest! {
    #[test]
    fn resample_matches_fine_scan(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = vec![];
        let mut s = 0.0;
        while s < 3000.0 {
            let lo = rng.gen_range(1.0..10.0);
            pts.push(pt(s, rng.gen_range(-0.05..0.05), lo, lo + rng.gen_range(0.0..20.0)));
            s += rng.gen_range(1..400) as f64;
        }
        pts.push(pt(s, 0.0, 1.0, 20.0));
        let r = RouteProfile::new(pts).unwrap();
        let ds = 25.0;
        let h = r.resample(50.0, 100, ds).unwrap();
        let (lo, hi) = fine_resample(&r, 50.0, 100, ds);
        prop_assert_eq!(&h.v_min, &lo);
        prop_assert_eq!(&h.v_max, &hi);
    }
}

fn vehicle() -> Vehicle {
    Vehicle::representative()
}

#[test]
fn constant_bounds_unchanged() {
    let veh = vehicle();
    let h = Horizon::constant(50, 25.0, 0.0, 15.0, 22.0);
    let t = tighten_bounds(&h, &veh).unwrap();
    assert_eq!(t, h);
}

/// Ideal acceleration per metre of the envelope, written out directly.
fn ideal_rate(veh: &Vehicle, v: f64, alpha: f64, accel: bool) -> f64 {
    let p = veh.params();
    let f = veh.resistance_force(v, alpha);
    let num = if accel {
        p.final_drive_efficiency * veh.max_power() - f * v
    } else {
        -(p.final_drive_efficiency * veh.max_brake_power() + f * v)
    };
    let heavy = p.mass + veh.max_inertia() / (p.wheel_radius * p.wheel_radius);
    let pick_light = if accel { num >= 0.0 } else { num < 0.0 };
    num / (if pick_light { p.mass } else { heavy } * v * v)
}

#[test]
fn upward_step_follows_acceleration_envelope() {
    let veh = vehicle();
    let ds = 25.0;
    let k = 10;
    let mut h = Horizon::constant(40, ds, 0.0, 10.0, 25.0);
    for i in 0..k {
        h.v_max[i] = 10.0;
    }
    let t = tighten_bounds(&h, &veh).unwrap();
    let mut v = 10.0;
    let mut i = k - 1;
    loop {
        let next = v + ds * ideal_rate(&veh, v, 0.0, true);
        i += 1;
        if next >= 25.0 {
            assert_eq!(t.v_max[i], 25.0);
            break;
        }
        assert!((t.v_max[i] - next).abs() < 1e-6, "stage {i}: {} vs {next}", t.v_max[i]);
        v = next;
    }
    assert!(i > k + 2, "envelope should take several stages");
    for j in 0..k {
        assert_eq!(t.v_max[j], 10.0);
    }
}

#[test]
fn downward_step_follows_braking_envelope() {
    let veh = vehicle();
    let ds = 25.0;
    let k = 30;
    let mut h = Horizon::constant(40, ds, 0.0, 5.0, 25.0);
    for i in k..=40 {
        h.v_max[i] = 10.0;
    }
    let t = tighten_bounds(&h, &veh).unwrap();
    let mut target = 10.0;
    let mut i = k;
    loop {
        i -= 1;
        // v whose braking step lands on the target
        let (mut a, mut b) = (target, 60.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m + ds * ideal_rate(&veh, m, 0.0, false) <= target {
                a = m;
            } else {
                b = m;
            }
        }
        if a >= 25.0 {
            assert_eq!(t.v_max[i], 25.0);
            break;
        }
        assert!((t.v_max[i] - a).abs() < 1e-6, "stage {i}: {} vs {a}", t.v_max[i]);
        target = a;
    }
    assert!(i + 2 < k);
}

#[test]
fn infeasible_tightening_names_stage() {
    let veh = vehicle();
    let mut h = Horizon::constant(10, 25.0, 0.0, 15.0, 25.0);
    // must drop from >= 24 to <= 3 in one stage
    h.v_min[4] = 24.0;
    h.v_max[5] = 3.0;
    h.v_min[5] = 1.0;
    match tighten_bounds(&h, &veh) {
        Err(RouteError::InfeasibleBounds { stage }) => assert!(stage <= 5),
        other => panic!("{other:?}"),
    }
}

fn random_horizon(rng: &mut ChaCha8Rng, n: usize, vlo: f64, vhi: f64) -> Horizon {
    let mut h = Horizon::constant(n, 25.0, 0.0, vlo, vhi);
    for a in h.alpha.iter_mut() {
        *a = rng.gen_range(-0.03..0.03);
    }
    for i in 0..=n {
        let w = vhi - vlo;
        h.v_min[i] = rng.gen_range(vlo..vlo + 0.4 * w);
        h.v_max[i] = rng.gen_range(vhi - 0.5 * w..vhi);
    }
    h
}

/// Enumerates every mode sequence from `v0` that keeps all nodes inside the
/// original bounds and checks each node against the tightened bounds.
fn check_paths(veh: &Vehicle, h: &Horizon, t: &Horizon, path: &mut Vec<f64>, count: &mut usize) {
    let node = path.len() - 1;
    let v = path[node];
    if node == h.stages() {
        for (i, &x) in path.iter().enumerate() {
            assert!(
                x >= t.v_min[i] && x <= t.v_max[i],
                "node {i}: v = {x} outside [{}, {}]",
                t.v_min[i],
                t.v_max[i]
            );
        }
        *count += 1;
        return;
    }
    for mg in ModeGear::all(veh.n_gears()) {
        if let Ok(f) = veh.mode_dynamics(mg, v, h.alpha[node]) {
            let next = v + f * h.ds;
            if next > 0.0 && h.contains(node + 1, next) {
                path.push(next);
                check_paths(veh, h, t, path, count);
                path.pop();
            }
        }
    }
}

#[test]
fn tightening_keeps_every_feasible_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let small = Vehicle::new(VehicleParams::representative().with_top_gears(3)).unwrap();
    let full = vehicle();
    let mut total = 0;
    for case in 0..24 {
        let (veh, n, lo, hi) = if case % 3 == 2 {
            (&full, 3, 1.5, 12.0)
        } else {
            (&small, 5, 15.0, 25.0)
        };
        let h = random_horizon(&mut rng, n, lo, hi);
        let Ok(t) = tighten_bounds(&h, veh) else {
            continue;
        };
        for k in 0..=8 {
            let v0 = h.v_min[0] + (h.v_max[0] - h.v_min[0]) * k as f64 / 8.0;
            let mut count = 0;
            check_paths(veh, &h, &t, &mut vec![v0], &mut count);
            total += count;
        }
    }
    assert!(total > 1000, "{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tightened_inside_and_idempotent(seed in 0u64..100_000, low in proptest::bool::ANY) {
        let veh = vehicle();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = if low { (1.0, 14.0) } else { (12.0, 26.0) };
        let h = random_horizon(&mut rng, 60, lo, hi);
        if let Ok(t) = tighten_bounds(&h, &veh) {
            for i in 0..=60 {
                prop_assert!(t.v_min[i] >= h.v_min[i] && t.v_max[i] <= h.v_max[i]);
                prop_assert!(t.v_min[i] <= t.v_max[i]);
            }
            let t2 = tighten_bounds(&t, &veh).unwrap();
            prop_assert_eq!(t2, t);
        }
    }
}

#[test]
fn envelope_bounds_every_mode_step() {
    let veh = vehicle();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3000 {
        let v = rng.gen_range(0.5..32.0);
        let a = rng.gen_range(-0.08..0.08);
        let e = SpeedEnvelope::new(&veh, a, 25.0);
        for mg in ModeGear::all(12) {
            if let Ok(f) = veh.mode_dynamics(mg, v, a) {
                let next = v + 25.0 * f;
                assert!(next <= e.upper(v) + 1e-9 && next >= e.lower(v) - 1e-9, "{mg} v={v} a={a}");
            }
        }
        // interval extrema agree with a dense scan
        let lo = rng.gen_range(0.5..30.0);
        let hi = lo + rng.gen_range(0.0..5.0);
        let (mut up, mut dn) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..=2000 {
            let x = lo + (hi - lo) * k as f64 / 2000.0;
            up = up.max(e.upper(x));
            dn = dn.min(e.lower(x));
        }
        assert!(e.sup_upper(lo, hi) >= up - 1e-9);
        assert!(e.sup_upper(lo, hi) <= up + 1e-6 * (1.0 + up.abs()));
        assert!(e.inf_lower(lo, hi) <= dn + 1e-9);
        assert!(e.inf_lower(lo, hi) >= dn - 1e-6 * (1.0 + dn.abs()));
    }
}

#[test]
fn brake_power_matches_dense_scan() {
    let veh = vehicle();
    let p = veh.params();
    let mut best: f64 = 0.0;
    for i in 0..=130_000 {
        let w = 800.0 + 0.01 * i as f64;
        let t = p.friction_torque.eval(w) + p.max_brake_torque.eval(w);
        best = best.max(w * t * core::f64::consts::PI / 30.0);
    }
    assert!(veh.max_brake_power() >= best * (1.0 - 1e-12));
    assert!((veh.max_brake_power() - best) / best < 1e-9);
}
