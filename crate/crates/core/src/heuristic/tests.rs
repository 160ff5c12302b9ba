use super::*;
use crate::vehicle::VehicleParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn veh() -> Vehicle {
    Vehicle::representative()
}

/// The bound written out from scratch for one node.
#[allow(clippy::too_many_arguments)]
fn closed_form(
    p: &VehicleParams,
    h: &Horizon,
    w: Weights,
    beta: f64,
    v_f: f64,
    j: usize,
    v_i: f64,
    vbar: f64,
    v_n: f64,
) -> f64 {
    let n = h.stages();
    let w_air = (n - j) as f64 * h.ds * 0.5 * p.air_density * p.drag_coefficient * p.frontal_area * vbar * vbar;
    let w_d: f64 = (j..n)
        .map(|k| p.mass * p.gravity * (p.rolling_resistance * h.alpha[k].cos() + h.alpha[k].sin()) * h.ds)
        .sum();
    let de = 0.5 * p.mass * v_n * v_n - 0.5 * p.mass * v_i * v_i + w_d + w_air;
    w.fuel * de.max(0.0) / (p.fuel_energy * p.eta_opt)
        + w.time * h.ds * (n - j) as f64 / vbar
        + beta * (v_n - v_f) * (v_n - v_f)
}

#[test]
fn last_stage_without_losses_is_pure_time() {
    let mut q = VehicleParams::representative();
    q.air_density = 0.0;
    q.rolling_resistance = 0.0;
    let v = Vehicle::new(q).unwrap();
    let h = Horizon::constant(10, 25.0, 0.0, 10.0, 25.0);
    let w = Weights::from_phi(10.0);
    let ctg = CostToGo::new(&v, &h, w, 10.0, 20.0);
    let j = 9;
    assert!((ctg.evaluate(j, 20.0, 20.0, 20.0) - w.time * 25.0 / 20.0).abs() < 1e-15);
}

#[test]
fn fuel_term_clamped_on_descent() {
    let v = veh();
    let h = Horizon::constant(20, 25.0, -0.06, 10.0, 25.0);
    let w = Weights::from_phi(10.0);
    let ctg = CostToGo::new(&v, &h, w, 0.0, 20.0);
    let j = 0;
    let val = ctg.evaluate(j, 20.0, 20.0, 20.0);
    let time = w.time * 20.0 * 25.0 / 20.0;
    assert!((val - time).abs() < 1e-12);
}

proptest! {
    #[test]
    fn evaluate_matches_closed_form(
        seed in 0u64..1000,
        j in 0usize..30,
        v_i in 10.0f64..25.0,
        vbar in 10.0f64..25.0,
        v_n in 10.0f64..25.0,
        phi in 0.1f64..100.0,
    ) {
        let v = veh();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Horizon::constant(30, 25.0, 0.0, 10.0, 25.0);
        for a in h.alpha.iter_mut() {
            *a = rng.gen_range(-0.05..0.05);
        }
        let w = Weights::from_phi(phi);
        let ctg = CostToGo::new(&v, &h, w, 3.0, 19.0);
        let got = ctg.evaluate(j, v_i, vbar, v_n);
        let expect = closed_form(v.params(), &h, w, 3.0, 19.0, j, v_i, vbar, v_n);
        prop_assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{} vs {}", got, expect);
    }
}

#[test]
fn heavy_terminal_weight_pins_final_speed() {
    let v = veh();
    let h = Horizon::constant(20, 25.0, 0.0, 10.0, 25.0);
    let ctg = CostToGo::new(&v, &h, Weights::from_phi(10.0), 1e6, 17.3);
    let (_, v_n) = ctg.argmin(5, 20.0);
    assert!((v_n - 17.3).abs() < 1e-4, "{v_n}");
}

#[test]
fn free_fuel_pushes_mean_speed_to_upper_box() {
    let v = veh();
    let h = Horizon::constant(20, 25.0, -0.08, 10.0, 22.0);
    let ctg = CostToGo::new(&v, &h, Weights::from_phi(10.0), 1.0, 20.0);
    let (vbar, _) = ctg.argmin(3, 20.0);
    assert_eq!(vbar, ctg.mean_box(3).1);
}

#[test]
fn minimum_matches_dense_grid() {
    let v = veh();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = 30;
        let mut h = Horizon::constant(n, 25.0, 0.0, 12.0, 25.0);
        for a in h.alpha.iter_mut() {
            *a = rng.gen_range(-0.04..0.04);
        }
        for k in 0..=n {
            h.v_min[k] = rng.gen_range(8.0..14.0);
            h.v_max[k] = rng.gen_range(18.0..26.0);
        }
        let phi = rng.gen_range(0.5..60.0);
        let beta = rng.gen_range(0.0..20.0);
        let v_f = rng.gen_range(15.0..24.0);
        let ctg = CostToGo::new(&v, &h, Weights::from_phi(phi), beta, v_f);
        let j = rng.gen_range(0..n);
        let v_i = rng.gen_range(h.v_min[j]..h.v_max[j]);
        let got = ctg.minimize(j, v_i);
        let (xl, xu) = ctg.mean_box(j);
        let (yl, yu) = (h.v_min[n], h.v_max[n]);
        // 400 x 400 grid, then a 400 x 400 zoom around its best cell
        let scan = |xl: f64, xu: f64, yl: f64, yu: f64| {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for a in 0..400 {
                let x = xl + (xu - xl) * a as f64 / 399.0;
                for b in 0..400 {
                    let y = yl + (yu - yl) * b as f64 / 399.0;
                    let val = ctg.evaluate(j, v_i, x, y);
                    if val < best.0 {
                        best = (val, x, y);
                    }
                }
            }
            best
        };
        let (_, x0, y0) = scan(xl, xu, yl, yu);
        let (dx, dy) = ((xu - xl) / 399.0, (yu - yl) / 399.0);
        let (grid, _, _) = scan(
            (x0 - dx).max(xl),
            (x0 + dx).min(xu),
            (y0 - dy).max(yl),
            (y0 + dy).min(yu),
        );
        assert!(got <= grid * (1.0 + 1e-12));
        assert!(got >= grid * (1.0 - 1e-3), "{got} vs {grid}");
    }
}

fn flat_lut(step: f64) -> (HeuristicLut, Horizon) {
    let v = veh();
    let h = Horizon::constant(200, 25.0, 0.0, 12.0, 24.0);
    (HeuristicLut::build(&v, &h, Weights::from_phi(10.0), 10.0, 22.0, step), h)
}

#[test]
fn final_row_is_terminal_cost() {
    let (lut, h) = flat_lut(0.25);
    let n = h.stages();
    for (k, vk) in lut.velocities().enumerate() {
        if vk >= h.v_min[n] && vk <= h.v_max[n] {
            assert_eq!(lut.entry(n, k), 10.0 * (vk - 22.0) * (vk - 22.0));
        }
    }
}

#[test]
fn nonincreasing_in_stage_on_flat_road() {
    let (lut, h) = flat_lut(0.25);
    for (k, vk) in lut.velocities().enumerate() {
        if !(12.0..=24.0).contains(&vk) {
            continue;
        }
        // the last row is the bare terminal penalty and is excluded
        for j in 1..h.stages() {
            assert!(lut.entry(j, k) <= lut.entry(j - 1, k) + 1e-12, "j={j} v={vk}");
        }
    }
}

#[test]
fn refinement_changes_little() {
    let (coarse, h) = flat_lut(0.25);
    let (fine, _) = flat_lut(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let j = rng.gen_range(0..=h.stages() / 2);
        let v = rng.gen_range(12.5..23.5);
        let (a, b) = (coarse.sample(j, v), fine.sample(j, v));
        assert!((a - b).abs() <= 0.01 * b, "j={j} v={v}: {a} vs {b}");
    }
}

#[test]
fn sampling_rules() {
    let (lut, h) = flat_lut(0.25);
    let k = lut.velocities().position(|x| x == 15.0).unwrap();
    assert_eq!(lut.sample(3, 15.0), lut.entry(3, k));
    let between = lut.sample(3, 15.1);
    assert_eq!(between, lut.entry(3, k).min(lut.entry(3, k + 1)));
    assert_eq!(lut.sample(3, 1.0), f64::INFINITY);
    assert_eq!(lut.sample(3, 99.0), f64::INFINITY);
    assert_eq!(lut.sample(h.stages() + 1, 15.0), f64::INFINITY);
}

#[test]
fn sampled_never_exceeds_direct_minimum() {
    let v = veh();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 30;
    let mut h = Horizon::constant(n, 25.0, 0.0, 12.0, 24.0);
    for a in h.alpha.iter_mut() {
        *a = rng.gen_range(-0.04..0.04);
    }
    let w = Weights::from_phi(10.0);
    let lut = HeuristicLut::build(&v, &h, w, 10.0, 22.0, 0.25);
    let ctg = CostToGo::new(&v, &h, w, 10.0, 22.0);
    for _ in 0..1000 {
        let j = rng.gen_range(0..=n);
        let x = rng.gen_range(12.0..24.0);
        assert!(lut.sample(j, x) <= ctg.minimize(j, x) + 1e-9);
    }
}

#[test]
fn entries_nonnegative_and_above_time_bound() {
    let (lut, h) = flat_lut(0.25);
    let w = Weights::from_phi(10.0);
    let vmax = 24.0;
    for (j, v, val) in lut.rows() {
        if v >= h.v_min[j] && v <= h.v_max[j] {
            assert!(val >= 0.0);
            let bound = w.time * h.ds * (h.stages() - j) as f64 / vmax;
            assert!(val >= bound - 1e-12);
        }
    }
}
