mod common;

use common::{elliptic, small_layer};
use hetero_core::abstract_orbit::{
    class_membership, nonsmooth_orbit, orbit_action, reparameterize, segment_orbit, transit_time,
    window_action, AbstractOrbit, InnerProduct, OrbitPotential,
};
use hetero_core::effective::JMin;
use hetero_core::layer2d::{minimize_layer, renormalized_action, LayerOptions, Order};
use hetero_core::{Grid1D, Grid2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn grid() -> Grid1D {
    Grid1D::with_spacing(4.0, 0.05).unwrap()
}

#[test]
fn nonsmooth_orbit_closed_form() {
    let v = nonsmooth_orbit(&[0.0, 0.0], &[2.0, 0.0], &grid()).unwrap();
    assert_eq!(v.l0(), 2.0);
    assert_eq!(transit_time(&v), SQRT2);
    let mid = v.value_at(1.0 / SQRT2);
    assert!((mid[0] - 1.0).abs() < 1e-15 && mid[1] == 0.0);
    for (i, s) in v.speeds().iter().enumerate() {
        let (t0, t1) = (v.times()[i], v.times()[i + 1]);
        let inside = t0 >= 0.0 && t1 <= SQRT2;
        let expect = if inside { SQRT2 } else { 0.0 };
        assert!((s - expect).abs() < 1e-14, "segment {i}: {s}");
        if inside {
            assert!((0.5 * s * s - 1.0).abs() < 1e-14);
        }
    }
    let parts = window_action(&v, &OrbitPotential::Characteristic, 0.0, SQRT2);
    assert!((parts.total() - SQRT2 * 2.0).abs() < 1e-13);
    assert!((parts.kinetic - parts.potential).abs() < 1e-13);
    let whole = orbit_action(&v, &OrbitPotential::Characteristic);
    assert!((whole.total() - parts.total()).abs() < 1e-13);
    let m = class_membership(&v);
    assert!(m.member);
    assert!((m.t_minus.unwrap() - 1.5 / SQRT2).abs() < 1e-14);
    assert!((m.t_plus.unwrap() - 0.5 / SQRT2).abs() < 1e-14);
    assert!(nonsmooth_orbit(&[1.0], &[1.0], &grid()).is_err());
}

#[test]
fn segment_orbit_profile() {
    let v = segment_orbit(&[-1.0, 0.5], &[1.0, -0.5], &grid()).unwrap();
    let l0 = v.l0();
    for (i, s) in v.speeds().iter().enumerate() {
        let (t0, t1) = (v.times()[i], v.times()[i + 1]);
        let expect = if t0 >= 0.0 && t1 <= 1.0 { l0 } else { 0.0 };
        assert!((s - expect).abs() < 1e-13);
    }
    let mid = v.value_at(0.5);
    assert!(mid.iter().all(|x| x.abs() < 1e-15));
    assert!(class_membership(&v).member);
}

/// `(1/kappa - 1) K + (kappa - 1) P` with closed-form window integrals of the
/// nonsmooth orbit: on the part of `[a, b]` inside the transition,
/// `int ||V'||^2 = 2 |.|` and `int W = |.|`.
fn predicted_change(a: f64, b: f64, transit: f64, kappa: f64) -> f64 {
    let len = (b.min(transit) - a.max(0.0)).max(0.0);
    (1.0 - kappa) / (2.0 * kappa) * 2.0 * len + (kappa - 1.0) * len
}

#[test]
fn dilation_changes_action_as_predicted() {
    let v = nonsmooth_orbit(&[0.0, 0.0, 0.0], &[1.0, 2.0, -1.0], &grid()).unwrap();
    let tr = transit_time(&v);
    let chi = OrbitPotential::Characteristic;
    let base = orbit_action(&v, &chi).total();
    for (a, b) in [(-1.0, 3.0), (0.3, 0.9), (-0.5, 1.0)] {
        for kappa in [0.5, 2.0] {
            let w = reparameterize(&v, a, b, kappa).unwrap();
            let change = orbit_action(&w, &chi).total() - base;
            let expect = predicted_change(a, b, tr, kappa);
            assert!(
                (change - expect).abs() <= 1e-10,
                "[{a}, {b}] kappa {kappa}: {change} vs {expect}"
            );
            assert!(class_membership(&w).member);
        }
    }
}

fn random_orbit(seed: u64) -> AbstractOrbit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = grid();
    let d = 3;
    let em = vec![0.0; d];
    let ep: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..2.0)).collect();
    let base = segment_orbit(&em, &ep, &g).unwrap();
    let mut values = Vec::new();
    for i in 0..base.len() {
        let t = base.times()[i];
        let bump = if t > -1.0 && t < 2.0 {
            (std::f64::consts::PI * (t + 1.0) / 3.0).sin()
        } else {
            0.0
        };
        values.extend(
            base.at(i)
                .iter()
                .map(|x| x + 0.3 * bump * rng.gen_range(-1.0..1.0)),
        );
    }
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..2.0)).collect();
    AbstractOrbit::new(
        base.times().to_vec(),
        d,
        values,
        em,
        ep,
        InnerProduct::Weighted(w),
    )
    .unwrap()
}

#[test]
fn dilation_identity_for_smooth_potential() {
    let pot = OrbitPotential::Custom(Arc::new(|v: &[f64]| {
        v.iter().map(|x| x * x * (x - 1.0).powi(2)).sum()
    }));
    for seed in 0..10 {
        let v = random_orbit(seed);
        let (a, b) = (-0.7, 1.6);
        let parts = window_action(&v.with_node(a).with_node(b), &pot, a, b);
        for kappa in [0.5, 0.9, 2.0] {
            let w = reparameterize(&v, a, b, kappa).unwrap();
            let change = orbit_action(&w, &pot).total() - orbit_action(&v, &pot).total();
            let expect = (1.0 / kappa - 1.0) * parts.kinetic + (kappa - 1.0) * parts.potential;
            assert!(
                (change - expect).abs() <= 1e-10 * (1.0 + expect.abs()),
                "{change} vs {expect}"
            );
        }
    }
}

#[test]
fn dilations_compose() {
    let v = random_orbit(77);
    let (a, b) = (-0.5, 1.5);
    let fine: Vec<f64> = (0..=4000).map(|k| -4.0 + 8.0 * k as f64 / 4000.0).collect();
    for (k1, k2) in [(0.5, 3.0), (2.0, 0.7), (1.3, 1.3)] {
        let once = reparameterize(&v, a, b, k1 * k2)
            .unwrap()
            .resample(&fine)
            .unwrap();
        let first = reparameterize(&v, a, b, k1).unwrap();
        let twice = reparameterize(&first, a, a + k1 * (b - a), k2)
            .unwrap()
            .resample(&fine)
            .unwrap();
        for i in 0..fine.len() {
            for (x, y) in once.at(i).iter().zip(twice.at(i)) {
                assert!((x - y).abs() < 1e-10, "t = {}: {x} vs {y}", fine[i]);
            }
        }
    }
}

#[test]
fn membership_survives_interior_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = segment_orbit(&[0.0, 0.0], &[1.0, 1.0], &grid()).unwrap();
    let (s_minus, s_plus) = (-0.2, 1.3);
    for _ in 0..200 {
        let amp = rng.gen_range(0.0..3.0);
        let c = rng.gen_range(s_minus..s_plus);
        let w = rng.gen_range(0.05..(s_plus - s_minus));
        let dir = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let mut values = Vec::new();
        for i in 0..v.len() {
            let t = v.times()[i];
            let z = (t - c) / w;
            let phi = if t > s_minus && t < s_plus && z.abs() < 1.0 {
                amp * (1.0 - z * z).powi(2)
            } else {
                0.0
            };
            values.extend(v.at(i).iter().zip(dir).map(|(x, d)| x + phi * d));
        }
        let p = AbstractOrbit::new(
            v.times().to_vec(),
            2,
            values,
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            InnerProduct::Euclidean,
        )
        .unwrap();
        assert!(class_membership(&p).member);
    }
}

#[test]
fn layer_minimizer_is_stationary_under_dilation() {
    let p = elliptic();
    let s = small_layer(Order::Second);
    let jm = JMin::of(&s.set);
    let v = AbstractOrbit::from_field(&s.field).unwrap();
    let pot = OrbitPotential::effective(&p, jm);
    let direct = renormalized_action(&p, &s.field, &jm).unwrap();
    assert!(common::rel(orbit_action(&v, &pot).total(), direct) <= 1e-12);

    // On a short strip the pinned ends leave a Hamiltonian offset, so use T = 12.
    let grid = Grid2D::new(Grid1D::with_spacing(12.0, 0.1).unwrap(), s.set.grid);
    let layer = minimize_layer(&p, &s.set, grid, None, &LayerOptions::default()).unwrap();
    let v = AbstractOrbit::from_field(&layer.field).unwrap();
    let j0 = orbit_action(&v, &pot).total();
    // Resampled onto the layer's own time grid, dilations are variations
    // inside the discrete space.
    let j = |k: f64| {
        orbit_action(
            &reparameterize(&v, -6.0, 6.0, k)
                .unwrap()
                .resample(v.times())
                .unwrap(),
            &pot,
        )
        .total()
    };
    let d = 1e-4;
    let slope = (j(1.0 + d) - j(1.0 - d)) / (2.0 * d);
    assert!(
        slope.abs() <= 1e-4 * j0,
        "d/dkappa = {slope:e}, action {j0}"
    );
}

#[test]
fn orbit_export_header() {
    let v = segment_orbit(&[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0], &grid()).unwrap();
    let mut buf = Vec::new();
    hetero_core::io::write_orbit(&mut buf, &v).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,v1,v2,v3\n-4,0,0,1\n"));
    assert_eq!(text.lines().count(), v.len() + 1);
}
