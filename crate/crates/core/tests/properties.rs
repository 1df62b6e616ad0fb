mod common;

use std::sync::OnceLock;

use common::{elliptic, elliptic_set, random_field};
use hetero_core::abstract_orbit::{class_membership, reparameterize, segment_orbit};
use hetero_core::heteroclinic::Path1D;
use hetero_core::io::{read_field, write_field_binary, write_field_csv};
use hetero_core::layer2d::{ball_project, boundary_pair, energy2d, energy_and_gradient, Order};
use hetero_core::{Exec, Field2D, Grid1D};
use proptest::prelude::*;

fn boundary() -> &'static (Path1D, Path1D) {
    static B: OnceLock<(Path1D, Path1D)> = OnceLock::new();
    B.get_or_init(|| boundary_pair(&elliptic_set(4.0, 0.2, 1e-10)).unwrap())
}

fn field(seed: u64, amp: f64, half_t: f64) -> Field2D {
    let (em, ep) = boundary();
    random_field(
        &elliptic(),
        Grid1D::with_spacing(half_t, 0.2).unwrap(),
        em,
        ep,
        seed,
        amp,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn strategies_agree_bitwise(seed in 0u64..1000, amp in 0.0f64..0.5, order in prop_oneof![Just(Order::Second), Just(Order::Fourth)]) {
        let p = elliptic();
        let u = field(seed, amp, 3.0);
        let (es, gs) = energy_and_gradient(&p, &u, order, Exec::Sequential).unwrap();
        let (ep, gp) = energy_and_gradient(&p, &u, order, Exec::Parallel).unwrap();
        prop_assert_eq!(es.to_bits(), ep.to_bits());
        prop_assert!(gs.iter().zip(&gp).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn reflections_preserve_energy_bitwise(seed in 0u64..1000, amp in 0.0f64..0.5) {
        let p = elliptic();
        let u = field(seed, amp, 2.0);
        let e = energy2d(&p, &u).unwrap().to_bits();
        prop_assert_eq!(energy2d(&p, &u.reversed_in_t()).unwrap().to_bits(), e);
        prop_assert_eq!(energy2d(&p, &u.mirrored()).unwrap().to_bits(), e);
    }

    #[test]
    fn field_files_round_trip(seed in 0u64..1000, amp in 0.0f64..1.0, binary: bool) {
        let u = field(seed, amp, 1.0);
        let mut buf = Vec::new();
        if binary {
            write_field_binary(&mut buf, &u, Some(Order::Fourth)).unwrap();
        } else {
            write_field_csv(&mut buf, &u, None).unwrap();
        }
        let (v, order) = read_field(&buf[..]).unwrap();
        prop_assert_eq!(order, if binary { Some(Order::Fourth) } else { None });
        prop_assert_eq!(v.grid(), u.grid());
        prop_assert!(v.values().iter().zip(u.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn ball_projection_is_idempotent(seed in 0u64..1000, amp in 0.0f64..3.0) {
        let p = elliptic();
        let once = ball_project(&p, &field(seed, amp, 1.0)).unwrap();
        let twice = ball_project(&p, &once).unwrap();
        prop_assert!(once.values().iter().zip(twice.values()).all(|(a, b)| (a - b).abs() <= 1e-14));
    }

    #[test]
    fn segment_orbits_are_members(e in prop::collection::vec(-3.0f64..3.0, 4), f in prop::collection::vec(-3.0f64..3.0, 4)) {
        prop_assume!(e != f);
        let v = segment_orbit(&e, &f, &Grid1D::with_spacing(3.0, 0.1).unwrap()).unwrap();
        let m = class_membership(&v);
        prop_assert!(m.member);
        prop_assert!((m.t_minus.unwrap() - 0.75).abs() < 1e-9);
        prop_assert!((m.t_plus.unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn dilation_is_inverted_by_reciprocal(kappa in 0.2f64..5.0, a in -2.0f64..0.0, len in 0.1f64..2.0) {
        let v = segment_orbit(&[0.0, 0.0], &[1.0, 2.0], &Grid1D::with_spacing(3.0, 0.1).unwrap()).unwrap();
        let w = reparameterize(&v, a, a + len, kappa).unwrap();
        prop_assert!(class_membership(&w).member);
        let back = reparameterize(&w, a, a + kappa * len, 1.0 / kappa).unwrap().resample(v.times()).unwrap();
        for i in 0..v.len() {
            for (x, y) in back.at(i).iter().zip(v.at(i)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
