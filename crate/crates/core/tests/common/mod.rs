#![allow(dead_code)]

use std::sync::OnceLock;

use hetero_core::heteroclinic::{build_heteroclinic_set, HeteroclinicSet, MultistartSpec, Path1D};
use hetero_core::layer2d::{minimize_layer, LayerOptions, Order};
use hetero_core::{Exec, Field2D, Grid1D, Grid2D, PotentialDescriptor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn elliptic() -> PotentialDescriptor {
    PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap()
}

pub fn elliptic_set(half: f64, h: f64, tol: f64) -> HeteroclinicSet {
    let p = elliptic();
    let g = Grid1D::with_spacing(half, h).unwrap();
    let mut spec = MultistartSpec::default_for(&p, g);
    spec.options.tol = tol;
    build_heteroclinic_set(&p, g, &spec, Exec::default()).unwrap()
}

pub struct Small {
    pub set: HeteroclinicSet,
    pub field: Field2D,
    pub energy: f64,
}

/// A converged layer on the 8 x 8 strip with spacing 0.1.
pub fn small_layer(order: Order) -> &'static Small {
    static SECOND: OnceLock<Small> = OnceLock::new();
    static FOURTH: OnceLock<Small> = OnceLock::new();
    let cell = if order == Order::Second {
        &SECOND
    } else {
        &FOURTH
    };
    cell.get_or_init(|| {
        let p = elliptic();
        let set = elliptic_set(8.0, 0.1, 1e-10);
        let grid = Grid2D::new(Grid1D::with_spacing(8.0, 0.1).unwrap(), set.grid);
        let layer = match order {
            Order::Second => {
                minimize_layer(&p, &set, grid, None, &LayerOptions::default()).unwrap()
            }
            Order::Fourth => hetero_core::fourth_order::minimize_layer4(
                &p,
                &set,
                grid,
                None,
                &LayerOptions::default(),
            )
            .unwrap(),
        };
        Small {
            set,
            energy: layer.energy,
            field: layer.field,
        }
    })
}

/// Smooth blend between the boundary rows plus a random interior
/// perturbation of size `amp`.
pub fn random_field(
    p: &PotentialDescriptor,
    t: Grid1D,
    em: &Path1D,
    ep: &Path1D,
    seed: u64,
    amp: f64,
) -> Field2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Field2D::blend(p, t, em, ep, rng.gen_range(0.5..3.0)).unwrap();
    let g = *u.grid();
    let m = u.dim();
    for i in 1..g.nt() - 1 {
        for j in 1..g.nx() - 1 {
            for k in 0..m {
                u.values_mut()[(i * g.nx() + j) * m + k] += amp * rng.gen_range(-1.0..1.0);
            }
        }
    }
    u
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
