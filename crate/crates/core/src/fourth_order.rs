//! Double layers for `u_ttxx = Laplacian u - grad W(u)`, obtained as
//! minimizers of the energy with the extra `1/2 |u_tx|^2` density.

use serde::Serialize;

use crate::effective::JMin;
use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::field::Field2D;
use crate::grid::Grid2D;
use crate::heteroclinic::{HeteroclinicSet, Path1D};
use crate::layer2d::{
    self, functional, EquipartitionProfile, Layer, LayerDecay, LayerOptions, Order, ProbeLedger,
};
use crate::potential::PotentialDescriptor;
use crate::probe::{Bump, ProbeSpec};

/// A field together with its per-cell cross differences
/// `(u_{i+1,j+1} - u_{i+1,j} - u_{i,j+1} + u_{i,j}) / (h_t h_x)`.
#[derive(Clone, Debug)]
pub struct Field2D4 {
    field: Field2D,
    mixed: Vec<f64>,
}

impl Field2D4 {
    pub fn new(field: Field2D) -> Self {
        let mixed = mixed_differences(&field);
        Field2D4 { field, mixed }
    }
    pub fn field(&self) -> &Field2D {
        &self.field
    }
    /// Cell `(ci, cj)`, component `k` at `((ci * (n_x - 1)) + cj) * m + k`.
    pub fn mixed(&self) -> &[f64] {
        &self.mixed
    }
    pub fn update(&mut self, f: impl FnOnce(&mut [f64])) {
        f(self.field.values_mut());
        self.mixed = mixed_differences(&self.field);
    }
    pub fn into_field(self) -> Field2D {
        self.field
    }
}

pub fn mixed_differences(u: &Field2D) -> Vec<f64> {
    let g = u.grid();
    let (nt, nx, m) = (g.nt(), g.nx(), u.dim());
    let s = 1.0 / (g.t.spacing() * g.x.spacing());
    let mut out = Vec::with_capacity((nt - 1) * (nx - 1) * m);
    for i in 0..nt - 1 {
        for j in 0..nx - 1 {
            let (a, b, c, d) = (
                u.at(i, j),
                u.at(i, j + 1),
                u.at(i + 1, j),
                u.at(i + 1, j + 1),
            );
            out.extend((0..m).map(|k| (d[k] - c[k] - b[k] + a[k]) * s));
        }
    }
    out
}

/// Cell quadrature of `1/2 (|u_tx|^2 + |grad u|^2) + W(u)`.
pub fn energy4(p: &PotentialDescriptor, u: &Field2D) -> Result<f64> {
    Ok(functional(p, u, Order::Fourth, Exec::default())?.energy(u.values()))
}

/// `sum_i h_t [1/2 ||(U_{i+1} - U_i) / h_t||^2_{H^1} + W(U_i)]`.
pub fn action4(p: &PotentialDescriptor, u: &Field2D, j_min: &JMin) -> Result<f64> {
    if u.grid().x != j_min.grid {
        return invalid("J_min was computed on a different x grid");
    }
    Ok(functional(p, u, Order::Fourth, Exec::default())?.action(u.values(), j_min.value))
}

pub fn minimize_layer4(
    p: &PotentialDescriptor,
    set: &HeteroclinicSet,
    grid: Grid2D,
    init: Option<&Field2D>,
    opts: &LayerOptions,
) -> Result<Layer> {
    layer2d::solve(p, set, grid, init, opts, Order::Fourth)
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakResidual {
    pub max: f64,
    /// `|D E~(u) phi| / ||phi||` for each test function.
    pub values: Vec<f64>,
}

/// Weak-form residual over normalized test functions.
pub fn weak_residual(
    p: &PotentialDescriptor,
    u: &Field2D,
    tests: &[Bump],
    margin: usize,
) -> Result<WeakResidual> {
    let g = layer2d::energy_gradient(p, u, Order::Fourth)?;
    let mut values = Vec::with_capacity(tests.len());
    for b in tests {
        if b.direction.len() != u.dim() {
            return invalid("test function dimension does not match the field");
        }
        let patch = b.patch(u.grid());
        patch.check_interior(u.grid(), margin)?;
        let norm = patch.norm_sq(u.grid()).sqrt();
        values.push(patch.dot(u.grid(), &g).abs() / norm);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(WeakResidual { max, values })
}

/// Sup over interior nodes of the pointwise residual
/// `D_tt D_xx u - (D_tt + D_xx) u + grad W(u)` with centered differences.
pub fn stencil_residual(p: &PotentialDescriptor, u: &Field2D) -> Result<f64> {
    if u.dim() != p.dim() {
        return invalid("field dimension does not match the potential");
    }
    let g = u.grid();
    let (ht2, hx2) = (g.t.spacing().powi(2), g.x.spacing().powi(2));
    let m = u.dim();
    let mut grad = vec![0.0; m];
    let mut sup = 0.0f64;
    for i in 1..g.nt() - 1 {
        for j in 1..g.nx() - 1 {
            p.grad_into(u.at(i, j), &mut grad);
            for k in 0..m {
                let v = |a: usize, b: usize| u.at(a, b)[k];
                let dxx = |a: usize| (v(a, j + 1) - 2.0 * v(a, j) + v(a, j - 1)) / hx2;
                let dtt = (v(i + 1, j) - 2.0 * v(i, j) + v(i - 1, j)) / ht2;
                let dttxx = (dxx(i + 1) - 2.0 * dxx(i) + dxx(i - 1)) / ht2;
                sup = sup.max((dttxx - dtt - dxx(i) + grad[k]).abs());
            }
        }
    }
    Ok(sup)
}

pub fn equipartition4(
    p: &PotentialDescriptor,
    u: &Field2D,
    j_min: &JMin,
) -> Result<EquipartitionProfile> {
    layer2d::diagnostics_equipartition(p, u, j_min, Order::Fourth)
}

pub fn minimality_probe4(
    p: &PotentialDescriptor,
    u: &Field2D,
    spec: &ProbeSpec,
) -> Result<ProbeLedger> {
    let e = energy4(p, u)?;
    layer2d::diagnostics_probe_ledger(p, u, spec, Order::Fourth, e, Exec::default())
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerDecay4 {
    pub fits: LayerDecay,
    /// `sup_t |u(t, L-1) - a+|` over the rows.
    pub sup_at_edge: f64,
    /// The fitted `x` tail bound at `L - 1`.
    pub bound_at_edge: Option<f64>,
    /// `sup_at_edge <= 1.5 * bound_at_edge`
    pub uniform: bool,
}

pub fn layer_decay_fit4(
    p: &PotentialDescriptor,
    u: &Field2D,
    e_minus: &Path1D,
    e_plus: &Path1D,
) -> Result<LayerDecay4> {
    let fits = layer2d::layer_decay_fit(p, u, e_minus, e_plus)?;
    let g = u.grid();
    let j = g.nx() - 1 - (1.0 / g.x.spacing()).round() as usize;
    let sup_at_edge = (0..g.nt())
        .map(|i| crate::potential::dist(u.at(i, j), p.well_plus()))
        .fold(0.0, f64::max);
    let bound_at_edge = fits.x_plus.fit.map(|f| f.bound_at(g.x.node(j)));
    let uniform = bound_at_edge.is_some_and(|b| sup_at_edge <= 1.5 * b);
    Ok(LayerDecay4 {
        fits,
        sup_at_edge,
        bound_at_edge,
        uniform,
    })
}
