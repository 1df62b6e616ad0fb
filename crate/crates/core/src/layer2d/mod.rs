//! Heteroclinic double layers: minimizers of the strip energy with rows
//! `t = -T`, `t = T` pinned to heteroclinics of opposite labels and
//! columns `x = -L`, `x = L` pinned to the wells.

mod diagnostics;
mod functional;

pub use diagnostics::{
    certificate, diagnose, equipartition_profile, layer_decay_fit, minimality_probe, probe_delta,
    row_effective, Certificate, DiagnosticsSpec, EquipartitionProfile, Gate, LayerDecay,
    LayerDiagnostics, ProbeLedger, ProbeRecord, TailOutcome,
};
pub(crate) use diagnostics::{
    equipartition as diagnostics_equipartition, probe_ledger as diagnostics_probe_ledger,
};
pub(crate) use functional::Functional;
pub use functional::Order;

use serde::Serialize;

use crate::effective::JMin;
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::field::Field2D;
use crate::grid::{Grid1D, Grid2D};
use crate::heteroclinic::{HeteroclinicSet, Path1D};
use crate::optimize::{minimize, LbfgsOptions, Objective, Tolerance};
use crate::potential::PotentialDescriptor;
use crate::precond::SineTransformPrecond;

pub(crate) fn functional<'a>(
    p: &'a PotentialDescriptor,
    u: &Field2D,
    order: Order,
    exec: Exec,
) -> Result<Functional<'a>> {
    if u.dim() != p.dim() {
        return invalid("field dimension does not match the potential");
    }
    Ok(Functional {
        p,
        grid: *u.grid(),
        m: u.dim(),
        order,
        exec,
    })
}

/// Cell-quadrature energy of `1/2 |grad u|^2 + W(u)` over the strip.
pub fn energy2d(p: &PotentialDescriptor, u: &Field2D) -> Result<f64> {
    Ok(functional(p, u, Order::Second, Exec::default())?.energy(u.values()))
}

/// `sum_i h_t [1/2 ||(U_{i+1} - U_i) / h_t||^2 + W(U_i)]` with `W` the
/// effective potential of each row and trapezoid weights in `t`.
pub fn renormalized_action(p: &PotentialDescriptor, u: &Field2D, j_min: &JMin) -> Result<f64> {
    if u.grid().x != j_min.grid {
        return invalid("J_min was computed on a different x grid");
    }
    Ok(functional(p, u, Order::Second, Exec::default())?.action(u.values(), j_min.value))
}

/// Gradient of the strip energy of the given order with respect to the
/// interior nodes, in the field layout.
pub fn energy_gradient(p: &PotentialDescriptor, u: &Field2D, order: Order) -> Result<Vec<f64>> {
    let f = functional(p, u, order, Exec::default())?;
    let mut g = vec![0.0; u.values().len()];
    f.gradient(u.values(), &mut g);
    Ok(g)
}

/// Energy and gradient of the given order under an explicit execution
/// strategy. Results do not depend on the strategy or the thread count.
pub fn energy_and_gradient(
    p: &PotentialDescriptor,
    u: &Field2D,
    order: Order,
    exec: Exec,
) -> Result<(f64, Vec<f64>)> {
    let f = functional(p, u, order, exec)?;
    let mut g = vec![0.0; u.values().len()];
    f.gradient(u.values(), &mut g);
    Ok((f.energy(u.values()), g))
}

struct LayerObjective<'a> {
    f: Functional<'a>,
    precond: SineTransformPrecond,
}

impl Objective for LayerObjective<'_> {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.f.gradient(x, grad);
        self.f.energy(x)
    }
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.precond.apply(r, z)
    }
    fn exec(&self) -> Exec {
        self.f.exec
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerOptions {
    /// Stop when the gradient sup-norm is at most `tol * (1 + |E|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub memory: usize,
    /// Half-width in `t` of the smoothstep initializer.
    pub init_width: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for LayerOptions {
    fn default() -> Self {
        LayerOptions {
            tol: 1e-8,
            max_iter: 200_000,
            memory: 10,
            init_width: 2.0,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub field: Field2D,
    pub order: Order,
    pub e_minus: Path1D,
    pub e_plus: Path1D,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Accepted energies during the descent.
    pub trace: Vec<f64>,
}

/// Pinned representatives `(e-, e+)` of a partitioned set.
pub fn boundary_pair(set: &HeteroclinicSet) -> Result<(Path1D, Path1D)> {
    if !set.is_partitioned() {
        return Err(Error::Inapplicable(format!(
            "the heteroclinic set carries a single label ({} member(s)); the partition hypothesis d_min > 0 cannot hold",
            set.members.len()
        )));
    }
    let (a, b) = set.representatives()?;
    Ok((a.clone(), b.clone()))
}

/// Minimizes the strip energy between the closest pair of `set`.
pub fn minimize_layer(
    p: &PotentialDescriptor,
    set: &HeteroclinicSet,
    grid: Grid2D,
    init: Option<&Field2D>,
    opts: &LayerOptions,
) -> Result<Layer> {
    solve(p, set, grid, init, opts, Order::Second)
}

pub(crate) fn solve(
    p: &PotentialDescriptor,
    set: &HeteroclinicSet,
    grid: Grid2D,
    init: Option<&Field2D>,
    opts: &LayerOptions,
    order: Order,
) -> Result<Layer> {
    if grid.x != set.grid {
        return invalid("layer x grid differs from the heteroclinic set's grid");
    }
    let (em, ep) = boundary_pair(set)?;
    minimize_between(p, &em, &ep, grid.t, init, opts, order)
}

/// Minimizes with explicit boundary rows; `e_minus == e_plus` is allowed.
pub fn minimize_between(
    p: &PotentialDescriptor,
    e_minus: &Path1D,
    e_plus: &Path1D,
    t: Grid1D,
    init: Option<&Field2D>,
    opts: &LayerOptions,
    order: Order,
) -> Result<Layer> {
    if !e_minus.connects(p) || !e_plus.connects(p) {
        return invalid("boundary curves must be clamped to the wells");
    }
    let start = match init {
        Some(f) => {
            if f.grid().t != t || f.grid().x != *e_minus.grid() {
                return invalid("initial field grid does not match");
            }
            if !f.respects_boundaries(p, e_minus, e_plus) {
                return invalid("initial field does not match the boundary data");
            }
            f.clone()
        }
        None => Field2D::blend(p, t, e_minus, e_plus, opts.init_width)?,
    };
    let grid = *start.grid();
    let f = functional(p, &start, order, opts.exec)?;
    let beta = if order == Order::Fourth { 1.0 } else { 0.0 };
    let precond = SineTransformPrecond::new(
        grid.nt(),
        grid.nx(),
        grid.t.spacing(),
        grid.x.spacing(),
        beta,
        p.well_hessian_diag(),
        opts.exec,
    );
    let obj = LayerObjective { f, precond };
    let lopts = LbfgsOptions {
        memory: opts.memory,
        max_iter: opts.max_iter,
        tolerance: Tolerance::ScaledSum(opts.tol),
        ..Default::default()
    };
    let out = minimize(&obj, start.into_values(), &lopts)?;
    let field = Field2D::new(grid, p.dim(), out.x)?;
    Ok(Layer {
        field,
        order,
        e_minus: e_minus.clone(),
        e_plus: e_plus.clone(),
        energy: out.value,
        grad_norm: out.grad_norm,
        iterations: out.iterations,
        evaluations: out.evaluations,
        trace: out.trace,
    })
}

/// Radial projection of every value onto the ball `|v| <= rho`.
pub fn ball_project(p: &PotentialDescriptor, u: &Field2D) -> Result<Field2D> {
    let rho = p
        .rho
        .ok_or_else(|| Error::Unsupported("potential has no invariant-ball radius".into()))?;
    let mut out = u.clone();
    for v in out.values_mut().chunks_mut(u.dim()) {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > rho {
            let s = rho / n;
            v.iter_mut().for_each(|x| *x *= s);
        }
    }
    Ok(out)
}

/// Five-point Laplacian minus `grad W(u)` at interior nodes (zero on the
/// boundary), with its sup-norm.
pub fn pde_residual(p: &PotentialDescriptor, u: &Field2D) -> Result<(f64, Vec<f64>)> {
    let g = energy_gradient(p, u, Order::Second)?;
    let s = u.grid().t.spacing() * u.grid().x.spacing();
    let r: Vec<f64> = g.iter().map(|v| -v / s).collect();
    let sup = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok((sup, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field(p: &PotentialDescriptor) -> Field2D {
        let g = Grid2D::with_spacing(2.0, 3.0, 0.1, 0.15).unwrap();
        Field2D::from_fn(g, 2, |t, x| {
            vec![
                (x + 0.3 * t).tanh() + 0.1 * (t * x).sin(),
                0.5 * (-x * x - t * t).exp(),
            ]
        })
        .unwrap()
        .tap_clamp(p)
    }

    trait TapClamp {
        fn tap_clamp(self, p: &PotentialDescriptor) -> Self;
    }
    impl TapClamp for Field2D {
        fn tap_clamp(self, p: &PotentialDescriptor) -> Self {
            let e_minus = self.row_path(0).clamped(p);
            let e_plus = self.row_path(self.grid().nt() - 1).clamped(p);
            let mut f = self;
            f.clamp_boundaries(p, &e_minus, &e_plus).unwrap();
            f
        }
    }

    #[test]
    fn cell_sum_equals_row_form() {
        let p = PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap();
        let u = sample_field(&p);
        for order in [Order::Second, Order::Fourth] {
            let f = functional(&p, &u, order, Exec::Sequential).unwrap();
            let g = u.grid();
            let mut cells = 0.0;
            for i in 0..g.nt() - 1 {
                for j in 0..g.nx() - 1 {
                    cells += f.cell_energy(u.values(), i, j);
                }
            }
            let e = f.energy(u.values());
            assert!((cells - e).abs() <= 1e-12 * e, "{order:?} {cells} {e}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap();
        let u = sample_field(&p);
        for order in [Order::Second, Order::Fourth] {
            let f = functional(&p, &u, order, Exec::Sequential).unwrap();
            let mut g = vec![0.0; u.values().len()];
            f.gradient(u.values(), &mut g);
            let nx = u.grid().nx();
            for &(i, j, k) in &[(1, 1, 0), (5, 7, 1), (20, 30, 0), (39, 39, 1), (17, 2, 1)] {
                let idx = (i * nx + j) * 2 + k;
                let eps = 1e-6;
                let mut a = u.values().to_vec();
                a[idx] += eps;
                let mut b = u.values().to_vec();
                b[idx] -= eps;
                let fd = (f.energy(&a) - f.energy(&b)) / (2.0 * eps);
                assert!(
                    (fd - g[idx]).abs() <= 1e-6 * g[idx].abs().max(1e-2),
                    "{order:?} {i} {j}: {fd} {}",
                    g[idx]
                );
            }
            assert!(u.grid().nt() > 39 && nx > 39);
        }
    }

    #[test]
    fn stationary_field_energy_is_strip_times_action() {
        let p = PotentialDescriptor::decoupled_quartic();
        let gx = Grid1D::with_spacing(6.0, 0.1).unwrap();
        let e = Path1D::from_fn(gx, 2, |x| vec![(x / 2f64.sqrt()).tanh(), 0.0])
            .unwrap()
            .clamped(&p);
        let t = Grid1D::with_spacing(3.0, 0.1).unwrap();
        let u = Field2D::stationary(t, &e);
        let j = crate::heteroclinic::discrete_action(&p, &e);
        let e2 = energy2d(&p, &u).unwrap();
        assert!((e2 - 6.0 * j).abs() <= 1e-12 * e2);
        assert!(
            renormalized_action(&p, &u, &JMin::new(j, gx))
                .unwrap()
                .abs()
                <= 1e-12
        );
        let (sup, _) = pde_residual(
            &p,
            &Field2D::constant(u.grid().to_owned(), p.well_plus()).unwrap(),
        )
        .unwrap();
        assert_eq!(sup, 0.0);
    }

    #[test]
    fn ball_projection_requires_radius() {
        let mut p = PotentialDescriptor::decoupled_quartic();
        let g = Grid2D::with_spacing(1.0, 1.0, 0.5, 0.5).unwrap();
        let u = Field2D::constant(g, &[3.0, 4.0]).unwrap();
        let b = ball_project(&p, &u).unwrap();
        let r = p.rho.unwrap();
        assert!(b
            .values()
            .chunks(2)
            .all(|v| (v[0].hypot(v[1]) - r).abs() < 1e-14));
        p.rho = None;
        assert!(matches!(ball_project(&p, &u), Err(Error::Unsupported(_))));
    }

    #[test]
    fn strategies_agree_bitwise() {
        let p = PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap();
        let u = sample_field(&p);
        for order in [Order::Second, Order::Fourth] {
            let s = functional(&p, &u, order, Exec::Sequential).unwrap();
            let q = functional(&p, &u, order, Exec::Parallel).unwrap();
            assert_eq!(
                s.energy(u.values()).to_bits(),
                q.energy(u.values()).to_bits()
            );
            let (mut a, mut b) = (vec![0.0; u.values().len()], vec![0.0; u.values().len()]);
            s.gradient(u.values(), &mut a);
            q.gradient(u.values(), &mut b);
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
