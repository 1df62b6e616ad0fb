//! Minimal heteroclinic orbits of `v'' = grad W(v)` on a truncated line.
//!
//! The action is discretized as the exact kinetic energy of the
//! piecewise-linear interpolant plus trapezoid quadrature of `W`, and is
//! minimized over interior nodes with the ends clamped to the wells.

mod path;
mod set;

pub use path::{h1_distance, l2_distance, Path1D};
pub use set::{
    build_heteroclinic_set, mirrored_action, pair_distance, Candidate, HeteroclinicSet, Label,
    Labeler, Member, Metric, MultistartSpec, TranslationSearch,
};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::fit::{fit_exponential, DecayFit, Tail};
use crate::grid::Grid1D;
use crate::optimize::{minimize, LbfgsOptions, Objective, Tolerance};
use crate::potential::PotentialDescriptor;
use crate::precond::TridiagonalPrecond;

/// `sum_j h [ 1/2 |(v_{j+1} - v_j) / h|^2 + (W(v_j) + W(v_{j+1})) / 2 ]`
pub fn discrete_action(p: &PotentialDescriptor, v: &Path1D) -> f64 {
    action_of_values(p, v.grid(), v.values())
}

pub(crate) fn action_of_values(p: &PotentialDescriptor, grid: &Grid1D, values: &[f64]) -> f64 {
    let m = p.dim();
    let n = grid.len();
    let h = grid.spacing();
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    let mut w_prev = p.w(&values[..m]);
    for j in 0..n - 1 {
        let (a, b) = (
            &values[j * m..(j + 1) * m],
            &values[(j + 1) * m..(j + 2) * m],
        );
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum();
        let w_next = p.w(b);
        kinetic += d2;
        potential += w_prev + w_next;
        w_prev = w_next;
    }
    0.5 * kinetic / h + 0.5 * h * potential
}

/// Writes the action gradient with respect to interior nodes into `grad`;
/// end entries are zero. Returns the action.
pub(crate) fn action_and_gradient(
    p: &PotentialDescriptor,
    grid: &Grid1D,
    values: &[f64],
    grad: &mut [f64],
) -> f64 {
    let m = p.dim();
    let n = grid.len();
    let h = grid.spacing();
    grad[..m].fill(0.0);
    grad[(n - 1) * m..].fill(0.0);
    let mut gw = vec![0.0; m];
    for j in 1..n - 1 {
        let (l, c, r) = (
            &values[(j - 1) * m..j * m],
            &values[j * m..(j + 1) * m],
            &values[(j + 1) * m..(j + 2) * m],
        );
        p.grad_into(c, &mut gw);
        for k in 0..m {
            grad[j * m + k] = (2.0 * c[k] - l[k] - r[k]) / h + h * gw[k];
        }
    }
    action_of_values(p, grid, values)
}

pub fn action_gradient(p: &PotentialDescriptor, v: &Path1D) -> Result<Path1D> {
    if v.dim() != p.dim() {
        return invalid("path dimension does not match the potential");
    }
    let mut g = vec![0.0; v.values().len()];
    action_and_gradient(p, v.grid(), v.values(), &mut g);
    Path1D::new(*v.grid(), v.dim(), g)
}

/// `sup_j | 1/2 |e'(x_j)|^2 - W(e(x_j)) |` over interior nodes, central differences.
pub fn first_integral_residual(p: &PotentialDescriptor, e: &Path1D) -> f64 {
    let m = e.dim();
    let h = e.grid().spacing();
    (1..e.len() - 1)
        .map(|j| {
            let (l, r) = (e.at(j - 1), e.at(j + 1));
            let d2: f64 = (0..m).map(|k| ((r[k] - l[k]) / (2.0 * h)).powi(2)).sum();
            (0.5 * d2 - p.w(e.at(j))).abs()
        })
        .fold(0.0, f64::max)
}

struct ActionObjective<'a> {
    p: &'a PotentialDescriptor,
    grid: Grid1D,
    precond: TridiagonalPrecond,
}

impl Objective for ActionObjective<'_> {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        action_and_gradient(self.p, &self.grid, x, grad)
    }
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.precond.apply(r, z)
    }
    fn exec(&self) -> Exec {
        Exec::Sequential
    }
}

/// Options for [`minimize_heteroclinic`].
#[derive(Clone, Debug)]
pub struct HeteroclinicOptions {
    /// Relative gradient tolerance: stop when `sup |grad| <= tol * max(1, J)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Pin the result so the projection onto the well axis vanishes at 0.
    pub pin: bool,
}

impl Default for HeteroclinicOptions {
    fn default() -> Self {
        HeteroclinicOptions {
            tol: 1e-8,
            max_iter: 200_000,
            pin: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailFits {
    pub left: Option<DecayFit>,
    pub right: Option<DecayFit>,
}

/// A converged, translation-pinned connection between the wells.
#[derive(Clone, Debug)]
pub struct Heteroclinic {
    pub path: Path1D,
    pub action: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub first_integral: f64,
    pub decay: TailFits,
    /// Accepted action values during the descent.
    pub trace: Vec<f64>,
}

pub fn minimize_heteroclinic(
    p: &PotentialDescriptor,
    init: &Path1D,
    opts: &HeteroclinicOptions,
) -> Result<Heteroclinic> {
    if init.dim() != p.dim() {
        return invalid("initial path dimension does not match the potential");
    }
    if !init.connects(p) {
        return invalid("initial path must be clamped to the wells");
    }
    let grid = *init.grid();
    let obj = ActionObjective {
        p,
        grid,
        precond: TridiagonalPrecond {
            n: grid.len(),
            h: grid.spacing(),
            shifts: p.well_hessian_diag(),
        },
    };
    let lopts = LbfgsOptions {
        tolerance: Tolerance::ScaledMax(opts.tol),
        max_iter: opts.max_iter,
        ..Default::default()
    };
    let out = minimize(&obj, init.values().to_vec(), &lopts)?;
    let mut path = Path1D::new(grid, p.dim(), out.x)?.clamped(p);
    if opts.pin {
        path = pin_translation(p, &path)?;
    }
    let first_integral = first_integral_residual(p, &path);
    let decay = fit_decay(p, &path);
    Ok(Heteroclinic {
        action: discrete_action(p, &path),
        path,
        grad_norm: out.grad_norm,
        iterations: out.iterations,
        first_integral,
        decay,
        trace: out.trace,
    })
}

fn axis(p: &PotentialDescriptor) -> (Vec<f64>, Vec<f64>) {
    let (am, ap) = (p.well_minus(), p.well_plus());
    let mid: Vec<f64> = am.iter().zip(ap).map(|(a, b)| 0.5 * (a + b)).collect();
    let len = crate::potential::dist(am, ap);
    let dir: Vec<f64> = am.iter().zip(ap).map(|(a, b)| (b - a) / len).collect();
    (mid, dir)
}

/// Projection `<e(x_j) - (a- + a+)/2, n>` at every node.
pub fn axis_projection(p: &PotentialDescriptor, e: &Path1D) -> Vec<f64> {
    let (mid, dir) = axis(p);
    (0..e.len())
        .map(|j| {
            e.at(j)
                .iter()
                .zip(&mid)
                .zip(&dir)
                .map(|((v, c), d)| (v - c) * d)
                .sum()
        })
        .collect()
}

/// Location of the first upward sign change of the axis projection,
/// by linear interpolation between nodes.
pub fn crossing_point(p: &PotentialDescriptor, e: &Path1D) -> Result<f64> {
    let proj = axis_projection(p, e);
    let g = e.grid();
    for j in 0..proj.len() - 1 {
        let (a, b) = (proj[j], proj[j + 1]);
        if a == 0.0 && b > 0.0 {
            return Ok(g.node(j));
        }
        if a < 0.0 && b >= 0.0 {
            let w = a / (a - b);
            return Ok(g.node(j) + w * g.spacing());
        }
    }
    Err(Error::Pinning("axis projection has no sign change".into()))
}

/// Translates `e` so its axis projection vanishes at `x = 0`; ends are re-clamped.
pub fn pin_translation(p: &PotentialDescriptor, e: &Path1D) -> Result<Path1D> {
    let x0 = crossing_point(p, e)?;
    let mut out = e.translated(-x0);
    if e.connects(p) {
        out.clamp_to(p);
    }
    Ok(out)
}

/// Log-linear fits of `|e - a-|` on `[-L+1, -L/2]` and `|e - a+|` on `[L/2, L-1]`.
pub fn fit_decay(p: &PotentialDescriptor, e: &Path1D) -> TailFits {
    let left = tail_fit(p, e, Tail::Left).ok();
    let right = tail_fit(p, e, Tail::Right).ok();
    TailFits { left, right }
}

pub fn tail_fit(p: &PotentialDescriptor, e: &Path1D, tail: Tail) -> Result<DecayFit> {
    let g = e.grid();
    let l = g.half_length();
    let (lo, hi, well) = match tail {
        Tail::Left => (-l + 1.0, -l / 2.0, p.well_minus()),
        Tail::Right => (l / 2.0, l - 1.0, p.well_plus()),
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..e.len() {
        let x = g.node(j);
        if x >= lo - 1e-12 && x <= hi + 1e-12 {
            xs.push(x);
            ys.push(crate::potential::dist(e.at(j), well));
        }
    }
    fit_exponential(&xs, &ys, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_profile(g: Grid1D, shift: f64) -> Path1D {
        Path1D::from_fn(g, 2, |x| vec![((x - shift) / 2f64.sqrt()).tanh(), 0.0]).unwrap()
    }

    #[test]
    fn constant_path_has_zero_action() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(12.0, 0.1).unwrap();
        let v = Path1D::constant(g, p.well_minus()).unwrap();
        assert_eq!(discrete_action(&p, &v), 0.0);
        assert_eq!(first_integral_residual(&p, &v), 0.0);
    }

    #[test]
    fn tanh_action_matches_closed_form() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(12.0, 0.01).unwrap();
        let j = discrete_action(&p, &tanh_profile(g, 0.0));
        assert!((j - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-5, "{j}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap();
        let g = Grid1D::with_spacing(3.0, 0.1).unwrap();
        let v = Path1D::from_fn(g, 2, |x| {
            vec![
                (x * 0.7).tanh(),
                0.8 / (1.0 + x * x) + 0.1 * (3.0 * x).sin(),
            ]
        })
        .unwrap()
        .clamped(&p);
        let grad = action_gradient(&p, &v).unwrap();
        let eps = 1e-6;
        for idx in 2..v.values().len() - 2 {
            let mut a = v.clone();
            a.values_mut()[idx] += eps;
            let mut b = v.clone();
            b.values_mut()[idx] -= eps;
            let fd = (discrete_action(&p, &a) - discrete_action(&p, &b)) / (2.0 * eps);
            let an = grad.values()[idx];
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1e-3),
                "{idx}: {fd} vs {an}"
            );
        }
        assert!(grad
            .at(0)
            .iter()
            .chain(grad.at(v.len() - 1))
            .all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_is_local_to_the_jump() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(2.0, 0.1).unwrap();
        let v = Path1D::constant(g, p.well_minus()).unwrap().clamped(&p);
        let grad = action_gradient(&p, &v).unwrap();
        let n = v.len();
        for j in 0..n {
            let nz = grad.at(j).iter().any(|&x| x != 0.0);
            assert_eq!(nz, j == n - 2, "node {j}");
        }
    }

    #[test]
    fn pinning_removes_translation() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(12.0, 0.01).unwrap();
        let shifted = tanh_profile(g, 3.0);
        let pinned = pin_translation(&p, &shifted).unwrap();
        let reference = tanh_profile(g, 0.0);
        assert!(pinned.sup_distance(&reference) < 2e-5);
        let centred = reference.clone().clamped(&p);
        let again = pin_translation(&p, &centred).unwrap();
        assert!(again.sup_distance(&centred) < 1e-10);
        let twice = pin_translation(&p, &pinned).unwrap();
        assert!(twice.sup_distance(&pinned) < 1e-10);
    }

    #[test]
    fn pinning_without_crossing_fails() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(2.0, 0.1).unwrap();
        let v = Path1D::constant(g, p.well_minus()).unwrap();
        assert!(matches!(pin_translation(&p, &v), Err(Error::Pinning(_))));
    }

    #[test]
    fn tail_fit_of_tanh() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(12.0, 0.01).unwrap();
        let fits = fit_decay(&p, &tanh_profile(g, 0.0));
        let k = fits.right.unwrap().k;
        assert!((k - 2f64.sqrt()).abs() < 0.02 * 2f64.sqrt(), "{k}");
        let constant = Path1D::constant(g, p.well_plus()).unwrap();
        assert!(tail_fit(&p, &constant, Tail::Right).is_err());
    }

    #[test]
    fn first_integral_of_segment_is_order_one() {
        let p = PotentialDescriptor::decoupled_quartic();
        let g = Grid1D::with_spacing(12.0, 0.01).unwrap();
        let fi = first_integral_residual(&p, &Path1D::baseline(&p, g));
        assert!(fi > 0.1 && fi < 10.0, "{fi}");
        assert!(first_integral_residual(&p, &tanh_profile(g, 0.0)) <= 1e-3);
    }
}
