//! The effective potential `W(u) = J(u) - J_min` on curves that connect the
//! wells, its expansion about a minimal heteroclinic, its derivative, and
//! distances to the set of minimal heteroclinics.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::heteroclinic::{
    discrete_action, pair_distance, HeteroclinicSet, Label, Metric, Path1D, TranslationSearch,
};
use crate::potential::{dist, PotentialDescriptor};

/// Largest endpoint deviation from the wells accepted for a curve in the
/// affine space.
pub const ENDPOINT_TOL: f64 = 1e-10;

/// The piecewise-linear reference curve: `a-` up to `x = -1`, affine to
/// `a+` at `x = 1`, constant after.
#[derive(Clone, Debug)]
pub struct BaselineProfile {
    path: Path1D,
}

impl BaselineProfile {
    pub fn new(p: &PotentialDescriptor, grid: Grid1D) -> Self {
        BaselineProfile {
            path: Path1D::baseline(p, grid),
        }
    }
    pub fn path(&self) -> &Path1D {
        &self.path
    }
    /// `u - baseline` as a flat vector.
    pub fn offset(&self, u: &Path1D) -> Result<Vec<f64>> {
        if u.grid() != self.path.grid() || u.dim() != self.path.dim() {
            return invalid("curve and baseline live on different grids");
        }
        Ok(u.values()
            .iter()
            .zip(self.path.values())
            .map(|(a, b)| a - b)
            .collect())
    }
}

/// `J_min` together with the grid it was computed on.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JMin {
    pub value: f64,
    pub grid: Grid1D,
    /// Negative values of `W` down to `-tol` are clamped to zero.
    pub tol: f64,
}

impl JMin {
    pub fn new(value: f64, grid: Grid1D) -> Self {
        JMin {
            value,
            grid,
            tol: 1e-6,
        }
    }
    pub fn of(set: &HeteroclinicSet) -> Self {
        JMin::new(set.j_min, set.grid)
    }
    fn check(&self, g: &Grid1D) -> Result<()> {
        if *g != self.grid {
            return invalid(format!(
                "J_min was computed on {:?}, curve lives on {:?}",
                self.grid, g
            ));
        }
        Ok(())
    }
}

/// A curve `baseline + h`, with its effective potential cached once computed.
#[derive(Clone, Debug)]
pub struct AffineCurvePoint {
    u: Path1D,
    value: Option<f64>,
}

impl AffineCurvePoint {
    pub fn new(p: &PotentialDescriptor, u: Path1D) -> Result<Self> {
        if u.dim() != p.dim() {
            return invalid("curve dimension does not match the potential");
        }
        let n = u.len();
        let dev = dist(u.at(0), p.well_minus()).max(dist(u.at(n - 1), p.well_plus()));
        if dev > ENDPOINT_TOL {
            return invalid(format!("curve ends are {dev:e} away from the wells"));
        }
        Ok(AffineCurvePoint { u, value: None })
    }
    pub fn curve(&self) -> &Path1D {
        &self.u
    }
    pub fn value(&mut self, p: &PotentialDescriptor, j_min: &JMin) -> Result<f64> {
        if let Some(v) = self.value {
            return Ok(v);
        }
        let v = effective_potential(p, &self.u, j_min)?;
        self.value = Some(v);
        Ok(v)
    }
}

fn check_clamped(p: &PotentialDescriptor, u: &Path1D) -> Result<()> {
    if u.dim() != p.dim() {
        return invalid("curve dimension does not match the potential");
    }
    if !u.connects(p) {
        return invalid("curve must be clamped to the wells");
    }
    Ok(())
}

/// `J(u) - J_min`, clamped to zero when it lies within `j_min.tol` below.
pub fn effective_potential(p: &PotentialDescriptor, u: &Path1D, j_min: &JMin) -> Result<f64> {
    check_clamped(p, u)?;
    j_min.check(u.grid())?;
    let w = discrete_action(p, u) - j_min.value;
    if w >= 0.0 {
        Ok(w)
    } else if w >= -j_min.tol {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!(
            "effective potential {w:e} is below -{:e}; J_min is not minimal",
            j_min.tol
        )))
    }
}

/// Quadrature of `1/2 |u' - e'|^2 + W(u) - W(e) - grad W(e) . (u - e)`.
pub fn effective_potential_expanded(
    p: &PotentialDescriptor,
    u: &Path1D,
    e: &Path1D,
) -> Result<f64> {
    check_clamped(p, u)?;
    if u.grid() != e.grid() || u.dim() != e.dim() {
        return invalid("curve and heteroclinic live on different grids");
    }
    let g = u.grid();
    let h = g.spacing();
    let m = u.dim();
    let mut kinetic = 0.0;
    for j in 0..u.len() - 1 {
        for k in 0..m {
            let d = (u.at(j + 1)[k] - e.at(j + 1)[k]) - (u.at(j)[k] - e.at(j)[k]);
            kinetic += d * d;
        }
    }
    let mut grad = vec![0.0; m];
    let mut potential = 0.0;
    for j in 0..u.len() {
        let (a, b) = (u.at(j), e.at(j));
        p.grad_into(b, &mut grad);
        let lin: f64 = (0..m).map(|k| grad[k] * (a[k] - b[k])).sum();
        potential += g.weight(j) * (p.w(a) - p.w(b) - lin);
    }
    Ok(0.5 * kinetic / h + potential)
}

/// `D W(u) h`: quadrature of `u' . h' + grad W(u) . h` for `h` vanishing at the ends.
pub fn frechet_apply(p: &PotentialDescriptor, u: &Path1D, dir: &Path1D) -> Result<f64> {
    if u.grid() != dir.grid() || u.dim() != dir.dim() || u.dim() != p.dim() {
        return invalid("curve and direction live on different grids");
    }
    let n = u.len();
    if dir.at(0).iter().chain(dir.at(n - 1)).any(|&v| v != 0.0) {
        return invalid("direction must vanish at the grid ends");
    }
    let g = u.grid();
    let h = g.spacing();
    let m = u.dim();
    let mut kinetic = 0.0;
    for j in 0..n - 1 {
        for k in 0..m {
            kinetic += (u.at(j + 1)[k] - u.at(j)[k]) * (dir.at(j + 1)[k] - dir.at(j)[k]);
        }
    }
    let mut grad = vec![0.0; m];
    let mut potential = 0.0;
    for j in 0..n {
        p.grad_into(u.at(j), &mut grad);
        potential += g.weight(j) * (0..m).map(|k| grad[k] * dir.at(j)[k]).sum::<f64>();
    }
    Ok(kinetic / h + potential)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Nearest {
    pub distance: f64,
    /// Index into the set's members.
    pub member: usize,
    pub tau: f64,
}

/// `min` over members and translations of `|| u - e(. - tau) ||`.
pub fn dist_to_f(u: &Path1D, set: &HeteroclinicSet, metric: Metric) -> Result<Nearest> {
    dist_to_subset(u, set, metric, None)
}

/// As [`dist_to_f`], restricted to members carrying `label` when given.
pub fn dist_to_subset(
    u: &Path1D,
    set: &HeteroclinicSet,
    metric: Metric,
    label: Option<Label>,
) -> Result<Nearest> {
    if set.members.is_empty() {
        return invalid("heteroclinic set is empty");
    }
    if *u.grid() != set.grid {
        return invalid("curve and heteroclinic set live on different grids");
    }
    let search = TranslationSearch::for_grid(&set.grid);
    let mut best: Option<Nearest> = None;
    for (i, m) in set.members.iter().enumerate() {
        if label.is_some_and(|l| l != m.label) {
            continue;
        }
        let (tau, d) = pair_distance(u, &m.orbit.path, metric, &search);
        if best.is_none_or(|b| d < b.distance) {
            best = Some(Nearest {
                distance: d,
                member: i,
                tau,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no member carries the requested label".into()))
}
