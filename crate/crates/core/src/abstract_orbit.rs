//! Orbits `t -> V(t)` in a finite-dimensional stand-in for the space of
//! curves: the constrained class, the segment initializer, the closed-form
//! orbit of the characteristic-function potential, and time dilation.
//!
//! Orbits are piecewise linear in `t` on a possibly non-uniform time grid,
//! so dilations can be applied exactly by moving nodes.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::effective::JMin;
use crate::error::{invalid, Result};
use crate::field::Field2D;
use crate::grid::Grid1D;
use crate::heteroclinic::action_of_values;
use crate::potential::PotentialDescriptor;

/// Diagonal inner product on `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum InnerProduct {
    Euclidean,
    /// `<a, b> = sum_i w_i a_i b_i`
    Weighted(Vec<f64>),
}

impl InnerProduct {
    fn weight(&self, i: usize) -> f64 {
        match self {
            InnerProduct::Euclidean => 1.0,
            InnerProduct::Weighted(w) => w[i],
        }
    }
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| self.weight(i) * x * y)
            .sum()
    }
    pub fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct AbstractOrbit {
    times: Vec<f64>,
    d: usize,
    values: Vec<f64>,
    e_minus: Vec<f64>,
    e_plus: Vec<f64>,
    inner: InnerProduct,
}

impl AbstractOrbit {
    pub fn new(
        times: Vec<f64>,
        d: usize,
        values: Vec<f64>,
        e_minus: Vec<f64>,
        e_plus: Vec<f64>,
        inner: InnerProduct,
    ) -> Result<Self> {
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("orbit times must be strictly increasing, at least two");
        }
        if d == 0 || values.len() != times.len() * d || e_minus.len() != d || e_plus.len() != d {
            return invalid("orbit dimensions are inconsistent");
        }
        if let InnerProduct::Weighted(w) = &inner {
            if w.len() != d || w.iter().any(|&x| !(x > 0.0)) {
                return invalid("inner-product weights must be positive, one per coordinate");
            }
        }
        let o = AbstractOrbit {
            times,
            d,
            values,
            e_minus,
            e_plus,
            inner,
        };
        if !(o.l0() > 0.0) {
            return invalid("orbit endpoints coincide");
        }
        Ok(o)
    }

    /// Rows of a field as an orbit, with the `x` trapezoid inner product.
    pub fn from_field(u: &Field2D) -> Result<Self> {
        let g = u.grid();
        let (nt, m) = (g.nt(), u.dim());
        let weights = (0..g.nx())
            .flat_map(|j| std::iter::repeat_n(g.x.weight(j), m))
            .collect();
        Self::new(
            g.t.nodes(),
            g.nx() * m,
            u.values().to_vec(),
            u.row(0).to_vec(),
            u.row(nt - 1).to_vec(),
            InnerProduct::Weighted(weights),
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
    pub fn inner(&self) -> &InnerProduct {
        &self.inner
    }
    pub fn e_minus(&self) -> &[f64] {
        &self.e_minus
    }
    pub fn e_plus(&self) -> &[f64] {
        &self.e_plus
    }

    /// `||e+ - e-||`
    pub fn l0(&self) -> f64 {
        let d: Vec<f64> = self
            .e_plus
            .iter()
            .zip(&self.e_minus)
            .map(|(a, b)| a - b)
            .collect();
        self.inner.norm(&d)
    }

    /// `(e+ - e-) / l0`
    pub fn direction(&self) -> Vec<f64> {
        let l0 = self.l0();
        self.e_plus
            .iter()
            .zip(&self.e_minus)
            .map(|(a, b)| (a - b) / l0)
            .collect()
    }

    /// `<V(t_i) - e-, n>` at every node.
    pub fn projection(&self) -> Vec<f64> {
        let n = self.direction();
        (0..self.len())
            .map(|i| {
                let v: Vec<f64> = self
                    .at(i)
                    .iter()
                    .zip(&self.e_minus)
                    .map(|(a, b)| a - b)
                    .collect();
                self.inner.dot(&v, &n)
            })
            .collect()
    }

    /// Linear interpolation, constant beyond the ends.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        if t <= self.times[0] {
            return self.at(0).to_vec();
        }
        if t >= self.times[n - 1] {
            return self.at(n - 1).to_vec();
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.at(i)
            .iter()
            .zip(self.at(i + 1))
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Adds `t` as a node (the curve itself is unchanged).
    pub fn with_node(&self, t: f64) -> AbstractOrbit {
        if self.times.contains(&t) || t < self.times[0] || t > self.times[self.len() - 1] {
            return self.clone();
        }
        let i = self.times.partition_point(|&s| s < t);
        let v = self.value_at(t);
        let mut out = self.clone();
        out.times.insert(i, t);
        out.values.splice(i * self.d..i * self.d, v);
        out
    }

    /// Samples the orbit at `times` by linear interpolation.
    pub fn resample(&self, times: &[f64]) -> Result<AbstractOrbit> {
        let values = times.iter().flat_map(|&t| self.value_at(t)).collect();
        AbstractOrbit::new(
            times.to_vec(),
            self.d,
            values,
            self.e_minus.clone(),
            self.e_plus.clone(),
            self.inner.clone(),
        )
    }

    /// `||V(t_{i+1}) - V(t_i)|| / (t_{i+1} - t_i)` for every segment.
    pub fn speeds(&self) -> Vec<f64> {
        (0..self.len() - 1)
            .map(|i| {
                let d: Vec<f64> = self
                    .at(i + 1)
                    .iter()
                    .zip(self.at(i))
                    .map(|(a, b)| a - b)
                    .collect();
                self.inner.norm(&d) / (self.times[i + 1] - self.times[i])
            })
            .collect()
    }
}

/// The effective potential along an orbit.
#[derive(Clone)]
pub enum OrbitPotential {
    /// `0` at `e-` and `e+`, `1` elsewhere. Segment integrals are exact.
    Characteristic,
    /// A continuous potential, integrated by the trapezoid rule.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for OrbitPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitPotential::Characteristic => write!(f, "Characteristic"),
            OrbitPotential::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl OrbitPotential {
    /// `J(row) - J_min` for orbits built with [`AbstractOrbit::from_field`].
    pub fn effective(p: &PotentialDescriptor, j_min: JMin) -> Self {
        let p = p.clone();
        OrbitPotential::Custom(Arc::new(move |v: &[f64]| {
            action_of_values(&p, &j_min.grid, v) - j_min.value
        }))
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ActionParts {
    /// `1/2 int ||V'||^2`
    pub kinetic: f64,
    /// `int W(V)`
    pub potential: f64,
}

impl ActionParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Action over the segments lying inside `[a, b]`.
pub fn window_action(v: &AbstractOrbit, pot: &OrbitPotential, a: f64, b: f64) -> ActionParts {
    let mut parts = ActionParts::default();
    let values: Vec<f64> = match pot {
        OrbitPotential::Custom(f) => (0..v.len()).map(|i| f(v.at(i))).collect(),
        OrbitPotential::Characteristic => Vec::new(),
    };
    for i in 0..v.len() - 1 {
        let (t0, t1) = (v.times[i], v.times[i + 1]);
        if t0 < a || t1 > b {
            continue;
        }
        let dt = t1 - t0;
        let d: Vec<f64> = v
            .at(i + 1)
            .iter()
            .zip(v.at(i))
            .map(|(x, y)| x - y)
            .collect();
        parts.kinetic += 0.5 * v.inner.dot(&d, &d) / dt;
        parts.potential += match pot {
            OrbitPotential::Characteristic => {
                let still = v.at(i) == v.at(i + 1);
                if still && (v.at(i) == v.e_minus() || v.at(i) == v.e_plus()) {
                    0.0
                } else {
                    dt
                }
            }
            OrbitPotential::Custom(_) => 0.5 * dt * (values[i] + values[i + 1]),
        };
    }
    parts
}

pub fn orbit_action(v: &AbstractOrbit, pot: &OrbitPotential) -> ActionParts {
    window_action(v, pot, f64::NEG_INFINITY, f64::INFINITY)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Membership {
    pub member: bool,
    /// `sup { t : <V(s) - e-, n> <= 3 l0 / 4 for all s <= t }`
    pub t_minus: Option<f64>,
    /// `inf { t : <V(s) - e-, n> >= l0 / 4 for all s >= t }`
    pub t_plus: Option<f64>,
    /// A threshold ran into the end of the time grid.
    pub truncated: bool,
}

/// Constrained-class test with the extremal thresholds. Any `t- < t+`
/// below and above them also witness membership.
pub fn class_membership(v: &AbstractOrbit) -> Membership {
    let proj = v.projection();
    let l0 = v.l0();
    let (hi, lo) = (0.75 * l0, 0.25 * l0);
    let t = &v.times;
    let n = t.len();
    let cross = |i: usize, level: f64| {
        let (a, b) = (proj[i], proj[i + 1]);
        t[i] + (level - a) / (b - a) * (t[i + 1] - t[i])
    };
    let mut truncated = false;
    let t_minus = match proj.iter().position(|&p| p > hi) {
        Some(0) => None,
        Some(i) => Some(cross(i - 1, hi)),
        None => {
            truncated = true;
            Some(t[n - 1])
        }
    };
    let t_plus = match proj.iter().rposition(|&p| p < lo) {
        Some(i) if i == n - 1 => None,
        Some(i) => Some(cross(i, lo)),
        None => {
            truncated = true;
            Some(t[0])
        }
    };
    Membership {
        member: t_minus.is_some() && t_plus.is_some(),
        t_minus,
        t_plus,
        truncated,
    }
}

fn nodes_with(grid: &Grid1D, extra: &[f64]) -> Vec<f64> {
    let mut t = grid.nodes();
    for &s in extra {
        if s > t[0] && s < t[t.len() - 1] && !t.contains(&s) {
            let i = t.partition_point(|&x| x < s);
            t.insert(i, s);
        }
    }
    t
}

fn ramp(
    e_minus: &[f64],
    e_plus: &[f64],
    times: Vec<f64>,
    s: impl Fn(f64) -> f64,
) -> Result<AbstractOrbit> {
    let values = times
        .iter()
        .flat_map(|&t| {
            let z = s(t);
            e_minus.iter().zip(e_plus).map(move |(a, b)| {
                if z <= 0.0 {
                    *a
                } else if z >= 1.0 {
                    *b
                } else {
                    a + z * (b - a)
                }
            })
        })
        .collect();
    AbstractOrbit::new(
        times,
        e_minus.len(),
        values,
        e_minus.to_vec(),
        e_plus.to_vec(),
        InnerProduct::Euclidean,
    )
}

/// `e-` before `0`, `e- + sqrt(2) t n` until it reaches `e+` at `l0 / sqrt(2)`,
/// `e+` after. Both corners are grid nodes.
pub fn nonsmooth_orbit(e_minus: &[f64], e_plus: &[f64], grid: &Grid1D) -> Result<AbstractOrbit> {
    if e_minus.len() != e_plus.len() || e_minus == e_plus {
        return invalid("endpoints must be distinct points of the same dimension");
    }
    let l0 = InnerProduct::Euclidean.norm(
        &e_plus
            .iter()
            .zip(e_minus)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let transit = l0 * std::f64::consts::FRAC_1_SQRT_2;
    ramp(e_minus, e_plus, nodes_with(grid, &[0.0, transit]), |t| {
        t / transit
    })
}

/// `e-` before `0`, `e- + t (e+ - e-)` on `[0, 1]`, `e+` after.
pub fn segment_orbit(e_minus: &[f64], e_plus: &[f64], grid: &Grid1D) -> Result<AbstractOrbit> {
    if e_minus.len() != e_plus.len() || e_minus == e_plus {
        return invalid("endpoints must be distinct points of the same dimension");
    }
    ramp(e_minus, e_plus, nodes_with(grid, &[0.0, 1.0]), |t| t)
}

/// Time transit of the nonsmooth orbit, `l0 / sqrt(2)`.
pub fn transit_time(v: &AbstractOrbit) -> f64 {
    v.l0() * std::f64::consts::FRAC_1_SQRT_2
}

/// Dilates `[a, b]` by `kappa`: identity before `a`, `V(a + (t - a) / kappa)`
/// on `[a, a + kappa (b - a)]`, `V(t + (1 - kappa)(b - a))` after.
///
/// Nodes are moved, never resampled, so the action changes by exactly
/// `(1/kappa - 1) K + (kappa - 1) P` with `K`, `P` the window's kinetic and
/// potential parts.
pub fn reparameterize(v: &AbstractOrbit, a: f64, b: f64, kappa: f64) -> Result<AbstractOrbit> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid("kappa must be positive");
    }
    let (t0, t1) = (v.times[0], v.times[v.len() - 1]);
    if !(a < b && a >= t0 && b <= t1) {
        return invalid("window must satisfy t_0 <= a < b <= t_end");
    }
    let mut out = v.with_node(a).with_node(b);
    let shift = (1.0 - kappa) * (b - a);
    for t in out.times.iter_mut() {
        if *t > a && *t <= b {
            *t = a + kappa * (*t - a);
        } else if *t > b {
            *t -= shift;
        }
    }
    Ok(out)
}
