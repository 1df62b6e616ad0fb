use crate::error::{invalid, Result};
use crate::grid::Grid1D;
use crate::potential::PotentialDescriptor;

/// A discrete curve `R -> R^m` sampled on a [`Grid1D`], stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Path1D {
    grid: Grid1D,
    m: usize,
    values: Vec<f64>,
    clamped: bool,
}

impl Path1D {
    /// Free-ended path.
    pub fn new(grid: Grid1D, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() != grid.len() * m {
            return invalid(format!(
                "path has {} values, expected {} nodes x {m}",
                values.len(),
                grid.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("path contains non-finite values");
        }
        Ok(Path1D {
            grid,
            m,
            values,
            clamped: false,
        })
    }

    pub fn from_fn(grid: Grid1D, m: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * m);
        for j in 0..grid.len() {
            let v = f(grid.node(j));
            if v.len() != m {
                return invalid("profile function returned the wrong dimension");
            }
            values.extend(v);
        }
        Self::new(grid, m, values)
    }

    pub fn constant(grid: Grid1D, point: &[f64]) -> Result<Self> {
        Self::from_fn(grid, point.len(), |_| point.to_vec())
    }

    /// The baseline profile: `a-` for `x <= -1`, affine on `[-1, 1]`, `a+` after.
    pub fn baseline(p: &PotentialDescriptor, grid: Grid1D) -> Self {
        let (am, ap) = (p.well_minus(), p.well_plus());
        let mut path = Self::from_fn(grid, p.dim(), |x| {
            let s = ((x + 1.0) / 2.0).clamp(0.0, 1.0);
            am.iter().zip(ap).map(|(a, b)| a + (b - a) * s).collect()
        })
        .expect("baseline profile");
        path.clamp_to(p);
        path
    }

    /// Overwrites the end nodes with the wells and marks the path clamped.
    pub fn clamp_to(&mut self, p: &PotentialDescriptor) {
        assert_eq!(self.m, p.dim());
        let n = self.grid.len();
        let m = self.m;
        self.values[..m].copy_from_slice(p.well_minus());
        self.values[(n - 1) * m..].copy_from_slice(p.well_plus());
        self.clamped = true;
    }

    pub fn clamped(mut self, p: &PotentialDescriptor) -> Self {
        self.clamp_to(p);
        self
    }

    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    /// True when the end nodes equal the wells exactly.
    pub fn connects(&self, p: &PotentialDescriptor) -> bool {
        let n = self.grid.len();
        self.at(0) == p.well_minus() && self.at(n - 1) == p.well_plus()
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.m
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn at(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    /// Piecewise-linear interpolant, extended by the end values.
    pub fn interpolate(&self, x: f64, out: &mut [f64]) {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let s = (x + self.grid.half_length()) / h;
        if !(s > 0.0) {
            out.copy_from_slice(self.at(0));
            return;
        }
        if s >= (n - 1) as f64 {
            out.copy_from_slice(self.at(n - 1));
            return;
        }
        let j = (s.floor() as usize).min(n - 2);
        let w = s - j as f64;
        let (a, b) = (self.at(j), self.at(j + 1));
        for k in 0..self.m {
            out[k] = a[k] + w * (b[k] - a[k]);
        }
    }

    /// `x -> self(x - tau)` resampled on the same grid.
    pub fn translated(&self, tau: f64) -> Path1D {
        let mut values = vec![0.0; self.values.len()];
        for j in 0..self.grid.len() {
            let x = self.grid.node(j) - tau;
            self.interpolate(x, &mut values[j * self.m..(j + 1) * self.m]);
        }
        Path1D {
            grid: self.grid,
            m: self.m,
            values,
            clamped: false,
        }
    }

    /// Flips the sign of the second component.
    pub fn mirrored(&self) -> Path1D {
        let mut out = self.clone();
        for v in out.values.chunks_mut(self.m) {
            v[1] = -v[1];
        }
        out
    }

    /// Largest-magnitude value of component `k`, with its sign.
    pub fn extreme_component(&self, k: usize) -> f64 {
        self.values
            .chunks(self.m)
            .map(|v| v[k])
            .fold(
                0.0f64,
                |best, v| if v.abs() > best.abs() { v } else { best },
            )
    }

    pub fn sup_distance(&self, other: &Path1D) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `||u - v||_{L^2}` by trapezoid quadrature.
pub fn l2_distance(u: &Path1D, v: &Path1D) -> f64 {
    let g = u.grid();
    (0..g.len())
        .map(|j| {
            let d2: f64 = u
                .at(j)
                .iter()
                .zip(v.at(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            g.weight(j) * d2
        })
        .sum::<f64>()
        .sqrt()
}

/// `||u - v||_{H^1}`: trapezoid `L^2` part plus the exact derivative
/// `L^2` norm of the piecewise-linear interpolants.
pub fn h1_distance(u: &Path1D, v: &Path1D) -> f64 {
    let l2 = l2_distance(u, v);
    let h = u.grid().spacing();
    let mut d = 0.0;
    for j in 0..u.len() - 1 {
        let (u0, u1, v0, v1) = (u.at(j), u.at(j + 1), v.at(j), v.at(j + 1));
        for k in 0..u.dim() {
            let diff = (u1[k] - u0[k]) - (v1[k] - v0[k]);
            d += diff * diff / h;
        }
    }
    (l2 * l2 + d).sqrt()
}
