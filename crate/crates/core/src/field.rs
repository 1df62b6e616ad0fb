use crate::error::{invalid, Result};
use crate::grid::Grid2D;
use crate::heteroclinic::Path1D;
use crate::potential::PotentialDescriptor;

/// A map `[-T, T] x [-L, L] -> R^m` sampled on a [`Grid2D`].
///
/// Row `i` is the curve `x -> u(t_i, x)`; values are stored as
/// `((i * n_x) + j) * m + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    m: usize,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid2D, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() != grid.nt() * grid.nx() * m {
            return invalid(format!(
                "field has {} values, expected {} x {} nodes x {m}",
                values.len(),
                grid.nt(),
                grid.nx()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("field contains non-finite values");
        }
        Ok(Field2D { grid, m, values })
    }

    pub fn constant(grid: Grid2D, point: &[f64]) -> Result<Self> {
        let values = point
            .iter()
            .copied()
            .cycle()
            .take(grid.nt() * grid.nx() * point.len())
            .collect();
        Self::new(grid, point.len(), values)
    }

    pub fn from_fn(grid: Grid2D, m: usize, f: impl Fn(f64, f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.nt() * grid.nx() * m);
        for i in 0..grid.nt() {
            for j in 0..grid.nx() {
                let v = f(grid.t.node(i), grid.x.node(j));
                if v.len() != m {
                    return invalid("field function returned the wrong dimension");
                }
                values.extend(v);
            }
        }
        Self::new(grid, m, values)
    }

    /// Every row equal to `e`.
    pub fn stationary(t: crate::grid::Grid1D, e: &Path1D) -> Self {
        let grid = Grid2D::new(t, *e.grid());
        let values = e
            .values()
            .iter()
            .copied()
            .cycle()
            .take(grid.nt() * e.values().len())
            .collect();
        Field2D {
            grid,
            m: e.dim(),
            values,
        }
    }

    /// `(1 - s(t)) e-(x) + s(t) e+(x)` with `s` the cubic smoothstep from
    /// `t = -width` to `t = width`; boundaries are then clamped.
    pub fn blend(
        p: &PotentialDescriptor,
        t: crate::grid::Grid1D,
        e_minus: &Path1D,
        e_plus: &Path1D,
        width: f64,
    ) -> Result<Self> {
        if e_minus.grid() != e_plus.grid() || e_minus.dim() != e_plus.dim() {
            return invalid("boundary curves live on different grids");
        }
        let grid = Grid2D::new(t, *e_minus.grid());
        let mut values = Vec::with_capacity(grid.nt() * e_minus.values().len());
        for i in 0..grid.nt() {
            let z = ((t.node(i) + width) / (2.0 * width)).clamp(0.0, 1.0);
            let s = z * z * (3.0 - 2.0 * z);
            values.extend(
                e_minus
                    .values()
                    .iter()
                    .zip(e_plus.values())
                    .map(|(a, b)| (1.0 - s) * a + s * b),
            );
        }
        let mut f = Self::new(grid, e_minus.dim(), values)?;
        f.clamp_boundaries(p, e_minus, e_plus)?;
        Ok(f)
    }

    /// Rows `t = -T`, `t = T` set to `e-`, `e+`; columns `x = -L`, `x = L` to the wells.
    pub fn clamp_boundaries(
        &mut self,
        p: &PotentialDescriptor,
        e_minus: &Path1D,
        e_plus: &Path1D,
    ) -> Result<()> {
        if *e_minus.grid() != self.grid.x
            || *e_plus.grid() != self.grid.x
            || e_minus.dim() != self.m
        {
            return invalid("boundary curves do not match the field's x grid");
        }
        let (nt, nx, m) = (self.grid.nt(), self.grid.nx(), self.m);
        let w = nx * m;
        self.values[..w].copy_from_slice(e_minus.values());
        self.values[(nt - 1) * w..].copy_from_slice(e_plus.values());
        for i in 1..nt - 1 {
            self.values[i * w..i * w + m].copy_from_slice(p.well_minus());
            self.values[(i + 1) * w - m..(i + 1) * w].copy_from_slice(p.well_plus());
        }
        Ok(())
    }

    /// True when the boundary values equal their targets exactly.
    pub fn respects_boundaries(
        &self,
        p: &PotentialDescriptor,
        e_minus: &Path1D,
        e_plus: &Path1D,
    ) -> bool {
        let mut c = self.clone();
        c.clamp_boundaries(p, e_minus, e_plus).is_ok() && c.values == self.values
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.m
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
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let o = (i * self.grid.nx() + j) * self.m;
        &self.values[o..o + self.m]
    }
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.grid.nx() * self.m;
        &self.values[i * w..(i + 1) * w]
    }
    pub fn row_path(&self, i: usize) -> Path1D {
        Path1D::new(self.grid.x, self.m, self.row(i).to_vec()).expect("row of a valid field")
    }

    /// Flips the sign of the second component.
    pub fn mirrored(&self) -> Field2D {
        let mut out = self.clone();
        for v in out.values.chunks_mut(self.m) {
            v[1] = -v[1];
        }
        out
    }

    /// `(t, x) -> u(-t, x)`.
    pub fn reversed_in_t(&self) -> Field2D {
        let w = self.grid.nx() * self.m;
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.values.chunks(w).rev() {
            values.extend_from_slice(row);
        }
        Field2D {
            grid: self.grid,
            m: self.m,
            values,
        }
    }

    pub fn sup_distance(&self, other: &Field2D) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
