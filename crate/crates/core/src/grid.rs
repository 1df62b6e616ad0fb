use serde::Serialize;

use crate::error::{invalid, Result};

/// Uniform grid on `[-L, L]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid1D {
    half_length: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return invalid("half length must be positive and finite");
        }
        if n < 3 {
            return invalid("grid needs at least 3 nodes");
        }
        Ok(Grid1D { half_length, n })
    }

    /// Grid with spacing as close as possible to `h`.
    pub fn with_spacing(half_length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid("spacing must be positive");
        }
        let cells = (2.0 * half_length / h).round().max(2.0) as usize;
        Self::new(half_length, cells + 1)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.n - 1) as f64
    }
    /// Node `j`; the middle node of an odd grid is exactly zero.
    pub fn node(&self, j: usize) -> f64 {
        let c = (self.n - 1) as f64 / 2.0;
        (j as f64 - c) * self.spacing()
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }
    /// Trapezoid weight of node `j` (includes the spacing).
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }
}

/// Tensor grid on `[-T, T] x [-L, L]`, `t` varies slowest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid2D {
    pub t: Grid1D,
    pub x: Grid1D,
}

impl Grid2D {
    pub fn new(t: Grid1D, x: Grid1D) -> Self {
        Grid2D { t, x }
    }
    pub fn with_spacing(half_t: f64, half_x: f64, ht: f64, hx: f64) -> Result<Self> {
        Ok(Grid2D {
            t: Grid1D::with_spacing(half_t, ht)?,
            x: Grid1D::with_spacing(half_x, hx)?,
        })
    }
    pub fn nt(&self) -> usize {
        self.t.len()
    }
    pub fn nx(&self) -> usize {
        self.x.len()
    }
}
