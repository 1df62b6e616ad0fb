//! The discrete strip energy shared by the second- and fourth-order layers.
//!
//! Cell quadrature: each cell contributes `h_t h_x` times half the mean of
//! its two squared forward differences in each direction, the mean of `W`
//! over its corners and, at fourth order, half the squared cross difference.
//! Summed over cells this is the `t`-trapezoid sum of row actions plus the
//! kinetic energy of the row increments, which is how it is evaluated.

use serde::Serialize;

use crate::exec::{fold_mirrored, Exec};
use crate::grid::Grid2D;
use crate::heteroclinic::action_of_values;
use crate::potential::PotentialDescriptor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Order {
    /// `E = int 1/2 |grad u|^2 + W(u)`
    Second,
    /// `E~ = int 1/2 (|u_tx|^2 + |grad u|^2) + W(u)`
    Fourth,
}

impl Order {
    pub fn tag(self) -> u32 {
        match self {
            Order::Second => 2,
            Order::Fourth => 4,
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Functional<'a> {
    pub p: &'a PotentialDescriptor,
    pub grid: Grid2D,
    pub m: usize,
    pub order: Order,
    pub exec: Exec,
}

impl Functional<'_> {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        (i * self.grid.nx() + j) * self.m
    }

    /// Discrete action of every row.
    pub fn row_actions(&self, v: &[f64]) -> Vec<f64> {
        let w = self.grid.nx() * self.m;
        self.exec.map(self.grid.nt(), |i| {
            action_of_values(self.p, &self.grid.x, &v[i * w..(i + 1) * w])
        })
    }

    /// Kinetic energy in `t` of each pair of neighbouring rows, including the
    /// cross-derivative part at fourth order.
    pub fn edge_terms(&self, v: &[f64]) -> Vec<f64> {
        let (nx, m) = (self.grid.nx(), self.m);
        let (ht, hx) = (self.grid.t.spacing(), self.grid.x.spacing());
        let fourth = self.order == Order::Fourth;
        self.exec.map(self.grid.nt() - 1, |i| {
            let (a, b) = (self.idx(i, 0), self.idx(i + 1, 0));
            let mut l2 = 0.0;
            let mut cross = 0.0;
            for j in 0..nx {
                let mut d2 = 0.0;
                for k in 0..m {
                    let d = v[b + j * m + k] - v[a + j * m + k];
                    d2 += d * d;
                    if fourth && j + 1 < nx {
                        let c = d - (v[b + (j + 1) * m + k] - v[a + (j + 1) * m + k]);
                        cross += c * c;
                    }
                }
                l2 += self.grid.x.weight(j) * d2;
            }
            0.5 * l2 / ht + 0.5 * cross / (ht * hx)
        })
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        let rows = self.row_actions(v);
        let weighted: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, j)| self.grid.t.weight(i) * j)
            .collect();
        fold_mirrored(&weighted) + fold_mirrored(&self.edge_terms(v))
    }

    /// `sum_edges kinetic + sum_i w_i (J(row_i) - J_min)`.
    pub fn action(&self, v: &[f64], j_min: f64) -> f64 {
        let rows = self.row_actions(v);
        let weighted: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, j)| self.grid.t.weight(i) * (j - j_min))
            .collect();
        fold_mirrored(&self.edge_terms(v)) + fold_mirrored(&weighted)
    }

    /// Cross difference of cell `(ci, cj)` in component `k`.
    #[inline]
    fn cross(&self, v: &[f64], ci: usize, cj: usize, k: usize) -> f64 {
        let m = self.m;
        let (a, b) = (self.idx(ci, cj), self.idx(ci + 1, cj));
        v[b + m + k] - v[b + k] - v[a + m + k] + v[a + k]
    }

    /// Gradient with respect to interior nodes; boundary entries are zero.
    pub fn gradient(&self, v: &[f64], grad: &mut [f64]) {
        let (nt, nx, m) = (self.grid.nt(), self.grid.nx(), self.m);
        let (ht, hx) = (self.grid.t.spacing(), self.grid.x.spacing());
        let fourth = self.order == Order::Fourth;
        let this = *self;
        self.exec.for_each_chunk(grad, nx * m, move |i, row| {
            row.fill(0.0);
            if i == 0 || i == nt - 1 {
                return;
            }
            let mut gw = vec![0.0; m];
            for j in 1..nx - 1 {
                let c = this.idx(i, j);
                this.p.grad_into(&v[c..c + m], &mut gw);
                let (up, down) = (this.idx(i - 1, j), this.idx(i + 1, j));
                for k in 0..m {
                    let u = v[c + k];
                    let lt = (2.0 * u - v[up + k] - v[down + k]) / ht;
                    let lx = (2.0 * u - v[c - m + k] - v[c + m + k]) / hx;
                    let mut g = hx * lt + ht * (lx + hx * gw[k]);
                    if fourth {
                        let s = this.cross(v, i - 1, j - 1, k)
                            - this.cross(v, i - 1, j, k)
                            - this.cross(v, i, j - 1, k)
                            + this.cross(v, i, j, k);
                        g += s / (ht * hx);
                    }
                    row[j * m + k] = g;
                }
            }
        });
    }

    /// Energy of one cell by the cell quadrature.
    pub fn cell_energy(&self, v: &[f64], ci: usize, cj: usize) -> f64 {
        let m = self.m;
        let (ht, hx) = (self.grid.t.spacing(), self.grid.x.spacing());
        let c00 = self.idx(ci, cj);
        let c01 = c00 + m;
        let c10 = self.idx(ci + 1, cj);
        let c11 = c10 + m;
        let mut dt = 0.0;
        let mut dx = 0.0;
        let mut cross = 0.0;
        for k in 0..m {
            let (a, b, c, d) = (v[c00 + k], v[c01 + k], v[c10 + k], v[c11 + k]);
            dt += (c - a) * (c - a) + (d - b) * (d - b);
            dx += (b - a) * (b - a) + (d - c) * (d - c);
            let x = d - c - b + a;
            cross += x * x;
        }
        let w = self.p.w(&v[c00..c00 + m])
            + self.p.w(&v[c01..c01 + m])
            + self.p.w(&v[c10..c10 + m])
            + self.p.w(&v[c11..c11 + m]);
        let mut e = 0.25 * dt / (ht * ht) + 0.25 * dx / (hx * hx) + 0.25 * w;
        if self.order == Order::Fourth {
            e += 0.5 * cross / (ht * ht * hx * hx);
        }
        ht * hx * e
    }
}
