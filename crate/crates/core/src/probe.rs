//! Compactly supported perturbations of 2D fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::Grid2D;

/// A perturbation that is zero outside a rectangular block of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub i0: usize,
    pub j0: usize,
    pub ni: usize,
    pub nj: usize,
    pub m: usize,
    /// `((di * nj) + dj) * m + k`
    pub values: Vec<f64>,
}

impl Patch {
    pub fn zero(i0: usize, j0: usize, ni: usize, nj: usize, m: usize) -> Self {
        Patch {
            i0,
            j0,
            ni,
            nj,
            m,
            values: vec![0.0; ni * nj * m],
        }
    }

    /// Restriction of a full-field vector to the block.
    pub fn from_field(
        grid: &Grid2D,
        m: usize,
        full: &[f64],
        i0: usize,
        j0: usize,
        ni: usize,
        nj: usize,
    ) -> Self {
        let mut p = Patch::zero(i0, j0, ni, nj, m);
        for di in 0..ni {
            let o = ((i0 + di) * grid.nx() + j0) * m;
            p.values[di * nj * m..(di + 1) * nj * m].copy_from_slice(&full[o..o + nj * m]);
        }
        p
    }

    /// Errors unless the block keeps `margin` nodes away from every boundary.
    pub fn check_interior(&self, grid: &Grid2D, margin: usize) -> Result<()> {
        let ok = self.ni > 0
            && self.nj > 0
            && self.i0 >= margin
            && self.j0 >= margin
            && self.i0 + self.ni + margin <= grid.nt()
            && self.j0 + self.nj + margin <= grid.nx();
        if !ok {
            return invalid(format!(
                "perturbation block rows {}..{} cols {}..{} is within {margin} nodes of the boundary",
                self.i0,
                self.i0 + self.ni,
                self.j0,
                self.j0 + self.nj
            ));
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_to(&self, grid: &Grid2D, full: &mut [f64]) {
        let w = self.nj * self.m;
        for di in 0..self.ni {
            let o = ((self.i0 + di) * grid.nx() + self.j0) * self.m;
            for (a, b) in full[o..o + w]
                .iter_mut()
                .zip(&self.values[di * w..(di + 1) * w])
            {
                *a += b;
            }
        }
    }

    /// Sum of products with a full-field vector.
    pub fn dot(&self, grid: &Grid2D, full: &[f64]) -> f64 {
        let w = self.nj * self.m;
        let mut s = 0.0;
        for di in 0..self.ni {
            let o = ((self.i0 + di) * grid.nx() + self.j0) * self.m;
            s += full[o..o + w]
                .iter()
                .zip(&self.values[di * w..(di + 1) * w])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        s
    }

    fn get(&self, i: isize, j: isize, k: usize) -> f64 {
        if i < 0 || j < 0 || i >= self.ni as isize || j >= self.nj as isize {
            0.0
        } else {
            self.values[((i as usize) * self.nj + j as usize) * self.m + k]
        }
    }

    /// Squared discrete `H^1 (x) H^1` norm: the cell quadrature of
    /// `phi^2 + |phi_t|^2 + |phi_x|^2 + |phi_tx|^2`.
    pub fn norm_sq(&self, grid: &Grid2D) -> f64 {
        let (ht, hx) = (grid.t.spacing(), grid.x.spacing());
        let mut s = 0.0;
        for ci in -1..self.ni as isize {
            for cj in -1..self.nj as isize {
                for k in 0..self.m {
                    let a = self.get(ci, cj, k);
                    let b = self.get(ci, cj + 1, k);
                    let c = self.get(ci + 1, cj, k);
                    let d = self.get(ci + 1, cj + 1, k);
                    let mass = 0.25 * (a * a + b * b + c * c + d * d);
                    let dt = 0.5 * ((c - a).powi(2) + (d - b).powi(2)) / (ht * ht);
                    let dx = 0.5 * ((b - a).powi(2) + (d - c).powi(2)) / (hx * hx);
                    let tx = (d - c - b + a).powi(2) / (ht * ht * hx * hx);
                    s += ht * hx * (mass + dt + dx + tx);
                }
            }
        }
        s
    }
}

/// `A d cos^2(pi (t - t_c) / (2 w_t)) cos^2(pi (x - x_c) / (2 w_x))` on its
/// support `|t - t_c| < w_t`, `|x - x_c| < w_x`.
#[derive(Clone, Debug, Serialize)]
pub struct Bump {
    pub tc: f64,
    pub xc: f64,
    pub wt: f64,
    pub wx: f64,
    pub amplitude: f64,
    pub direction: Vec<f64>,
}

impl Bump {
    pub fn shape(&self, t: f64, x: f64) -> f64 {
        let (st, sx) = ((t - self.tc) / self.wt, (x - self.xc) / self.wx);
        if st.abs() >= 1.0 || sx.abs() >= 1.0 {
            return 0.0;
        }
        let ct = (std::f64::consts::FRAC_PI_2 * st).cos();
        let cx = (std::f64::consts::FRAC_PI_2 * sx).cos();
        ct * ct * cx * cx
    }

    /// Nodal values on the block of nodes covering the support.
    pub fn patch(&self, grid: &Grid2D) -> Patch {
        let m = self.direction.len();
        let range = |g: &crate::grid::Grid1D, c: f64, w: f64| {
            let h = g.spacing();
            let lo = ((c - w + g.half_length()) / h).floor().max(0.0) as usize;
            let hi = (((c + w + g.half_length()) / h).ceil() as usize).min(g.len() - 1);
            (lo, hi)
        };
        let (ilo, ihi) = range(&grid.t, self.tc, self.wt);
        let (jlo, jhi) = range(&grid.x, self.xc, self.wx);
        // Trim rows and columns where the bump vanishes.
        let (ilo, ihi) = trim(ilo, ihi, |i| self.shape(grid.t.node(i), self.xc) != 0.0);
        let (jlo, jhi) = trim(jlo, jhi, |j| self.shape(self.tc, grid.x.node(j)) != 0.0);
        let (ni, nj) = (ihi + 1 - ilo, jhi + 1 - jlo);
        let mut p = Patch::zero(ilo, jlo, ni, nj, m);
        for di in 0..ni {
            for dj in 0..nj {
                let s = self.amplitude * self.shape(grid.t.node(ilo + di), grid.x.node(jlo + dj));
                for k in 0..m {
                    p.values[(di * nj + dj) * m + k] = s * self.direction[k];
                }
            }
        }
        p
    }
}

fn trim(mut lo: usize, mut hi: usize, nonzero: impl Fn(usize) -> bool) -> (usize, usize) {
    while lo < hi && !nonzero(lo) {
        lo += 1;
    }
    while hi > lo && !nonzero(hi) {
        hi -= 1;
    }
    (lo, hi)
}

/// Random bumps for minimality probes.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeSpec {
    pub count: usize,
    pub seed: u64,
    pub max_amplitude: f64,
    pub min_amplitude: f64,
    pub min_width: f64,
    pub max_width: f64,
    /// Support keeps at least this many cells from every boundary.
    pub margin: usize,
    /// A probe passes when `Delta E >= -rel_tol * (1 + |E|)`.
    pub rel_tol: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            count: 100,
            seed: 0,
            max_amplitude: 0.2,
            min_amplitude: 0.01,
            min_width: 0.25,
            max_width: 2.0,
            margin: 2,
            rel_tol: 1e-8,
        }
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return d.into_iter().map(|v| v / n).collect();
        }
    }
}

fn admissible_centre(
    rng: &mut ChaCha8Rng,
    g: &crate::grid::Grid1D,
    w: f64,
    margin: usize,
) -> Option<f64> {
    let lim = g.half_length() - (margin as f64 + 1.0) * g.spacing() - w;
    (lim > 0.0).then(|| rng.gen_range(-lim..lim))
}

/// Random tensor cosine bumps with widths, centres, signs and directions
/// drawn from `spec`; deterministic in `spec.seed`.
pub fn random_bumps(spec: &ProbeSpec, grid: &Grid2D, m: usize) -> Result<Vec<Bump>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while out.len() < spec.count {
        attempts += 1;
        if attempts > 100 * spec.count.max(1) {
            return invalid("probe widths do not fit inside the domain");
        }
        let wt = rng.gen_range(spec.min_width..=spec.max_width);
        let wx = rng.gen_range(spec.min_width..=spec.max_width);
        let (Some(tc), Some(xc)) = (
            admissible_centre(&mut rng, &grid.t, wt, spec.margin),
            admissible_centre(&mut rng, &grid.x, wx, spec.margin),
        ) else {
            continue;
        };
        let amplitude = rng.gen_range(spec.min_amplitude..=spec.max_amplitude);
        out.push(Bump {
            tc,
            xc,
            wt,
            wx,
            amplitude,
            direction: unit_direction(&mut rng, m),
        });
    }
    Ok(out)
}

/// Test functions for the weak residual: three random widths, centres on a
/// unit lattice, random directions, unit amplitude.
pub fn lattice_bumps(
    count: usize,
    seed: u64,
    grid: &Grid2D,
    m: usize,
    margin: usize,
) -> Result<Vec<Bump>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..2.5)).collect();
    let wmax = widths.iter().copied().fold(0.0, f64::max);
    let lattice = |g: &crate::grid::Grid1D| -> Vec<f64> {
        let lim = g.half_length() - (margin as f64 + 1.0) * g.spacing() - wmax;
        let n = lim.floor() as i64;
        (-n..=n).map(|c| c as f64).collect()
    };
    let (lt, lx) = (lattice(&grid.t), lattice(&grid.x));
    if lt.is_empty() || lx.is_empty() {
        return invalid("domain too small for the test-function lattice");
    }
    Ok((0..count)
        .map(|_| {
            let w = widths[rng.gen_range(0..3)];
            Bump {
                tc: lt[rng.gen_range(0..lt.len())],
                xc: lx[rng.gen_range(0..lx.len())],
                wt: w,
                wx: w,
                amplitude: 1.0,
                direction: unit_direction(&mut rng, m),
            }
        })
        .collect())
}
