//! Constant-coefficient preconditioners for the discrete energies.
//!
//! Both model the Hessian of the kinetic terms exactly and replace
//! `D^2 W` by a per-component constant shift taken at the wells.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::exec::Exec;

/// Inverse of `h * (tridiag(-1, 2, -1) / h^2 + sigma_k)` on interior nodes of
/// an `n x m` path, per component.
#[derive(Clone, Debug)]
pub struct TridiagonalPrecond {
    pub n: usize,
    pub h: f64,
    pub shifts: Vec<f64>,
}

impl TridiagonalPrecond {
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let m = self.shifts.len();
        let n = self.n;
        let inner = n - 2;
        z.fill(0.0);
        let off = -1.0 / self.h;
        let mut cp = vec![0.0; inner];
        let mut dp = vec![0.0; inner];
        for (k, &sigma) in self.shifts.iter().enumerate() {
            let diag = 2.0 / self.h + self.h * sigma;
            // Thomas sweep for a constant symmetric tridiagonal system.
            let mut denom = diag;
            cp[0] = off / denom;
            dp[0] = r[m + k] / denom;
            for i in 1..inner {
                denom = diag - off * cp[i - 1];
                cp[i] = off / denom;
                dp[i] = (r[(i + 1) * m + k] - off * dp[i - 1]) / denom;
            }
            z[inner * m + k] = dp[inner - 1];
            for i in (0..inner - 1).rev() {
                let next = z[(i + 2) * m + k];
                z[(i + 1) * m + k] = dp[i] - cp[i] * next;
            }
        }
    }
}

/// Type-I discrete sine transform of a fixed length, computed through a
/// complex FFT of length `2 (N + 1)`.
#[derive(Clone)]
struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        Dst1 {
            n,
            fft: planner.plan_fft_forward(2 * (n + 1)),
        }
    }

    /// `y_k = sum_j x_j sin(pi j k / (N + 1))`, in place.
    fn transform(
        &self,
        data: &mut [f64],
        buf: &mut Vec<Complex<f64>>,
        scratch: &mut Vec<Complex<f64>>,
    ) {
        let n = self.n;
        let len = 2 * (n + 1);
        buf.clear();
        buf.resize(len, Complex::new(0.0, 0.0));
        for j in 0..n {
            buf[j + 1] = Complex::new(data[j], 0.0);
            buf[len - 1 - j] = Complex::new(-data[j], 0.0);
        }
        scratch.resize(self.fft.get_inplace_scratch_len(), Complex::new(0.0, 0.0));
        self.fft.process_with_scratch(buf, scratch);
        for k in 0..n {
            data[k] = -0.5 * buf[k + 1].im;
        }
    }
}

/// Fast solver for `h_t h_x [A_t (x) I + I (x) A_x + beta A_t (x) A_x + sigma_k]`
/// on the interior of an `n_t x n_x` field with `m` components, where `A`
/// is the Dirichlet second-difference matrix.
#[derive(Clone, Debug)]
pub struct SineTransformPrecond {
    nt: usize,
    nx: usize,
    ht: f64,
    hx: f64,
    beta: f64,
    shifts: Vec<f64>,
    lam_t: Vec<f64>,
    lam_x: Vec<f64>,
    dst_t: Dst1,
    dst_x: Dst1,
    exec: Exec,
}

impl SineTransformPrecond {
    pub fn new(
        nt: usize,
        nx: usize,
        ht: f64,
        hx: f64,
        beta: f64,
        shifts: Vec<f64>,
        exec: Exec,
    ) -> Self {
        let mut planner = FftPlanner::new();
        let (it, ix) = (nt - 2, nx - 2);
        let eig = |n: usize, h: f64| -> Vec<f64> {
            (1..=n)
                .map(|p| {
                    let s = (std::f64::consts::PI * p as f64 / (2.0 * (n + 1) as f64)).sin();
                    4.0 * s * s / (h * h)
                })
                .collect()
        };
        SineTransformPrecond {
            nt,
            nx,
            ht,
            hx,
            beta,
            shifts,
            lam_t: eig(it, ht),
            lam_x: eig(ix, hx),
            dst_t: Dst1::new(it, &mut planner),
            dst_x: Dst1::new(ix, &mut planner),
            exec,
        }
    }

    fn rows(&self, data: &mut [f64], width: usize, dst: &Dst1) {
        self.exec.for_each_chunk(data, width, |_, row| {
            let mut buf = Vec::new();
            let mut scratch = Vec::new();
            dst.transform(row, &mut buf, &mut scratch);
        });
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let m = self.shifts.len();
        let (it, ix) = (self.nt - 2, self.nx - 2);
        z.fill(0.0);
        let mut a = vec![0.0; it * ix];
        let mut b = vec![0.0; it * ix];
        let norm = 4.0 / ((it + 1) as f64 * (ix + 1) as f64) / (self.ht * self.hx);
        for (k, &sigma) in self.shifts.iter().enumerate() {
            for i in 0..it {
                for j in 0..ix {
                    a[i * ix + j] = r[((i + 1) * self.nx + j + 1) * m + k];
                }
            }
            self.rows(&mut a, ix, &self.dst_x);
            transpose(&a, &mut b, it, ix);
            self.rows(&mut b, it, &self.dst_t);
            for j in 0..ix {
                let lx = self.lam_x[j];
                for i in 0..it {
                    let lt = self.lam_t[i];
                    b[j * it + i] /= lt + lx + self.beta * lt * lx + sigma;
                }
            }
            self.rows(&mut b, it, &self.dst_t);
            transpose(&b, &mut a, ix, it);
            self.rows(&mut a, ix, &self.dst_x);
            for i in 0..it {
                for j in 0..ix {
                    z[((i + 1) * self.nx + j + 1) * m + k] = norm * a[i * ix + j];
                }
            }
        }
    }
}

fn transpose(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    for i in 0..rows {
        for j in 0..cols {
            dst[j * rows + i] = src[i * cols + j];
        }
    }
}
