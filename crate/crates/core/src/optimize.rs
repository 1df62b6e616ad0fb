//! Preconditioned limited-memory BFGS with a monotone backtracking line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// A smooth objective over a flat vector of unknowns.
///
/// Fixed (Dirichlet) entries are expressed by returning a zero gradient
/// there and by a preconditioner that maps zero to zero on them.
pub trait Objective {
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Approximate inverse Hessian applied to `r`.
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }

    fn exec(&self) -> Exec {
        Exec::default()
    }
}

/// Gradient sup-norm threshold, possibly scaled by the objective value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// `rel * max(1, |f|)`
    ScaledMax(f64),
    /// `rel * (1 + |f|)`
    ScaledSum(f64),
}

impl Tolerance {
    pub fn bound(&self, f: f64) -> f64 {
        match *self {
            Tolerance::Absolute(t) => t,
            Tolerance::ScaledMax(t) => t * f.abs().max(1.0),
            Tolerance::ScaledSum(t) => t * (1.0 + f.abs()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the gradient sup-norm is at or below this bound.
    pub tolerance: Tolerance,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Relative energy resolution; below it the line search accepts a step
    /// on directional-derivative progress alone.
    pub roundoff: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iter: 200_000,
            tolerance: Tolerance::Absolute(1e-8),
            armijo: 1e-4,
            max_backtracks: 60,
            roundoff: 8.0 * f64::EPSILON,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective value of every accepted iterate, starting with the initial one.
    pub trace: Vec<f64>,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
) -> Result<Outcome> {
    let ex = obj.exec();
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, &mut g);
    let mut evaluations = 1;
    let mut trace = vec![f];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);

    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut alphas = vec![0.0; opts.memory];

    let mut iter = 0;
    loop {
        let gnorm = ex.sup_norm(&g);
        if !f.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                grad_norm: gnorm,
                last: x,
            });
        }
        if gnorm <= opts.tolerance.bound(f) {
            return Ok(Outcome {
                x,
                value: f,
                grad_norm: gnorm,
                iterations: iter,
                evaluations,
                trace,
            });
        }
        if iter >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: iter,
                grad_norm: gnorm,
                last: x,
            });
        }

        // Two-loop recursion with the preconditioner as the seed matrix.
        d.copy_from_slice(&g);
        for (k, p) in pairs.iter().enumerate().rev() {
            let a = p.rho * ex.dot(&p.s, &d);
            alphas[k] = a;
            ex.axpy(-a, &p.y, &mut d);
        }
        obj.precondition(&d, &mut z);
        if let Some(p) = pairs.back() {
            let mut pz = vec![0.0; n];
            obj.precondition(&p.y, &mut pz);
            let gamma = ex.dot(&p.s, &p.y) / ex.dot(&p.y, &pz);
            if gamma.is_finite() && gamma > 0.0 {
                z.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for (k, p) in pairs.iter().enumerate() {
            let b = p.rho * ex.dot(&p.y, &z);
            ex.axpy(alphas[k] - b, &p.s, &mut z);
        }
        for (di, zi) in d.iter_mut().zip(&z) {
            *di = -zi;
        }
        let mut gd = ex.dot(&g, &d);
        if !(gd < 0.0) {
            pairs.clear();
            obj.precondition(&g, &mut z);
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = -zi;
            }
            gd = ex.dot(&g, &d);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            xn.copy_from_slice(&x);
            ex.axpy(alpha, &d, &mut xn);
            let fnew = obj.eval(&xn, &mut gn);
            evaluations += 1;
            if fnew.is_finite() {
                if fnew <= f + opts.armijo * alpha * gd {
                    accepted = Some(fnew);
                    break;
                }
                let resolution = opts.roundoff * f.abs().max(f64::MIN_POSITIVE);
                if fnew <= f + resolution && ex.dot(&gn, &d).abs() <= 0.9 * gd.abs() {
                    accepted = Some(fnew);
                    break;
                }
                // Safeguarded quadratic interpolation.
                let denom = 2.0 * (fnew - f - gd * alpha);
                let trial = if denom > 0.0 {
                    -gd * alpha * alpha / denom
                } else {
                    0.5 * alpha
                };
                alpha = trial.clamp(0.1 * alpha, 0.5 * alpha);
            } else {
                alpha *= 0.1;
            }
        }

        match accepted {
            Some(fnew) => {
                let mut s = xn.clone();
                ex.axpy(-1.0, &x, &mut s);
                let mut y = gn.clone();
                ex.axpy(-1.0, &g, &mut y);
                let sy = ex.dot(&s, &y);
                if sy > 0.0 && sy.is_finite() {
                    if pairs.len() == opts.memory {
                        pairs.pop_front();
                    }
                    pairs.push_back(Pair {
                        s,
                        y,
                        rho: 1.0 / sy,
                    });
                }
                std::mem::swap(&mut x, &mut xn);
                std::mem::swap(&mut g, &mut gn);
                f = fnew;
                trace.push(f);
            }
            None if !pairs.is_empty() => pairs.clear(),
            None => {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    grad_norm: gnorm,
                    last: x,
                });
            }
        }
        iter += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;
    impl Objective for Rosenbrock {
        fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    #[test]
    fn rosenbrock_converges_monotonically() {
        let opts = LbfgsOptions {
            tolerance: Tolerance::Absolute(1e-10),
            ..Default::default()
        };
        let out = minimize(&Rosenbrock, vec![-1.2, 1.0], &opts).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let opts = LbfgsOptions {
            tolerance: Tolerance::Absolute(1e-14),
            max_iter: 3,
            ..Default::default()
        };
        match minimize(&Rosenbrock, vec![-1.2, 1.0], &opts) {
            Err(Error::NonConvergence {
                iterations, last, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
