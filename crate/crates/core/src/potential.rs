//! Double-well potentials `W: R^m -> R` and sampled checks of the standing
//! hypotheses (two nondegenerate zeros, positive infimum at infinity, and
//! optionally radial growth outside a ball).

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Evaluators supplied by a potential plug-in.
///
/// Implementations must be exact: the gradient and Hessian are the analytic
/// derivatives of `value`.
pub trait Potential: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, u: &[f64]) -> f64;
    fn gradient(&self, u: &[f64], out: &mut [f64]);
    /// Row-major `dim x dim` Hessian.
    fn hessian(&self, u: &[f64], out: &mut [f64]);
    /// `W(u1, u2, ..) == W(u1, -u2, ..)` holds exactly.
    fn mirror_symmetric(&self) -> bool {
        false
    }
}

/// `W = 1/4 (1 - u1^2)^2 + 1/2 u2^2` with wells `(+-1, 0)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DecoupledQuartic;

impl Potential for DecoupledQuartic {
    fn name(&self) -> &str {
        "decoupled_quartic"
    }
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, u: &[f64]) -> f64 {
        let s = 1.0 - u[0] * u[0];
        0.25 * s * s + 0.5 * u[1] * u[1]
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        out[0] = -u[0] * (1.0 - u[0] * u[0]);
        out[1] = u[1];
    }
    fn hessian(&self, u: &[f64], out: &mut [f64]) {
        out[0] = 3.0 * u[0] * u[0] - 1.0;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = 1.0;
    }
    fn mirror_symmetric(&self) -> bool {
        true
    }
}

/// `W = 1/4 (u1^2 - 1)^2 + 1/2 (u2^2 - a (1 - u1^2))^2 + mu/2 u2^2`.
///
/// The middle term vanishes on the ellipse `u1^2 + u2^2 / a = 1`, which
/// offers two cheap off-axis routes between the wells `(+-1, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct EllipticWell {
    pub a: f64,
    pub mu: f64,
}

impl Default for EllipticWell {
    fn default() -> Self {
        EllipticWell { a: 2.0, mu: 0.1 }
    }
}

impl EllipticWell {
    #[inline]
    fn ellipse(&self, u: &[f64]) -> f64 {
        u[1] * u[1] - self.a * (1.0 - u[0] * u[0])
    }
}

impl Potential for EllipticWell {
    fn name(&self) -> &str {
        "elliptic_well"
    }
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, u: &[f64]) -> f64 {
        let s = u[0] * u[0] - 1.0;
        let g = self.ellipse(u);
        0.25 * s * s + 0.5 * g * g + 0.5 * self.mu * u[1] * u[1]
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        let g = self.ellipse(u);
        out[0] = u[0] * (u[0] * u[0] - 1.0) + 2.0 * self.a * u[0] * g;
        out[1] = 2.0 * u[1] * g + self.mu * u[1];
    }
    fn hessian(&self, u: &[f64], out: &mut [f64]) {
        let g = self.ellipse(u);
        let ga = 2.0 * self.a * u[0];
        out[0] = 3.0 * u[0] * u[0] - 1.0 + ga * ga + 2.0 * self.a * g;
        out[1] = 2.0 * u[1] * ga;
        out[2] = out[1];
        out[3] = 4.0 * u[1] * u[1] + 2.0 * g + self.mu;
    }
    fn mirror_symmetric(&self) -> bool {
        true
    }
}

/// A potential together with its wells and nondegeneracy data.
#[derive(Clone, Debug)]
pub struct PotentialDescriptor {
    inner: Arc<dyn Potential>,
    well_minus: Vec<f64>,
    well_plus: Vec<f64>,
    /// Radius of the balls around the wells where convexity is claimed.
    pub r: f64,
    /// Claimed lower bound for `D^2 W` on those balls.
    pub c: f64,
    /// Radius beyond which `W(s u) >= W(u)` for `s >= 1`.
    pub rho: Option<f64>,
}

impl PotentialDescriptor {
    pub fn new(
        inner: Arc<dyn Potential>,
        well_minus: Vec<f64>,
        well_plus: Vec<f64>,
        r: f64,
        c: f64,
        rho: Option<f64>,
    ) -> Result<Self> {
        let m = inner.dim();
        if m < 2 {
            return invalid("potential dimension must be at least 2");
        }
        if well_minus.len() != m || well_plus.len() != m {
            return invalid("well dimension does not match potential dimension");
        }
        if well_minus == well_plus {
            return invalid("wells must be distinct");
        }
        if !(r > 0.0 && c > 0.0) {
            return invalid("r and c must be positive");
        }
        if let Some(rho) = rho {
            if !(rho > 0.0) {
                return invalid("rho must be positive");
            }
        }
        Ok(PotentialDescriptor {
            inner,
            well_minus,
            well_plus,
            r,
            c,
            rho,
        })
    }

    pub fn decoupled_quartic() -> Self {
        Self::new(
            Arc::new(DecoupledQuartic),
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            0.1,
            1.0,
            Some(1.5),
        )
        .expect("builtin descriptor")
    }

    pub fn elliptic_well(a: f64, mu: f64) -> Result<Self> {
        if !(a > 0.0 && mu > 0.0) {
            return invalid("elliptic well needs a > 0 and mu > 0");
        }
        Self::new(
            Arc::new(EllipticWell { a, mu }),
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            5e-4,
            mu,
            Some(2.0),
        )
    }

    pub fn inner(&self) -> &Arc<dyn Potential> {
        &self.inner
    }
    pub fn name(&self) -> &str {
        self.inner.name()
    }
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }
    pub fn well_minus(&self) -> &[f64] {
        &self.well_minus
    }
    pub fn well_plus(&self) -> &[f64] {
        &self.well_plus
    }
    pub fn mirror_symmetric(&self) -> bool {
        self.inner.mirror_symmetric()
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return invalid(format!(
                "point has dimension {}, expected {}",
                u.len(),
                self.dim()
            ));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite point");
        }
        Ok(())
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        Ok(self.inner.value(u))
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        let mut g = vec![0.0; self.dim()];
        self.inner.gradient(u, &mut g);
        Ok(g)
    }

    pub fn hessian_quadform(&self, u: &[f64], nu: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        self.check_point(nu)?;
        let n2: f64 = nu.iter().map(|x| x * x).sum();
        if (n2.sqrt() - 1.0).abs() > 1e-12 {
            return invalid("direction must be a unit vector");
        }
        Ok(self.quadform_unchecked(u, nu))
    }

    // Unchecked evaluators for the hot loops; callers guarantee shape.

    #[inline]
    pub fn w(&self, u: &[f64]) -> f64 {
        self.inner.value(u)
    }

    #[inline]
    pub fn grad_into(&self, u: &[f64], out: &mut [f64]) {
        self.inner.gradient(u, out)
    }

    pub fn hessian_into(&self, u: &[f64], out: &mut [f64]) {
        self.inner.hessian(u, out)
    }

    fn quadform_unchecked(&self, u: &[f64], nu: &[f64]) -> f64 {
        let m = self.dim();
        let mut h = vec![0.0; m * m];
        self.inner.hessian(u, &mut h);
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += h[i * m + j] * nu[i] * nu[j];
            }
        }
        q
    }

    /// Diagonal of `D^2 W` at the `+` well.
    pub fn well_hessian_diag(&self) -> Vec<f64> {
        let m = self.dim();
        let mut h = vec![0.0; m * m];
        self.inner.hessian(&self.well_plus, &mut h);
        (0..m).map(|i| h[i * m + i]).collect()
    }

    /// Largest eigenvalue of `D^2 W` over the two wells.
    pub fn hessian_scale(&self) -> f64 {
        let m = self.dim();
        let mut h = vec![0.0; m * m];
        let mut top = 0.0f64;
        for well in [&self.well_minus, &self.well_plus] {
            self.inner.hessian(well, &mut h);
            let ev = symmetric_eigenvalues(&h, m);
            top = top.max(ev.into_iter().fold(f64::MIN, f64::max));
        }
        top
    }
}

/// Cyclic Jacobi eigenvalues of a small symmetric matrix.
pub(crate) fn symmetric_eigenvalues(a: &[f64], m: usize) -> Vec<f64> {
    let mut a = a.to_vec();
    for _sweep in 0..64 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).collect()
}

/// Sampling parameters for [`verify_double_well`].
#[derive(Clone, Debug, Serialize)]
pub struct SampleSpec {
    /// Half-width of the cubic sampling box `[-b, b]^m`.
    pub box_half: f64,
    pub step: f64,
    pub sphere_radius: f64,
    pub ball_samples: usize,
    pub directions: usize,
    pub sphere_samples: usize,
    /// Relative slack on the claimed convexity constant.
    pub hessian_rel_tol: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            box_half: 3.0,
            step: 0.05,
            sphere_radius: 5.0,
            ball_samples: 400,
            directions: 64,
            sphere_samples: 2000,
            hessian_rel_tol: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub nonnegative_two_zeros: bool,
    pub hessian_bound: bool,
    pub sphere_positive: bool,
    /// `None` when the descriptor carries no growth radius.
    pub growth: Option<bool>,
    pub min_off_well: f64,
    pub measured_c: f64,
    pub sphere_inf: f64,
    pub r: f64,
    pub claimed_c: f64,
    pub samples: usize,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.nonnegative_two_zeros
            && self.hessian_bound
            && self.sphere_positive
            && self.growth.unwrap_or(true)
    }
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Sampled check of the double-well hypotheses. Never mutates `p`.
pub fn verify_double_well(p: &PotentialDescriptor, spec: &SampleSpec) -> HypothesisReport {
    let m = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let wells = [p.well_minus(), p.well_plus()];

    // Box scan. Points coinciding with a well are the allowed zeros.
    let per_axis = (2.0 * spec.box_half / spec.step).round() as usize + 1;
    let total = per_axis.pow(m as u32);
    let mut nonneg = true;
    let mut min_off = f64::INFINITY;
    let mut u = vec![0.0; m];
    for flat in 0..total {
        let mut k = flat;
        for x in u.iter_mut() {
            *x = -spec.box_half + (k % per_axis) as f64 * spec.step;
            k /= per_axis;
        }
        let w = p.w(&u);
        if w < 0.0 {
            nonneg = false;
        }
        let at_well = wells.iter().any(|a| dist(&u, a) < 1e-9);
        if !at_well {
            min_off = min_off.min(w);
        }
    }
    let wells_zero = wells.iter().all(|a| p.w(a) == 0.0);
    let nonnegative_two_zeros = nonneg && wells_zero && min_off > 0.0;

    // Convexity on the r-balls: the well centres, the axis directions and
    // seeded random directions.
    let mut dirs: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..spec.directions {
        dirs.push(random_unit(&mut rng, m));
    }
    let mut measured_c = f64::INFINITY;
    for a in wells {
        let mut pts = vec![a.to_vec()];
        for _ in 0..spec.ball_samples {
            let d = random_unit(&mut rng, m);
            let rad = p.r * rng.gen::<f64>().powf(1.0 / m as f64);
            pts.push(a.iter().zip(&d).map(|(x, y)| x + rad * y).collect());
        }
        for d in &dirs {
            // Boundary of the ball along each direction.
            pts.push(a.iter().zip(d).map(|(x, y)| x + p.r * y).collect());
        }
        for q in &pts {
            for nu in &dirs {
                measured_c = measured_c.min(p.quadform_unchecked(q, nu));
            }
        }
    }
    let hessian_bound = measured_c > 0.0 && measured_c >= p.c * (1.0 - spec.hessian_rel_tol);

    let mut sphere_inf = f64::INFINITY;
    for i in 0..spec.sphere_samples {
        let d = if m == 2 {
            let th = std::f64::consts::TAU * i as f64 / spec.sphere_samples as f64;
            vec![th.cos(), th.sin()]
        } else {
            random_unit(&mut rng, m)
        };
        let q: Vec<f64> = d.iter().map(|x| spec.sphere_radius * x).collect();
        sphere_inf = sphere_inf.min(p.w(&q));
    }

    let growth = p.rho.map(|rho| {
        let rays = spec.sphere_samples.max(16);
        let radial = 200;
        (0..rays).all(|i| {
            let d = if m == 2 {
                let th = std::f64::consts::TAU * i as f64 / rays as f64;
                vec![th.cos(), th.sin()]
            } else {
                random_unit(&mut rng, m)
            };
            let mut prev = f64::NEG_INFINITY;
            (0..=radial).all(|k| {
                let s = rho + (spec.sphere_radius - rho) * k as f64 / radial as f64;
                let q: Vec<f64> = d.iter().map(|x| s * x).collect();
                let w = p.w(&q);
                let ok = w >= prev;
                prev = w;
                ok
            })
        })
    });

    HypothesisReport {
        nonnegative_two_zeros,
        hessian_bound,
        sphere_positive: sphere_inf > 0.0,
        growth,
        min_off_well: min_off,
        measured_c,
        sphere_inf,
        r: p.r,
        claimed_c: p.c,
        samples: total,
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
