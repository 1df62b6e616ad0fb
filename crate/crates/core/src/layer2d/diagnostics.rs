//! Post-hoc checks on a computed layer.

use serde::Serialize;

use super::{functional, Order};
use crate::effective::{dist_to_subset, JMin};
use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::field::Field2D;
use crate::fit::{fit_exponential, DecayFit, Tail};
use crate::heteroclinic::{h1_distance, HeteroclinicSet, Label, Metric, Path1D};
use crate::potential::{dist, PotentialDescriptor};
use crate::probe::{random_bumps, Patch, ProbeSpec};

/// Per-row comparison of the kinetic and potential parts of the orbit
/// `t -> U(t)`, over interior rows.
#[derive(Clone, Debug, Serialize)]
pub struct EquipartitionProfile {
    pub t: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `|lhs - rhs| / (|lhs| + |rhs| + epsilon)`
    pub relative: Vec<f64>,
    /// `1e-4 * max_i (|lhs_i| + |rhs_i|)`, so rows where both sides have
    /// decayed to noise do not dominate.
    pub epsilon: f64,
}

impl EquipartitionProfile {
    /// Largest relative residual over rows with `|t| <= window`.
    pub fn max_relative(&self, window: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.relative)
            .filter(|(t, _)| t.abs() <= window + 1e-12)
            .fold(0.0, |m, (_, r)| m.max(*r))
    }
}

/// Unclamped `J(U_i) - J_min` for every row.
pub fn row_effective(p: &PotentialDescriptor, u: &Field2D, j_min: &JMin) -> Result<Vec<f64>> {
    if u.grid().x != j_min.grid {
        return invalid("J_min was computed on a different x grid");
    }
    let f = functional(p, u, Order::Second, Exec::default())?;
    Ok(f.row_actions(u.values())
        .into_iter()
        .map(|j| j - j_min.value)
        .collect())
}

pub(crate) fn equipartition(
    p: &PotentialDescriptor,
    u: &Field2D,
    j_min: &JMin,
    order: Order,
) -> Result<EquipartitionProfile> {
    let w = row_effective(p, u, j_min)?;
    let g = u.grid();
    let (nt, nx, m) = (g.nt(), g.nx(), u.dim());
    let (ht, hx) = (g.t.spacing(), g.x.spacing());
    let mut t = Vec::new();
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for i in 1..nt - 1 {
        let (a, b) = (u.row(i - 1), u.row(i + 1));
        let mut l2 = 0.0;
        let mut dx2 = 0.0;
        for j in 0..nx {
            for k in 0..m {
                let d = (b[j * m + k] - a[j * m + k]) / (2.0 * ht);
                l2 += g.x.weight(j) * d * d;
                if order == Order::Fourth && j + 1 < nx {
                    let dn = (b[(j + 1) * m + k] - a[(j + 1) * m + k]) / (2.0 * ht);
                    dx2 += (dn - d) * (dn - d) / hx;
                }
            }
        }
        t.push(g.t.node(i));
        lhs.push(0.5 * (l2 + dx2));
        rhs.push(w[i]);
    }
    let epsilon = 1e-4
        * lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| a.abs() + b.abs())
            .fold(0.0, f64::max);
    let relative = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| {
            let s = a.abs() + b.abs() + epsilon;
            if s > 0.0 {
                (a - b).abs() / s
            } else {
                0.0
            }
        })
        .collect();
    Ok(EquipartitionProfile {
        t,
        lhs,
        rhs,
        relative,
        epsilon,
    })
}

/// Equipartition of kinetic and effective potential energy per row.
pub fn equipartition_profile(
    p: &PotentialDescriptor,
    u: &Field2D,
    j_min: &JMin,
) -> Result<EquipartitionProfile> {
    equipartition(p, u, j_min, Order::Second)
}

/// Membership of `t -> U(t)` in the constrained class: rows near `t = -T`
/// within `threshold` of the `-` members, rows near `t = T` of the `+` ones.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub metric: Metric,
    pub threshold: f64,
    pub dist_minus: Vec<f64>,
    pub dist_plus: Vec<f64>,
    /// Largest `t_i` with every row up to it within the threshold of `F-`.
    pub t_minus: Option<f64>,
    /// Smallest `t_i` with every row from it on within the threshold of `F+`.
    pub t_plus: Option<f64>,
    /// Both thresholds lie inside `[-T/2, T/2]`.
    pub pass: bool,
    /// Set when the certificate fails: the strip is likely too short.
    pub domain_too_small: bool,
}

pub fn certificate(
    u: &Field2D,
    set: &HeteroclinicSet,
    metric: Metric,
    threshold: f64,
    exec: Exec,
) -> Result<Certificate> {
    let g = u.grid();
    let nt = g.nt();
    let rows = exec.map(nt, |i| {
        let row = u.row_path(i);
        let a = dist_to_subset(&row, set, metric, Some(Label::Minus)).map(|n| n.distance);
        let b = dist_to_subset(&row, set, metric, Some(Label::Plus)).map(|n| n.distance);
        (a, b)
    });
    let mut dist_minus = Vec::with_capacity(nt);
    let mut dist_plus = Vec::with_capacity(nt);
    for (a, b) in rows {
        dist_minus.push(a?);
        dist_plus.push(b?);
    }
    let first_bad_minus = dist_minus.iter().position(|&d| d > threshold);
    let t_minus = match first_bad_minus {
        Some(0) => None,
        Some(i) => Some(g.t.node(i - 1)),
        None => Some(g.t.node(nt - 1)),
    };
    let last_bad_plus = dist_plus.iter().rposition(|&d| d > threshold);
    let t_plus = match last_bad_plus {
        Some(i) if i == nt - 1 => None,
        Some(i) => Some(g.t.node(i + 1)),
        None => Some(g.t.node(0)),
    };
    let half = 0.5 * g.t.half_length();
    let pass =
        t_minus.is_some_and(|t| t >= -half - 1e-12) && t_plus.is_some_and(|t| t <= half + 1e-12);
    Ok(Certificate {
        metric,
        threshold,
        dist_minus,
        dist_plus,
        t_minus,
        t_plus,
        pass,
        domain_too_small: !pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailOutcome {
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

impl TailOutcome {
    fn from(r: Result<DecayFit>) -> Self {
        match r {
            Ok(f) => TailOutcome {
                fit: Some(f),
                error: None,
            },
            Err(e) => TailOutcome {
                fit: None,
                error: Some(e.to_string()),
            },
        }
    }
    pub fn k_positive(&self) -> bool {
        self.fit.is_some_and(|f| f.k > 0.0)
    }
}

/// Decay of `||U(t) - e+-||_{H^1}` in `t` and of `sup_t |u(t, x) - a+-|` in `x`.
#[derive(Clone, Debug, Serialize)]
pub struct LayerDecay {
    pub t_minus: TailOutcome,
    pub t_plus: TailOutcome,
    pub x_minus: TailOutcome,
    pub x_plus: TailOutcome,
}

impl LayerDecay {
    pub fn all_positive(&self) -> bool {
        [&self.t_minus, &self.t_plus, &self.x_minus, &self.x_plus]
            .iter()
            .all(|t| t.k_positive())
    }
}

fn window(coords: &[f64], values: &[f64], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    coords
        .iter()
        .zip(values)
        .filter(|(c, _)| **c >= lo - 1e-12 && **c <= hi + 1e-12)
        .map(|(c, v)| (*c, *v))
        .unzip()
}

/// Fits on `[-S+1, -S/2]` and `[S/2, S-1]` for each half-length `S`.
pub fn layer_decay_fit(
    p: &PotentialDescriptor,
    u: &Field2D,
    e_minus: &Path1D,
    e_plus: &Path1D,
) -> Result<LayerDecay> {
    let g = u.grid();
    if *e_minus.grid() != g.x || *e_plus.grid() != g.x {
        return invalid("boundary curves do not match the field's x grid");
    }
    let (nt, nx, m) = (g.nt(), g.nx(), u.dim());
    let ts = g.t.nodes();
    let xs = g.x.nodes();
    let rows: Vec<Path1D> = (0..nt).map(|i| u.row_path(i)).collect();
    let dm: Vec<f64> = rows.iter().map(|r| h1_distance(r, e_minus)).collect();
    let dp: Vec<f64> = rows.iter().map(|r| h1_distance(r, e_plus)).collect();
    let mut sm = vec![0.0f64; nx];
    let mut sp = vec![0.0f64; nx];
    for i in 0..nt {
        for j in 0..nx {
            let v = &u.row(i)[j * m..(j + 1) * m];
            sm[j] = sm[j].max(dist(v, p.well_minus()));
            sp[j] = sp[j].max(dist(v, p.well_plus()));
        }
    }
    let (tt, lx) = (g.t.half_length(), g.x.half_length());
    let fit = |c: &[f64], v: &[f64], lo: f64, hi: f64, tail: Tail| {
        let (a, b) = window(c, v, lo, hi);
        TailOutcome::from(fit_exponential(&a, &b, tail))
    };
    Ok(LayerDecay {
        t_minus: fit(&ts, &dm, -tt + 1.0, -tt / 2.0, Tail::Left),
        t_plus: fit(&ts, &dp, tt / 2.0, tt - 1.0, Tail::Right),
        x_minus: fit(&xs, &sm, -lx + 1.0, -lx / 2.0, Tail::Left),
        x_plus: fit(&xs, &sp, lx / 2.0, lx - 1.0, Tail::Right),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRecord {
    pub index: usize,
    pub delta: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeLedger {
    pub tolerance: f64,
    pub records: Vec<ProbeRecord>,
    pub min_delta: f64,
    pub all_pass: bool,
}

/// Energy change over the cells touching the patch when it is added to `u`.
pub fn probe_delta(
    p: &PotentialDescriptor,
    u: &Field2D,
    patch: &Patch,
    order: Order,
    margin: usize,
) -> Result<f64> {
    patch.check_interior(u.grid(), margin)?;
    if patch.m != u.dim() {
        return invalid("probe dimension does not match the field");
    }
    let f = functional(p, u, order, Exec::Sequential)?;
    let mut moved = u.values().to_vec();
    let (ci0, cj0) = (patch.i0 - 1, patch.j0 - 1);
    let (ci1, cj1) = (patch.i0 + patch.ni - 1, patch.j0 + patch.nj - 1);
    let sum = |v: &[f64]| {
        let mut s = 0.0;
        for ci in ci0..=ci1 {
            for cj in cj0..=cj1 {
                s += f.cell_energy(v, ci, cj);
            }
        }
        s
    };
    let before = sum(u.values());
    patch.add_to(u.grid(), &mut moved);
    Ok(sum(&moved) - before)
}

pub(crate) fn probe_ledger(
    p: &PotentialDescriptor,
    u: &Field2D,
    spec: &ProbeSpec,
    order: Order,
    energy: f64,
    exec: Exec,
) -> Result<ProbeLedger> {
    let bumps = random_bumps(spec, u.grid(), u.dim())?;
    let tolerance = spec.rel_tol * (1.0 + energy.abs());
    let deltas = exec.map(bumps.len(), |i| {
        probe_delta(p, u, &bumps[i].patch(u.grid()), order, spec.margin)
    });
    let mut records = Vec::with_capacity(deltas.len());
    for (index, d) in deltas.into_iter().enumerate() {
        let delta = d?;
        records.push(ProbeRecord {
            index,
            delta,
            pass: delta >= -tolerance,
        });
    }
    let min_delta = records
        .iter()
        .map(|r| r.delta)
        .fold(f64::INFINITY, f64::min);
    let all_pass = records.iter().all(|r| r.pass);
    Ok(ProbeLedger {
        tolerance,
        records,
        min_delta,
        all_pass,
    })
}

/// Random compact bumps; each passes when `Delta E >= -rel_tol (1 + |E|)`.
pub fn minimality_probe(
    p: &PotentialDescriptor,
    u: &Field2D,
    spec: &ProbeSpec,
) -> Result<ProbeLedger> {
    let e = super::energy2d(p, u)?;
    probe_ledger(p, u, spec, Order::Second, e, Exec::default())
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsSpec {
    pub probes: ProbeSpec,
    /// Number of weak-form test functions (fourth order).
    pub weak_tests: usize,
    pub weak_seed: u64,
    /// Equipartition is gated on rows with `|t| <= window * T`.
    pub equipartition_window: f64,
    pub equipartition_bound: f64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            probes: ProbeSpec::default(),
            weak_tests: 50,
            weak_seed: 1,
            equipartition_window: 0.5,
            equipartition_bound: 2e-2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Gate {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }
    fn flag(name: &str, ok: bool) -> Self {
        Gate {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            bound: 1.0,
            pass: ok,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerDiagnostics {
    pub order: Order,
    pub energy: f64,
    pub action: f64,
    pub j_min: f64,
    /// `|action - (energy - 2 T J_min)| / max(1, |energy|)`
    pub identity_error: f64,
    /// Sup of the pointwise residual; gated for second order, only reported
    /// for fourth order.
    pub pde_residual: Option<f64>,
    pub weak_residual: Option<f64>,
    pub equipartition: EquipartitionProfile,
    pub equipartition_max: f64,
    pub certificate: Certificate,
    pub decay: LayerDecay,
    /// `sup_t |u(t, L-1) - a+|` over the fitted `x` tail bound there.
    pub uniform_x_ratio: Option<f64>,
    pub probes: ProbeLedger,
    pub gates: Vec<Gate>,
}

impl LayerDiagnostics {
    pub fn all_pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

/// Every check on `u` against `set`, with acceptance gates.
pub fn diagnose(
    p: &PotentialDescriptor,
    set: &HeteroclinicSet,
    u: &Field2D,
    e_minus: &Path1D,
    e_plus: &Path1D,
    order: Order,
    spec: &DiagnosticsSpec,
    exec: Exec,
) -> Result<LayerDiagnostics> {
    let j_min = JMin::of(set);
    let g = *u.grid();
    if g.x != set.grid {
        return invalid("field x grid differs from the heteroclinic set's grid");
    }
    let f = functional(p, u, order, exec)?;
    let energy = f.energy(u.values());
    let action = f.action(u.values(), j_min.value);
    let strip = 2.0 * g.t.half_length();
    let identity_error = (action - (energy - strip * j_min.value)).abs() / energy.abs().max(1.0);
    let h = g.t.spacing().max(g.x.spacing());

    let mut gates = vec![Gate::at_most(
        "renormalization identity",
        identity_error,
        1e-8,
    )];
    let (pde, weak) = match order {
        Order::Second => {
            let (sup, _) = super::pde_residual(p, u)?;
            gates.push(Gate::at_most(
                "pde residual",
                sup,
                10.0 * h * h * p.hessian_scale(),
            ));
            (Some(sup), None)
        }
        Order::Fourth => {
            let tests = crate::probe::lattice_bumps(
                spec.weak_tests,
                spec.weak_seed,
                &g,
                u.dim(),
                spec.probes.margin,
            )?;
            let w = crate::fourth_order::weak_residual(p, u, &tests, spec.probes.margin)?;
            gates.push(Gate::at_most("weak residual", w.max, 10.0 * h));
            (
                Some(crate::fourth_order::stencil_residual(p, u)?),
                Some(w.max),
            )
        }
    };
    let equipartition = equipartition(p, u, &j_min, order)?;
    let equipartition_max =
        equipartition.max_relative(spec.equipartition_window * g.t.half_length());
    gates.push(Gate::at_most(
        "equipartition",
        equipartition_max,
        spec.equipartition_bound,
    ));

    let (metric, threshold) = match order {
        Order::Second => (Metric::L2, set.d_min),
        Order::Fourth => (Metric::H1, set.d_tilde_min),
    };
    let threshold = threshold
        .ok_or_else(|| crate::Error::Inapplicable("heteroclinic set is not partitioned".into()))?
        / 4.0;
    let certificate = certificate(u, set, metric, threshold, exec)?;
    if order == Order::Second {
        gates.push(Gate::flag("class certificate", certificate.pass));
    }

    let decay = layer_decay_fit(p, u, e_minus, e_plus)?;
    let uniform_x_ratio = decay.x_plus.fit.map(|fit| {
        let x = g.x.half_length() - 1.0;
        let j = ((x + g.x.half_length()) / g.x.spacing()).round() as usize;
        let sup = (0..g.nt())
            .map(|i| dist(u.at(i, j), p.well_plus()))
            .fold(0.0, f64::max);
        sup / fit.bound_at(g.x.node(j))
    });
    match order {
        Order::Second => gates.push(Gate::flag("decay rates positive", decay.all_positive())),
        Order::Fourth => gates.push(Gate::flag(
            "t decay rates positive",
            decay.t_minus.k_positive() && decay.t_plus.k_positive(),
        )),
    }

    let probes = probe_ledger(p, u, &spec.probes, order, energy, exec)?;
    gates.push(Gate::flag("minimality probes", probes.all_pass));

    Ok(LayerDiagnostics {
        order,
        energy,
        action,
        j_min: j_min.value,
        identity_error,
        pde_residual: pde,
        weak_residual: weak,
        equipartition,
        equipartition_max,
        certificate,
        decay,
        uniform_x_ratio,
        probes,
        gates,
    })
}
