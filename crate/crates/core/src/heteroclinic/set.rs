use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{discrete_action, minimize_heteroclinic, Heteroclinic, HeteroclinicOptions, Path1D};
use super::{h1_distance, l2_distance};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Grid1D;
use crate::potential::PotentialDescriptor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Metric {
    L2,
    H1,
}

/// Rule assigning partition labels to converged heteroclinics.
#[derive(Clone)]
pub enum Labeler {
    /// Sign of the largest-magnitude second component; `-` when it vanishes.
    MirrorSign,
    /// Every member gets `-`.
    Single,
    Custom(Arc<dyn Fn(&Path1D) -> Label + Send + Sync>),
}

impl fmt::Debug for Labeler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Labeler::MirrorSign => write!(f, "MirrorSign"),
            Labeler::Single => write!(f, "Single"),
            Labeler::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Labeler {
    pub fn label(&self, e: &Path1D) -> Label {
        match self {
            Labeler::MirrorSign => {
                if e.extreme_component(1) > 1e-8 {
                    Label::Plus
                } else {
                    Label::Minus
                }
            }
            Labeler::Single => Label::Minus,
            Labeler::Custom(f) => f(e),
        }
    }
}

/// Coarse scan over `[-range, range]` followed by golden-section refinement.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TranslationSearch {
    pub range: f64,
    pub step: f64,
    pub tol: f64,
}

impl TranslationSearch {
    pub fn for_grid(grid: &Grid1D) -> Self {
        TranslationSearch {
            range: grid.half_length() / 2.0,
            step: 10.0 * grid.spacing(),
            tol: 1e-6,
        }
    }

    /// Returns `(argmin, min)` of `f` over the search interval.
    pub fn minimize(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let count = (2.0 * self.range / self.step).round() as usize;
        let mut best = (0.0, f(0.0));
        for i in 0..=count {
            let tau = -self.range + i as f64 * self.step;
            let v = f(tau);
            if v < best.1 {
                best = (tau, v);
            }
        }
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (
            (best.0 - self.step).max(-self.range),
            (best.0 + self.step).min(self.range),
        );
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > self.tol {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
            }
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (t, v);
            }
        }
        best
    }
}

/// `min_tau || u - e(. - tau) ||` in the requested metric, with the optimal `tau`.
pub fn pair_distance(
    u: &Path1D,
    e: &Path1D,
    metric: Metric,
    search: &TranslationSearch,
) -> (f64, f64) {
    let dist = |tau: f64| {
        let shifted = e.translated(tau);
        match metric {
            Metric::L2 => l2_distance(u, &shifted),
            Metric::H1 => h1_distance(u, &shifted),
        }
    };
    search.minimize(dist)
}

#[derive(Clone, Debug)]
pub struct MultistartSpec {
    pub starts: Vec<Path1D>,
    pub options: HeteroclinicOptions,
    /// Pinned results closer than this in `L^2` are merged.
    pub dedup_tol: f64,
    /// Members with action above `J_min + action_tol` are discarded.
    pub action_tol: f64,
    pub labeler: Labeler,
    pub require_partition: bool,
}

impl MultistartSpec {
    /// The baseline profile, plus copies bumped into `u2 > 0` and `u2 < 0`
    /// for mirror-symmetric potentials.
    pub fn default_for(p: &PotentialDescriptor, grid: Grid1D) -> Self {
        let base = Path1D::baseline(p, grid);
        let mut starts = vec![base.clone()];
        let symmetric = p.mirror_symmetric() && p.dim() >= 2;
        if symmetric {
            for sign in [1.0, -1.0] {
                let mut s = base.clone();
                let m = p.dim();
                for j in 1..grid.len() - 1 {
                    let x = grid.node(j);
                    if x.abs() < 2.0 {
                        let c = (std::f64::consts::PI * x / 4.0).cos();
                        s.values_mut()[j * m + 1] += sign * c * c;
                    }
                }
                starts.push(s);
            }
        }
        MultistartSpec {
            starts,
            options: HeteroclinicOptions::default(),
            dedup_tol: 1e-3,
            action_tol: 1e-6,
            labeler: if symmetric {
                Labeler::MirrorSign
            } else {
                Labeler::Single
            },
            require_partition: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Member {
    pub orbit: Heteroclinic,
    pub label: Label,
    /// Index of the start that produced this member.
    pub start: usize,
}

/// Outcome of one multistart run, kept even when discarded.
#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub start: usize,
    pub action: f64,
    pub extreme_u2: f64,
    pub kept: bool,
}

#[derive(Clone, Debug)]
pub struct HeteroclinicSet {
    pub grid: Grid1D,
    pub members: Vec<Member>,
    pub j_min: f64,
    pub d_min: Option<f64>,
    pub d_tilde_min: Option<f64>,
    /// Indices into `members` of the pair realizing `d_min`, `-` first, and
    /// the optimal relative translation.
    pub closest_pair: Option<(usize, usize, f64)>,
    pub candidates: Vec<Candidate>,
}

impl HeteroclinicSet {
    pub fn labels(&self) -> Vec<Label> {
        let mut l: Vec<Label> = self.members.iter().map(|m| m.label).collect();
        l.sort();
        l.dedup();
        l
    }

    pub fn is_partitioned(&self) -> bool {
        self.labels().len() == 2
    }

    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &Member> {
        self.members.iter().filter(move |m| m.label == label)
    }

    /// Pinned representatives `(e-, e+)` of the closest pair.
    pub fn representatives(&self) -> Result<(&Path1D, &Path1D)> {
        let (a, b, _) = self
            .closest_pair
            .ok_or_else(|| Error::Inapplicable("heteroclinic set has a single label".into()))?;
        Ok((&self.members[a].orbit.path, &self.members[b].orbit.path))
    }

    /// Sets the distances from an explicit member list (used when members are
    /// assembled outside [`build_heteroclinic_set`]).
    pub fn from_members(grid: Grid1D, members: Vec<Member>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty heteroclinic set".into()));
        }
        let j_min = members
            .iter()
            .map(|m| m.orbit.action)
            .fold(f64::INFINITY, f64::min);
        let mut set = HeteroclinicSet {
            grid,
            members,
            j_min,
            d_min: None,
            d_tilde_min: None,
            closest_pair: None,
            candidates: Vec::new(),
        };
        set.compute_distances();
        Ok(set)
    }

    fn compute_distances(&mut self) {
        let search = TranslationSearch::for_grid(&self.grid);
        let mut best: Option<(usize, usize, f64, f64)> = None;
        let mut best_h1: Option<f64> = None;
        for (i, a) in self
            .members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.label == Label::Minus)
        {
            for (j, b) in self
                .members
                .iter()
                .enumerate()
                .filter(|(_, m)| m.label == Label::Plus)
            {
                let (tau, d) = pair_distance(&a.orbit.path, &b.orbit.path, Metric::L2, &search);
                if best.is_none_or(|(_, _, _, bd)| d < bd) {
                    best = Some((i, j, tau, d));
                }
                let (_, dh) = pair_distance(&a.orbit.path, &b.orbit.path, Metric::H1, &search);
                best_h1 = Some(best_h1.map_or(dh, |x: f64| x.min(dh)));
            }
        }
        self.d_min = best.map(|b| b.3);
        self.closest_pair = best.map(|b| (b.0, b.1, b.2));
        self.d_tilde_min = best_h1;
    }
}

/// Runs every start, keeps the minimal-action results, deduplicates and labels them.
pub fn build_heteroclinic_set(
    p: &PotentialDescriptor,
    grid: Grid1D,
    spec: &MultistartSpec,
    exec: Exec,
) -> Result<HeteroclinicSet> {
    if spec.starts.is_empty() {
        return Err(Error::InvalidArgument(
            "multistart spec has no starts".into(),
        ));
    }
    if let Some(s) = spec.starts.iter().find(|s| *s.grid() != grid) {
        return Err(Error::InvalidArgument(format!(
            "start on grid {:?} does not match {:?}",
            s.grid(),
            grid
        )));
    }
    let results = exec.map(spec.starts.len(), |i| {
        minimize_heteroclinic(p, &spec.starts[i], &spec.options)
    });
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    let j_min = runs.iter().map(|r| r.action).fold(f64::INFINITY, f64::min);

    let mut members: Vec<Member> = Vec::new();
    let mut candidates = Vec::new();
    for (i, orbit) in runs.into_iter().enumerate() {
        let extreme_u2 = if p.dim() >= 2 {
            orbit.path.extreme_component(1)
        } else {
            0.0
        };
        let low = orbit.action <= j_min + spec.action_tol;
        let duplicate = members
            .iter()
            .any(|m| l2_distance(&m.orbit.path, &orbit.path) <= spec.dedup_tol);
        let kept = low && !duplicate;
        candidates.push(Candidate {
            start: i,
            action: orbit.action,
            extreme_u2,
            kept,
        });
        if kept {
            let label = spec.labeler.label(&orbit.path);
            members.push(Member {
                orbit,
                label,
                start: i,
            });
        }
    }

    let mut set = HeteroclinicSet::from_members(grid, members)?;
    set.candidates = candidates;
    // A discarded duplicate may sit a rounding error below the member it duplicates.
    set.j_min = j_min;
    if spec.require_partition && !set.is_partitioned() {
        let minus = set.with_label(Label::Minus).count();
        let plus = set.with_label(Label::Plus).count();
        return Err(Error::Partition(format!(
            "found {} member(s): {minus} labelled '-', {plus} labelled '+'",
            set.members.len()
        )));
    }
    Ok(set)
}

/// Action of the mirrored path; equals the original bit for bit for
/// mirror-symmetric potentials.
pub fn mirrored_action(p: &PotentialDescriptor, e: &Path1D) -> f64 {
    discrete_action(p, &e.mirrored())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_minimum() {
        let s = TranslationSearch {
            range: 5.0,
            step: 0.5,
            tol: 1e-8,
        };
        let (t, v) = s.minimize(|x| (x - 1.2345).powi(2) + 0.5);
        assert!((t - 1.2345).abs() < 1e-6);
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn recovers_translation() {
        let g = Grid1D::with_spacing(12.0, 0.01).unwrap();
        let e = Path1D::from_fn(g, 2, |x| vec![(x / 2f64.sqrt()).tanh(), 0.0]).unwrap();
        let u = e.translated(0.5);
        let (d, tau) = {
            let (tau, d) = pair_distance(&u, &e, Metric::L2, &TranslationSearch::for_grid(&g));
            (d, tau)
        };
        assert!(d <= 1e-4, "{d}");
        assert!((tau - 0.5).abs() < 1e-3, "{tau}");
    }
}
