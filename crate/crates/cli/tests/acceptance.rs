//! Full-size acceptance checks, one PASS/FAIL line each.
//!
//! Run with `cargo test -p hetero-cli --test acceptance`; the process exits
//! nonzero if any line fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hetero_cli::config::parse_config;
use hetero_cli::run::run;
use hetero_core::abstract_orbit::{
    nonsmooth_orbit, orbit_action, reparameterize, transit_time, OrbitPotential,
};
use hetero_core::effective::effective_potential_expanded;
use hetero_core::heteroclinic::{
    build_heteroclinic_set, discrete_action, minimize_heteroclinic, HeteroclinicOptions,
    HeteroclinicSet, Label, MultistartSpec, Path1D,
};
use hetero_core::layer2d::{ball_project, boundary_pair, energy2d};
use hetero_core::{Exec, Field2D, Grid1D, PotentialDescriptor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const SQRT2: f64 = std::f64::consts::SQRT_2;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn quartic_run(h: f64) -> hetero_core::heteroclinic::Heteroclinic {
    let p = PotentialDescriptor::decoupled_quartic();
    let g = Grid1D::with_spacing(12.0, h).unwrap();
    minimize_heteroclinic(
        &p,
        &Path1D::baseline(&p, g),
        &HeteroclinicOptions::default(),
    )
    .unwrap()
}

fn one_d_oracle() -> Line {
    let (e, took) = timed(|| quartic_run(0.01));
    let g = *e.path.grid();
    let mut err = 0.0f64;
    for j in 0..g.len() {
        let x = g.node(j);
        if x.abs() <= 10.0 {
            let v = e.path.at(j);
            err = err.max((v[0] - (x / SQRT2).tanh()).abs()).max(v[1].abs());
        }
    }
    let dj = (e.action - 2.0 * SQRT2 / 3.0).abs();
    Line {
        name: "1D oracle",
        pass: err <= 1e-4 && dj <= 1e-5 && took.as_secs_f64() <= 10.0,
        detail: format!(
            "sup error {err:.2e}, |J - 2sqrt2/3| {dj:.2e}, {:.2}s",
            took.as_secs_f64()
        ),
    }
}

fn first_integral() -> Line {
    let coarse = quartic_run(0.01).first_integral;
    let fine = quartic_run(0.005).first_integral;
    let ratio = coarse / fine;
    Line {
        name: "1D first integral",
        pass: coarse <= 1e-3 && (3.2..=4.8).contains(&ratio),
        detail: format!("{coarse:.2e} at h=0.01, ratio {ratio:.3} on halving"),
    }
}

fn decay_fit() -> Line {
    let k = quartic_run(0.01).decay.right.map_or(f64::NAN, |f| f.k);
    let rel = (k - SQRT2).abs() / SQRT2;
    Line {
        name: "Decay fit",
        pass: rel <= 0.02,
        detail: format!("k = {k:.6}, relative error {rel:.2e}"),
    }
}

fn set_for(p: &PotentialDescriptor, tol: f64) -> HeteroclinicSet {
    let g = Grid1D::with_spacing(12.0, 0.05).unwrap();
    let mut spec = MultistartSpec::default_for(p, g);
    spec.options.tol = tol;
    build_heteroclinic_set(p, g, &spec, Exec::default()).unwrap()
}

/// A few sine modes plus a localized bump, zero at the grid ends.
fn random_direction(g: &Grid1D, m: usize, rng: &mut ChaCha8Rng) -> Path1D {
    let l = g.half_length();
    let modes: Vec<(usize, usize, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(1..8),
                rng.gen_range(0..m),
                rng.gen_range(-0.2..0.2),
            )
        })
        .collect();
    let (c, w, a, k0) = (
        rng.gen_range(-4.0..4.0),
        rng.gen_range(0.5..3.0),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(0..m),
    );
    let mut d = Path1D::from_fn(*g, m, |x| {
        let mut v = vec![0.0; m];
        for &(n, k, amp) in &modes {
            v[k] += amp * (n as f64 * std::f64::consts::PI * (x + l) / (2.0 * l)).sin();
        }
        if (x - c).abs() < w {
            let s = (std::f64::consts::FRAC_PI_2 * (x - c) / w).cos();
            v[k0] += a * s * s;
        }
        v
    })
    .unwrap();
    let n = d.len();
    d.values_mut()[..m].fill(0.0);
    d.values_mut()[(n - 1) * m..].fill(0.0);
    d
}

fn expansion_identity() -> Line {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (seed, p) in [
        (11, PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap()),
        (12, PotentialDescriptor::decoupled_quartic()),
    ] {
        let set = set_for(&p, 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in &set.members {
            let e = &m.orbit.path;
            for _ in 0..100 {
                let d = random_direction(&set.grid, p.dim(), &mut rng);
                let v = e
                    .values()
                    .iter()
                    .zip(d.values())
                    .map(|(a, b)| a + b)
                    .collect();
                let u = Path1D::new(set.grid, p.dim(), v).unwrap();
                let direct = discrete_action(&p, &u) - set.j_min;
                let expanded = effective_potential_expanded(&p, &u, e).unwrap();
                worst = worst.max((direct - expanded).abs() / direct.abs());
                count += 1;
            }
        }
    }
    Line {
        name: "Expansion identity",
        pass: worst <= 1e-8,
        detail: format!("worst relative error {worst:.2e} over {count} perturbations"),
    }
}

fn nonsmooth_oracle() -> Line {
    let g = Grid1D::with_spacing(4.0, 0.05).unwrap();
    let v = nonsmooth_orbit(&[0.0, 0.0], &[2.0, 0.0], &g).unwrap();
    let transit = transit_time(&v);
    // l0 = 2, so the transit time is sqrt 2 and must equal its correctly rounded value.
    let exact_transit = v.l0() == 2.0 && transit == SQRT2;
    let speed_err = v
        .speeds()
        .iter()
        .enumerate()
        .filter(|(i, _)| v.times()[*i] >= 0.0 && v.times()[i + 1] <= transit)
        .map(|(_, s)| (s - SQRT2).abs())
        .fold(0.0f64, f64::max);

    let w = nonsmooth_orbit(&[0.0, 0.0, 0.0], &[1.0, 2.0, -1.0], &g).unwrap();
    let tr = transit_time(&w);
    let chi = OrbitPotential::Characteristic;
    let base = orbit_action(&w, &chi).total();
    let mut worst = 0.0f64;
    for (a, b) in [(-1.0, 3.0), (0.3, 0.9), (-0.5, 1.0)] {
        for kappa in [0.5, 2.0] {
            let change =
                orbit_action(&reparameterize(&w, a, b, kappa).unwrap(), &chi).total() - base;
            // Inside the transition |V'|^2 = 2 and W = 1.
            let len = (b.min(tr) - a.max(0.0)).max(0.0);
            let expect = (1.0 / kappa - 1.0) * len + (kappa - 1.0) * len;
            worst = worst.max((change - expect).abs());
        }
    }
    Line {
        name: "Nonsmooth oracle",
        pass: exact_transit && speed_err <= 1e-14 && worst <= 1e-10,
        detail: format!("transit exact: {exact_transit}, speed error {speed_err:.1e}, dilation error {worst:.1e}"),
    }
}

fn two_families() -> Line {
    let p = PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap();
    let set = set_for(&p, HeteroclinicOptions::default().tol);
    let n = set.members.len();
    let (minus, plus) = (
        set.with_label(Label::Minus).next(),
        set.with_label(Label::Plus).next(),
    );
    let (mirror, gap) = match (minus, plus) {
        (Some(a), Some(b)) => (
            b.orbit.path.mirrored().sup_distance(&a.orbit.path),
            (a.orbit.action - b.orbit.action).abs(),
        ),
        _ => (f64::INFINITY, f64::INFINITY),
    };
    let (d, dt) = (set.d_min.unwrap_or(0.0), set.d_tilde_min.unwrap_or(0.0));
    let straight = set
        .candidates
        .iter()
        .find(|c| c.extreme_u2 == 0.0)
        .map_or(f64::NAN, |c| c.action);
    Line {
        name: "Two-family construction",
        pass: n >= 2 && mirror < 1e-8 && gap <= 1e-8 && d > 0.0 && dt > 0.0 && straight > set.j_min,
        detail: format!(
            "{n} members, mirror distance {mirror:.1e}, action gap {gap:.1e}, d_min {d:.4}, d~_min {dt:.4}, straight {straight:.6} > J_min {:.6}",
            set.j_min
        ),
    }
}

fn ball_projection() -> Line {
    let p = PotentialDescriptor::elliptic_well(2.0, 0.1).unwrap();
    let rho = p.rho.unwrap();
    let set = set_for(&p, 1e-10);
    let (em, ep) = boundary_pair(&set).unwrap();
    let t = Grid1D::with_spacing(12.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut raised = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let mut u = Field2D::blend(&p, t, &em, &ep, rng.gen_range(0.5..3.0)).unwrap();
        let g = *u.grid();
        for _ in 0..rng.gen_range(1..200) {
            let (i, j) = (rng.gen_range(1..g.nt() - 1), rng.gen_range(1..g.nx() - 1));
            let s = rng.gen_range(1.0..3.0) * rho;
            let idx = (i * g.nx() + j) * 2;
            let v = &mut u.values_mut()[idx..idx + 2];
            let n = v[0].hypot(v[1]).max(1e-3);
            v[0] *= s / n;
            v[1] *= s / n;
        }
        let before = energy2d(&p, &u).unwrap();
        let after = energy2d(&p, &ball_project(&p, &u).unwrap()).unwrap();
        worst = worst.max(after - before);
        raised += usize::from(after > before);
    }
    Line {
        name: "Ball projection",
        pass: raised == 0,
        detail: format!("50 fields, {raised} raised, largest change {worst:.3e}"),
    }
}

fn layer(order: &str, dir: &Path, name: &'static str, budget: f64) -> (Line, Value) {
    let text = format!(
        "mode={order}\npotential=elliptic_well\na=2\nmu=0.1\nout={}\n",
        dir.display()
    );
    let (status, took) = timed(|| run(&parse_config(&text).unwrap()));
    let report: Value = fs::read_to_string(dir.join("diagnostics.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or(Value::Null);
    let gates = report["diagnostics"]["gates"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    let mut parts: Vec<String> = gates
        .iter()
        .map(|g| {
            let mark = if g["pass"] == true { "ok" } else { "FAILED" };
            format!(
                "{} {} (bound {}) {mark}",
                g["name"].as_str().unwrap_or("?"),
                g["value"],
                g["bound"]
            )
        })
        .collect();
    parts.push(format!("{:.1}s", took.as_secs_f64()));
    let line = Line {
        name,
        pass: status.code == 0 && !gates.is_empty() && took.as_secs_f64() <= budget,
        detail: format!("exit {}; {}", status.code, parts.join("; ")),
    };
    (line, report)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism(root: &Path, reference: &Path) -> Line {
    let cfg = root.join("layer2.cfg");
    fs::write(&cfg, "mode=layer2\npotential=elliptic_well\na=2\nmu=0.1\n").unwrap();
    let want = files(reference);
    let mut same = Vec::new();
    for (name, jobs) in [("jobs1", "1"), ("jobs4", "4")] {
        let out = root.join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_hetero"))
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--jobs",
                jobs,
            ])
            .output()
            .unwrap();
        same.push(o.status.success() && files(&out) == want);
    }
    Line {
        name: "Determinism",
        pass: same.iter().all(|&s| s) && !want.is_empty(),
        detail: format!(
            "{} artifacts; in-process vs --jobs 1: {}, vs --jobs 4: {}",
            want.len(),
            same[0],
            same[1]
        ),
    }
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let mut lines = vec![
        one_d_oracle(),
        first_integral(),
        decay_fit(),
        expansion_identity(),
        nonsmooth_oracle(),
        two_families(),
    ];
    let l2 = root.path().join("layer2");
    lines.push(layer("layer2", &l2, "Layer solve", 900.0).0);
    lines.push(ball_projection());
    lines.push(
        layer(
            "layer4",
            &root.path().join("layer4"),
            "Fourth-order layer",
            1200.0,
        )
        .0,
    );
    lines.push(determinism(root.path(), &l2));

    let mut failed = 0;
    for l in &lines {
        println!(
            "{} {}: {}",
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.detail
        );
        failed += usize::from(!l.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
