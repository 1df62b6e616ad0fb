//! The pipeline behind each mode and the artifacts it writes.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hetero_core::fourth_order::minimize_layer4;
use hetero_core::heteroclinic::{build_heteroclinic_set, HeteroclinicSet, Path1D};
use hetero_core::io::{read_field, write_field_binary, write_field_csv, write_profile};
use hetero_core::layer2d::{boundary_pair, diagnose, minimize_layer, Layer, Order};
use hetero_core::potential::{verify_double_well, HypothesisReport};
use hetero_core::{Error, Exec, Field2D};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{FieldFormat, Mode, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATES: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_HYPOTHESIS: i32 = 4;

/// Exit status of a run and a one-line summary for the terminal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Status {
    pub code: i32,
    pub message: String,
}

impl Status {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Status {
            code,
            message: message.into(),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex(&h.finalize())
}

fn field_hash(u: &Field2D) -> String {
    let bytes: Vec<u8> = u.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    sha256(&[&bytes])
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
    fn create(&self, name: &str) -> Result<BufWriter<File>, Status> {
        let p = self.path(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| io_status(&p, e))
    }
    fn json(&self, name: &str, v: &Value) -> Result<(), Status> {
        let mut w = self.create(name)?;
        let text = serde_json::to_string_pretty(v).expect("report serializes");
        writeln!(w, "{text}")
            .and_then(|_| w.flush())
            .map_err(|e| io_status(&self.path(name), e))
    }
    fn profile(&self, name: &str, e: &Path1D) -> Result<(), Status> {
        let mut w = self.create(name)?;
        write_profile(&mut w, e)
            .and_then(|_| Ok(w.flush()?))
            .map_err(|e| core_status(&e))
    }
    fn field(
        &self,
        name: &str,
        u: &Field2D,
        order: Order,
        format: FieldFormat,
    ) -> Result<(), Status> {
        let mut w = self.create(name)?;
        let tag = Some(order);
        match format {
            FieldFormat::Csv => write_field_csv(&mut w, u, tag),
            FieldFormat::Binary => write_field_binary(&mut w, u, tag),
        }
        .and_then(|_| Ok(w.flush()?))
        .map_err(|e| core_status(&e))
    }
}

fn io_status(p: &Path, e: std::io::Error) -> Status {
    Status::new(EXIT_CONFIG, format!("{}: {e}", p.display()))
}

fn core_status(e: &Error) -> Status {
    let code = match e {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::Inapplicable(_) | Error::Partition(_) => EXIT_HYPOTHESIS,
        _ => EXIT_CONFIG,
    };
    Status::new(code, e.to_string())
}

/// Fields shared by every report.
fn header(cfg: &RunConfig, input_hash: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("mode".into(), json!(cfg.entries.resolved()["mode"]));
    m.insert("config".into(), json!(cfg.entries.resolved()));
    m.insert("input_hash".into(), json!(input_hash));
    m
}

/// Runs `cfg` and writes its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Status {
    if let Err(e) = fs::create_dir_all(&cfg.out) {
        return io_status(&cfg.out, e);
    }
    let result = match cfg.mode {
        Mode::Heteroclinic => heteroclinic(cfg),
        Mode::Layer2 => layer(cfg, Order::Second),
        Mode::Layer4 => layer(cfg, Order::Fourth),
        Mode::Verify => verify(cfg),
        Mode::Sweep => sweep(cfg),
    };
    result.unwrap_or_else(|s| s)
}

fn hypothesis(
    cfg: &RunConfig,
    out: &Out,
    base: &serde_json::Map<String, Value>,
    report: &str,
) -> Result<HypothesisReport, Status> {
    let h = verify_double_well(&cfg.potential, &cfg.samples);
    if !h.all_pass() {
        let mut doc = base.clone();
        doc.insert("hypothesis".into(), json!(h));
        doc.insert("status".into(), json!("hypothesis check failed"));
        out.json(report, &Value::Object(doc))?;
        return Err(Status::new(
            EXIT_HYPOTHESIS,
            format!("the potential fails the sampled double-well hypotheses: {h:?}"),
        ));
    }
    Ok(h)
}

fn partial_profile(cfg: &RunConfig, out: &Out, e: &Error) -> Status {
    let status = core_status(e);
    if let Error::NonConvergence { last, .. } = e {
        if let Ok(p) = Path1D::new(cfg.x_grid(), cfg.potential.dim(), last.clone()) {
            if let Err(s) = out.profile("profile_partial.csv", &p) {
                return s;
            }
        }
    }
    status
}

fn build_set(
    cfg: &RunConfig,
    grid: hetero_core::Grid1D,
    out: &Out,
) -> Result<HeteroclinicSet, Status> {
    build_heteroclinic_set(&cfg.potential, grid, &cfg.multistart(grid), Exec::default())
        .map_err(|e| partial_profile(cfg, out, &e))
}

/// Writes `profile_<i>.csv` for every member and returns the set summary.
fn set_summary(
    cfg: &RunConfig,
    set: &HeteroclinicSet,
    out: &Out,
) -> Result<(Value, Vec<Gate>), Status> {
    let mut members = Vec::new();
    let mut gates = Vec::new();
    let mut within = true;
    let mut decay_ok = true;
    for (i, m) in set.members.iter().enumerate() {
        let file = format!("profile_{i}.csv");
        out.profile(&file, &m.orbit.path)?;
        within &= (m.orbit.action - set.j_min).abs() <= cfg.tol2;
        let d = &m.orbit.decay;
        decay_ok &= [d.left, d.right]
            .iter()
            .all(|f| f.is_some_and(|f| f.k > 0.0));
        members.push(json!({
            "file": file,
            "label": m.label,
            "start": m.start,
            "action": m.orbit.action,
            "grad_norm": m.orbit.grad_norm,
            "iterations": m.orbit.iterations,
            "first_integral": m.orbit.first_integral,
            "decay": m.orbit.decay,
        }));
    }
    gates.push(Gate::flag("member actions within tol2 of J_min", within));
    gates.push(Gate::flag("member decay rates positive", decay_ok));
    let summary = json!({
        "grid": set.grid,
        "members": members,
        "J_min": set.j_min,
        "labels": set.labels(),
        "partitioned": set.is_partitioned(),
        "d_min": set.d_min,
        "d_tilde_min": set.d_tilde_min,
        "closest_pair": set.closest_pair,
        "candidates": set.candidates,
    });
    Ok((summary, gates))
}

#[derive(Clone, Debug, Serialize)]
struct Gate {
    name: String,
    pass: bool,
}

impl Gate {
    fn flag(name: &str, pass: bool) -> Self {
        Gate {
            name: name.into(),
            pass,
        }
    }
}

fn heteroclinic(cfg: &RunConfig) -> Result<Status, Status> {
    let out = Out { dir: &cfg.out };
    let hash = sha256(&[cfg.entries.canonical_text().as_bytes()]);
    let base = header(cfg, &hash);
    let h = hypothesis(cfg, &out, &base, "set.json")?;
    let set = build_set(cfg, cfg.x_grid(), &out)?;
    let (summary, gates) = set_summary(cfg, &set, &out)?;
    let pass = gates.iter().all(|g| g.pass);
    let mut doc = base;
    doc.insert("hypothesis".into(), json!(h));
    doc.insert("set".into(), summary);
    doc.insert("gates".into(), json!(gates));
    doc.insert("all_pass".into(), json!(pass));
    out.json("set.json", &Value::Object(doc))?;
    Ok(verdict(
        pass,
        format!("J_min = {} with {} member(s)", set.j_min, set.members.len()),
    ))
}

fn verdict(pass: bool, summary: String) -> Status {
    if pass {
        Status::new(EXIT_PASS, summary)
    } else {
        Status::new(
            EXIT_GATES,
            format!("{summary}; some acceptance gates failed"),
        )
    }
}

fn layer(cfg: &RunConfig, order: Order) -> Result<Status, Status> {
    let out = Out { dir: &cfg.out };
    let hash = sha256(&[cfg.entries.canonical_text().as_bytes()]);
    let base = header(cfg, &hash);
    let h = hypothesis(cfg, &out, &base, "diagnostics.json")?;
    let strip = cfg.strip();
    let set = build_set(cfg, strip.x, &out)?;
    let (summary, _) = set_summary(cfg, &set, &out)?;
    let (em, ep) = boundary_pair(&set).map_err(|e| {
        Status::new(
            EXIT_HYPOTHESIS,
            format!("{e}; the double layer needs the minimal heteroclinics to split into two families at positive distance"),
        )
    })?;
    out.profile("profile_minus.csv", &em)?;
    out.profile("profile_plus.csv", &ep)?;
    let init = Field2D::blend(&cfg.potential, strip.t, &em, &ep, cfg.init_width)
        .map_err(|e| core_status(&e))?;
    let init_hash = field_hash(&init);

    let exec = Exec::default();
    let opts = cfg.layer_options(exec);
    let solved = match order {
        Order::Second => minimize_layer(&cfg.potential, &set, strip, Some(&init), &opts),
        Order::Fourth => minimize_layer4(&cfg.potential, &set, strip, Some(&init), &opts),
    };
    let field_name = match cfg.field_format {
        FieldFormat::Csv => "field.csv",
        FieldFormat::Binary => "field.bin",
    };
    let layer: Layer = match solved {
        Ok(l) => l,
        Err(e) => {
            if let Error::NonConvergence { last, .. } = &e {
                if let Ok(u) = Field2D::new(strip, cfg.potential.dim(), last.clone()) {
                    out.field(
                        &format!("partial_{field_name}"),
                        &u,
                        order,
                        cfg.field_format,
                    )?;
                }
            }
            return Err(core_status(&e));
        }
    };
    out.field(field_name, &layer.field, order, cfg.field_format)?;

    let diag = diagnose(
        &cfg.potential,
        &set,
        &layer.field,
        &em,
        &ep,
        order,
        &cfg.diagnostics(),
        exec,
    )
    .map_err(|e| core_status(&e))?;
    let pass = diag.all_pass();
    let mut doc = base;
    doc.insert("hypothesis".into(), json!(h));
    doc.insert("set".into(), summary);
    doc.insert("field".into(), json!(field_name));
    doc.insert("init_hash".into(), json!(init_hash));
    doc.insert("field_hash".into(), json!(field_hash(&layer.field)));
    doc.insert(
        "solver".into(),
        json!({
            "order": order.tag(),
            "energy": layer.energy,
            "grad_norm": layer.grad_norm,
            "iterations": layer.iterations,
            "evaluations": layer.evaluations,
            "options": opts,
            "energy_trace": layer.trace,
        }),
    );
    doc.insert("diagnostics".into(), json!(diag));
    doc.insert("all_pass".into(), json!(pass));
    out.json("diagnostics.json", &Value::Object(doc))?;
    Ok(verdict(
        pass,
        format!(
            "layer energy {} after {} iterations",
            layer.energy, layer.iterations
        ),
    ))
}

fn verify(cfg: &RunConfig) -> Result<Status, Status> {
    let out = Out { dir: &cfg.out };
    let path = cfg.field.as_ref().expect("validated");
    let bytes = fs::read(path).map_err(|e| io_status(path, e))?;
    let hash = sha256(&[cfg.entries.canonical_text().as_bytes(), &bytes]);
    let base = header(cfg, &hash);
    let (u, tag) = read_field(BufReader::new(&bytes[..]))
        .map_err(|e| Status::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    if u.dim() != cfg.potential.dim() {
        return Err(Status::new(
            EXIT_CONFIG,
            format!(
                "{}: field has {} components, the potential {}",
                path.display(),
                u.dim(),
                cfg.potential.dim()
            ),
        ));
    }
    let order = tag.unwrap_or(Order::Second);
    let h = hypothesis(cfg, &out, &base, "diagnostics.json")?;
    let g = *u.grid();
    let set = build_set(cfg, g.x, &out)?;
    let (summary, _) = set_summary(cfg, &set, &out)?;
    let em = u.row_path(0);
    let ep = u.row_path(g.nt() - 1);
    let diag = diagnose(
        &cfg.potential,
        &set,
        &u,
        &em,
        &ep,
        order,
        &cfg.diagnostics(),
        Exec::default(),
    )
    .map_err(|e| core_status(&e))?;
    let pass = diag.all_pass();
    let mut doc = base;
    doc.insert("hypothesis".into(), json!(h));
    doc.insert("set".into(), summary);
    doc.insert("field".into(), json!(path.display().to_string()));
    doc.insert("field_hash".into(), json!(field_hash(&u)));
    doc.insert("diagnostics".into(), json!(diag));
    doc.insert("all_pass".into(), json!(pass));
    out.json("diagnostics.json", &Value::Object(doc))?;
    Ok(verdict(
        pass,
        format!("verified {} (order {})", path.display(), order.tag()),
    ))
}

fn sweep(cfg: &RunConfig) -> Result<Status, Status> {
    let out = Out { dir: &cfg.out };
    let s = cfg.sweep.as_ref().expect("validated");
    let hash = sha256(&[cfg.entries.canonical_text().as_bytes()]);
    let points: Vec<RunConfig> = (0..s.values.len())
        .map(|i| {
            let mut c = cfg
                .sweep_point(i)
                .map_err(|e| Status::new(EXIT_CONFIG, e.to_string()))?;
            c.out = cfg.out.join(format!("point_{i:03}"));
            Ok(c)
        })
        .collect::<Result<_, Status>>()?;
    let statuses = run_points(&points);
    let index: Vec<Value> = points
        .iter()
        .zip(&statuses)
        .enumerate()
        .map(|(i, (_, st))| {
            json!({
                "dir": format!("point_{i:03}"),
                "value": s.values[i],
                "exit_code": st.code,
                "message": st.message,
            })
        })
        .collect();
    let mut doc = header(cfg, &hash);
    doc.insert("sweep_key".into(), json!(s.key));
    doc.insert("points".into(), json!(index));
    out.json("index.json", &Value::Object(doc))?;
    let failed = statuses.iter().filter(|st| st.code != EXIT_PASS).count();
    let code = statuses
        .iter()
        .map(|st| st.code)
        .find(|&c| c != EXIT_PASS)
        .unwrap_or(EXIT_PASS);
    Ok(Status::new(
        code,
        format!("{} point(s), {failed} not passing", statuses.len()),
    ))
}

#[cfg(feature = "parallel")]
fn run_points(points: &[RunConfig]) -> Vec<Status> {
    use rayon::prelude::*;
    points.par_iter().map(run).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_points(points: &[RunConfig]) -> Vec<Status> {
    points.iter().map(run).collect()
}
