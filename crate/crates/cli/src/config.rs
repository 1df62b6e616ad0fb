//! Plain `key=value` run configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use hetero_core::heteroclinic::{HeteroclinicOptions, MultistartSpec};
use hetero_core::layer2d::{DiagnosticsSpec, LayerOptions};
use hetero_core::potential::SampleSpec;
use hetero_core::probe::ProbeSpec;
use hetero_core::{Exec, Grid1D, Grid2D, PotentialDescriptor};

/// `(key, default, description)`; an empty default means "unset".
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "mode",
        "",
        "heteroclinic | layer2 | layer4 | verify | sweep (required)",
    ),
    (
        "potential",
        "elliptic_well",
        "elliptic_well | decoupled_quartic",
    ),
    ("a", "2", "elliptic well: ellipse aspect parameter"),
    ("mu", "0.1", "elliptic well: weight of the u2^2 term"),
    (
        "rho",
        "",
        "invariant-ball radius (default: the builtin's value)",
    ),
    (
        "r",
        "",
        "radius of the balls around the wells for the Hessian check (default: builtin)",
    ),
    (
        "c",
        "",
        "claimed Hessian lower bound on those balls (default: builtin)",
    ),
    ("R", "5", "sphere radius for the positivity check"),
    ("sample_box", "3", "hypothesis sampling box [-b, b]^m"),
    ("sample_step", "0.05", "hypothesis sampling step"),
    ("L", "12", "half-length of the x interval"),
    ("T", "12", "half-length of the t interval"),
    (
        "h",
        "0.05",
        "spacing used for h_t and h_x when they are not given",
    ),
    ("h_t", "", "t spacing"),
    ("h_x", "", "x spacing (also the 1D heteroclinic spacing)"),
    (
        "tol1",
        "1e-10",
        "heteroclinic solver: sup |grad| <= tol1 * max(1, J)",
    ),
    ("tol2", "1e-6", "members must have action <= J_min + tol2"),
    (
        "tol3",
        "1e-8",
        "layer solver: sup |grad| <= tol3 * (1 + |E|)",
    ),
    (
        "tol4",
        "1e-8",
        "minimality probes pass when dE >= -tol4 * (1 + |E|)",
    ),
    ("max_iter", "200000", "iteration cap for every solve"),
    (
        "dedup_tol",
        "1e-3",
        "L2 distance below which pinned heteroclinics are merged",
    ),
    (
        "init_width",
        "2",
        "half-width in t of the smoothstep initializer",
    ),
    ("probes", "100", "number of random minimality probes"),
    ("probe_amplitude", "0.2", "largest probe amplitude"),
    ("probe_min_width", "0.25", "smallest probe half-width"),
    ("probe_max_width", "2", "largest probe half-width"),
    (
        "probe_margin",
        "2",
        "cells kept clear of the boundary by probes and test functions",
    ),
    (
        "weak_tests",
        "50",
        "number of weak-form test functions (layer4)",
    ),
    (
        "equipartition_window",
        "0.5",
        "equipartition is gated on rows with |t| <= window * T",
    ),
    (
        "equipartition_bound",
        "2e-2",
        "largest accepted relative equipartition residual",
    ),
    ("seed", "0", "seed for probes and test functions"),
    ("out", "out", "output directory"),
    ("field", "", "verify: field file to check (CSV or binary)"),
    ("field_format", "csv", "layer field output: csv | binary"),
    ("sweep_key", "", "sweep: numeric key to vary"),
    ("sweep_values", "", "sweep: comma-separated values"),
    (
        "sweep_mode",
        "layer2",
        "sweep: heteroclinic | layer2 | layer4",
    ),
];

/// Keys that never change results and stay out of reports.
const UNREPORTED: &[&str] = &["out"];

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config")?;
        if let Some(l) = self.line {
            write!(f, " line {l}")?;
        }
        if let Some(k) = &self.key {
            write!(f, " key '{k}'")?;
        }
        write!(f, ": {}", self.msg)
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, key: Option<&str>, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.map(str::to_string),
        msg: msg.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Heteroclinic,
    Layer2,
    Layer4,
    Verify,
    Sweep,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "heteroclinic" => Mode::Heteroclinic,
            "layer2" => Mode::Layer2,
            "layer4" => Mode::Layer4,
            "verify" => Mode::Verify,
            "sweep" => Mode::Sweep,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Binary,
}

/// Raw entries with the line they came from (`None` for defaults and flags).
#[derive(Clone, Debug, Default)]
pub struct Entries {
    values: BTreeMap<String, (String, Option<usize>)>,
}

impl Entries {
    pub fn set(&mut self, key: &str, value: &str) {
        self.values
            .insert(key.to_string(), (value.to_string(), None));
    }
    fn get(&self, key: &str) -> (&str, Option<usize>) {
        match self.values.get(key) {
            Some((v, l)) => (v.as_str(), *l),
            None => (default_of(key), None),
        }
    }
    /// Every key with its effective value, sorted, as `key=value` lines.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        KEYS.iter()
            .filter(|(k, _, _)| !UNREPORTED.contains(k))
            .map(|(k, _, _)| (k.to_string(), self.get(k).0.to_string()))
            .collect()
    }
    pub fn canonical_text(&self) -> String {
        self.resolved()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

fn default_of(key: &str) -> &'static str {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .map_or("", |(_, d, _)| d)
}

/// Strict line parser: blank lines and `#` comments are skipped, every
/// other line must be `key=value` with a known key given at most once.
pub fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut e = Entries::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(err(
                Some(line),
                None,
                format!("expected key=value, found {body:?}"),
            ));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(key, _, _)| *key == k) {
            return Err(err(Some(line), Some(k), "unknown key"));
        }
        if let Some((_, Some(prev))) = e.values.get(k) {
            return Err(err(
                Some(line),
                Some(k),
                format!("already set on line {prev}"),
            ));
        }
        e.values.insert(k.to_string(), (v.to_string(), Some(line)));
    }
    Ok(e)
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
    pub mode: Mode,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub potential: PotentialDescriptor,
    pub samples: SampleSpec,
    pub half_l: f64,
    pub half_t: f64,
    pub h_t: f64,
    pub h_x: f64,
    pub tol1: f64,
    pub tol2: f64,
    pub tol3: f64,
    pub tol4: f64,
    pub max_iter: usize,
    pub dedup_tol: f64,
    pub init_width: f64,
    pub probes: ProbeSpec,
    pub weak_tests: usize,
    pub equipartition_window: f64,
    pub equipartition_bound: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub field: Option<PathBuf>,
    pub field_format: FieldFormat,
    pub sweep: Option<Sweep>,
    pub entries: Entries,
}

struct Reader<'a> {
    e: &'a Entries,
}

impl Reader<'_> {
    fn text(&self, key: &str) -> (&str, Option<usize>) {
        self.e.get(key)
    }
    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        let (v, l) = self.text(key);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(err(
                l,
                Some(key),
                format!("expected a finite number, found {v:?}"),
            )),
        }
    }
    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let x = self.real(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(err(
                self.text(key).1,
                Some(key),
                format!("must be positive, found {x}"),
            ))
        }
    }
    fn optional_positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        if self.text(key).0.is_empty() {
            Ok(None)
        } else {
            self.positive(key).map(Some)
        }
    }
    fn count(&self, key: &str) -> Result<usize, ConfigError> {
        let (v, l) = self.text(key);
        v.parse::<usize>().map_err(|_| {
            err(
                l,
                Some(key),
                format!("expected a non-negative integer, found {v:?}"),
            )
        })
    }
    fn spacing(&self, key: &str) -> Result<f64, ConfigError> {
        if self.text(key).0.is_empty() {
            self.positive("h")
        } else {
            self.positive(key)
        }
    }
}

impl RunConfig {
    pub fn from_entries(e: Entries) -> Result<RunConfig, ConfigError> {
        let r = Reader { e: &e };
        let (mode_text, mode_line) = r.text("mode");
        if mode_text.is_empty() {
            return Err(err(None, Some("mode"), "mode is required"));
        }
        let mode = Mode::parse(mode_text).ok_or_else(|| {
            err(
                mode_line,
                Some("mode"),
                format!("unknown mode {mode_text:?}"),
            )
        })?;

        let (kind, kind_line) = r.text("potential");
        let builtin = match kind {
            "elliptic_well" => {
                let (a, mu) = (r.positive("a")?, r.positive("mu")?);
                PotentialDescriptor::elliptic_well(a, mu)
                    .map_err(|x| err(kind_line, Some("potential"), x.to_string()))?
            }
            "decoupled_quartic" => PotentialDescriptor::decoupled_quartic(),
            _ => {
                return Err(err(
                    kind_line,
                    Some("potential"),
                    format!("unknown potential {kind:?}"),
                ))
            }
        };
        let potential = PotentialDescriptor::new(
            builtin.inner().clone(),
            builtin.well_minus().to_vec(),
            builtin.well_plus().to_vec(),
            r.optional_positive("r")?.unwrap_or(builtin.r),
            r.optional_positive("c")?.unwrap_or(builtin.c),
            r.optional_positive("rho")?.or(builtin.rho),
        )
        .map_err(|x| err(None, Some("potential"), x.to_string()))?;

        let seed = {
            let (v, l) = r.text("seed");
            v.parse::<u64>().map_err(|_| {
                err(
                    l,
                    Some("seed"),
                    format!("expected an unsigned integer, found {v:?}"),
                )
            })?
        };
        let samples = SampleSpec {
            box_half: r.positive("sample_box")?,
            step: r.positive("sample_step")?,
            sphere_radius: r.positive("R")?,
            seed,
            ..SampleSpec::default()
        };
        let (half_l, half_t) = (r.positive("L")?, r.positive("T")?);
        let (h_t, h_x) = (r.spacing("h_t")?, r.spacing("h_x")?);
        let probe_min_width = r.positive("probe_min_width")?;
        let probe_max_width = r.positive("probe_max_width")?;
        if probe_min_width > probe_max_width {
            return Err(err(
                r.text("probe_min_width").1,
                Some("probe_min_width"),
                "exceeds probe_max_width",
            ));
        }
        let probe_amplitude = r.positive("probe_amplitude")?;
        let probes = ProbeSpec {
            count: r.count("probes")?,
            seed,
            max_amplitude: probe_amplitude,
            min_amplitude: probe_amplitude.min(ProbeSpec::default().min_amplitude),
            min_width: probe_min_width,
            max_width: probe_max_width,
            margin: r.count("probe_margin")?,
            rel_tol: r.positive("tol4")?,
        };
        let field = match r.text("field").0 {
            "" => None,
            f => Some(PathBuf::from(f)),
        };
        if mode == Mode::Verify && field.is_none() {
            return Err(err(None, Some("field"), "verify needs a field file"));
        }
        let field_format = match r.text("field_format") {
            ("csv", _) => FieldFormat::Csv,
            ("binary", _) => FieldFormat::Binary,
            (v, l) => {
                return Err(err(
                    l,
                    Some("field_format"),
                    format!("expected csv or binary, found {v:?}"),
                ))
            }
        };
        let sweep = if mode == Mode::Sweep {
            Some(sweep_of(&r)?)
        } else {
            None
        };
        let (window, window_line) = (
            r.positive("equipartition_window")?,
            r.text("equipartition_window").1,
        );
        if window > 1.0 {
            return Err(err(
                window_line,
                Some("equipartition_window"),
                "must be at most 1",
            ));
        }

        let cfg = RunConfig {
            mode,
            potential,
            samples,
            half_l,
            half_t,
            h_t,
            h_x,
            tol1: r.positive("tol1")?,
            tol2: r.positive("tol2")?,
            tol3: r.positive("tol3")?,
            tol4: r.positive("tol4")?,
            max_iter: r.count("max_iter")?,
            dedup_tol: r.positive("dedup_tol")?,
            init_width: r.positive("init_width")?,
            probes,
            weak_tests: r.count("weak_tests")?,
            equipartition_window: window,
            equipartition_bound: r.positive("equipartition_bound")?,
            seed,
            out: PathBuf::from(r.text("out").0),
            field,
            field_format,
            sweep,
            entries: e.clone(),
        };
        if let Some(s) = &cfg.sweep {
            for p in 0..s.values.len() {
                cfg.sweep_point(p)?;
            }
        }
        Ok(cfg)
    }

    /// The configuration of one sweep point.
    pub fn sweep_point(&self, i: usize) -> Result<RunConfig, ConfigError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| err(None, Some("mode"), "not a sweep"))?;
        let mut e = self.entries.clone();
        e.set(&s.key, &s.values[i]);
        e.set("mode", self.entries.get("sweep_mode").0);
        for k in ["sweep_key", "sweep_values", "sweep_mode"] {
            e.values.remove(k);
        }
        RunConfig::from_entries(e).map_err(|x| ConfigError {
            msg: format!("sweep point {} ({}={}): {}", i, s.key, s.values[i], x.msg),
            ..x
        })
    }

    pub fn x_grid(&self) -> Grid1D {
        Grid1D::with_spacing(self.half_l, self.h_x).expect("validated grid")
    }

    pub fn strip(&self) -> Grid2D {
        Grid2D::new(
            Grid1D::with_spacing(self.half_t, self.h_t).expect("validated grid"),
            self.x_grid(),
        )
    }

    pub fn multistart(&self, grid: Grid1D) -> MultistartSpec {
        let mut spec = MultistartSpec::default_for(&self.potential, grid);
        spec.options = HeteroclinicOptions {
            tol: self.tol1,
            max_iter: self.max_iter,
            pin: true,
        };
        spec.dedup_tol = self.dedup_tol;
        spec.action_tol = self.tol2;
        spec
    }

    pub fn layer_options(&self, exec: Exec) -> LayerOptions {
        LayerOptions {
            tol: self.tol3,
            max_iter: self.max_iter,
            init_width: self.init_width,
            exec,
            ..LayerOptions::default()
        }
    }

    pub fn diagnostics(&self) -> DiagnosticsSpec {
        DiagnosticsSpec {
            probes: self.probes.clone(),
            weak_tests: self.weak_tests,
            weak_seed: self.seed.wrapping_add(1),
            equipartition_window: self.equipartition_window,
            equipartition_bound: self.equipartition_bound,
        }
    }
}

fn sweep_of(r: &Reader) -> Result<Sweep, ConfigError> {
    let (key, key_line) = r.text("sweep_key");
    if key.is_empty() {
        return Err(err(None, Some("sweep_key"), "sweep needs sweep_key"));
    }
    const NUMERIC: &[&str] = &[
        "a",
        "mu",
        "rho",
        "r",
        "c",
        "R",
        "L",
        "T",
        "h",
        "h_t",
        "h_x",
        "tol1",
        "tol2",
        "tol3",
        "tol4",
        "init_width",
        "probes",
        "seed",
    ];
    if !NUMERIC.contains(&key) {
        return Err(err(
            key_line,
            Some("sweep_key"),
            format!("{key:?} cannot be swept"),
        ));
    }
    let (raw, values_line) = r.text("sweep_values");
    let values: Vec<String> = raw
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(err(
            values_line,
            Some("sweep_values"),
            "sweep needs at least one value",
        ));
    }
    let (m, l) = r.text("sweep_mode");
    let mode = match Mode::parse(m) {
        Some(x @ (Mode::Heteroclinic | Mode::Layer2 | Mode::Layer4)) => x,
        _ => {
            return Err(err(
                l,
                Some("sweep_mode"),
                format!("expected heteroclinic, layer2 or layer4, found {m:?}"),
            ))
        }
    };
    Ok(Sweep {
        key: key.to_string(),
        values,
        mode,
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_entries(parse_entries(text)?)
}

/// The key table for `--help`.
pub fn help_text() -> String {
    let mut s = String::from(
        "Config file: one key=value per line, '#' starts a comment.\n\n\
         Exit status: 0 all gates pass, 1 some gate fails, 2 config or input error,\n\
         3 solver did not converge (partial artifacts written), 4 hypothesis check failed.\n\nKeys (default):\n",
    );
    for (k, d, h) in KEYS {
        let d = if d.is_empty() { "-" } else { d };
        s.push_str(&format!("  {k:<22} {h} ({d})\n"));
    }
    s
}
