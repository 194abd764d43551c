//! Command-line surface: configuration, dispatch and report emission.
//!
//! Every subcommand is described by a table of keys with defaults. The same table drives the
//! clap flags, the config-file validation and the `inputs` block of the report, so a key that
//! is accepted on the command line is accepted in a file under `<command>.<key>` and nowhere else.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgMatches, Command};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{Map, Number, Value};

use crate::binding::{bs_kernel, critical_mass, lieb_bound, lieb_constant, uv_threshold, window_from_masses, BindingError, PotentialSpec};
use crate::dispersion::{d_plus, h_rho_sharp, hilbert_rho, negative_mass_data, CutoffProfile, DispersionError};
use crate::fock::{factorial, ladder, sector_residual, vacuum_moment, wick_power, FockError, FockSpace, Ladder};
use crate::gse::{asymptotic_constants, energy_breakdown, ground_energy, ground_energy_sharp, GseError, IrCriterion, ModelParams};
use crate::lattice::{build, converge_to_ep, default_schedule, energy_closed, energy_eigen, EnergyMethod, LatticeConfig, LatticeError, Sampling};
use crate::nelson::{
    constant_g, heuristic_mass_lump, rho_profile, stability_check, stability_sweep, veff_pair, veff_sharp3d, ClusterGrid, NelsonConfig, NelsonError,
    StabilityReport,
};
use crate::numerics::cmat::{cdot, CMat, C64, I};
use crate::numerics::{NumericsError, Quadrature};
use crate::symplectic::{ccr_residual, det_identity_partial_sums, intertwine_check, intertwine_check_subcap, intertwiner, SymplecticError, SymplecticPair};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NonConvergence(_) => 3,
            _ => 2,
        }
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::NonConvergence { .. } | NumericsError::NegativeEigenvalue(_) | NumericsError::Singular => Self::NonConvergence(e.to_string()),
            _ => Self::Precondition(e.to_string()),
        }
    }
}

impl From<DispersionError> for CliError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::Numerics(n) => n.into(),
            DispersionError::DivergentIntegral(n) => {
                let half = if n % 2 == 0 { format!("{}", n / 2) } else { format!("{n}/2") };
                Self::Precondition(format!("φ̂/ω^{half} ∉ L² (∫φ̂²/ω^{n} dk diverges)"))
            }
            other => Self::Precondition(other.to_string()),
        }
    }
}

impl From<GseError> for CliError {
    fn from(e: GseError) -> Self {
        match e {
            GseError::Dispersion(d) => d.into(),
            GseError::Numerics(n) => n.into(),
            GseError::MassTooSmall { .. } => Self::Precondition(format!("m > 8πλ/3 required: {e}")),
            other => Self::Precondition(other.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::Gse(g) => g.into(),
            LatticeError::Dispersion(d) => d.into(),
            LatticeError::Numerics(n) => n.into(),
            other => Self::Precondition(other.to_string()),
        }
    }
}

impl From<BindingError> for CliError {
    fn from(e: BindingError) -> Self {
        match e {
            BindingError::GridTooCoarse(_) => Self::NonConvergence(e.to_string()),
            BindingError::Dispersion(d) => d.into(),
            BindingError::Numerics(n) => n.into(),
            BindingError::MassAboveCritical { .. } => Self::Precondition(format!("m < m_c required: {e}")),
            other => Self::Precondition(other.to_string()),
        }
    }
}

impl From<NelsonError> for CliError {
    fn from(e: NelsonError) -> Self {
        match e {
            NelsonError::GridTooCoarse { .. } => Self::NonConvergence(e.to_string()),
            NelsonError::Dispersion(d) => d.into(),
            NelsonError::Numerics(n) => n.into(),
            other => Self::Precondition(other.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        Self::Precondition(e.to_string())
    }
}

impl From<SymplecticError> for CliError {
    fn from(e: SymplecticError) -> Self {
        match e {
            SymplecticError::SeriesNonConvergent { .. } => Self::NonConvergence(e.to_string()),
            SymplecticError::Fock(f) => f.into(),
            SymplecticError::Numerics(n) => n.into(),
            other => Self::Precondition(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Geometric,
}

#[derive(Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

#[derive(Debug)]
pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [KeySpec],
    /// Parameter names accepted as `--sweep-<name>`.
    pub sweeps: &'static [(&'static str, Scale)],
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

const CUTOFF_HELP: &str = "sharp:<λ>:<Λ>[:norm], table:<path> or rho:<κ>:<Λ>";

pub static COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "effmass",
        about: "Effective mass, ground-state energy and infrared criterion",
        keys: &[
            key("cutoff", "sharp:1:2", CUTOFF_HELP),
            key("d", "3", "spatial dimension"),
            key("m", "1", "bare mass"),
            key("alpha", "1", "coupling"),
            key("eps-self", "1", "self-energy scaling in [0, 1]"),
            key("p", "", "total momentum, comma separated (default zero)"),
        ],
        sweeps: &[("alpha", Scale::Linear)],
    },
    CommandSpec {
        name: "dispersion",
        about: "Boundary values of the dispersion function and the Hilbert transform",
        keys: &[
            key("cutoff", "sharp:1:2", CUTOFF_HELP),
            key("d", "3", "spatial dimension"),
            key("m", "1", "bare mass (negative for the negative-mass root)"),
            key("alpha", "1", "coupling"),
            key("s", "2.25", "evaluation point s ≥ 0"),
        ],
        sweeps: &[("s", Scale::Linear)],
    },
    CommandSpec {
        name: "gse",
        about: "Ground-state energy g and its large-cutoff behaviour",
        keys: &[
            key("cutoff", "sharp:1:2", CUTOFF_HELP),
            key("d", "3", "spatial dimension"),
            key("m", "1", "bare mass"),
            key("alpha", "1", "coupling"),
            key("eps-self", "1", "self-energy scaling in [0, 1]"),
            key("p", "", "total momentum, comma separated (default zero)"),
            key("n", "1", "number of particles sharing the cutoff"),
            key("slack", "0.05", "relative slack on the asymptotic band"),
        ],
        sweeps: &[("lambda-max", Scale::Geometric), ("m", Scale::Linear), ("alpha", Scale::Linear)],
    },
    CommandSpec {
        name: "lattice",
        about: "Finite-lattice ground energy by eigendecomposition and closed form",
        keys: &[
            key("cutoff", "sharp:1:2", CUTOFF_HELP),
            key("m", "1", "bare mass"),
            key("alpha", "0.5", "coupling"),
            key("p", "1,0,0", "total momentum"),
            key("a", "4", "points per unit length"),
            key("l", "1", "half-width of the momentum box"),
            key("eps-ph", "0.5", "photon mass regulator"),
            key("cap", "1500", "largest admissible lattice dimension"),
            key("sampling", "point", "point or cell:<sub>"),
            key("schedule", "none", "none or default (convergence schedule)"),
            key("eigen-limit", "600", "largest dimension handled by eigendecomposition in a schedule"),
        ],
        sweeps: &[("eps-ph", Scale::Linear), ("alpha", Scale::Linear)],
    },
    CommandSpec {
        name: "binding",
        about: "Birman-Schwinger critical mass and enhanced-binding coupling window",
        keys: &[
            key("well", "1:1", "spherical well <V0>:<R>"),
            key("potential-table", "", "two-column r, V(r) file replacing the well"),
            key("cutoff", "sharp:1:2", CUTOFF_HELP),
            key("m", "0.5", "bare mass"),
            key("alpha", "0.3", "coupling"),
            key("eps", "0.1", "binding energy margin ε > 0"),
            key("grid-size", "400", "radial Galerkin cells"),
        ],
        sweeps: &[("alpha", Scale::Linear), ("e", Scale::Linear)],
    },
    CommandSpec {
        name: "nelson",
        about: "Effective pair potential and two-cluster stability for the Nelson model",
        keys: &[
            key("cutoff", "rho:0:1", CUTOFF_HELP),
            key("well", "0.5:1", "external spherical well <V0>:<R>"),
            key("m", "1", "particle mass"),
            key("alpha", "1", "coupling"),
            key("n", "2", "number of identical particles"),
            key("kappa-scale", "1", "infrared scale κ in the margin test"),
            key("x", "0", "separation at which V_eff is reported"),
            key("r-max", "20", "radial box size"),
            key("nodes", "1500", "radial grid nodes"),
            key("grid-tol", "0.005", "allowed eigenvalue shift under refinement"),
        ],
        sweeps: &[("alpha", Scale::Linear), ("x", Scale::Linear)],
    },
    CommandSpec {
        name: "fock-verify",
        about: "Commutation, vacuum-moment and Wick checks on a truncated Fock space",
        keys: &[
            key("modes", "2", "number of modes"),
            key("cap", "10", "particle cap"),
            key("trials", "20", "random (f, g) pairs"),
            key("seed", "7", "random seed"),
            key("moment-cap", "16", "particle cap for the vacuum moment"),
            key("wick-max", "4", "largest Wick power checked"),
            key("tol", "1e-8", "pass threshold on every residual"),
        ],
        sweeps: &[],
    },
    CommandSpec {
        name: "symplectic-verify",
        about: "Bogoliubov implementer checks for a one-mode squeeze",
        keys: &[
            key("theta", "0.2", "squeeze parameter"),
            key("cap", "14", "particle cap"),
            key("depth", "4", "largest probe particle number"),
            key("kappa", "0.5", "rank-one K for the determinant series"),
            key("z", "1", "series argument"),
            key("terms", "20", "series terms"),
            key("tol", "1e-8", "pass threshold on gated residuals"),
        ],
        sweeps: &[("cap", Scale::Linear)],
    },
];

pub fn command_spec(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

const QUAD_KEYS: [&str; 3] = ["abs-tol", "rel-tol", "max-subdivisions"];
const OUTPUT_KEYS: [&str; 2] = ["json", "csv"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    /// None writes JSON to stdout.
    pub json_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static CommandSpec,
    /// Resolved parameters: defaults, then config file, then flags.
    pub params: BTreeMap<String, String>,
    pub output: OutputPaths,
    pub tolerances: Quadrature,
}

impl PartialEq for CommandSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-")
}

/// Parse `key = value` lines with `#` comments into namespaced keys; unknown keys are rejected.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
        let (ns, name) = k
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::Usage(format!("config line {}: key {:?} needs a namespace", lineno + 1, k.trim())))?;
        let ns = ns.trim();
        let name = normalize_key(name);
        let known = match ns {
            "quad" => QUAD_KEYS.contains(&name.as_str()),
            "output" => OUTPUT_KEYS.contains(&name.as_str()),
            _ => command_spec(ns).is_some_and(|c| c.accepts(&name)),
        };
        if !known {
            return Err(CliError::Usage(format!("config line {}: unknown key {ns}.{name}", lineno + 1)));
        }
        let full = format!("{ns}.{name}");
        if out.insert(full.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key {full}", lineno + 1)));
        }
    }
    Ok(out)
}

impl CommandSpec {
    fn accepts(&self, name: &str) -> bool {
        self.keys.iter().any(|k| k.name == name) || self.sweep_scale(name).is_some()
    }

    fn sweep_scale(&self, name: &str) -> Option<Scale> {
        let p = name.strip_prefix("sweep-")?;
        self.sweeps.iter().find(|s| s.0 == p).map(|s| s.1)
    }

    fn defaults(&self) -> BTreeMap<String, String> {
        self.keys.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect()
    }
}

/// The clap command tree built from [`COMMANDS`].
pub fn cli_command() -> Command {
    let mut root = Command::new("pfspec")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Spectral analytics for the dipole Pauli-Fierz and Nelson models")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("config").long("config").global(true).value_name("PATH").help("key = value file"))
        .arg(Arg::new("json").long("json").global(true).value_name("PATH").help("JSON report path (stdout if absent)"))
        .arg(Arg::new("csv").long("csv").global(true).value_name("PATH").help("CSV table path"))
        .arg(Arg::new("abs-tol").long("abs-tol").global(true).value_name("X").allow_hyphen_values(true).help("quadrature absolute tolerance"))
        .arg(Arg::new("rel-tol").long("rel-tol").global(true).value_name("X").allow_hyphen_values(true).help("quadrature relative tolerance"))
        .arg(Arg::new("max-subdivisions").long("max-subdivisions").global(true).value_name("N").help("quadrature subdivision limit"));
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name).about(spec.about);
        for k in spec.keys {
            let help = if k.default.is_empty() { k.help.to_string() } else { format!("{} [default: {}]", k.help, k.default) };
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name("VALUE").allow_hyphen_values(true).help(help));
        }
        for (p, scale) in spec.sweeps {
            let name: &'static str = Box::leak(format!("sweep-{p}").into_boxed_str());
            let kind = match scale {
                Scale::Linear => "linear",
                Scale::Geometric => "geometric",
            };
            sub = sub.arg(
                Arg::new(name)
                    .long(name)
                    .value_name("START:STOP:COUNT")
                    .allow_hyphen_values(true)
                    .help(format!("{kind} sweep of {p}")),
            );
        }
        root = root.subcommand(sub);
    }
    root
}

impl RunConfig {
    pub fn from_matches(matches: &ArgMatches) -> Result<Self, CliError> {
        let (name, sub) = matches.subcommand().ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
        let command = command_spec(name).ok_or_else(|| CliError::Usage(format!("unknown command {name}")))?;
        let file = match sub.get_one::<String>("config") {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut params = command.defaults();
        let prefix = format!("{}.", command.name);
        for (k, v) in &file {
            if let Some(rest) = k.strip_prefix(&prefix) {
                params.insert(rest.to_string(), v.clone());
            }
        }
        let flag_names = command.keys.iter().map(|k| k.name.to_string()).chain(command.sweeps.iter().map(|s| format!("sweep-{}", s.0)));
        for name in flag_names {
            if let Some(v) = sub.get_one::<String>(&name) {
                params.insert(name, v.clone());
            }
        }

        let pick = |flag: &str, file_key: &str| sub.get_one::<String>(flag).cloned().or_else(|| file.get(file_key).cloned());
        let mut tolerances = Quadrature::default();
        if let Some(v) = pick("abs-tol", "quad.abs-tol") {
            tolerances.abs_tol = parse_f64("abs-tol", &v)?;
        }
        if let Some(v) = pick("rel-tol", "quad.rel-tol") {
            tolerances.rel_tol = parse_f64("rel-tol", &v)?;
        }
        if let Some(v) = pick("max-subdivisions", "quad.max-subdivisions") {
            tolerances.max_subdivisions = parse_usize("max-subdivisions", &v)?;
        }
        tolerances.validate()?;
        let output = OutputPaths {
            json_path: pick("json", "output.json").map(PathBuf::from),
            csv_path: pick("csv", "output.csv").map(PathBuf::from),
        };
        Ok(Self { command, params, output, tolerances })
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::Usage(format!("{key}: expected a number, got {s:?}")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("{key}: {s} is not finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Result<usize, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("{key}: expected a nonnegative integer, got {s:?}")))
}

fn parse_pair(key: &str, s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("{key}: expected <a>:<b>, got {s:?}")));
    }
    Ok((parse_f64(key, parts[0])?, parse_f64(key, parts[1])?))
}

/// Points of a `start:stop:count` sweep.
pub fn sweep_points(key: &str, s: &str, scale: Scale) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("{key}: expected <start>:<stop>:<count>, got {s:?}")));
    }
    let (a, b) = (parse_f64(key, parts[0])?, parse_f64(key, parts[1])?);
    let n = parse_usize(key, parts[2])?;
    if n > 100_000 {
        return Err(CliError::Usage(format!("{key}: {n} points is too many")));
    }
    if scale == Scale::Geometric && !(a > 0.0 && b > 0.0) {
        return Err(CliError::Usage(format!("{key}: geometric sweep needs positive endpoints")));
    }
    Ok((0..n)
        .map(|i| {
            if n == 1 {
                return a;
            }
            let t = i as f64 / (n - 1) as f64;
            match scale {
                Scale::Linear => a + (b - a) * t,
                Scale::Geometric => a * (b / a).powf(t),
            }
        })
        .collect())
}

/// A cell of the report.
#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
    Null,
}

impl From<f64> for Val {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Val {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<bool> for Val {
    fn from(x: bool) -> Self {
        Self::Bool(x)
    }
}

impl From<&str> for Val {
    fn from(x: &str) -> Self {
        Self::Text(x.to_string())
    }
}

impl From<Option<f64>> for Val {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Self::Null, Self::Num)
    }
}

/// 17 significant digits with a signed exponent; non-finite values as `inf`, `-inf`, `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((mant, exp)) if !exp.starts_with('-') => format!("{mant}e+{exp}"),
        _ => s,
    }
}

fn float_json(x: f64) -> Value {
    let s = format_float(x);
    match s.parse::<Number>() {
        Ok(n) if x.is_finite() => Value::Number(n),
        _ => Value::String(s),
    }
}

impl Val {
    fn to_json(&self) -> Value {
        match self {
            Self::Num(x) => float_json(*x),
            Self::Int(i) => Value::Number((*i).into()),
            Self::Bool(b) => Value::Bool(*b),
            Self::Text(s) => Value::String(s.clone()),
            Self::List(v) => Value::Array(v.iter().map(|&x| float_json(x)).collect()),
            Self::Null => Value::Null,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Self::Num(x) => format_float(*x),
            Self::Int(i) => i.to_string(),
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => csv_quote(s),
            Self::List(v) => csv_quote(&v.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(";")),
            Self::Null => String::new(),
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

type Fields = Vec<(&'static str, Val)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub inputs: BTreeMap<String, String>,
    pub columns: Vec<&'static str>,
    pub outputs: Vec<Vec<Val>>,
    pub summary: Fields,
    pub residuals: Fields,
    pub tolerances: Fields,
    pub grid_sizes: Fields,
    pub seeds: Fields,
    /// Set when a verification threshold is exceeded; the report is still written.
    pub failure: Option<String>,
}

impl Report {
    fn new(cfg: &RunConfig, columns: Vec<&'static str>) -> Self {
        let q = cfg.tolerances;
        Self {
            command: cfg.command.name,
            inputs: cfg.params.clone(),
            columns,
            outputs: Vec::new(),
            summary: Vec::new(),
            residuals: Vec::new(),
            tolerances: vec![
                ("abs_tol", q.abs_tol.into()),
                ("rel_tol", q.rel_tol.into()),
                ("max_subdivisions", q.max_subdivisions.into()),
            ],
            grid_sizes: Vec::new(),
            seeds: Vec::new(),
            failure: None,
        }
    }

    fn push(&mut self, row: Vec<Val>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.outputs.push(row);
    }

    pub fn to_json(&self) -> Value {
        let obj = |fields: &Fields| Value::Object(fields.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect::<Map<_, _>>());
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.into()));
        root.insert(
            "inputs".into(),
            Value::Object(self.inputs.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect()),
        );
        let rows = self
            .outputs
            .iter()
            .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.to_json())).collect()))
            .collect();
        root.insert("outputs".into(), Value::Array(rows));
        root.insert("summary".into(), obj(&self.summary));
        root.insert("residuals".into(), obj(&self.residuals));
        let mut prov = Map::new();
        prov.insert("tolerances".into(), obj(&self.tolerances));
        prov.insert("grid_sizes".into(), obj(&self.grid_sizes));
        prov.insert("seeds".into(), obj(&self.seeds));
        prov.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        root.insert("provenance".into(), Value::Object(prov));
        Value::Object(root)
    }

    pub fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).unwrap_or_else(|_| "{}".into());
        s.push('\n');
        s
    }

    pub fn csv_text(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.outputs {
            s.push_str(&row.iter().map(Val::to_csv).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

/// Typed access to resolved parameters.
struct Params<'a> {
    cfg: &'a RunConfig,
}

impl Params<'_> {
    fn raw(&self, key: &str) -> &str {
        self.cfg.params.get(key).map(String::as_str).unwrap_or("")
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        parse_f64(key, self.raw(key))
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        parse_usize(key, self.raw(key))
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v = self.f64(key)?;
        if !(v > 0.0) {
            return Err(CliError::Precondition(format!("{key} = {v} must be positive")));
        }
        Ok(v)
    }

    fn list(&self, key: &str, len: usize) -> Result<Vec<f64>, CliError> {
        let raw = self.raw(key).trim();
        if raw.is_empty() {
            return Ok(vec![0.0; len]);
        }
        let v = raw.split(',').map(|s| parse_f64(key, s)).collect::<Result<Vec<_>, _>>()?;
        if v.len() != len {
            return Err(CliError::Usage(format!("{key}: expected {len} components, got {}", v.len())));
        }
        Ok(v)
    }

    /// The single active sweep, if any.
    fn sweep(&self) -> Result<Option<(&'static str, Vec<f64>)>, CliError> {
        let mut found = None;
        for (p, scale) in self.cfg.command.sweeps {
            let k = format!("sweep-{p}");
            if let Some(v) = self.cfg.params.get(&k) {
                if found.is_some() {
                    return Err(CliError::Usage("only one sweep per run".into()));
                }
                found = Some((*p, sweep_points(&k, v, *scale)?));
            }
        }
        Ok(found)
    }

    fn cutoff(&self, d: usize) -> Result<(CutoffProfile, CutoffDesc), CliError> {
        parse_cutoff(self.raw("cutoff"), d)
    }

    fn potential(&self) -> Result<PotentialSpec, CliError> {
        let table = self.raw("potential-table").trim();
        if !table.is_empty() {
            let text = std::fs::read_to_string(table).map_err(|e| CliError::Io(format!("{table}: {e}")))?;
            let (r, v) = two_columns(&text)?;
            return Ok(PotentialSpec::tabulated(r, v)?);
        }
        let (v0, r) = parse_pair("well", self.raw("well"))?;
        Ok(PotentialSpec::well(v0, r)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CutoffDesc {
    Sharp { lo: f64, hi: f64, norm: f64 },
    Table,
    Rho { kappa: f64, hi: f64 },
}

fn parse_cutoff(spec: &str, d: usize) -> Result<(CutoffProfile, CutoffDesc), CliError> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("table:") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
        return Ok((CutoffProfile::from_table_text(&text, d)?, CutoffDesc::Table));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["sharp", lo, hi] | ["sharp", lo, hi, _] => {
            let (lo, hi) = (parse_f64("cutoff", lo)?, parse_f64("cutoff", hi)?);
            let norm = if parts.len() == 4 { parse_f64("cutoff", parts[3])? } else { 1.0 };
            let cut = CutoffProfile::sharp(lo, hi, d)?.with_normalization(norm)?;
            Ok((cut, CutoffDesc::Sharp { lo, hi, norm }))
        }
        ["rho", kappa, hi] => {
            if d != 3 {
                return Err(CliError::Precondition("rho cutoffs are three-dimensional".into()));
            }
            let (kappa, hi) = (parse_f64("cutoff", kappa)?, parse_f64("cutoff", hi)?);
            Ok((rho_profile(kappa, hi)?, CutoffDesc::Rho { kappa, hi }))
        }
        _ => Err(CliError::Usage(format!("cutoff: expected {CUTOFF_HELP}, got {spec:?}"))),
    }
}

fn two_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(CliError::Usage(format!("table line {}: expected two columns", i + 1)));
        }
        a.push(parse_f64("table", cols[0])?);
        b.push(parse_f64("table", cols[1])?);
    }
    Ok((a, b))
}

fn model(p: &Params, d: usize) -> Result<ModelParams, CliError> {
    let prm = ModelParams::new(p.f64("m")?, p.f64("alpha")?, d)?.with_p(p.list("p", d)?)?;
    Ok(prm)
}

fn cmd_effmass(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let q = &cfg.tolerances;
    let d = p.usize("d")?;
    let (cut, _) = p.cutoff(d)?;
    let base = model(&p, d)?.with_eps_self(p.f64("eps-self")?)?;
    let alphas = match p.sweep()? {
        Some((_, v)) => v,
        None => vec![base.alpha],
    };
    let mut rep = Report::new(cfg, vec!["alpha", "m_eff", "m_kinetic", "g", "e_p", "ir_regular", "ir_integral"]);
    let rows = alphas
        .par_iter()
        .map(|&a| {
            let mut prm = base.clone();
            prm.alpha = a;
            let b = energy_breakdown(&cut, &prm, q)?;
            let (reg, val) = match b.ir {
                IrCriterion::Regular(x) => (true, Val::Num(x)),
                IrCriterion::Singular => (false, Val::Null),
            };
            Ok(vec![a.into(), b.m_eff.into(), b.m_kinetic.into(), b.g.into(), b.e_p.into(), reg.into(), val])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.into_iter().for_each(|r| rep.push(r));
    Ok(rep)
}

fn cmd_dispersion(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let q = &cfg.tolerances;
    let d = p.usize("d")?;
    let (cut, desc) = p.cutoff(d)?;
    let (m, alpha) = (p.f64("m")?, p.f64("alpha")?);
    let points = match p.sweep()? {
        Some((_, v)) => v,
        None => vec![p.f64("s")?],
    };
    if let Some(s) = points.iter().find(|s| !(**s >= 0.0)) {
        return Err(CliError::Precondition(format!("s = {s} must be ≥ 0")));
    }
    let closed = match desc {
        CutoffDesc::Sharp { lo, hi, norm } if d == 3 && norm == 1.0 => Some((lo, hi)),
        _ => None,
    };
    let mut rep = Report::new(cfg, vec!["s", "re_d_plus", "im_d_plus", "re_d_minus", "im_d_minus", "hilbert", "hilbert_closed", "rel_error"]);
    let rows = points
        .par_iter()
        .map(|&s| {
            let r = d_plus(&cut, m, alpha, s, q)?;
            let h = hilbert_rho(&cut, s, q)?;
            let hc = closed.map(|(lo, hi)| h_rho_sharp(lo, hi, s));
            let rel = hc.filter(|c| c.is_finite() && h.is_finite()).map(|c| (h - c).abs() / c.abs().max(1e-300));
            Ok::<_, CliError>((
                vec![
                    s.into(),
                    r.d_plus.re.into(),
                    r.d_plus.im.into(),
                    r.d_minus.re.into(),
                    r.d_minus.im.into(),
                    h.into(),
                    hc.into(),
                    rel.into(),
                ],
                rel,
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut worst: Option<f64> = None;
    for (row, rel) in rows {
        if let Some(r) = rel {
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
        rep.push(row);
    }
    rep.residuals.push(("max_rel_hilbert", worst.into()));
    if m < 0.0 {
        let neg = negative_mass_data(&cut, m, alpha, q)?;
        rep.summary.push(("negative_mass_e", neg.e.into()));
        rep.summary.push(("negative_mass_gamma", neg.gamma.into()));
        rep.summary.push(("negative_mass_d_prime", neg.d_prime.into()));
    }
    Ok(rep)
}

fn cmd_gse(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let q = &cfg.tolerances;
    let d = p.usize("d")?;
    let (cut, desc) = p.cutoff(d)?;
    let base = model(&p, d)?.with_eps_self(p.f64("eps-self")?)?;
    let n = p.usize("n")?;
    if n == 0 {
        return Err(CliError::Precondition("n must be at least 1".into()));
    }
    let slack = p.f64("slack")?;
    // N particles on one cutoff: g_N(m) = g_1(m/N)
    let g_at = |prm: &ModelParams, cut: &CutoffProfile, hi: Option<f64>| -> Result<f64, CliError> {
        let mut shared = prm.clone();
        shared.m = prm.m / n as f64;
        match (desc, hi) {
            (CutoffDesc::Sharp { lo, norm, .. }, Some(hi)) if d == 3 && prm.eps_self == 1.0 => {
                let c = prm.alpha * prm.alpha * norm * norm;
                if c == 0.0 {
                    return Ok(0.0);
                }
                Ok(ground_energy_sharp(lo, hi, shared.m / c, q)?)
            }
            _ => Ok(ground_energy(cut, &shared, q)?),
        }
    };
    match p.sweep()? {
        Some(("lambda-max", grid)) => {
            let CutoffDesc::Sharp { lo, norm, .. } = desc else {
                return Err(CliError::Usage("sweep-lambda-max needs a sharp cutoff".into()));
            };
            if let Some(hi) = grid.iter().find(|&&h| !(h > lo)) {
                return Err(CliError::Precondition(format!("Λ = {hi} must exceed λ = {lo}")));
            }
            let mut rep = Report::new(cfg, vec!["lambda_max", "g", "g_over_lambda_three_halves"]);
            let rows = grid
                .par_iter()
                .map(|&hi| {
                    let c = CutoffProfile::sharp(lo, hi, d)?.with_normalization(norm)?;
                    let g = g_at(&base, &c, Some(hi))?;
                    Ok(vec![hi.into(), g.into(), (g / hi.powf(1.5)).into()])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let last = rows.last().and_then(|r| match r[2] {
                Val::Num(x) => Some(x),
                _ => None,
            });
            rows.into_iter().for_each(|r| rep.push(r));
            let c = base.alpha * base.alpha * norm * norm;
            let m_scaled = base.m / (n as f64 * c);
            let bound = 8.0 * std::f64::consts::PI * lo / 3.0;
            let applicable = d == 3 && base.eps_self == 1.0 && c > 0.0 && m_scaled > bound;
            rep.summary.push(("band_applicable", applicable.into()));
            if applicable {
                let (lower, upper) = asymptotic_constants(m_scaled);
                rep.summary.push(("lower", lower.into()));
                rep.summary.push(("upper", upper.into()));
                rep.summary.push(("slack", slack.into()));
                let within = last.map(|x| x >= lower * (1.0 - slack) && x <= upper * (1.0 + slack));
                rep.summary.push(("within_band", within.map_or(Val::Null, Val::Bool)));
            }
            Ok(rep)
        }
        Some((param, values)) => {
            let mut rep = Report::new(cfg, vec![param_column(param), "g"]);
            let hi = match desc {
                CutoffDesc::Sharp { hi, .. } => Some(hi),
                _ => None,
            };
            let rows = values
                .par_iter()
                .map(|&v| {
                    let mut prm = base.clone();
                    if param == "m" {
                        prm.m = v;
                    } else {
                        prm.alpha = v;
                    }
                    prm.validate()?;
                    Ok(vec![v.into(), g_at(&prm, &cut, hi)?.into()])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            rows.into_iter().for_each(|r| rep.push(r));
            Ok(rep)
        }
        None => {
            let mut rep = Report::new(cfg, vec!["m_eff", "m_kinetic", "g", "e_p"]);
            if n == 1 {
                let b = energy_breakdown(&cut, &base, q)?;
                rep.push(vec![b.m_eff.into(), b.m_kinetic.into(), b.g.into(), b.e_p.into()]);
            } else {
                let hi = match desc {
                    CutoffDesc::Sharp { hi, .. } => Some(hi),
                    _ => None,
                };
                rep.push(vec![Val::Null, Val::Null, g_at(&base, &cut, hi)?.into(), Val::Null]);
            }
            Ok(rep)
        }
    }
}

fn param_column(p: &str) -> &'static str {
    match p {
        "m" => "m",
        "alpha" => "alpha",
        "eps-ph" => "eps_ph",
        "e" => "e",
        "x" => "x",
        "cap" => "cap",
        "s" => "s",
        _ => "value",
    }
}

fn cmd_lattice(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let q = &cfg.tolerances;
    let (cut, _) = p.cutoff(3)?;
    let prm = model(&p, 3)?;
    let eigen_limit = p.usize("eigen-limit")?;
    let sampling = match p.raw("sampling").trim() {
        "point" => Sampling::Point,
        s => match s.strip_prefix("cell:") {
            Some(sub) => Sampling::CellAverage { sub: parse_usize("sampling", sub)? },
            None if s == "cell" => Sampling::CellAverage { sub: 16 },
            None => return Err(CliError::Usage(format!("sampling: expected point or cell:<sub>, got {s:?}"))),
        },
    };
    match p.raw("schedule").trim() {
        "none" => {}
        "default" => {
            let conv = converge_to_ep(&cut, &prm, &default_schedule(), eigen_limit, q)?;
            let mut rep = Report::new(cfg, vec!["a", "l", "eps_ph", "dim", "nominal_points", "energy", "method", "gap"]);
            for (e, gap) in conv.entries.iter().zip(&conv.gaps) {
                let method = match e.method {
                    EnergyMethod::Eigen => "eigen",
                    EnergyMethod::Closed => "closed",
                };
                rep.push(vec![
                    e.config.a.into(),
                    e.config.l.into(),
                    e.config.eps_ph.into(),
                    e.dim.into(),
                    e.nominal_points.into(),
                    e.energy.into(),
                    method.into(),
                    (*gap).into(),
                ]);
            }
            rep.summary.push(("target", conv.target.into()));
            rep.summary.push(("extrapolated", conv.extrapolated.into()));
            rep.summary.push(("relative_gap", conv.relative_gap.into()));
            rep.summary.push(("stage_limits", Val::List(conv.stage_limits.iter().map(|s| s.2).collect())));
            rep.summary.push(("monotone_in_eps", conv.monotone_in_eps.into()));
            rep.summary.push(("monotone_in_a", conv.monotone_in_a.into()));
            rep.grid_sizes.push(("eigen_limit", eigen_limit.into()));
            return Ok(rep);
        }
        s => return Err(CliError::Usage(format!("schedule: expected none or default, got {s:?}"))),
    }
    let lat = LatticeConfig::new(p.positive("a")?, p.positive("l")?, p.positive("eps-ph")?)?
        .with_cap(p.usize("cap")?)
        .with_sampling(sampling)?;
    let (key, values) = match p.sweep()? {
        Some((k, v)) => (Some(k), v),
        None => (None, vec![f64::NAN]),
    };
    let mut rep = Report::new(cfg, vec!["alpha", "eps_ph", "dim", "nominal_points", "energy_eigen", "energy_closed", "abs_diff", "rel_diff"]);
    let rows = values
        .par_iter()
        .map(|&v| {
            let (mut lc, mut pr) = (lat, prm.clone());
            match key {
                Some("eps-ph") => {
                    lc.eps_ph = v;
                    lc.validate()?;
                }
                Some(_) => pr.alpha = v,
                None => {}
            }
            let mats = build(&cut, &pr, &lc)?;
            let closed = energy_closed(&mats, &pr, q)?;
            let eig = if mats.dim() <= eigen_limit.max(lc.cap) { Some(energy_eigen(&mats, &pr)?) } else { None };
            let diff = eig.map(|e| (closed - e).abs());
            let rel = eig.map(|e| (closed - e).abs() / (1.0 + e.abs()));
            Ok((vec![pr.alpha.into(), lc.eps_ph.into(), mats.dim().into(), mats.nominal_points.into(), eig.into(), closed.into(), diff.into(), rel.into()], rel))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut worst: Option<f64> = None;
    for (row, rel) in rows {
        if let Some(r) = rel {
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
        rep.push(row);
    }
    rep.residuals.push(("max_rel_diff", worst.into()));
    rep.grid_sizes.push(("a", lat.a.into()));
    rep.grid_sizes.push(("l", lat.l.into()));
    rep.grid_sizes.push(("cap", lat.cap.into()));
    Ok(rep)
}

fn cmd_binding(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let q = &cfg.tolerances;
    let (cut, desc) = p.cutoff(3)?;
    let pot = p.potential()?;
    let m = p.positive("m")?;
    let eps = p.positive("eps")?;
    let grid = p.usize("grid-size")?;
    if !(8..=20_000).contains(&grid) {
        return Err(CliError::Precondition(format!("grid-size = {grid} outside [8, 20000]")));
    }
    let alpha = p.f64("alpha")?;
    let sweep = p.sweep()?;
    let cm = critical_mass(&pot, eps, grid)?;
    let lieb = lieb_bound(&pot, q)?;
    let mut rep = match sweep {
        Some(("e", energies)) => {
            if let Some(e) = energies.iter().find(|e| !(**e <= 0.0)) {
                return Err(CliError::Precondition(format!("E = {e} must be ≤ 0")));
            }
            let mut rep = Report::new(cfg, vec!["e", "norm_k"]);
            let norms = energies.par_iter().map(|&e| Ok(bs_kernel(&pot, e, grid)?.norm()?)).collect::<Result<Vec<f64>, CliError>>()?;
            let mut sorted: Vec<(f64, f64)> = energies.iter().copied().zip(norms.iter().copied()).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
            for (e, k) in energies.iter().zip(&norms) {
                rep.push(vec![(*e).into(), (*k).into()]);
            }
            rep.summary.push(("norm_monotone_in_e", monotone.into()));
            rep
        }
        other => {
            let alphas = match other {
                Some((_, v)) => v,
                None => vec![alpha],
            };
            let mut rep = Report::new(
                cfg,
                vec!["alpha", "m_eff", "m_c", "m_eps", "alpha0", "alpha_eps", "lambda_bound", "lambda_alt_constant", "verdict"],
            );
            for a in alphas {
                let r = window_from_masses(&cut, m, cm.m_c, cm.m_eps, a, q)?;
                let alt = match desc {
                    CutoffDesc::Sharp { lo, norm, .. } if a != 0.0 => Some(uv_threshold(lo, norm, m, cm.m_c, a)?.lambda_alt_constant),
                    _ => None,
                };
                rep.push(vec![
                    a.into(),
                    r.m_eff.into(),
                    r.m_c.into(),
                    r.m_eps.into(),
                    r.alpha0.into(),
                    r.alpha_eps.into(),
                    r.lambda_bound.into(),
                    alt.into(),
                    r.verdict.as_str().into(),
                ]);
            }
            rep
        }
    };
    rep.summary.push(("m_c", cm.m_c.into()));
    rep.summary.push(("m_eps", cm.m_eps.into()));
    rep.summary.push(("m_c_extrapolated", cm.m_c_extrapolated.into()));
    rep.summary.push(("lieb_constant", lieb_constant().into()));
    rep.summary.push(("lieb_bound", lieb.into()));
    rep.residuals.push(("lieb_slack", (cm.m_c - lieb).into()));
    rep.grid_sizes.push(("grid_size", grid.into()));
    Ok(rep)
}

const STABILITY_COLUMNS: [&str; 11] = [
    "alpha",
    "e_single",
    "e_pair_free",
    "e_pair_box",
    "xi_v",
    "e_variational",
    "e_v",
    "delta_p",
    "margin",
    "kappa_threshold_ok",
    "pair_w0",
];

fn stability_row(r: &StabilityReport) -> Vec<Val> {
    vec![
        r.alpha.into(),
        r.e_single.into(),
        r.e_pair_free.into(),
        r.e_pair_box.into(),
        r.xi_v.into(),
        r.e_variational.into(),
        r.e_v.into(),
        r.delta_p.into(),
        r.margin.into(),
        r.kappa_threshold_ok.into(),
        r.pair_w0.into(),
    ]
}

fn cmd_nelson(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let q = &cfg.tolerances;
    let (cut, desc) = p.cutoff(3)?;
    let (v0, r) = parse_pair("well", p.raw("well"))?;
    let pot = PotentialSpec::well(v0, r)?;
    let m = p.positive("m")?;
    let alpha = p.f64("alpha")?;
    let n = p.usize("n")?;
    let kappa = p.positive("kappa-scale")?;
    let grid = ClusterGrid { r_max: p.positive("r-max")?, nodes: p.usize("nodes")?, tol: p.positive("grid-tol")? };
    if grid.nodes > 200_000 {
        return Err(CliError::Precondition(format!("nodes = {} exceeds 200000", grid.nodes)));
    }
    let ncfg = NelsonConfig::identical(n, m, alpha, cut.clone(), pot)?;
    let closed = |a: f64, x: f64| match desc {
        CutoffDesc::Rho { kappa, hi } => Some(veff_sharp3d(a, a, kappa, hi, x)),
        _ => None,
    };
    let mut rep = match p.sweep()? {
        Some(("x", xs)) => {
            if let Some(x) = xs.iter().find(|x| !(**x >= 0.0)) {
                return Err(CliError::Precondition(format!("x = {x} must be ≥ 0")));
            }
            let mut rep = Report::new(cfg, vec!["x", "veff", "veff_closed"]);
            let vals = xs.par_iter().map(|&x| Ok(veff_pair(&cut, &cut, alpha, alpha, x, q)?)).collect::<Result<Vec<f64>, CliError>>()?;
            let mut worst: Option<f64> = None;
            for (x, v) in xs.iter().zip(vals) {
                let c = closed(alpha, *x);
                if let Some(c) = c {
                    worst = Some(worst.map_or((v - c).abs(), |w: f64| w.max((v - c).abs())));
                }
                rep.push(vec![(*x).into(), v.into(), c.into()]);
            }
            rep.residuals.push(("max_abs_veff_error", worst.into()));
            rep
        }
        Some((_, alphas)) => {
            let mut rep = Report::new(cfg, STABILITY_COLUMNS.to_vec());
            if !alphas.is_empty() {
                let sw = stability_sweep(&ncfg, &alphas, kappa, &grid, q)?;
                sw.reports.iter().for_each(|r| rep.push(stability_row(r)));
                rep.summary.push(("alpha_c", sw.alpha_c.into()));
                rep.summary.push(("ratio_last", sw.ratio_last.into()));
                rep.summary.push(("ratio_target", sw.ratio_target.into()));
                rep.residuals.push(("ratio_rel_error", ((sw.ratio_last - sw.ratio_target).abs() / sw.ratio_target.abs()).into()));
            }
            rep
        }
        None => {
            let mut rep = Report::new(cfg, STABILITY_COLUMNS.to_vec());
            rep.push(stability_row(&stability_check(&ncfg, kappa, &grid, q)?));
            rep
        }
    };
    let x = p.f64("x")?;
    if !(x >= 0.0) {
        return Err(CliError::Precondition(format!("x = {x} must be ≥ 0")));
    }
    rep.summary.push(("veff_at_x", veff_pair(&cut, &cut, alpha, alpha, x, q)?.into()));
    rep.summary.push(("veff_closed_at_x", closed(alpha, x).into()));
    rep.summary.push(("constant_g", constant_g(&ncfg, q)?.into()));
    rep.summary.push(("mass_lump_energy", heuristic_mass_lump(&ncfg, &grid)?.into()));
    rep.grid_sizes.push(("r_max", grid.r_max.into()));
    rep.grid_sizes.push(("nodes", grid.nodes.into()));
    rep.tolerances.push(("grid_tol", grid.tol.into()));
    Ok(rep)
}

fn check_dim(modes: usize, cap: usize) -> Result<(), CliError> {
    let dim = crate::fock::binomial(modes + cap, cap);
    if modes == 0 || cap == 0 || !(1..=2000).contains(&dim) {
        return Err(CliError::Precondition(format!("Fock dimension for {modes} modes and cap {cap} must lie in [1, 2000]")));
    }
    Ok(())
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn cmd_fock_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let (modes, cap) = (p.usize("modes")?, p.usize("cap")?);
    let (trials, seed) = (p.usize("trials")?, p.usize("seed")? as u64);
    let (mcap, wick_max) = (p.usize("moment-cap")?, p.usize("wick-max")?);
    let tol = p.positive("tol")?;
    check_dim(modes, cap)?;
    check_dim(modes, mcap)?;
    let space = FockSpace::new(modes, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut ccr = 0.0f64;
    for _ in 0..trials {
        let f = random_vec(&mut rng, modes);
        let g = random_vec(&mut rng, modes);
        let a = ladder(&space, &f, Ladder::Annihilate)?;
        let ad = ladder(&space, &g, Ladder::Create)?;
        let c: C64 = f.iter().zip(&g).map(|(x, y)| x * y).sum();
        ccr = ccr.max(sector_residual(&space, &a.commutator(&ad), c, cap - 1));
    }

    let mut unit: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = unit.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    unit.iter_mut().for_each(|x| *x /= norm);
    let mspace = FockSpace::new(modes, mcap)?;
    let moment = vacuum_moment(&mspace, &unit, I, 2 * mcap)?;
    let moment_res = (moment - C64::new((-0.25f64).exp(), 0.0)).norm();

    let fr: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let gr: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fg: f64 = fr.iter().zip(&gr).map(|(x, y)| x * y).sum();
    let omega = space.vacuum();
    let mut wick = 0.0f64;
    for k in 1..=wick_max.min(cap) {
        let wf = wick_power(&space, &fr, k)?.matvec(&omega);
        let wg = wick_power(&space, &gr, k)?.matvec(&omega);
        let target = factorial(k) * (fg / 2.0).powi(k as i32);
        wick = wick.max((cdot(&wf, &wg) - C64::new(target, 0.0)).norm());
    }

    let mut rep = Report::new(cfg, vec!["check", "residual", "pass"]);
    let checks = [("ccr", ccr), ("vacuum_moment", moment_res), ("wick_overlap", wick)];
    for (name, r) in checks {
        rep.push(vec![name.into(), r.into(), (r <= tol).into()]);
    }
    rep.residuals.push(("max_ccr_residual", ccr.into()));
    rep.residuals.push(("vacuum_moment_residual", moment_res.into()));
    rep.residuals.push(("wick_overlap_residual", wick.into()));
    rep.tolerances.push(("pass_threshold", tol.into()));
    rep.grid_sizes.push(("cap", cap.into()));
    rep.grid_sizes.push(("moment_cap", mcap.into()));
    rep.seeds.push(("rng", (seed as usize).into()));
    let failed: Vec<&str> = checks.iter().filter(|c| !(c.1 <= tol)).map(|c| c.0).collect();
    if !failed.is_empty() {
        rep.failure = Some(format!("residuals above {tol:e}: {}", failed.join(", ")));
    }
    Ok(rep)
}

fn cmd_symplectic_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = Params { cfg };
    let theta = p.f64("theta")?;
    let depth = p.usize("depth")?;
    let (kappa, z, terms) = (p.f64("kappa")?, p.f64("z")?, p.usize("terms")?);
    let tol = p.positive("tol")?;
    let caps: Vec<usize> = match p.sweep()? {
        Some((_, v)) => v.iter().map(|c| c.round().max(0.0) as usize).collect(),
        None => vec![p.usize("cap")?],
    };
    if let Some(c) = caps.iter().find(|&&c| c <= depth || c > 200) {
        return Err(CliError::Precondition(format!("cap = {c} must exceed depth = {depth} and be at most 200")));
    }
    if terms > 60 {
        return Err(CliError::Precondition(format!("terms = {terms} exceeds 60")));
    }
    let pair = SymplecticPair::squeeze(theta);
    let f = [C64::new(1.0, 0.0)];
    let mut rep = Report::new(cfg, vec!["cap", "vacuum_overlap_residual", "intertwine_full", "intertwine_subcap", "ccr_b"]);
    let rows = caps
        .par_iter()
        .map(|&cap| {
            let space = FockSpace::new(1, cap)?;
            let u = intertwiner(&space, &pair, f64::INFINITY)?;
            let k1 = &u.coeffs.k1;
            let det = (&CMat::identity(1) - &k1.adjoint().matmul(k1)).det()?.re.powf(0.25);
            let vac = space.vacuum_index();
            let overlap = (u.matrix.get(vac, vac) - C64::new(det, 0.0)).norm();
            let full = intertwine_check(&space, &pair, &f, depth)?;
            let sub = intertwine_check_subcap(&space, &pair, &f, depth)?;
            let ccr = ccr_residual(&space, &pair, &f, &f, depth.min(cap - 1))?;
            Ok::<_, CliError>([overlap, full, sub, ccr])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    for (cap, r) in caps.iter().zip(&rows) {
        rep.push(vec![(*cap).into(), r[0].into(), r[1].into(), r[2].into(), r[3].into()]);
    }
    let (sums, target) = det_identity_partial_sums(&CMat::from_real(1, 1, &[kappa]), z, terms)?;
    let det_res = (sums[sums.len() - 1] - target).abs();
    let worst = |i: usize| rows.iter().map(|r| r[i]).fold(0.0f64, f64::max);
    let mut ordered: Vec<(usize, f64)> = caps.iter().copied().zip(rows.iter().map(|r| r[1])).collect();
    ordered.sort_by_key(|c| c.0);
    let monotone = ordered.windows(2).all(|w| w[1].1 <= w[0].1);
    rep.summary.push(("det_series_target", target.into()));
    rep.summary.push(("det_series_last", sums[sums.len() - 1].into()));
    rep.summary.push(("intertwine_monotone_in_cap", monotone.into()));
    rep.residuals.push(("vacuum_overlap", worst(0).into()));
    rep.residuals.push(("intertwine_full", worst(1).into()));
    rep.residuals.push(("intertwine_subcap", worst(2).into()));
    rep.residuals.push(("ccr_b", worst(3).into()));
    rep.residuals.push(("det_series", det_res.into()));
    rep.tolerances.push(("pass_threshold", tol.into()));
    rep.grid_sizes.push(("depth", depth.into()));
    let gated = [("vacuum_overlap", worst(0)), ("intertwine_subcap", worst(2)), ("ccr_b", worst(3)), ("det_series", det_res)];
    let failed: Vec<&str> = gated.iter().filter(|c| !(c.1 <= tol)).map(|c| c.0).collect();
    if !failed.is_empty() {
        rep.failure = Some(format!("residuals above {tol:e}: {}", failed.join(", ")));
    }
    Ok(rep)
}

/// Compute the report for a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command.name {
        "effmass" => cmd_effmass(cfg),
        "dispersion" => cmd_dispersion(cfg),
        "gse" => cmd_gse(cfg),
        "lattice" => cmd_lattice(cfg),
        "binding" => cmd_binding(cfg),
        "nelson" => cmd_nelson(cfg),
        "fock-verify" => cmd_fock_verify(cfg),
        "symplectic-verify" => cmd_symplectic_verify(cfg),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

/// Write the JSON report (stdout when no path is set) and the optional CSV table.
pub fn emit(report: &Report, paths: &OutputPaths) -> Result<(), CliError> {
    let json = report.json_text();
    match &paths.json_path {
        Some(path) => std::fs::write(path, json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(json.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    if let Some(path) = &paths.csv_path {
        std::fs::write(path, report.csv_text()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Exit code: 0 success, 2 precondition or usage error, 3 non-convergence or failed verification.
pub fn run(cfg: &RunConfig) -> i32 {
    let outcome = std::panic::catch_unwind(|| execute(cfg)).unwrap_or_else(|_| Err(CliError::NonConvergence("internal failure during evaluation".into())));
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&report, &cfg.output) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match &report.failure {
        Some(msg) => {
            eprintln!("verification failed: {msg}");
            3
        }
        None => 0,
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli_command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match RunConfig::from_matches(&matches) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
