//! Run configuration, subcommand runners and deterministic file output.
//!
//! A run is described by one JSON document. It is validated in full before
//! any computation, and every violation is reported with its field path.
//! Every emitted file starts with a header recording the tool version and
//! the resolved configuration: `# ` comment lines for CSV, a `"header"`
//! object for JSON. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::decoherence::{BranchPair, DEFAULT_LINE_FLOOR, MAX_ENUMERATED_MODES};
use crate::error::{Error, Result};
use crate::model::{derive_chain_params, ChainParams, PhysicalParams};
use crate::oracle::{run_suite, OracleReport, OracleSuite};
use crate::probe::{coherent_state, fock_superposition, ProbeState};
use crate::spectrum::{
    auto_grid_for, broadening_metrics, series_from, spectrum_analytic, spectrum_fft, BroadeningMetrics, Correlator,
    CorrelationSeries, Spectrum, TimeGrid,
};
use crate::tfim::{bogoliubov_angle, build_mode_table, dispersion, momentum_grid, ModeTable};

pub const TOOL_VERSION: &str = concat!("ising-probe ", env!("CARGO_PKG_VERSION"));

/// How the participation ratio is normalized, echoed in metric headers.
pub const PARTICIPATION_NORMALIZATION: &str = "1/(M * sum p_i^2), M = number of frequency samples";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dispersion,
    Correlation,
    Spectrum,
    Sweep,
    Lines,
    OracleCheck,
    Params,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Correlation => "correlation",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Lines => "lines",
            Command::OracleCheck => "oracle-check",
            Command::Params => "params",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProbeSpec {
    /// Coefficients `c_0, c_1, …` as `[re, im]`; normalized on use.
    Fock { coefficients: Vec<[f64; 2]> },
    Coherent { alpha: [f64; 2], tail_tol: f64 },
}

impl ProbeSpec {
    pub fn build(&self) -> Result<ProbeState> {
        match self {
            ProbeSpec::Fock { coefficients } => {
                let c: Vec<Complex64> = coefficients.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                fock_superposition(&c)
            }
            ProbeSpec::Coherent { alpha, tail_tol } => coherent_state(Complex64::new(alpha[0], alpha[1]), *tail_tol),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TimeGridSpec {
    Auto(AutoTag),
    Fixed { t_max: f64, n_samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Fft,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineSettings {
    pub max_modes: usize,
    pub floor: f64,
}

impl Default for LineSettings {
    fn default() -> Self {
        Self {
            max_modes: MAX_ENUMERATED_MODES,
            floor: DEFAULT_LINE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
    pub time_grid: TimeGridSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
    pub output: PathBuf,
    pub spectrum_method: SpectrumMethod,
    pub lines: LineSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSuite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let mut v = Validator::default();
        let cfg = v.config(&value);
        match cfg {
            Some(cfg) if v.errors.is_empty() => Ok(cfg),
            _ => Err(Error::Config(v.errors)),
        }
    }

    /// Checks that every section `command` depends on is present.
    pub fn validate_for(&self, command: Command) -> Result<()> {
        let mut errors = Vec::new();
        let needs_chain = !matches!(command, Command::OracleCheck | Command::Params);
        let needs_probe = matches!(
            command,
            Command::Correlation | Command::Spectrum | Command::Sweep | Command::Lines
        );
        if needs_chain && self.chain.is_none() {
            errors.push(format!("chain: required by `{}`", command.name()));
        }
        if needs_probe && self.probe.is_none() {
            errors.push(format!("probe: required by `{}`", command.name()));
        }
        if command == Command::Sweep && self.sweep.is_none() {
            errors.push("sweep: required by `sweep`".to_string());
        }
        if command == Command::Params && self.physical.is_none() {
            errors.push("physical: required by `params`".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// λ values a per-λ command iterates over: the sweep list if given,
    /// otherwise the chain's own λ.
    pub fn lambdas(&self) -> Vec<f64> {
        match (&self.sweep, &self.chain) {
            (Some(s), _) => s.clone(),
            (None, Some(c)) => vec![c.lambda],
            (None, None) => Vec::new(),
        }
    }

    fn chain(&self) -> &ChainParams {
        self.chain.as_ref().expect("validated")
    }

    fn probe(&self) -> Result<ProbeState> {
        self.probe.as_ref().expect("validated").build()
    }
}

/// Collects every violation of a configuration document.
#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(&join(path, key), "unknown field");
            }
        }
        Some(obj)
    }

    fn number(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        match obj.get(key) {
            None => {
                self.err(&join(path, key), "missing");
                None
            }
            Some(v) => self.as_number(v, &join(path, key)),
        }
    }

    fn as_number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(path, format!("expected a finite number, got {v}"));
                None
            }
        }
    }

    fn count(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<usize> {
        match obj.get(key) {
            None => {
                self.err(&join(path, key), "missing");
                None
            }
            Some(v) => match v.as_u64() {
                Some(n) => Some(n as usize),
                None => {
                    self.err(&join(path, key), format!("expected a non-negative integer, got {v}"));
                    None
                }
            },
        }
    }

    fn complex(&mut self, v: &Value, path: &str) -> Option<[f64; 2]> {
        if let Some(arr) = v.as_array() {
            if arr.len() != 2 {
                self.err(path, "expected a number or a [re, im] pair");
                return None;
            }
            let re = self.as_number(&arr[0], &format!("{path}[0]"));
            let im = self.as_number(&arr[1], &format!("{path}[1]"));
            return Some([re?, im?]);
        }
        self.as_number(v, path).map(|x| [x, 0.0])
    }

    fn config(&mut self, v: &Value) -> Option<RunConfig> {
        let root = self.object(
            v,
            "$",
            &["chain", "probe", "time_grid", "sweep", "output", "spectrum_method", "lines", "oracle", "physical"],
        )?;
        let chain = root.get("chain").and_then(|c| self.chain(c));
        let probe = root.get("probe").and_then(|p| self.probe(p));
        let time_grid = match root.get("time_grid") {
            None => Some(TimeGridSpec::Auto(AutoTag::Auto)),
            Some(t) => self.time_grid(t),
        };
        let sweep = root.get("sweep").and_then(|s| self.sweep(s));
        let output = match root.get("output") {
            None => Some(PathBuf::from(".")),
            Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
            Some(other) => {
                self.err("output", format!("expected a non-empty path string, got {other}"));
                None
            }
        };
        let spectrum_method = match root.get("spectrum_method") {
            None => Some(SpectrumMethod::Fft),
            Some(Value::String(s)) if s == "fft" => Some(SpectrumMethod::Fft),
            Some(Value::String(s)) if s == "analytic" => Some(SpectrumMethod::Analytic),
            Some(other) => {
                self.err("spectrum_method", format!("expected \"fft\" or \"analytic\", got {other}"));
                None
            }
        };
        let lines = match root.get("lines") {
            None => Some(LineSettings::default()),
            Some(l) => self.lines(l),
        };
        let oracle = match root.get("oracle") {
            None => None,
            Some(o) => self.oracle(o),
        };
        let physical = root.get("physical").and_then(|p| self.physical(p));
        Some(RunConfig {
            chain,
            probe,
            time_grid: time_grid?,
            sweep,
            output: output?,
            spectrum_method: spectrum_method?,
            lines: lines?,
            oracle,
            physical,
        })
    }

    fn chain(&mut self, v: &Value) -> Option<ChainParams> {
        let obj = self.object(v, "chain", &["n_sites", "lambda", "g_over_b", "gamma_over_b"])?;
        let n = self.count(obj, "chain", "n_sites");
        let lam = self.number(obj, "chain", "lambda");
        let g = self.number(obj, "chain", "g_over_b");
        let gamma = self.number(obj, "chain", "gamma_over_b");
        let p = ChainParams {
            n_sites: n?,
            lambda: lam?,
            g_over_b: g?,
            gamma_over_b: gamma?,
        };
        let before = self.errors.len();
        for msg in p.violations() {
            self.errors.push(format!("chain.{msg}"));
        }
        (self.errors.len() == before).then_some(p)
    }

    fn probe(&mut self, v: &Value) -> Option<ProbeSpec> {
        let kind = v.get("type").and_then(Value::as_str);
        match kind {
            Some("fock") => {
                let obj = self.object(v, "probe", &["type", "coefficients"])?;
                let Some(list) = obj.get("coefficients").and_then(Value::as_array) else {
                    self.err("probe.coefficients", "expected an array of numbers or [re, im] pairs");
                    return None;
                };
                let coeffs: Vec<Option<[f64; 2]>> = list
                    .iter()
                    .enumerate()
                    .map(|(i, c)| self.complex(c, &format!("probe.coefficients[{i}]")))
                    .collect();
                let coefficients: Vec<[f64; 2]> = coeffs.into_iter().collect::<Option<_>>()?;
                if coefficients.iter().all(|c| c[0] == 0.0 && c[1] == 0.0) {
                    self.err("probe.coefficients", "needs at least one non-zero coefficient");
                    return None;
                }
                Some(ProbeSpec::Fock { coefficients })
            }
            Some("coherent") => {
                let obj = self.object(v, "probe", &["type", "alpha", "tail_tol"])?;
                let alpha = match obj.get("alpha") {
                    None => {
                        self.err("probe.alpha", "missing");
                        None
                    }
                    Some(a) => self.complex(a, "probe.alpha"),
                };
                let tail_tol = match obj.get("tail_tol") {
                    None => Some(1e-12),
                    Some(t) => self.as_number(t, "probe.tail_tol"),
                };
                if let Some(t) = tail_tol {
                    if !(t > 0.0 && t < 1.0) {
                        self.err("probe.tail_tol", format!("must lie in (0, 1), got {t}"));
                        return None;
                    }
                }
                Some(ProbeSpec::Coherent {
                    alpha: alpha?,
                    tail_tol: tail_tol?,
                })
            }
            _ => {
                self.err("probe.type", "expected \"fock\" or \"coherent\"");
                None
            }
        }
    }

    fn time_grid(&mut self, v: &Value) -> Option<TimeGridSpec> {
        if v.as_str() == Some("auto") {
            return Some(TimeGridSpec::Auto(AutoTag::Auto));
        }
        if v.is_string() {
            self.err("time_grid", format!("expected \"auto\" or an object, got {v}"));
            return None;
        }
        let obj = self.object(v, "time_grid", &["t_max", "n_samples"])?;
        let t_max = self.number(obj, "time_grid", "t_max");
        let n = self.count(obj, "time_grid", "n_samples");
        if let Some(t) = t_max {
            if t <= 0.0 {
                self.err("time_grid.t_max", format!("must be > 0, got {t}"));
            }
        }
        if let Some(n) = n {
            if n < 2 || !n.is_power_of_two() {
                self.err("time_grid.n_samples", format!("must be a power of two >= 2, got {n}"));
            }
        }
        Some(TimeGridSpec::Fixed {
            t_max: t_max?,
            n_samples: n?,
        })
    }

    fn sweep(&mut self, v: &Value) -> Option<Vec<f64>> {
        let Some(list) = v.as_array() else {
            self.err("sweep", "expected an array of lambda values");
            return None;
        };
        if list.is_empty() {
            self.err("sweep", "must list at least one lambda value");
            return None;
        }
        let out: Vec<Option<f64>> = list
            .iter()
            .enumerate()
            .map(|(i, x)| self.as_number(x, &format!("sweep[{i}]")))
            .collect();
        out.into_iter().collect()
    }

    fn lines(&mut self, v: &Value) -> Option<LineSettings> {
        let obj = self.object(v, "lines", &["max_modes", "floor"])?;
        let d = LineSettings::default();
        let max_modes = match obj.get("max_modes") {
            None => Some(d.max_modes),
            Some(_) => self.count(obj, "lines", "max_modes"),
        };
        let floor = match obj.get("floor") {
            None => Some(d.floor),
            Some(_) => self.number(obj, "lines", "floor"),
        };
        if let Some(f) = floor {
            if f < 0.0 {
                self.err("lines.floor", format!("must be >= 0, got {f}"));
                return None;
            }
        }
        Some(LineSettings {
            max_modes: max_modes?,
            floor: floor?,
        })
    }

    fn oracle(&mut self, v: &Value) -> Option<OracleSuite> {
        match serde_json::from_value::<OracleSuite>(v.clone()) {
            Ok(s) => {
                let before = self.errors.len();
                for msg in s.violations() {
                    self.errors.push(format!("oracle.{msg}"));
                }
                (self.errors.len() == before).then_some(s)
            }
            Err(e) => {
                self.err("oracle", e);
                None
            }
        }
    }

    fn physical(&mut self, v: &Value) -> Option<PhysicalParams> {
        match serde_json::from_value::<PhysicalParams>(v.clone()) {
            Ok(p) => Some(p),
            Err(e) => {
                self.err("physical", e);
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path == "$" {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set when `oracle-check` found a deviation above tolerance.
    pub oracle_failed: bool,
}

/// Validates `config` for `command`, then runs it with outputs under `out`.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<Outcome> {
    config.validate_for(command)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    match command {
        Command::Dispersion => run_dispersion(config, out),
        Command::Correlation => run_correlation(config, out),
        Command::Spectrum => run_spectrum(config, out),
        Command::Sweep => run_sweep(config, out),
        Command::Lines => run_lines(config, out),
        Command::OracleCheck => run_oracle_check(config, out),
        Command::Params => run_params(config, out),
    }
}

/// `17` significant digits, round-trip exact.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// λ as it appears in file names: shortest round-trip form.
pub fn lambda_tag(lam: f64) -> String {
    format!("{lam}")
}

fn csv_header(config: &RunConfig, extra: &[(&str, Value)]) -> String {
    let mut s = format!("# {TOOL_VERSION}\n# config: {}\n", config_json(config));
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s
}

fn json_header(config: &RunConfig, extra: &[(&str, Value)]) -> Value {
    let mut h = json!({ "tool": TOOL_VERSION, "config": config_json(config) });
    for (k, v) in extra {
        h[*k] = v.clone();
    }
    h
}

fn config_json(config: &RunConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn write_file(path: PathBuf, contents: &str, out: &mut Outcome) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    out.files.push(path);
    Ok(())
}

fn write_json(path: PathBuf, value: &Value, out: &mut Outcome) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text, out)
}

pub fn run_dispersion(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let p = config.chain();
    let mut out = Outcome::default();
    for lam in config.lambdas() {
        let mut s = csv_header(config, &[("lambda", json!(lam))]);
        s.push_str("k,epsilon,theta\n");
        for k in momentum_grid(p.n_sites)? {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_float(k),
                fmt_float(dispersion(k, lam)),
                fmt_float(bogoliubov_angle(k, lam))
            );
        }
        let name = if config.sweep.is_some() {
            format!("dispersion_lambda_{}.csv", lambda_tag(lam))
        } else {
            "dispersion.csv".to_string()
        };
        write_file(dir.join(name), &s, &mut out)?;
    }
    Ok(out)
}

/// Everything computed for one λ.
struct LambdaJob {
    params: ChainParams,
    table: ModeTable,
    correlator: Correlator,
}

impl LambdaJob {
    fn new(config: &RunConfig, probe: &ProbeState, lam: f64) -> Result<Self> {
        let params = config.chain().with_lambda(lam);
        params.validate()?;
        let table = build_mode_table(&params, probe.highest_branch().max(1))?;
        let correlator = Correlator::new(&params, &table, probe)?;
        Ok(Self {
            params,
            table,
            correlator,
        })
    }

    fn grid(&self, spec: &TimeGridSpec) -> Result<TimeGrid> {
        match *spec {
            TimeGridSpec::Auto(_) => auto_grid_for(&self.correlator, self.params.gamma_over_b),
            TimeGridSpec::Fixed { t_max, n_samples } => TimeGrid::new(t_max, n_samples, self.correlator.mean_frequency()),
        }
    }

    fn spectrum(&self, config: &RunConfig, probe: &ProbeState, series: &CorrelationSeries) -> Result<Spectrum> {
        match config.spectrum_method {
            SpectrumMethod::Fft => Ok(spectrum_fft(series)),
            SpectrumMethod::Analytic => spectrum_analytic(
                &self.params,
                &self.table,
                probe,
                &series.grid.frequencies(),
                config.lines.max_modes,
                config.lines.floor,
            ),
        }
    }
}

fn grid_json(grid: &TimeGrid) -> Value {
    json!({ "t_max": grid.t_max, "n_samples": grid.n_samples, "carrier": grid.carrier, "dt": grid.dt(), "d_omega": grid.d_omega() })
}

pub fn run_correlation(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let probe = config.probe()?;
    let mut out = Outcome::default();
    for lam in config.lambdas() {
        let job = LambdaJob::new(config, &probe, lam)?;
        let grid = job.grid(&config.time_grid)?;
        let series = series_from(&job.correlator, &grid);
        let mut s = csv_header(config, &[("lambda", json!(lam)), ("time_grid", grid_json(&grid))]);
        s.push_str("t,re_S,im_S,abs_S\n");
        for (t, v) in series.times().iter().zip(&series.values) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_float(*t),
                fmt_float(v.re),
                fmt_float(v.im),
                fmt_float(v.norm())
            );
        }
        write_file(dir.join(format!("correlation_lambda_{}.csv", lambda_tag(lam))), &s, &mut out)?;
    }
    Ok(out)
}

/// Metrics record for one λ.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    pub lambda: f64,
    pub w90: f64,
    pub entropy: f64,
    pub participation: f64,
    pub n: usize,
    pub g_over_b: f64,
    pub gamma_over_b: f64,
    pub imag_residue: f64,
    pub time_grid: TimeGrid,
}

impl MetricsRecord {
    fn new(params: &ChainParams, m: BroadeningMetrics, spec: &Spectrum, grid: TimeGrid) -> Self {
        Self {
            lambda: params.lambda,
            w90: m.w90,
            entropy: m.entropy,
            participation: m.participation,
            n: params.n_sites,
            g_over_b: params.g_over_b,
            gamma_over_b: params.gamma_over_b,
            imag_residue: spec.imag_residue,
            time_grid: grid,
        }
    }
}

pub fn run_spectrum(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let probe = config.probe()?;
    let mut out = Outcome::default();
    for lam in config.lambdas() {
        let job = LambdaJob::new(config, &probe, lam)?;
        let grid = job.grid(&config.time_grid)?;
        let series = series_from(&job.correlator, &grid);
        let spec = job.spectrum(config, &probe, &series)?;
        let extra = [("lambda", json!(lam)), ("time_grid", grid_json(&grid))];
        let mut s = csv_header(config, &extra);
        s.push_str("omega,S\n");
        for (w, v) in spec.frequencies.iter().zip(&spec.values) {
            let _ = writeln!(s, "{},{}", fmt_float(*w), fmt_float(*v));
        }
        let tag = lambda_tag(lam);
        write_file(dir.join(format!("spectrum_lambda_{tag}.csv")), &s, &mut out)?;
        let metrics = broadening_metrics(&spec)?;
        let record = MetricsRecord::new(&job.params, metrics, &spec, grid);
        let doc = json!({
            "header": json_header(config, &[("participation_normalization", json!(PARTICIPATION_NORMALIZATION))]),
            "metrics": record,
        });
        write_json(dir.join(format!("metrics_lambda_{tag}.json")), &doc, &mut out)?;
    }
    Ok(out)
}

/// Metrics for every λ of the sweep on one shared time grid, so that the
/// entropy and participation are comparable across λ. With an automatic
/// grid the shared sample count is the largest any λ needs; each λ keeps
/// its own carrier.
pub fn sweep_metrics(config: &RunConfig, probe: &ProbeState, lambdas: &[f64]) -> Result<Vec<MetricsRecord>> {
    let jobs = lambdas
        .par_iter()
        .map(|&lam| LambdaJob::new(config, probe, lam))
        .collect::<Result<Vec<_>>>()?;
    let grids = jobs
        .iter()
        .map(|j| j.grid(&config.time_grid))
        .collect::<Result<Vec<_>>>()?;
    let n_samples = grids.iter().map(|g| g.n_samples).max().unwrap_or(2);
    jobs.par_iter()
        .zip(&grids)
        .map(|(job, g)| {
            let grid = TimeGrid::new(g.t_max, n_samples, g.carrier)?;
            let series = series_from(&job.correlator, &grid);
            let spec = job.spectrum(config, probe, &series)?;
            let m = broadening_metrics(&spec)?;
            Ok(MetricsRecord::new(&job.params, m, &spec, grid))
        })
        .collect()
}

pub fn run_sweep(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let probe = config.probe()?;
    let records = sweep_metrics(config, &probe, &config.lambdas())?;
    let doc = json!({
        "header": json_header(config, &[("participation_normalization", json!(PARTICIPATION_NORMALIZATION))]),
        "records": records,
    });
    let mut out = Outcome::default();
    write_json(dir.join("sweep.json"), &doc, &mut out)?;
    Ok(out)
}

pub fn run_lines(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let probe = config.probe()?;
    let mut out = Outcome::default();
    for lam in config.lambdas() {
        let params = config.chain().with_lambda(lam);
        let table = build_mode_table(&params, probe.highest_branch().max(1))?;
        let mut rows = String::new();
        let mut pruned_mass = 0.0;
        let mut pruned_count = 0u64;
        let mut branches = Vec::new();
        for (n, weight) in probe.branch_weights() {
            let set = BranchPair::adjacent(&table, n)?.lines(config.lines.max_modes, config.lines.floor)?;
            pruned_mass += weight * set.pruned_mass;
            pruned_count += set.pruned_count;
            branches.push(json!({ "n": n, "weight": weight, "lines": set.lines.len(), "pruned_mass": set.pruned_mass }));
            for l in &set.lines {
                let _ = writeln!(rows, "{},{},{}", n, fmt_float(l.center), fmt_float(l.weight));
            }
        }
        let mut s = csv_header(
            config,
            &[
                ("lambda", json!(lam)),
                ("branches", json!(branches)),
                ("pruned_mass", json!(pruned_mass)),
                ("pruned_count", json!(pruned_count)),
            ],
        );
        s.push_str("n,omega,weight\n");
        s.push_str(&rows);
        write_file(dir.join(format!("lines_lambda_{}.csv", lambda_tag(lam))), &s, &mut out)?;
    }
    Ok(out)
}

pub fn run_oracle_check(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let suite = config.oracle.clone().unwrap_or_default();
    let report: OracleReport = run_suite(&suite)?;
    let doc = json!({ "header": json_header(config, &[]), "report": report });
    let mut out = Outcome::default();
    write_json(dir.join("oracle_check.json"), &doc, &mut out)?;
    out.oracle_failed = !report.passed;
    Ok(out)
}

pub fn run_params(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let physical = config.physical.as_ref().expect("validated");
    let (chain, report) = derive_chain_params(physical)?;
    let doc = json!({ "header": json_header(config, &[]), "chain": chain, "report": report });
    let mut out = Outcome::default();
    write_json(dir.join("params.json"), &doc, &mut out)?;
    Ok(out)
}
