//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [grid]
//! n = 201
//! domain = 0 1
//!
//! [kernel]
//! preset = gaussian
//! sigma = 0.2
//!
//! [coefficients]
//! preset = HET            # optional; entries below override it
//! r = "2+cos(2*pi*x)"
//! a = 0.5
//! e = @e_samples.txt      # one value per node
//!
//! [sweep]
//! path = mu-to-zero
//! values = 1e-1 1e-2 1e-3 1e-4
//! mu2 = 1.0
//!
//! [run]
//! jobs = 4
//! out = results
//!
//! [verify]
//! criteria = 1 2 3
//! small_mu_gap = 0.02
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nonlocal_core::presets::{Preset, DEFAULT_NODES};
use nonlocal_core::{CoefficientSource, CoefficientSpec, Expr, Grid, KernelSpec};

use crate::error::{CliError, Result};
use crate::sweep::SweepPath;
use crate::verify::{Tolerances, CRITERIA_COUNT};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub path: SweepPath,
    /// Empty means the path's own default values.
    pub values: Vec<f64>,
    /// Fixed `μ₂` for the fixed-μ₂ paths.
    pub mu2: f64,
    /// Second axis of `grid2d`.
    pub mu2_values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            path: SweepPath::MuToZero,
            values: Vec::new(),
            mu2: 1.0,
            mu2_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Stationary residual tolerance for steady states.
    pub tol: f64,
    pub max_steps: usize,
    pub out: PathBuf,
    pub jobs: usize,
    /// Dispersal rates for `spectrum`.
    pub mu: (f64, f64),
    /// Fixed `ξ` values at which `limits` evaluates the mixed-limit roots.
    pub fixed_mu: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol: nonlocal_core::steady::DEFAULT_TOL,
            max_steps: nonlocal_core::steady::DEFAULT_MAX_STEPS,
            out: PathBuf::from("out"),
            jobs: 1,
            mu: (1.0, 1.0),
            fixed_mu: vec![1.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub criteria: Vec<usize>,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            criteria: (1..=CRITERIA_COUNT).collect(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub domain: (f64, f64),
    pub coefficients: CoefficientSpec,
    /// Preset the coefficients started from, if any.
    pub preset: Option<Preset>,
    /// False when the file has no `[coefficients]` section; only `verify`
    /// runs without one.
    pub has_problem: bool,
    pub sweep: SweepConfig,
    pub run: RunConfig,
    pub verify: VerifyConfig,
}

impl ExperimentConfig {
    /// Built-in preset on the default grid.
    pub fn for_preset(p: Preset) -> Self {
        Self {
            n: DEFAULT_NODES,
            domain: (0.0, 1.0),
            coefficients: p.spec(),
            preset: Some(p),
            has_problem: true,
            sweep: SweepConfig::default(),
            run: RunConfig::default(),
            verify: VerifyConfig::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::midpoint(self.n, self.domain.0, self.domain.1)?)
    }

    /// Replaces the coefficients (and kernel) by a preset's.
    pub fn with_preset(mut self, p: Preset) -> Self {
        self.coefficients = p.spec();
        self.preset = Some(p);
        self.has_problem = true;
        self
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

#[derive(Default)]
struct RawCoefficients {
    seen: bool,
    preset: Option<Preset>,
    entries: BTreeMap<&'static str, CoefficientSource>,
}

#[derive(Default)]
struct RawKernel {
    kind: Option<String>,
    sigma: Option<f64>,
    value: Option<f64>,
    expr: Option<Expr>,
    line: usize,
}

const NAMES: [&str; 8] = ["a", "b", "c", "e", "f", "g", "r", "s"];

/// Parses configuration text; relative sample-file paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut n = DEFAULT_NODES;
    let mut domain = (0.0, 1.0);
    let mut kernel = RawKernel::default();
    let mut coeffs = RawCoefficients::default();
    let mut sweep = SweepConfig::default();
    let mut run = RunConfig::default();
    let mut verify = VerifyConfig::default();
    let mut problems = Vec::new();

    let mut section = String::new();
    let mut seen = BTreeMap::new();
    for (ix, raw) in text.lines().enumerate() {
        let line_no = ix + 1;
        let perr = |message: String| CliError::Parse { line: line_no, message };
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| perr(format!("malformed section header {line:?}")))?
                .trim();
            if !["grid", "kernel", "coefficients", "sweep", "run", "verify"].contains(&name) {
                return Err(perr(format!("unknown section [{name}]")));
            }
            section = name.to_string();
            coeffs.seen |= name == "coefficients";
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(format!("expected `key = value`, found {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if section.is_empty() {
            return Err(perr(format!("`{key}` appears before any section header")));
        }
        if let Some(prev) = seen.insert((section.clone(), key.to_string()), line_no) {
            return Err(perr(format!("duplicate key `{key}` (first set on line {prev})")));
        }
        match (section.as_str(), key) {
            ("grid", "n") => n = parse_usize(value).map_err(perr)?,
            ("grid", "domain") => {
                let v = parse_list(value).map_err(perr)?;
                if v.len() != 2 {
                    return Err(perr(format!("domain needs two numbers, found {}", v.len())));
                }
                domain = (v[0], v[1]);
            }
            ("kernel", "preset") => {
                kernel.kind = Some(unquote(value).to_ascii_lowercase());
                kernel.line = line_no;
            }
            ("kernel", "sigma") => kernel.sigma = Some(parse_number(value).map_err(perr)?),
            ("kernel", "value") => kernel.value = Some(parse_number(value).map_err(perr)?),
            ("kernel", "expr") => {
                kernel.expr = Some(Expr::parse_xy(unquote(value)).map_err(|e| perr(e.to_string()))?);
                kernel.line = line_no;
            }
            ("coefficients", "preset") => {
                coeffs.preset = Some(unquote(value).parse().map_err(|e: nonlocal_core::Error| perr(e.to_string()))?)
            }
            ("coefficients", k) => {
                let name = NAMES
                    .iter()
                    .find(|n| **n == k)
                    .ok_or_else(|| perr(format!("unknown coefficient `{k}`")))?;
                match coefficient_source(value, base) {
                    Ok(Some(src)) => {
                        coeffs.entries.insert(name, src);
                    }
                    Ok(None) => {}
                    Err(Located::Parse(m)) => return Err(perr(m)),
                    Err(Located::Validation(m)) => problems.push(format!("line {line_no}: {m}")),
                }
            }
            ("sweep", "path") => sweep.path = unquote(value).parse().map_err(perr)?,
            ("sweep", "values") => {
                sweep.values = parse_list(value).map_err(perr)?;
                if sweep.values.is_empty() {
                    return Err(perr("sweep values must not be empty".into()));
                }
            }
            ("sweep", "mu2") => sweep.mu2 = parse_number(value).map_err(perr)?,
            ("sweep", "mu2_values") => sweep.mu2_values = parse_list(value).map_err(perr)?,
            ("run", "tol") => run.tol = parse_number(value).map_err(perr)?,
            ("run", "max_steps") => run.max_steps = parse_usize(value).map_err(perr)?,
            ("run", "out") => run.out = PathBuf::from(unquote(value)),
            ("run", "jobs") => run.jobs = parse_usize(value).map_err(perr)?,
            ("run", "mu") => {
                let v = parse_list(value).map_err(perr)?;
                if v.len() != 2 {
                    return Err(perr(format!("mu needs two numbers, found {}", v.len())));
                }
                run.mu = (v[0], v[1]);
            }
            ("run", "fixed_mu") => run.fixed_mu = parse_list(value).map_err(perr)?,
            ("verify", "criteria") => verify.criteria = parse_criteria(value).map_err(perr)?,
            ("verify", k) => {
                let v = parse_number(value).map_err(perr)?;
                verify.tolerances.set(k, v).map_err(perr)?;
            }
            (s, k) => return Err(perr(format!("unknown key `{k}` in [{s}]"))),
        }
    }

    let spec_kernel = build_kernel(&kernel, coeffs.preset, &mut problems);
    let mut coefficients = match coeffs.preset {
        Some(p) => p.spec(),
        None => CoefficientSpec::constants(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, spec_kernel.clone()),
    };
    coefficients.kernel = spec_kernel;
    for name in NAMES {
        let slot = match name {
            "a" => &mut coefficients.a,
            "b" => &mut coefficients.b,
            "c" => &mut coefficients.c,
            "e" => &mut coefficients.e,
            "f" => &mut coefficients.f,
            "g" => &mut coefficients.g,
            "r" => &mut coefficients.r,
            _ => &mut coefficients.s,
        };
        match coeffs.entries.remove(name) {
            Some(src) => *slot = src,
            None if coeffs.seen && coeffs.preset.is_none() => problems.push(format!("{name} required")),
            None => {}
        }
    }

    let cfg = ExperimentConfig {
        n,
        domain,
        coefficients,
        preset: coeffs.preset,
        has_problem: coeffs.seen,
        sweep,
        run,
        verify,
    };
    validate(&cfg, &mut problems);
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Invalid(problems))
    }
}

fn build_kernel(k: &RawKernel, preset: Option<Preset>, problems: &mut Vec<String>) -> KernelSpec {
    if let Some(e) = &k.expr {
        if k.kind.is_some() {
            problems.push(format!("line {}: kernel takes either `preset` or `expr`, not both", k.line));
        }
        return KernelSpec::Expr(e.clone());
    }
    match k.kind.as_deref() {
        Some("gaussian") => KernelSpec::Gaussian {
            sigma: k.sigma.unwrap_or(0.2),
        },
        Some("uniform") => KernelSpec::Uniform {
            value: k.value.unwrap_or(1.0),
        },
        Some(other) => {
            problems.push(format!("line {}: unknown kernel preset `{other}` (gaussian, uniform)", k.line));
            KernelSpec::Uniform { value: 1.0 }
        }
        None => match preset {
            Some(p) => p.spec().kernel,
            None => KernelSpec::Uniform { value: 1.0 },
        },
    }
}

fn validate(cfg: &ExperimentConfig, problems: &mut Vec<String>) {
    if cfg.n < 2 {
        problems.push("grid n must be at least 2".into());
    }
    let (lo, hi) = cfg.domain;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        problems.push(format!("domain [{lo}, {hi}] must be a finite interval with lo < hi"));
    }
    let positive = |name: &str, v: &[f64], problems: &mut Vec<String>| {
        if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            problems.push(format!("{name} must be positive, found {bad}"));
        }
    };
    positive("sweep values", &cfg.sweep.values, problems);
    positive("sweep mu2", &[cfg.sweep.mu2], problems);
    positive("sweep mu2_values", &cfg.sweep.mu2_values, problems);
    if cfg.sweep.path == SweepPath::Grid2d && cfg.sweep.mu2_values.is_empty() {
        problems.push("grid2d sweep needs mu2_values".into());
    }
    positive("run mu", &[cfg.run.mu.0, cfg.run.mu.1], problems);
    positive("run fixed_mu", &cfg.run.fixed_mu, problems);
    positive("run tol", &[cfg.run.tol], problems);
    if cfg.run.jobs == 0 {
        problems.push("run jobs must be at least 1".into());
    }
    if !cfg.has_problem || problems.iter().any(|p| p.ends_with("required")) || cfg.n < 2 || !(lo < hi) {
        return;
    }
    match Grid::midpoint(cfg.n, lo, hi).and_then(|g| {
        let c = cfg.coefficients.sample(&g)?;
        Ok(c.validate(&g))
    }) {
        Ok(report) if report.is_ok() => {}
        Ok(report) => problems.push(format!("coefficients: {report}")),
        Err(e) => problems.push(format!("coefficients: {e}")),
    }
}

enum Located {
    Parse(String),
    Validation(String),
}

fn coefficient_source(value: &str, base: &Path) -> std::result::Result<Option<CoefficientSource>, Located> {
    if let Some(file) = value.strip_prefix('@') {
        let path = base.join(unquote(file.trim()));
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return Err(Located::Validation(format!("cannot read {}: {e}", path.display()))),
        };
        let mut samples = Vec::new();
        for tok in text
            .lines()
            .map(strip_comment)
            .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ',').collect::<Vec<_>>())
            .filter(|t| !t.is_empty())
        {
            samples.push(
                tok.parse::<f64>()
                    .map_err(|_| Located::Validation(format!("{}: bad sample {tok:?}", path.display())))?,
            );
        }
        return Ok(Some(CoefficientSource::Samples(samples)));
    }
    let quoted = value.starts_with('"');
    let body = unquote(value);
    if body.is_empty() {
        return Err(Located::Parse("empty coefficient value".into()));
    }
    if !quoted {
        if let Ok(v) = body.parse::<f64>() {
            return Ok(Some(CoefficientSource::Constant(v)));
        }
    }
    Expr::parse(body)
        .map(|e| Some(CoefficientSource::Expr(e)))
        .map_err(|e| Located::Parse(e.to_string()))
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

fn parse_number(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = unquote(v).parse().map_err(|_| format!("expected a number, found {v:?}"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, found {v:?}"));
    }
    Ok(x)
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    unquote(v)
        .parse()
        .map_err(|_| format!("expected a nonnegative integer, found {v:?}"))
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    unquote(v)
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(parse_number)
        .collect()
}

/// `all`, or a list of criterion numbers.
pub fn parse_criteria(v: &str) -> std::result::Result<Vec<usize>, String> {
    let v = unquote(v);
    if v.eq_ignore_ascii_case("all") {
        return Ok((1..=CRITERIA_COUNT).collect());
    }
    let mut out = Vec::new();
    for tok in v.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
        let id: usize = tok.parse().map_err(|_| format!("bad criterion {tok:?}"))?;
        if !(1..=CRITERIA_COUNT).contains(&id) {
            return Err(format!("criterion {id} out of range 1..={CRITERIA_COUNT}"));
        }
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out.sort_unstable();
    Ok(out)
}
