//! Run configuration: flat `key = value` lines with optional one-level
//! `[section]` headers. Sections are organizational only; keys are unique
//! across the whole file. Lists are written `{ v1, v2, v3 }`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dfrt::grid::THETA_MAX;
use dfrt::PotentialParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact1e,
    Exact2e,
    ScfXonly,
    Invert,
    Correlation,
    Affinity,
    SweepLambda,
    TableTheta,
}

impl Mode {
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "exact1e" => Mode::Exact1e,
            "exact2e" => Mode::Exact2e,
            "scf_xonly" => Mode::ScfXonly,
            "invert" => Mode::Invert,
            "correlation" => Mode::Correlation,
            "affinity" => Mode::Affinity,
            "sweep_lambda" => Mode::SweepLambda,
            "table_theta" => Mode::TableTheta,
            other => {
                return Err(ConfigError::new(format!(
                    "mode must be one of exact1e, exact2e, scf_xonly, invert, correlation, \
                     affinity, sweep_lambda, table_theta; got \"{other}\""
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact1e => "exact1e",
            Mode::Exact2e => "exact2e",
            Mode::ScfXonly => "scf_xonly",
            Mode::Invert => "invert",
            Mode::Correlation => "correlation",
            Mode::Affinity => "affinity",
            Mode::SweepLambda => "sweep_lambda",
            Mode::TableTheta => "table_theta",
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully validated run description; every numeric field satisfies the
/// library preconditions before any computation starts.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub x_min: f64,
    pub x_max: f64,
    /// Grid sizes; a single entry for ordinary runs, several for the
    /// theta-table mode.
    pub n_points: Vec<usize>,
    pub fd_order: usize,
    pub potential: PotentialParams,
    /// Interaction strengths; a single entry unless sweeping.
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub mixing: f64,
    pub max_iter: usize,
    pub density_tol: f64,
    pub eig_tol: f64,
    pub out_dir: Option<PathBuf>,
    pub workers: usize,
    /// Raw key/value pairs as parsed, echoed into output headers.
    pub echo: Vec<(String, String)>,
}

impl RunConfig {
    pub fn scf_config(&self, theta: f64) -> dfrt::ks::SCFConfig {
        let mut c = dfrt::ks::SCFConfig::new(theta);
        c.mixing = self.mixing;
        c.max_iter = self.max_iter;
        c.density_tol = self.density_tol;
        c.eig_tol = self.eig_tol;
        c
    }

    pub fn grid(&self, n: usize) -> dfrt::Result<dfrt::Grid1D> {
        dfrt::make_grid(self.x_min, self.x_max, n)
    }
}

/// Parse and validate a configuration file. Defaults: the standard
/// potential (a=4, b=0.5, c=4, d=2, lambda=1), theta = {0.27, 0.35, 0.43},
/// box [-10, 10] at N=299, order-4 stencil, plain SCF settings.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<RunConfig, ConfigError> {
    let mut raw: BTreeMap<String, String> = BTreeMap::new();
    let mut echo: Vec<(String, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') || line.len() < 3 {
                return Err(ConfigError::new(format!(
                    "line {}: malformed section header \"{line}\"",
                    lineno + 1
                )));
            }
            // sections group keys visually; no namespacing
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(format!(
                "line {}: expected key = value, got \"{line}\"",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if raw.insert(key.clone(), value.clone()).is_some() {
            return Err(ConfigError::new(format!(
                "line {}: duplicate key \"{key}\"",
                lineno + 1
            )));
        }
        echo.push((key, value));
    }

    let mode = match raw.remove("mode") {
        Some(m) => Mode::from_str(&m)?,
        None => return Err(ConfigError::new("missing required key \"mode\"")),
    };

    let mut p = PotentialParams::default();
    let x_min = take_f64(&mut raw, "x_min")?.unwrap_or(-10.0);
    let x_max = take_f64(&mut raw, "x_max")?.unwrap_or(10.0);
    let n_points = take_usize_list(&mut raw, "n_points")?.unwrap_or_else(|| vec![299]);
    let fd_order = take_usize(&mut raw, "fd_order")?.unwrap_or(4);
    if let Some(v) = take_f64(&mut raw, "a")? {
        p.a = v;
    }
    if let Some(v) = take_f64(&mut raw, "b")? {
        p.b = v;
    }
    if let Some(v) = take_f64(&mut raw, "c")? {
        p.c = v;
    }
    if let Some(v) = take_f64(&mut raw, "d")? {
        p.d = v;
    }
    let lambdas = take_f64_list(&mut raw, "lambda")?.unwrap_or_else(|| vec![1.0]);
    let thetas = take_f64_list(&mut raw, "theta")?.unwrap_or_else(|| vec![0.27, 0.35, 0.43]);
    let mixing = take_f64(&mut raw, "mixing")?.unwrap_or(1.0);
    let max_iter = take_usize(&mut raw, "max_iter")?.unwrap_or(30);
    let density_tol = take_f64(&mut raw, "density_tol")?.unwrap_or(1e-7);
    let eig_tol = take_f64(&mut raw, "eig_tol")?.unwrap_or(1e-8);
    let out_dir = raw.remove("out_dir").map(PathBuf::from);
    let workers = take_usize(&mut raw, "workers")?.unwrap_or(1);

    if let Some(stray) = raw.keys().next() {
        return Err(ConfigError::new(format!("unknown key \"{stray}\"")));
    }

    // validation, before any computation
    if !(x_min < x_max) {
        return Err(ConfigError::new(format!(
            "x_min must be below x_max, got [{x_min}, {x_max}]"
        )));
    }
    for &n in &n_points {
        if n < 8 {
            return Err(ConfigError::new(format!(
                "n_points must be at least 8, got {n}"
            )));
        }
    }
    if n_points.is_empty() {
        return Err(ConfigError::new("n_points list is empty"));
    }
    if !matches!(fd_order, 2 | 4 | 6) {
        return Err(ConfigError::new(format!(
            "fd_order must be 2, 4 or 6, got {fd_order}"
        )));
    }
    for &th in &thetas {
        if !(th > 0.0 && th < THETA_MAX) {
            return Err(ConfigError::new(format!(
                "theta must lie in (0, {THETA_MAX:.4}), got {th}"
            )));
        }
    }
    if thetas.is_empty() {
        return Err(ConfigError::new("theta list is empty"));
    }
    for &l in &lambdas {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(ConfigError::new(format!(
                "lambda must be finite and non-negative, got {l}"
            )));
        }
    }
    if lambdas.is_empty() {
        return Err(ConfigError::new("lambda list is empty"));
    }
    if mode != Mode::SweepLambda && lambdas.len() != 1 {
        return Err(ConfigError::new(
            "a lambda list is only meaningful in sweep_lambda mode",
        ));
    }
    if mode != Mode::TableTheta && n_points.len() != 1 {
        return Err(ConfigError::new(
            "an n_points list is only meaningful in table_theta mode",
        ));
    }
    if !(mixing > 0.0 && mixing <= 1.0) {
        return Err(ConfigError::new(format!(
            "mixing must lie in (0, 1], got {mixing}"
        )));
    }
    if max_iter == 0 {
        return Err(ConfigError::new("max_iter must be at least 1"));
    }
    if !(density_tol > 0.0) {
        return Err(ConfigError::new(format!(
            "density_tol must be positive, got {density_tol}"
        )));
    }
    if !(eig_tol > 0.0) {
        return Err(ConfigError::new(format!(
            "eig_tol must be positive, got {eig_tol}"
        )));
    }
    if workers == 0 {
        return Err(ConfigError::new("workers must be at least 1"));
    }
    p.lambda = lambdas[0];
    p.validate()
        .map_err(|e| ConfigError::new(format!("potential parameters rejected: {e}")))?;

    Ok(RunConfig {
        mode,
        x_min,
        x_max,
        n_points,
        fd_order,
        potential: p,
        lambdas,
        thetas,
        mixing,
        max_iter,
        density_tol,
        eig_tol,
        out_dir,
        workers,
        echo,
    })
}

fn take_f64(raw: &mut BTreeMap<String, String>, key: &str) -> Result<Option<f64>, ConfigError> {
    match raw.remove(key) {
        None => Ok(None),
        Some(s) => s
            .parse::<f64>()
            .map(Some)
            .map_err(|_| ConfigError::new(format!("{key} must be a number, got \"{s}\""))),
    }
}

fn take_usize(raw: &mut BTreeMap<String, String>, key: &str) -> Result<Option<usize>, ConfigError> {
    match raw.remove(key) {
        None => Ok(None),
        Some(s) => s
            .parse::<usize>()
            .map(Some)
            .map_err(|_| ConfigError::new(format!("{key} must be a non-negative integer, got \"{s}\""))),
    }
}

/// A `{ v1, v2 }` list or a bare scalar, as a list either way.
fn split_list(key: &str, s: &str) -> Result<Vec<String>, ConfigError> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('{') {
        let Some(inner) = inner.strip_suffix('}') else {
            return Err(ConfigError::new(format!(
                "{key}: list is missing its closing brace: \"{s}\""
            )));
        };
        let items: Vec<String> = inner
            .split(',')
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect();
        if items.is_empty() {
            return Err(ConfigError::new(format!("{key}: list is empty")));
        }
        Ok(items)
    } else {
        Ok(vec![s.to_string()])
    }
}

fn take_f64_list(
    raw: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<Option<Vec<f64>>, ConfigError> {
    match raw.remove(key) {
        None => Ok(None),
        Some(s) => {
            let mut out = Vec::new();
            for item in split_list(key, &s)? {
                out.push(item.parse::<f64>().map_err(|_| {
                    ConfigError::new(format!("{key}: \"{item}\" is not a number"))
                })?);
            }
            Ok(Some(out))
        }
    }
}

fn take_usize_list(
    raw: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<Option<Vec<usize>>, ConfigError> {
    match raw.remove(key) {
        None => Ok(None),
        Some(s) => {
            let mut out = Vec::new();
            for item in split_list(key, &s)? {
                out.push(item.parse::<usize>().map_err(|_| {
                    ConfigError::new(format!("{key}: \"{item}\" is not a non-negative integer"))
                })?);
            }
            Ok(Some(out))
        }
    }
}
