//! Run configuration: a `key = value` file overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Parser;
use sdg_core::analysis::ErrorMeasure;
use sdg_core::forms::AssemblyOptions;
use sdg_core::Method;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
}

#[derive(Debug, Parser, Default)]
#[command(name = "sdg", version, about = "Staggered DG solver for steady convection-diffusion")]
pub struct Cli {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// dof, 1, 2 or 3.
    #[arg(long)]
    pub experiment: Option<String>,
    /// SDG, ESDG or both.
    #[arg(long)]
    pub method: Option<String>,
    /// Comma-separated mesh resolutions.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Comma-separated diffusivities.
    #[arg(long)]
    pub mu: Option<String>,
    /// Comma-separated splitting parameters.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub degree: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Single-threaded, byte-reproducible runs.
    #[arg(long)]
    pub deterministic: bool,
    /// Exactness degree of the rule used for `b` and `f` terms.
    #[arg(long = "quad-degree")]
    pub quad_degree: Option<String>,
    /// interpolant or exact.
    #[arg(long = "error-measure")]
    pub error_measure: Option<String>,
    /// Also write mesh, matrix and coefficient dumps of the finest level.
    #[arg(long)]
    pub dump: bool,
    /// Points per side of the sample grid written for the finest level of a
    /// convergence run (default 101, 0 disables).
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Dof,
    Convergence(u32),
    Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub methods: Vec<Method>,
    pub ns: Vec<usize>,
    pub mus: Vec<f64>,
    pub thetas: Vec<f64>,
    pub degree: usize,
    pub out: PathBuf,
    pub deterministic: bool,
    pub options: AssemblyOptions,
    pub error_measure: ErrorMeasure,
    pub dump: bool,
    pub grid: usize,
    pub warnings: Vec<String>,
}

const KEYS: [&str; 12] = [
    "experiment",
    "method",
    "N",
    "mu",
    "theta",
    "degree",
    "out",
    "deterministic",
    "quad_degree",
    "error_measure",
    "dump",
    "grid",
];

pub const SWEEP_MUS: [f64; 7] = [1.0, 1e-2, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4];

/// Parses `key = value` lines; `#` starts a comment. Keys use underscores
/// (`quad_degree`) or dashes.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn value_err(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.into(), value: value.into(), reason: reason.into() }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = value
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| value_err(key, value, "not a number list")))
        .collect::<Result<_, _>>()?;
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(value_err(key, value, "expected true or false")),
    }
}

fn powers_of_two(n: usize) -> Vec<usize> {
    (1..).map(|k| 1usize << k).take_while(|&m| m <= n).collect()
}

impl RunConfig {
    /// Config file first, then flags on top.
    pub fn from_cli(cli: &Cli) -> Result<Self, ConfigError> {
        let mut map = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("experiment", &cli.experiment),
            ("method", &cli.method),
            ("N", &cli.n),
            ("mu", &cli.mu),
            ("theta", &cli.theta),
            ("degree", &cli.degree),
            ("out", &cli.out),
            ("quad_degree", &cli.quad_degree),
            ("error_measure", &cli.error_measure),
            ("grid", &cli.grid),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        if cli.deterministic {
            map.insert("deterministic".into(), "true".into());
        }
        if cli.dump {
            map.insert("dump".into(), "true".into());
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let mut warnings = Vec::new();

        let exp = get("experiment").unwrap_or("1");
        let task = match exp.to_ascii_lowercase().as_str() {
            "dof" => Task::Dof,
            "1" => Task::Convergence(1),
            "2" => Task::Convergence(2),
            "3" => Task::Stability,
            _ => return Err(value_err("experiment", exp, "expected dof, 1, 2 or 3")),
        };

        let methods = match get("method") {
            None if task == Task::Stability => vec![Method::Esdg],
            None => vec![Method::Sdg, Method::Esdg],
            Some(v) if v.eq_ignore_ascii_case("both") => vec![Method::Sdg, Method::Esdg],
            Some(v) => vec![v.parse::<Method>().map_err(|_| value_err("method", v, "expected SDG, ESDG or both"))?],
        };

        let ns = match get("N") {
            Some(v) => parse_list::<usize>("N", v)?,
            None if task == Task::Stability => vec![32],
            None => powers_of_two(64),
        };
        let n_text = get("N").unwrap_or("");
        if ns.is_empty() || ns.contains(&0) {
            return Err(value_err("N", n_text, "resolutions must be positive"));
        }
        match task {
            Task::Convergence(_) => {
                if !ns.iter().all(|n| n.is_power_of_two()) || !ns.windows(2).all(|w| w[0] < w[1]) {
                    return Err(value_err("N", n_text, "must be ascending powers of 2"));
                }
            }
            Task::Stability if ns.len() != 1 => {
                return Err(value_err("N", n_text, "the stability sweep uses a single resolution"));
            }
            _ => {}
        }

        let mus = match get("mu") {
            Some(v) => parse_list::<f64>("mu", v)?,
            None => match task {
                Task::Convergence(2) => SWEEP_MUS.to_vec(),
                Task::Stability => SWEEP_MUS.to_vec(),
                _ => vec![1.0],
            },
        };
        if mus.is_empty() || mus.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(value_err("mu", get("mu").unwrap_or(""), "diffusivities must be positive"));
        }

        let thetas = match get("theta") {
            Some(v) => {
                if task != Task::Stability {
                    warnings.push("theta only matters for experiment 3; the given value is still used".into());
                }
                parse_list::<f64>("theta", v)?
            }
            None if task == Task::Stability => vec![0.0, 0.5, 1.0],
            None => vec![0.5],
        };
        if thetas.is_empty() || thetas.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(value_err("theta", get("theta").unwrap_or(""), "must lie in [0, 1]"));
        }
        if task != Task::Stability && thetas.len() != 1 {
            return Err(value_err("theta", get("theta").unwrap_or(""), "one value outside experiment 3"));
        }

        let degree = match get("degree") {
            Some(v) => v.parse::<usize>().map_err(|_| value_err("degree", v, "not an integer"))?,
            None => 1,
        };
        if degree != 1 {
            return Err(value_err("degree", &degree.to_string(), "only k = 1 is implemented"));
        }

        let options = match get("quad_degree") {
            Some(v) => {
                let d = v.parse::<usize>().map_err(|_| value_err("quad_degree", v, "not an integer"))?;
                AssemblyOptions::with_data_degree(d).map_err(|e| value_err("quad_degree", v, e.to_string()))?
            }
            None => AssemblyOptions::default(),
        };

        let error_measure = match get("error_measure") {
            Some(v) => v.parse().map_err(|_| value_err("error_measure", v, "expected interpolant or exact"))?,
            None => ErrorMeasure::default(),
        };

        let grid = match get("grid") {
            Some(v) => v.parse::<usize>().map_err(|_| value_err("grid", v, "not an integer"))?,
            None if matches!(task, Task::Convergence(_)) => 101,
            None => 0,
        };
        if grid == 1 {
            return Err(value_err("grid", "1", "a grid needs at least 2 points per side"));
        }

        Ok(RunConfig {
            task,
            methods,
            ns,
            mus,
            thetas,
            degree,
            out: PathBuf::from(get("out").unwrap_or("out")),
            deterministic: get("deterministic").map(|v| parse_bool("deterministic", v)).transpose()?.unwrap_or(false),
            options,
            error_measure,
            dump: get("dump").map(|v| parse_bool("dump", v)).transpose()?.unwrap_or(false),
            grid,
            warnings,
        })
    }
}
