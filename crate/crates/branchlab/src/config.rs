//! Run configuration: a per-subcommand key schema, the `key = value` file
//! format, and typed accessors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Tile,
    Eig,
    Harmonic,
    Mse,
    Branch,
    Bifurcate,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Tile,
        Command::Eig,
        Command::Harmonic,
        Command::Mse,
        Command::Branch,
        Command::Bifurcate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Tile => "tile",
            Command::Eig => "eig",
            Command::Harmonic => "harmonic",
            Command::Mse => "mse",
            Command::Branch => "branch",
            Command::Bifurcate => "bifurcate",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Tile => "Enumerate a reflection tiling and its odd skeleton",
            Command::Eig => {
                "Dirichlet eigenvalues of a spherical polygon with Richardson extrapolation"
            }
            Command::Harmonic => "Harmonic extension of modal cap data on the cone",
            Command::Mse => "Minimal surface solve on the cone by continuation and damped Newton",
            Command::Branch => {
                "Frequency, ray fits and two-valued export of a minimal surface solution"
            }
            Command::Bifurcate => "Branch detection and continuation for the warped-area problem",
        }
    }

    pub fn keys(self) -> Vec<Key> {
        let mut keys = COMMON.to_vec();
        keys.extend_from_slice(match self {
            Command::Tile => TILE,
            Command::Eig => EIG,
            Command::Harmonic => HARMONIC,
            Command::Mse => MSE,
            Command::Branch => BRANCH,
            Command::Bifurcate => BIFURCATE,
        });
        keys
    }
}

impl FromStr for Command {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| RunError::Usage(format!("unknown command '{s}'")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
    }
}

const COMMON: &[Key] = &[
    key("out", "out", "output directory, created if missing"),
    key("seed", "0", "random seed recorded with every run"),
];

const TILE: &[Key] = &[key("n", "3", "ambient dimension of the simplex tiling")];

const EIG: &[Key] = &[
    key("domain", "tetra-face", "tetra-face or hemisphere"),
    key("h", "0.1", "coarsest mesh size; each level halves it"),
    key(
        "grading",
        "auto",
        "grading exponent; auto is 2 for tetra-face and 1 for hemisphere",
    ),
    key("refine", "3", "number of mesh levels"),
    key("modes", "10", "number of eigenpairs per level"),
    key(
        "fields",
        "1",
        "eigenfunctions exported from the finest level",
    ),
    key("tol", "1e-8", "eigenpair residual tolerance"),
];

const HARMONIC: &[Key] = &[
    key("h", "0.1", "surface mesh size"),
    key(
        "grading",
        "2",
        "surface grading exponent toward polygon vertices",
    ),
    key("h_radial", "0.1", "radial layer spacing at r = 1"),
    key(
        "grading_radial",
        "2",
        "radial grading exponent toward the apex",
    ),
    key("data", "1:1", "modal cap data as mode:coefficient pairs"),
    key("r_min", "0.1", "inner radius of the decay fit"),
    key("r_max", "0.6", "outer radius of the decay fit"),
];

const MSE: &[Key] = &[
    key("h", "0.1", "surface mesh size"),
    key(
        "grading",
        "2",
        "surface grading exponent toward polygon vertices",
    ),
    key("h_radial", "0.1", "radial layer spacing at r = 1"),
    key(
        "grading_radial",
        "2",
        "radial grading exponent toward the apex",
    ),
    key("data", "1:1", "modal cap data as mode:coefficient pairs"),
    key("epsilon", "1", "amplitude of the cap data"),
    key("step", "inf", "continuation increment in the amplitude"),
    key("tol", "1e-10", "Newton residual tolerance"),
    key(
        "max_newton",
        "40",
        "Newton iterations per continuation level",
    ),
    key("r_min", "0.1", "inner radius of the decay fit"),
    key("r_max", "0.6", "outer radius of the decay fit"),
];

const BRANCH: &[Key] = &[
    key("h", "0.1", "surface mesh size"),
    key(
        "grading",
        "2",
        "surface grading exponent toward polygon vertices",
    ),
    key("h_radial", "0.01", "radial layer spacing at r = 1"),
    key(
        "grading_radial",
        "1.5",
        "radial grading exponent toward the apex",
    ),
    key("data", "1:1", "modal cap data as mode:coefficient pairs"),
    key("epsilon", "1", "amplitude of the cap data"),
    key("step", "inf", "continuation increment in the amplitude"),
    key("tol", "1e-10", "Newton residual tolerance"),
    key(
        "max_newton",
        "40",
        "Newton iterations per continuation level",
    ),
    key("radii", "0.2,0.25,0.3,0.35,0.4,0.45", "frequency radii"),
    key(
        "ray_center",
        "0.5",
        "distance of the ray frequency centers from the origin",
    ),
    key(
        "stations",
        "0.4,0.5,0.6",
        "distances along each ray of the leading-term fits",
    ),
    key(
        "rho_min",
        "0.05",
        "inner transverse radius of the leading-term fits",
    ),
    key(
        "rho_max",
        "0.15",
        "outer transverse radius of the leading-term fits",
    ),
    key(
        "grid",
        "17",
        "points per axis of the two-valued export grid",
    ),
];

const BIFURCATE: &[Key] = &[
    key(
        "model",
        "toy",
        "toy (interval, n = 1) or triangle (tetrahedral face, n = 2)",
    ),
    key(
        "warp",
        "cos",
        "cos, quadratic (1 - c t^2) or gaussian (exp(-c t^2 / 2))",
    ),
    key("c", "1", "warp parameter for quadratic and gaussian"),
    key("elements", "400", "elements of the toy interval"),
    key("h", "0.1", "triangle mesh size"),
    key("grading", "2", "triangle grading exponent"),
    key("lambda_min", "1", "start of the trivial-branch sweep"),
    key(
        "lambda_max",
        "2",
        "end of the sweep and of the continuation",
    ),
    key("sweep_step", "0.05", "spacing of the trivial-branch sweep"),
    key("step", "0.02", "initial pseudo-arclength step"),
    key("max_step", "0.05", "largest pseudo-arclength step"),
    key("tol", "1e-11", "corrector residual tolerance"),
    key(
        "max_height",
        "0.9",
        "largest max |u| accepted on the branch",
    ),
    key(
        "min_warp",
        "0.1",
        "stop once min f(lambda u) / f(0) falls below this",
    ),
    key(
        "window",
        "0.01",
        "lambda window above the crossing for the amplitude exponent",
    ),
    key("snapshot_every", "5", "write every k-th branch field"),
];

/// Parses the config file format: UTF-8 lines of `key = value`, `#` starts
/// a comment, blank lines are ignored, keys may not repeat.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, RunError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            RunError::Usage(format!("config line {}: expected key = value", no + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(RunError::Usage(format!(
                "config line {}: empty key or value",
                no + 1
            )));
        }
        if out.iter().any(|(e, _)| e == k) {
            return Err(RunError::Usage(format!(
                "config line {}: duplicate key '{k}'",
                no + 1
            )));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Validated configuration of one run. Every schema key has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Schema defaults, overridden by file entries, overridden by flags.
    pub fn build(
        command: Command,
        file: &[(String, String)],
        flags: &[(String, String)],
    ) -> Result<Self, RunError> {
        let keys = command.keys();
        let mut values: BTreeMap<String, String> = keys
            .iter()
            .map(|k| (k.name.to_string(), k.default.to_string()))
            .collect();
        for (k, v) in file.iter().chain(flags) {
            if k == "command" {
                continue;
            }
            match values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => {
                    return Err(RunError::Usage(format!(
                        "unknown key '{k}' for command {command}"
                    )))
                }
            }
        }
        let cfg = Self { command, values };
        cfg.check_types()?;
        Ok(cfg)
    }

    /// Parses every key once so that bad values fail before any work.
    fn check_types(&self) -> Result<(), RunError> {
        for k in self.values.keys() {
            match k.as_str() {
                "out" | "domain" | "model" | "warp" => {}
                "grading" if self.command == Command::Eig && self.str(k) == "auto" => {}
                "data" => {
                    self.modes(k)?;
                }
                "radii" | "stations" => {
                    self.list(k)?;
                }
                "seed" | "n" | "refine" | "modes" | "fields" | "max_newton" | "elements"
                | "grid" | "snapshot_every" => {
                    self.usize(k)?;
                }
                _ => {
                    self.f64(k)?;
                }
            }
        }
        Ok(())
    }

    pub fn str(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key '{key}' is not in the schema"))
    }

    pub fn f64(&self, key: &str) -> Result<f64, RunError> {
        let v = self.str(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .ok_or_else(|| RunError::Usage(format!("{key}: expected a number, got '{v}'")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, RunError> {
        let v = self.str(key);
        v.parse().map_err(|_| {
            RunError::Usage(format!("{key}: expected a non-negative integer, got '{v}'"))
        })
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>, RunError> {
        self.str(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| RunError::Usage(format!("{key}: bad number '{}'", s.trim())))
            })
            .collect()
    }

    /// Comma-separated `mode:coefficient` pairs with 1-based modes.
    pub fn modes(&self, key: &str) -> Result<Vec<(usize, f64)>, RunError> {
        let bad = |s: &str| RunError::Usage(format!("{key}: expected mode:coefficient, got '{s}'"));
        self.str(key)
            .split(',')
            .map(|s| {
                let s = s.trim();
                let (m, c) = s.split_once(':').ok_or_else(|| bad(s))?;
                let m: usize = m.trim().parse().map_err(|_| bad(s))?;
                let c: f64 = c.trim().parse().map_err(|_| bad(s))?;
                if m == 0 {
                    return Err(bad(s));
                }
                Ok((m, c))
            })
            .collect()
    }

    /// All keys and values in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}
