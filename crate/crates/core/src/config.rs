//! Run configuration: a `key = value` file with `#` comments.
//!
//! Every key has a documented default except `lambda` and `eta`. Unknown keys,
//! duplicate keys and malformed values are parse errors carrying the line
//! number and key; physical constraints are checked together and reported as
//! one validation error listing every violation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coldatom::CondensateModel;
use crate::model::AnsatzVariant;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Relativistic,
    ColdAtom,
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "relativistic" => Ok(System::Relativistic),
            "cold-atom" | "coldatom" => Ok(System::ColdAtom),
            other => Err(format!("unknown system '{other}' (expected relativistic or cold-atom)")),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Relativistic => "relativistic",
            System::ColdAtom => "cold-atom",
        })
    }
}

/// Wall width: fixed, or minimizing the reduced Euclidean action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaChoice {
    Fixed(f64),
    Optimize,
}

impl fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaChoice::Fixed(s) => write!(f, "{s:?}"),
            SigmaChoice::Optimize => f.write_str("optimize"),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: System,
    // model
    pub lambda: f64,
    pub eta: f64,
    pub dim: u32,
    pub variant: AnsatzVariant,
    pub sigma: SigmaChoice,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub g0: f64,
    pub rho_m: f64,
    pub winding: u32,
    pub r_spacing: f64,
    pub r_max: f64,
    // domain
    pub dx: f64,
    pub half_width: Option<f64>,
    pub depth_factor: f64,
    pub turning_multiple: f64,
    pub edge_cells: f64,
    // evolution
    pub dt: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub r0: Option<f64>,
    pub smoothing_window: f64,
    pub output_interval: f64,
    pub stop_below: Option<f64>,
    pub temperature: f64,
    pub n_max: Option<usize>,
    // sweep
    pub sweep_lambda: Vec<f64>,
    pub sweep_eta: Vec<f64>,
    // numerics and plumbing
    pub tol: f64,
    pub reduced_input: Option<PathBuf>,
    pub seed: u64,
}

/// Documented keys, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "system",
    "lambda",
    "eta",
    "dim",
    "variant",
    "sigma",
    "sigma_min",
    "sigma_max",
    "g0",
    "rho_m",
    "winding",
    "r_spacing",
    "r_max",
    "dx",
    "half_width",
    "depth_factor",
    "turning_multiple",
    "edge_cells",
    "dt",
    "gamma",
    "t_final",
    "r0",
    "smoothing_window",
    "output_interval",
    "stop_below",
    "temperature",
    "n_max",
    "sweep_lambda",
    "sweep_eta",
    "tol",
    "reduced_input",
    "seed",
];

/// Raw `key → (line, value)` pairs; line 0 marks command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                key: content.to_string(),
                message: "expected key = value".into(),
            })?;
            raw.insert(i + 1, key.trim(), value.trim(), false)?;
        }
        Ok(raw)
    }

    /// Applies a `key=value` override, replacing any value from the file.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            key: spec.to_string(),
            message: "override must have the form key=value".into(),
        })?;
        self.insert(0, key.trim(), value.trim(), true)
    }

    fn insert(&mut self, line: usize, key: &str, value: &str, replace: bool) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Parse { line, key: key.into(), message: "unknown key".into() });
        }
        if !replace {
            if let Some((first, _)) = self.entries.get(key) {
                return Err(Error::Parse {
                    line,
                    key: key.into(),
                    message: format!("duplicate key (first set on line {first})"),
                });
            }
        }
        self.entries.insert(key.to_string(), (line, value.to_string()));
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| Error::Parse {
                line: *line,
                key: key.into(),
                message: format!("invalid value '{v}': {e}"),
            }),
        }
    }

    /// Optional value where `none`/`auto` select the default behaviour.
    fn get_optional<T: FromStr>(&self, key: &str) -> Result<Option<Option<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            Some((_, v)) if v == "none" || v == "auto" => Ok(Some(None)),
            _ => Ok(self.get(key)?.map(Some)),
        }
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: *line,
                    key: key.into(),
                    message: format!("invalid list entry '{s}': {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Fills documented defaults (which depend on `system`) and validates.
    pub fn resolve(&self) -> Result<RunConfig> {
        let system: System = self.get("system")?.unwrap_or(System::Relativistic);
        let cold = system == System::ColdAtom;
        let missing = |key: &str| Error::Parse { line: 0, key: key.into(), message: "required key missing".into() };
        let sigma = match self.entries.get("sigma") {
            None => SigmaChoice::Optimize,
            Some((_, v)) if v == "optimize" => SigmaChoice::Optimize,
            Some(_) => SigmaChoice::Fixed(self.get("sigma")?.unwrap_or_default()),
        };
        let (sigma_min, sigma_max) = if cold { (1.0, 4.0) } else { (0.1, 1.5) };
        let sweep_lambda = self.get_list("sweep_lambda")?.unwrap_or_default();
        let sweep_eta = self.get_list("sweep_eta")?.unwrap_or_default();
        // A sweep supplies λ and η itself; the first grid point stands in for the scalars.
        let lambda = match self.get("lambda")? {
            Some(v) => v,
            None => *sweep_lambda.first().ok_or_else(|| missing("lambda"))?,
        };
        let eta = match self.get("eta")? {
            Some(v) => v,
            None => *sweep_eta.first().ok_or_else(|| missing("eta"))?,
        };
        let cfg = RunConfig {
            system,
            lambda,
            eta,
            dim: self.get("dim")?.unwrap_or(2),
            variant: self.get("variant")?.unwrap_or(AnsatzVariant::Symmetric),
            sigma,
            sigma_min: self.get("sigma_min")?.unwrap_or(sigma_min),
            sigma_max: self.get("sigma_max")?.unwrap_or(sigma_max),
            g0: self.get("g0")?.unwrap_or(1.0),
            rho_m: self.get("rho_m")?.unwrap_or(1.0),
            winding: self.get("winding")?.unwrap_or(0),
            r_spacing: self.get("r_spacing")?.unwrap_or(0.02),
            r_max: self.get("r_max")?.unwrap_or(60.0),
            dx: self.get("dx")?.unwrap_or(if cold { 0.02 } else { 0.01 }),
            half_width: self.get_optional("half_width")?.unwrap_or(None),
            depth_factor: self.get("depth_factor")?.unwrap_or(20.0),
            turning_multiple: self.get("turning_multiple")?.unwrap_or(4.0),
            edge_cells: self.get("edge_cells")?.unwrap_or(2.0),
            dt: self.get("dt")?.unwrap_or(1e-3),
            gamma: self.get("gamma")?.unwrap_or(if cold { 5e-7 } else { 5e-8 }),
            t_final: self.get("t_final")?.unwrap_or(if cold { 400.0 } else { 40.0 }),
            r0: self.get_optional("r0")?.unwrap_or(None),
            smoothing_window: self.get("smoothing_window")?.unwrap_or(if cold { 5.0 } else { 0.5 }),
            output_interval: self.get("output_interval")?.unwrap_or(if cold { 0.1 } else { 0.01 }),
            stop_below: self.get_optional("stop_below")?.unwrap_or(Some(1e-6)),
            temperature: self.get("temperature")?.unwrap_or(0.0),
            n_max: self.get_optional("n_max")?.unwrap_or(None),
            sweep_lambda,
            sweep_eta,
            tol: self.get("tol")?.unwrap_or(1e-8),
            reduced_input: self.get_optional("reduced_input")?.unwrap_or(None),
            seed: self.get("seed")?.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads and resolves a configuration file, applying overrides after the file.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let mut raw = RawConfig::parse_str(&std::fs::read_to_string(path)?)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    raw.resolve()
}

fn fmt_opt<T: fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| format!("{x:?}"))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Every physical and numerical constraint, collected into one error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        };
        positive("lambda", self.lambda);
        positive("eta", self.eta);
        positive("sigma_min", self.sigma_min);
        positive("sigma_max", self.sigma_max);
        positive("dx", self.dx);
        positive("depth_factor", self.depth_factor);
        positive("turning_multiple", self.turning_multiple);
        positive("edge_cells", self.edge_cells);
        positive("dt", self.dt);
        positive("t_final", self.t_final);
        positive("smoothing_window", self.smoothing_window);
        positive("output_interval", self.output_interval);
        positive("tol", self.tol);
        if let SigmaChoice::Fixed(s) = self.sigma {
            positive("sigma", s);
        }
        if let Some(l) = self.half_width {
            positive("half_width", l);
        }
        if let Some(r0) = self.r0 {
            positive("r0", r0);
        }
        if let Some(s) = self.stop_below {
            positive("stop_below", s);
        }
        if self.system == System::ColdAtom {
            positive("g0", self.g0);
            positive("rho_m", self.rho_m);
            positive("r_spacing", self.r_spacing);
            positive("r_max", self.r_max);
        }
        if !(self.sigma_max > self.sigma_min) {
            problems.push(format!(
                "sigma_max ({}) must exceed sigma_min ({})",
                self.sigma_max, self.sigma_min
            ));
        }
        if !(1..=3).contains(&self.dim) {
            problems.push(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            problems.push(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            problems.push(format!("temperature must be non-negative, got {}", self.temperature));
        }
        if self.output_interval < self.dt {
            problems.push(format!("output_interval {} is shorter than dt {}", self.output_interval, self.dt));
        }
        for (name, list) in [("sweep_lambda", &self.sweep_lambda), ("sweep_eta", &self.sweep_eta)] {
            if list.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                problems.push(format!("{name} entries must be positive"));
            }
        }
        if self.system == System::ColdAtom && problems.is_empty() {
            let sigma = match self.sigma {
                SigmaChoice::Fixed(s) => s,
                SigmaChoice::Optimize => self.sigma_min,
            };
            if let Err(Error::Validation(v)) =
                CondensateModel::new(self.g0, self.lambda, self.eta, self.rho_m, self.winding, sigma)
            {
                problems.extend(v);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Resolved configuration as `key → value` strings that parse back to the
    /// identical configuration (floats use shortest round-trip formatting).
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let pairs: Vec<(&str, String)> = vec![
            ("system", self.system.to_string()),
            ("lambda", format!("{:?}", self.lambda)),
            ("eta", format!("{:?}", self.eta)),
            ("dim", self.dim.to_string()),
            ("variant", self.variant.to_string()),
            ("sigma", self.sigma.to_string()),
            ("sigma_min", format!("{:?}", self.sigma_min)),
            ("sigma_max", format!("{:?}", self.sigma_max)),
            ("g0", format!("{:?}", self.g0)),
            ("rho_m", format!("{:?}", self.rho_m)),
            ("winding", self.winding.to_string()),
            ("r_spacing", format!("{:?}", self.r_spacing)),
            ("r_max", format!("{:?}", self.r_max)),
            ("dx", format!("{:?}", self.dx)),
            ("half_width", fmt_opt(&self.half_width)),
            ("depth_factor", format!("{:?}", self.depth_factor)),
            ("turning_multiple", format!("{:?}", self.turning_multiple)),
            ("edge_cells", format!("{:?}", self.edge_cells)),
            ("dt", format!("{:?}", self.dt)),
            ("gamma", format!("{:?}", self.gamma)),
            ("t_final", format!("{:?}", self.t_final)),
            ("r0", fmt_opt(&self.r0)),
            ("smoothing_window", format!("{:?}", self.smoothing_window)),
            ("output_interval", format!("{:?}", self.output_interval)),
            ("stop_below", fmt_opt(&self.stop_below)),
            ("temperature", format!("{:?}", self.temperature)),
            ("n_max", fmt_opt(&self.n_max)),
            ("sweep_lambda", fmt_list(&self.sweep_lambda)),
            ("sweep_eta", fmt_list(&self.sweep_eta)),
            ("tol", format!("{:?}", self.tol)),
            (
                "reduced_input",
                self.reduced_input.as_ref().map_or("none".into(), |p| p.display().to_string()),
            ),
            ("seed", self.seed.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Text form of [`RunConfig::to_key_values`], parseable by [`RawConfig::parse_str`].
    pub fn to_config_text(&self) -> String {
        let kv = self.to_key_values();
        KEYS.iter().map(|k| format!("{k} = {}\n", kv[*k])).collect()
    }

    /// Rebuilds a configuration from an echoed `key → value` map.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (k, v) in kv {
            raw.insert(0, k, v, true)?;
        }
        raw.resolve()
    }

    /// The same configuration at another `(λ, η)` point, sweep ranges cleared.
    pub fn at_point(&self, lambda: f64, eta: f64) -> Self {
        Self { lambda, eta, sweep_lambda: Vec::new(), sweep_eta: Vec::new(), ..self.clone() }
    }
}
