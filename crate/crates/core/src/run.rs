//! Run orchestration: reduction → (σ optimization) → instanton → evolution,
//! for single runs and (λ, η) sweeps, with CSV and JSON artifacts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coldatom::{
    condensate_reduced_action, condensate_reduced_system, field_bounce_check, CondensateModel,
    CondensateReduction, DensityProfiles,
};
use crate::config::{RunConfig, SigmaChoice, System};
use crate::evolver::{evolve_level, thermal_trace, DecayTrace, EvolverConfig, TraceMetadata};
use crate::instanton::{
    comparison_statistic, optimize_sigma, shoot_bounce_reduced, solve_bounce_field,
    solve_bounce_reduced, BounceProfile, ReducedEom,
};
use crate::model::{Ansatz, ScalarPotential};
use crate::optimize::golden_section;
use crate::output::format_float;
use crate::reduction::{reduce_ansatz, BarrierData, DomainRule, ReducedSystem};
use crate::{Error, Result};

/// Newton tolerance for the condensate density relaxation.
const CONDENSATE_NEWTON_TOL: f64 = 1e-10;
/// Tolerance of the field-theoretic bounce shooting.
const BOUNCE_TOL: f64 = 1e-10;

/// Pipeline stages, in order; `Evolve` runs all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Reduce,
    Instanton,
    Evolve,
}

/// Everything a run produced, echoed into `meta.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub sigma: Option<f64>,
    /// Reduced action at the optimal σ, when σ was optimized.
    pub sigma_objective: Option<f64>,
    pub barrier: Option<BarrierData>,
    pub k0: Option<f64>,
    pub upp0: Option<f64>,
    pub domain_half_width: Option<f64>,
    pub s_e_field: Option<f64>,
    pub s_e_field_virial: Option<f64>,
    pub s_e_reduced: Option<f64>,
    pub s_e_shooting: Option<f64>,
    pub gamma_plateau: Option<f64>,
    pub plateau_reached: Option<bool>,
    pub statistic: Option<f64>,
    /// Largest first-order density correction `|γ_R| c₀/ρ_F` (condensate only).
    pub expansion_parameter: Option<f64>,
    pub trace: Option<TraceMetadata>,
    pub files: Vec<String>,
    pub partial: bool,
    pub error: Option<String>,
    pub wall_clock_seconds: f64,
}

impl RunSummary {
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// The resolved configuration echoed by this run.
    pub fn run_config(&self) -> Result<RunConfig> {
        RunConfig::from_key_values(&self.config)
    }
}

/// In-memory results of a pipeline run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub system: Option<ReducedSystem>,
    pub bounce: Option<BounceProfile>,
    pub trace: Option<DecayTrace>,
    pub densities: Option<DensityProfiles>,
}

pub fn domain_rule(cfg: &RunConfig) -> DomainRule {
    DomainRule {
        spacing: cfg.dx,
        depth_factor: cfg.depth_factor,
        turning_multiple: cfg.turning_multiple,
        edge_cells: cfg.edge_cells,
        half_width: cfg.half_width,
    }
}

fn ansatz(cfg: &RunConfig, sigma: f64) -> Result<Ansatz> {
    Ansatz::new(cfg.variant, sigma, cfg.dim, ScalarPotential::new(cfg.eta, cfg.lambda)?)
}

fn condensate(cfg: &RunConfig, sigma: f64) -> Result<CondensateModel> {
    CondensateModel::new(cfg.g0, cfg.lambda, cfg.eta, cfg.rho_m, cfg.winding, sigma)
}

fn condensate_reduction(cfg: &RunConfig, sigma: f64) -> Result<CondensateReduction> {
    CondensateReduction::new(condensate(cfg, sigma)?, cfg.r_spacing, cfg.r_max, CONDENSATE_NEWTON_TOL)
}

/// Golden-section minimization of the condensate reduced action over σ.
pub fn optimize_condensate_sigma(cfg: &RunConfig) -> Result<(f64, f64)> {
    let (a, b) = (cfg.sigma_min, cfg.sigma_max);
    let action = |sigma: f64| -> Result<f64> {
        let red = condensate_reduction(cfg, sigma)?;
        match condensate_reduced_action(&red, cfg.tol) {
            Ok(s) => Ok(s),
            Err(Error::NoTurningPoint | Error::BarrierNotFound) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let x_tol = 2e-3 * (b - a);
    let (sigma, s) = golden_section(action, a, b, x_tol)?;
    if !s.is_finite() || sigma - a < 2.0 * x_tol || b - sigma < 2.0 * x_tol {
        return Err(Error::NoInteriorMinimum { sigma });
    }
    Ok((sigma, s))
}

/// σ from the configuration, optimized when requested.
pub fn resolve_sigma(cfg: &RunConfig) -> Result<(f64, Option<f64>)> {
    match cfg.sigma {
        SigmaChoice::Fixed(s) => Ok((s, None)),
        SigmaChoice::Optimize => {
            let (s, obj) = match cfg.system {
                System::Relativistic => {
                    optimize_sigma(&ansatz(cfg, cfg.sigma_min)?, (cfg.sigma_min, cfg.sigma_max), cfg.tol)?
                }
                System::ColdAtom => optimize_condensate_sigma(cfg)?,
            };
            info!("optimal sigma {s:.6} (reduced action {obj:.6})");
            Ok((s, Some(obj)))
        }
    }
}

/// Evolution settings; the protected scale defaults to `2π` harmonic widths.
pub fn evolver_config(cfg: &RunConfig, rs: &ReducedSystem) -> EvolverConfig {
    EvolverConfig {
        dt: cfg.dt,
        gamma: cfg.gamma,
        t_final: cfg.t_final,
        r0_scale: cfg.r0.unwrap_or(2.0 * PI * rs.harmonic_width()),
        smoothing_window: cfg.smoothing_window,
        output_interval: cfg.output_interval,
        stop_below: cfg.stop_below,
    }
}

/// Runs the pipeline up to `stage`, filling `result` as it goes so that a
/// failure leaves the completed stages in place.
fn run_stages(cfg: &RunConfig, stage: Stage, result: &mut RunResult) -> Result<()> {
    let s = &mut result.summary;
    let rs = if let Some(path) = &cfg.reduced_input {
        let even = cfg.system == System::ColdAtom || cfg.variant.is_even();
        let dim = if cfg.system == System::ColdAtom { 2 } else { cfg.dim };
        ReducedSystem::from_csv(path, dim, even)?
    } else {
        let (sigma, objective) = resolve_sigma(cfg)?;
        s.sigma = Some(sigma);
        s.sigma_objective = objective;
        match cfg.system {
            System::Relativistic => reduce_ansatz(ansatz(cfg, sigma)?, &domain_rule(cfg), cfg.tol)?,
            System::ColdAtom => {
                let red = condensate_reduction(cfg, sigma)?;
                let rs = condensate_reduced_system(&red, &domain_rule(cfg), cfg.tol)?;
                let p = red.profiles(rs.r_umax)?;
                s.expansion_parameter = Some(red.expansion_parameter(&p));
                result.densities = Some(p);
                rs
            }
        }
    };
    s.barrier = Some(rs.barrier());
    s.k0 = Some(rs.k0);
    s.upp0 = Some(rs.upp0);
    s.domain_half_width = Some(rs.grid.max);
    result.system = Some(rs.clone());
    if stage == Stage::Reduce {
        return Ok(());
    }

    let reduced = solve_bounce_reduced(&rs, cfg.tol)?;
    s.s_e_reduced = Some(reduced.s_e_reduced);
    match shoot_bounce_reduced(&rs, ReducedEom::Variational, cfg.tol) {
        Ok(shot) => s.s_e_shooting = Some(shot.s_e),
        Err(e) => info!("shooting cross-check failed: {e}"),
    }
    let bounce = match cfg.system {
        System::Relativistic => Some(solve_bounce_field(&ScalarPotential::new(cfg.eta, cfg.lambda)?, cfg.dim, BOUNCE_TOL)?),
        System::ColdAtom if cfg.winding == 0 => {
            Some(field_bounce_check(&condensate(cfg, s.sigma.unwrap_or(cfg.sigma_min))?, BOUNCE_TOL)?)
        }
        System::ColdAtom => None,
    };
    if let Some(b) = &bounce {
        s.s_e_field = Some(b.s_e);
        s.s_e_field_virial = Some(b.s_e_virial);
    }
    result.bounce = bounce;
    if stage == Stage::Instanton {
        return Ok(());
    }

    let ecfg = evolver_config(cfg, &rs);
    let trace = if cfg.temperature > 0.0 {
        thermal_trace(&rs, &ecfg, cfg.temperature, cfg.n_max)?
    } else {
        evolve_level(&rs, 0, &ecfg)?
    };
    let s = &mut result.summary;
    if let Some(p) = &trace.metadata.plateau {
        s.gamma_plateau = Some(p.value);
        s.plateau_reached = Some(p.reached);
        let s_e = s.s_e_field.or(s.s_e_reduced);
        if let Some(s_e) = s_e {
            s.statistic = comparison_statistic(p.value, rs.u_max, s_e).ok();
        }
    }
    s.trace = Some(trace.metadata.clone());
    result.trace = Some(trace);
    Ok(())
}

/// Runs the pipeline in memory. Errors are recorded in the summary, which is
/// flagged as partial; the error itself is returned alongside.
pub fn execute(cfg: &RunConfig, stage: Stage, command: &str) -> (RunResult, Option<Error>) {
    let clock = Instant::now();
    let mut result = RunResult {
        summary: RunSummary {
            command: command.to_string(),
            config: cfg.to_key_values(),
            ..Default::default()
        },
        system: None,
        bounce: None,
        trace: None,
        densities: None,
    };
    let err = run_stages(cfg, stage, &mut result).err();
    if let Some(e) = &err {
        result.summary.partial = true;
        result.summary.error = Some(e.to_string());
    }
    result.summary.wall_clock_seconds = clock.elapsed().as_secs_f64();
    (result, err)
}

/// Writes every artifact present in `result` and `meta.json` into `out`.
pub fn write_artifacts(result: &mut RunResult, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    if let Some(rs) = &result.system {
        rs.write_csv(&out.join("reduced.csv"))?;
        files.push("reduced.csv".to_string());
    }
    if let Some(b) = &result.bounce {
        b.write_csv(&out.join("bounce.csv"))?;
        files.push("bounce.csv".to_string());
    }
    if let Some(t) = &result.trace {
        t.write_csv(&out.join("trace.csv"))?;
        files.push("trace.csv".to_string());
    }
    if let Some(p) = &result.densities {
        p.write_csv(&out.join("densities.csv"))?;
        files.push("densities.csv".to_string());
    }
    files.push("meta.json".to_string());
    result.summary.files = files;
    result.summary.write(&out.join("meta.json"))
}

/// Runs a pipeline and writes its artifacts; on failure the partial outputs
/// and `meta.json` are still written before the error is returned.
pub fn run_single(cfg: &RunConfig, stage: Stage, command: &str, out: &Path) -> Result<RunResult> {
    let (mut result, err) = execute(cfg, stage, command);
    write_artifacts(&mut result, out)?;
    match err {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub eta: f64,
    pub sigma_opt: Option<f64>,
    pub s_e: Option<f64>,
    pub s_e_reduced: Option<f64>,
    pub u_max: Option<f64>,
    pub gamma_plateau: Option<f64>,
    pub statistic: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(lambda: f64, eta: f64, r: &RunResult, err: Option<Error>) -> Self {
        let s = &r.summary;
        Self {
            lambda,
            eta,
            sigma_opt: s.sigma,
            s_e: s.s_e_field,
            s_e_reduced: s.s_e_reduced,
            u_max: s.barrier.map(|b| b.u_max),
            gamma_plateau: s.gamma_plateau,
            statistic: s.statistic,
            error: err.map(|e| e.to_string()),
        }
    }
}

/// Sweep results in grid order (λ outer, η inner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: BTreeMap<String, String>,
    pub rows: Vec<SweepRow>,
    pub wall_clock_seconds: f64,
}

pub const SWEEP_HEADER: &[&str] = &[
    "lambda",
    "eta",
    "sigma_opt",
    "S_E",
    "S_E_reduced",
    "U_max",
    "gamma_plateau",
    "statistic",
    "error",
];

impl SweepResult {
    /// CSV text; missing values are empty fields, errors are quoted with
    /// embedded quotes doubled.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        let mut text = SWEEP_HEADER.join(",") + "\n";
        for r in &self.rows {
            let error = r
                .error
                .as_ref()
                .map(|e| format!("\"{}\"", e.replace('"', "\"\"").replace('\n', " ")))
                .unwrap_or_default();
            let fields = [
                format_float(r.lambda),
                format_float(r.eta),
                opt(r.sigma_opt),
                opt(r.s_e),
                opt(r.s_e_reduced),
                opt(r.u_max),
                opt(r.gamma_plateau),
                opt(r.statistic),
                error,
            ];
            text += &fields.join(",");
            text.push('\n');
        }
        text
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out)?;
        fs::write(out.join("sweep.csv"), self.to_csv())?;
        fs::write(out.join("meta.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Runs the full pipeline at every `(λ, η)` grid point in parallel; failures
/// become rows with an error message and the sweep continues.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    if cfg.sweep_lambda.is_empty() || cfg.sweep_eta.is_empty() {
        return Err(Error::InvalidInput("sweep_lambda and sweep_eta must be non-empty".into()));
    }
    let clock = Instant::now();
    let points: Vec<(f64, f64)> = cfg
        .sweep_lambda
        .iter()
        .flat_map(|&l| cfg.sweep_eta.iter().map(move |&e| (l, e)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(lambda, eta)| {
            let point = cfg.at_point(lambda, eta);
            let (result, err) = match point.validate() {
                Ok(()) => execute(&point, Stage::Evolve, "sweep"),
                Err(e) => (
                    RunResult {
                        summary: RunSummary::default(),
                        system: None,
                        bounce: None,
                        trace: None,
                        densities: None,
                    },
                    Some(e),
                ),
            };
            info!("sweep point lambda={lambda} eta={eta} done");
            SweepRow::from_result(lambda, eta, &result, err)
        })
        .collect();
    Ok(SweepResult {
        config: cfg.to_key_values(),
        rows,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    })
}

/// Reads `sweep.csv` numbers back (error column ignored).
pub fn sweep_columns(text: &str) -> Vec<Vec<Option<f64>>> {
    text.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .take(SWEEP_HEADER.len() - 1)
                .map(|f| f.parse().ok())
                .collect()
        })
        .collect()
}

/// Output directory helper: `out` or the current directory.
pub fn output_dir(out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}
