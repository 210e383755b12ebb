//! Real-time evolution of the reduced Schrödinger equation
//! `i∂_tψ = −∂_R(∂_Rψ/(2K)) + Uψ − i(γ/2)∂_R⁴ψ`
//! and extraction of the survival probability `P_F(t)` and decay rate `Γ(t)`.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::grid::UniformGrid;
use crate::output::write_csv;
use crate::reduction::ReducedSystem;
use crate::{Error, Result};

/// Amplitudes of `ψ` on every node of a uniform grid (edge nodes are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub amplitudes: Vec<Complex64>,
    pub grid: UniformGrid,
    pub time: f64,
}

impl WaveState {
    /// Discrete norm `Σ|ψ_i|² δx`.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Discrete inner product `Σ conj(ψ_i) χ_i δx`.
    pub fn overlap(&self, other: &WaveState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.spacing()
    }
}

/// Relative edge amplitude above which a harmonic state does not fit the grid.
const EDGE_THRESHOLD: f64 = 1e-12;

/// `n`-th eigenstate of the harmonic approximation `K(0)`, `U″(0)` on `grid`,
/// normalized to unit discrete norm.
pub fn harmonic_state(rs: &ReducedSystem, n: usize, grid: &UniformGrid) -> Result<WaveState> {
    let alpha = (rs.k0 * rs.upp0).powf(0.25);
    let values: Vec<f64> = grid
        .points()
        .iter()
        .map(|&r| hermite_function(n, alpha * r))
        .collect();
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = values[0].abs().max(values[values.len() - 1].abs()) / peak;
    if !(edge < EDGE_THRESHOLD) {
        return Err(Error::GridTooNarrow {
            level: n,
            edge_amplitude: edge,
        });
    }
    if rs.harmonic_width() > rs.r_umax / 3.0 {
        warn!(
            "harmonic width {:.4} exceeds a third of the barrier position {:.4}; \
             the initial state is not well localized inside the barrier",
            rs.harmonic_width(),
            rs.r_umax
        );
    }
    let mut amplitudes: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let last = amplitudes.len() - 1;
    amplitudes[0] = Complex64::new(0.0, 0.0);
    amplitudes[last] = Complex64::new(0.0, 0.0);
    let mut state = WaveState {
        amplitudes,
        grid: *grid,
        time: 0.0,
    };
    let scale = state.norm().sqrt().recip();
    state.amplitudes.iter_mut().for_each(|a| *a *= scale);
    Ok(state)
}

/// Normalized Hermite function `h_n(x) = (2ⁿ n! √π)^{−1/2} H_n(x) e^{−x²/2}`
/// by the stable three-term recurrence.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let h0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = 2f64.sqrt() * x * h0;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolverConfig {
    pub dt: f64,
    /// Hyperdiffusion coefficient `γ`.
    pub gamma: f64,
    pub t_final: f64,
    /// Protected wavelength scale `R₀`.
    pub r0_scale: f64,
    /// Width of the local regression window for `Γ(t)`.
    pub smoothing_window: f64,
    /// Interval between recorded samples of `P_F`.
    pub output_interval: f64,
    /// Stop once `P_F` falls below this value.
    pub stop_below: Option<f64>,
}

impl Default for EvolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            gamma: 5e-8,
            t_final: 40.0,
            r0_scale: 1.0,
            smoothing_window: 0.5,
            output_interval: 0.01,
            stop_below: Some(1e-6),
        }
    }
}

impl EvolverConfig {
    /// `(γ/2)(16π⁴/δx⁴)δt`: damping of grid-scale modes per step.
    pub fn grid_damping(&self, dx: f64) -> f64 {
        0.5 * self.gamma * 16.0 * PI.powi(4) / dx.powi(4) * self.dt
    }

    /// `(γ/2)(16π⁴/R₀⁴)t_final`: damping of the protected scale over the run.
    pub fn protected_damping(&self) -> f64 {
        0.5 * self.gamma * 16.0 * PI.powi(4) / self.r0_scale.powi(4) * self.t_final
    }

    /// Checks positivity and, when `γ > 0`, both dissipation tuning conditions.
    pub fn validate(&self, dx: f64) -> Result<()> {
        let mut problems = Vec::new();
        let positive = [
            ("dt", self.dt),
            ("t_final", self.t_final),
            ("r0_scale", self.r0_scale),
            ("smoothing_window", self.smoothing_window),
            ("output_interval", self.output_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            problems.push(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if self.output_interval < self.dt {
            problems.push(format!(
                "output_interval {} is shorter than dt {}",
                self.output_interval, self.dt
            ));
        }
        if self.gamma > 0.0 && problems.is_empty() {
            let grid = self.grid_damping(dx);
            if !(0.1..=10.0).contains(&grid) {
                problems.push(format!(
                    "gamma: grid-scale damping (gamma/2)(16 pi^4/dx^4)dt = {grid:.4} outside [0.1, 10]"
                ));
            }
            let protected = self.protected_damping();
            if !(protected < 0.1) {
                problems.push(format!(
                    "gamma: damping of the protected scale (gamma/2)(16 pi^4/R0^4)t_final = {protected:.4} is not below 0.1"
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Crank–Nicolson propagator for `∂_tψ = Aψ`, `A = −iH − (γ/2)D₄`, acting on
/// interior nodes with `ψ = 0` at both edges. The left-hand operator is
/// factorized once.
#[derive(Debug, Clone)]
pub struct Propagator {
    hamiltonian: BandMatrix<f64>,
    explicit: BandMatrix<Complex64>,
    implicit: BandLu<Complex64>,
    dt: f64,
    gamma: f64,
}

impl Propagator {
    pub fn new(rs: &ReducedSystem, cfg: &EvolverConfig) -> Result<Self> {
        let grid = rs.grid;
        let dx = grid.spacing();
        let n = grid.len() - 2;
        let points = grid.points();
        let k = rs.k_spline()?;
        // a_{i+1/2} = 1/(2 K_{i+1/2} δx²) on every cell midpoint.
        let a: Vec<f64> = points
            .windows(2)
            .map(|w| 1.0 / (2.0 * k.eval(0.5 * (w[0] + w[1])) * dx * dx))
            .collect();
        let mut h = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            // interior node i ↔ grid node i + 1
            h.set(i, i, a[i] + a[i + 1] + rs.u_table[i + 1]);
            if i + 1 < n {
                h.set(i, i + 1, -a[i + 1]);
                h.set(i + 1, i, -a[i + 1]);
            }
        }
        let g = 0.5 * cfg.gamma / dx.powi(4);
        let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
        let half = 0.5 * cfg.dt;
        let mut left = BandMatrix::zeros(n, 2, 2);
        let mut right = BandMatrix::zeros(n, 2, 2);
        let i_unit = Complex64::new(0.0, 1.0);
        for i in 0..n {
            for (offset, &c) in stencil.iter().enumerate() {
                let j = i as isize + offset as isize - 2;
                if j < 0 || j >= n as isize {
                    continue;
                }
                let j = j as usize;
                let hij = h.get(i, j);
                let delta = if i == j { 1.0 } else { 0.0 };
                // A_ij = −i H_ij − g c
                let a_ij = -i_unit * hij - Complex64::new(g * c, 0.0);
                left.set(i, j, Complex64::new(delta, 0.0) - a_ij * half);
                right.set(i, j, Complex64::new(delta, 0.0) + a_ij * half);
            }
        }
        Ok(Self {
            hamiltonian: h,
            explicit: right,
            implicit: left.factorize()?,
            dt: cfg.dt,
            gamma: cfg.gamma,
        })
    }

    /// Discrete Hamiltonian on the interior nodes.
    pub fn hamiltonian(&self) -> &BandMatrix<f64> {
        &self.hamiltonian
    }

    /// Advances `ws` by one time step in place.
    pub fn step(&self, ws: &mut WaveState) -> Result<()> {
        let n = ws.amplitudes.len();
        let interior = &mut ws.amplitudes[1..n - 1];
        let before = if self.gamma == 0.0 {
            interior.iter().map(|a| a.norm_sqr()).sum::<f64>()
        } else {
            0.0
        };
        let mut rhs = vec![Complex64::new(0.0, 0.0); interior.len()];
        self.explicit.matvec_into(interior, &mut rhs);
        self.implicit.solve_in_place(&mut rhs);
        interior.copy_from_slice(&rhs);
        if self.gamma == 0.0 {
            let after = interior.iter().map(|a| a.norm_sqr()).sum::<f64>();
            let growth = (after - before) / before.max(f64::MIN_POSITIVE);
            if growth > 1e-6 {
                return Err(Error::StabilityViolation { growth });
            }
        }
        if interior.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::StabilityViolation { growth: f64::INFINITY });
        }
        ws.time += self.dt;
        Ok(())
    }
}

/// One Crank–Nicolson step (builds a propagator; use [`Propagator`] for loops).
pub fn step(ws: &WaveState, rs: &ReducedSystem, cfg: &EvolverConfig) -> Result<WaveState> {
    check_grid(ws, rs)?;
    let mut next = ws.clone();
    Propagator::new(rs, cfg)?.step(&mut next)?;
    Ok(next)
}

fn check_grid(ws: &WaveState, rs: &ReducedSystem) -> Result<()> {
    if ws.grid != rs.grid || ws.amplitudes.len() != rs.grid.len() {
        return Err(Error::InvalidInput(
            "wave state grid does not match the reduced-system tabulation".into(),
        ));
    }
    Ok(())
}

/// Integral of the piecewise-linear interpolant of uniformly spaced samples over `[lo, hi]`.
fn linear_integral(grid: &UniformGrid, values: &[f64], lo: f64, hi: f64) -> f64 {
    let lo = lo.max(grid.min);
    let hi = hi.min(grid.max);
    if hi <= lo {
        return 0.0;
    }
    let dx = grid.spacing();
    let at = |x: f64| {
        let s = ((x - grid.min) / dx).clamp(0.0, (values.len() - 1) as f64);
        let i = (s.floor() as usize).min(values.len() - 2);
        let f = s - i as f64;
        (i, values[i] * (1.0 - f) + values[i + 1] * f)
    };
    let (i_lo, v_lo) = at(lo);
    let (i_hi, v_hi) = at(hi);
    if i_lo == i_hi {
        return 0.5 * (v_lo + v_hi) * (hi - lo);
    }
    let mut sum = 0.5 * (v_lo + values[i_lo + 1]) * (grid.point(i_lo + 1) - lo);
    for i in i_lo + 1..i_hi {
        sum += 0.5 * (values[i] + values[i + 1]) * dx;
    }
    sum + 0.5 * (values[i_hi] + v_hi) * (hi - grid.point(i_hi))
}

/// Probability of finding `R` inside the barrier: `|R| ≤ R_Umax`, or `R ≤ R_Umax`
/// for one-sided (asymmetric) reductions.
pub fn prob_false(ws: &WaveState, rs: &ReducedSystem) -> f64 {
    let density = ws.density();
    let lo = if rs.one_sided { ws.grid.min } else { -rs.r_umax };
    linear_integral(&ws.grid, &density, lo, rs.r_umax).clamp(0.0, 1.0)
}

/// `Γ(t) = −d ln P_F/dt` from a local linear regression of `ln P_F` over a
/// window of width `window` centred on each sample (truncated at the ends).
pub fn instantaneous_rate(times: &[f64], p_false: &[f64], window: f64) -> Vec<f64> {
    let logs: Vec<f64> = p_false.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect();
    let half = 0.5 * window;
    let mut lo = 0usize;
    let mut hi = 0usize;
    let n = times.len();
    (0..n)
        .map(|i| {
            while times[i] - times[lo] > half {
                lo += 1;
            }
            while hi + 1 < n && times[hi + 1] - times[i] <= half {
                hi += 1;
            }
            let (mut a, mut b) = (lo, hi);
            if b == a {
                a = a.saturating_sub(1);
                b = (b + 1).min(n - 1);
            }
            if a == b {
                return 0.0;
            }
            -regression_slope(&times[a..=b], &logs[a..=b])
        })
        .collect()
}

fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Late-time rate: mean of `Γ` over the final 20 % of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub value: f64,
    pub std: f64,
    /// Standard deviation below 10 % of the mean.
    pub reached: bool,
    pub window_start: f64,
}

/// Fraction of the run (at its end) over which the plateau is averaged.
pub const PLATEAU_FRACTION: f64 = 0.2;
/// Relative spread below which the plateau counts as reached.
pub const PLATEAU_SPREAD: f64 = 0.1;

pub fn plateau(times: &[f64], gamma: &[f64]) -> Option<Plateau> {
    let t_end = *times.last()?;
    let t0 = times[0];
    let start = t_end - PLATEAU_FRACTION * (t_end - t0);
    let tail: Vec<f64> = times
        .iter()
        .zip(gamma)
        .filter(|(t, _)| **t >= start)
        .map(|(_, g)| *g)
        .collect();
    if tail.len() < 2 {
        return None;
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    let std = var.sqrt();
    Some(Plateau {
        value: mean,
        std,
        reached: std < PLATEAU_SPREAD * mean.abs(),
        window_start: start,
    })
}

/// Harmonic and barrier data of the reduced system, echoed into trace metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub grid: UniformGrid,
    pub k0: f64,
    pub upp0: f64,
    pub r_umax: f64,
    pub u_max: f64,
    pub turning_point: f64,
    pub dim: u32,
    pub one_sided: bool,
}

impl From<&ReducedSystem> for SystemSummary {
    fn from(rs: &ReducedSystem) -> Self {
        Self {
            grid: rs.grid,
            k0: rs.k0,
            upp0: rs.upp0,
            r_umax: rs.r_umax,
            u_max: rs.u_max,
            turning_point: rs.turning_point,
            dim: rs.dim,
            one_sided: rs.one_sided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub config: EvolverConfig,
    pub system: SystemSummary,
    /// `"pure n=<level>"` or `"thermal T=<temperature> n_max=<level>"`.
    pub initial_state: String,
    pub temperature: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub steps: usize,
    pub stopped_early: bool,
    pub plateau: Option<Plateau>,
    pub wall_clock_seconds: f64,
}

/// Time series of `P_F(t)` and `Γ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub p_false: Vec<f64>,
    pub gamma_inst: Vec<f64>,
    pub metadata: TraceMetadata,
}

impl DecayTrace {
    /// Value of `P_F` at the sample closest to `t`.
    pub fn p_false_at(&self, t: f64) -> f64 {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.p_false[i]
    }

    /// Recomputes `Γ(t)` and the plateau with a different smoothing window.
    pub fn resmoothed(&self, window: f64) -> DecayTrace {
        let mut out = self.clone();
        out.gamma_inst = instantaneous_rate(&self.times, &self.p_false, window);
        out.metadata.config.smoothing_window = window;
        out.metadata.plateau = plateau(&out.times, &out.gamma_inst);
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["t", "P_F", "Gamma"],
            &[&self.times, &self.p_false, &self.gamma_inst],
        )
    }

    /// JSON sidecar with the run configuration and system provenance.
    pub fn write_metadata(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.metadata)?)?;
        Ok(())
    }
}

/// Raw samples of `P_F` from one evolution.
struct Samples {
    times: Vec<f64>,
    p_false: Vec<f64>,
    steps: usize,
    stopped_early: bool,
}

fn run_samples(
    mut ws: WaveState,
    rs: &ReducedSystem,
    cfg: &EvolverConfig,
    propagator: &Propagator,
    allow_stop: bool,
) -> Result<Samples> {
    let total = (cfg.t_final / cfg.dt).round() as usize;
    let every = ((cfg.output_interval / cfg.dt).round() as usize).max(1);
    let mut out = Samples {
        times: Vec::with_capacity(total / every + 1),
        p_false: Vec::with_capacity(total / every + 1),
        steps: 0,
        stopped_early: false,
    };
    let t0 = ws.time;
    for k in 0..=total {
        if k % every == 0 {
            let p = prob_false(&ws, rs);
            out.times.push(t0 + k as f64 * cfg.dt);
            out.p_false.push(p);
            if allow_stop && cfg.stop_below.is_some_and(|floor| p < floor) {
                out.stopped_early = true;
                break;
            }
        }
        if k == total {
            break;
        }
        propagator.step(&mut ws)?;
        out.steps += 1;
    }
    Ok(out)
}

/// Evolves `initial` to `t_final`, recording `P_F` and deriving `Γ(t)`.
pub fn evolve(initial: &WaveState, rs: &ReducedSystem, cfg: &EvolverConfig) -> Result<DecayTrace> {
    check_grid(initial, rs)?;
    cfg.validate(rs.grid.spacing())?;
    let clock = Instant::now();
    let propagator = Propagator::new(rs, cfg)?;
    let samples = run_samples(initial.clone(), rs, cfg, &propagator, true)?;
    debug!("evolution finished after {} steps", samples.steps);
    Ok(finish_trace(
        samples,
        rs,
        cfg,
        "pure".to_string(),
        None,
        None,
        clock,
    ))
}

fn finish_trace(
    samples: Samples,
    rs: &ReducedSystem,
    cfg: &EvolverConfig,
    initial_state: String,
    temperature: Option<f64>,
    weights: Option<Vec<f64>>,
    clock: Instant,
) -> DecayTrace {
    let gamma_inst = instantaneous_rate(&samples.times, &samples.p_false, cfg.smoothing_window);
    let plateau = plateau(&samples.times, &gamma_inst);
    DecayTrace {
        metadata: TraceMetadata {
            config: *cfg,
            system: rs.into(),
            initial_state,
            temperature,
            weights,
            steps: samples.steps,
            stopped_early: samples.stopped_early,
            plateau,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
        },
        times: samples.times,
        p_false: samples.p_false,
        gamma_inst,
    }
}

/// Evolution of the `n`-th harmonic eigenstate on the system's own grid.
pub fn evolve_level(rs: &ReducedSystem, n: usize, cfg: &EvolverConfig) -> Result<DecayTrace> {
    let initial = harmonic_state(rs, n, &rs.grid)?;
    let mut trace = evolve(&initial, rs, cfg)?;
    trace.metadata.initial_state = format!("pure n={n}");
    Ok(trace)
}

/// Maximum tail weight beyond the highest retained level.
pub const THERMAL_TAIL: f64 = 1e-3;

/// Boltzmann ratio `e^{−ω/T}` between successive harmonic levels.
fn boltzmann_ratio(rs: &ReducedSystem, temperature: f64) -> f64 {
    (-rs.harmonic_frequency() / temperature).exp()
}

/// Smallest `n_max` whose cumulative (untruncated) weight reaches `1 − THERMAL_TAIL`.
pub fn default_n_max(rs: &ReducedSystem, temperature: f64) -> usize {
    let q = boltzmann_ratio(rs, temperature);
    if q <= 0.0 {
        return 0;
    }
    // cumulative weight of 0..=n is 1 − q^{n+1}
    let n = (THERMAL_TAIL.ln() / q.ln()).ceil() - 1.0;
    n.max(0.0) as usize
}

/// Normalized weights `P_n ∝ e^{−nω/T}` for `n ≤ n_max`.
pub fn thermal_weights(rs: &ReducedSystem, temperature: f64, n_max: usize) -> Vec<f64> {
    let q = boltzmann_ratio(rs, temperature);
    let raw: Vec<f64> = (0..=n_max).map(|n| q.powi(n as i32)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Thermal ensemble: evolves every `ψ_n`, `n ≤ n_max`, and averages `P_F(t)`
/// with Boltzmann weights.
pub fn thermal_trace(
    rs: &ReducedSystem,
    cfg: &EvolverConfig,
    temperature: f64,
    n_max: Option<usize>,
) -> Result<DecayTrace> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    cfg.validate(rs.grid.spacing())?;
    let n_max = n_max.unwrap_or_else(|| default_n_max(rs, temperature));
    let tail = boltzmann_ratio(rs, temperature).powi(n_max as i32 + 1);
    if tail > THERMAL_TAIL {
        return Err(Error::TruncationInsufficient {
            level: n_max,
            weight: tail,
        });
    }
    let clock = Instant::now();
    let weights = thermal_weights(rs, temperature, n_max);
    let propagator = Propagator::new(rs, cfg)?;
    let members: Vec<Samples> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let initial = harmonic_state(rs, n, &rs.grid)?;
            run_samples(initial, rs, cfg, &propagator, false)
        })
        .collect::<Result<_>>()?;
    let times = members[0].times.clone();
    let p_false: Vec<f64> = (0..times.len())
        .map(|i| members.iter().zip(&weights).map(|(m, w)| w * m.p_false[i]).sum())
        .collect();
    let samples = Samples {
        times,
        p_false,
        steps: members.iter().map(|m| m.steps).sum(),
        stopped_early: false,
    };
    Ok(finish_trace(
        samples,
        rs,
        cfg,
        format!("thermal T={temperature} n_max={n_max}"),
        Some(temperature),
        Some(weights),
        clock,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::BarrierData;

    /// Constant mass and harmonic potential with a fictitious barrier marker.
    fn harmonic_system(k: f64, w2: f64, half_width: f64, dx: f64) -> ReducedSystem {
        let grid = UniformGrid::symmetric(half_width, dx).unwrap();
        let u: Vec<f64> = grid.points().iter().map(|r| 0.5 * k * w2 * r * r).collect();
        let barrier = BarrierData {
            r_umax: 0.5 * half_width,
            u_max: 1.0,
            turning_point: half_width,
        };
        ReducedSystem::from_tables(grid, vec![k; grid.len()], u, k, k * w2, barrier, 1, true)
            .unwrap()
    }

    #[test]
    fn hermite_functions_match_closed_forms() {
        let x = 0.7f64;
        let h0 = PI.powf(-0.25) * (-x * x / 2.0).exp();
        assert!((hermite_function(0, x) - h0).abs() < 1e-15);
        let h2 = h0 * (4.0 * x * x - 2.0) / (8f64).sqrt();
        assert!((hermite_function(2, x) - h2).abs() < 1e-14);
    }

    #[test]
    fn ground_state_norm_and_parity() {
        let rs = harmonic_system(2.0, 3.0, 6.0, 0.01);
        let g = harmonic_state(&rs, 0, &rs.grid).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        let first = harmonic_state(&rs, 1, &rs.grid).unwrap();
        let mid = rs.grid.len() / 2;
        assert_eq!(first.amplitudes[mid].norm(), 0.0);
        assert!((first.amplitudes[mid + 5].re + first.amplitudes[mid - 5].re).abs() < 1e-12);
    }

    #[test]
    fn narrow_grid_rejected() {
        let rs = harmonic_system(1.0, 1.0, 2.0, 0.01);
        assert!(matches!(
            harmonic_state(&rs, 0, &rs.grid),
            Err(Error::GridTooNarrow { level: 0, .. })
        ));
    }

    #[test]
    fn prob_false_of_uniform_density() {
        let rs = harmonic_system(1.0, 1.0, 4.0, 0.01);
        let n = rs.grid.len();
        let value = Complex64::new((1.0 / 8.0f64).sqrt(), 0.0);
        let ws = WaveState {
            amplitudes: vec![value; n],
            grid: rs.grid,
            time: 0.0,
        };
        assert!((prob_false(&ws, &rs) - 2.0 * rs.r_umax / 8.0).abs() < 1e-12);
    }

    #[test]
    fn prob_false_disjoint_support() {
        let rs = harmonic_system(1.0, 1.0, 4.0, 0.01);
        let pts = rs.grid.points();
        let ws = WaveState {
            amplitudes: pts
                .iter()
                .map(|&r| Complex64::new(if r.abs() > rs.r_umax + 0.02 { 1.0 } else { 0.0 }, 0.0))
                .collect(),
            grid: rs.grid,
            time: 0.0,
        };
        assert_eq!(prob_false(&ws, &rs), 0.0);
    }

    #[test]
    fn rate_of_exact_exponential() {
        let t: Vec<f64> = (0..500).map(|i| i as f64 * 0.01).collect();
        let p: Vec<f64> = t.iter().map(|x| (-0.3 * x).exp()).collect();
        for g in instantaneous_rate(&t, &p, 0.5) {
            assert!((g - 0.3).abs() < 1e-10);
        }
        let pl = plateau(&t, &instantaneous_rate(&t, &p, 0.5)).unwrap();
        assert!(pl.reached && (pl.value - 0.3).abs() < 1e-10);
    }

    #[test]
    fn validation_lists_every_problem() {
        let cfg = EvolverConfig {
            dt: -1.0,
            t_final: 0.0,
            ..EvolverConfig::default()
        };
        match cfg.validate(0.01) {
            Err(Error::Validation(v)) => {
                assert!(v.iter().any(|m| m.starts_with("dt")));
                assert!(v.iter().any(|m| m.starts_with("t_final")));
            }
            other => panic!("unexpected {other:?}"),
        }
        let too_strong = EvolverConfig {
            gamma: 1e-3,
            ..EvolverConfig::default()
        };
        assert!(too_strong.validate(0.01).is_err());
    }

    #[test]
    fn thermal_weights_normalized_and_decreasing() {
        let rs = harmonic_system(1.0, 4.0, 6.0, 0.01);
        let w = thermal_weights(&rs, 3.0, 12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[1] < p[0]));
        assert_eq!(default_n_max(&rs, 1e-3), 0);
    }
}
