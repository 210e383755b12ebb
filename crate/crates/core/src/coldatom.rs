//! Two-component condensate reduced to one collective coordinate: the phase
//! difference follows a wall Ansatz, the common density and its first-order
//! response to `R′` solve radial boundary-value problems at each `R`.
//!
//! Units: `ħ = m = 1`. Each component has density `ρ`, the phases are
//! `±φ/2 + nθ`, and the interaction per unit area is
//! `V(ρ, ρ, φ) = g₀(ρ − ρ_m)² − 2λρ cos φ + 2ληρ² sin²φ`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::grid::UniformGrid;
use crate::instanton::{BounceProfile, zero_energy_action};
use crate::model::sech2;
use crate::output::write_csv;
use crate::quadrature::trapezoid_uniform;
use crate::reduction::{find_barrier, DomainRule, EffectiveModel, ReducedSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensateModel {
    pub g0: f64,
    pub lam: f64,
    pub eta_c: f64,
    pub rho_m: f64,
    pub winding: u32,
    pub sigma: f64,
}

impl CondensateModel {
    /// Validates positivity and the existence of the metastable false vacuum,
    /// reporting every violated condition.
    pub fn new(g0: f64, lam: f64, eta_c: f64, rho_m: f64, winding: u32, sigma: f64) -> Result<Self> {
        let mut problems = Vec::new();
        for (name, v) in [("g0", g0), ("lambda", lam), ("eta", eta_c), ("rho_m", rho_m), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if problems.is_empty() {
            if !(lam < 2.0 * g0 * rho_m) {
                problems.push(format!(
                    "lambda: false vacuum requires lambda < 2 g0 rho_m = {}, got {lam}",
                    2.0 * g0 * rho_m
                ));
            }
            // Positive false-vacuum density as well: rho_m − λ/g₀ > 0.
            if !(g0 * rho_m - lam > 0.0) {
                problems.push(format!(
                    "lambda: false-vacuum density rho_m - lambda/g0 = {} must be positive",
                    rho_m - lam / g0
                ));
            } else if !(eta_c > g0 / (2.0 * (g0 * rho_m - lam))) {
                problems.push(format!(
                    "eta: false vacuum requires eta > g0/(2(g0 rho_m - lambda)) = {}, got {eta_c}",
                    g0 / (2.0 * (g0 * rho_m - lam))
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(Self { g0, lam, eta_c, rho_m, winding, sigma })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.g0, self.lam, self.eta_c, self.rho_m, self.winding, sigma)
    }

    pub fn with_winding(&self, winding: u32) -> Self {
        Self { winding, ..*self }
    }

    pub fn rho_false(&self) -> f64 {
        self.rho_m - self.lam / self.g0
    }

    pub fn rho_true(&self) -> f64 {
        self.rho_m + self.lam / self.g0
    }

    /// Healing length of the false vacuum, `1/√(g₀ρ_F)`.
    pub fn healing_length(&self) -> f64 {
        1.0 / (self.g0 * self.rho_false()).sqrt()
    }

    /// `V(ρ, ρ, φ)`.
    pub fn potential(&self, rho: f64, phi: f64) -> f64 {
        let s = phi.sin();
        self.g0 * (rho - self.rho_m).powi(2) - 2.0 * self.lam * rho * phi.cos()
            + 2.0 * self.lam * self.eta_c * rho * rho * s * s
    }

    /// `∂_ρ V(ρ, ρ, φ)`.
    pub fn potential_drho(&self, rho: f64, phi: f64) -> f64 {
        let s = phi.sin();
        2.0 * self.g0 * (rho - self.rho_m) - 2.0 * self.lam * phi.cos()
            + 4.0 * self.lam * self.eta_c * rho * s * s
    }

    fn potential_drho2(&self, phi: f64) -> f64 {
        let s = phi.sin();
        2.0 * self.g0 + 4.0 * self.lam * self.eta_c * s * s
    }

    /// `∂²_{ρ₊}V − ∂_{ρ₋}∂_{ρ₊}V` at equal densities.
    pub fn response_curvature(&self, rho: f64, phi: f64) -> f64 {
        let s = phi.sin();
        self.g0 + self.lam * phi.cos() / rho - 2.0 * self.lam * self.eta_c * s * s
    }

    /// False-vacuum energy density `V(ρ_F, ρ_F, π)`.
    pub fn false_vacuum_energy(&self) -> f64 {
        self.potential(self.rho_false(), PI)
    }

    /// Density minimizing `V(ρ, ρ, φ)` at fixed phase.
    pub fn relaxed_density(&self, phi: f64) -> f64 {
        let s = phi.sin();
        (self.g0 * self.rho_m + self.lam * phi.cos()) / (self.g0 + 2.0 * self.lam * self.eta_c * s * s)
    }
}

/// `φ_R(r) = π[1 − ½tanh((r−R)/σ) + ½tanh((r+R)/σ)]`.
pub fn phase_ansatz(m: &CondensateModel, big_r: f64, r: f64) -> f64 {
    let s = m.sigma;
    PI * (1.0 - 0.5 * ((r - big_r) / s).tanh() + 0.5 * ((r + big_r) / s).tanh())
}

/// `∂_r φ_R`.
pub fn phase_d_r(m: &CondensateModel, big_r: f64, r: f64) -> f64 {
    let s = m.sigma;
    PI * 0.5 * (sech2((r + big_r) / s) - sech2((r - big_r) / s)) / s
}

/// `∂_R φ_R`.
pub fn phase_d_big_r(m: &CondensateModel, big_r: f64, r: f64) -> f64 {
    let s = m.sigma;
    PI * 0.5 * (sech2((r - big_r) / s) + sech2((r + big_r) / s)) / s
}

/// Outcome of the Newton relaxation for the density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySolution {
    pub rho: Vec<f64>,
    pub iterations: usize,
    /// Max-norm of the discrete residual at convergence.
    pub residual: f64,
}

const NEWTON_MAX_ITERATIONS: usize = 60;

/// Tridiagonal discretization of `(1/r)∂_r(r ∂_r f)` with half-node fluxes;
/// at `r = 0` the regular limit `2f″(0)` is used. Rows are `(lower, diag, upper)`.
fn radial_laplacian(grid: &UniformGrid) -> Vec<(f64, f64, f64)> {
    let h = grid.spacing();
    let h2 = h * h;
    (0..grid.len())
        .map(|i| {
            if i == 0 {
                (0.0, -4.0 / h2, 4.0 / h2)
            } else {
                let r = grid.point(i);
                let (rp, rm) = (r + 0.5 * h, r - 0.5 * h);
                (rm / (r * h2), -(rp + rm) / (r * h2), rp / (r * h2))
            }
        })
        .collect()
}

fn check_radial_grid(grid: &UniformGrid) -> Result<()> {
    if grid.min != 0.0 {
        return Err(Error::InvalidInput(format!("radial grid must start at r = 0, got {}", grid.min)));
    }
    Ok(())
}

fn centrifugal(m: &CondensateModel, r: f64) -> f64 {
    if m.winding == 0 || r == 0.0 {
        0.0
    } else {
        f64::from(m.winding * m.winding) / (r * r)
    }
}

/// Newton relaxation for `√ρ_R` from
/// `(1/(r√ρ)) ∂_r(r ∂_r√ρ) = ¼(∂_rφ_R)² + n²/r² + ∂_ρV`,
/// with `ρ′(0) = 0` (no winding) or `ρ(0) = 0` (vortex core) and `ρ(r_max) = ρ_F`.
pub fn solve_rho(m: &CondensateModel, big_r: f64, grid: &UniformGrid, tol: f64) -> Result<DensitySolution> {
    check_radial_grid(grid)?;
    let n = grid.len();
    let lap = radial_laplacian(grid);
    let r: Vec<f64> = grid.points();
    let phi: Vec<f64> = r.iter().map(|&x| phase_ansatz(m, big_r, x)).collect();
    let base: Vec<f64> = r
        .iter()
        .map(|&x| 0.25 * phase_d_r(m, big_r, x).powi(2) + centrifugal(m, x))
        .collect();
    let f_edge = m.rho_false().sqrt();
    let core = m.winding > 0;
    let xi = m.healing_length();
    let mut f: Vec<f64> = r
        .iter()
        .map(|&x| if core { f_edge * (x / xi).tanh() } else { f_edge })
        .collect();
    let residual = |f: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    f[i] - f_edge
                } else if i == 0 && core {
                    f[0]
                } else {
                    let (lo, di, up) = lap[i];
                    let lf = di * f[i] + up * f[i + 1] + if i > 0 { lo * f[i - 1] } else { 0.0 };
                    lf - (base[i] + m.potential_drho(f[i] * f[i], phi[i])) * f[i]
                }
            })
            .collect()
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut res = residual(&f);
    let mut res_norm = norm(&res);
    let scale = lap[0].1.abs() * f_edge;
    for it in 0..NEWTON_MAX_ITERATIONS {
        if res_norm <= tol * scale {
            return Ok(DensitySolution {
                rho: f.iter().map(|x| x * x).collect(),
                iterations: it,
                residual: res_norm,
            });
        }
        let mut jac = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            if i == n - 1 || (i == 0 && core) {
                jac.set(i, i, 1.0);
                continue;
            }
            let (lo, di, up) = lap[i];
            let rho = f[i] * f[i];
            let c = base[i] + m.potential_drho(rho, phi[i]);
            jac.set(i, i, di - c - 2.0 * rho * m.potential_drho2(phi[i]));
            jac.set(i, i + 1, up);
            if i > 0 {
                jac.set(i, i - 1, lo);
            }
        }
        let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
        let step = jac
            .factorize()
            .map_err(|_| Error::NewtonDivergence { iterations: it, residual: res_norm })?
            .solve(&rhs);
        // Damped update: halve until the residual decreases and f stays positive.
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = f.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
            let positive = trial.iter().skip(usize::from(core)).all(|&x| x > 0.0);
            let trial_res = residual(&trial);
            let trial_norm = norm(&trial_res);
            if positive && trial_norm.is_finite() && (trial_norm < res_norm || alpha < 1e-3) {
                f = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-4 {
                return Err(Error::NewtonDivergence { iterations: it, residual: res_norm });
            }
        }
    }
    Err(Error::NewtonDivergence { iterations: NEWTON_MAX_ITERATIONS, residual: res_norm })
}

/// First-order density response `γ_R`: with `u = γ_R/√ρ_R`,
/// `(1/r)∂_r(r ∂_r u) − [¼φ′² + n²/r² + ∂_ρV + 4ρ(∂²₊V − ∂₋∂₊V)] u = 2√ρ ∂_Rφ_R`,
/// `u′(0) = 0` (or `u(0) = 0` with a vortex) and `u(r_max) = 0`.
pub fn solve_gamma(m: &CondensateModel, big_r: f64, rho: &[f64], grid: &UniformGrid) -> Result<Vec<f64>> {
    let source: Vec<f64> = grid
        .points()
        .iter()
        .zip(rho)
        .map(|(&x, &p)| 2.0 * p.sqrt() * phase_d_big_r(m, big_r, x))
        .collect();
    solve_gamma_with_source(m, big_r, rho, grid, &source)
}

/// [`solve_gamma`] with an explicit right-hand side (before boundary rows).
pub fn solve_gamma_with_source(
    m: &CondensateModel,
    big_r: f64,
    rho: &[f64],
    grid: &UniformGrid,
    source: &[f64],
) -> Result<Vec<f64>> {
    check_radial_grid(grid)?;
    let n = grid.len();
    if rho.len() != n || source.len() != n {
        return Err(Error::InvalidInput("profile length does not match the radial grid".into()));
    }
    let lap = radial_laplacian(grid);
    let core = m.winding > 0;
    let mut op = BandMatrix::zeros(n, 1, 1);
    let mut rhs = source.to_vec();
    for i in 0..n {
        if i == n - 1 || (i == 0 && core) {
            op.set(i, i, 1.0);
            rhs[i] = 0.0;
            continue;
        }
        let x = grid.point(i);
        let phi = phase_ansatz(m, big_r, x);
        let c = 0.25 * phase_d_r(m, big_r, x).powi(2)
            + centrifugal(m, x)
            + m.potential_drho(rho[i], phi)
            + 4.0 * rho[i] * m.response_curvature(rho[i], phi);
        let (lo, di, up) = lap[i];
        op.set(i, i, di - c);
        op.set(i, i + 1, up);
        if i > 0 {
            op.set(i, i - 1, lo);
        }
    }
    let lu = op.factorize().map_err(|e| match e {
        Error::LinearSolveFailure { row } => Error::SingularOperator { row },
        other => other,
    })?;
    let u = lu.solve(&rhs);
    Ok(u.iter().zip(rho).map(|(u, p)| u * p.sqrt()).collect())
}

/// Density and response profiles at one value of `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfiles {
    pub r_grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub gamma_resp: Vec<f64>,
    pub big_r: f64,
}

impl DensityProfiles {
    pub fn solve(m: &CondensateModel, big_r: f64, grid: &UniformGrid, tol: f64) -> Result<Self> {
        let rho = solve_rho(m, big_r, grid, tol)?.rho;
        let gamma_resp = solve_gamma(m, big_r, &rho, grid)?;
        Ok(Self { r_grid: grid.points(), rho, gamma_resp, big_r })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &["r", "rho", "gamma"], &[&self.r_grid, &self.rho, &self.gamma_resp])
    }

    fn spacing(&self) -> f64 {
        self.r_grid[1] - self.r_grid[0]
    }
}

/// `K(R) = −2π ∫ γ_R ∂_Rφ_R r dr`.
pub fn condensate_k(m: &CondensateModel, big_r: f64, p: &DensityProfiles) -> f64 {
    let values: Vec<f64> = p
        .r_grid
        .iter()
        .zip(&p.gamma_resp)
        .map(|(&r, &g)| g * phase_d_big_r(m, big_r, r) * r)
        .collect();
    -2.0 * PI * trapezoid_uniform(&values, p.spacing())
}

/// `U(R) = 2π ∫ [(∂_r√ρ)² + ¼ρ(∂_rφ)² + n²ρ/r² + V(ρ,ρ,φ) − V(ρ_F,ρ_F,π)] r dr`
/// (without the subtraction of the `R = 0` value). The gradient term is
/// evaluated on half nodes, consistent with the density discretization.
pub fn condensate_u(m: &CondensateModel, big_r: f64, p: &DensityProfiles) -> f64 {
    let h = p.spacing();
    let vf = m.false_vacuum_energy();
    let local: Vec<f64> = p
        .r_grid
        .iter()
        .zip(&p.rho)
        .map(|(&r, &rho)| {
            let phi = phase_ansatz(m, big_r, r);
            (0.25 * rho * phase_d_r(m, big_r, r).powi(2) + centrifugal(m, r) * rho + m.potential(rho, phi) - vf)
                * r
        })
        .collect();
    let gradient: f64 = p
        .rho
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let df = (w[1].sqrt() - w[0].sqrt()) / h;
            df * df * (p.r_grid[i] + 0.5 * h) * h
        })
        .sum();
    2.0 * PI * (trapezoid_uniform(&local, h) + gradient)
}

/// A condensate model with a fixed radial grid, evaluated as an [`EffectiveModel`].
/// `U` is measured from its value at `R = 0`, so that with a vortex the
/// (logarithmically divergent) vortex energy cancels on the common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensateReduction {
    pub model: CondensateModel,
    pub radial: UniformGrid,
    pub newton_tol: f64,
    u_offset: f64,
}

/// Radial margin beyond the largest `R`, in units of σ.
const WALL_MARGIN: f64 = 15.0;

impl CondensateReduction {
    pub fn new(model: CondensateModel, spacing: f64, r_max: f64, newton_tol: f64) -> Result<Self> {
        if !(spacing > 0.0 && r_max > WALL_MARGIN * model.sigma) {
            return Err(Error::InvalidInput(format!(
                "radial grid (spacing {spacing}, r_max {r_max}) must extend beyond {} sigma",
                WALL_MARGIN
            )));
        }
        let n = (r_max / spacing).round() as usize + 1;
        let radial = UniformGrid::new(0.0, spacing * (n - 1) as f64, n)?;
        let mut red = Self { model, radial, newton_tol, u_offset: 0.0 };
        red.u_offset = condensate_u(&model, 0.0, &red.profiles(0.0)?);
        Ok(red)
    }

    /// Largest `|R|` the radial grid supports.
    pub fn r_limit(&self) -> f64 {
        self.radial.max - WALL_MARGIN * self.model.sigma
    }

    pub fn profiles(&self, big_r: f64) -> Result<DensityProfiles> {
        let big_r = big_r.abs();
        if big_r > self.r_limit() {
            return Err(Error::InvalidInput(format!(
                "R = {big_r} exceeds the radial grid limit {}",
                self.r_limit()
            )));
        }
        DensityProfiles::solve(&self.model, big_r, &self.radial, self.newton_tol)
    }

    /// Energy of the `R = 0` configuration relative to the homogeneous false
    /// vacuum (the vortex energy with winding, zero without).
    pub fn u_offset(&self) -> f64 {
        self.u_offset
    }

    /// Largest `|γ_R| c₀/ρ_F` on the grid, with `c₀ = √(g₀ρ_F)` the sound
    /// speed: the size of the first-order correction for `R′ ~ c₀`.
    pub fn expansion_parameter(&self, p: &DensityProfiles) -> f64 {
        let rf = self.model.rho_false();
        let c0 = (self.model.g0 * rf).sqrt();
        p.gamma_resp.iter().fold(0.0f64, |a, g| a.max(g.abs())) * c0 / rf
    }
}

impl EffectiveModel for CondensateReduction {
    fn mass_and_potential(&self, big_r: f64, _tol: f64) -> Result<(f64, f64)> {
        let p = self.profiles(big_r)?;
        let r = big_r.abs();
        Ok((condensate_k(&self.model, r, &p), condensate_u(&self.model, r, &p) - self.u_offset))
    }

    fn is_even(&self) -> bool {
        true
    }

    fn dim(&self) -> u32 {
        2
    }

    fn length_scale(&self) -> f64 {
        self.model.sigma
    }
}

/// Tabulates the condensate reduction into a [`ReducedSystem`]; the domain
/// follows `domain` but is capped by the radial grid.
pub fn condensate_reduced_system(red: &CondensateReduction, domain: &DomainRule, tol: f64) -> Result<ReducedSystem> {
    let barrier = find_barrier(red, tol)?;
    let l = domain.half_width(red, &barrier, tol)?;
    if l > red.r_limit() {
        return Err(Error::InvalidInput(format!(
            "evolution domain half-width {l} exceeds the radial grid limit {}; increase r_max",
            red.r_limit()
        )));
    }
    ReducedSystem::tabulate(red, UniformGrid::symmetric(l, domain.spacing)?, tol)
}

/// Reduced Euclidean action of the condensate bounce at the given σ.
pub fn condensate_reduced_action(red: &CondensateReduction, tol: f64) -> Result<f64> {
    let barrier = find_barrier(red, tol)?;
    zero_energy_action(|r| red.mass(r, tol), |r| red.potential(r, tol), barrier.turning_point, tol.max(1e-8))
}

/// Field-level bounce check without vortex: the phase field with the density
/// relaxed locally to `ρ*(φ)`. Eliminating the density fluctuation gives the
/// Euclidean kinetic coefficient `1/(2W)` with `W = g₀ − λ/ρ_F`, and the
/// gradient coefficient `ρ_F/2`; rescaling time by `s = 1/√(Wρ_F)` makes the
/// problem O(3)-symmetric with action `s·4π∫[¼ρ_F x′² + V_eff(x) − V_eff(0)] ρ² dρ`,
/// where `x = π − φ`.
pub fn field_bounce_check(m: &CondensateModel, tol: f64) -> Result<BounceProfile> {
    let rf = m.rho_false();
    let w = m.response_curvature(rf, PI);
    let kappa = 0.5 * rf;
    let s = 1.0 / (w * rf).sqrt();
    let veff = |x: f64| {
        let phi = PI - x;
        m.potential(m.relaxed_density(phi), phi)
    };
    let v0 = veff(0.0);
    // The relaxed density makes ∂_ρV vanish, so dV_eff/dx = −∂_φV at ρ*.
    let dveff = |x: f64| {
        let phi = PI - x;
        let rho = m.relaxed_density(phi);
        let (s, c) = phi.sin_cos();
        -(2.0 * m.lam * rho * s + 4.0 * m.lam * m.eta_c * rho * rho * s * c)
    };
    let potential = EffectivePhase { value: &|x| veff(x) - v0, deriv: &dveff, kappa };
    let raw = crate::instanton::solve_bounce_field(&potential, 2, tol)?;
    Ok(BounceProfile {
        s_e: raw.s_e * s * kappa,
        s_e_virial: raw.s_e_virial * s * kappa,
        ..raw
    })
}

/// `V_eff/κ` as a scalar field potential in the variable `x = π − φ`, so that
/// the bounce equation takes the canonical form `x″ + (2/ρ)x′ = (V_eff/κ)′`.
struct EffectivePhase<'a> {
    value: &'a dyn Fn(f64) -> f64,
    deriv: &'a dyn Fn(f64) -> f64,
    kappa: f64,
}

impl crate::model::FieldPotential for EffectivePhase<'_> {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x) / self.kappa
    }

    fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x) / self.kappa
    }

    fn false_vacuum(&self) -> f64 {
        0.0
    }

    fn true_vacuum(&self) -> f64 {
        PI
    }
}
