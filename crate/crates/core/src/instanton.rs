//! Euclidean bounces: the O(d+1)-symmetric field-theoretic instanton, the
//! reduced bounce of the collective coordinate, σ optimization and the
//! comparison statistic between real-time and instanton decay rates.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{sphere_area, Ansatz, FieldPotential};
use crate::ode::{integrate as ode_integrate, Event, Tolerances};
use crate::optimize::{bisect, golden_section};
use crate::output::write_csv;
use crate::quadrature::{integrate, simpson};
use crate::reduction::{find_barrier, AnsatzModel, EffectiveModel, ReducedSystem};
use crate::spline::CubicSpline;
use crate::{Error, Result};

/// Radial profile of the field-theoretic bounce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceProfile {
    pub rho_grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `A_d ∫ [½φ′² + V] ρ^d dρ`.
    pub s_e: f64,
    /// `A_d/(d+1) ∫ φ′² ρ^d dρ`, equal to `s_e` for an exact bounce.
    pub s_e_virial: f64,
    pub phi0: f64,
    pub dim: u32,
}

impl BounceProfile {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &["rho", "phi"], &[&self.rho_grid, &self.phi])
    }
}

/// Relative resolution of the bisection on `φ(0)`.
const SHOOT_RESOLUTION: f64 = 1e-13;
/// Number of samples of the stored bounce profile.
const PROFILE_SAMPLES: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

/// Radius of the O(d+1) bubble in the thin-wall approximation,
/// `d·S₁/ε` with `S₁ = ∫√(2V) dφ` across the barrier.
fn thin_wall_radius<P: FieldPotential>(p: &P, d: u32) -> f64 {
    let (f, t) = (p.false_vacuum(), p.true_vacuum());
    let tension = simpson(|x| (2.0 * p.value(x).max(0.0)).sqrt(), f, t, 2000);
    let eps = -p.value(t);
    f64::from(d) * tension / eps.max(f64::MIN_POSITIVE)
}

/// Overshoot/undershoot shooting for `φ″ + (d/ρ)φ′ = V′(φ)`, `φ′(0) = 0`, `φ(∞) = φ_F`.
pub fn solve_bounce_field<P: FieldPotential>(p: &P, d: u32, tol: f64) -> Result<BounceProfile> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidInput(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let (f, t) = (p.false_vacuum(), p.true_vacuum());
    let gap = t - f;
    let df = f64::from(d);
    // Initial scale of the ρ axis: curvature of V at the false vacuum.
    let mass2 = (p.deriv(f + 1e-4 * gap) - p.deriv(f - 1e-4 * gap)) / (2e-4 * gap);
    if !(mass2 > 0.0) || !(p.value(t) < 0.0) {
        return Err(Error::InvalidInput("potential has no metastable false vacuum".into()));
    }
    let rho0 = 1e-6 / mass2.sqrt();
    let mut rho_max = 10.0 * thin_wall_radius(p, d).max(10.0 / mass2.sqrt());
    let ode_tol = Tolerances {
        rtol: tol.min(1e-9),
        atol: tol.min(1e-9) * 1e-2 * gap,
        max_steps: 1_000_000,
    };
    let rhs = |rho: f64, y: &[f64; 4]| {
        let action = 0.5 * y[1] * y[1] + p.value(y[0]);
        [
            y[1],
            p.deriv(y[0]) - df / rho * y[1],
            action * rho.powi(d as i32),
            y[1] * y[1] * rho.powi(d as i32),
        ]
    };
    let shoot = |phi0: f64, rho_max: f64| -> Result<(Shot, crate::ode::Trajectory<4>)> {
        let a = p.deriv(phi0) / (df + 1.0);
        let y0 = [phi0 + 0.5 * a * rho0 * rho0, a * rho0, 0.0, 0.0];
        let events = [
            Event::new(-1, move |_, y: &[f64; 4]| y[0] - f),
            Event::new(1, |_, y: &[f64; 4]| y[1]),
        ];
        let traj = ode_integrate(rhs, rho0, y0, rho_max, ode_tol, &events)?;
        // A trial that never leaves the true-vacuum hill within ρ_max started
        // too close to φ_T; it behaves as an overshoot.
        let shot = match traj.event {
            Some(1) => Shot::Undershoot,
            _ => Shot::Overshoot,
        };
        Ok((shot, traj))
    };
    // Lower bracket: the point on the true-vacuum side where V returns to zero.
    let lo0 = bisect(|x| p.value(x), 0.5 * (f + t), t, 1e-15 * gap)
        .or_else(|_| bisect(|x| p.value(x), f + 1e-3 * gap, t, 1e-15 * gap))?;
    let mut lo = lo0;
    let mut hi = t - SHOOT_RESOLUTION * gap;
    if shoot(lo, rho_max)?.0 != Shot::Undershoot {
        return Err(Error::BracketingFailure(format!("phi(0) = {lo} does not undershoot")));
    }
    if shoot(hi, rho_max)?.0 != Shot::Overshoot {
        return Err(Error::BracketingFailure(format!(
            "phi(0) = {hi} next to the true vacuum does not overshoot"
        )));
    }
    while hi - lo > SHOOT_RESOLUTION * gap {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match shoot(mid, rho_max)?.0 {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
        }
    }
    if t - lo <= 10.0 * SHOOT_RESOLUTION * gap {
        return Err(Error::BracketingFailure(
            "bounce starts indistinguishably close to the true vacuum; \
             the bubble radius diverges (near-degenerate vacua)"
                .into(),
        ));
    }
    // Final profile: the undershooting side, run until it turns around.
    let (_, mut traj) = shoot(lo, rho_max)?;
    while traj.event.is_none() {
        rho_max *= 2.0;
        traj = shoot(lo, rho_max)?.1;
    }
    let (rho_end, y_end) = traj.last();
    let settle = (y_end[0] - f).abs();
    if settle > 1e-6 * gap.max(1.0) {
        return Err(Error::ToleranceUnreachable(settle / gap));
    }
    let area = sphere_area(d);
    let rho_grid: Vec<f64> = (0..PROFILE_SAMPLES)
        .map(|i| rho_end * i as f64 / (PROFILE_SAMPLES - 1) as f64)
        .collect();
    // Re-integrate node to node so that every sample is an integrator point
    // rather than a dense-output interpolant.
    let mut samples: Vec<[f64; 4]> = Vec::with_capacity(PROFILE_SAMPLES);
    let mut state = (rho0, traj.y[0]);
    for &r in &rho_grid {
        if r < rho0 {
            samples.push([lo, 0.0, 0.0, 0.0]);
            continue;
        }
        if r > state.0 {
            state = ode_integrate(rhs, state.0, state.1, r, ode_tol, &[])?.last();
        }
        samples.push(state.1);
    }
    Ok(BounceProfile {
        phi: samples.iter().map(|s| s[0]).collect(),
        dphi: samples.iter().map(|s| s[1]).collect(),
        rho_grid,
        s_e: area * y_end[2],
        s_e_virial: area * y_end[3] / (df + 1.0),
        phi0: lo,
        dim: d,
    })
}

/// `A_d ∫ [½φ′² + V(φ)] ρ^d dρ` by composite Simpson over the stored profile.
pub fn euclidean_action_field<P: FieldPotential>(b: &BounceProfile, p: &P, d: u32) -> f64 {
    let n = b.rho_grid.len();
    if n < 3 {
        return 0.0;
    }
    let h = b.rho_grid[1] - b.rho_grid[0];
    let integrand = |i: usize| {
        (0.5 * b.dphi[i] * b.dphi[i] + p.value(b.phi[i])) * b.rho_grid[i].powi(d as i32)
    };
    // Simpson on an even number of intervals; a trailing odd interval by trapezoid.
    let m = if (n - 1).is_multiple_of(2) { n } else { n - 1 };
    let mut s = integrand(0) + integrand(m - 1);
    for i in 1..m - 1 {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i);
    }
    let mut total = s * h / 3.0;
    if m < n {
        total += 0.5 * h * (integrand(n - 2) + integrand(n - 1));
    }
    sphere_area(d) * total
}

/// Which reduced equation of motion the shooting cross-check integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedEom {
    /// `K R″ + ½K′R′² = U′`, the Euler–Lagrange equation of `∫[½KR′² + U]dτ`.
    Variational,
    /// `K R″ + K′R′² = U′`, i.e. `d/dτ(K R′) = U′` taken literally.
    Literal,
}

impl ReducedEom {
    fn friction(self) -> f64 {
        match self {
            ReducedEom::Variational => 0.5,
            ReducedEom::Literal => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedBounce {
    /// `R_* > R_Umax` with `U(R_*) = 0`.
    pub turning_point: f64,
    /// `2 ∫₀^{R_*} √(2KU) dR`.
    pub s_e_reduced: f64,
    pub sigma: Option<f64>,
}

/// Zero-energy action `2∫₀^{R_*}√(2K U) dR`, with `R = R_* − s²` removing the
/// square-root endpoint behaviour.
pub fn zero_energy_action<K, U>(k: K, u: U, turning_point: f64, tol: f64) -> Result<f64>
where
    K: Fn(f64) -> Result<f64>,
    U: Fn(f64) -> Result<f64>,
{
    let failure = std::cell::RefCell::new(None);
    let integrand = |s: f64| {
        let r = turning_point - s * s;
        match (k(r), u(r)) {
            (Ok(kv), Ok(uv)) => (2.0 * kv * uv.max(0.0)).sqrt() * 2.0 * s,
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let value = integrate(integrand, 0.0, turning_point.sqrt(), tol, 0.0)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(2.0 * value)
}

/// Reduced bounce from the tabulated `K`, `U` (cubic-spline interpolated).
pub fn solve_bounce_reduced(rs: &ReducedSystem, tol: f64) -> Result<ReducedBounce> {
    let ks = rs.k_spline()?;
    let us = rs.u_spline()?;
    let turning_point = spline_turning_point(rs, &us)?;
    let s = zero_energy_action(|r| Ok(ks.eval(r)), |r| Ok(us.eval(r)), turning_point, tol)?;
    Ok(ReducedBounce {
        turning_point,
        s_e_reduced: s,
        sigma: None,
    })
}

fn spline_turning_point(rs: &ReducedSystem, us: &CubicSpline) -> Result<f64> {
    let pts = rs.grid.points();
    let start = rs.r_umax;
    let hi = pts
        .iter()
        .copied()
        .find(|&r| r > start && us.eval(r) < 0.0)
        .ok_or(Error::NoTurningPoint)?;
    bisect(|r| us.eval(r), start, hi, 1e-14 * hi)
}

/// Reduced bounce evaluated directly from the model, without tabulation.
pub fn solve_bounce_model<M: EffectiveModel + ?Sized>(model: &M, tol: f64) -> Result<ReducedBounce> {
    let barrier = find_barrier(model, tol)?;
    let s = zero_energy_action(
        |r| model.mass(r, tol),
        |r| model.potential(r, tol),
        barrier.turning_point,
        tol.max(1e-9),
    )?;
    Ok(ReducedBounce {
        turning_point: barrier.turning_point,
        s_e_reduced: s,
        sigma: None,
    })
}

/// Result of the τ-ODE shooting cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingBounce {
    pub eom: ReducedEom,
    /// Release point `R(0)` with `R′(0) = 0`.
    pub release_point: f64,
    /// `2 ∫ [½KR′² + U] dτ` along the trajectory.
    pub s_e: f64,
    /// `max |½KR′² − U|` along the trajectory (zero for the variational EOM).
    pub max_energy_drift: f64,
}

/// Integrates the reduced Euclidean equation of motion from rest at `R₀`,
/// bisecting `R₀` between undershooting (turns back before `R = 0`) and
/// overshooting (crosses `R = 0`) trajectories.
pub fn shoot_bounce_reduced(rs: &ReducedSystem, eom: ReducedEom, tol: f64) -> Result<ShootingBounce> {
    let ks = rs.k_spline()?;
    let us = rs.u_spline()?;
    let c = eom.friction();
    let rhs = |_: f64, y: &[f64; 3]| {
        let (r, p) = (y[0], y[1]);
        let k = ks.eval(r);
        let u = us.eval(r);
        [p, (us.derivative(r) - c * ks.derivative(r) * p * p) / k, 0.5 * k * p * p + u]
    };
    let omega = rs.harmonic_frequency();
    let tau_max = 60.0 / omega;
    let ode_tol = Tolerances {
        rtol: tol.min(1e-10),
        atol: tol.min(1e-10) * 1e-3 * rs.turning_point,
        max_steps: 1_000_000,
    };
    let shoot = |r0: f64| -> Result<(Shot, crate::ode::Trajectory<3>)> {
        let events = [
            Event::new(-1, |_, y: &[f64; 3]| y[0]),
            Event::new(1, |_, y: &[f64; 3]| y[1]),
        ];
        let traj = ode_integrate(rhs, 0.0, [r0, 0.0, 0.0], tau_max, ode_tol, &events)?;
        let shot = match traj.event {
            Some(0) => Shot::Overshoot,
            Some(_) => Shot::Undershoot,
            None => {
                if traj.last().1[0] > 0.0 {
                    Shot::Undershoot
                } else {
                    Shot::Overshoot
                }
            }
        };
        Ok((shot, traj))
    };
    let r_end = rs.grid.max - rs.grid.spacing();
    let mut lo = rs.r_umax * (1.0 + 1e-6);
    if shoot(lo)?.0 != Shot::Undershoot {
        return Err(Error::BracketingFailure(format!(
            "release from the barrier top R = {lo} does not undershoot"
        )));
    }
    // Find an overshooting release point by marching outward.
    let mut hi = rs.turning_point.max(lo);
    while shoot(hi)?.0 != Shot::Overshoot {
        lo = hi;
        hi = (hi * 1.1).min(r_end);
        if hi >= r_end {
            return Err(Error::BracketingFailure("no overshooting release point on the grid".into()));
        }
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match shoot(mid)?.0 {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
        }
    }
    let (_, traj) = shoot(lo)?;
    let max_energy_drift = traj
        .y
        .iter()
        .map(|y| (0.5 * ks.eval(y[0]) * y[1] * y[1] - us.eval(y[0])).abs())
        .fold(0.0, f64::max);
    Ok(ShootingBounce {
        eom,
        release_point: lo,
        s_e: 2.0 * traj.last().1[2],
        max_energy_drift,
    })
}

/// Golden-section minimization of the reduced action over the wall width σ.
/// Widths for which the reduction has no barrier or no turning point count as
/// infinite action.
pub fn optimize_sigma(template: &Ansatz, sigma_range: (f64, f64), tol: f64) -> Result<(f64, f64)> {
    let (a, b) = sigma_range;
    if !(a > 0.0 && b > a) {
        return Err(Error::InvalidInput(format!("invalid sigma range [{a}, {b}]")));
    }
    let action = |sigma: f64| -> Result<f64> {
        let model = AnsatzModel::new(template.with_sigma(sigma)?);
        match solve_bounce_model(&model, tol) {
            Ok(b) => Ok(b.s_e_reduced),
            Err(Error::NoTurningPoint | Error::BarrierNotFound) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let x_tol = 1e-4 * (b - a);
    let (sigma, s) = golden_section(action, a, b, x_tol)?;
    if !s.is_finite() || sigma - a < 2.0 * x_tol || b - sigma < 2.0 * x_tol {
        return Err(Error::NoInteriorMinimum { sigma });
    }
    Ok((sigma, s))
}

/// `−ln(Γ/U_max) − (S_E − ½ ln(S_E/2π))`: the decay exponent from the
/// real-time evolution relative to the instanton exponent with one zero mode.
pub fn comparison_statistic(gamma_plateau: f64, u_max: f64, s_e: f64) -> Result<f64> {
    if !(gamma_plateau > 0.0 && u_max > 0.0 && s_e > 0.0) {
        return Err(Error::InvalidInput(format!(
            "comparison statistic needs positive inputs, got Gamma = {gamma_plateau}, \
             U_max = {u_max}, S_E = {s_e}"
        )));
    }
    Ok(-(gamma_plateau / u_max).ln() - (s_e - 0.5 * (s_e / (2.0 * PI)).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScalarPotential;

    #[test]
    fn statistic_vanishes_on_instanton_rate() {
        let (u_max, s_e) = (3.7, 6.2);
        let gamma = u_max * (-s_e + 0.5 * (s_e / (2.0 * PI)).ln()).exp();
        assert!(comparison_statistic(gamma, u_max, s_e).unwrap().abs() < 1e-12);
        assert!(comparison_statistic(0.0, u_max, s_e).is_err());
    }

    #[test]
    fn false_vacuum_profile_has_zero_action() {
        let p = ScalarPotential::new(16.0, 1.0).unwrap();
        let n = 101;
        let b = BounceProfile {
            rho_grid: (0..n).map(|i| i as f64 * 0.1).collect(),
            phi: vec![p.phi_false; n],
            dphi: vec![0.0; n],
            s_e: 0.0,
            s_e_virial: 0.0,
            phi0: p.phi_false,
            dim: 2,
        };
        assert_eq!(euclidean_action_field(&b, &p, 2), 0.0);
    }

    #[test]
    fn thin_wall_radius_grows_toward_degeneracy() {
        let a = thin_wall_radius(&ScalarPotential::new(16.0, 1.0).unwrap(), 2);
        let b = thin_wall_radius(&ScalarPotential::new(16.0, 0.2).unwrap(), 2);
        assert!(b > 3.0 * a);
    }
}
