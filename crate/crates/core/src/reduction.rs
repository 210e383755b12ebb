//! Reduction of a field theory to one collective coordinate: effective mass
//! `K(R)`, effective potential `U(R)`, their tabulation and barrier data.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::UniformGrid;
use crate::model::{sphere_area, Ansatz};
use crate::optimize::{bisect, golden_section};
use crate::output::{read_csv, write_csv};
use crate::quadrature::integrate;
use crate::spline::CubicSpline;
use crate::{Error, Result};

/// A system reduced to `K(R)` and `U(R)`, evaluated point by point.
pub trait EffectiveModel: Sync {
    /// `(K(R), U(R))` to relative accuracy `tol`.
    fn mass_and_potential(&self, big_r: f64, tol: f64) -> Result<(f64, f64)>;

    fn potential(&self, big_r: f64, tol: f64) -> Result<f64> {
        Ok(self.mass_and_potential(big_r, tol)?.1)
    }

    fn mass(&self, big_r: f64, tol: f64) -> Result<f64> {
        Ok(self.mass_and_potential(big_r, tol)?.0)
    }

    /// Whether `K` and `U` are even in `R`.
    fn is_even(&self) -> bool;

    fn dim(&self) -> u32;

    /// Typical length over which `U` varies near the origin; sets scan steps.
    fn length_scale(&self) -> f64;
}

/// Absolute floor on quadrature error relative to the requested tolerance, so
/// that integrals vanishing at `R = 0` terminate.
const ABS_TOL_FACTOR: f64 = 1e-6;

/// `K(R) = A_{d−1} ∫ (∂_R φ_R)² r^{d−1} dr`.
pub fn compute_k(a: &Ansatz, big_r: f64, tol: f64) -> Result<f64> {
    radial_integral(a, big_r, tol, |r| a.d_big_r(big_r, r).powi(2))
}

/// `U(R) = A_{d−1} ∫ [½(∂_r φ_R)² + V(φ_R)] r^{d−1} dr` with `V(φ_F) = 0`.
pub fn compute_u(a: &Ansatz, big_r: f64, tol: f64) -> Result<f64> {
    radial_integral(a, big_r, tol, |r| {
        0.5 * a.d_r(big_r, r).powi(2) + a.potential.value(a.value(big_r, r))
    })
}

fn radial_integral<F: Fn(f64) -> f64>(a: &Ansatz, big_r: f64, tol: f64, f: F) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let power = a.dim as i32 - 1;
    let integrand = |r: f64| f(r) * r.powi(power);
    let cut = a.tail_cutoff(big_r);
    let wall = big_r.abs().min(cut);
    let abs_tol = tol * ABS_TOL_FACTOR;
    let inner = if wall > 0.0 {
        integrate(integrand, 0.0, wall, tol, abs_tol)?
    } else {
        0.0
    };
    let outer = integrate(integrand, wall, cut, tol, abs_tol)?;
    Ok(sphere_area(a.dim - 1) * (inner + outer))
}

/// The relativistic scalar theory restricted to an [`Ansatz`] path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzModel {
    pub ansatz: Ansatz,
}

impl AnsatzModel {
    pub fn new(ansatz: Ansatz) -> Self {
        Self { ansatz }
    }

    /// Large-`|R|` coefficient `A_{d−1}(V_F − V_T)/d` of `−U(R)/|R|^d`.
    pub fn volume_coefficient(&self) -> f64 {
        let d = self.ansatz.dim;
        sphere_area(d - 1) * self.ansatz.potential.vacuum_energy_gap() / f64::from(d)
    }
}

impl EffectiveModel for AnsatzModel {
    fn mass_and_potential(&self, big_r: f64, tol: f64) -> Result<(f64, f64)> {
        Ok((compute_k(&self.ansatz, big_r, tol)?, compute_u(&self.ansatz, big_r, tol)?))
    }

    fn potential(&self, big_r: f64, tol: f64) -> Result<f64> {
        compute_u(&self.ansatz, big_r, tol)
    }

    fn mass(&self, big_r: f64, tol: f64) -> Result<f64> {
        compute_k(&self.ansatz, big_r, tol)
    }

    fn is_even(&self) -> bool {
        self.ansatz.variant.is_even()
    }

    fn dim(&self) -> u32 {
        self.ansatz.dim
    }

    fn length_scale(&self) -> f64 {
        self.ansatz.sigma
    }
}

/// Location and height of the barrier, and the far turning point `U(R_*) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierData {
    pub r_umax: f64,
    pub u_max: f64,
    pub turning_point: f64,
}

/// Largest `R` explored when searching for the barrier and the turning point,
/// in units of the model's length scale.
const SCAN_LIMIT: f64 = 400.0;

/// Finds the first interior maximum of `U` on `R > 0` and the zero beyond it.
pub fn find_barrier<M: EffectiveModel + ?Sized>(model: &M, tol: f64) -> Result<BarrierData> {
    let step = 0.05 * model.length_scale().min(1.0);
    let limit = SCAN_LIMIT * model.length_scale();
    let u = |r: f64| model.potential(r, tol);
    let mut prev = (step, u(step)?);
    let mut prev2 = (0.0, u(0.0)?);
    if prev.1 <= prev2.1 {
        return Err(Error::BarrierNotFound);
    }
    loop {
        let r = prev.0 + step;
        if r > limit {
            return Err(Error::BarrierNotFound);
        }
        let cur = (r, u(r)?);
        if cur.1 < prev.1 {
            break;
        }
        prev2 = prev;
        prev = cur;
    }
    let (r_umax, neg) = golden_section(|r| Ok(-u(r)?), prev2.0, prev.0 + step, 1e-10 * limit)?;
    let u_max = -neg;
    if !(u_max > 0.0) {
        return Err(Error::BarrierNotFound);
    }
    // March outward until U changes sign, with growing steps.
    let mut lo = r_umax;
    let mut h = step;
    let hi = loop {
        let r = lo + h;
        if r > limit {
            return Err(Error::NoTurningPoint);
        }
        if u(r)? < 0.0 {
            break r;
        }
        lo = r;
        h *= 1.5;
    };
    let mut failure = None;
    let turning_point = bisect(
        |r| match u(r) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-13 * hi,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(BarrierData {
        r_umax,
        u_max,
        turning_point,
    })
}

/// Rules for choosing the symmetric domain `[−L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainRule {
    /// Grid spacing `δx`.
    pub spacing: f64,
    /// `L` satisfies `U(L) < −depth_factor · U_max`.
    pub depth_factor: f64,
    /// `L ≥ turning_multiple · R_*`.
    pub turning_multiple: f64,
    /// Zero-energy de Broglie wavelength at `L` at most this many grid cells,
    /// so that outgoing waves reach the grid scale and are absorbed by the
    /// hyperdiffusive term before they can reflect from the boundary.
    pub edge_cells: f64,
    /// Explicit half-width; overrides the rules above when set.
    pub half_width: Option<f64>,
}

impl Default for DomainRule {
    fn default() -> Self {
        Self {
            spacing: 0.01,
            depth_factor: 20.0,
            turning_multiple: 4.0,
            edge_cells: 2.0,
            half_width: None,
        }
    }
}

impl DomainRule {
    /// Half-width `L` for `model` with the given barrier.
    pub fn half_width<M: EffectiveModel + ?Sized>(
        &self,
        model: &M,
        barrier: &BarrierData,
        tol: f64,
    ) -> Result<f64> {
        if let Some(l) = self.half_width {
            return Ok(l);
        }
        let limit = SCAN_LIMIT * model.length_scale() + barrier.turning_point;
        let mut l = barrier.turning_point * self.turning_multiple;
        let grow = 1.02;
        loop {
            if l > limit {
                return Err(Error::InvalidInput(format!(
                    "domain rule not satisfiable below R = {limit}"
                )));
            }
            let (k, u) = model.mass_and_potential(l, tol)?;
            let deep = u < -self.depth_factor * barrier.u_max;
            let wavelength = 2.0 * PI / (2.0 * k * u.abs()).sqrt();
            if deep && wavelength <= self.edge_cells * self.spacing {
                return Ok(l);
            }
            l *= grow;
        }
    }
}

/// `K(R)` and `U(R)` tabulated on a uniform grid, with harmonic and barrier data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub grid: UniformGrid,
    pub k_table: Vec<f64>,
    pub u_table: Vec<f64>,
    /// `K(0)`.
    pub k0: f64,
    /// `U″(0)`.
    pub upp0: f64,
    pub r_umax: f64,
    pub u_max: f64,
    /// `R_* > R_Umax` with `U(R_*) = 0`.
    pub turning_point: f64,
    pub dim: u32,
    pub even: bool,
    /// Region `|R| ≤ R_Umax` (even) or `R ≤ R_Umax` counts as the false vacuum.
    pub one_sided: bool,
}

/// Step used for the finite-difference `U″(0)`, relative to the model's length scale.
const CURVATURE_STEP: f64 = 1e-2;

impl ReducedSystem {
    /// Barrier search, domain choice and tabulation in one go.
    pub fn build<M: EffectiveModel + ?Sized>(
        model: &M,
        domain: &DomainRule,
        tol: f64,
    ) -> Result<Self> {
        let barrier = find_barrier(model, tol)?;
        let l = domain.half_width(model, &barrier, tol)?;
        let grid = UniformGrid::symmetric(l, domain.spacing)?;
        Self::tabulate_with_barrier(model, grid, barrier, tol)
    }

    /// Tabulates `model` on `grid`, locating the barrier first.
    pub fn tabulate<M: EffectiveModel + ?Sized>(
        model: &M,
        grid: UniformGrid,
        tol: f64,
    ) -> Result<Self> {
        let barrier = find_barrier(model, tol)?;
        Self::tabulate_with_barrier(model, grid, barrier, tol)
    }

    fn tabulate_with_barrier<M: EffectiveModel + ?Sized>(
        model: &M,
        grid: UniformGrid,
        barrier: BarrierData,
        tol: f64,
    ) -> Result<Self> {
        let points = grid.points();
        let even = model.is_even();
        // Even models on a symmetric grid are evaluated on the non-negative half
        // and mirrored, so that parity holds bitwise.
        let n = points.len();
        let mirrored = even && grid.min == -grid.max;
        let first = if mirrored { n / 2 } else { 0 };
        let half: Vec<(f64, f64)> = points[first..]
            .par_iter()
            .map(|&r| model.mass_and_potential(if even { r.abs() } else { r }, tol))
            .collect::<Result<_>>()?;
        let values: Vec<(f64, f64)> = (0..n)
            .map(|i| if i < first { half[n - 1 - i - first] } else { half[i - first] })
            .collect();
        let (k_table, u_table): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let (k0, upp0) = harmonic_data(model, tol)?;
        Ok(Self {
            grid,
            k_table,
            u_table,
            k0,
            upp0,
            r_umax: barrier.r_umax,
            u_max: barrier.u_max,
            turning_point: barrier.turning_point,
            dim: model.dim(),
            even: model.is_even(),
            one_sided: !model.is_even(),
        })
    }

    /// Assembles a system from explicit tables (test systems, rescaled potentials).
    #[allow(clippy::too_many_arguments)]
    pub fn from_tables(
        grid: UniformGrid,
        k_table: Vec<f64>,
        u_table: Vec<f64>,
        k0: f64,
        upp0: f64,
        barrier: BarrierData,
        dim: u32,
        even: bool,
    ) -> Result<Self> {
        if k_table.len() != grid.len() || u_table.len() != grid.len() {
            return Err(Error::InvalidInput("table length does not match grid".into()));
        }
        if k_table.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidInput("K must be positive".into()));
        }
        Ok(Self {
            grid,
            k_table,
            u_table,
            k0,
            upp0,
            r_umax: barrier.r_umax,
            u_max: barrier.u_max,
            turning_point: barrier.turning_point,
            dim,
            even,
            one_sided: !even,
        })
    }

    pub fn barrier(&self) -> BarrierData {
        BarrierData {
            r_umax: self.r_umax,
            u_max: self.u_max,
            turning_point: self.turning_point,
        }
    }

    /// Width `(K(0)U″(0))^{−1/4}` of the harmonic ground state.
    pub fn harmonic_width(&self) -> f64 {
        (self.k0 * self.upp0).powf(-0.25)
    }

    /// Harmonic frequency `√(U″(0)/K(0))`.
    pub fn harmonic_frequency(&self) -> f64 {
        (self.upp0 / self.k0).sqrt()
    }

    pub fn k_spline(&self) -> Result<CubicSpline> {
        CubicSpline::new(self.grid.points(), self.k_table.clone())
    }

    pub fn u_spline(&self) -> Result<CubicSpline> {
        CubicSpline::new(self.grid.points(), self.u_table.clone())
    }

    /// Second derivative at `R = 0` from a least-squares polynomial through
    /// the nine tabulated points nearest the origin. Even reductions depend on
    /// `|R|`, so their fit basis is `1, R², |R|³, R⁴`; otherwise `1, R, …, R⁴`.
    pub fn upp0_fit(&self) -> Result<f64> {
        let pts = self.grid.points();
        let centre = pts
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .expect("non-empty grid");
        if centre < 4 || centre + 4 >= pts.len() {
            return Err(Error::InvalidInput("grid too small for a nine-point fit".into()));
        }
        let basis = |x: f64| -> Vec<f64> {
            if self.even {
                vec![1.0, x * x, x.abs().powi(3), x.powi(4)]
            } else {
                vec![1.0, x, x * x, x.powi(3), x.powi(4)]
            }
        };
        let quadratic = if self.even { 1 } else { 2 };
        let size = basis(0.0).len();
        let mut m = vec![vec![0.0f64; size]; size];
        let mut v = vec![0.0f64; size];
        for i in centre - 4..=centre + 4 {
            let b = basis(pts[i]);
            for a in 0..size {
                v[a] += b[a] * self.u_table[i];
                for c in 0..size {
                    m[a][c] += b[a] * b[c];
                }
            }
        }
        let c = solve_dense(m, v).ok_or(Error::SingularOperator { row: 0 })?;
        Ok(2.0 * c[quadratic])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(
            path,
            &["R", "K", "U"],
            &[&self.grid.points(), &self.k_table, &self.u_table],
        )
    }

    /// Rebuilds a system from a previously written `R,K,U` table. `K(0)` is
    /// the tabulated value at the origin, `U″(0)` a nine-point polynomial fit,
    /// and the barrier is located on the cubic spline of `U`.
    pub fn from_csv(path: &Path, dim: u32, even: bool) -> Result<Self> {
        let (headers, columns) = read_csv(path)?;
        if headers != ["R", "K", "U"] {
            return Err(Error::InvalidInput(format!(
                "{} does not have the columns R,K,U",
                path.display()
            )));
        }
        let r = &columns[0];
        let n = r.len();
        if n < 5 {
            return Err(Error::InvalidInput("reduced table has fewer than five rows".into()));
        }
        let grid = UniformGrid::new(r[0], r[n - 1], n)?;
        let spacing = grid.spacing();
        if r.iter().enumerate().any(|(i, &x)| (x - grid.point(i)).abs() > 1e-9 * spacing.max(1.0)) {
            return Err(Error::InvalidInput("reduced table is not uniformly spaced".into()));
        }
        let origin = r
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .expect("non-empty table");
        let placeholder = BarrierData { r_umax: 0.0, u_max: 0.0, turning_point: 0.0 };
        let mut rs = Self::from_tables(
            grid,
            columns[1].clone(),
            columns[2].clone(),
            columns[1][origin],
            1.0,
            placeholder,
            dim,
            even,
        )?;
        rs.upp0 = rs.upp0_fit()?;
        let us = rs.u_spline()?;
        let pts = rs.grid.points();
        let peak = (origin..n)
            .max_by(|&a, &b| rs.u_table[a].total_cmp(&rs.u_table[b]))
            .expect("non-empty range");
        if peak == origin || rs.u_table[peak] <= 0.0 {
            return Err(Error::BarrierNotFound);
        }
        let lo = pts[peak.saturating_sub(1).max(origin)];
        let hi = pts[(peak + 1).min(n - 1)];
        let (r_umax, neg) = golden_section(|x| Ok(-us.eval(x)), lo, hi, 1e-12 * hi.abs().max(1.0))?;
        let beyond = (peak..n).find(|&i| rs.u_table[i] < 0.0).ok_or(Error::NoTurningPoint)?;
        let turning_point = bisect(|x| us.eval(x), r_umax, pts[beyond], 1e-13 * pts[beyond])?;
        rs.r_umax = r_umax;
        rs.u_max = -neg;
        rs.turning_point = turning_point;
        Ok(rs)
    }
}

/// Gaussian elimination with partial pivoting for a small dense system.
fn solve_dense(mut m: Vec<Vec<f64>>, mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.len();
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
        m.swap(k, p);
        v.swap(k, p);
        if m[k][k] == 0.0 {
            return None;
        }
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            v[i] -= f * v[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (v[i] - (i + 1..n).map(|j| m[i][j] * x[j]).sum::<f64>()) / m[i][i];
    }
    Some(x)
}

/// `K(0)` and `U″(0)`. Odd-capable models use the fourth-order centred
/// second difference; even models use samples at `h, 2h, 3h` fitted to
/// `½U″R² + c|R|³ + dR⁴`, which removes the bias of the `|R|³` term.
pub fn harmonic_data<M: EffectiveModel + ?Sized>(model: &M, tol: f64) -> Result<(f64, f64)> {
    let h = CURVATURE_STEP * model.length_scale();
    let (k0, u0) = model.mass_and_potential(0.0, tol)?;
    let up1 = model.potential(h, tol)? - u0;
    let up2 = model.potential(2.0 * h, tol)? - u0;
    let upp0 = if model.is_even() {
        let up3 = model.potential(3.0 * h, tol)? - u0;
        (6.0 * up1 - 1.5 * up2 + 2.0 / 9.0 * up3) / (h * h)
    } else {
        let um1 = model.potential(-h, tol)? - u0;
        let um2 = model.potential(-2.0 * h, tol)? - u0;
        (-up2 + 16.0 * up1 + 16.0 * um1 - um2) / (12.0 * h * h)
    };
    if !(k0 > 0.0) {
        return Err(Error::InvalidInput(format!("K(0) = {k0} is not positive")));
    }
    if !(upp0 > 0.0) {
        return Err(Error::BarrierNotFound);
    }
    Ok((k0, upp0))
}

/// Convenience constructor for the relativistic reduction.
pub fn reduce_ansatz(ansatz: Ansatz, domain: &DomainRule, tol: f64) -> Result<ReducedSystem> {
    ReducedSystem::build(&AnsatzModel::new(ansatz), domain, tol)
}
