//! Scalar potentials and parametrized paths `φ_R(r)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single-field potential with a false and a true vacuum, shifted so that
/// `V(φ_F) = 0`. Used by the bounce solver.
pub trait FieldPotential {
    fn value(&self, phi: f64) -> f64;
    fn deriv(&self, phi: f64) -> f64;
    fn false_vacuum(&self) -> f64;
    fn true_vacuum(&self) -> f64;
}

/// Quartic potential `η [−φ²/2 − λφ³/3 + φ⁴/4] − V₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPotential {
    pub eta: f64,
    pub lambda: f64,
    pub v_offset: f64,
    pub phi_false: f64,
    pub phi_true: f64,
}

impl ScalarPotential {
    pub fn new(eta: f64, lambda: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let root = (lambda * lambda + 4.0).sqrt();
        let phi_false = (lambda - root) / 2.0;
        let phi_true = (lambda + root) / 2.0;
        let mut p = Self {
            eta,
            lambda,
            v_offset: 0.0,
            phi_false,
            phi_true,
        };
        p.v_offset = p.unshifted(phi_false);
        Ok(p)
    }

    fn unshifted(&self, phi: f64) -> f64 {
        let p2 = phi * phi;
        self.eta * (-0.5 * p2 - self.lambda * p2 * phi / 3.0 + 0.25 * p2 * p2)
    }

    /// `V(φ)`, evaluated as a polynomial in `δ = φ − φ_F` so that no
    /// cancellation against `V₀` occurs near the false vacuum.
    pub fn value(&self, phi: f64) -> f64 {
        let f = self.phi_false;
        let c2 = 0.5 * (-1.0 - 2.0 * self.lambda * f + 3.0 * f * f);
        let c3 = f - self.lambda / 3.0;
        let d = phi - f;
        self.eta * d * d * (c2 + d * (c3 + 0.25 * d))
    }

    /// `V′(φ) = η(−φ − λφ² + φ³)`.
    pub fn deriv(&self, phi: f64) -> f64 {
        self.eta * (-phi - self.lambda * phi * phi + phi * phi * phi)
    }

    pub fn second_deriv(&self, phi: f64) -> f64 {
        self.eta * (-1.0 - 2.0 * self.lambda * phi + 3.0 * phi * phi)
    }

    /// `φ_T − φ_F`.
    pub fn vacuum_separation(&self) -> f64 {
        self.phi_true - self.phi_false
    }

    /// `V_F − V_T > 0`.
    pub fn vacuum_energy_gap(&self) -> f64 {
        -self.value(self.phi_true)
    }
}

impl FieldPotential for ScalarPotential {
    fn value(&self, phi: f64) -> f64 {
        ScalarPotential::value(self, phi)
    }
    fn deriv(&self, phi: f64) -> f64 {
        ScalarPotential::deriv(self, phi)
    }
    fn false_vacuum(&self) -> f64 {
        self.phi_false
    }
    fn true_vacuum(&self) -> f64 {
        self.phi_true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzVariant {
    /// `|tanh((r+R)/σ) − tanh((r−R)/σ)|`, even in `R`.
    Symmetric,
    /// Same without the absolute value; reaches the true vacuum only as `R → +∞`.
    Asymmetric,
    /// Wall width `σ²/(|R|+σ)`, even in `R`.
    RDependentWidth,
}

impl AnsatzVariant {
    pub fn is_even(self) -> bool {
        !matches!(self, AnsatzVariant::Asymmetric)
    }

    pub fn name(self) -> &'static str {
        match self {
            AnsatzVariant::Symmetric => "symmetric",
            AnsatzVariant::Asymmetric => "asymmetric",
            AnsatzVariant::RDependentWidth => "r-dependent-width",
        }
    }
}

impl fmt::Display for AnsatzVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(AnsatzVariant::Symmetric),
            "asymmetric" => Ok(AnsatzVariant::Asymmetric),
            "r-dependent-width" | "rdependentwidth" | "r_dependent_width" | "rdw" => {
                Ok(AnsatzVariant::RDependentWidth)
            }
            other => Err(Error::InvalidInput(format!("unknown ansatz variant '{other}'"))),
        }
    }
}

#[inline]
pub(crate) fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// A parametrized path `φ_R(r)` for the quartic potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub variant: AnsatzVariant,
    pub sigma: f64,
    pub dim: u32,
    pub potential: ScalarPotential,
}

impl Ansatz {
    pub fn new(
        variant: AnsatzVariant,
        sigma: f64,
        dim: u32,
        potential: ScalarPotential,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        Ok(Self {
            variant,
            sigma,
            dim,
            potential,
        })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.variant, sigma, self.dim, self.potential)
    }

    /// Wall width at parameter `R`.
    pub fn wall_width(&self, big_r: f64) -> f64 {
        match self.variant {
            AnsatzVariant::RDependentWidth => self.sigma * self.sigma / (big_r.abs() + self.sigma),
            _ => self.sigma,
        }
    }

    /// Inverse wall width `a` and the wall position `s` entering `tanh(a(r ± s))`.
    fn wall(&self, big_r: f64) -> (f64, f64) {
        match self.variant {
            AnsatzVariant::Symmetric => (1.0 / self.sigma, big_r.abs()),
            AnsatzVariant::Asymmetric => (1.0 / self.sigma, big_r),
            AnsatzVariant::RDependentWidth => {
                let s = big_r.abs();
                ((s + self.sigma) / (self.sigma * self.sigma), s)
            }
        }
    }

    pub fn value(&self, big_r: f64, r: f64) -> f64 {
        let p = &self.potential;
        let (a, s) = self.wall(big_r);
        p.phi_false + 0.5 * p.vacuum_separation() * ((a * (r + s)).tanh() - (a * (r - s)).tanh())
    }

    /// `∂_r φ_R(r)`.
    pub fn d_r(&self, big_r: f64, r: f64) -> f64 {
        let (a, s) = self.wall(big_r);
        0.5 * self.potential.vacuum_separation() * a * (sech2(a * (r + s)) - sech2(a * (r - s)))
    }

    /// `∂_R φ_R(r)`.
    ///
    /// For the even variants the derivative is odd in `R`; at `R = 0` the
    /// one-sided limit `R → 0⁺` is returned so that `(∂_R φ)²` stays continuous.
    pub fn d_big_r(&self, big_r: f64, r: f64) -> f64 {
        let half_gap = 0.5 * self.potential.vacuum_separation();
        match self.variant {
            AnsatzVariant::Asymmetric => {
                let a = 1.0 / self.sigma;
                half_gap * a * (sech2(a * (r + big_r)) + sech2(a * (r - big_r)))
            }
            AnsatzVariant::Symmetric => {
                let a = 1.0 / self.sigma;
                let s = big_r.abs();
                sign_or_one(big_r) * half_gap * a * (sech2(a * (r + s)) + sech2(a * (r - s)))
            }
            AnsatzVariant::RDependentWidth => {
                let s = big_r.abs();
                let s2 = self.sigma * self.sigma;
                let a = (s + self.sigma) / s2;
                let da = 1.0 / s2;
                let plus = sech2(a * (r + s)) * (da * (r + s) + a);
                let minus = sech2(a * (r - s)) * (da * (r - s) - a);
                sign_or_one(big_r) * half_gap * (plus - minus)
            }
        }
    }

    /// Radius beyond which `|φ_R − φ_F| < 1e−12 (φ_T − φ_F)`, plus a 10σ margin.
    pub fn tail_cutoff(&self, big_r: f64) -> f64 {
        let threshold = 1e-12 * self.potential.vacuum_separation();
        let step = self.wall_width(big_r);
        let mut r = big_r.abs();
        while (self.value(big_r, r) - self.potential.phi_false).abs() >= threshold {
            r += step;
        }
        r + 10.0 * self.sigma
    }
}

#[inline]
fn sign_or_one(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Area of the unit `n`-sphere, `2π^{(n+1)/2}/Γ((n+1)/2)`; `A₀ = 2`.
pub fn sphere_area(n: u32) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        _ => 2.0 * PI.powf(0.5 * f64::from(n + 1)) / gamma_half_integer(n + 1),
    }
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half_integer(k: u32) -> f64 {
    let (mut x, mut acc) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = 0.5 * f64::from(k);
    while x < target {
        acc *= x;
        x += 1.0;
    }
    acc
}
