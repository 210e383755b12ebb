//! Parametrized-path treatment of false vacuum decay.
//!
//! A field configuration is restricted to a one-parameter family `φ_R(r)`
//! interpolating between the false vacuum (`R = 0`) and the true vacuum
//! (`|R| → ∞`). Integrating out the radial coordinate leaves a point particle
//! with a position-dependent mass `K(R)` moving in a potential `U(R)`. The
//! resulting Schrödinger equation is evolved in real time and the survival
//! probability inside the barrier yields an instantaneous decay rate, which is
//! compared with the Euclidean bounce action.
//!
//! Module map:
//!
//! * [`model`]: quartic potential, Ansatz families and their derivatives.
//! * [`reduction`]: `K(R)` and `U(R)` by radial quadrature, tabulation and barrier data.
//! * [`evolver`]: Crank–Nicolson propagation with hyperdiffusion, `P_F(t)` and `Γ(t)`.
//! * [`instanton`]: field-theoretic and reduced bounces, σ optimization, comparison statistic.
//! * [`coldatom`]: two-component condensate reduction (density and response BVPs).
//! * [`config`], [`run`]: configuration files and run orchestration behind the `ppath` CLI.

pub mod banded;
pub mod coldatom;
pub mod config;
pub mod error;
pub mod evolver;
pub mod grid;
pub mod instanton;
pub mod model;
pub mod ode;
pub mod optimize;
pub mod output;
pub mod quadrature;
pub mod reduction;
pub mod run;
pub mod spline;

pub use error::{Error, Result};
