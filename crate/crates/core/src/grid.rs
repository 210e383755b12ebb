//! Uniform one-dimensional grids.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `n_points` equally spaced nodes covering `[min, max]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
}

impl UniformGrid {
    pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidInput(format!(
                "a grid needs at least 3 points, got {n_points}"
            )));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::InvalidInput(format!("invalid grid bounds [{min}, {max}]")));
        }
        Ok(Self { min, max, n_points })
    }

    /// Grid on `[−half_width, half_width]` with spacing as close as possible to `spacing`
    /// and an odd number of nodes, so that `R = 0` is a node.
    pub fn symmetric(half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
        }
        let half = (half_width / spacing).round().max(1.0) as usize;
        Self::new(-half_width, half_width, 2 * half + 1)
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
