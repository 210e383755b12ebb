//! Banded matrices with an LU factorization without pivoting.
//!
//! The systems solved here (Crank–Nicolson operators whose Hermitian part is
//! positive definite, and diagonally dominant boundary-value discretizations)
//! are stable under unpivoted elimination, which preserves the band structure.

use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Scalar types supported by the banded solver.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + PartialEq
    + Send
    + Sync
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored row-wise:
/// entry `(i, j)` lives at `data[i][j + kl − i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![T::zero(); n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            T::zero()
        }
    }

    /// Sets entry `(i, j)`; panics when it lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] = v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        let w = self.width();
        for (i, yi) in y.iter_mut().enumerate() {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = T::zero();
            for j in j0..=j1 {
                acc = acc + row[j + self.kl - i] * x[j];
            }
            *yi = acc;
        }
    }

    /// In-place LU factorization (Doolittle, no pivoting).
    pub fn factorize(mut self) -> Result<BandLu<T>> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width());
        let scale = self
            .data
            .iter()
            .map(|v| v.magnitude())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for k in 0..n {
            let pivot = self.data[k * w + kl];
            if pivot.magnitude() <= 1e-14 * scale {
                return Err(Error::LinearSolveFailure { row: k });
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                let l = self.data[i * w + k + kl - i] / pivot;
                self.data[i * w + k + kl - i] = l;
                for j in k + 1..=(k + ku).min(n - 1) {
                    let u = self.data[k * w + j + kl - k];
                    let idx = i * w + j + kl - i;
                    self.data[idx] = self.data[idx] - l * u;
                }
            }
        }
        Ok(BandLu { lu: self })
    }
}

/// LU factors of a [`BandMatrix`], reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    lu: BandMatrix<T>,
}

impl<T: Scalar> BandLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let m = &self.lu;
        let (n, kl, ku, w) = (m.n, m.kl, m.ku, m.width());
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut acc = x[i];
            for j in i.saturating_sub(kl)..i {
                acc = acc - m.data[i * w + j + kl - i] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..=(i + ku).min(n - 1) {
                acc = acc - m.data[i * w + j + kl - i] * x[j];
            }
            x[i] = acc / m.data[i * w + kl];
        }
    }
}
