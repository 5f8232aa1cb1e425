//! Mean-zero scalars on the 2-torus stored as Fourier coefficients.
//!
//! A [`ScalarField`] keeps every coefficient in the square `[-K, K]^2` in a
//! dense row-major array (`kx` major). The `k = 0` coefficient is pinned to
//! zero on every construction path.

mod grid;
mod io;
mod norms;
mod selector;

pub use grid::{field_from_grid, sample_on_grid, PhysicalGrid};
pub(crate) use grid::fft2 as grid_fft2;
pub use io::{read_field, write_field, FieldHeader};
pub use norms::{anisotropic_norm, dyadic_cone_norm, sobolev_seminorm};
pub use selector::{angle_to_line, ModeSelector};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

/// A lattice point of `Z^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Wavenumber {
    pub kx: i64,
    pub ky: i64,
}

impl Wavenumber {
    pub const ZERO: Wavenumber = Wavenumber { kx: 0, ky: 0 };

    pub const fn new(kx: i64, ky: i64) -> Self {
        Wavenumber { kx, ky }
    }

    pub fn is_zero(self) -> bool {
        self.kx == 0 && self.ky == 0
    }

    pub fn norm_sq(self) -> f64 {
        let (x, y) = (self.kx as f64, self.ky as f64);
        x * x + y * y
    }

    /// Euclidean length `|k|`.
    pub fn norm(self) -> f64 {
        (self.kx as f64).hypot(self.ky as f64)
    }

    pub fn as_vec(self) -> [f64; 2] {
        [self.kx as f64, self.ky as f64]
    }

    /// Sup-norm, i.e. the smallest `K` whose square contains this mode.
    pub fn max_abs(self) -> u64 {
        self.kx.unsigned_abs().max(self.ky.unsigned_abs())
    }
}

impl fmt::Display for Wavenumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.kx, self.ky)
    }
}

impl From<(i64, i64)> for Wavenumber {
    fn from((kx, ky): (i64, i64)) -> Self {
        Wavenumber { kx, ky }
    }
}

/// Fourier coefficients of a complex mean-zero scalar on `T^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    max_mode: usize,
    grid_size: usize,
    coeffs: Vec<Complex64>,
}

fn default_grid(max_mode: usize) -> usize {
    2 * max_mode + 2
}

fn check_grid(max_mode: usize, grid_size: usize) -> Result<()> {
    if !grid_size.is_multiple_of(2) {
        return Err(Error::OddGrid(grid_size));
    }
    if grid_size < 2 * max_mode + 2 {
        return Err(Error::GridTooSmall { grid_size, max_mode });
    }
    Ok(())
}

impl ScalarField {
    /// The zero field with coefficients on `[-K, K]^2` and the minimal
    /// dealiased grid `2K + 2`.
    pub fn zeros(max_mode: usize) -> Self {
        Self::zeros_with_grid(max_mode, default_grid(max_mode)).expect("default grid is valid")
    }

    pub fn zeros_with_grid(max_mode: usize, grid_size: usize) -> Result<Self> {
        if max_mode == 0 {
            return Err(Error::param("max_mode", "must be positive"));
        }
        check_grid(max_mode, grid_size)?;
        let side = 2 * max_mode + 1;
        Ok(ScalarField { max_mode, grid_size, coeffs: vec![Complex64::new(0.0, 0.0); side * side] })
    }

    /// The pure Fourier mode `e_k`.
    pub fn pure_mode(k: Wavenumber, max_mode: usize) -> Result<Self> {
        let mut f = Self::zeros(max_mode);
        f.set(k, Complex64::new(1.0, 0.0))?;
        Ok(f)
    }

    /// Builds a field from `(k, coefficient)` pairs. Later pairs overwrite
    /// earlier ones.
    pub fn from_modes<I>(max_mode: usize, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Wavenumber, Complex64)>,
    {
        let mut f = Self::zeros(max_mode);
        for (k, c) in modes {
            f.set(k, c)?;
        }
        Ok(f)
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn side(&self) -> usize {
        2 * self.max_mode + 1
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Result<Self> {
        check_grid(self.max_mode, grid_size)?;
        self.grid_size = grid_size;
        Ok(self)
    }

    pub fn contains(&self, k: Wavenumber) -> bool {
        k.max_abs() <= self.max_mode as u64
    }

    #[inline]
    pub(crate) fn index(&self, k: Wavenumber) -> usize {
        let m = self.max_mode as i64;
        ((k.kx + m) as usize) * self.side() + (k.ky + m) as usize
    }

    #[inline]
    pub(crate) fn mode_at(&self, idx: usize) -> Wavenumber {
        let side = self.side();
        let m = self.max_mode as i64;
        Wavenumber::new((idx / side) as i64 - m, (idx % side) as i64 - m)
    }

    /// Coefficient at `k`; zero for modes outside the stored square.
    pub fn get(&self, k: Wavenumber) -> Complex64 {
        if self.contains(k) {
            self.coeffs[self.index(k)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, k: Wavenumber, value: Complex64) -> Result<()> {
        if !self.contains(k) {
            return Err(Error::ModeOutOfRange { k, max_mode: self.max_mode });
        }
        if k.is_zero() {
            if value == Complex64::new(0.0, 0.0) {
                return Ok(());
            }
            return Err(Error::MeanMode(k));
        }
        let i = self.index(k);
        self.coeffs[i] = value;
        Ok(())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access for in-crate kernels; callers must keep `k = 0` at zero.
    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn zero_mean(&mut self) {
        let i = self.index(Wavenumber::ZERO);
        self.coeffs[i] = Complex64::new(0.0, 0.0);
    }

    /// All stored `(k, coefficient)` pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Wavenumber, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.mode_at(i), c))
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (Wavenumber, Complex64)> + '_ {
        self.iter().filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `sum_k |phi(k)|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        let sq: Vec<f64> = self.coeffs.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&sq)
    }

    /// Parseval `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn add_scaled(&mut self, other: &ScalarField, factor: Complex64) -> Result<()> {
        if other.max_mode != self.max_mode {
            return Err(Error::ShapeMismatch(self.max_mode, other.max_mode));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * factor;
        }
        Ok(())
    }

    /// `||self - other||_{L^2}` for fields of equal shape.
    pub fn l2_distance(&self, other: &ScalarField) -> Result<f64> {
        if other.max_mode != self.max_mode {
            return Err(Error::ShapeMismatch(self.max_mode, other.max_mode));
        }
        let sq: Vec<f64> = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm_sqr()).collect();
        Ok(pairwise_sum(&sq).sqrt())
    }

    /// Re-embeds the field into the square `[-K', K']^2`. Returns the field and
    /// the squared mass of coefficients that did not fit.
    pub fn resized(&self, max_mode: usize) -> (ScalarField, f64) {
        let mut out = ScalarField::zeros(max_mode);
        let mut lost = 0.0;
        for (k, c) in self.iter_nonzero() {
            if out.contains(k) {
                let i = out.index(k);
                out.coeffs[i] = c;
            } else {
                lost += c.norm_sqr();
            }
        }
        (out, lost)
    }

    /// Keeps only coefficients selected by `sel`.
    pub fn project(&self, sel: &ModeSelector) -> ScalarField {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !sel.contains(self.mode_at(i)) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }
}

/// Free-function form of [`ScalarField::pure_mode`].
pub fn new_pure_mode(k: Wavenumber, max_mode: usize) -> Result<ScalarField> {
    ScalarField::pure_mode(k, max_mode)
}

pub fn l2_norm(phi: &ScalarField) -> f64 {
    phi.l2_norm()
}

pub fn project(phi: &ScalarField, sel: &ModeSelector) -> ScalarField {
    phi.project(sel)
}
