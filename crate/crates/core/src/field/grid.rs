//! Physical-space sampling of band-limited fields.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

use super::{ScalarField, Wavenumber};

/// Samples on the uniform `N x N` grid; `values[i * N + j]` is the value at
/// `x = (i / N, j / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalGrid {
    pub size: usize,
    pub values: Vec<Complex64>,
}

impl PhysicalGrid {
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.size + j]
    }

    /// Grid quadrature of `|phi|^2` over the torus.
    pub fn mean_square(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        crate::numerics::pairwise_sum(&sq) / self.values.len() as f64
    }
}

/// Unnormalized 2D FFT of a row-major `n x n` array.
pub(crate) fn fft2(data: &mut [Complex64], n: usize, direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(n, direction);
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = data[i * n + j];
        }
        fft.process(&mut column);
        for i in 0..n {
            data[i * n + j] = column[i];
        }
    }
}

fn wrap(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Evaluates `phi` on its `grid_size x grid_size` grid.
pub fn sample_on_grid(phi: &ScalarField) -> PhysicalGrid {
    let n = phi.grid_size();
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, c) in phi.iter_nonzero() {
        data[wrap(k.kx, n) * n + wrap(k.ky, n)] = c;
    }
    fft2(&mut data, n, FftDirection::Inverse);
    PhysicalGrid { size: n, values: data }
}

/// Recovers the Fourier coefficients on `[-K, K]^2` from grid samples. The
/// grid mean is discarded.
pub fn field_from_grid(grid: &PhysicalGrid, max_mode: usize) -> Result<ScalarField> {
    let n = grid.size;
    if grid.values.len() != n * n {
        return Err(Error::Format(format!("grid holds {} values, expected {}", grid.values.len(), n * n)));
    }
    let mut field = ScalarField::zeros_with_grid(max_mode, n)?;
    let mut data = grid.values.clone();
    fft2(&mut data, n, FftDirection::Forward);
    let scale = 1.0 / (n * n) as f64;
    let mean = data[0] * scale;
    if mean.norm() > 1e-12 * (grid.mean_square().sqrt() + f64::MIN_POSITIVE) {
        log::warn!("field_from_grid: discarding nonzero grid mean {mean}");
    }
    let m = max_mode as i64;
    let side = field.side();
    let coeffs = field.coeffs_mut();
    for kx in -m..=m {
        for ky in -m..=m {
            let idx = ((kx + m) as usize) * side + (ky + m) as usize;
            coeffs[idx] = data[wrap(kx, n) * n + wrap(ky, n)] * scale;
        }
    }
    field.zero_mean();
    debug_assert_eq!(field.get(Wavenumber::ZERO), Complex64::new(0.0, 0.0));
    Ok(field)
}
