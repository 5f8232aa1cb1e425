//! Direct simulation of the forced chain `g_{n+1} = L_{f,kappa} g_n + omega_{n+1} b`
//! and of the random-shift representation of the heat semigroup.
//!
//! Every normal draw comes from its own ChaCha stream keyed by
//! `(seed, stream, step)`, so results do not depend on how rayon schedules
//! the samples.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ModeSelector, ScalarField, Wavenumber};
use crate::maps::PerturbedCatMap;
use crate::numerics::pairwise_sum;
use crate::stationary::StationarySpectrum;
use crate::transfer::pulsed_step;

fn keyed_rng(seed: u64, stream: u64, step: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&step.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// The standard normal `omega` for a given `(seed, stream, step)`.
pub fn forcing_draw(seed: u64, stream: u64, step: u64) -> f64 {
    StandardNormal.sample(&mut keyed_rng(seed, stream, step))
}

/// Sample mean and standard error of an IID statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::param("n_samples", format!("need at least 2 samples, got {n}")));
        }
        let mean = pairwise_sum(xs) / n as f64;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Ok(Estimate { mean, stderr: (var / n as f64).sqrt(), n_samples: n })
    }

    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if self.stderr == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            d / self.stderr
        }
    }
}

fn check_steps(n_steps: usize, kappa: f64) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be at least 1"));
    }
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", format!("chain needs kappa > 0, got {kappa}")));
    }
    Ok(())
}

fn chain(b: &ScalarField, map: &PerturbedCatMap, kappa: f64, n_steps: usize, seed: u64, stream: u64) -> Result<ScalarField> {
    let mut g = ScalarField::zeros_with_grid(b.max_mode(), b.grid_size())?;
    for n in 1..=n_steps {
        if n > 1 {
            g = pulsed_step(&g, map, kappa)?.field;
        }
        let w = forcing_draw(seed, stream, n as u64);
        g.add_scaled(b, Complex64::new(w, 0.0))?;
    }
    Ok(g)
}

/// `g_{n_steps}` started from `g_0 = 0`; pulses are truncated to `b`'s box.
pub fn sample_chain(b: &ScalarField, map: &PerturbedCatMap, kappa: f64, n_steps: usize, seed: u64) -> Result<ScalarField> {
    check_steps(n_steps, kappa)?;
    chain(b, map, kappa, n_steps, seed, 0)
}

/// Estimate of `E ||P_sel g||^2` over independent chains, one stream per sample.
pub fn mc_expected_projection(
    b: &ScalarField,
    map: &PerturbedCatMap,
    kappa: f64,
    sel: &ModeSelector,
    n_samples: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Estimate> {
    check_steps(n_steps, kappa)?;
    if n_samples < 2 {
        return Err(Error::param("n_samples", format!("need at least 2 samples, got {n_samples}")));
    }
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| chain(b, map, kappa, n_steps, seed, s).map(|g| g.project(sel).l2_norm_sq()))
        .collect::<Result<_>>()?;
    Estimate::from_samples(&values)
}

fn shift(seed: u64, sample: u64, kappa: f64) -> [f64; 2] {
    let mut rng = keyed_rng(seed, sample, u64::MAX);
    let s = (2.0 * kappa).sqrt();
    let x: f64 = StandardNormal.sample(&mut rng);
    let y: f64 = StandardNormal.sample(&mut rng);
    [s * x, s * y]
}

fn phase(k: Wavenumber, w: [f64; 2]) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k.kx as f64 * w[0] + k.ky as f64 * w[1]))
}

/// Average of `phi(. + omega)` over `omega ~ N(0, 2 kappa I)`, which has
/// expectation `e^{kappa Delta} phi`.
pub fn random_shift_heat(phi: &ScalarField, kappa: f64, n_samples: usize, seed: u64) -> Result<ScalarField> {
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
    }
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let shifts: Vec<[f64; 2]> = (0..n_samples as u64).map(|s| shift(seed, s, kappa)).collect();
    let modes: Vec<(Wavenumber, Complex64)> = phi.iter_nonzero().collect();
    let averaged: Vec<(Wavenumber, Complex64)> = modes
        .par_iter()
        .map(|&(k, c)| {
            let re: Vec<f64> = shifts.iter().map(|w| phase(k, *w).re).collect();
            let im: Vec<f64> = shifts.iter().map(|w| phase(k, *w).im).collect();
            let m = Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) / n_samples as f64;
            (k, c * m)
        })
        .collect();
    let mut out = ScalarField::zeros_with_grid(phi.max_mode(), phi.grid_size())?;
    for (k, c) in averaged {
        out.set(k, c)?;
    }
    Ok(out)
}

/// Estimate of the random-shift multiplier `E cos(2 pi k . omega)` at one mode;
/// its exact value is `exp(-4 pi^2 kappa |k|^2)`.
pub fn shift_multiplier_estimate(k: Wavenumber, kappa: f64, n_samples: usize, seed: u64) -> Result<Estimate> {
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
    }
    let xs: Vec<f64> = (0..n_samples as u64).map(|s| phase(k, shift(seed, s, kappa)).re).collect();
    Estimate::from_samples(&xs)
}

/// Fewest chain steps whose uncollected series tail stays below `fraction`
/// of the summed stationary mass.
pub fn burn_in_steps(spec: &StationarySpectrum, fraction: f64) -> usize {
    let total = spec.series_mass() + spec.tail_bound;
    let mut tail = spec.tail_bound;
    let mut n = spec.per_pulse.len();
    while n > 0 {
        let next = tail + spec.per_pulse[n - 1].l2.powi(2);
        if next >= fraction * total {
            break;
        }
        tail = next;
        n -= 1;
    }
    n.max(1)
}
