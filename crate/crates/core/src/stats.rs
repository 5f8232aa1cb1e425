//! Fourier mass viewed as a probability law on `Z^2`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, Wavenumber};
use crate::maps::{IntMatrix2, PerturbedCatMap};
use crate::numerics::{fmt17, pairwise_sum};
use crate::transfer::{cat_transfer, heat_factor, iterate_pulses};

/// The law `P(k) = |phi(k)|^2 / ||phi||^2` with its mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDistribution {
    pub total_mass: f64,
    /// Nonzero probabilities in row-major mode order.
    pub pmf: Vec<(Wavenumber, f64)>,
    pub centroid: [f64; 2],
    pub variance: f64,
}

impl SpectralDistribution {
    /// `E |X - z|^2`.
    pub fn moment_about(&self, z: [f64; 2]) -> f64 {
        let terms: Vec<f64> = self
            .pmf
            .iter()
            .map(|(k, p)| ((k.kx as f64 - z[0]).powi(2) + (k.ky as f64 - z[1]).powi(2)) * p)
            .collect();
        pairwise_sum(&terms)
    }

    /// `E |X|^2`.
    pub fn second_moment(&self) -> f64 {
        self.moment_about([0.0, 0.0])
    }

    /// `P(|X - E X| > a)`.
    pub fn tail_probability(&self, a: f64) -> f64 {
        let c = self.centroid;
        let terms: Vec<f64> = self
            .pmf
            .iter()
            .filter(|(k, _)| (k.kx as f64 - c[0]).hypot(k.ky as f64 - c[1]) > a)
            .map(|(_, p)| *p)
            .collect();
        pairwise_sum(&terms)
    }
}

pub fn spectral_distribution(phi: &ScalarField) -> Result<SpectralDistribution> {
    distribution_of_modes(phi.iter_nonzero())
}

/// Same law for an explicit list of `(k, coefficient)` pairs.
pub fn distribution_of_modes<I>(modes: I) -> Result<SpectralDistribution>
where
    I: IntoIterator<Item = (Wavenumber, Complex64)>,
{
    let weights: Vec<(Wavenumber, f64)> = modes.into_iter().map(|(k, c)| (k, c.norm_sqr())).filter(|(_, w)| *w > 0.0).collect();
    let masses: Vec<f64> = weights.iter().map(|(_, w)| *w).collect();
    let total_mass = pairwise_sum(&masses);
    if total_mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let pmf: Vec<(Wavenumber, f64)> = weights.into_iter().map(|(k, w)| (k, w / total_mass)).collect();
    let cx: Vec<f64> = pmf.iter().map(|(k, p)| k.kx as f64 * p).collect();
    let cy: Vec<f64> = pmf.iter().map(|(k, p)| k.ky as f64 * p).collect();
    let mut dist = SpectralDistribution { total_mass, pmf, centroid: [pairwise_sum(&cx), pairwise_sum(&cy)], variance: 0.0 };
    dist.variance = dist.moment_about(dist.centroid);
    Ok(dist)
}

/// Centroid after an exact cat-map transfer, next to `A^{-T}` applied to the
/// original centroid.
pub fn centroid_pushforward_check(phi: &ScalarField, a: &IntMatrix2) -> Result<([f64; 2], [f64; 2])> {
    let before = spectral_distribution(phi)?;
    let after = spectral_distribution(&cat_transfer(phi, a)?)?;
    let ait = a.inverse_transpose().as_f64();
    let c = before.centroid;
    let pushed = [ait[0][0] * c[0] + ait[0][1] * c[1], ait[1][0] * c[0] + ait[1][1] * c[1]];
    Ok((after.centroid, pushed))
}

/// Observed `P(|X - E X| > a)` and the Chebyshev bound `Var / a^2`.
pub fn chebyshev_tail(phi: &ScalarField, a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::param("a", format!("radius must be positive, got {a}")));
    }
    let d = spectral_distribution(phi)?;
    Ok((d.tail_probability(a), d.variance / (a * a)))
}

/// `k_0, A^{-T} k_0, ..., (A^{-T})^{n_max} k_0` in exact integer arithmetic.
pub fn pulse_sequence(a: &IntMatrix2, k0: Wavenumber, n_max: usize) -> Result<Vec<Wavenumber>> {
    if k0.is_zero() {
        return Err(Error::MeanMode(k0));
    }
    let ait = a.inverse_transpose();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(k0);
    for n in 1..=n_max {
        let next = ait.apply(out[n - 1]).ok_or(Error::IntegerOverflow { max_safe_n: n - 1 })?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackRow {
    pub n: usize,
    /// `|E X_{phi_n} - k_n|`
    pub drift: f64,
    pub variance: f64,
    pub l2: f64,
    pub h1: f64,
    pub h_minus1: f64,
}

/// Centroid drift and variance of successive pulses of a pure-mode source.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub rows: Vec<TrackRow>,
    /// Error that ended the iteration early, if any.
    pub stopped: Option<Error>,
}

impl Track {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "drift", "variance", "l2", "h1", "hminus1"])?;
        for r in &self.rows {
            w.write_record([r.n.to_string(), fmt17(r.drift), fmt17(r.variance), fmt17(r.l2), fmt17(r.h1), fmt17(r.h_minus1)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The single mode carrying a pure-mode field.
pub fn pure_mode_of(b: &ScalarField) -> Result<Wavenumber> {
    let mut modes = b.iter_nonzero().map(|(k, _)| k);
    match (modes.next(), modes.next()) {
        (Some(k), None) => Ok(k),
        _ => Err(Error::param("b", "source must be a single Fourier mode")),
    }
}

/// Drift and variance of `phi_n` against the pulse `k_n`.
///
/// Pure cat maps are iterated exactly on the list of occupied modes, so the
/// track is not limited by `b`'s box; perturbed maps go through the dense
/// transfer and stop where pulses reach the box edge.
pub fn centroid_variance_track(b: &ScalarField, map: &PerturbedCatMap, kappa: f64, n_max: usize) -> Result<Track> {
    let k0 = pure_mode_of(b)?;
    if map.is_linear() {
        return linear_track(b, map.matrix(), kappa, n_max);
    }
    let pulses = pulse_sequence(map.matrix(), k0, n_max)?;
    let mut rows = Vec::new();
    for item in iterate_pulses(b, map, kappa, n_max)? {
        let rec = match item {
            Ok(r) => r,
            Err(e) => return Ok(Track { rows, stopped: Some(e) }),
        };
        let n = rec.n();
        let dist = match spectral_distribution(&rec.field) {
            Ok(d) => d,
            Err(e) => return Ok(Track { rows, stopped: Some(e) }),
        };
        let kn = pulses[n];
        rows.push(TrackRow {
            n,
            drift: (dist.centroid[0] - kn.kx as f64).hypot(dist.centroid[1] - kn.ky as f64),
            variance: dist.variance,
            l2: rec.norms.l2,
            h1: rec.norms.h1,
            h_minus1: rec.norms.h_minus1,
        });
    }
    Ok(Track { rows, stopped: None })
}

fn linear_track(b: &ScalarField, a: &IntMatrix2, kappa: f64, n_max: usize) -> Result<Track> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::param("kappa", format!("diffusivity must be finite and nonnegative, got {kappa}")));
    }
    let ait = a.inverse_transpose();
    let k0 = pure_mode_of(b)?;
    let mut modes: Vec<(Wavenumber, Complex64)> = b.iter_nonzero().collect();
    let mut rows = Vec::new();
    for n in 0..=n_max {
        if n > 0 {
            let mut next = Vec::with_capacity(modes.len());
            for &(k, c) in &modes {
                let Some(j) = ait.apply(k) else {
                    return Ok(Track { rows, stopped: Some(Error::IntegerOverflow { max_safe_n: n - 1 }) });
                };
                next.push((j, c * heat_factor(kappa, j.norm_sq())));
            }
            modes = next;
        }
        let dist = match distribution_of_modes(modes.iter().copied()) {
            Ok(d) => d,
            Err(e) => return Ok(Track { rows, stopped: Some(e) }),
        };
        let Some(kn) = a_pow_apply(&ait, k0, n) else {
            return Ok(Track { rows, stopped: Some(Error::IntegerOverflow { max_safe_n: n.saturating_sub(1) }) });
        };
        let sum = |s: f64| -> f64 {
            let t: Vec<f64> = modes.iter().map(|(k, c)| k.norm_sq().powf(s) * c.norm_sqr()).collect();
            pairwise_sum(&t).sqrt()
        };
        rows.push(TrackRow {
            n,
            drift: (dist.centroid[0] - kn.kx as f64).hypot(dist.centroid[1] - kn.ky as f64),
            variance: dist.variance,
            l2: sum(0.0),
            h1: sum(1.0),
            h_minus1: sum(-1.0),
        });
    }
    Ok(Track { rows, stopped: None })
}

fn a_pow_apply(m: &IntMatrix2, k: Wavenumber, n: usize) -> Option<Wavenumber> {
    (0..n).try_fold(k, |k, _| m.apply(k))
}
