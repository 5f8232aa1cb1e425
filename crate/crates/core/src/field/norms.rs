//! Sobolev-type norms on Fourier coefficients.

use crate::error::{Error, Result};
use crate::maps::HyperbolicData;
use crate::numerics::pairwise_sum;

use super::{ScalarField, Wavenumber};

/// Homogeneous `H^s` seminorm `(sum_{k != 0} |k|^{2s} |phi(k)|^2)^{1/2}`.
pub fn sobolev_seminorm(phi: &ScalarField, s: f64) -> f64 {
    let terms: Vec<f64> = phi
        .iter_nonzero()
        .filter(|(k, _)| !k.is_zero())
        .map(|(k, c)| k.norm_sq().powf(s) * c.norm_sqr())
        .collect();
    pairwise_sum(&terms).sqrt()
}

fn check_order(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::param("p", format!("anisotropic order must be positive, got {p}")))
    }
}

/// Anisotropic norm with weight `|k|^{2p}` on the closed unstable cone of
/// `A^T` and `|k|^{-2p}` elsewhere.
pub fn anisotropic_norm(phi: &ScalarField, p: f64, hyp: &HyperbolicData) -> Result<f64> {
    check_order(p)?;
    let cone = hyp.cone_basis()?;
    let terms: Vec<f64> = phi
        .iter_nonzero()
        .map(|(k, c)| {
            let w = c.norm_sqr();
            if k.is_zero() {
                w
            } else if cone.in_unstable_cone(k) {
                k.norm_sq().powf(p) * w
            } else {
                k.norm_sq().powf(-p) * w
            }
        })
        .collect();
    Ok(pairwise_sum(&terms).sqrt())
}

/// Index `N >= 1` of the dyadic block `2^{N-1} <= |k| < 2^N`.
pub(crate) fn dyadic_block(k: Wavenumber) -> u32 {
    let r2 = (k.kx as i128).pow(2) + (k.ky as i128).pow(2);
    debug_assert!(r2 > 0);
    let mut n = 1u32;
    // |k| < 2^N  <=>  |k|^2 < 4^N
    while r2 >= 1i128 << (2 * n) {
        n += 1;
    }
    n
}

/// Littlewood-Paley form of the anisotropic norm: each dyadic block is
/// weighted by `2^{2pN}` inside the unstable cone and `2^{-2pN}` outside.
pub fn dyadic_cone_norm(phi: &ScalarField, p: f64, hyp: &HyperbolicData) -> Result<f64> {
    check_order(p)?;
    let cone = hyp.cone_basis()?;
    let terms: Vec<f64> = phi
        .iter_nonzero()
        .map(|(k, c)| {
            let w = c.norm_sqr();
            if k.is_zero() {
                return w;
            }
            let n = dyadic_block(k) as f64;
            let sign = if cone.in_unstable_cone(k) { 1.0 } else { -1.0 };
            (sign * 2.0 * p * n).exp2() * w
        })
        .collect();
    Ok(pairwise_sum(&terms).sqrt())
}
