//! Exponential shells `L^l <= |k| < L^(l+1)` with `L = lambda^2` each hold
//! about `log L / log lambda = 2` units of stationary mass.

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::{IntMatrix2, PerturbedCatMap, ShearStep};
use batchelor::stationary::{stationary_spectrum, StationarySpectrum};

fn report(label: &str, map: &PerturbedCatMap, max_mode: usize) -> batchelor::Result<()> {
    let lambda = map.hyperbolic().lambda;
    let base = lambda * lambda;
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), max_mode)?;
    let spec = stationary_spectrum(&b, map, 1e-9, 1e-12)?;
    let top = StationarySpectrum::complete_shells(base, max_mode as f64 / 2.0).unwrap_or(0);
    println!("{label} (K = {max_mode}), reference {:.3}", base.ln() / lambda.ln());
    for (ell, mass) in spec.shell_masses(base, top)? {
        println!("  shell {ell}: [{:>7.2}, {:>7.2})  mass {mass:.5}", base.powi(ell as i32), base.powi(ell as i32 + 1));
    }
    Ok(())
}

fn main() -> batchelor::Result<()> {
    report("pure cat map", &PerturbedCatMap::arnold(), 700)?;
    let perturbed = PerturbedCatMap::new(IntMatrix2::from_rows([[2, 1], [1, 1]]), vec![ShearStep::horizontal(1e-3, 1)])?;
    report("shear eps = 1e-3", &perturbed, 128)
}
