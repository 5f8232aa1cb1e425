//! Monte Carlo check of the stationary series: independent forced chains
//! against the deterministic sum, and the random-shift form of the heat
//! semigroup against its Fourier multiplier.

use batchelor::field::{ModeSelector, ScalarField, Wavenumber};
use batchelor::maps::PerturbedCatMap;
use batchelor::monte_carlo::{mc_expected_projection, shift_multiplier_estimate};
use batchelor::stationary::stationary_spectrum;
use batchelor::transfer::HEAT_CONSTANT;

fn main() -> batchelor::Result<()> {
    let map = PerturbedCatMap::arnold();
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 16)?;
    let sel = ModeSelector::Ball { radius: 10.0 };
    let kappa = 1e-6;

    let series = stationary_spectrum(&b, &map, kappa, 1e-12)?.selected_mass(&sel);
    let est = mc_expected_projection(&b, &map, kappa, &sel, 1000, 60, 1)?;
    println!("E||P_<=10 g||^2: series {series:.4}, Monte Carlo {:.4} +- {:.4} (z = {:.2})", est.mean, est.stderr, est.z_score(series));

    for k in [Wavenumber::new(1, 0), Wavenumber::new(2, -1)] {
        for kappa in [1e-3, 1e-2] {
            let e = shift_multiplier_estimate(k, kappa, 4000, 7)?;
            let exact = (-HEAT_CONSTANT * kappa * k.norm_sq()).exp();
            println!("k = ({},{}) kappa {kappa}: {:.4} +- {:.4} vs {exact:.4}", k.kx, k.ky, e.mean, e.stderr);
        }
    }
    Ok(())
}
