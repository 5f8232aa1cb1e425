//! Decay and dissipation time scales.

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::{log_expansion_estimate, IntMatrix2, PerturbedCatMap, ShearStep};
use batchelor::probes::{critical_time, enhanced_dissipation_time, h_minus1_decay_rate, uniform_decay_rate};

fn main() -> batchelor::Result<()> {
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 128)?;
    let a = IntMatrix2::from_rows([[2, 1], [1, 1]]);
    for eps in [0.0, 1e-3, 1e-2] {
        let map = PerturbedCatMap::new(a, vec![ShearStep::horizontal(eps, 1)])?;
        let raw = h_minus1_decay_rate(&b, &map, 0.0, 20)?;
        let uniform = uniform_decay_rate(&b, &map, &[0.0, 1e-4, 1e-3], 20)?;
        println!(
            "eps {eps:.0e}: gamma(kappa=0) {:.4} over n={}..{}, uniform gamma {:.4}, Lambda_est {:.4}",
            raw.gamma,
            raw.first_n,
            raw.last_n,
            uniform.gamma,
            log_expansion_estimate(&map)
        );
    }

    let map = PerturbedCatMap::arnold();
    let lambda_est = log_expansion_estimate(&map);
    for kappa in [1e-2, 1e-3, 1e-4, 1e-5] {
        let tau = enhanced_dissipation_time(&b, &map, kappa, 50)?;
        let n_crit = critical_time(kappa, (2.0 * lambda_est).exp(), 0.5)?;
        println!(
            "kappa {kappa:.0e}: tau {tau:?}, lower bound |log kappa|/(2 Lambda) = {:.2}, N_crit = {:.2}",
            kappa.ln().abs() / (2.0 * lambda_est),
            n_crit.n_crit
        );
    }
    Ok(())
}
