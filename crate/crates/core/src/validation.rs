//! Fast self-checks on a configured map, run by the `validate` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::field::{sample_on_grid, ScalarField, Wavenumber};
use crate::maps::{cone_invariance, log_expansion_estimate, PerturbedCatMap};
use crate::probes::uniform_decay_rate;
use crate::stationary::stationary_spectrum;
use crate::stats::centroid_pushforward_check;
use crate::transfer::general_transfer;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured deviation or quantity compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check { name, passed: value <= tolerance, value, tolerance }
    }
}

/// A mean-zero field with uniform random coefficients for `|kx|, |ky| <= modes`.
pub fn random_field(rng: &mut impl Rng, max_mode: usize, modes: i64) -> ScalarField {
    let mut f = ScalarField::zeros(max_mode);
    for kx in -modes..=modes {
        for ky in -modes..=modes {
            let k = Wavenumber::new(kx, ky);
            if !k.is_zero() {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                f.set(k, c).expect("mode inside box");
            }
        }
    }
    f
}

pub fn run_checks(cfg: &ExperimentConfig, map: &PerturbedCatMap) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut checks = Vec::new();

    let phi = random_field(&mut rng, 16, 5);
    let parseval = (sample_on_grid(&phi).mean_square() - phi.l2_norm_sq()).abs() / phi.l2_norm_sq();
    checks.push(Check::at_most("parseval", parseval, 1e-10));

    let mut roundtrip: f64 = 0.0;
    let mut det_err: f64 = 0.0;
    for _ in 0..1000 {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let y = map.inverse(map.forward(x));
        for i in 0..2 {
            let d = (y[i] - x[i]).abs();
            roundtrip = roundtrip.max(d.min(1.0 - d));
        }
        let j = map.jacobian(x);
        det_err = det_err.max(((j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs() - 1.0).abs());
    }
    checks.push(Check::at_most("inverse_round_trip", roundtrip, 1e-10));
    checks.push(Check::at_most("unit_jacobian", det_err, 1e-10));

    let mut push: f64 = 0.0;
    for _ in 0..20 {
        let f = random_field(&mut rng, 48, 6);
        let (lhs, rhs) = centroid_pushforward_check(&f, map.matrix())?;
        push = push.max((lhs[0] - rhs[0]).abs().max((lhs[1] - rhs[1]).abs()));
    }
    checks.push(Check::at_most("centroid_pushforward", push, 1e-12));

    let low = random_field(&mut rng, 32, 3);
    let t = general_transfer(&low, map);
    let iso = (t.field.l2_norm_sq() + t.discarded - low.l2_norm_sq()).abs() / low.l2_norm_sq();
    checks.push(Check::at_most("transfer_isometry", iso, 1e-9));

    let cone = cone_invariance(map, 64)?;
    checks.push(Check { name: "cone_invariance", passed: cone.holds(), value: cone.max_ratio, tolerance: 1.0 });

    let b = cfg.build_source()?;
    let kappa = if cfg.run.kappa > 0.0 { cfg.run.kappa } else { 1e-3 };
    let spec = stationary_spectrum(&b, map, kappa, cfg.run.tol.max(1e-14))?;
    let series = (spec.total_power() - spec.series_mass()).abs();
    checks.push(Check::at_most("series_consistency", series, 1e-10 + spec.tail_bound));
    checks.push(Check::at_most("energy_balance", spec.dissipation_sum(), 1.05 * spec.source_mass));

    let k = cfg.source.max_mode as f64;
    let radii: Vec<f64> = (2..=cfg.source.max_mode).map(|n| n as f64).collect();
    let curve = spec.cumulative_curve(&radii)?;
    let drops = curve.windows(2).filter(|w| w[1].1 < w[0].1).count();
    checks.push(Check::at_most("cumulative_monotone", drops as f64, 0.0));

    let base = 2.0;
    if let Some(ell_max) = crate::stationary::StationarySpectrum::complete_shells(base, k) {
        let shells = spec.shell_masses(base, ell_max)?;
        let mut gap: f64 = 0.0;
        for w in shells.windows(2) {
            let l = w[0].0 as i32;
            let joint = spec.annulus_mass(base.powi(l), base.powi(l + 2));
            gap = gap.max((w[0].1 + w[1].1 - joint).abs());
        }
        checks.push(Check::at_most("shells_partition", gap, 1e-12));
    }

    let lambda_est = log_expansion_estimate(map);
    if let Ok(g) = uniform_decay_rate(&b, map, &[0.0, kappa], cfg.run.n_max.max(10)) {
        checks.push(Check::at_most("gamma_le_lambda", g.gamma - lambda_est, 0.05));
    }
    Ok(checks)
}
