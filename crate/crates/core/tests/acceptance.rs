//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line with
//! the measured quantities before asserting.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use batchelor::field::{ModeSelector, ScalarField, Wavenumber};
use batchelor::maps::{log_expansion_estimate, IntMatrix2, PerturbedCatMap, ShearStep};
use batchelor::monte_carlo::{mc_expected_projection, shift_multiplier_estimate};
use batchelor::numerics::fit_line;
use batchelor::probes::{anisotropic_decay_probe, enhanced_dissipation_time, h_minus1_decay_rate, uniform_decay_rate};
use batchelor::stationary::{stationary_spectrum, StationarySpectrum};
use batchelor::stats::{centroid_pushforward_check, centroid_variance_track, spectral_distribution};
use batchelor::transfer::cat_transfer;

const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

fn report(id: u32, name: &str, passed: bool, detail: String, elapsed: Duration) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{tag}] {name}: {detail} ({:.2}s)", elapsed.as_secs_f64());
}

fn cat() -> IntMatrix2 {
    IntMatrix2::from_rows([[2, 1], [1, 1]])
}

fn perturbed(eps: f64) -> PerturbedCatMap {
    if eps == 0.0 {
        PerturbedCatMap::arnold()
    } else {
        PerturbedCatMap::new(cat(), vec![ShearStep::horizontal(eps, 1)]).unwrap()
    }
}

fn source(max_mode: usize) -> ScalarField {
    ScalarField::pure_mode(Wavenumber::new(1, 0), max_mode).unwrap()
}

/// `k_n = (A^{-T})^n (1, 0)` with `A^{-T} = [[1, -1], [-1, 2]]`, by hand.
fn oracle_pulses(n: usize) -> Vec<(i64, i64)> {
    let mut out = vec![(1, 0)];
    for _ in 0..n {
        let (x, y) = *out.last().unwrap();
        out.push((x - y, -x + 2 * y));
    }
    out
}

fn oracle_pulse_power(kappa: f64, n: usize) -> Vec<f64> {
    let mut acc = 1.0;
    oracle_pulses(n)
        .iter()
        .enumerate()
        .map(|(j, &(x, y))| {
            if j > 0 {
                acc *= (-2.0 * FOUR_PI_SQ * kappa * (x * x + y * y) as f64).exp();
            }
            acc
        })
        .collect()
}

fn pulse_set(n: usize) -> Vec<Wavenumber> {
    oracle_pulses(n).into_iter().map(Wavenumber::from).collect()
}

#[test]
fn criterion_01_exact_cat_map_spectrum() {
    let t = Instant::now();
    let kappa = 1e-3;
    let spec = stationary_spectrum(&source(128), &PerturbedCatMap::arnold(), kappa, 1e-12).unwrap();
    let expect = oracle_pulse_power(kappa, 5);
    let mut worst: f64 = 0.0;
    for (k, e) in pulse_set(5).iter().zip(&expect) {
        worst = worst.max((spec.power(*k) - e).abs() / e);
    }
    let off = spec.offpulse_mass(&pulse_set(8), 128.0).unwrap();
    let elapsed = t.elapsed();
    let passed = worst <= 1e-10 && off == 0.0 && elapsed < Duration::from_secs(1);
    report(
        1,
        "exact cat-map stationary power",
        passed,
        format!("max rel err {worst:.2e} (tol 1e-10), power at k_2 {:.7}, off-pulse {off:e}", spec.power(Wavenumber::new(2, -3))),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_02_cumulative_law() {
    let t = Instant::now();
    let kappa = 1e-6;
    let map = PerturbedCatMap::arnold();
    let b = source(128);
    let spec = stationary_spectrum(&b, &map, kappa, 1e-12).unwrap();
    let radii: Vec<f64> = (10..=64).map(|n| n as f64).collect();
    let curve = spec.cumulative_curve(&radii).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve.iter().map(|(n, v)| (n.ln(), *v)).unzip();
    let slope = fit_line(&xs, &ys).unwrap().slope;
    let lambda_est = log_expansion_estimate(&map);
    let gamma_est = uniform_decay_rate(&b, &map, &[0.0, kappa], 20).unwrap().gamma;
    let (lo, hi) = (1.0 / (2.0 * lambda_est) - 0.05, 2.0 / gamma_est + 0.05);
    let slope_ok = lo <= slope && slope <= hi;

    let counts = spec.cumulative_curve(&[10.0, 25.0, 65.0]).unwrap();
    let count_errs: Vec<f64> = counts.iter().zip([4.0, 5.0, 6.0]).map(|((_, v), e)| (v - e).abs()).collect();
    let counts_ok = count_errs.iter().all(|e| *e <= 0.02);
    let elapsed = t.elapsed();
    let passed = slope_ok && counts_ok && elapsed < Duration::from_secs(10);
    report(
        2,
        "cumulative law",
        passed,
        format!(
            "slope {slope:.4} in [{lo:.4}, {hi:.4}]: {slope_ok}; values at N=10/25/65 {:.4}/{:.4}/{:.4} vs 4/5/6 (tol 0.02): {counts_ok}",
            counts[0].1, counts[1].1, counts[2].1
        ),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_03_dissipative_range() {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for eps in [0.0, 1e-3] {
        for kappa in [1e-2, 1e-3, 1e-4] {
            let spec = stationary_spectrum(&source(128), &perturbed(eps), kappa, 1e-12).unwrap();
            let v = spec.dissipative_mass(kappa).unwrap();
            worst = worst.max(v);
            lines.push(format!("eps={eps} kappa={kappa}: {v:.2e}"));
        }
    }
    let elapsed = t.elapsed();
    let passed = worst <= 2.0 && elapsed < Duration::from_secs(30);
    report(3, "dissipative range mass <= 2", passed, format!("max {worst:.3e}; {}", lines.join(", ")), elapsed);
    assert!(passed);
}

fn offpulse_fraction(eps: f64, kappa: f64, r: f64) -> f64 {
    let spec = stationary_spectrum(&source(128), &perturbed(eps), kappa, 1e-12).unwrap();
    spec.offpulse_mass(&pulse_set(8), r).unwrap() / spec.mass_below(r)
}

#[test]
fn criterion_04_pulse_localization() {
    let t = Instant::now();
    let r = 20.0;
    let base = offpulse_fraction(1e-3, 1e-4, r);
    let mut sweep = vec![(1.0, base)];
    for s in [0.3, 0.1] {
        sweep.push((s, offpulse_fraction(1e-3 * s, 1e-4 * s, r)));
    }
    let decreasing = sweep.windows(2).all(|w| w[1].1 < w[0].1);
    let elapsed = t.elapsed();
    let passed = base < 0.1 && decreasing && elapsed < Duration::from_secs(120);
    let detail: Vec<String> = sweep.iter().map(|(s, f)| format!("scale {s}: {f:.3e}")).collect();
    report(4, "off-pulse fraction below R=20", passed, format!("{} (limit 0.1, must decrease)", detail.join(", ")), elapsed);
    assert!(passed);
}

/// Shells `l >= 1` (shell 0 holds the forcing mode) whose outer radius is at most `K/2`.
fn complete_shell_masses(spec: &StationarySpectrum, base: f64) -> Vec<(u32, f64)> {
    let top = StationarySpectrum::complete_shells(base, spec.max_mode() as f64 / 2.0).unwrap();
    spec.shell_masses(base, top).unwrap().into_iter().filter(|(l, _)| *l >= 1).collect()
}

#[test]
fn criterion_05_exponential_shells() {
    let t = Instant::now();
    let lambda = PerturbedCatMap::arnold().hyperbolic().lambda;
    let base = lambda * lambda;
    let reference = base.ln() / lambda.ln();

    let pure = stationary_spectrum(&source(700), &PerturbedCatMap::arnold(), 1e-9, 1e-12).unwrap();
    let pure_shells = complete_shell_masses(&pure, base);
    let pure_ok = pure_shells.len() >= 2 && pure_shells.iter().all(|(_, m)| (m - 2.0).abs() <= 0.05);

    let pert = stationary_spectrum(&source(128), &perturbed(1e-3), 1e-9, 1e-12).unwrap();
    let pert_shells = complete_shell_masses(&pert, base);
    let pert_ok = !pert_shells.is_empty() && pert_shells.iter().all(|(_, m)| (m - reference).abs() <= 1.0);
    let elapsed = t.elapsed();
    let passed = pure_ok && pert_ok && elapsed < Duration::from_secs(30);
    report(
        5,
        "exponential shell law, L = lambda^2",
        passed,
        format!("pure {pure_shells:?} (2 +- 0.05); perturbed {pert_shells:?} ({reference:.3} +- 1)"),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_06_sector_sparsity() {
    let t = Instant::now();
    let map = perturbed(1e-3);
    let spec = stationary_spectrum(&source(128), &map, 1e-6, 1e-12).unwrap();
    let profile = spec.sector_profile(map.hyperbolic().v_st, 0.3, (8.0, 64.0)).unwrap();
    let fit = profile.fit;
    let elapsed = t.elapsed();
    let passed = fit.is_some_and(|f| f.slope <= -2.0) && elapsed < Duration::from_secs(60);
    let resolved: Vec<usize> = profile.rows.iter().map(|(r, _)| *r).filter(|r| (8..=64).contains(r)).collect();
    report(
        6,
        "sector decay exponent <= -2",
        passed,
        format!(
            "exponent {:?} from bins {resolved:?}; {} bins below round-off floor",
            fit.map(|f| f.slope),
            profile.skipped.len()
        ),
        elapsed,
    );
    assert!(passed);
}

fn random_field(rng: &mut ChaCha8Rng, max_mode: usize, modes: i64) -> ScalarField {
    let mut f = ScalarField::zeros(max_mode);
    let count = rng.random_range(1..=12);
    for _ in 0..count {
        let k = Wavenumber::new(rng.random_range(-modes..=modes), rng.random_range(-modes..=modes));
        if !k.is_zero() {
            f.set(k, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).unwrap();
        }
    }
    if f.is_zero() {
        f.set(Wavenumber::new(1, 0), Complex64::new(1.0, 0.0)).unwrap();
    }
    f
}

#[test]
fn criterion_07_centroid_and_variance() {
    let t = Instant::now();
    let a = cat();
    let m = a.inverse_transpose().as_f64();
    // Largest singular value of A^{-T} from the 2x2 closed form.
    let (p, q, r, s) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let fro = p * p + q * q + r * r + s * s;
    let det = p * s - q * r;
    let norm_sq = 0.5 * (fro + (fro * fro - 4.0 * det * det).sqrt());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut push_err: f64 = 0.0;
    let mut contraction_violations = 0;
    for _ in 0..100 {
        let phi = random_field(&mut rng, 48, 8);
        let (lhs, rhs) = centroid_pushforward_check(&phi, &a).unwrap();
        push_err = push_err.max((lhs[0] - rhs[0]).abs()).max((lhs[1] - rhs[1]).abs());
        let before = spectral_distribution(&phi).unwrap().variance;
        let after = spectral_distribution(&cat_transfer(&phi, &a).unwrap()).unwrap().variance;
        if after > norm_sq * before * (1.0 + 1e-12) + 1e-12 {
            contraction_violations += 1;
        }
    }
    let track = centroid_variance_track(&source(4), &PerturbedCatMap::arnold(), 0.0, 10).unwrap();
    let zero_track = track.stopped.is_none() && track.rows.len() == 11 && track.rows.iter().all(|r| r.drift == 0.0 && r.variance == 0.0);
    let elapsed = t.elapsed();
    let passed = push_err <= 1e-12 && contraction_violations == 0 && zero_track;
    report(
        7,
        "centroid pushforward and variance",
        passed,
        format!(
            "pushforward max err {push_err:.2e} (tol 1e-12), |A|^2 contraction violations {contraction_violations}/100, pure track zero through n=10: {zero_track}"
        ),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_08_monte_carlo() {
    let t = Instant::now();
    let kappa = 1e-6;
    let map = PerturbedCatMap::arnold();
    let b = source(16);
    let sel = ModeSelector::Ball { radius: 10.0 };
    let series = stationary_spectrum(&b, &map, kappa, 1e-12).unwrap().selected_mass(&sel);
    let est = mc_expected_projection(&b, &map, kappa, &sel, 1000, 60, 2024).unwrap();
    let mc_ok = est.z_score(series) <= 3.0 && est.z_score(4.0) <= 3.0;

    let mut worst_z: f64 = 0.0;
    let mut seed = 100;
    for k in [Wavenumber::new(1, 0), Wavenumber::new(1, 1), Wavenumber::new(2, -1)] {
        for kappa in [1e-3, 1e-2, 3e-2] {
            seed += 1;
            let e = shift_multiplier_estimate(k, kappa, 4000, seed).unwrap();
            worst_z = worst_z.max(e.z_score((-FOUR_PI_SQ * kappa * k.norm_sq()).exp()));
        }
    }
    let elapsed = t.elapsed();
    let passed = mc_ok && worst_z <= 4.0 && elapsed < Duration::from_secs(120);
    report(
        8,
        "Monte Carlo consistency",
        passed,
        format!(
            "E||P_<=10 g||^2 = {:.4} +- {:.4} vs series {series:.4} (z {:.2}) and 4.0 (z {:.2}); worst shift z {worst_z:.2} (limit 4)",
            est.mean,
            est.stderr,
            est.z_score(series),
            est.z_score(4.0)
        ),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_09_decay_rate_ordering() {
    let t = Instant::now();
    let lambda = PerturbedCatMap::arnold().hyperbolic().lambda;
    let b = source(128);
    let pure_gamma = h_minus1_decay_rate(&b, &PerturbedCatMap::arnold(), 0.0, 20).unwrap().gamma;
    let pure_ok = (pure_gamma - lambda.ln()).abs() <= 0.02;

    let configs = [
        PerturbedCatMap::arnold(),
        perturbed(1e-3),
        perturbed(1e-2),
        PerturbedCatMap::new(cat(), vec![ShearStep::horizontal(1e-2, 1), ShearStep::vertical(5e-3, 2)]).unwrap(),
    ];
    let mut order_ok = true;
    let mut pairs = Vec::new();
    for map in &configs {
        let g = uniform_decay_rate(&b, map, &[0.0, 1e-4, 1e-3], 20).unwrap().gamma;
        let l = log_expansion_estimate(map);
        order_ok &= g <= l + 0.05;
        pairs.push(format!("({g:.4} <= {l:.4})"));
    }

    let lambda_est = log_expansion_estimate(&PerturbedCatMap::arnold());
    let mut tau_ok = true;
    let mut taus = Vec::new();
    for kappa in [1e-2, 1e-3, 1e-4, 1e-5] {
        let tau = enhanced_dissipation_time(&b, &PerturbedCatMap::arnold(), kappa, 50).unwrap();
        let bound = kappa.ln().abs() / (2.0 * lambda_est) - 5.0;
        tau_ok &= tau.is_some_and(|n| n as f64 >= bound);
        taus.push(format!("kappa {kappa}: {tau:?} >= {bound:.2}"));
    }
    let elapsed = t.elapsed();
    let passed = pure_ok && order_ok && tau_ok;
    report(
        9,
        "decay rates",
        passed,
        format!("pure gamma {pure_gamma:.4} vs log lambda {:.4}; gamma <= Lambda + 0.05: {}; tau {}", lambda.ln(), pairs.join(" "), taus.join(", ")),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_10_anisotropic_decay() {
    let t = Instant::now();
    let lambda = PerturbedCatMap::arnold().hyperbolic().lambda;
    let b = source(128);
    let mut below_one = true;
    let mut rates = Vec::new();
    for eps in [0.0, 1e-3, 1e-2] {
        for kappa in [0.0, 1e-4] {
            for p in [1.0, 2.0] {
                let r = anisotropic_decay_probe(&b, &perturbed(eps), kappa, p, 10).unwrap().r_fit;
                below_one &= r.is_some_and(|r| r < 1.0);
                rates.push(format!("eps={eps},kappa={kappa},p={p}:{:.4}", r.unwrap_or(f64::NAN)));
            }
        }
    }
    let r1 = anisotropic_decay_probe(&b, &PerturbedCatMap::arnold(), 0.0, 1.0, 10).unwrap().r_fit.unwrap();
    let r2 = anisotropic_decay_probe(&b, &PerturbedCatMap::arnold(), 0.0, 2.0, 10).unwrap().r_fit.unwrap();
    let ordered = r2 < r1;
    let close = (r1 / lambda.powi(-1) - 1.0).abs() <= 0.1 && (r2 / lambda.powi(-2) - 1.0).abs() <= 0.1;
    let elapsed = t.elapsed();
    let passed = below_one && ordered && close;
    report(
        10,
        "anisotropic norm decay",
        passed,
        format!(
            "r_fit < 1 everywhere: {below_one}; pure r(1) {r1:.4} vs {:.4}, r(2) {r2:.4} vs {:.4}; [{}]",
            1.0 / lambda,
            lambda.powi(-2),
            rates.join(" ")
        ),
        elapsed,
    );
    assert!(passed);
}
