//! Cumulative law: `E||P_{<=N} g||^2` grows like `log N`, bracketed by
//! `log N / (2 Lambda)` and `2 log N / gamma`.

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::{log_expansion_estimate, PerturbedCatMap};
use batchelor::numerics::fit_line;
use batchelor::probes::uniform_decay_rate;
use batchelor::stationary::{cumulative_rows, stationary_spectrum};

fn main() -> batchelor::Result<()> {
    let map = PerturbedCatMap::arnold();
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 128)?;
    let kappa = 1e-6;
    let spec = stationary_spectrum(&b, &map, kappa, 1e-12)?;

    let lambda_est = log_expansion_estimate(&map);
    let gamma = uniform_decay_rate(&b, &map, &[0.0, kappa], 20)?.gamma;
    let radii: Vec<f64> = (2..=128).map(f64::from).collect();
    let curve = spec.cumulative_curve(&radii)?;

    println!("{:>5} {:>10} {:>10} {:>10}", "N", "value", "lower", "upper");
    for row in cumulative_rows(&curve, lambda_est, gamma).iter().filter(|r| r.n.log2().fract() == 0.0) {
        println!("{:>5} {:>10.4} {:>10.4} {:>10.4}", row.n, row.value, row.lower_ref, row.upper_ref);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve.iter().filter(|(n, _)| (10.0..=64.0).contains(n)).map(|(n, v)| (n.ln(), *v)).unzip();
    if let Some(fit) = fit_line(&xs, &ys) {
        println!("slope against log N over [10, 64]: {:.4}", fit.slope);
        println!("bracket [1/(2 Lambda), 2/gamma] = [{:.4}, {:.4}]", 0.5 / lambda_est, 2.0 / gamma);
    }
    Ok(())
}
