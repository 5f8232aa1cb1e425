//! Stationary power away from the stable line decays faster than any power
//! of `|k|`; the profile drops to round-off within a few radial bins.

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::{IntMatrix2, PerturbedCatMap, ShearStep};
use batchelor::stationary::stationary_spectrum;

fn main() -> batchelor::Result<()> {
    let a = IntMatrix2::from_rows([[2, 1], [1, 1]]);
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 128)?;
    for eps in [1e-3, 1e-2] {
        let map = PerturbedCatMap::new(a, vec![ShearStep::horizontal(eps, 1)])?;
        let spec = stationary_spectrum(&b, &map, 1e-6, 1e-12)?;
        let profile = spec.sector_profile(map.hyperbolic().v_st, 0.3, (8.0, 64.0))?;
        println!("eps = {eps}");
        for (r, p) in profile.rows.iter().filter(|(r, _)| *r >= 4) {
            println!("  |k| in [{r}, {}): {p:.3e}", r + 1);
        }
        println!("  {} bins at round-off", profile.skipped.len());
        match profile.fit {
            Some(fit) => println!("  log-log exponent over [8, 64]: {:.2}", fit.slope),
            None => println!("  fewer than two resolved bins in [8, 64]"),
        }
    }
    Ok(())
}
