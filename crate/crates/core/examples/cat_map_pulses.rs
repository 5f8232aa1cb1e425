//! Pulses of Arnold's cat map from `b = e_(1,0)`: the forcing mode is carried
//! along the Fibonacci wavenumbers while heat drains it.
//!
//! `cargo run --release --example cat_map_pulses -- [kappa]`

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::PerturbedCatMap;
use batchelor::stats::{centroid_variance_track, pulse_sequence};
use batchelor::transfer::{collect_norms, iterate_pulses};

fn main() -> batchelor::Result<()> {
    let kappa: f64 = std::env::args().nth(1).map_or(1e-3, |s| s.parse().expect("kappa"));
    let map = PerturbedCatMap::arnold();
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 128)?;

    let sites = pulse_sequence(map.matrix(), Wavenumber::new(1, 0), 8)?;
    let (norms, stopped) = collect_norms(iterate_pulses(&b, &map, kappa, 10)?);
    println!("{:>3} {:>12} {:>14} {:>14}", "n", "k_n", "||phi_n||^2", "||phi_n||_H1");
    for (row, k) in norms.iter().zip(&sites) {
        println!("{:>3} {:>12} {:>14.6e} {:>14.6e}", row.n, format!("({},{})", k.kx, k.ky), row.l2 * row.l2, row.h1);
    }
    if let Some(e) = stopped {
        println!("stopped: {e}");
    }

    // The sparse track follows the single occupied mode past the box.
    let track = centroid_variance_track(&b, &map, 0.0, 12)?;
    let last = track.rows.last().expect("track has rows");
    println!("kappa = 0 track through n = {}: drift {}, variance {}", last.n, last.drift, last.variance);
    Ok(())
}
