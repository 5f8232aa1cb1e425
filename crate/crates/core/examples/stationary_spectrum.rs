//! Stationary spectrum `E|g(k)|^2` of the randomly forced cat map, written
//! as `spectrum.csv` and summarized by its largest modes.
//!
//! `cargo run --release --example stationary_spectrum -- [out_dir]`

use std::fs::File;
use std::path::PathBuf;

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::{PerturbedCatMap, ShearStep};
use batchelor::stationary::stationary_spectrum;

fn main() -> batchelor::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/stationary".into()));
    std::fs::create_dir_all(&out)?;

    let map = PerturbedCatMap::new(PerturbedCatMap::arnold().matrix().to_owned(), vec![ShearStep::horizontal(1e-2, 1)])?;
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 64)?;
    let spec = stationary_spectrum(&b, &map, 1e-4, 1e-12)?;

    println!("pulses summed {}, certified tail {:.3e}, truncated mass {:.3e}", spec.n_used, spec.tail_bound, spec.discarded_total);
    println!("total power {:.6} (series {:.6})", spec.total_power(), spec.series_mass());

    let mut top: Vec<(Wavenumber, f64)> = spec.iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (k, p) in top.iter().take(8) {
        println!("  ({:>4},{:>4})  {p:.6e}", k.kx, k.ky);
    }
    spec.write_csv(File::create(out.join("spectrum.csv"))?)?;
    println!("wrote {}", out.join("spectrum.csv").display());
    Ok(())
}
