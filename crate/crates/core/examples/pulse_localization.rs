//! Off-pulse mass below a radius shrinks as the shear amplitude and the
//! diffusivity go to zero together.

use batchelor::field::{ScalarField, Wavenumber};
use batchelor::maps::{IntMatrix2, PerturbedCatMap, ShearStep};
use batchelor::stationary::stationary_spectrum;
use batchelor::stats::pulse_sequence;

fn main() -> batchelor::Result<()> {
    let a = IntMatrix2::from_rows([[2, 1], [1, 1]]);
    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 128)?;
    let pulses = pulse_sequence(&a, Wavenumber::new(1, 0), 8)?;
    let radius = 20.0;
    for scale in [1.0, 0.3, 0.1, 0.03] {
        let (eps, kappa) = (1e-3 * scale, 1e-4 * scale);
        let map = PerturbedCatMap::new(a, vec![ShearStep::horizontal(eps, 1)])?;
        let spec = stationary_spectrum(&b, &map, kappa, 1e-12)?;
        let off = spec.offpulse_mass(&pulses, radius)?;
        println!("eps {eps:.1e} kappa {kappa:.1e}: off-pulse fraction below {radius} = {:.3e}", off / spec.mass_below(radius));
    }
    Ok(())
}
