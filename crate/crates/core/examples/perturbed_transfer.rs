//! Transfer operator of a sheared cat map `x -> A x + eps sin(2 pi m y)`
//! and the checks that keep it honest: isometry up to truncation, cone
//! invariance, and the expansion bound `Lambda`.

use batchelor::field::{sobolev_seminorm, ScalarField, Wavenumber};
use batchelor::maps::{cone_invariance, log_expansion_estimate, IntMatrix2, PerturbedCatMap, ShearStep};
use batchelor::transfer::{cat_transfer, general_transfer};

fn main() -> batchelor::Result<()> {
    let a = IntMatrix2::from_rows([[2, 1], [1, 1]]);
    let phi = ScalarField::from_modes(64, [(Wavenumber::new(1, 0), 1.0.into()), (Wavenumber::new(0, 2), num_complex::Complex64::new(0.0, 0.5))])?;

    for eps in [0.0, 1e-3, 1e-2, 5e-2] {
        let map = PerturbedCatMap::new(a, vec![ShearStep::horizontal(eps, 1), ShearStep::vertical(eps / 2.0, 2)])?;
        let t = general_transfer(&phi, &map);
        let exact = cat_transfer(&phi, &a)?;
        let cone = cone_invariance(&map, 64)?;
        println!(
            "eps {eps:.0e}: ||L phi||^2 + lost = {:.15}, distance from pure cat image {:.3e}, H1 ratio {:.4} <= e^Lambda {:.4}, cone ratio {:.3} ({})",
            t.field.l2_norm_sq() + t.discarded,
            t.field.l2_distance(&exact)?,
            sobolev_seminorm(&t.field, 1.0) / sobolev_seminorm(&phi, 1.0),
            log_expansion_estimate(&map).exp(),
            cone.max_ratio,
            if cone.holds() { "invariant" } else { "not invariant" }
        );
    }
    Ok(())
}
