//! Anisotropic norms weight the unstable cone by `|k|^{2p}` and the rest by
//! `|k|^{-2p}`. Along pulses they decay at rate `lambda^{-p}`, while the
//! isotropic `H^{-1}` norm decays at `lambda^{-1}` only.

use std::fs::File;
use std::path::PathBuf;

use batchelor::field::{anisotropic_norm, dyadic_cone_norm, ScalarField, Wavenumber};
use batchelor::maps::PerturbedCatMap;
use batchelor::probes::anisotropic_decay_probe;

fn main() -> batchelor::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/anisotropic".into()));
    std::fs::create_dir_all(&out)?;
    let map = PerturbedCatMap::arnold();
    let hyp = map.hyperbolic();
    let lambda = hyp.lambda;

    let phi = ScalarField::from_modes(32, [(Wavenumber::new(3, 2), 1.0.into()), (Wavenumber::new(1, -2), 0.5.into())])?;
    for p in [1.0, 2.0] {
        let a = anisotropic_norm(&phi, p, hyp)?;
        let d = dyadic_cone_norm(&phi, p, hyp)?;
        println!("p = {p}: anisotropic {a:.5}, dyadic {d:.5}, ratio {:.4} (within [2^-p, 2^p])", d / a);
    }

    let b = ScalarField::pure_mode(Wavenumber::new(1, 0), 128)?;
    for p in [1.0, 2.0] {
        let probe = anisotropic_decay_probe(&b, &map, 0.0, p, 10)?;
        println!("p = {p}: r_fit {:?}, lambda^-p = {:.4}", probe.r_fit, lambda.powf(-p));
        probe.write_csv(File::create(out.join(format!("probe_p{p}.csv")))?)?;
    }
    Ok(())
}
