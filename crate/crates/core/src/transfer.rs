//! The pulsed-diffusion step `e^{kappa Laplacian} o L_f`.
//!
//! Two routes compute `L_f phi = phi o f^{-1}`:
//!
//! * [`general_transfer`] relabels modes through `A^{-T}` into an enlarged
//!   square, then applies each shear as a pointwise phase multiplication along
//!   one axis (one-dimensional FFTs on an oversampled line), and finally
//!   truncates to `[-K, K]^2`.
//! * [`general_transfer_sampled`] evaluates the trigonometric sum of `phi`
//!   at `f^{-1}(x_j)` on an oversampled 2D grid and transforms back. It is
//!   slow and serves as an independent reference.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{sobolev_seminorm, ScalarField, Wavenumber};
use crate::maps::{IntMatrix2, PerturbedCatMap, ShearAxis, ShearStep};

/// Heat multiplier constant: `e^{kappa Laplacian} e_k = exp(-4 pi^2 kappa |k|^2) e_k`.
pub const HEAT_CONSTANT: f64 = 4.0 * PI * PI;

/// A transferred field together with the squared mass that fell outside the
/// stored modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Transferred {
    pub field: ScalarField,
    pub discarded: f64,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn relabel_into(phi: &ScalarField, ait: &IntMatrix2, out: &mut ScalarField) -> f64 {
    let mut lost = 0.0;
    for (k, c) in phi.iter_nonzero() {
        match ait.apply(k) {
            Some(img) if out.contains(img) => {
                let i = out.index(img);
                out.coeffs_mut()[i] = c;
            }
            _ => lost += c.norm_sqr(),
        }
    }
    lost
}

/// Exact transfer by a pure cat map; the mode at `k` moves to `A^{-T} k`.
/// Fails if any image leaves the stored square.
pub fn cat_transfer(phi: &ScalarField, a: &IntMatrix2) -> Result<ScalarField> {
    let t = cat_transfer_lossy(phi, a);
    if t.discarded > 0.0 {
        return Err(Error::TruncationOverflow { step: 0, lost_mass: t.discarded });
    }
    Ok(t.field)
}

/// As [`cat_transfer`] but drops escaping modes and reports their mass.
pub fn cat_transfer_lossy(phi: &ScalarField, a: &IntMatrix2) -> Transferred {
    let ait = a.inverse_transpose();
    let mut out = ScalarField::zeros_with_grid(phi.max_mode(), phi.grid_size()).expect("same shape");
    let discarded = relabel_into(phi, &ait, &mut out);
    Transferred { field: out, discarded }
}

fn sup_row_sum(m: &IntMatrix2) -> usize {
    m.rows().iter().map(|r| (r[0].unsigned_abs() + r[1].unsigned_abs()) as usize).max().unwrap_or(1)
}

/// Number of Bessel sidebands carrying non-negligible mass for a phase
/// `exp(i z sin(theta))`.
fn sideband_reach(z: f64) -> usize {
    let z = z.abs();
    (z + 10.0 * z.cbrt() + 30.0).ceil() as usize
}

/// Applies `L_S psi = psi o S^{-1}` for one shear, in place on a field whose
/// square is large enough to hold the sidebands that matter.
fn apply_shear(field: &mut ScalarField, shear: &ShearStep) {
    if shear.amplitude == 0.0 {
        return;
    }
    let side = field.side();
    let m = field.max_mode() as i64;
    let freq = shear.frequency as f64;
    let max_z = 2.0 * PI * m as f64 * shear.amplitude.abs();
    let reach = sideband_reach(max_z) * shear.frequency as usize;
    let len = (2 * side + 2 * reach).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let inv = planner.plan_fft(len, FftDirection::Inverse);
    let fwd = planner.plan_fft(len, FftDirection::Forward);
    let scale = 1.0 / len as f64;
    // sin(2 pi m s_j) at the line samples s_j = j / len
    let sines: Vec<f64> = (0..len).map(|j| (2.0 * PI * freq * j as f64 / len as f64).sin()).collect();

    // A line holds the coefficients along the sheared direction for one fixed
    // transverse wavenumber `q`; the phase is exp(-2 pi i q eps sin(2 pi m s)).
    let transform_line = |q: i64, line: &mut [Complex64]| {
        if q == 0 || line.iter().all(|c| *c == ZERO) {
            return;
        }
        let mut buf = vec![ZERO; len];
        for (idx, c) in line.iter().enumerate() {
            let k = idx as i64 - m;
            buf[k.rem_euclid(len as i64) as usize] = *c;
        }
        inv.process(&mut buf);
        let z = -2.0 * PI * q as f64 * shear.amplitude;
        for (v, s) in buf.iter_mut().zip(&sines) {
            *v *= Complex64::from_polar(1.0, z * s);
        }
        fwd.process(&mut buf);
        for (idx, c) in line.iter_mut().enumerate() {
            let k = idx as i64 - m;
            *c = buf[k.rem_euclid(len as i64) as usize] * scale;
        }
    };

    match shear.axis {
        // horizontal: x -> x - eps sin(2 pi m y); transverse index kx, lines run over ky
        ShearAxis::Horizontal => {
            field
                .coeffs_mut()
                .par_chunks_exact_mut(side)
                .enumerate()
                .for_each(|(i, line)| transform_line(i as i64 - m, line));
        }
        ShearAxis::Vertical => {
            let coeffs = field.coeffs();
            let lines: Vec<Vec<Complex64>> = (0..side)
                .into_par_iter()
                .map(|j| {
                    let mut line: Vec<Complex64> = (0..side).map(|i| coeffs[i * side + j]).collect();
                    transform_line(j as i64 - m, &mut line);
                    line
                })
                .collect();
            let coeffs = field.coeffs_mut();
            for (j, line) in lines.into_iter().enumerate() {
                for (i, c) in line.into_iter().enumerate() {
                    coeffs[i * side + j] = c;
                }
            }
        }
    }
    field.zero_mean();
}

/// Galerkin truncation to `[-K, K]^2` of `phi o f^{-1}`.
pub fn general_transfer(phi: &ScalarField, map: &PerturbedCatMap) -> Transferred {
    if map.is_linear() {
        return cat_transfer_lossy(phi, map.matrix());
    }
    let ait = map.matrix().inverse_transpose();
    let k = phi.max_mode();
    let ext_mode = k * sup_row_sum(&ait);
    let mut work = ScalarField::zeros(ext_mode);
    let lost_relabel = relabel_into(phi, &ait, &mut work);
    debug_assert_eq!(lost_relabel, 0.0);
    for shear in map.shears() {
        apply_shear(&mut work, shear);
    }
    let (field, discarded) = work.resized(k);
    let field = field.with_grid_size(phi.grid_size()).expect("same shape");
    Transferred { field, discarded }
}

/// Reference route: sample `phi o f^{-1}` on a grid `oversample` times finer
/// than `phi.grid_size()`, transform, truncate.
pub fn general_transfer_sampled(phi: &ScalarField, map: &PerturbedCatMap, oversample: usize) -> Transferred {
    let n = phi.grid_size() * oversample.max(1);
    let modes: Vec<(Wavenumber, Complex64)> = phi.iter_nonzero().collect();
    let kmax = phi.max_mode() as i64;

    let mut values: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let x = [(idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64];
            let y = map.inverse(x);
            let ex: Vec<Complex64> = (-kmax..=kmax).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * y[0])).collect();
            let ey: Vec<Complex64> = (-kmax..=kmax).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * y[1])).collect();
            modes.iter().fold(ZERO, |acc, (k, c)| acc + c * ex[(k.kx + kmax) as usize] * ey[(k.ky + kmax) as usize])
        })
        .collect();
    crate::field::grid_fft2(&mut values, n, FftDirection::Forward);
    let scale = 1.0 / (n * n) as f64;
    let mut out = ScalarField::zeros_with_grid(phi.max_mode(), phi.grid_size()).expect("same shape");
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            let k = Wavenumber::new(kx, ky);
            if k.is_zero() {
                continue;
            }
            let v = values[kx.rem_euclid(n as i64) as usize * n + ky.rem_euclid(n as i64) as usize] * scale;
            out.set(k, v).expect("in range");
        }
    }
    let discarded = (phi.l2_norm_sq() - out.l2_norm_sq()).max(0.0);
    Transferred { field: out, discarded }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa >= 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::param("kappa", format!("diffusivity must be finite and nonnegative, got {kappa}")))
    }
}

/// Heat semigroup `e^{kappa Laplacian}` as a Fourier multiplier.
pub fn heat(phi: &ScalarField, kappa: f64) -> Result<ScalarField> {
    check_kappa(kappa)?;
    let mut out = phi.clone();
    heat_in_place(&mut out, kappa);
    Ok(out)
}

/// Heat multiplier at `|k|^2 = r2`.
pub(crate) fn heat_factor(kappa: f64, r2: f64) -> f64 {
    (-HEAT_CONSTANT * kappa * r2).exp()
}

pub(crate) fn heat_in_place(phi: &mut ScalarField, kappa: f64) {
    if kappa == 0.0 {
        return;
    }
    let m = phi.max_mode() as i64;
    let side = phi.side();
    phi.coeffs_mut().par_chunks_exact_mut(side).enumerate().for_each(|(i, line)| {
        let kx = i as i64 - m;
        for (j, c) in line.iter_mut().enumerate() {
            let ky = j as i64 - m;
            let r2 = (kx * kx + ky * ky) as f64;
            *c *= heat_factor(kappa, r2);
        }
    });
}

/// One pulse `e^{kappa Laplacian} L_f phi`. Pure cat maps take the exact
/// relabeling path.
pub fn pulsed_step(phi: &ScalarField, map: &PerturbedCatMap, kappa: f64) -> Result<Transferred> {
    check_kappa(kappa)?;
    let mut t = general_transfer(phi, map);
    heat_in_place(&mut t.field, kappa);
    Ok(t)
}

/// How pulse iteration treats mass that leaves the stored modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// Abort once a step discards more than `rel_tol * ||b||^2`.
    Strict { rel_tol: f64 },
    /// Keep going and only account for the loss.
    Discard,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Strict { rel_tol: 1e-12 }
    }
}

/// Norms of one pulse `phi_n = L_{f,kappa}^n b`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PulseNorms {
    pub n: usize,
    pub l2: f64,
    pub h_minus1: f64,
    pub h1: f64,
    /// Mass discarded by truncation when this pulse was produced.
    pub discarded: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseRecord {
    pub norms: PulseNorms,
    pub field: ScalarField,
}

impl PulseRecord {
    pub fn n(&self) -> usize {
        self.norms.n
    }
}

/// Stream of pulses `phi_0 = b, phi_{n+1} = pulsed_step(phi_n)`.
pub struct Pulses<'a> {
    map: &'a PerturbedCatMap,
    kappa: f64,
    n_max: usize,
    policy: TruncationPolicy,
    reference_mass: f64,
    next_n: usize,
    current: Option<ScalarField>,
    done: bool,
}

impl<'a> Pulses<'a> {
    pub fn with_policy(mut self, policy: TruncationPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn record(n: usize, field: ScalarField, discarded: f64) -> PulseRecord {
        PulseRecord {
            norms: PulseNorms {
                n,
                l2: field.l2_norm(),
                h_minus1: sobolev_seminorm(&field, -1.0),
                h1: sobolev_seminorm(&field, 1.0),
                discarded,
            },
            field,
        }
    }
}

impl Iterator for Pulses<'_> {
    type Item = Result<PulseRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.next_n > self.n_max {
            return None;
        }
        let n = self.next_n;
        self.next_n += 1;
        let current = self.current.take()?;
        if n == 0 {
            self.current = Some(current.clone());
            return Some(Ok(Self::record(0, current, 0.0)));
        }
        let step = match pulsed_step(&current, self.map, self.kappa) {
            Ok(t) => t,
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        };
        if let TruncationPolicy::Strict { rel_tol } = self.policy {
            if step.discarded > rel_tol * self.reference_mass {
                self.done = true;
                return Some(Err(Error::TruncationOverflow { step: n, lost_mass: step.discarded }));
            }
        }
        self.current = Some(step.field.clone());
        Some(Ok(Self::record(n, step.field, step.discarded)))
    }
}

/// Iterates pulses `0..=n_max` with the strict truncation policy.
pub fn iterate_pulses<'a>(b: &ScalarField, map: &'a PerturbedCatMap, kappa: f64, n_max: usize) -> Result<Pulses<'a>> {
    check_kappa(kappa)?;
    Ok(Pulses {
        map,
        kappa,
        n_max,
        policy: TruncationPolicy::default(),
        reference_mass: b.l2_norm_sq(),
        next_n: 0,
        current: Some(b.clone()),
        done: false,
    })
}

/// Collects pulse norms until the stream ends or fails, returning the norms
/// gathered so far and the error that stopped it, if any.
pub fn collect_norms(pulses: Pulses<'_>) -> (Vec<PulseNorms>, Option<Error>) {
    let mut out = Vec::new();
    for item in pulses {
        match item {
            Ok(rec) => out.push(rec.norms),
            Err(e) => return (out, Some(e)),
        }
    }
    (out, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::analyze_matrix;

    fn cat() -> IntMatrix2 {
        IntMatrix2::from_rows([[2, 1], [1, 1]])
    }

    fn mode(kx: i64, ky: i64, k: usize) -> ScalarField {
        ScalarField::pure_mode(Wavenumber::new(kx, ky), k).unwrap()
    }

    #[test]
    fn cat_transfer_follows_pulse_sequence() {
        let a = cat();
        let f1 = cat_transfer(&mode(1, 0, 16), &a).unwrap();
        assert_eq!(f1, mode(1, -1, 16));
        let f2 = cat_transfer(&f1, &a).unwrap();
        assert_eq!(f2, mode(2, -3, 16));
        let f3 = cat_transfer(&f2, &a).unwrap();
        assert_eq!(f3, mode(5, -8, 16));
    }

    #[test]
    fn cat_transfer_overflow_carries_lost_mass() {
        let f = mode(5, -8, 16).scaled(Complex64::new(2.0, 0.0));
        match cat_transfer(&f, &cat()) {
            Err(Error::TruncationOverflow { lost_mass, .. }) => assert_eq!(lost_mass, 4.0),
            other => panic!("{other:?}"),
        }
        let t = cat_transfer_lossy(&f, &cat());
        assert!(t.field.is_zero());
        assert_eq!(t.discarded, 4.0);
    }

    #[test]
    fn heat_on_eigenfunction() {
        let f = heat(&mode(1, 0, 8), 0.01).unwrap();
        let amp = f.get(Wavenumber::new(1, 0)).re;
        assert!((amp - (-0.04 * PI * PI).exp()).abs() < 1e-15);
        assert!((amp - 0.6738255).abs() < 1e-7);
        assert_eq!(heat(&mode(1, 0, 8), 0.0).unwrap(), mode(1, 0, 8));
        assert!(matches!(heat(&mode(1, 0, 8), -1e-3), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn two_pulse_multiplier() {
        let map = PerturbedCatMap::arnold();
        let kappa = 1e-3;
        let p1 = pulsed_step(&mode(1, 0, 16), &map, kappa).unwrap().field;
        let p2 = pulsed_step(&p1, &map, kappa).unwrap().field;
        let amp = p2.get(Wavenumber::new(2, -3));
        let expect = (-HEAT_CONSTANT * kappa * (2.0 + 13.0)).exp();
        assert!((amp.re - expect).abs() < 1e-15);
        assert!((amp.norm_sqr() - 0.3059442).abs() < 1e-7);
        assert_eq!(p2.iter_nonzero().count(), 1);
    }

    #[test]
    fn heat_applies_after_transport() {
        // heat o L_f differs from L_f o heat because the multiplier moves with the mode
        let map = PerturbedCatMap::arnold();
        let kappa = 1e-2;
        let after = pulsed_step(&mode(1, 0, 8), &map, kappa).unwrap().field;
        let before = cat_transfer(&heat(&mode(1, 0, 8), kappa).unwrap(), map.matrix()).unwrap();
        let k1 = Wavenumber::new(1, -1);
        assert!((after.get(k1).re - (-HEAT_CONSTANT * kappa * 2.0).exp()).abs() < 1e-15);
        assert!((before.get(k1).re - (-HEAT_CONSTANT * kappa).exp()).abs() < 1e-15);
    }

    #[test]
    fn linear_map_uses_exact_relabeling() {
        let map = PerturbedCatMap::new(cat(), vec![ShearStep::horizontal(0.0, 1)]).unwrap();
        let f = mode(3, 1, 16);
        assert_eq!(general_transfer(&f, &map).field, cat_transfer(&f, &cat()).unwrap());
    }

    #[test]
    fn sampled_route_reproduces_cat_transfer() {
        let map = PerturbedCatMap::arnold();
        let f = ScalarField::from_modes(
            6,
            [(Wavenumber::new(1, 0), Complex64::new(1.0, 0.5)), (Wavenumber::new(-1, 2), Complex64::new(-0.3, 0.2))],
        )
        .unwrap();
        let exact = cat_transfer(&f, &cat()).unwrap();
        let sampled = general_transfer_sampled(&f, &map, 2).field;
        assert!(sampled.l2_distance(&exact).unwrap() < 1e-10);
    }

    #[test]
    fn inverse_map_round_trip_returns_field() {
        // f_A followed by f_A^{-1}: L_{f_A^{-1}} L_{f_A} = id
        let a = cat();
        let ainv = PerturbedCatMap::cat(a.inverse()).unwrap();
        let f = ScalarField::from_modes(
            12,
            [(Wavenumber::new(1, 1), Complex64::new(0.2, -1.0)), (Wavenumber::new(-2, 1), Complex64::new(0.7, 0.0))],
        )
        .unwrap();
        let there = general_transfer_sampled(&f, &PerturbedCatMap::cat(a).unwrap(), 2).field;
        let back = general_transfer_sampled(&there, &ainv, 2).field;
        assert!(back.l2_distance(&f).unwrap() < 1e-9);
    }

    #[test]
    fn shear_single_mode_matches_bessel_sidebands() {
        // e_k o S^{-1} for a horizontal shear has coefficients J_j(-2 pi kx eps)
        // at k + (0, j m); check the first sidebands against series values.
        let eps = 0.01;
        let map = PerturbedCatMap::new(
            IntMatrix2::from_rows([[2, 1], [1, 1]]),
            vec![ShearStep::horizontal(eps, 1)],
        )
        .unwrap();
        let f = mode(1, 0, 24);
        let t = general_transfer(&f, &map);
        // A^{-T}(1,0) = (1,-1); z = -2 pi * 1 * eps
        let z: f64 = -2.0 * PI * eps;
        let j0 = 1.0 - z * z / 4.0 + z.powi(4) / 64.0 - z.powi(6) / 2304.0;
        let j1 = z / 2.0 - z.powi(3) / 16.0 + z.powi(5) / 384.0;
        assert!((t.field.get(Wavenumber::new(1, -1)).re - j0).abs() < 1e-12);
        assert!((t.field.get(Wavenumber::new(1, 0)).re - j1).abs() < 1e-12);
        assert!((t.field.get(Wavenumber::new(1, -2)).re + j1).abs() < 1e-12);
        assert!((t.field.l2_norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn spectral_and_sampled_routes_agree_for_shears() {
        let map = PerturbedCatMap::new(cat(), vec![ShearStep::horizontal(0.02, 1), ShearStep::vertical(0.015, 2)]).unwrap();
        let f = ScalarField::from_modes(
            10,
            [
                (Wavenumber::new(1, 0), Complex64::new(1.0, 0.0)),
                (Wavenumber::new(0, 2), Complex64::new(0.3, -0.4)),
                (Wavenumber::new(-2, 1), Complex64::new(0.0, 0.5)),
            ],
        )
        .unwrap();
        let fast = general_transfer(&f, &map).field;
        let slow = general_transfer_sampled(&f, &map, 4).field;
        let err = fast.l2_distance(&slow).unwrap();
        assert!(err < 1e-9, "{err}");
        assert!(fast.l2_norm() <= f.l2_norm() * (1.0 + 1e-8));
    }

    #[test]
    fn pulse_iteration_norms() {
        let map = PerturbedCatMap::arnold();
        let b = mode(1, 0, 64);
        let (norms, err) = collect_norms(iterate_pulses(&b, &map, 0.0, 4).unwrap());
        assert!(err.is_none());
        assert_eq!(norms.len(), 5);
        for r in &norms {
            assert!((r.l2 - 1.0).abs() < 1e-15);
        }
        assert!((norms[3].h_minus1 - 89f64.sqrt().recip()).abs() < 1e-15);
        assert!((norms[3].h_minus1 - 0.1060).abs() < 1e-4);
        let log_exp = analyze_matrix(&cat()).unwrap().log_expansion;
        for r in &norms {
            assert!(r.h1 <= (log_exp * r.n as f64).exp() * 1.01f64.powi(r.n as i32));
        }
    }

    #[test]
    fn strict_iteration_stops_at_last_valid_step() {
        let map = PerturbedCatMap::arnold();
        let b = mode(1, 0, 16);
        let (norms, err) = collect_norms(iterate_pulses(&b, &map, 0.0, 10).unwrap());
        // k_4 = (13,-21) no longer fits in [-16,16]^2
        assert_eq!(norms.len(), 4);
        assert!(matches!(err, Some(Error::TruncationOverflow { step: 4, .. })));
    }
}
