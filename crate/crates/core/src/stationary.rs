//! Stationary statistics of the forced pulsed-diffusion chain.
//!
//! With IID unit-variance forcing `omega_n b`, the stationary state is
//! `g = sum_n omega_n phi_n` where `phi_n = L_{f,kappa}^n b`, so for every
//! linear functional the stationary second moment is a deterministic series:
//! `E|g(k)|^2 = sum_n |phi_n(k)|^2`. Everything here aggregates that series.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{angle_to_line, ScalarField, Wavenumber};
use crate::numerics::{fit_line, fmt17, pairwise_sum, LineFit};
use crate::transfer::{iterate_pulses, PulseNorms, TruncationPolicy};

/// Steps beyond which an uncertified tail is reported as an error.
pub const N_CAP: usize = 500;
/// The decay rate behind the tail bound is refit this often, over a trailing
/// window of the same length.
pub const REFIT_EVERY: usize = 10;

/// `E|g(k)|^2` on the stored box, with the bookkeeping of how it was summed.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySpectrum {
    max_mode: usize,
    power: Vec<f64>,
    /// Number of pulses summed (`phi_0 .. phi_{n_used - 1}`).
    pub n_used: usize,
    /// Upper bound on `sum_{n >= n_used} ||phi_n||^2`.
    pub tail_bound: f64,
    pub per_pulse: Vec<PulseNorms>,
    /// Total mass pushed out of the box over all steps.
    pub discarded_total: f64,
    /// Rate used for the final tail bound; `None` when the series ended
    /// because the field vanished.
    pub gamma_fit: Option<f64>,
    pub kappa: f64,
    pub source_mass: f64,
}

/// Sums the pulse series until its tail is certified below `tol`.
///
/// Each pulse is truncated to the source's box; modes that leave are dropped
/// and their mass is accumulated in `discarded_total`. The tail after step
/// `n` is bounded by Bernstein on the box (`||phi||^2 <= 2K^2 ||phi||_{-1}^2`)
/// times a geometric series in the fitted `H^{-1}` rate.
pub fn stationary_spectrum(b: &ScalarField, map: &crate::maps::PerturbedCatMap, kappa: f64, tol: f64) -> Result<StationarySpectrum> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::param("kappa", format!("stationary series needs kappa > 0, got {kappa}")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }
    if b.is_zero() {
        return Err(Error::ZeroField);
    }
    let k = b.max_mode();
    let bernstein = 2.0 * (k as f64).powi(2);
    let mut power = vec![0.0; b.coeffs().len()];
    let mut per_pulse = Vec::new();
    let mut discarded_total = 0.0;
    let mut gamma: Option<f64> = None;
    let mut tail_bound = f64::INFINITY;

    let pulses = iterate_pulses(b, map, kappa, N_CAP)?.with_policy(TruncationPolicy::Discard);
    for item in pulses {
        let rec = item?;
        discarded_total += rec.norms.discarded;
        if rec.field.is_zero() {
            tail_bound = 0.0;
            gamma = None;
            break;
        }
        power.par_iter_mut().zip(rec.field.coeffs().par_iter()).for_each(|(p, c)| *p += c.norm_sqr());
        per_pulse.push(rec.norms);

        let n = rec.n();
        if n >= REFIT_EVERY && n % REFIT_EVERY == 0 {
            gamma = trailing_rate(&per_pulse[per_pulse.len() - REFIT_EVERY..]);
        }
        if let Some(g) = gamma {
            tail_bound = bernstein * rec.norms.h_minus1.powi(2) * (-2.0 * g).exp() / (1.0 - (-2.0 * g).exp());
            if tail_bound < tol {
                break;
            }
        }
    }
    let n_used = per_pulse.len();
    if tail_bound >= tol {
        return Err(Error::TailNotCertified { n_cap: N_CAP, tail_bound });
    }
    Ok(StationarySpectrum {
        max_mode: k,
        power,
        n_used,
        tail_bound,
        per_pulse,
        discarded_total,
        gamma_fit: gamma,
        kappa,
        source_mass: b.l2_norm_sq(),
    })
}

/// `-slope` of `log ||phi_n||_{-1}` over the window, if positive.
fn trailing_rate(window: &[PulseNorms]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        window.iter().filter(|r| r.h_minus1 > 0.0).map(|r| (r.n as f64, r.h_minus1.ln())).unzip();
    let g = -fit_line(&xs, &ys)?.slope;
    (g > 0.0 && g.is_finite()).then_some(g)
}

/// Per-bin sector maxima with a log-log fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorProfile {
    /// `(r, max power over r <= |k| < r + 1)` for bins that hold sector power.
    pub rows: Vec<(usize, f64)>,
    /// Bins with sector modes but no power above the precision floor.
    pub skipped: Vec<usize>,
    /// Fit of `log max_power` against `log r` over the requested range.
    pub fit: Option<LineFit>,
}

/// Sector maxima below this fraction of the source mass are treated as
/// round-off and skipped. Per-coefficient rounding error scales with the
/// largest coefficient, which the source mass bounds.
pub const SECTOR_FLOOR: f64 = 1e-30;

impl StationarySpectrum {
    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    fn side(&self) -> usize {
        2 * self.max_mode + 1
    }

    fn mode_at(&self, i: usize) -> Wavenumber {
        let side = self.side();
        let k = self.max_mode as i64;
        Wavenumber::new((i / side) as i64 - k, (i % side) as i64 - k)
    }

    pub fn power(&self, k: Wavenumber) -> f64 {
        let km = self.max_mode as i64;
        if k.kx.abs() > km || k.ky.abs() > km {
            return 0.0;
        }
        self.power[(k.kx + km) as usize * self.side() + (k.ky + km) as usize]
    }

    /// Modes with nonzero power, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (Wavenumber, f64)> + '_ {
        self.power.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, &p)| (self.mode_at(i), p))
    }

    pub fn total_power(&self) -> f64 {
        pairwise_sum(&self.power)
    }

    /// `sum_n ||phi_n||^2` over the summed pulses.
    pub fn series_mass(&self) -> f64 {
        let sq: Vec<f64> = self.per_pulse.iter().map(|r| r.l2 * r.l2).collect();
        pairwise_sum(&sq)
    }

    /// More than a millionth of the source mass left the box.
    pub fn truncation_flagged(&self) -> bool {
        self.discarded_total > 1e-6 * self.source_mass
    }

    fn sum_where(&self, pred: impl Fn(Wavenumber) -> bool) -> f64 {
        let v: Vec<f64> = self.iter().filter(|(k, _)| pred(*k)).map(|(_, p)| p).collect();
        pairwise_sum(&v)
    }

    fn check_radius(&self, name: &'static str, r: f64) -> Result<()> {
        if !(r <= self.max_mode as f64) {
            return Err(Error::param(name, format!("{r} exceeds the stored max mode {}", self.max_mode)));
        }
        Ok(())
    }

    /// `sum power` over `lo <= |k| < hi`.
    pub fn annulus_mass(&self, lo: f64, hi: f64) -> f64 {
        let (lo2, hi2) = (lo * lo, hi * hi);
        self.sum_where(|k| {
            let r2 = k.norm_sq();
            lo2 <= r2 && r2 < hi2
        })
    }

    /// `E ||P_{<=N} g||^2` for each `N`, as `(N, value)`.
    pub fn cumulative_curve(&self, n_list: &[f64]) -> Result<Vec<(f64, f64)>> {
        if n_list.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("n_list", "must be sorted ascending"));
        }
        for &n in n_list {
            if !(n >= 2.0) {
                return Err(Error::param("n_list", format!("radius {n} below 2")));
            }
            self.check_radius("n_list", n)?;
        }
        let mut by_radius: Vec<(f64, f64)> = self.iter().map(|(k, p)| (k.norm_sq(), p)).collect();
        by_radius.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Vec::with_capacity(n_list.len());
        let mut acc = 0.0;
        let mut j = 0;
        for &n in n_list {
            while j < by_radius.len() && by_radius[j].0 <= n * n {
                acc += by_radius[j].1;
                j += 1;
            }
            out.push((n, acc));
        }
        Ok(out)
    }

    /// Masses of the shells `base^l <= |k| < base^(l+1)` for `l = 0..=ell_max`.
    pub fn shell_masses(&self, base: f64, ell_max: u32) -> Result<Vec<(u32, f64)>> {
        if !(base > 1.0) {
            return Err(Error::param("base", format!("shell base must exceed 1, got {base}")));
        }
        self.check_radius("ell_max", base.powi(ell_max as i32 + 1))?;
        Ok((0..=ell_max)
            .map(|l| (l, self.annulus_mass(base.powi(l as i32), base.powi(l as i32 + 1))))
            .collect())
    }

    /// Largest shell index whose outer radius stays within `limit`.
    pub fn complete_shells(base: f64, limit: f64) -> Option<u32> {
        let top = (limit.ln() / base.ln()).floor() - 1.0;
        (top >= 0.0).then_some(top as u32)
    }

    /// Maxima of power at angle `>= min_angle` from the line spanned by
    /// `axis`, in unit-width radial bins, with a log-log fit over
    /// `fit_range = (r_lo, r_hi)`.
    pub fn sector_profile(&self, axis: [f64; 2], min_angle: f64, fit_range: (f64, f64)) -> Result<SectorProfile> {
        if !(min_angle > 0.0 && min_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::param("min_angle", format!("must lie in (0, pi/2), got {min_angle}")));
        }
        let nbins = (self.max_mode as f64 * std::f64::consts::SQRT_2).ceil() as usize + 1;
        let mut best = vec![0.0f64; nbins];
        let mut seen = vec![false; nbins];
        for (i, &p) in self.power.iter().enumerate() {
            let k = self.mode_at(i);
            if k.is_zero() || angle_to_line(k, axis) < min_angle {
                continue;
            }
            let bin = k.norm().floor() as usize;
            seen[bin] = true;
            best[bin] = best[bin].max(p);
        }
        let floor = SECTOR_FLOOR * self.source_mass;
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for r in 0..nbins {
            if !seen[r] {
                continue;
            }
            if best[r] > floor {
                rows.push((r, best[r]));
            } else {
                skipped.push(r);
            }
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|(r, _)| (*r as f64) >= fit_range.0 && (*r as f64) <= fit_range.1)
            .map(|(r, p)| ((*r as f64).ln(), p.ln()))
            .unzip();
        Ok(SectorProfile { fit: fit_line(&xs, &ys), rows, skipped })
    }

    /// Power below radius `r` (inclusive) that sits off the given pulses.
    pub fn offpulse_mass(&self, pulses: &[Wavenumber], r: f64) -> Result<f64> {
        self.check_radius("r", r)?;
        Ok(self.sum_where(|k| k.norm_sq() <= r * r && !pulses.contains(&k)))
    }

    /// `E ||P_sel g||^2` over the stored modes.
    pub fn selected_mass(&self, sel: &crate::field::ModeSelector) -> f64 {
        self.sum_where(|k| sel.contains(k))
    }

    /// Power with `|k| <= r`.
    pub fn mass_below(&self, r: f64) -> f64 {
        self.sum_where(|k| k.norm_sq() <= r * r)
    }

    /// Power at `|k| >= kappa^{-1/2}`.
    pub fn dissipative_mass(&self, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0) {
            return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
        }
        let r = kappa.powf(-0.5);
        self.check_radius("kappa", r)?;
        Ok(self.sum_where(|k| k.norm_sq() >= r * r))
    }

    /// `kappa * sum_n ||phi_{n+1}||_{H^1}^2` with the `4 pi^2` Laplacian
    /// normalization folded in; telescoping the heat step bounds it by `||b||^2`.
    pub fn dissipation_sum(&self) -> f64 {
        let v: Vec<f64> = self.per_pulse.iter().skip(1).map(|r| r.h1 * r.h1).collect();
        crate::transfer::HEAT_CONSTANT * 2.0 * self.kappa * pairwise_sum(&v)
    }

    /// `kx, ky, power` for every mode with nonzero power.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kx", "ky", "power"])?;
        for (k, p) in self.iter() {
            w.write_record([k.kx.to_string(), k.ky.to_string(), fmt17(p)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeRow {
    pub n: f64,
    pub value: f64,
    /// `log N / (2 Lambda)`
    pub lower_ref: f64,
    /// `2 log N / gamma`
    pub upper_ref: f64,
}

pub fn cumulative_rows(curve: &[(f64, f64)], log_expansion: f64, gamma: f64) -> Vec<CumulativeRow> {
    curve
        .iter()
        .map(|&(n, value)| CumulativeRow { n, value, lower_ref: n.ln() / (2.0 * log_expansion), upper_ref: 2.0 * n.ln() / gamma })
        .collect()
}

pub fn write_cumulative_csv<W: Write>(rows: &[CumulativeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "value", "lower_ref", "upper_ref"])?;
    for r in rows {
        w.write_record([fmt17(r.n), fmt17(r.value), fmt17(r.lower_ref), fmt17(r.upper_ref)])?;
    }
    w.flush()?;
    Ok(())
}

/// `ell, mass, reference` where the reference is `log L / log lambda`.
pub fn write_shells_csv<W: Write>(shells: &[(u32, f64)], reference: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ell", "mass", "reference"])?;
    for (l, m) in shells {
        w.write_record([l.to_string(), fmt17(*m), fmt17(reference)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sector_csv<W: Write>(profile: &SectorProfile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["radius_bin", "max_power"])?;
    for (r, p) in &profile.rows {
        w.write_record([r.to_string(), fmt17(*p)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{IntMatrix2, PerturbedCatMap, ShearStep};
    use crate::stats::pulse_sequence;
    use crate::transfer::HEAT_CONSTANT;

    fn cat() -> IntMatrix2 {
        IntMatrix2::from_rows([[2, 1], [1, 1]])
    }

    fn source(k: usize) -> ScalarField {
        ScalarField::pure_mode(Wavenumber::new(1, 0), k).unwrap()
    }

    fn pulses(n: usize) -> Vec<Wavenumber> {
        pulse_sequence(&cat(), Wavenumber::new(1, 0), n).unwrap()
    }

    #[test]
    fn pulse_power_is_product_of_heat_factors() {
        let kappa = 1e-3;
        let spec = stationary_spectrum(&source(128), &PerturbedCatMap::arnold(), kappa, 1e-12).unwrap();
        let ks = pulses(5);
        let mut expect = 1.0;
        for (n, k) in ks.iter().enumerate() {
            if n > 0 {
                expect *= (-2.0 * HEAT_CONSTANT * kappa * k.norm_sq()).exp();
            }
            let got = spec.power(*k);
            assert!((got - expect).abs() <= 1e-10 * expect, "n={n} {got} vs {expect}");
        }
        assert!((spec.power(ks[2]) - 0.3059442).abs() < 1e-7);
        assert_eq!(spec.offpulse_mass(&ks, 128.0).unwrap(), 0.0);
        assert_eq!(spec.iter().count(), 6);
        assert!((spec.total_power() - spec.series_mass()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let map = PerturbedCatMap::arnold();
        assert!(matches!(stationary_spectrum(&source(8), &map, 0.0, 1e-9), Err(Error::InvalidParameter { .. })));
        assert!(matches!(stationary_spectrum(&source(8), &map, -1.0, 1e-9), Err(Error::InvalidParameter { .. })));
        assert!(matches!(stationary_spectrum(&source(8), &map, 1e-3, 0.0), Err(Error::InvalidParameter { .. })));
        let spec = stationary_spectrum(&source(32), &map, 1e-3, 1e-9).unwrap();
        assert!(spec.cumulative_curve(&[10.0, 40.0]).is_err());
        assert!(spec.cumulative_curve(&[20.0, 10.0]).is_err());
        assert!(spec.shell_masses(2.0, 5).is_err());
        assert!(spec.sector_profile([1.0, 0.0], std::f64::consts::FRAC_PI_2, (1.0, 10.0)).is_err());
        assert!(spec.dissipative_mass(1e-4).is_err());
    }

    #[test]
    fn cumulative_counts_pulses() {
        let kappa = 1e-6;
        let spec = stationary_spectrum(&source(128), &PerturbedCatMap::arnold(), kappa, 1e-12).unwrap();
        let curve = spec.cumulative_curve(&[10.0, 25.0, 65.0]).unwrap();
        // Closed form: sum over pulses inside the ball of the heat products.
        let ks = pulses(5);
        let mut factor = 1.0;
        let mut acc = vec![1.0];
        for k in &ks[1..] {
            factor *= (-2.0 * HEAT_CONSTANT * kappa * k.norm_sq()).exp();
            acc.push(acc.last().unwrap() + factor);
        }
        for ((_, v), e) in curve.iter().zip([acc[3], acc[4], acc[5]]) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        let nearly_ideal = stationary_spectrum(&source(128), &PerturbedCatMap::arnold(), 1e-9, 1e-12).unwrap();
        let curve = nearly_ideal.cumulative_curve(&[10.0, 25.0, 65.0]).unwrap();
        for ((_, v), e) in curve.iter().zip([4.0, 5.0, 6.0]) {
            assert!((v - e).abs() < 0.01, "{v} vs {e}");
        }
        assert!(spec.truncation_flagged());
    }

    #[test]
    fn shells_partition_annuli() {
        let spec = stationary_spectrum(&source(128), &PerturbedCatMap::arnold(), 1e-9, 1e-12).unwrap();
        let l = spec.per_pulse.len();
        assert!(l >= 6);
        let base = 2.0;
        let shells = spec.shell_masses(base, 5).unwrap();
        for w in shells.windows(2) {
            let (l0, m0) = w[0];
            let joint = spec.annulus_mass(base.powi(l0 as i32), base.powi(l0 as i32 + 2));
            assert!((m0 + w[1].1 - joint).abs() < 1e-12);
        }
        let lam = PerturbedCatMap::arnold().hyperbolic().lambda;
        let shells = spec.shell_masses(lam * lam, 1).unwrap();
        assert!((shells[1].1 - 2.0).abs() < 0.05);
        assert_eq!(StationarySpectrum::complete_shells(lam * lam, 64.0), Some(1));
    }

    #[test]
    fn halving_tol_stays_within_tail() {
        let map = PerturbedCatMap::new(cat(), vec![ShearStep::horizontal(1e-3, 1)]).unwrap();
        let b = source(32);
        let a = stationary_spectrum(&b, &map, 1e-2, 1e-8).unwrap();
        let c = stationary_spectrum(&b, &map, 1e-2, 5e-9).unwrap();
        let diff: f64 = a.power.iter().zip(&c.power).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff <= a.tail_bound, "{diff} vs {}", a.tail_bound);
    }

    #[test]
    fn dissipative_range_and_energy_balance() {
        let map = PerturbedCatMap::arnold();
        let spec = stationary_spectrum(&source(128), &map, 1e-3, 1e-12).unwrap();
        assert!(spec.dissipative_mass(1e-3).unwrap() <= 2.0);
        assert!(spec.dissipation_sum() <= 1.0 + 1e-12);
        let hot = stationary_spectrum(&source(16), &map, 0.1, 1e-12).unwrap();
        assert!(hot.dissipative_mass(0.1).unwrap() < 1e-3);
    }

    #[test]
    fn offpulse_mass_monotone_in_radius() {
        let map = PerturbedCatMap::new(cat(), vec![ShearStep::horizontal(1e-2, 1)]).unwrap();
        let spec = stationary_spectrum(&source(32), &map, 1e-3, 1e-10).unwrap();
        let ks = pulses(4);
        let mut prev = 0.0;
        for r in [2.0, 5.0, 10.0, 20.0, 32.0] {
            let m = spec.offpulse_mass(&ks, r).unwrap();
            assert!(m >= prev);
            prev = m;
        }
        assert!(prev > 0.0);
    }
}
