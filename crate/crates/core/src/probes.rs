//! Measured rates: `H^{-1}` decay, anisotropic-norm decay, enhanced
//! dissipation time, and the critical scales built from them.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{anisotropic_norm, sobolev_seminorm, ScalarField};
use crate::maps::PerturbedCatMap;
use crate::numerics::{fit_line, fmt17};
use crate::transfer::{iterate_pulses, TruncationPolicy};

/// Rate fits skip the transient before pulses settle near the stable line.
pub const FIT_SKIP: usize = 3;
/// Norms below this are treated as round-off and left out of fits.
pub const PRECISION_FLOOR: f64 = 1e-9;
/// Probes stop once a step pushes more than this fraction of the source mass
/// out of the box.
pub const PROBE_LOSS_TOL: f64 = 1e-9;

fn probe_policy() -> TruncationPolicy {
    TruncationPolicy::Strict { rel_tol: PROBE_LOSS_TOL }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub r_squared: f64,
    pub first_n: usize,
    pub last_n: usize,
}

/// Least-squares rate of `-log ||phi_n||_{-1}` over `n >= 3` with the norm in
/// `[1e-9, 0.5]`. Iteration ends early, without error, once pulses reach the
/// edge of the box.
pub fn h_minus1_decay_rate(b: &ScalarField, map: &PerturbedCatMap, kappa: f64, n_max: usize) -> Result<DecayFit> {
    if n_max < 10 {
        return Err(Error::param("n_max", format!("need at least 10 steps, got {n_max}")));
    }
    let mut pts = Vec::new();
    for item in iterate_pulses(b, map, kappa, n_max)?.with_policy(probe_policy()) {
        let Ok(rec) = item else { break };
        let h = rec.norms.h_minus1;
        if rec.n() >= FIT_SKIP && (PRECISION_FLOOR..=0.5).contains(&h) {
            pts.push((rec.n(), h));
        }
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|p| -p.1.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::EmptyWindow(format!("{} usable H^-1 points", pts.len())))?;
    Ok(DecayFit { gamma: fit.slope, r_squared: fit.r_squared, first_n: pts[0].0, last_n: pts[pts.len() - 1].0 })
}

/// Smallest fitted rate over a diffusivity sweep: the rate that holds for
/// every `kappa` in it at once. A `kappa > 0` whose norm drops below the
/// precision floor too fast to fit is skipped, since it decays faster still.
pub fn uniform_decay_rate(b: &ScalarField, map: &PerturbedCatMap, kappas: &[f64], n_max: usize) -> Result<DecayFit> {
    let mut best: Option<DecayFit> = None;
    for &kappa in kappas {
        let fit = match h_minus1_decay_rate(b, map, kappa, n_max) {
            Ok(f) => f,
            Err(Error::EmptyWindow(_)) if kappa > 0.0 => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| fit.gamma < b.gamma) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::EmptyWindow("empty kappa sweep".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub l2: f64,
    pub h_minus1: f64,
    /// Anisotropic `H^p` norm.
    pub hp: f64,
    /// Isotropic `H^{-L}` seminorm with `L = p + 2`.
    pub h_minus_l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicProbe {
    pub p: f64,
    pub rows: Vec<ProbeRow>,
    /// `exp` of the fitted slope of `log ||phi_n||_{H^p}` over `n >= 3`.
    pub r_fit: Option<f64>,
    pub stopped: Option<Error>,
}

impl AnisotropicProbe {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "l2", "hminus1", "hp", "hminusL"])?;
        for r in &self.rows {
            w.write_record([r.n.to_string(), fmt17(r.l2), fmt17(r.h_minus1), fmt17(r.hp), fmt17(r.h_minus_l)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn anisotropic_decay_probe(phi: &ScalarField, map: &PerturbedCatMap, kappa: f64, p: f64, n_max: usize) -> Result<AnisotropicProbe> {
    let hyp = map.hyperbolic();
    anisotropic_norm(phi, p, hyp)?;
    let l = p + 2.0;
    let mut rows = Vec::new();
    let mut stopped = None;
    for item in iterate_pulses(phi, map, kappa, n_max)?.with_policy(probe_policy()) {
        let rec = match item {
            Ok(r) => r,
            Err(e) => {
                stopped = Some(e);
                break;
            }
        };
        let hp = anisotropic_norm(&rec.field, p, hyp)?;
        let h_minus_l = sobolev_seminorm(&rec.field, -l);
        if !hp.is_finite() || !h_minus_l.is_finite() {
            break;
        }
        rows.push(ProbeRow { n: rec.n(), l2: rec.norms.l2, h_minus1: rec.norms.h_minus1, hp, h_minus_l });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.n >= FIT_SKIP && r.hp >= PRECISION_FLOOR)
        .map(|r| (r.n as f64, r.hp.ln()))
        .unzip();
    let r_fit = fit_line(&xs, &ys).map(|f| f.slope.exp());
    Ok(AnisotropicProbe { p, rows, r_fit, stopped })
}

/// First `n` with `||phi_n||^2 < ||b||^2 / 2`, or `None` if that does not
/// happen within `n_cap` steps. Fails if pulses leave the box first.
pub fn enhanced_dissipation_time(b: &ScalarField, map: &PerturbedCatMap, kappa: f64, n_cap: usize) -> Result<Option<usize>> {
    let half = 0.5 * b.l2_norm_sq();
    for item in iterate_pulses(b, map, kappa, n_cap)?.with_policy(probe_policy()) {
        let rec = item?;
        if rec.norms.l2.powi(2) < half {
            return Ok(Some(rec.n()));
        }
    }
    Ok(None)
}

/// `N_crit = (1 - delta) |log eta| / log M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTime {
    pub n_crit: f64,
    pub steps: usize,
    /// Fewer than two whole steps fit below the threshold.
    pub coarse: bool,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("max(eps, kappa) must lie in (0, 1), got {eta}")));
    }
    Ok(())
}

fn check_growth(m_fit: f64) -> Result<f64> {
    if !(m_fit > 1.0) || !m_fit.is_finite() {
        return Err(Error::param("m_fit", format!("growth factor must exceed 1, got {m_fit}")));
    }
    Ok(m_fit.ln())
}

pub fn critical_time(eta: f64, m_fit: f64, delta: f64) -> Result<CriticalTime> {
    check_eta(eta)?;
    let log_m = check_growth(m_fit)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let n_crit = (1.0 - delta) * eta.ln().abs() / log_m;
    let steps = n_crit.floor() as usize;
    Ok(CriticalTime { n_crit, steps, coarse: steps < 2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalScales {
    pub eta: f64,
    pub delta: f64,
    pub time: CriticalTime,
    pub zeta: f64,
    /// `eta^{-zeta}`
    pub r_crit: f64,
    /// `N_crit gamma / log L`
    pub ell_crit: f64,
    /// Largest `delta` for which `zeta > 0`.
    pub delta_bar: f64,
}

/// Thresholds below which pulses carry the stationary mass, for
/// `eta = max(eps, kappa)` and shell base `shell_base`.
pub fn critical_scales(eps: f64, kappa: f64, gamma: f64, m_fit: f64, delta: f64, shell_base: f64) -> Result<CriticalScales> {
    let eta = eps.max(kappa);
    let time = critical_time(eta, m_fit, delta)?;
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", format!("decay rate must be positive, got {gamma}")));
    }
    if !(shell_base > 1.0) {
        return Err(Error::param("shell_base", format!("must exceed 1, got {shell_base}")));
    }
    let log_m = m_fit.ln();
    let zeta = gamma / (2.0 * log_m) - 0.5 * delta * (1.0 + gamma / log_m);
    let delta_bar = gamma / (log_m + gamma);
    if zeta <= 0.0 {
        return Err(Error::ZetaNonPositive { zeta, delta, delta_bar });
    }
    Ok(CriticalScales {
        eta,
        delta,
        time,
        zeta,
        r_crit: eta.powf(-zeta),
        ell_crit: time.n_crit * gamma / shell_base.ln(),
        delta_bar,
    })
}
