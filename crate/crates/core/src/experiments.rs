//! One experiment per law: validate the config, compute, and write the CSV and
//! JSON artifacts into an output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::{ScalarField, Wavenumber};
use crate::maps::{log_expansion_estimate, PerturbedCatMap};
use crate::monte_carlo::{burn_in_steps, mc_expected_projection, shift_multiplier_estimate};
use crate::numerics::{fit_line, fmt17};
use crate::probes::{anisotropic_decay_probe, critical_scales, critical_time, enhanced_dissipation_time, h_minus1_decay_rate, uniform_decay_rate};
use crate::stationary::{
    cumulative_rows, stationary_spectrum, write_cumulative_csv, write_sector_csv, write_shells_csv, StationarySpectrum,
};
use crate::stats::{centroid_variance_track, pulse_sequence};
use crate::transfer::{collect_norms, iterate_pulses, HEAT_CONSTANT};
use crate::validation::run_checks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Pulses,
    Stationary,
    Cumulative,
    Shells,
    Sector,
    Offpulse,
    Dissipative,
    Decay,
    Mc,
    Validate,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Subcommand::Pulses,
        Subcommand::Stationary,
        Subcommand::Cumulative,
        Subcommand::Shells,
        Subcommand::Sector,
        Subcommand::Offpulse,
        Subcommand::Dissipative,
        Subcommand::Decay,
        Subcommand::Mc,
        Subcommand::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Pulses => "pulses",
            Subcommand::Stationary => "stationary",
            Subcommand::Cumulative => "cumulative",
            Subcommand::Shells => "shells",
            Subcommand::Sector => "sector",
            Subcommand::Offpulse => "offpulse",
            Subcommand::Dissipative => "dissipative",
            Subcommand::Decay => "decay",
            Subcommand::Mc => "mc",
            Subcommand::Validate => "validate",
        }
    }

    fn needs_series(self) -> bool {
        !matches!(self, Subcommand::Pulses | Subcommand::Decay | Subcommand::Validate)
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::param("subcommand", format!("unknown subcommand `{s}`")))
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub subcommand: &'static str,
    pub status: &'static str,
    pub error: Option<Value>,
    pub lambda: f64,
    pub log_lambda: f64,
    #[serde(rename = "Lambda_est")]
    pub lambda_est: f64,
    pub gamma_est: Option<f64>,
    pub eps: f64,
    pub kappa: f64,
    pub max_mode: usize,
    pub seed: u64,
    /// Stable direction of `A^T`, the line pulses accumulate on.
    pub v_s: [f64; 2],
    pub n_used: Option<usize>,
    pub tail_bound: Option<f64>,
    pub discarded_total: Option<f64>,
    pub truncation_flagged: Option<bool>,
    pub results: Value,
}

fn check(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(name, reason()))
    }
}

/// Every precondition of `sub` that can be checked without computing.
pub fn validate_config(sub: Subcommand, cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate_common()?;
    let k = cfg.source.max_mode as f64;
    if sub.needs_series() {
        cfg.require_positive_kappa()?;
        check(cfg.run.tol > 0.0, "run.tol", || format!("must be > 0, got {}", cfg.run.tol))?;
    }
    match sub {
        Subcommand::Pulses => check(cfg.run.n_max >= 1, "run.n_max", || "must be at least 1".into()),
        Subcommand::Cumulative => {
            let n = &cfg.cumulative.n_list;
            check(!n.is_empty(), "cumulative.n_list", || "must not be empty".into())?;
            check(n.windows(2).all(|w| w[0] <= w[1]), "cumulative.n_list", || "must be sorted".into())?;
            check(n.iter().all(|&x| (2.0..=k).contains(&x)), "cumulative.n_list", || format!("radii must lie in [2, {k}]"))
        }
        Subcommand::Shells => {
            let base = cfg.shells.base;
            check(base == 0.0 || base > 1.0, "shells.base", || format!("must be 0 or > 1, got {base}"))?;
            if let Some(l) = cfg.shells.ell_max {
                let base = shell_base(cfg)?;
                check(base.powi(l as i32 + 1) <= k, "shells.ell_max", || format!("shell {l} extends past max_mode {k}"))?;
            }
            Ok(())
        }
        Subcommand::Sector => {
            let s = &cfg.sector;
            check(s.min_angle > 0.0 && s.min_angle < std::f64::consts::FRAC_PI_2, "sector.min_angle", || {
                format!("must lie in (0, pi/2), got {}", s.min_angle)
            })?;
            check(s.fit_lo > 0.0 && s.fit_lo < s.fit_hi, "sector.fit_lo", || "need 0 < fit_lo < fit_hi".into())
        }
        Subcommand::Offpulse => {
            let r = cfg.offpulse.radius;
            check(r > 0.0 && r <= k, "offpulse.radius", || format!("must lie in (0, {k}], got {r}"))
        }
        Subcommand::Dissipative => {
            let r = cfg.run.kappa.powf(-0.5);
            check(r <= k, "run.kappa", || format!("dissipative threshold {r} exceeds max_mode {k}"))
        }
        Subcommand::Decay => {
            let d = &cfg.decay;
            check(cfg.run.n_max >= 10, "run.n_max", || format!("decay fits need >= 10 steps, got {}", cfg.run.n_max))?;
            check(d.p.iter().all(|&p| p > 0.0), "decay.p", || "orders must be > 0".into())?;
            check(d.kappas.iter().all(|&x| x >= 0.0 && x.is_finite()), "decay.kappas", || "must be finite and >= 0".into())?;
            check(d.delta > 0.0 && d.delta < 1.0, "decay.delta", || format!("must lie in (0, 1), got {}", d.delta))?;
            check(d.m_fit == 0.0 || d.m_fit > 1.0, "decay.m_fit", || format!("must be 0 or > 1, got {}", d.m_fit))
        }
        Subcommand::Mc => {
            let m = &cfg.mc;
            check(m.n_samples >= 2, "mc.n_samples", || "need at least 2".into())?;
            check(m.shift_samples >= 2, "mc.shift_samples", || "need at least 2".into())?;
            check(m.shift_kappas.iter().all(|&x| x > 0.0), "mc.shift_kappas", || "must be > 0".into())?;
            check(m.shift_modes.iter().all(|k| *k != [0, 0]), "mc.shift_modes", || "mode (0, 0) is excluded".into())
        }
        Subcommand::Stationary | Subcommand::Validate => Ok(()),
    }
}

fn shell_base(cfg: &ExperimentConfig) -> Result<f64> {
    if cfg.shells.base > 0.0 {
        return Ok(cfg.shells.base);
    }
    let lambda = cfg.build_map()?.hyperbolic().lambda;
    Ok(lambda * lambda)
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    map: PerturbedCatMap,
    b: ScalarField,
}

impl Context<'_> {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn spectrum(&self, summary: &mut Summary) -> Result<StationarySpectrum> {
        let spec = stationary_spectrum(&self.b, &self.map, self.cfg.run.kappa, self.cfg.run.tol)?;
        summary.n_used = Some(spec.n_used);
        summary.tail_bound = Some(spec.tail_bound);
        summary.discarded_total = Some(spec.discarded_total);
        summary.truncation_flagged = Some(spec.truncation_flagged());
        Ok(spec)
    }

    /// Pulses `k_0, k_1, ...` while they stay in the box.
    fn pulse_sites(&self) -> Vec<Wavenumber> {
        let k = self.cfg.source.max_mode as u64;
        let mut n = 1;
        let mut sites = vec![self.cfg.k0()];
        while let Ok(seq) = pulse_sequence(self.map.matrix(), self.cfg.k0(), n) {
            let last = seq[n];
            if last.max_abs() > k {
                break;
            }
            sites.push(last);
            n += 1;
        }
        sites
    }

    fn write_pulse_sites(&self) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create("pulse_sites.csv")?);
        w.write_record(["n", "kx", "ky", "radius"])?;
        for (n, k) in self.pulse_sites().iter().enumerate() {
            w.write_record([n.to_string(), k.kx.to_string(), k.ky.to_string(), fmt17(k.norm())])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn error_value(e: &Error) -> Value {
    json!({ "kind": e.kind(), "message": e.to_string() })
}

/// Runs one subcommand. Config errors return before anything is written;
/// numerical failures still write `summary.json` with `status = "failed"`.
pub fn run(sub: Subcommand, cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    validate_config(sub, cfg)?;
    std::fs::create_dir_all(out)?;
    let ctx = Context { cfg, out, map: cfg.build_map()?, b: cfg.build_source()? };
    let hyp = ctx.map.hyperbolic();
    let lambda_est = log_expansion_estimate(&ctx.map);
    let gamma_est = uniform_decay_rate(&ctx.b, &ctx.map, &[0.0, cfg.run.kappa], cfg.run.n_max.max(10)).ok().map(|f| f.gamma);
    let mut summary = Summary {
        subcommand: sub.name(),
        status: "ok",
        error: None,
        lambda: hyp.lambda,
        log_lambda: hyp.lambda.ln(),
        lambda_est,
        gamma_est,
        eps: ctx.map.eps(),
        kappa: cfg.run.kappa,
        max_mode: cfg.source.max_mode,
        seed: cfg.run.seed,
        v_s: hyp.v_st,
        n_used: None,
        tail_bound: None,
        discarded_total: None,
        truncation_flagged: None,
        results: Value::Null,
    };
    let outcome = match sub {
        Subcommand::Pulses => run_pulses(&ctx),
        Subcommand::Stationary => run_stationary(&ctx, &mut summary),
        Subcommand::Cumulative => run_cumulative(&ctx, &mut summary),
        Subcommand::Shells => run_shells(&ctx, &mut summary),
        Subcommand::Sector => run_sector(&ctx, &mut summary),
        Subcommand::Offpulse => run_offpulse(&ctx, &mut summary),
        Subcommand::Dissipative => run_dissipative(&ctx, &mut summary),
        Subcommand::Decay => run_decay(&ctx, &summary),
        Subcommand::Mc => run_mc(&ctx, &mut summary),
        Subcommand::Validate => run_validate(&ctx),
    };
    let failure = match outcome {
        Ok(v) => {
            summary.results = v;
            None
        }
        Err(e) => {
            summary.status = "failed";
            summary.error = Some(error_value(&e));
            Some(e)
        }
    };
    serde_json::to_writer_pretty(ctx.create("summary.json")?, &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn run_pulses(ctx: &Context) -> Result<Value> {
    let cfg = ctx.cfg;
    let (norms, stopped) = collect_norms(iterate_pulses(&ctx.b, &ctx.map, cfg.run.kappa, cfg.run.n_max)?);
    let mut w = csv::Writer::from_writer(ctx.create("pulses.csv")?);
    w.write_record(["n", "l2", "hminus1", "h1", "discarded"])?;
    for r in &norms {
        w.write_record([r.n.to_string(), fmt17(r.l2), fmt17(r.h_minus1), fmt17(r.h1), fmt17(r.discarded)])?;
    }
    w.flush()?;
    let track = centroid_variance_track(&ctx.b, &ctx.map, cfg.run.kappa, cfg.run.n_max)?;
    track.write_csv(ctx.create("track.csv")?)?;
    ctx.write_pulse_sites()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        track.rows.iter().filter(|r| r.n >= 1 && r.variance > 0.0).map(|r| (r.n as f64, r.variance.ln())).unzip();
    let growth = fit_line(&xs, &ys).map(|f| json!({ "log_m": f.slope, "r_squared": f.r_squared, "points": f.points }));
    let max_drift = track.rows.iter().map(|r| r.drift).fold(0.0, f64::max);
    Ok(json!({
        "pulses_computed": norms.len(),
        "stopped": stopped.as_ref().map(error_value),
        "max_drift": max_drift,
        "variance_growth": growth,
    }))
}

fn run_stationary(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let spec = ctx.spectrum(summary)?;
    spec.write_csv(ctx.create("spectrum.csv")?)?;
    ctx.write_pulse_sites()?;
    Ok(json!({
        "total_power": spec.total_power(),
        "series_mass": spec.series_mass(),
        "dissipation_sum": spec.dissipation_sum(),
        "gamma_fit": spec.gamma_fit,
    }))
}

fn run_cumulative(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let spec = ctx.spectrum(summary)?;
    let curve = spec.cumulative_curve(&ctx.cfg.cumulative.n_list)?;
    let gamma = summary.gamma_est.unwrap_or(summary.log_lambda);
    let rows = cumulative_rows(&curve, summary.lambda_est, gamma);
    write_cumulative_csv(&rows, ctx.create("cumulative.csv")?)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve.iter().map(|(n, v)| (n.ln(), *v)).unzip();
    Ok(json!({
        "slope": fit_line(&xs, &ys).map(|f| f.slope),
        "lower_slope": 1.0 / (2.0 * summary.lambda_est),
        "upper_slope": 2.0 / gamma,
        "pulse_count_slope": 1.0 / summary.log_lambda,
        "gamma_from_fit": summary.gamma_est.is_some(),
    }))
}

fn run_shells(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let spec = ctx.spectrum(summary)?;
    let base = shell_base(ctx.cfg)?;
    let k = ctx.cfg.source.max_mode as f64;
    let ell_max = match ctx.cfg.shells.ell_max {
        Some(l) => l,
        None => StationarySpectrum::complete_shells(base, k)
            .ok_or_else(|| Error::param("shells.base", format!("no complete shell of base {base} fits in max_mode {k}")))?,
    };
    let shells = spec.shell_masses(base, ell_max)?;
    let reference = base.ln() / summary.log_lambda;
    write_shells_csv(&shells, reference, ctx.create("shells.csv")?)?;
    Ok(json!({ "base": base, "ell_max": ell_max, "reference": reference }))
}

fn run_sector(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let spec = ctx.spectrum(summary)?;
    let s = &ctx.cfg.sector;
    let profile = spec.sector_profile(summary.v_s, s.min_angle, (s.fit_lo, s.fit_hi))?;
    write_sector_csv(&profile, ctx.create("sector.csv")?)?;
    Ok(json!({
        "min_angle": s.min_angle,
        "fit_range": [s.fit_lo, s.fit_hi],
        "decay_exponent": profile.fit.map(|f| f.slope),
        "r_squared": profile.fit.map(|f| f.r_squared),
        "bins": profile.rows.len(),
        "skipped_bins": profile.skipped,
    }))
}

fn run_offpulse(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let spec = ctx.spectrum(summary)?;
    let r = ctx.cfg.offpulse.radius;
    let sites = ctx.pulse_sites();
    let off = spec.offpulse_mass(&sites, r)?;
    let below = spec.mass_below(r);
    ctx.write_pulse_sites()?;
    Ok(json!({
        "radius": r,
        "offpulse_mass": off,
        "mass_below": below,
        "fraction": if below > 0.0 { off / below } else { 0.0 },
    }))
}

fn run_dissipative(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let spec = ctx.spectrum(summary)?;
    let value = spec.dissipative_mass(ctx.cfg.run.kappa)?;
    let bound = 2.0 * spec.source_mass + spec.tail_bound;
    Ok(json!({
        "threshold": ctx.cfg.run.kappa.powf(-0.5),
        "dissipative_mass": value,
        "bound": bound,
        "within_bound": value <= bound,
        "energy_balance": spec.dissipation_sum(),
        "energy_bound": spec.source_mass,
    }))
}

fn run_decay(ctx: &Context, summary: &Summary) -> Result<Value> {
    let cfg = ctx.cfg;
    let d = &cfg.decay;
    let n_max = cfg.run.n_max;
    let mut per_kappa = Vec::new();
    for &kappa in &d.kappas {
        let fit = h_minus1_decay_rate(&ctx.b, &ctx.map, kappa, n_max);
        let tau = if kappa > 0.0 { Some(enhanced_dissipation_time(&ctx.b, &ctx.map, kappa, n_max)) } else { None };
        per_kappa.push(json!({
            "kappa": kappa,
            "gamma": fit.as_ref().ok().map(|f| f.gamma),
            "r_squared": fit.as_ref().ok().map(|f| f.r_squared),
            "fit_error": fit.as_ref().err().map(error_value),
            "tau": tau.as_ref().and_then(|t| t.as_ref().ok().copied().flatten()),
            "tau_lower_bound": (kappa > 0.0).then(|| kappa.ln().abs() / (2.0 * summary.lambda_est) - 5.0),
            "tau_error": tau.as_ref().and_then(|t| t.as_ref().err().map(error_value)),
        }));
    }
    let uniform = uniform_decay_rate(&ctx.b, &ctx.map, &d.kappas, n_max)?;

    let mut w = csv::Writer::from_writer(ctx.create("probes.csv")?);
    w.write_record(["p", "n", "l2", "hminus1", "hp", "hminusL"])?;
    let mut rates = Vec::new();
    for &p in &d.p {
        let probe = anisotropic_decay_probe(&ctx.b, &ctx.map, cfg.run.kappa, p, n_max)?;
        for r in &probe.rows {
            w.write_record([fmt17(p), r.n.to_string(), fmt17(r.l2), fmt17(r.h_minus1), fmt17(r.hp), fmt17(r.h_minus_l)])?;
        }
        rates.push(json!({ "p": p, "r_fit": probe.r_fit, "lambda_pow": summary.lambda.powf(-p), "rows": probe.rows.len() }));
    }
    w.flush()?;

    let m_fit = if d.m_fit > 0.0 { d.m_fit } else { (2.0 * summary.lambda_est).exp() };
    let eta = summary.eps.max(cfg.run.kappa);
    let base = shell_base(cfg)?;
    let time = critical_time(eta, m_fit, d.delta);
    let scales = critical_scales(summary.eps, cfg.run.kappa, uniform.gamma, m_fit, d.delta, base);
    Ok(json!({
        "per_kappa": per_kappa,
        "uniform_gamma": uniform.gamma,
        "gamma_le_lambda": uniform.gamma <= summary.lambda_est + 0.05,
        "anisotropic": rates,
        "m_fit": m_fit,
        "critical_time": time.as_ref().ok(),
        "critical_scales": scales.as_ref().ok(),
        "critical_error": scales.as_ref().err().or(time.as_ref().err()).map(error_value),
    }))
}

fn run_mc(ctx: &Context, summary: &mut Summary) -> Result<Value> {
    let cfg = ctx.cfg;
    let m = &cfg.mc;
    let spec = ctx.spectrum(summary)?;
    let n_steps = if m.n_steps > 0 { m.n_steps } else { burn_in_steps(&spec, 0.01) };
    let est = mc_expected_projection(&ctx.b, &ctx.map, cfg.run.kappa, &m.selector, m.n_samples, n_steps, cfg.run.seed)?;
    let reference = spec.selected_mass(&m.selector);
    let mut shifts = Vec::new();
    for (i, mode) in m.shift_modes.iter().enumerate() {
        let k = Wavenumber::new(mode[0], mode[1]);
        for (j, &kappa) in m.shift_kappas.iter().enumerate() {
            let seed = cfg.run.seed.wrapping_add(1 + (i * m.shift_kappas.len() + j) as u64);
            let e = shift_multiplier_estimate(k, kappa, m.shift_samples, seed)?;
            let exact = (-HEAT_CONSTANT * kappa * k.norm_sq()).exp();
            shifts.push(json!({ "mode": mode, "kappa": kappa, "mean": e.mean, "stderr": e.stderr, "exact": exact, "z": e.z_score(exact) }));
        }
    }
    let report = json!({
        "selector": m.selector,
        "mean": est.mean,
        "stderr": est.stderr,
        "n_samples": est.n_samples,
        "n_steps": n_steps,
        "seed": cfg.run.seed,
        "series_reference": reference,
        "z": est.z_score(reference),
        "shift_checks": shifts,
    });
    serde_json::to_writer_pretty(ctx.create("mc_report.json")?, &report)?;
    Ok(json!({ "mean": est.mean, "stderr": est.stderr, "series_reference": reference, "z": est.z_score(reference) }))
}

fn run_validate(ctx: &Context) -> Result<Value> {
    let checks = run_checks(ctx.cfg, &ctx.map)?;
    serde_json::to_writer_pretty(ctx.create("validate.json")?, &checks)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Error::ChecksFailed { failed, total: checks.len() });
    }
    Ok(json!({ "checks": checks.len(), "failed": 0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_names_round_trip() {
        for c in Subcommand::ALL {
            assert_eq!(c.name().parse::<Subcommand>().unwrap(), c);
        }
        assert!("plot".parse::<Subcommand>().is_err());
    }

    #[test]
    fn config_errors_come_first() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.kappa = 0.0;
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("never");
        let err = run(Subcommand::Stationary, &cfg, &out).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists());
        cfg.run.kappa = 1e-6;
        cfg.cumulative.n_list = vec![10.0, 500.0];
        assert_eq!(run(Subcommand::Cumulative, &cfg, &out).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn numerical_failure_writes_flagged_summary() {
        let mut cfg = ExperimentConfig::default();
        cfg.source.max_mode = 4;
        cfg.run.kappa = 0.0;
        cfg.decay.kappas = vec![0.0];
        let dir = tempfile::tempdir().unwrap();
        let err = run(Subcommand::Decay, &cfg, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["status"], "failed");
        assert_eq!(v["error"]["kind"], "empty_window");
    }
}
