use serde::{Deserialize, Serialize};

use super::Wavenumber;

/// A set of Fourier modes; projections zero every coefficient outside it.
///
/// Radial boundaries are closed except where noted. The mean mode is never
/// selected since every field has a zero mean coefficient anyway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSelector {
    /// `|k| <= radius`
    Ball { radius: f64 },
    /// `lo <= |k| <= hi`
    Annulus { lo: f64, hi: f64 },
    /// `base^ell <= |k| <= base^(ell + 1)`
    ExpShell { base: f64, ell: i32 },
    /// Modes whose angle to the line spanned by `axis` is at least `min_angle`.
    Sector { axis: [f64; 2], min_angle: f64 },
    PulseSet { modes: Vec<Wavenumber> },
    Complement { inner: Box<ModeSelector> },
    /// `|k| >= radius`
    HighPass { radius: f64 },
}

/// Angle in `[0, pi/2]` between `k` and the line spanned by `axis`.
pub fn angle_to_line(k: Wavenumber, axis: [f64; 2]) -> f64 {
    let kn = k.norm();
    let an = axis[0].hypot(axis[1]);
    if kn == 0.0 || an == 0.0 {
        return 0.0;
    }
    let cos = ((k.kx as f64 * axis[0] + k.ky as f64 * axis[1]).abs() / (kn * an)).min(1.0);
    cos.acos()
}

impl ModeSelector {
    pub fn contains(&self, k: Wavenumber) -> bool {
        if k.is_zero() {
            return false;
        }
        match self {
            ModeSelector::Ball { radius } => k.norm() <= *radius,
            ModeSelector::Annulus { lo, hi } => {
                let r = k.norm();
                *lo <= r && r <= *hi
            }
            ModeSelector::ExpShell { base, ell } => {
                let r = k.norm();
                base.powi(*ell) <= r && r <= base.powi(ell + 1)
            }
            ModeSelector::Sector { axis, min_angle } => angle_to_line(k, *axis) >= *min_angle,
            ModeSelector::PulseSet { modes } => modes.contains(&k),
            ModeSelector::Complement { inner } => !inner.contains(k),
            ModeSelector::HighPass { radius } => k.norm() >= *radius,
        }
    }

    pub fn complement(self) -> ModeSelector {
        ModeSelector::Complement { inner: Box::new(self) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_is_inclusive() {
        let sel = ModeSelector::Ball { radius: 5.0 };
        assert!(sel.contains(Wavenumber::new(3, 4)));
        assert!(!sel.contains(Wavenumber::new(4, 4)));
        assert!(!sel.contains(Wavenumber::ZERO));
    }

    #[test]
    fn exp_shell_closed_both_ends() {
        let sel = ModeSelector::ExpShell { base: 2.0, ell: 1 };
        assert!(sel.contains(Wavenumber::new(2, 0)));
        assert!(sel.contains(Wavenumber::new(4, 0)));
        assert!(!sel.contains(Wavenumber::new(5, 0)));
        assert!(!sel.contains(Wavenumber::new(1, 0)));
    }

    #[test]
    fn sector_measures_angle_to_line_not_ray() {
        let sel = ModeSelector::Sector { axis: [1.0, 0.0], min_angle: 0.5 };
        assert!(!sel.contains(Wavenumber::new(-5, 1)));
        assert!(sel.contains(Wavenumber::new(0, 3)));
        assert!((angle_to_line(Wavenumber::new(-1, 1), [1.0, 0.0]) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn selector_serializes_with_kind_tag() {
        let sel = ModeSelector::Ball { radius: 10.0 }.complement();
        let text = serde_json::to_string(&sel).unwrap();
        let back: ModeSelector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sel);
    }
}
