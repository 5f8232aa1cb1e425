//! Hyperbolic toral automorphisms and volume-preserving shear perturbations.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Wavenumber;

/// A 2x2 integer matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix2 {
    rows: [[i64; 2]; 2],
}

impl IntMatrix2 {
    pub const fn from_rows(rows: [[i64; 2]; 2]) -> Self {
        IntMatrix2 { rows }
    }

    pub fn rows(&self) -> [[i64; 2]; 2] {
        self.rows
    }

    pub fn det(&self) -> i64 {
        let [[a, b], [c, d]] = self.rows;
        a * d - b * c
    }

    pub fn trace(&self) -> i64 {
        self.rows[0][0] + self.rows[1][1]
    }

    pub fn transpose(&self) -> Self {
        let [[a, b], [c, d]] = self.rows;
        IntMatrix2::from_rows([[a, c], [b, d]])
    }

    /// Checks `|det| = 1` and that no eigenvalue lies on the unit circle.
    pub fn validate(&self) -> Result<()> {
        let det = self.det();
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(self.rows, det));
        }
        let t = self.trace();
        let hyperbolic = if det == 1 { t.abs() > 2 } else { t != 0 };
        if !hyperbolic {
            return Err(Error::NotHyperbolic(self.rows));
        }
        Ok(())
    }

    /// The integer inverse; only meaningful when `|det| = 1`.
    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.rows;
        let det = self.det();
        IntMatrix2::from_rows([[d * det, -b * det], [-c * det, a * det]])
    }

    /// `A^{-T}`, the action of the transfer operator on wavenumbers.
    pub fn inverse_transpose(&self) -> Self {
        self.inverse().transpose()
    }

    pub fn apply(&self, k: Wavenumber) -> Option<Wavenumber> {
        let [[a, b], [c, d]] = self.rows;
        let x = a.checked_mul(k.kx)?.checked_add(b.checked_mul(k.ky)?)?;
        let y = c.checked_mul(k.kx)?.checked_add(d.checked_mul(k.ky)?)?;
        Some(Wavenumber::new(x, y))
    }

    pub fn apply_f64(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.as_f64();
        mat_vec(m, v)
    }

    pub fn as_f64(&self) -> [[f64; 2]; 2] {
        let [[a, b], [c, d]] = self.rows;
        [[a as f64, b as f64], [c as f64, d as f64]]
    }

    /// Induced 2-norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(self.as_f64())
    }
}

/// Spectral data of a hyperbolic matrix `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicData {
    /// Modulus of the expanding eigenvalue, `> 1`.
    pub lambda: f64,
    /// Signed expanding and contracting eigenvalues.
    pub mu_u: f64,
    pub mu_s: f64,
    /// Unit eigenvectors of `A`.
    pub v_u: [f64; 2],
    pub v_s: [f64; 2],
    /// Unit eigenvectors of `A^T`.
    pub v_ut: [f64; 2],
    pub v_st: [f64; 2],
    /// `log sup_x |(Df_x)^{-1}|`; for the linear map this is `log |A^{-1}|`.
    pub log_expansion: f64,
}

impl HyperbolicData {
    pub fn cone_basis(&self) -> Result<ConeBasis> {
        ConeBasis::new(self.v_ut, self.v_st)
    }
}

/// Coordinates relative to a pair of eigenvectors, used to decide membership
/// of the closed cone `|a_s| <= |a_u|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeBasis {
    u: [f64; 2],
    s: [f64; 2],
    det: f64,
}

impl ConeBasis {
    pub fn new(u: [f64; 2], s: [f64; 2]) -> Result<Self> {
        let det = u[0] * s[1] - u[1] * s[0];
        let scale = u[0].hypot(u[1]) * s[0].hypot(s[1]);
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::DegenerateEigenbasis);
        }
        Ok(ConeBasis { u, s, det })
    }

    /// Solves `v = a_u * u + a_s * s`.
    pub fn coordinates(&self, v: [f64; 2]) -> (f64, f64) {
        let a_u = (v[0] * self.s[1] - v[1] * self.s[0]) / self.det;
        let a_s = (self.u[0] * v[1] - self.u[1] * v[0]) / self.det;
        (a_u, a_s)
    }

    pub fn in_unstable_cone(&self, k: Wavenumber) -> bool {
        let (a_u, a_s) = self.coordinates(k.as_vec());
        a_s.abs() <= a_u.abs()
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn eigenvector(m: [[f64; 2]; 2], mu: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = m;
    let first = [b, mu - a];
    let second = [mu - d, c];
    if first[0].hypot(first[1]) >= second[0].hypot(second[1]) {
        unit(first)
    } else {
        unit(second)
    }
}

pub(crate) fn mat_vec(m: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub(crate) fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub(crate) fn mat_inverse(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

pub(crate) fn transpose(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Largest singular value of a 2x2 matrix.
pub(crate) fn spectral_norm(m: [[f64; 2]; 2]) -> f64 {
    let s = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (s * s - 4.0 * det * det).max(0.0);
    ((s + disc.sqrt()) / 2.0).sqrt()
}

/// Eigen-decomposition of a hyperbolic unimodular integer matrix.
pub fn analyze_matrix(a: &IntMatrix2) -> Result<HyperbolicData> {
    a.validate()?;
    let t = a.trace() as f64;
    let det = a.det() as f64;
    let disc = t * t - 4.0 * det;
    let mu_u = (t + t.signum() * disc.sqrt()) / 2.0;
    let mu_s = det / mu_u;
    let m = a.as_f64();
    let mt = a.transpose().as_f64();
    let log_expansion = spectral_norm(a.inverse().as_f64()).ln();
    Ok(HyperbolicData {
        lambda: mu_u.abs(),
        mu_u,
        mu_s,
        v_u: eigenvector(m, mu_u),
        v_s: eigenvector(m, mu_s),
        v_ut: eigenvector(mt, mu_u),
        v_st: eigenvector(mt, mu_s),
        log_expansion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearAxis {
    /// `(x, y) -> (x + eps sin(2 pi m y), y)`
    Horizontal,
    /// `(x, y) -> (x, y + eps sin(2 pi m x))`
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearStep {
    pub axis: ShearAxis,
    pub amplitude: f64,
    pub frequency: u32,
}

impl ShearStep {
    pub fn horizontal(amplitude: f64, frequency: u32) -> Self {
        ShearStep { axis: ShearAxis::Horizontal, amplitude, frequency }
    }

    pub fn vertical(amplitude: f64, frequency: u32) -> Self {
        ShearStep { axis: ShearAxis::Vertical, amplitude, frequency }
    }

    fn displacement(&self, coord: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency as f64 * coord).sin()
    }

    fn forward(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        match self.axis {
            ShearAxis::Horizontal => [wrap_unit(x + self.displacement(y)), y],
            ShearAxis::Vertical => [x, wrap_unit(y + self.displacement(x))],
        }
    }

    fn inverse(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        match self.axis {
            ShearAxis::Horizontal => [wrap_unit(x - self.displacement(y)), y],
            ShearAxis::Vertical => [x, wrap_unit(y - self.displacement(x))],
        }
    }

    fn jacobian(&self, [x, y]: [f64; 2]) -> [[f64; 2]; 2] {
        let w = 2.0 * PI * self.frequency as f64;
        match self.axis {
            ShearAxis::Horizontal => [[1.0, self.amplitude * w * (w * y).cos()], [0.0, 1.0]],
            ShearAxis::Vertical => [[1.0, 0.0], [self.amplitude * w * (w * x).cos(), 1.0]],
        }
    }
}

/// Reduces to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `f = S_n o ... o S_1 o f_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCatMap {
    matrix: IntMatrix2,
    shears: Vec<ShearStep>,
    hyp: HyperbolicData,
}

impl PerturbedCatMap {
    pub fn new(matrix: IntMatrix2, shears: Vec<ShearStep>) -> Result<Self> {
        let hyp = analyze_matrix(&matrix)?;
        for s in &shears {
            if s.frequency == 0 {
                return Err(Error::param("frequency", "shear frequency must be positive"));
            }
            if !s.amplitude.is_finite() {
                return Err(Error::param("amplitude", "shear amplitude must be finite"));
            }
        }
        Ok(PerturbedCatMap { matrix, shears, hyp })
    }

    pub fn cat(matrix: IntMatrix2) -> Result<Self> {
        Self::new(matrix, Vec::new())
    }

    /// Arnold's cat map `[[2, 1], [1, 1]]`.
    pub fn arnold() -> Self {
        Self::cat(IntMatrix2::from_rows([[2, 1], [1, 1]])).expect("cat matrix is hyperbolic")
    }

    pub fn matrix(&self) -> &IntMatrix2 {
        &self.matrix
    }

    pub fn shears(&self) -> &[ShearStep] {
        &self.shears
    }

    pub fn hyperbolic(&self) -> &HyperbolicData {
        &self.hyp
    }

    /// Perturbation size proxy `sum |amplitude_i|`.
    pub fn eps(&self) -> f64 {
        self.shears.iter().fold(0.0, |acc, s| acc + s.amplitude.abs())
    }

    /// True when every shear has zero amplitude, so `f = f_A`.
    pub fn is_linear(&self) -> bool {
        self.shears.iter().all(|s| s.amplitude == 0.0)
    }

    pub fn forward(&self, x: [f64; 2]) -> [f64; 2] {
        let y = self.matrix.apply_f64(x);
        let mut p = [wrap_unit(y[0]), wrap_unit(y[1])];
        for s in &self.shears {
            p = s.forward(p);
        }
        p
    }

    /// `f^{-1}(x) = f_A^{-1}(S_1^{-1}(... S_n^{-1}(x)))`.
    pub fn inverse(&self, x: [f64; 2]) -> [f64; 2] {
        let mut p = x;
        for s in self.shears.iter().rev() {
            p = s.inverse(p);
        }
        let y = self.matrix.inverse().apply_f64(p);
        [wrap_unit(y[0]), wrap_unit(y[1])]
    }

    /// `Df_x` by the chain rule through the shear sequence.
    pub fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let mut m = self.matrix.as_f64();
        let y = self.matrix.apply_f64(x);
        let mut p = [wrap_unit(y[0]), wrap_unit(y[1])];
        for s in &self.shears {
            m = mat_mul(s.jacobian(p), m);
            p = s.forward(p);
        }
        m
    }

    /// Cone condition for `F = f^{-1}` at one sample: images of the two
    /// boundary rays of `C_s` under `(D F)^T`. Returns the larger ratio
    /// `|a_u| / |a_s|` of the images and whether both land in the same nappe.
    fn cone_image(&self, cone: &ConeBasis, y: [f64; 2]) -> (f64, bool) {
        let dft = transpose(mat_inverse(self.jacobian(y)));
        let mut ratio: f64 = 0.0;
        let mut signs = [0.0; 2];
        for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
            let ray = [self.hyp.v_st[0] + sign * self.hyp.v_ut[0], self.hyp.v_st[1] + sign * self.hyp.v_ut[1]];
            let (a_u, a_s) = cone.coordinates(mat_vec(dft, ray));
            ratio = ratio.max(a_u.abs() / a_s.abs());
            signs[i] = a_s.signum();
        }
        (ratio, signs[0] == signs[1])
    }
}

fn grid_points(grid: usize) -> impl IndexedParallelIterator<Item = [f64; 2]> {
    let h = 1.0 / grid as f64;
    (0..grid * grid).into_par_iter().map(move |i| [(i / grid) as f64 * h, (i % grid) as f64 * h])
}

/// `log` of the largest `|(Df_x)^{-1}|` over a `grid x grid` sample.
pub fn jacobian_inverse_sup(map: &PerturbedCatMap, grid: usize) -> f64 {
    grid_points(grid)
        .map(|x| spectral_norm(mat_inverse(map.jacobian(x))))
        .reduce(|| 0.0, f64::max)
        .ln()
}

/// Grid estimate of `log sup |(Df)^{-1}|`, doubling the grid from 256 until
/// successive values agree to `1e-6`.
pub fn log_expansion_estimate(map: &PerturbedCatMap) -> f64 {
    const MAX_GRID: usize = 2048;
    let mut grid = 256;
    let mut value = jacobian_inverse_sup(map, grid);
    if map.is_linear() {
        return value;
    }
    while grid < MAX_GRID {
        grid *= 2;
        let next = jacobian_inverse_sup(map, grid);
        let done = (next - value).abs() < 1e-6;
        value = next;
        if done {
            return value;
        }
    }
    log::warn!("log_expansion_estimate: grid refinement stopped at {MAX_GRID}");
    value
}

/// Summary of the sampled cone condition `(D F)^T C_s ⊂ C_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCheck {
    /// Largest `|a_u| / |a_s|` over the images of the cone's boundary rays;
    /// values below 1 mean the image is strictly inside.
    pub max_ratio: f64,
    pub same_nappe: bool,
}

impl ConeCheck {
    pub fn holds(&self) -> bool {
        self.same_nappe && self.max_ratio < 1.0
    }
}

pub fn cone_invariance(map: &PerturbedCatMap, grid: usize) -> Result<ConeCheck> {
    let cone = map.hyp.cone_basis()?;
    let (max_ratio, same_nappe) = grid_points(grid)
        .map(|y| map.cone_image(&cone, y))
        .reduce(|| (0.0, true), |a, b| (a.0.max(b.0), a.1 && b.1));
    Ok(ConeCheck { max_ratio, same_nappe })
}
