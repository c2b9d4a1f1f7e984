//! Fidelities, distances, entropies, Wigner functions and entanglement witnesses.
//!
//! Fidelity uses the squared convention `F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`,
//! so `F(|psi>, |phi>) = |<psi|phi>|^2`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    c64, displacement_elements, hermitian_eigen, psd_sqrt, require_modes, CMatrix, DensityOperator,
};

/// Default threshold separating truncation noise from a negative partial-transpose eigenvalue.
pub const TOL_PPT: f64 = 1e-8;

fn same_shape(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    rho.cutoff().ensure_same(&sigma.cutoff())?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    Ok(())
}

/// Matrix-level fidelity of two positive semidefinite matrices.
pub(crate) fn fidelity_matrices(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let (vals, vecs) = hermitian_eigen(rho);
    let floor = round_off_floor(&vals);
    let mut root = CMatrix::zeros(rho.nrows(), rho.ncols());
    for (k, &v) in vals.iter().enumerate().filter(|(_, &v)| v > floor) {
        let col = vecs.column(k);
        root += (col * col.adjoint()).scale(v.sqrt());
    }
    let inner = &root * sigma * &root;
    let (vals, _) = hermitian_eigen(&(&inner + inner.adjoint()).scale(0.5));
    let floor = round_off_floor(&vals);
    let s: f64 = vals.iter().filter(|&&v| v > floor).map(|v| v.sqrt()).sum();
    (s * s).min(1.0)
}

/// Eigenvalues at or below this level are eigensolver noise; their square
/// roots would otherwise add `O(sqrt(eps))` to the fidelity.
fn round_off_floor(vals: &[f64]) -> f64 {
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    top * vals.len() as f64 * f64::EPSILON
}

pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_shape(rho, sigma)?;
    Ok(fidelity_matrices(rho.matrix(), sigma.matrix()))
}

/// `||rho - sigma||_1 / 2`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_shape(rho, sigma)?;
    let (vals, _) = hermitian_eigen(&(rho.matrix() - sigma.matrix()));
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// `sqrt(F)` between the thermal marginals of TMSVs with squeezing `r` and `r_prime`: `sech(r - r')`.
pub fn thermal_sqrt_fidelity(r: f64, r_prime: f64) -> Result<f64> {
    if !(r >= 0.0 && r_prime >= 0.0) {
        return Err(Error::Domain(format!("squeezing must be >= 0, got {r}, {r_prime}")));
    }
    Ok(1.0 / (r - r_prime).cosh())
}

/// Closed-form fidelity of two thermal states,
/// `(sqrt((1+n)(1+m)) - sqrt(n m))^{-2}`.
pub fn thermal_fidelity(nbar: f64, mbar: f64) -> Result<f64> {
    if !(nbar >= 0.0 && mbar >= 0.0) {
        return Err(Error::Domain(format!("nbar must be >= 0, got {nbar}, {mbar}")));
    }
    let d = ((1.0 + nbar) * (1.0 + mbar)).sqrt() - (nbar * mbar).sqrt();
    Ok(1.0 / (d * d))
}

/// Largest squeezing offset `dr` with `sech(dr)^2 >= target`, found by bisection.
pub fn squeezing_margin(target_fidelity: f64) -> Result<f64> {
    if !(target_fidelity > 0.0 && target_fidelity <= 1.0) {
        return Err(Error::Domain(format!("fidelity {target_fidelity} outside (0,1]")));
    }
    let f = |dr: f64| 1.0 / dr.cosh().powi(2) - target_fidelity;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Squeezing offset expressed in decibels, `20 dr / ln 10`.
pub fn squeezing_db(dr: f64) -> f64 {
    20.0 * dr / std::f64::consts::LN_10
}

/// Von Neumann entropy in nats.
pub fn entropy(rho: &DensityOperator) -> f64 {
    let (vals, _) = rho.eigen();
    vals.iter()
        .filter(|&&v| v > 1e-300)
        .map(|&v| -v * v.ln())
        .sum()
}

/// `(n+1) ln(n+1) - n ln n`.
pub fn thermal_entropy(nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0) {
        return Err(Error::Domain(format!("nbar must be >= 0, got {nbar}")));
    }
    if nbar == 0.0 {
        return Ok(0.0);
    }
    Ok((nbar + 1.0) * (nbar + 1.0).ln() - nbar * nbar.ln())
}

/// Percent gain in entanglement entropy available by squeezing `dr` harder,
/// with `dr` the offset keeping the marginal fidelity at 0.99.
pub fn ef_margin_curve(r_values: &[f64]) -> Result<Vec<f64>> {
    let dr = squeezing_margin(0.99)?;
    r_values
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("r must be > 0, got {r}")));
            }
            let base = thermal_entropy(r.sinh().powi(2))?;
            let more = thermal_entropy((r + dr).sinh().powi(2))?;
            Ok(100.0 * (more - base) / base)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FvdgBounds {
    pub lower: f64,
    pub upper: f64,
    /// The upper bound is only reported as valid when one argument is pure.
    pub upper_valid: bool,
}

/// `(1 - T)^2 <= F <= 1 - T^2`.
pub fn fvdg_bounds(rho: &DensityOperator, sigma: &DensityOperator) -> Result<FvdgBounds> {
    let t = trace_distance(rho, sigma)?;
    Ok(FvdgBounds {
        lower: (1.0 - t).max(0.0).powi(2),
        upper: 1.0 - t * t,
        upper_valid: rho.is_pure(1e-9) || sigma.is_pure(1e-9),
    })
}

/// Fidelity lower bound for the mixture `p rho_th + (1 - p) rho_c` against a
/// reference, from the trace distances of each component to that reference.
pub fn fvdg_mixture_lower(p: f64, td_th: f64, td_c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [0,1]")));
    }
    Ok((p * (1.0 - td_th) + (1.0 - p) * (1.0 - td_c)).powi(2))
}

/// Phase-space rectangle sampled at `nx x np` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl WignerSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nx: points,
            np: points,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min && self.p_max > self.p_min && self.nx >= 2 && self.np >= 2) {
            return Err(Error::Domain(format!("bad Wigner grid {self:?}")));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (self.p_max - self.p_min) * j as f64 / (self.np - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
    /// `values[(i, j)] = W(x_i, p_j)`.
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn spec(&self) -> WignerSpec {
        WignerSpec {
            x_min: self.x_min,
            x_max: self.x_max,
            p_min: self.p_min,
            p_max: self.p_max,
            nx: self.nx,
            np: self.np,
        }
    }

    /// Trapezoid-rule integral over the rectangle.
    pub fn integral(&self) -> f64 {
        let dx = (self.x_max - self.x_min) / (self.nx - 1) as f64;
        let dp = (self.p_max - self.p_min) / (self.np - 1) as f64;
        let weight = |k: usize, len: usize| if k == 0 || k == len - 1 { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for j in 0..self.np {
            for i in 0..self.nx {
                acc += weight(i, self.nx) * weight(j, self.np) * self.values[(i, j)];
            }
        }
        acc * dx * dp
    }
}

/// Wigner function from the displaced parity,
/// `W(x, p) = 1/(pi hbar) sum_mn rho_mn (-1)^n <n|D(-2 alpha)|m>`, `alpha = (x + i p)/sqrt(2 hbar)`,
/// normalized so that it integrates to `Tr(rho)` over `dx dp`.
///
/// The matrix elements are exact, so the value is exact for the truncated state.
pub fn wigner(rho: &DensityOperator, spec: WignerSpec) -> Result<WignerGrid> {
    require_modes(rho.modes(), 1)?;
    spec.validate()?;
    let n = rho.cutoff().n_max();
    let hbar = rho.cutoff().hbar();
    let prefactor = 1.0 / (std::f64::consts::PI * hbar);
    let scale = (2.0 * hbar).sqrt();
    let m = rho.matrix();
    let rows: Vec<Vec<f64>> = (0..spec.nx)
        .into_par_iter()
        .map(|i| {
            (0..spec.np)
                .map(|j| {
                    let alpha = c64(spec.x(i), spec.p(j)) / scale;
                    let d = displacement_elements(-2.0 * alpha, n, n);
                    let mut acc = c64(0.0, 0.0);
                    for col in 0..n {
                        for row in 0..n {
                            let sign = if row % 2 == 0 { 1.0 } else { -1.0 };
                            acc += m[(col, row)] * d[(row, col)] * sign;
                        }
                    }
                    prefactor * acc.re
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(spec.nx, spec.np, |i, j| rows[i][j]);
    Ok(WignerGrid {
        x_min: spec.x_min,
        x_max: spec.x_max,
        p_min: spec.p_min,
        p_max: spec.p_max,
        nx: spec.nx,
        np: spec.np,
        values,
    })
}

pub fn wigner_min(grid: &WignerGrid) -> f64 {
    grid.values.min()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptResult {
    pub entangled: bool,
    pub min_eigenvalue: f64,
    /// `ln ||rho^{T_B}||_1`.
    pub log_negativity: f64,
}

/// Peres-Horodecki test with the default tolerance [`TOL_PPT`].
pub fn ppt_entangled(rho: &DensityOperator) -> Result<PptResult> {
    ppt_entangled_with(rho, TOL_PPT)
}

pub fn ppt_entangled_with(rho: &DensityOperator, tol: f64) -> Result<PptResult> {
    let pt = rho.partial_transpose()?;
    Ok(ppt_from_matrix(&pt, tol))
}

fn ppt_from_matrix(pt: &CMatrix, tol: f64) -> PptResult {
    let (vals, _) = hermitian_eigen(pt);
    let min = vals.last().copied().unwrap_or(0.0);
    PptResult {
        entangled: min < -tol,
        min_eigenvalue: min,
        log_negativity: vals.iter().map(|v| v.abs()).sum::<f64>().ln(),
    }
}

/// Peres-Horodecki test for a two-qubit density matrix.
pub fn ppt_two_qubit(rho: &CMatrix) -> Result<PptResult> {
    check_two_qubit(rho)?;
    let pt = CMatrix::from_fn(4, 4, |i, j| {
        let (a, b) = (i / 2, i % 2);
        let (a2, b2) = (j / 2, j % 2);
        rho[(a * 2 + b2, a2 * 2 + b)]
    });
    Ok(ppt_from_matrix(&pt, TOL_PPT))
}

fn check_two_qubit(rho: &CMatrix) -> Result<()> {
    if rho.shape() != (4, 4) {
        return Err(Error::InvalidState(format!("expected 4x4, got {:?}", rho.shape())));
    }
    if (rho - rho.adjoint()).camax() > 1e-9 {
        return Err(Error::InvalidState("not Hermitian".into()));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let (vals, _) = hermitian_eigen(rho);
    if vals[3] < -1e-9 {
        return Err(Error::InvalidState(format!("negative eigenvalue {}", vals[3])));
    }
    Ok(())
}

/// Wootters concurrence of a two-qubit density matrix (basis `|00>, |01>, |10>, |11>`).
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    check_two_qubit(rho)?;
    // sigma_y (x) sigma_y is real: anti-diagonal (-1, 1, 1, -1)
    let yy = CMatrix::from_fn(4, 4, |i, j| {
        if i + j == 3 {
            c64(if i == 0 || i == 3 { -1.0 } else { 1.0 }, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let flipped = &yy * rho.conjugate() * &yy;
    let root = psd_sqrt(rho);
    let (vals, _) = hermitian_eigen(&(&root * flipped * &root));
    let l: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Entanglement of formation in ebits, `h((1 + sqrt(1 - C^2))/2)`.
pub fn ef_from_concurrence(c: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&c) {
        return Err(Error::Domain(format!("concurrence {c} outside [0,1]")));
    }
    let c = c.clamp(0.0, 1.0);
    let x = 0.5 * (1.0 + (1.0 - c * c).sqrt());
    let h = |v: f64| if v <= 0.0 { 0.0 } else { -v * v.log2() };
    Ok(h(x) + h(1.0 - x))
}

/// `S = |<XX> + <XZ> - <ZX> + <ZZ>|`.
pub fn chsh_s(xx: f64, xz: f64, zx: f64, zz: f64) -> Result<f64> {
    for v in [xx, xz, zx, zz] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("expectation {v} outside [-1,1]")));
        }
    }
    Ok((xx + xz - zx + zz).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Cutoff, PureState};
    use crate::states::{cat_odd, thermal};

    #[test]
    fn orthogonal_and_equal_states() {
        let cut = Cutoff::new(4).unwrap();
        let zero = PureState::fock(&[0], cut).unwrap().to_density();
        let one = PureState::fock(&[1], cut).unwrap().to_density();
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-14);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_pair_matches_closed_form() {
        let cut = Cutoff::for_thermal(3.0).unwrap();
        let a = thermal(1.3, cut).unwrap();
        let b = thermal(2.1, cut).unwrap();
        let want = thermal_fidelity(1.3, 2.1).unwrap();
        assert!((fidelity(&a, &b).unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn margin_in_decibels() {
        let dr = squeezing_margin(0.99).unwrap();
        assert!((dr - (1.0 / 0.99f64.sqrt()).acosh()).abs() < 1e-12);
        assert!((squeezing_db(dr) - 0.87).abs() < 0.01);
    }

    #[test]
    fn ef_margin_rejects_zero() {
        assert!(ef_margin_curve(&[0.0]).is_err());
    }

    #[test]
    fn wigner_origin_values() {
        let cut = Cutoff::new(40).unwrap();
        let spec = WignerSpec::square(1.0, 3);
        let vac = wigner(&PureState::vacuum(cut, 1).unwrap().to_density(), spec).unwrap();
        let origin = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((vac.values[(1, 1)] - origin).abs() < 1e-12);
        let cat = cat_odd(c64(0.0, -1.5), cut).unwrap().to_density();
        let w = wigner(&cat, spec).unwrap();
        assert!((w.values[(1, 1)] + cat.trace() * origin).abs() < 1e-12);
    }

    #[test]
    fn coherent_wigner_is_shifted_gaussian() {
        let cut = Cutoff::new(40).unwrap();
        let alpha = c64(0.7, -0.3);
        let rho = crate::states::coherent(alpha, cut).to_density();
        let spec = WignerSpec::square(3.0, 7);
        let w = wigner(&rho, spec).unwrap();
        let (x0, p0) = (2.0 * alpha.re, 2.0 * alpha.im);
        for i in 0..7 {
            for j in 0..7 {
                let (x, p) = (spec.x(i), spec.p(j));
                let want = (-((x - x0).powi(2) + (p - p0).powi(2)) / 2.0).exp() / (2.0 * std::f64::consts::PI);
                assert!((w.values[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn concurrence_extremes() {
        let half = c64(0.5, 0.0);
        let mut bell = CMatrix::zeros(4, 4);
        for &i in &[0, 3] {
            for &j in &[0, 3] {
                bell[(i, j)] = half;
            }
        }
        assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-7);
        assert!((ef_from_concurrence(1.0).unwrap() - 1.0).abs() < 1e-12);
        let mixed = CMatrix::identity(4, 4) * c64(0.25, 0.0);
        assert!(concurrence(&mixed).unwrap() < 1e-12);
        assert!((ef_from_concurrence(0.89).unwrap() - 0.84).abs() < 0.005);
    }

    #[test]
    fn chsh_rows() {
        assert!((chsh_s(0.6320, 0.6624, -0.6002, 0.6570).unwrap() - 2.5516).abs() < 1e-12);
        assert!((chsh_s(0.3238, 0.3396, -0.3100, 0.3458).unwrap() - 1.3192).abs() < 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((chsh_s(r, r, -r, r).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(chsh_s(1.2, 0.0, 0.0, 0.0).is_err());
    }
}
