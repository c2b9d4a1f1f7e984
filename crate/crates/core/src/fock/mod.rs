//! Truncated Fock-space containers: cutoffs, pure states, density operators
//! and operators on one or two modes.
//!
//! Two-mode objects use the basis ordering `|a, b> -> a * n_max + b`, mode A major.
//! Quadratures follow `x = sqrt(hbar/2) (a + a^dag)`, so vacuum variance is `hbar/2`.

mod displacement;
mod hermite;
mod linalg;
mod ops;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use displacement::{displacement, displacement_elements};
pub use hermite::{hermite_functions, hermite_table, wavefunction, Grid};
pub use linalg::{expm, hermitian_eigen, psd_sqrt};
pub use ops::{
    annihilation, beamsplitter, number, parity, quadrature_operator, two_mode_squeezer,
};

pub(crate) use displacement::ln_factorials;
pub(crate) use ops::beamsplitter_sector;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default truncation tolerance on lost norm.
pub const TAU_NORM: f64 = 1e-6;
const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Per-mode Fock truncation and the value of hbar used by every quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    n_max: usize,
    hbar: f64,
    tau_norm: f64,
}

impl Cutoff {
    pub const DEFAULT_HBAR: f64 = 2.0;

    /// Keeps levels `|0>..|n_max-1>` per mode, hbar = 2.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Domain("n_max must be at least 1".into()));
        }
        Ok(Self {
            n_max,
            hbar: Self::DEFAULT_HBAR,
            tau_norm: TAU_NORM,
        })
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hbar, ..self })
    }

    pub fn with_tau_norm(self, tau_norm: f64) -> Result<Self> {
        if !(tau_norm > 0.0 && tau_norm < 1.0) {
            return Err(Error::Domain(format!("tau_norm must lie in (0,1), got {tau_norm}")));
        }
        Ok(Self { tau_norm, ..self })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn tau_norm(&self) -> f64 {
        self.tau_norm
    }

    pub fn dim(&self, modes: usize) -> usize {
        self.n_max.pow(modes as u32)
    }

    /// Smallest cutoff whose geometric tail `ratio^n_max` is below `tau`.
    pub fn geometric_levels(ratio: f64, tau: f64) -> usize {
        if ratio <= 0.0 {
            return 2;
        }
        let n = (tau.ln() / ratio.ln()).ceil();
        (n as usize).max(2)
    }

    /// Cutoff for a thermal state (or either marginal of a TMSV) of mean photon number `nbar`.
    pub fn for_thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::Domain(format!("nbar must be >= 0, got {nbar}")));
        }
        Self::new(Self::geometric_levels(nbar / (nbar + 1.0), TAU_NORM))
    }

    pub fn for_tmsv(r: f64) -> Result<Self> {
        Self::for_thermal(r.sinh().powi(2))
    }

    /// Cutoff holding all but `TAU_NORM` of a coherent state's Poisson weight.
    pub fn for_coherent(alpha: C64) -> Result<Self> {
        let mean = alpha.norm_sqr();
        let mut p = (-mean).exp();
        let mut acc = p;
        let mut n = 1usize;
        while 1.0 - acc >= TAU_NORM && n < 100_000 {
            p *= mean / n as f64;
            acc += p;
            n += 1;
        }
        Self::new(n.max(2))
    }

    pub fn ensure_same(&self, other: &Cutoff) -> Result<()> {
        if self.n_max != other.n_max || self.hbar != other.hbar {
            return Err(Error::CutoffMismatch {
                left_n: self.n_max,
                left_hbar: self.hbar,
                right_n: other.n_max,
                right_hbar: other.hbar,
            });
        }
        Ok(())
    }
}

/// Which factor of a two-mode object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 1,
        }
    }

    pub fn other(self) -> Mode {
        match self {
            Mode::A => Mode::B,
            Mode::B => Mode::A,
        }
    }
}

/// Quadrature `x cos(theta) + p sin(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
    Rotated(f64),
}

impl Quadrature {
    pub fn angle(self) -> f64 {
        match self {
            Quadrature::X => 0.0,
            Quadrature::P => std::f64::consts::FRAC_PI_2,
            Quadrature::Rotated(theta) => theta,
        }
    }
}

fn check_modes(modes: usize) -> Result<()> {
    if modes == 1 || modes == 2 {
        Ok(())
    } else {
        Err(Error::Mode(format!("only 1 or 2 modes are supported, got {modes}")))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, got })
    }
}

pub(crate) fn require_modes(found: usize, wanted: usize) -> Result<()> {
    if found == wanted {
        Ok(())
    } else {
        Err(Error::Mode(format!("expected a {wanted}-mode object, got {found} modes")))
    }
}

/// Occupation numbers of a basis index.
pub fn occupations(index: usize, n_max: usize, modes: usize) -> [usize; 2] {
    if modes == 1 {
        [index, 0]
    } else {
        [index / n_max, index % n_max]
    }
}

/// State vector in the truncated basis. The norm may fall short of one by the
/// truncated tail, and is never silently renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
    cutoff: Cutoff,
    modes: usize,
}

impl PureState {
    pub fn new(amps: CVector, cutoff: Cutoff, modes: usize) -> Result<Self> {
        check_modes(modes)?;
        check_dim(cutoff.dim(modes), amps.len())?;
        let norm = amps.norm_squared();
        if !norm.is_finite() || norm > 1.0 + 1e-9 {
            return Err(Error::InvalidState(format!("squared norm {norm} exceeds 1")));
        }
        Ok(Self { amps, cutoff, modes })
    }

    pub(crate) fn from_parts(amps: CVector, cutoff: Cutoff, modes: usize) -> Self {
        debug_assert_eq!(amps.len(), cutoff.dim(modes));
        Self { amps, cutoff, modes }
    }

    pub fn vacuum(cutoff: Cutoff, modes: usize) -> Result<Self> {
        Self::fock(&[0, 0][..modes.min(2)], cutoff)
    }

    /// Number state; pass one occupation per mode.
    pub fn fock(occupation: &[usize], cutoff: Cutoff) -> Result<Self> {
        let modes = occupation.len();
        check_modes(modes)?;
        if let Some(&n) = occupation.iter().find(|&&n| n >= cutoff.n_max()) {
            return Err(Error::Domain(format!("level {n} outside cutoff {}", cutoff.n_max())));
        }
        let index = occupation.iter().fold(0, |acc, &n| acc * cutoff.n_max() + n);
        let mut amps = CVector::zeros(cutoff.dim(modes));
        amps[index] = c64(1.0, 0.0);
        Ok(Self::from_parts(amps, cutoff, modes))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn lost_mass(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    /// Errors if more than `tau_norm` of the norm is missing.
    pub fn check_normalized(&self) -> Result<()> {
        let lost = self.lost_mass();
        if lost > self.cutoff.tau_norm() {
            return Err(Error::CutoffTooSmall {
                n_max: self.cutoff.n_max(),
                lost,
            });
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.amps.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self::from_parts(self.amps.unscale(norm), self.cutoff, self.modes))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.cutoff.ensure_same(&other.cutoff)?;
        require_modes(other.modes, self.modes)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density(&self) -> DensityOperator {
        let mat = &self.amps * self.amps.adjoint();
        DensityOperator::from_parts(mat, self.cutoff, self.modes)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        self.cutoff.ensure_same(&other.cutoff)?;
        require_modes(self.modes, 1)?;
        require_modes(other.modes, 1)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(Self::from_parts(amps, self.cutoff, 2))
    }

    /// Two-mode amplitudes as an `n_max x n_max` matrix indexed `[a, b]`.
    pub fn amplitude_matrix(&self) -> Result<CMatrix> {
        require_modes(self.modes, 2)?;
        let n = self.cutoff.n_max();
        Ok(CMatrix::from_fn(n, n, |a, b| self.amps[a * n + b]))
    }

    pub fn from_amplitude_matrix(mat: &CMatrix, cutoff: Cutoff) -> Result<Self> {
        let n = cutoff.n_max();
        check_dim(n, mat.nrows())?;
        check_dim(n, mat.ncols())?;
        let amps = CVector::from_fn(n * n, |i, _| mat[(i / n, i % n)]);
        Self::new(amps, cutoff, 2)
    }

    /// Position-like wavefunction `<q_theta|psi>` of a single mode.
    pub fn wavefunction(&self, quadrature: Quadrature, xs: &[f64]) -> Result<Vec<C64>> {
        require_modes(self.modes, 1)?;
        Ok(wavefunction(
            self.amps.as_slice(),
            quadrature.angle(),
            xs,
            self.cutoff.hbar(),
        ))
    }
}

/// Density operator in the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMatrix,
    cutoff: Cutoff,
    modes: usize,
}

impl DensityOperator {
    /// Validates shape and Hermiticity; positivity and trace are checked by
    /// [`DensityOperator::check_invariants`].
    pub fn new(mat: CMatrix, cutoff: Cutoff, modes: usize) -> Result<Self> {
        check_modes(modes)?;
        let dim = cutoff.dim(modes);
        check_dim(dim, mat.nrows())?;
        check_dim(dim, mat.ncols())?;
        let defect = hermitian_defect(&mat);
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.2e})")));
        }
        Ok(Self { mat, cutoff, modes })
    }

    pub(crate) fn from_parts(mat: CMatrix, cutoff: Cutoff, modes: usize) -> Self {
        debug_assert_eq!(mat.nrows(), cutoff.dim(modes));
        Self { mat, cutoff, modes }
    }

    /// Builds from a matrix that is Hermitian up to rounding, symmetrizing it.
    pub(crate) fn from_parts_hermitized(mat: CMatrix, cutoff: Cutoff, modes: usize) -> Self {
        let herm = (&mat + mat.adjoint()).scale(0.5);
        Self::from_parts(herm, cutoff, modes)
    }

    pub fn from_diagonal(weights: &[f64], cutoff: Cutoff) -> Result<Self> {
        check_dim(cutoff.n_max(), weights.len())?;
        let mat = CMatrix::from_diagonal(&CVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| c64(w, 0.0)),
        ));
        Ok(Self::from_parts(mat, cutoff, 1))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn lost_mass(&self) -> f64 {
        (1.0 - self.trace()).max(0.0)
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.mat.norm_squared()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(self.mat.scale(factor), self.cutoff, self.modes)
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        Ok(self.scaled(1.0 / tr))
    }

    /// `p * first + (1 - p) * second`.
    pub fn mix(p: f64, first: &DensityOperator, second: &DensityOperator) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("mixing weight {p} outside [0,1]")));
        }
        first.cutoff.ensure_same(&second.cutoff)?;
        require_modes(second.modes, first.modes)?;
        let mat = first.mat.scale(p) + second.mat.scale(1.0 - p);
        Ok(Self::from_parts(mat, first.cutoff, first.modes))
    }

    /// Eigenvalues (descending) and matching eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = self.eigen();
        vals.last().copied().unwrap_or(0.0)
    }

    /// Hermitian, positive semidefinite and trace in `[1 - tau_norm, 1]`, up to rounding.
    pub fn check_invariants(&self) -> Result<()> {
        let defect = hermitian_defect(&self.mat);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.2e})")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        let tr = self.trace();
        if tr > 1.0 + 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} exceeds 1")));
        }
        if tr < 1.0 - self.cutoff.tau_norm() {
            return Err(Error::CutoffTooSmall {
                n_max: self.cutoff.n_max(),
                lost: 1.0 - tr,
            });
        }
        Ok(())
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        let tr = self.trace();
        (self.purity() - tr * tr).abs() <= tol
    }

    /// Reduced state of the kept mode.
    pub fn partial_trace(&self, keep: Mode) -> Result<DensityOperator> {
        require_modes(self.modes, 2)?;
        let n = self.cutoff.n_max();
        let m = &self.mat;
        let out = match keep {
            Mode::A => CMatrix::from_fn(n, n, |a, a2| {
                (0..n).map(|b| m[(a * n + b, a2 * n + b)]).sum()
            }),
            Mode::B => CMatrix::from_fn(n, n, |b, b2| {
                (0..n).map(|a| m[(a * n + b, a * n + b2)]).sum()
            }),
        };
        Ok(Self::from_parts(out, self.cutoff, 1))
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        self.cutoff.ensure_same(&other.cutoff)?;
        require_modes(self.modes, 1)?;
        require_modes(other.modes, 1)?;
        Ok(Self::from_parts(self.mat.kronecker(&other.mat), self.cutoff, 2))
    }

    /// Transpose on mode B.
    pub fn partial_transpose(&self) -> Result<CMatrix> {
        require_modes(self.modes, 2)?;
        let n = self.cutoff.n_max();
        let m = &self.mat;
        Ok(CMatrix::from_fn(n * n, n * n, |i, j| {
            let (a, b) = (i / n, i % n);
            let (a2, b2) = (j / n, j % n);
            m[(a * n + b2, a2 * n + b)]
        }))
    }

    /// `Tr(rho op)`.
    pub fn expectation(&self, op: &ModeOperator) -> Result<C64> {
        self.cutoff.ensure_same(&op.cutoff())?;
        require_modes(op.modes(), self.modes)?;
        let o = op.matrix();
        let dim = self.dim();
        let mut acc = c64(0.0, 0.0);
        for j in 0..dim {
            for i in 0..dim {
                acc += self.mat[(i, j)] * o[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Probability density of a quadrature of a single mode on the given points.
    pub fn quadrature_marginal(&self, quadrature: Quadrature, xs: &[f64]) -> Result<Vec<f64>> {
        require_modes(self.modes, 1)?;
        let n = self.cutoff.n_max();
        let hbar = self.cutoff.hbar();
        let theta = quadrature.angle();
        let phases: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, -(k as f64) * theta)).collect();
        let mut h = vec![0.0; n];
        let mut u = vec![c64(0.0, 0.0); n];
        let out = xs
            .iter()
            .map(|&x| {
                hermite_functions(x, hbar, &mut h);
                for k in 0..n {
                    u[k] = phases[k] * h[k];
                }
                // sum_mn u_m rho_mn conj(u_n)
                let mut acc = c64(0.0, 0.0);
                for col in 0..n {
                    let column = self.mat.column(col);
                    let s: C64 = column.iter().zip(&u).map(|(r, um)| um * r).sum();
                    acc += s * u[col].conj();
                }
                acc.re
            })
            .collect();
        Ok(out)
    }
}

fn hermitian_defect(mat: &CMatrix) -> f64 {
    let n = mat.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Linear operator on one or two truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    mat: CMatrix,
    cutoff: Cutoff,
    modes: usize,
    unitary: bool,
}

impl ModeOperator {
    pub fn new(mat: CMatrix, cutoff: Cutoff, modes: usize) -> Result<Self> {
        check_modes(modes)?;
        let dim = cutoff.dim(modes);
        check_dim(dim, mat.nrows())?;
        check_dim(dim, mat.ncols())?;
        Ok(Self {
            mat,
            cutoff,
            modes,
            unitary: false,
        })
    }

    pub(crate) fn from_parts(mat: CMatrix, cutoff: Cutoff, modes: usize, unitary: bool) -> Self {
        debug_assert_eq!(mat.nrows(), cutoff.dim(modes));
        Self {
            mat,
            cutoff,
            modes,
            unitary,
        }
    }

    pub fn identity(cutoff: Cutoff, modes: usize) -> Result<Self> {
        check_modes(modes)?;
        let dim = cutoff.dim(modes);
        Ok(Self::from_parts(CMatrix::identity(dim, dim), cutoff, modes, true))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// True when the matrix is the box restriction of a unitary.
    pub fn claims_unitary(&self) -> bool {
        self.unitary
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.mat.adjoint(), self.cutoff, self.modes, self.unitary)
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &ModeOperator) -> Result<Self> {
        self.cutoff.ensure_same(&other.cutoff)?;
        require_modes(other.modes, self.modes)?;
        Ok(Self::from_parts(
            &self.mat * &other.mat,
            self.cutoff,
            self.modes,
            self.unitary && other.unitary,
        ))
    }

    pub fn tensor(&self, other: &ModeOperator) -> Result<Self> {
        self.cutoff.ensure_same(&other.cutoff)?;
        require_modes(self.modes, 1)?;
        require_modes(other.modes, 1)?;
        Ok(Self::from_parts(
            self.mat.kronecker(&other.mat),
            self.cutoff,
            2,
            self.unitary && other.unitary,
        ))
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        self.cutoff.ensure_same(&psi.cutoff())?;
        require_modes(psi.modes(), self.modes)?;
        Ok(PureState::from_parts(&self.mat * psi.amplitudes(), self.cutoff, self.modes))
    }

    /// `U rho U^dag`.
    pub fn conjugate(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.cutoff.ensure_same(&rho.cutoff())?;
        require_modes(rho.modes(), self.modes)?;
        let out = &self.mat * rho.matrix() * self.mat.adjoint();
        Ok(DensityOperator::from_parts_hermitized(out, self.cutoff, self.modes))
    }

    /// Largest entry of `|U^dag U - 1|` over basis states whose total photon
    /// number is at most `max_total`.
    pub fn unitarity_defect(&self, max_total: usize) -> f64 {
        let n = self.cutoff.n_max();
        let keep: Vec<usize> = (0..self.mat.ncols())
            .filter(|&i| occupations(i, n, self.modes).iter().sum::<usize>() <= max_total)
            .collect();
        let mut worst: f64 = 0.0;
        for (jj, &j) in keep.iter().enumerate() {
            let cj = self.mat.column(j);
            for &i in &keep[..=jj] {
                let overlap = self.mat.column(i).dotc(&cj);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((overlap - target).norm());
            }
        }
        worst
    }

    /// Unitarity defect away from the truncation edge (total photon number below `n_max - 1`).
    pub fn non_edge_unitarity_defect(&self) -> f64 {
        self.unitarity_defect(self.cutoff.n_max().saturating_sub(2))
    }
}

pub fn tensor(first: &DensityOperator, second: &DensityOperator) -> Result<DensityOperator> {
    first.tensor(second)
}

pub fn partial_trace(rho: &DensityOperator, keep: Mode) -> Result<DensityOperator> {
    rho.partial_trace(keep)
}

pub fn expectation(rho: &DensityOperator, op: &ModeOperator) -> Result<C64> {
    rho.expectation(op)
}

pub fn quadrature_marginal(
    rho: &DensityOperator,
    quadrature: Quadrature,
    grid: &Grid,
) -> Result<Vec<f64>> {
    rho.quadrature_marginal(quadrature, &grid.points())
}
