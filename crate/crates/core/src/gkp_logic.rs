//! Logical qubits of the square GKP code: Pauli expectations, two-qubit
//! tomography, and a rotated CHSH test.
//!
//! Logical Paulis are read out in two ways. `Estimator::BinnedHomodyne` measures
//! the quadrature conjugate to each Pauli's lattice displacement and assigns the
//! sign `(-1)^round(q / spacing)`; `Estimator::Displacement` takes the real part of
//! the lattice displacement itself. Both agree on ideal codewords. Additive Gaussian
//! noise on either mode is folded in analytically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use crate::fock::{
    c64, displacement_elements, hermite_functions, hermitian_eigen, require_modes, CMatrix, Cutoff,
    DensityOperator, PureState, C64,
};
use crate::metrics::{chsh_s, concurrence, ef_from_concurrence, ppt_two_qubit, PptResult};
use crate::states::{gkp_bell, gkp_spacing};
use crate::teleport::{tmsv_teleport_noise, GaussianNoise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn matrix(self) -> CMatrix {
        let (o, l, i) = (c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 1.0));
        let entries = match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }

    /// Phase-space displacement `(dx, dp)` realizing the logical operator, in units
    /// of the lattice spacing.
    fn lattice_shift(self) -> (f64, f64) {
        match self {
            Pauli::I => (0.0, 0.0),
            Pauli::X => (1.0, 0.0),
            Pauli::Z => (0.0, 1.0),
            Pauli::Y => (1.0, 1.0),
        }
    }

    /// Quadrature angle read out by the binned estimator and the sign period on it.
    fn readout(self, spacing: f64) -> (f64, f64) {
        match self {
            Pauli::I | Pauli::Z => (0.0, spacing),
            Pauli::X => (std::f64::consts::FRAC_PI_2, spacing),
            Pauli::Y => (-std::f64::consts::FRAC_PI_4, spacing / std::f64::consts::SQRT_2),
        }
    }
}

/// Pauli label per mode; single-mode states use only the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliLabel(pub Pauli, pub Pauli);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Estimator {
    #[default]
    BinnedHomodyne,
    Displacement,
}

/// How logical Paulis are read out and which classical noise each mode carries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Readout {
    pub estimator: Estimator,
    pub noise: [Option<GaussianNoise>; 2],
}

impl Readout {
    pub fn noiseless(estimator: Estimator) -> Self {
        Self {
            estimator,
            noise: [None, None],
        }
    }

    /// Noise of teleporting the second mode through a TMSV of squeezing `r` after `channel`.
    pub fn teleported(estimator: Estimator, r: f64, channel: &ChannelSpec, hbar: f64) -> Result<Self> {
        Ok(Self {
            estimator,
            noise: [None, Some(tmsv_teleport_noise(r, channel, hbar)?)],
        })
    }
}

fn noise_variance(noise: Option<GaussianNoise>, theta: f64) -> f64 {
    noise.map_or(0.0, |n| n.var_x * theta.cos().powi(2) + n.var_p * theta.sin().powi(2))
}

/// Sign `(-1)^round(q / period)` averaged over Gaussian noise of variance `var`.
fn smoothed_sign(q: f64, period: f64, var: f64) -> f64 {
    let k = (q / period).round();
    let parity = |k: f64| if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    if var <= 0.0 {
        return parity(k);
    }
    let sd = var.sqrt();
    let reach = (8.0 * sd / period).ceil() + 1.0;
    let cdf = |t: f64| 0.5 * libm::erfc(-(t - q) / (sd * std::f64::consts::SQRT_2));
    let mut acc = 0.0;
    let mut j = k - reach;
    while j <= k + reach {
        acc += parity(j) * (cdf((j + 0.5) * period) - cdf((j - 0.5) * period));
        j += 1.0;
    }
    acc
}

/// Quadrature grid wide enough for every retained Fock level.
fn readout_grid(cutoff: Cutoff) -> (Vec<f64>, f64) {
    let hbar = cutoff.hbar();
    let top = (2.0 * cutoff.n_max() as f64 + 1.0).sqrt();
    let half = hbar.sqrt() * (top + 6.0);
    let step = 2.0 * std::f64::consts::PI * hbar.sqrt() / top / 16.0;
    let len = (2.0 * half / step).ceil() as usize + 1;
    let step = 2.0 * half / (len - 1) as f64;
    ((0..len).map(|j| -half + step * j as f64).collect(), step)
}

/// Rows `<q_theta|k>` on the grid.
fn rotated_table(cutoff: Cutoff, theta: f64, xs: &[f64]) -> CMatrix {
    let n = cutoff.n_max();
    let mut h = vec![0.0; n];
    let mut out = CMatrix::zeros(xs.len(), n);
    for (j, &x) in xs.iter().enumerate() {
        hermite_functions(x, cutoff.hbar(), &mut h);
        for k in 0..n {
            out[(j, k)] = C64::from_polar(h[k], -(k as f64) * theta);
        }
    }
    out
}

fn binned_pure(psi: &PureState, labels: [Pauli; 2], noise: [Option<GaussianNoise>; 2]) -> Result<f64> {
    let cutoff = psi.cutoff();
    let spacing = gkp_spacing(cutoff.hbar());
    let (xs, step) = readout_grid(cutoff);
    let signs = |mode: usize| {
        let (theta, period) = labels[mode].readout(spacing);
        let var = noise_variance(noise[mode], theta);
        let s: Vec<f64> = if labels[mode] == Pauli::I {
            vec![1.0; xs.len()]
        } else {
            xs.iter().map(|&q| smoothed_sign(q, period, var)).collect()
        };
        (theta, s)
    };
    match psi.modes() {
        1 => {
            let (theta, s) = signs(0);
            let amps = rotated_table(cutoff, theta, &xs) * psi.amplitudes();
            Ok(amps.iter().zip(&s).map(|(a, s)| a.norm_sqr() * s).sum::<f64>() * step)
        }
        _ => {
            let (t1, s1) = signs(0);
            let (t2, s2) = signs(1);
            let u1 = rotated_table(cutoff, t1, &xs);
            let u2 = rotated_table(cutoff, t2, &xs);
            let joint = &u1 * psi.amplitude_matrix()? * u2.transpose();
            let total: f64 = (0..xs.len())
                .into_par_iter()
                .map(|j| {
                    let col = joint.column(j);
                    s2[j] * col.iter().zip(&s1).map(|(a, s)| a.norm_sqr() * s).sum::<f64>()
                })
                .sum();
            Ok(total * step * step)
        }
    }
}

/// `exp(i (dp x - dx p) / hbar)` for a lattice shift, as `D(beta)` with `beta = (dx + i dp) / sqrt(2 hbar)`,
/// and its damping under additive noise.
fn displacement_factor(pauli: Pauli, cutoff: Cutoff, noise: Option<GaussianNoise>) -> (CMatrix, f64) {
    let hbar = cutoff.hbar();
    let a = gkp_spacing(hbar);
    let (dx, dp) = pauli.lattice_shift();
    let (dx, dp) = (dx * a, dp * a);
    let n = cutoff.n_max();
    let d = displacement_elements(c64(dx, dp) / (2.0 * hbar).sqrt(), n, n);
    let damping = noise.map_or(1.0, |nz| (-(dp * dp * nz.var_x + dx * dx * nz.var_p) / (2.0 * hbar * hbar)).exp());
    (d, damping)
}

fn displacement_pure(psi: &PureState, labels: [Pauli; 2], noise: [Option<GaussianNoise>; 2]) -> Result<f64> {
    let cutoff = psi.cutoff();
    match psi.modes() {
        1 => {
            let (d, damp) = displacement_factor(labels[0], cutoff, noise[0]);
            let v = psi.amplitudes();
            Ok((v.adjoint() * d * v)[(0, 0)].re * damp)
        }
        _ => {
            let (d1, f1) = displacement_factor(labels[0], cutoff, noise[0]);
            let (d2, f2) = displacement_factor(labels[1], cutoff, noise[1]);
            let c = psi.amplitude_matrix()?;
            let moved = d1 * &c * d2.transpose();
            let inner: C64 = c.iter().zip(moved.iter()).map(|(a, b)| a.conj() * b).sum();
            Ok(inner.re * f1 * f2)
        }
    }
}

/// Logical Pauli expectation of a pure one- or two-mode state.
pub fn logical_pauli_expectation_pure(psi: &PureState, label: PauliLabel, readout: &Readout) -> Result<f64> {
    let labels = if psi.modes() == 1 {
        [label.0, Pauli::I]
    } else {
        [label.0, label.1]
    };
    if labels == [Pauli::I, Pauli::I] {
        return Ok(psi.norm_sqr());
    }
    match readout.estimator {
        Estimator::BinnedHomodyne => binned_pure(psi, labels, readout.noise),
        Estimator::Displacement => displacement_pure(psi, labels, readout.noise),
    }
}

/// Logical Pauli expectation of a density operator, summed over its eigen-branches.
pub fn logical_pauli_expectation(rho: &DensityOperator, label: PauliLabel, readout: &Readout) -> Result<f64> {
    if [label.0, label.1] == [Pauli::I, Pauli::I] || (rho.modes() == 1 && label.0 == Pauli::I) {
        return Ok(rho.trace());
    }
    let (vals, vecs) = rho.eigen();
    let top = vals.first().copied().unwrap_or(0.0);
    let mut acc = 0.0;
    for (k, &w) in vals.iter().enumerate() {
        if w <= 1e-12 * top {
            continue;
        }
        let branch = PureState::new(vecs.column(k).into_owned(), rho.cutoff(), rho.modes())?;
        acc += w * logical_pauli_expectation_pure(&branch, label, readout)?;
    }
    Ok(acc)
}

/// Expectations indexed `[first][second]` by `Pauli::index`.
pub type PauliTable = [[f64; 4]; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Tomogram {
    pub expectations: PauliTable,
    pub reconstructed: CMatrix,
    pub projected: CMatrix,
}

/// Linear inversion `1/4 sum <P_i P_j> sigma_i (x) sigma_j`.
pub fn reconstruct(expectations: &PauliTable) -> CMatrix {
    let mut rho = CMatrix::zeros(4, 4);
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            let term = p.matrix().kronecker(&q.matrix());
            rho += term * c64(expectations[p.index()][q.index()] / 4.0, 0.0);
        }
    }
    rho
}

pub fn tomography_from_expectations(expectations: PauliTable) -> Result<Tomogram> {
    let reconstructed = reconstruct(&expectations);
    let projected = psd_project(&reconstructed)?;
    Ok(Tomogram {
        expectations,
        reconstructed,
        projected,
    })
}

/// Two-qubit tomography of a pure two-mode logical state.
pub fn tomography_2q(psi: &PureState, readout: &Readout) -> Result<Tomogram> {
    require_modes(psi.modes(), 2)?;
    let labels: Vec<PauliLabel> = Pauli::ALL
        .iter()
        .flat_map(|&p| Pauli::ALL.iter().map(move |&q| PauliLabel(p, q)))
        .collect();
    let values = labels
        .iter()
        .map(|&l| logical_pauli_expectation_pure(psi, l, readout))
        .collect::<Result<Vec<f64>>>()?;
    let norm = values[0];
    let mut table = [[0.0; 4]; 4];
    for (l, v) in labels.iter().zip(values) {
        table[l.0.index()][l.1.index()] = v / norm;
    }
    tomography_from_expectations(table)
}

/// Nearest density matrix in Frobenius norm: clip negative eigenvalues and
/// renormalize the trace.
pub fn psd_project(mat: &CMatrix) -> Result<CMatrix> {
    let herm = (mat + mat.adjoint()) * c64(0.5, 0.0);
    let (vals, vecs) = hermitian_eigen(&herm);
    let total: f64 = vals.iter().filter(|&&v| v > 0.0).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let mut out = CMatrix::zeros(mat.nrows(), mat.ncols());
    for (k, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let col = vecs.column(k);
            out += col * col.adjoint() * c64(v / total, 0.0);
        }
    }
    Ok(out)
}

/// `(|00> + |11>) / sqrt 2` as a 4x4 density matrix.
pub fn bell_density() -> CMatrix {
    let mut rho = CMatrix::zeros(4, 4);
    for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
        rho[(i, j)] = c64(0.5, 0.0);
    }
    rho
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellTest {
    pub xx: f64,
    pub xz: f64,
    pub zx: f64,
    pub zz: f64,
    pub s: f64,
}

/// Rotation of the first qubit about Y applied in the Heisenberg picture:
/// `X -> cos(t) X - sin(t) Z`, `Z -> cos(t) Z + sin(t) X`.
pub const BELL_ROTATION: f64 = 3.0 * std::f64::consts::FRAC_PI_4;

/// CHSH combination of XX, XZ, ZX, ZZ, with the first qubit optionally rotated by
/// `BELL_ROTATION` at the logical level.
pub fn bell_test_from_table(table: &PauliTable, rotate: bool) -> Result<BellTest> {
    let get = |p: Pauli, q: Pauli| table[p.index()][q.index()];
    let (c, s) = if rotate {
        (BELL_ROTATION.cos(), BELL_ROTATION.sin())
    } else {
        (1.0, 0.0)
    };
    let first_x = |q: Pauli| c * get(Pauli::X, q) - s * get(Pauli::Z, q);
    let first_z = |q: Pauli| c * get(Pauli::Z, q) + s * get(Pauli::X, q);
    let clamp = |v: f64| v.clamp(-1.0, 1.0);
    let (xx, xz) = (clamp(first_x(Pauli::X)), clamp(first_x(Pauli::Z)));
    let (zx, zz) = (clamp(first_z(Pauli::X)), clamp(first_z(Pauli::Z)));
    Ok(BellTest {
        xx,
        xz,
        zx,
        zz,
        s: chsh_s(xx, xz, zx, zz)?,
    })
}

pub fn bell_test(psi: &PureState, rotate: bool, readout: &Readout) -> Result<BellTest> {
    require_modes(psi.modes(), 2)?;
    let mut table = [[0.0; 4]; 4];
    let norm = psi.norm_sqr();
    for p in [Pauli::X, Pauli::Z] {
        for q in [Pauli::X, Pauli::Z] {
            table[p.index()][q.index()] = logical_pauli_expectation_pure(psi, PauliLabel(p, q), readout)? / norm;
        }
    }
    bell_test_from_table(&table, rotate)
}

/// A GKP Bell pair whose second half is teleported through a TMSV resource.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleportedPair {
    pub epsilon: f64,
    pub squeezing: f64,
    pub channel: ChannelSpec,
    pub n_max: usize,
    pub estimator: Estimator,
}

impl TeleportedPair {
    pub fn new(epsilon: f64, squeezing: f64, channel: ChannelSpec) -> Self {
        Self {
            epsilon,
            squeezing,
            channel,
            n_max: 110,
            estimator: Estimator::BinnedHomodyne,
        }
    }

    pub fn readout(&self) -> Result<Readout> {
        Readout::teleported(self.estimator, self.squeezing, &self.channel, 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub tomogram: Tomogram,
    pub bell_fidelity: f64,
    pub concurrence: f64,
    pub entanglement_of_formation: f64,
    pub ppt: PptResult,
    pub bell: BellTest,
    pub bell_rotated: BellTest,
    pub lost_mass: f64,
}

/// Builds the pair, reconstructs it after teleportation and runs both Bell tests.
pub fn analyze_pair(config: &TeleportedPair) -> Result<PairReport> {
    let cutoff = Cutoff::new(config.n_max)?;
    let psi = gkp_bell(config.epsilon, cutoff)?;
    analyze_state(&psi, &config.readout()?)
}

pub fn analyze_state(psi: &PureState, readout: &Readout) -> Result<PairReport> {
    let tomogram = tomography_2q(psi, readout)?;
    let bell = bell_density();
    let bell_fidelity = (bell.adjoint() * &tomogram.projected).trace().re;
    let c = concurrence(&tomogram.projected)?;
    Ok(PairReport {
        bell: bell_test_from_table(&tomogram.expectations, false)?,
        bell_rotated: bell_test_from_table(&tomogram.expectations, true)?,
        bell_fidelity,
        concurrence: c,
        entanglement_of_formation: ef_from_concurrence(c)?,
        ppt: ppt_two_qubit(&tomogram.projected)?,
        tomogram,
        lost_mass: psi.lost_mass(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{gkp, GkpParams};

    fn ideal_bell_table() -> PauliTable {
        let mut t = [[0.0; 4]; 4];
        t[0][0] = 1.0;
        t[1][1] = 1.0;
        t[2][2] = -1.0;
        t[3][3] = 1.0;
        t
    }

    #[test]
    fn ideal_bell_round_trip() {
        let tomo = tomography_from_expectations(ideal_bell_table()).unwrap();
        assert!((&tomo.projected - bell_density()).camax() < 1e-12);
        assert!((tomo.reconstructed - bell_density()).camax() < 1e-12);
    }

    #[test]
    fn psd_clip_example() {
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [0.6, 0.6, -0.1, -0.1].map(|v| c64(v, 0.0)).to_vec(),
        ));
        let out = psd_project(&diag).unwrap();
        let want = [0.5, 0.5, 0.0, 0.0];
        for k in 0..4 {
            assert!((out[(k, k)].re - want[k]).abs() < 1e-12);
        }
        assert!(matches!(psd_project(&(-CMatrix::identity(4, 4))), Err(Error::ZeroTrace)));
    }

    #[test]
    fn ideal_rotation_reaches_tsirelson() {
        let t = bell_test_from_table(&ideal_bell_table(), true).unwrap();
        assert!((t.s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((bell_test_from_table(&ideal_bell_table(), false).unwrap().s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_codewords() {
        let cut = Cutoff::new(90).unwrap();
        let zero = gkp(GkpParams::default(), cut).unwrap();
        let plus = gkp(GkpParams::new(std::f64::consts::FRAC_PI_2, 0.1), cut).unwrap();
        for estimator in [Estimator::BinnedHomodyne, Estimator::Displacement] {
            let r = Readout::noiseless(estimator);
            let z = logical_pauli_expectation_pure(&zero, PauliLabel(Pauli::Z, Pauli::I), &r).unwrap();
            assert!(z > 0.9, "{estimator:?} Z {z}");
            let x = logical_pauli_expectation_pure(&plus, PauliLabel(Pauli::X, Pauli::I), &r).unwrap();
            let zp = logical_pauli_expectation_pure(&plus, PauliLabel(Pauli::Z, Pauli::I), &r).unwrap();
            assert!(x > 0.9, "{estimator:?} X {x}");
            assert!(zp.abs() < 0.05, "{estimator:?} Z on plus {zp}");
        }
    }

    #[test]
    fn mixed_and_pure_paths_agree() {
        let cut = Cutoff::new(70).unwrap();
        let plus = gkp(GkpParams::new(1.0, 0.15), cut).unwrap();
        let r = Readout::noiseless(Estimator::BinnedHomodyne);
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let a = logical_pauli_expectation_pure(&plus, PauliLabel(p, Pauli::I), &r).unwrap();
            let b = logical_pauli_expectation(&plus.to_density(), PauliLabel(p, Pauli::I), &r).unwrap();
            assert!((a - b).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn smoothed_sign_limits() {
        assert_eq!(smoothed_sign(0.1, 1.0, 0.0), 1.0);
        assert_eq!(smoothed_sign(0.9, 1.0, 0.0), -1.0);
        assert!((smoothed_sign(0.0, 1.0, 1e-8) - 1.0).abs() < 1e-9);
        assert!(smoothed_sign(0.0, 1.0, 100.0).abs() < 1e-6);
    }

    #[test]
    fn displacement_noise_damping_matches_sampled_average() {
        // <D> under Gaussian noise equals the noiseless value times exp(-(dp^2 vx + dx^2 vp) / (2 hbar^2))
        let cut = Cutoff::new(90).unwrap();
        let psi = gkp(GkpParams::default(), cut).unwrap();
        let noise = GaussianNoise::isotropic(0.2).unwrap();
        let clean = logical_pauli_expectation_pure(&psi, PauliLabel(Pauli::Z, Pauli::I), &Readout::noiseless(Estimator::Displacement)).unwrap();
        let noisy = logical_pauli_expectation_pure(
            &psi,
            PauliLabel(Pauli::Z, Pauli::I),
            &Readout {
                estimator: Estimator::Displacement,
                noise: [Some(noise), None],
            },
        )
        .unwrap();
        let a2 = std::f64::consts::PI * 2.0;
        assert!((noisy - clean * (-a2 * 0.2 / 8.0).exp()).abs() < 1e-12);
    }
}
