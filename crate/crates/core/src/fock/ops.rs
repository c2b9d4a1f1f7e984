use nalgebra::DMatrix;

use super::{c64, expm, CMatrix, Cutoff, ModeOperator, Quadrature, C64};
use crate::error::{Error, Result};

/// Levels added above the box when exponentiating generators that do not
/// conserve photon number.
const SQUEEZER_PADDING: usize = 60;

pub fn annihilation(cutoff: Cutoff) -> ModeOperator {
    let n = cutoff.n_max();
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c64((k as f64).sqrt(), 0.0);
    }
    ModeOperator::from_parts(a, cutoff, 1, false)
}

pub fn number(cutoff: Cutoff) -> ModeOperator {
    let n = cutoff.n_max();
    let diag = nalgebra::DVector::from_fn(n, |k, _| c64(k as f64, 0.0));
    ModeOperator::from_parts(CMatrix::from_diagonal(&diag), cutoff, 1, false)
}

/// Photon-number parity `(-1)^n`.
pub fn parity(cutoff: Cutoff) -> ModeOperator {
    let n = cutoff.n_max();
    let diag = nalgebra::DVector::from_fn(n, |k, _| c64(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    ModeOperator::from_parts(CMatrix::from_diagonal(&diag), cutoff, 1, true)
}

/// `x cos(theta) + p sin(theta) = sqrt(hbar/2) (a e^{-i theta} + a^dag e^{i theta})`.
pub fn quadrature_operator(quadrature: Quadrature, cutoff: Cutoff) -> ModeOperator {
    let a = annihilation(cutoff).matrix().clone();
    let phase = C64::from_polar(1.0, -quadrature.angle());
    let scale = (cutoff.hbar() / 2.0).sqrt();
    let q = (a.map(|v| v * phase) + a.adjoint().map(|v| v * phase.conj())).map(|v| v * scale);
    ModeOperator::from_parts(q, cutoff, 1, false)
}

/// Two-mode squeezer `exp(r (a^dag b^dag - a b))`.
///
/// The generator conserves `n_a - n_b`, so each difference sector is a
/// tridiagonal chain; chains are exponentiated on a padded length and cut back
/// to the box.
pub fn two_mode_squeezer(r: f64, cutoff: Cutoff) -> Result<ModeOperator> {
    if !r.is_finite() {
        return Err(Error::Domain(format!("squeezing {r} is not finite")));
    }
    let n = cutoff.n_max();
    let mut u = CMatrix::zeros(n * n, n * n);
    for diff in 0..n {
        let len = n - diff;
        let padded = len + SQUEEZER_PADDING;
        let mut gen = DMatrix::<f64>::zeros(padded, padded);
        for j in 0..padded - 1 {
            // |j+diff, j> -> |j+1+diff, j+1>
            let w = r * (((j + diff + 1) * (j + 1)) as f64).sqrt();
            gen[(j + 1, j)] = w;
            gen[(j, j + 1)] = -w;
        }
        let block = expm(&gen);
        for j in 0..len {
            for i in 0..len {
                let v = c64(block[(i, j)], 0.0);
                // sector with n_a - n_b = diff, and its mirror n_b - n_a = diff
                u[((i + diff) * n + i, (j + diff) * n + j)] = v;
                if diff > 0 {
                    u[(i * n + i + diff, j * n + j + diff)] = v;
                }
            }
        }
    }
    let op = ModeOperator::from_parts(u, cutoff, 2, true);
    warn_if_not_unitary(&op, "two-mode squeezer");
    Ok(op)
}

/// Exact action of the beamsplitter inside the photon-number sector `total`,
/// basis `|j, total - j>` for `j = 0..=total`.
pub(crate) fn beamsplitter_sector(theta: f64, total: usize) -> DMatrix<f64> {
    let dim = total + 1;
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..total {
        // a b^dag |j+1, total-j-1> = sqrt((j+1)(total-j)) |j, total-j>
        let w = theta * (((j + 1) * (total - j)) as f64).sqrt();
        gen[(j, j + 1)] = w;
        gen[(j + 1, j)] = -w;
    }
    expm(&gen)
}

/// Beamsplitter `exp(theta (a b^dag - a^dag b))` with `cos(theta) = sqrt(eta)`.
///
/// In the Schrodinger picture `a -> sqrt(eta) a + sqrt(1 - eta) b`, so
/// `|alpha>|0> -> |sqrt(eta) alpha>|sqrt(1 - eta) alpha>`. At `eta = 0` the modes
/// are swapped with a sign `(-1)^{n_b}` on the incoming second mode.
pub fn beamsplitter(eta: f64, cutoff: Cutoff) -> Result<ModeOperator> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("transmissivity {eta} outside [0,1]")));
    }
    let theta = eta.sqrt().acos();
    let n = cutoff.n_max();
    let mut u = CMatrix::zeros(n * n, n * n);
    for total in 0..=2 * (n - 1) {
        let block = beamsplitter_sector(theta, total);
        let lo = total.saturating_sub(n - 1);
        let hi = total.min(n - 1);
        for j in lo..=hi {
            for i in lo..=hi {
                u[(i * n + (total - i), j * n + (total - j))] = c64(block[(i, j)], 0.0);
            }
        }
    }
    let op = ModeOperator::from_parts(u, cutoff, 2, true);
    warn_if_not_unitary(&op, "beamsplitter");
    Ok(op)
}

fn warn_if_not_unitary(op: &ModeOperator, what: &str) {
    if op.cutoff().n_max() <= 40 {
        let defect = op.non_edge_unitarity_defect();
        if defect > 1e-8 {
            log::warn!("{what}: unitarity defect {defect:.2e} away from the truncation edge");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;

    #[test]
    fn commutator_away_from_edge() {
        let cut = Cutoff::new(10).unwrap();
        let a = annihilation(cut).matrix().clone();
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for k in 0..9 {
            assert!((comm[(k, k)] - c64(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn beamsplitter_sector_is_unitary_and_binomial() {
        let eta: f64 = 0.7;
        let block = beamsplitter_sector(eta.sqrt().acos(), 6);
        let defect = (block.transpose() * &block - DMatrix::<f64>::identity(7, 7)).amax();
        assert!(defect < 1e-13);
        // |6, 0> keeps l photons in mode B with binomial amplitudes
        for l in 0..=6usize {
            let binom = (1..=l).fold(1.0, |acc, k| acc * (6 - l + k) as f64 / k as f64);
            let want = binom.sqrt() * eta.powf((6 - l) as f64 / 2.0) * (1.0 - eta).powf(l as f64 / 2.0);
            assert!((block[(6 - l, 6)] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn squeezer_on_vacuum_has_geometric_amplitudes() {
        let r: f64 = 0.6;
        let cut = Cutoff::new(20).unwrap();
        let s = two_mode_squeezer(r, cut).unwrap();
        let out = s.apply(&PureState::vacuum(cut, 2).unwrap()).unwrap();
        for k in 0..20 {
            let want = r.tanh().powi(k as i32) / r.cosh();
            assert!((out.amplitudes()[k * 20 + k] - c64(want, 0.0)).norm() < 1e-12);
        }
    }
}
