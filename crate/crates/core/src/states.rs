//! Constructors for thermal, two-mode squeezed, coherent, odd cat and
//! finite-energy GKP states.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    c64, displacement_elements, hermite_functions, require_modes, CMatrix, CVector, Cutoff,
    DensityOperator, PureState, C64,
};

fn warn_truncation(what: &str, lost: f64, cutoff: Cutoff) {
    if lost > cutoff.tau_norm() {
        log::warn!(
            "{what}: {lost:.2e} of the norm lies above n_max = {}",
            cutoff.n_max()
        );
    }
}

/// Thermal state with mean photon number `nbar`; the geometric tail above the
/// cutoff is dropped, not redistributed.
pub fn thermal(nbar: f64, cutoff: Cutoff) -> Result<DensityOperator> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::Domain(format!("nbar must be finite and >= 0, got {nbar}")));
    }
    let ratio = nbar / (nbar + 1.0);
    let weights: Vec<f64> = (0..cutoff.n_max())
        .map(|n| ratio.powi(n as i32) / (nbar + 1.0))
        .collect();
    let rho = DensityOperator::from_diagonal(&weights, cutoff)?;
    warn_truncation("thermal", rho.lost_mass(), cutoff);
    Ok(rho)
}

/// `sech(r) sum_n tanh(r)^n |n, n>`.
pub fn tmsv_pure(r: f64, cutoff: Cutoff) -> Result<PureState> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("squeezing must be finite and >= 0, got {r}")));
    }
    let n = cutoff.n_max();
    let lambda = r.tanh();
    let mut amps = CVector::zeros(n * n);
    let mut amp = 1.0 / r.cosh();
    for k in 0..n {
        amps[k * n + k] = c64(amp, 0.0);
        amp *= lambda;
    }
    let psi = PureState::new(amps, cutoff, 2)?;
    warn_truncation("tmsv", psi.lost_mass(), cutoff);
    Ok(psi)
}

pub fn tmsv(r: f64, cutoff: Cutoff) -> Result<DensityOperator> {
    Ok(tmsv_pure(r, cutoff)?.to_density())
}

/// Coherent state `D(alpha)|0>`.
pub fn coherent(alpha: C64, cutoff: Cutoff) -> PureState {
    let n = cutoff.n_max();
    let mut amps = CVector::zeros(n);
    let mut amp = c64((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..n {
        amps[k] = amp;
        amp = amp * alpha / ((k + 1) as f64).sqrt();
    }
    let psi = PureState::from_parts(amps, cutoff, 1);
    warn_truncation("coherent", psi.lost_mass(), cutoff);
    psi
}

/// `(|alpha> - |-alpha>) / sqrt(2 (1 - e^{-2|alpha|^2}))`, normalized analytically.
pub fn cat_odd(alpha: C64, cutoff: Cutoff) -> Result<PureState> {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return Err(Error::Domain("odd cat needs alpha != 0".into()));
    }
    let norm = (2.0 * (1.0 - (-2.0 * mean).exp())).sqrt();
    let coh = coherent(alpha, cutoff);
    let amps = CVector::from_fn(cutoff.n_max(), |k, _| {
        if k % 2 == 1 {
            coh.amplitudes()[k] * (2.0 / norm)
        } else {
            c64(0.0, 0.0)
        }
    });
    let psi = PureState::new(amps, cutoff, 1)?;
    warn_truncation("odd cat", psi.lost_mass(), cutoff);
    Ok(psi)
}

/// Encoded qubit `cos(theta/2)|0> + sin(theta/2)|1>` of the square GKP code,
/// each codeword regularized by `exp(-epsilon n)` and a lattice sum over `|k| <= k_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkpParams {
    pub theta: f64,
    pub epsilon: f64,
    pub k_range: usize,
}

impl Default for GkpParams {
    fn default() -> Self {
        Self {
            theta: 0.0,
            epsilon: 0.1,
            k_range: 10,
        }
    }
}

impl GkpParams {
    pub fn new(theta: f64, epsilon: f64) -> Self {
        Self {
            theta,
            epsilon,
            ..Self::default()
        }
    }
}

/// Lattice spacing `sqrt(pi hbar)`.
pub fn gkp_spacing(hbar: f64) -> f64 {
    (std::f64::consts::PI * hbar).sqrt()
}

/// Unnormalized Fock amplitudes `e^{-eps n} sum_k <n|x = (2k + mu) spacing>` for `n < levels`.
fn gkp_codeword_raw(mu: usize, epsilon: f64, k_range: usize, levels: usize, hbar: f64) -> Vec<f64> {
    let spacing = gkp_spacing(hbar);
    let mut acc = vec![0.0; levels];
    let mut h = vec![0.0; levels];
    let k_range = k_range as i64;
    for k in -k_range..=k_range {
        let x = (2 * k + mu as i64) as f64 * spacing;
        hermite_functions(x, hbar, &mut h);
        for (a, hv) in acc.iter_mut().zip(&h) {
            *a += hv;
        }
    }
    let decay = (-epsilon).exp();
    let mut damp = 1.0;
    for a in acc.iter_mut() {
        *a *= damp;
        damp *= decay;
    }
    acc
}

fn tail_fraction(amps: &[f64], keep: usize) -> f64 {
    let total: f64 = amps.iter().map(|a| a * a).sum();
    let tail: f64 = amps[keep..].iter().map(|a| a * a).sum();
    tail / total
}

fn check_gkp_params(params: &GkpParams) -> Result<()> {
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {}", params.epsilon)));
    }
    if !params.theta.is_finite() {
        return Err(Error::Domain("theta must be finite".into()));
    }
    Ok(())
}

/// Smallest number of levels holding all but `tau` of both regularized codewords.
pub fn gkp_levels(epsilon: f64, k_range: usize, hbar: f64, tau: f64) -> Result<usize> {
    check_gkp_params(&GkpParams {
        theta: 0.0,
        epsilon,
        k_range,
    })?;
    let big = ((40.0 / epsilon).ceil() as usize).max(200);
    let words = [
        gkp_codeword_raw(0, epsilon, k_range, big, hbar),
        gkp_codeword_raw(1, epsilon, k_range, big, hbar),
    ];
    (2..big)
        .find(|&n| words.iter().all(|w| tail_fraction(w, n) < tau))
        .ok_or(Error::Domain(format!("no cutoff below {big} reaches tail {tau}")))
}

/// Normalized codeword `|mu_eps>` in the box; errors if the tail above the box exceeds `tau_norm`.
fn gkp_codeword(mu: usize, epsilon: f64, k_range: usize, cutoff: Cutoff) -> Result<CVector> {
    let n = cutoff.n_max();
    let extended = (2 * n).max(n + 80);
    let raw = gkp_codeword_raw(mu, epsilon, k_range, extended, cutoff.hbar());
    let tail = tail_fraction(&raw, n);
    if tail > cutoff.tau_norm() {
        return Err(Error::CutoffTooSmall { n_max: n, lost: tail });
    }
    let norm: f64 = raw[..n].iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(CVector::from_fn(n, |k, _| c64(raw[k] / norm, 0.0)))
}

pub fn gkp(params: GkpParams, cutoff: Cutoff) -> Result<PureState> {
    check_gkp_params(&params)?;
    let zero = gkp_codeword(0, params.epsilon, params.k_range, cutoff)?;
    let one = gkp_codeword(1, params.epsilon, params.k_range, cutoff)?;
    let (c, s) = ((params.theta / 2.0).cos(), (params.theta / 2.0).sin());
    let amps = zero * c64(c, 0.0) + one * c64(s, 0.0);
    PureState::from_parts(amps, cutoff, 1).normalized()
}

/// Logical Bell pair `(|00> + |11>)/sqrt(2)`: `|+_eps>|0_eps>` followed by the SUM gate.
pub fn gkp_bell(epsilon: f64, cutoff: Cutoff) -> Result<PureState> {
    let plus = gkp(GkpParams::new(std::f64::consts::FRAC_PI_2, epsilon), cutoff)?;
    let zero = gkp(GkpParams::new(0.0, epsilon), cutoff)?;
    let summed = sum_gate(&plus.tensor(&zero)?)?;
    let lost = summed.lost_mass();
    if lost > cutoff.tau_norm() {
        log::warn!("SUM gate pushed {lost:.2e} of the norm above n_max = {}", cutoff.n_max());
    }
    summed.normalized()
}

/// Continuous-variable SUM gate `exp(-i x_1 p_2 / hbar)`, i.e. `x_2 -> x_2 + x_1`.
///
/// Applied as a displacement of mode B conditioned on the position of mode A:
/// mode A is expanded on a position grid fine enough to integrate products of
/// the retained Hermite functions exactly, and each slice is displaced with exact
/// matrix elements. The result is not renormalized.
pub fn sum_gate(psi: &PureState) -> Result<PureState> {
    require_modes(psi.modes(), 2)?;
    let cutoff = psi.cutoff();
    let n = cutoff.n_max();
    let hbar = cutoff.hbar();
    let coeffs = psi.amplitude_matrix()?;
    let top = (2.0 * n as f64 + 1.0).sqrt();
    let half_width = (hbar.sqrt() * top) + 6.0 * hbar.sqrt();
    let wavelength = 2.0 * std::f64::consts::PI * hbar.sqrt() / top;
    let step = wavelength / 16.0;
    let len = (2.0 * half_width / step).ceil() as usize + 1;
    let step = 2.0 * half_width / (len - 1) as f64;
    let mut out = CMatrix::zeros(n, n);
    let mut h = vec![0.0; n];
    let mut slice = CVector::zeros(n);
    for j in 0..len {
        let x = -half_width + step * j as f64;
        hermite_functions(x, hbar, &mut h);
        // mode-B amplitudes of the slice at position x of mode A
        slice.fill(c64(0.0, 0.0));
        for (a, &ha) in h.iter().enumerate() {
            if ha != 0.0 {
                slice.axpy(c64(ha, 0.0), &coeffs.row(a).transpose(), c64(1.0, 0.0));
            }
        }
        if slice.norm_squared() < 1e-300 {
            continue;
        }
        let shift = displacement_elements(c64(x / (2.0 * hbar).sqrt(), 0.0), n, n);
        let moved = shift * &slice;
        for (a, &ha) in h.iter().enumerate() {
            if ha != 0.0 {
                let w = c64(ha * step, 0.0);
                for b in 0..n {
                    out[(a, b)] += w * moved[b];
                }
            }
        }
    }
    // quadrature rounding can push the norm a hair above one
    let norm = out.norm();
    if norm > 1.0 {
        out.unscale_mut(norm);
    }
    PureState::from_amplitude_matrix(&out, cutoff)
}

/// Random density operator `G G^dag / Tr` from a complex Ginibre matrix `G` with
/// `rank` columns; full rank when `rank` is the dimension.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, cutoff: Cutoff, modes: usize, rank: usize) -> Result<DensityOperator> {
    let dim = cutoff.dim(modes);
    if rank == 0 || rank > dim {
        return Err(Error::Domain(format!("rank {rank} outside 1..={dim}")));
    }
    let g = CMatrix::from_fn(dim, rank, |_, _| {
        c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let mat = &g * g.adjoint();
    let tr = mat.trace().re;
    DensityOperator::new(mat.unscale(tr), cutoff, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Mode, Quadrature};

    #[test]
    fn thermal_weights_are_geometric() {
        let cut = Cutoff::new(30).unwrap();
        let rho = thermal(1.5, cut).unwrap();
        let ratio = rho.matrix()[(1, 1)].re / rho.matrix()[(0, 0)].re;
        assert!((ratio - 0.6).abs() < 1e-14);
        assert!((rho.matrix()[(0, 0)].re - 0.4).abs() < 1e-14);
    }

    #[test]
    fn tmsv_norm_matches_geometric_tail() {
        let r: f64 = 0.9;
        let cut = Cutoff::new(25).unwrap();
        let psi = tmsv_pure(r, cut).unwrap();
        let tail = r.tanh().powi(50);
        assert!((psi.lost_mass() - tail).abs() < 1e-14);
    }

    #[test]
    fn odd_cat_overlap_with_pieces() {
        let alpha = c64(0.0, -1.5);
        let cut = Cutoff::new(40).unwrap();
        let cat = cat_odd(alpha, cut).unwrap();
        assert!((cat.norm_sqr() - 1.0).abs() < 1e-12);
        let plus = coherent(alpha, cut);
        // <alpha|cat> = (1 - e^{-2|a|^2}) / N
        let n = (2.0 * (1.0 - (-4.5f64).exp())).sqrt();
        let want = (1.0 - (-4.5f64).exp()) / n;
        assert!((plus.inner(&cat).unwrap() - c64(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gkp_zero_peaks_on_even_lattice_sites() {
        let cut = Cutoff::new(90).unwrap();
        let psi = gkp(GkpParams::default(), cut).unwrap();
        let a = gkp_spacing(2.0);
        let rho = psi.to_density();
        let dens = rho
            .quadrature_marginal(Quadrature::X, &[0.0, a, 2.0 * a, 0.5 * a])
            .unwrap();
        assert!(dens[0] > 10.0 * dens[1]);
        assert!(dens[2] > 10.0 * dens[1]);
        assert!(dens[0] > 10.0 * dens[3]);
    }

    #[test]
    fn gkp_rejects_small_cutoff() {
        let cut = Cutoff::new(30).unwrap();
        assert!(matches!(
            gkp(GkpParams::default(), cut),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn sum_gate_shifts_target_mean() {
        let cut = Cutoff::new(20).unwrap();
        let psi = coherent(c64(0.4, 0.0), cut).tensor(&coherent(c64(0.0, 0.3), cut)).unwrap();
        let out = sum_gate(&psi).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-8);
        // x_2 mean shifts by <x_1> = sqrt(2 hbar) * 0.4
        let rho_b = out.to_density().partial_trace(Mode::B).unwrap();
        let xs: Vec<f64> = (0..4001).map(|j| -20.0 + 0.01 * j as f64).collect();
        let dens = rho_b.quadrature_marginal(Quadrature::X, &xs).unwrap();
        let mean: f64 = xs.iter().zip(&dens).map(|(x, d)| x * d).sum::<f64>() * 0.01;
        assert!((mean - 2.0 * 0.4).abs() < 1e-6, "{mean}");
    }
}
