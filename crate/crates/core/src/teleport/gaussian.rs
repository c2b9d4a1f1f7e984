//! Gaussian description of teleportation through Gaussian resources.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelKind, ChannelSpec};
use crate::error::{Error, Result};
use crate::fock::{require_modes, CMatrix, Cutoff, DensityOperator, Mode, PureState};

/// Covariance of `(x_A, p_A, x_B, p_B)` of a two-mode resource with zero mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceCovariance {
    pub matrix: Matrix4<f64>,
    /// False for resources that are mixtures of Gaussians or otherwise non-Gaussian.
    pub gaussian: bool,
}

impl ResourceCovariance {
    /// Two-mode squeezed vacuum: `hbar/2 [[c I, s Z], [s Z, c I]]` with `c = cosh 2r`, `s = sinh 2r`.
    pub fn tmsv(r: f64, hbar: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("squeezing must be >= 0, got {r}")));
        }
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let v = hbar / 2.0;
        #[rustfmt::skip]
        let matrix = Matrix4::new(
            c * v, 0.0, s * v, 0.0,
            0.0, c * v, 0.0, -s * v,
            s * v, 0.0, c * v, 0.0,
            0.0, -s * v, 0.0, c * v,
        );
        Ok(Self {
            matrix,
            gaussian: true,
        })
    }

    /// Covariance after a channel on one mode. Werner mixtures with `0 < p < 1`
    /// are flagged non-Gaussian; `p = 1` leaves only the product of marginals.
    pub fn after(&self, channel: &ChannelSpec, hbar: f64) -> Result<Self> {
        channel.validate()?;
        let mut m = self.matrix;
        let t = 2 * channel.target.index();
        let mut gaussian = self.gaussian;
        match channel.kind {
            ChannelKind::Identity => {}
            ChannelKind::Wiretap { eta } => {
                let g = eta.sqrt();
                for i in 0..4 {
                    for k in t..t + 2 {
                        m[(i, k)] *= g;
                        m[(k, i)] *= g;
                    }
                }
                m[(t, t)] += (1.0 - eta) * hbar / 2.0;
                m[(t + 1, t + 1)] += (1.0 - eta) * hbar / 2.0;
            }
            ChannelKind::Werner { p } => {
                if p == 1.0 {
                    for i in 0..2 {
                        for k in 2..4 {
                            m[(i, k)] = 0.0;
                            m[(k, i)] = 0.0;
                        }
                    }
                } else if p > 0.0 {
                    gaussian = false;
                }
            }
        }
        Ok(Self {
            matrix: m,
            gaussian,
        })
    }
}

/// Teleportation as a single-mode Gaussian channel:
/// `x -> gain x + noise_x`, `p -> gain p + noise_p`, noises zero-mean with the given variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoise {
    pub gain: f64,
    pub var_x: f64,
    pub var_p: f64,
}

impl GaussianNoise {
    pub fn isotropic(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::Domain(format!("noise variance {variance} must be >= 0")));
        }
        Ok(Self {
            gain: 1.0,
            var_x: variance,
            var_p: variance,
        })
    }

    /// Added noise in units of the vacuum variance `hbar/2`.
    pub fn vacuum_units(&self, hbar: f64) -> f64 {
        0.5 * (self.var_x + self.var_p) / (hbar / 2.0)
    }
}

/// Added noise of Braunstein-Kimble teleportation with feed-forward gain `gain`.
///
/// Outcomes are `q = x_in - x_A` and `s = p_in + p_A`; Bob adds `gain (q, s)` to mode B,
/// so the noise is `Var(x_B - gain x_A)` and `Var(p_B + gain p_A)`.
pub fn effective_gaussian_channel(cov: &ResourceCovariance, gain: f64) -> Result<GaussianNoise> {
    if !cov.gaussian {
        return Err(Error::NonGaussianResource(
            "resource covariance is flagged non-Gaussian".into(),
        ));
    }
    if !(gain > 0.0) {
        return Err(Error::Domain(format!("gain must be positive, got {gain}")));
    }
    let m = &cov.matrix;
    let var_x = m[(2, 2)] + gain * gain * m[(0, 0)] - 2.0 * gain * m[(0, 2)];
    let var_p = m[(3, 3)] + gain * gain * m[(1, 1)] + 2.0 * gain * m[(1, 3)];
    Ok(GaussianNoise { gain, var_x, var_p })
}

/// Effective noise of teleporting through a TMSV of squeezing `r` after `channel` on mode B.
pub fn tmsv_teleport_noise(r: f64, channel: &ChannelSpec, hbar: f64) -> Result<GaussianNoise> {
    let cov = ResourceCovariance::tmsv(r, hbar)?.after(channel, hbar)?;
    effective_gaussian_channel(&cov, 1.0)
}

/// Applies the isotropic additive Gaussian noise channel to a single mode.
///
/// Realized exactly as pure loss `eta = hbar / (hbar + V)` followed by the
/// quantum-limited amplifier of gain `1/eta`. Weight amplified above the cutoff is
/// lost and shows up as a trace deficit.
pub fn apply_additive_noise(rho: &DensityOperator, noise: &GaussianNoise) -> Result<DensityOperator> {
    require_modes(rho.modes(), 1)?;
    if noise.gain != 1.0 {
        return Err(Error::Domain("only unity-gain noise channels can be applied".into()));
    }
    if (noise.var_x - noise.var_p).abs() > 1e-12 * noise.var_x.abs().max(1.0) {
        return Err(Error::Domain("only isotropic noise can be applied".into()));
    }
    let variance = noise.var_x;
    if variance == 0.0 {
        return Ok(rho.clone());
    }
    let cutoff = rho.cutoff();
    let eta = cutoff.hbar() / (cutoff.hbar() + variance);
    let lossy = crate::channels::wiretap_apply(rho, eta, Mode::A)?;
    Ok(amplify(&lossy, 1.0 / eta, cutoff))
}

/// Quantum-limited amplifier `A_k|n> = sqrt(C(n+k, k)) G^{-(n+1)/2} ((G-1)/G)^{k/2} |n+k>`.
fn amplify(rho: &DensityOperator, gain: f64, cutoff: Cutoff) -> DensityOperator {
    let n = cutoff.n_max();
    let lf = crate::fock::ln_factorials(2 * n);
    let src = rho.matrix();
    let mut out = CMatrix::zeros(n, n);
    let ln_g = gain.ln();
    let ln_x = ((gain - 1.0) / gain).ln();
    let amp = |level: usize, k: usize| {
        (0.5 * (lf[level + k] - lf[level] - lf[k]) - 0.5 * (level as f64 + 1.0) * ln_g
            + 0.5 * k as f64 * ln_x)
            .exp()
    };
    for k in 0..n {
        for j in 0..n - k {
            let aj = amp(j, k);
            for i in 0..n - k {
                out[(i + k, j + k)] += src[(i, j)] * (amp(i, k) * aj);
            }
        }
    }
    DensityOperator::from_parts(out, cutoff, 1)
}

/// Fidelity `<psi|N(psi)|psi>` of a pure state sent through additive noise.
pub fn fidelity_under_noise(psi: &PureState, noise: &GaussianNoise) -> Result<f64> {
    let psi = psi.normalized()?;
    let out = apply_additive_noise(&psi.to_density(), noise)?;
    let v = psi.amplitudes();
    Ok((v.adjoint() * out.matrix() * v)[(0, 0)].re.clamp(0.0, 1.0))
}

/// Cat-state teleportation fidelity through a TMSV of squeezing `r`, `|alpha| = z`:
/// `1/(1+e) - (1 + e^{-4z^2} - e^{-4 e z^2/(1+e)} - e^{-4 z^2/(1+e)}) / (2 (1+e) (1 - e^{-2z^2})^2)`
/// with `e = exp(-2r)`.
pub fn cat_fidelity_tmsv_closed(r: f64, z: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("squeezing must be >= 0, got {r}")));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("cat amplitude must be > 0, got {z}")));
    }
    let e = (-2.0 * r).exp();
    let z2 = z * z;
    let num = 1.0 + (-4.0 * z2).exp() - (-4.0 * e * z2 / (1.0 + e)).exp() - (-4.0 * z2 / (1.0 + e)).exp();
    let den = 2.0 * (1.0 + e) * (1.0 - (-2.0 * z2).exp()).powi(2);
    Ok(1.0 / (1.0 + e) - num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{c64, displacement_elements};
    use crate::states::{cat_odd, coherent, thermal};

    #[test]
    fn ideal_tmsv_noise() {
        for &r in &[0.0f64, 0.7, 3.2] {
            let noise = tmsv_teleport_noise(r, &ChannelSpec::identity(), 2.0).unwrap();
            let want = 2.0 * (-2.0 * r).exp();
            assert!((noise.var_x - want).abs() < 1e-9 * want.max(1.0));
            assert!((noise.var_p - want).abs() < 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn lossy_tmsv_noise_matches_covariance_algebra() {
        let (r, eta): (f64, f64) = (3.2, 0.9);
        let noise = tmsv_teleport_noise(r, &ChannelSpec::wiretap(eta).unwrap(), 2.0).unwrap();
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let want = c * (1.0 + eta) - 2.0 * eta.sqrt() * s + (1.0 - eta);
        assert!((noise.var_x - want).abs() < 1e-9);
        assert!((noise.var_p - want).abs() < 1e-9);
    }

    #[test]
    fn werner_mixture_is_not_gaussian() {
        let cov = ResourceCovariance::tmsv(1.0, 2.0)
            .unwrap()
            .after(&ChannelSpec::werner(0.4).unwrap(), 2.0)
            .unwrap();
        assert!(matches!(
            effective_gaussian_channel(&cov, 1.0),
            Err(Error::NonGaussianResource(_))
        ));
    }

    #[test]
    fn noise_on_thermal_raises_photon_number() {
        let cut = Cutoff::new(60).unwrap();
        // variance V adds V/hbar photons
        let out = apply_additive_noise(&thermal(0.5, cut).unwrap(), &GaussianNoise::isotropic(1.2).unwrap()).unwrap();
        let want = thermal(0.5 + 0.6, cut).unwrap();
        assert!((out.matrix() - want.matrix()).camax() < 1e-9);
    }

    #[test]
    fn coherent_fidelity_under_noise() {
        let cut = Cutoff::new(40).unwrap();
        let psi = coherent(c64(1.0, 0.5), cut);
        for &v in &[0.3, 2.0] {
            let f = fidelity_under_noise(&psi, &GaussianNoise::isotropic(v).unwrap()).unwrap();
            assert!((f - 1.0 / (1.0 + v / 2.0)).abs() < 1e-9, "{f}");
        }
    }

    /// Independent route: average |<psi|D(xi)|psi>|^2 over Gaussian displacements by
    /// Gauss-Hermite quadrature, then compare with the closed form.
    #[test]
    fn closed_form_matches_displacement_average() {
        let cut = Cutoff::new(50).unwrap();
        let psi = cat_odd(c64(0.0, -1.5), cut).unwrap();
        let (nodes, weights) = gauss_hermite_e(40);
        for &r in &[0.0f64, 0.5, 1.15] {
            let sigma = ((-2.0 * r).exp() / 2.0f64).sqrt();
            let mut f = 0.0;
            for (xa, wa) in nodes.iter().zip(&weights) {
                for (xb, wb) in nodes.iter().zip(&weights) {
                    let d = displacement_elements(c64(sigma * xa, sigma * xb), 50, 50);
                    let v = psi.amplitudes();
                    f += wa * wb * (v.adjoint() * d * v)[(0, 0)].norm_sqr();
                }
            }
            f /= 2.0 * std::f64::consts::PI;
            let want = cat_fidelity_tmsv_closed(r, 1.5).unwrap();
            assert!((f - want).abs() < 1e-8, "r {r}: {f} vs {want}");
            let direct = fidelity_under_noise(&psi, &GaussianNoise::isotropic(2.0 * (-2.0 * r).exp()).unwrap()).unwrap();
            assert!((direct - want).abs() < 1e-8, "r {r}: {direct} vs {want}");
        }
    }

    /// Probabilists' Gauss-Hermite rule from the eigen-decomposition of the Jacobi matrix.
    fn gauss_hermite_e(n: usize) -> (Vec<f64>, Vec<f64>) {
        let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::new(jacobi);
        let mass = (2.0 * std::f64::consts::PI).sqrt();
        let weights = (0..n).map(|k| mass * eig.eigenvectors[(0, k)].powi(2)).collect();
        (eig.eigenvalues.iter().copied().collect(), weights)
    }

    #[test]
    fn closed_form_limits() {
        assert!((cat_fidelity_tmsv_closed(0.0, 1.5).unwrap() - 0.25).abs() < 1e-12);
        assert!((cat_fidelity_tmsv_closed(40.0, 1.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(cat_fidelity_tmsv_closed(1.0, 0.0).is_err());
    }
}
