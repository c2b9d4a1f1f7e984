//! Braunstein-Kimble teleportation.
//!
//! Shots are simulated exactly in the truncated basis. Alice mixes the input with
//! resource mode A on a balanced beamsplitter and measures `q = x_in - x_A` and
//! `s = p_in + p_A` (the port quadratures scaled by `sqrt 2`). The joint outcome
//! projects input and mode A onto a displaced EPR state, so with
//! `beta = (q + i s) / sqrt(2 hbar)` mode B is left in
//! `rho_B ~ sum phi_a conj(phi_a') rho[(a,b),(a',b')]`, `phi = D(-beta) psi`.
//! Bob then applies `D(gain beta)`.
//!
//! Outcomes are drawn without approximating the resource: `q` from its exact
//! marginal on a lattice, then an eigen-branch of `rho_A`, then `s` from the
//! Fourier transform of `psi(x) e_k(x - q)`.

mod gaussian;
mod homodyne;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::channels::{product_of_marginals, werner_branch, ChannelKind, ChannelSpec, WernerBranch};
use crate::error::{Error, Result};
use crate::fock::{
    c64, displacement_elements, hermite_functions, require_modes, CMatrix, CVector, Cutoff, DensityOperator,
    Mode, Quadrature, C64,
};
use crate::metrics::fidelity_matrices;

pub use gaussian::{
    apply_additive_noise, cat_fidelity_tmsv_closed, effective_gaussian_channel, fidelity_under_noise,
    tmsv_teleport_noise, GaussianNoise, ResourceCovariance,
};
pub use homodyne::{homodyne_outcomes, homodyne_sample, homodyne_sample_mode, HomodyneOutcome, GRID_CAPTURE, MIN_GRID_POINTS};

use homodyne::{quadrature_moments, resolving_step, sample_linear_density};

/// Shots per reduction chunk; fixed so results do not depend on thread count.
const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportConfig {
    pub resource: DensityOperator,
    pub channel: ChannelSpec,
    pub shots: usize,
    pub gain: f64,
    pub seed: u64,
}

impl TeleportConfig {
    pub fn new(resource: DensityOperator, channel: ChannelSpec, shots: usize, seed: u64) -> Result<Self> {
        let config = Self {
            resource,
            channel,
            shots,
            gain: 1.0,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        self.gain = gain;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require_modes(self.resource.modes(), 2)?;
        self.channel.validate()?;
        if self.shots == 0 {
            return Err(Error::Domain("at least one shot is required".into()));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::Domain(format!("gain must be positive, got {}", self.gain)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportResult {
    pub avg_output: DensityOperator,
    pub avg_fidelity: f64,
    pub per_shot_fidelities: Vec<f64>,
    /// Standard error of the mean fidelity.
    pub stderr: f64,
    /// Largest trace deficit of a single output from truncation.
    pub max_lost_mass: f64,
}

/// One teleportation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub beta: C64,
    pub output: DensityOperator,
    pub fidelity: f64,
}

struct InputBranch {
    weight: f64,
    amps: CVector,
    /// `<x_j|psi>` on the input lattice.
    psi: Vec<C64>,
    /// Unnormalized density of `q` on the q lattice.
    q_density: Vec<f64>,
}

/// Teleportation of one input through resources sharing a fixed mode-A marginal.
pub struct Teleporter {
    cutoff: Cutoff,
    gain: f64,
    step: f64,
    /// Input lattice `x_j = (x_first + j) step`.
    x_first: i64,
    x_len: usize,
    q_first: i64,
    inputs: Vec<InputBranch>,
    /// Eigen-branches of `rho_A` as (weight, Fock vector).
    resource_a: Vec<(f64, CVector)>,
    input: DensityOperator,
    input_is_pure: bool,
    fft: Arc<dyn Fft<f64>>,
}

impl Teleporter {
    /// Prepares sampling tables for `input` and a resource whose mode A has
    /// reduced state `rho_a`.
    pub fn new(input: &DensityOperator, rho_a: &DensityOperator, gain: f64) -> Result<Self> {
        require_modes(input.modes(), 1)?;
        require_modes(rho_a.modes(), 1)?;
        input.cutoff().ensure_same(&rho_a.cutoff())?;
        let cutoff = input.cutoff();
        let n = cutoff.n_max();
        let hbar = cutoff.hbar();
        let step = resolving_step(cutoff);

        let (in_vals, in_vecs) = input.eigen();
        let top = in_vals.first().copied().unwrap_or(0.0);
        let input_is_pure = in_vals.iter().skip(1).all(|&v| v.abs() < 1e-10 * top.max(1e-300));
        let (a_vals, a_vecs) = rho_a.eigen();
        let a_top = a_vals.first().copied().unwrap_or(0.0);
        if !(top > 0.0 && a_top > 0.0) {
            return Err(Error::InvalidState("input and resource must have positive trace".into()));
        }
        let resource_a: Vec<(f64, CVector)> = a_vals
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 1e-14 * a_top)
            .map(|(k, &w)| (w, a_vecs.column(k).into_owned()))
            .collect();

        let (in_mean, in_sd) = quadrature_moments(input, Quadrature::X)?;
        let (a_mean, a_sd) = quadrature_moments(rho_a, Quadrature::X)?;
        let pad = 2.0 * hbar.sqrt();
        let lattice = |center: f64, half: f64| {
            let first = ((center - half) / step).floor() as i64;
            let last = ((center + half) / step).ceil() as i64;
            (first, (last - first + 1) as usize)
        };
        let (x_first, x_len) = lattice(in_mean, 8.0 * in_sd + pad);
        let q_sd = (in_sd * in_sd + a_sd * a_sd).sqrt();
        let (q_first, q_len) = lattice(in_mean - a_mean, 8.0 * q_sd + pad);

        // <x|psi_b> for each input branch, checked for captured norm
        let xs: Vec<f64> = (0..x_len).map(|j| (x_first + j as i64) as f64 * step).collect();
        let mut h = vec![0.0; n];
        let table: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| {
                hermite_functions(x, hbar, &mut h);
                h.clone()
            })
            .collect();

        // resource x marginal on the offsets x_j - q_i
        let d_first = x_first - (q_first + q_len as i64 - 1);
        let d_len = x_len + q_len - 1;
        let offsets: Vec<f64> = (0..d_len).map(|d| (d_first + d as i64) as f64 * step).collect();
        let p_a = rho_a.quadrature_marginal(Quadrature::X, &offsets)?;
        let a_trace = rho_a.trace();

        let mut inputs = Vec::new();
        for (b, &w) in in_vals.iter().enumerate() {
            if w <= 1e-12 * top {
                continue;
            }
            let amps = in_vecs.column(b).into_owned();
            let psi: Vec<C64> = table
                .iter()
                .map(|row| amps.iter().zip(row).map(|(c, &hk)| c * hk).sum())
                .collect();
            let dens: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
            let captured = dens.iter().sum::<f64>() * step;
            if captured < GRID_CAPTURE {
                return Err(Error::GridOverflow { captured });
            }
            let q_density: Vec<f64> = (0..q_len)
                .into_par_iter()
                .map(|i| {
                    // offset index of x_j - q_i is j - i + (q_len - 1)
                    dens.iter()
                        .enumerate()
                        .map(|(j, d)| d * p_a[j + q_len - 1 - i])
                        .sum::<f64>()
                        * step
                })
                .collect();
            let q_mass = q_density.iter().sum::<f64>() * step / a_trace;
            if q_mass < GRID_CAPTURE * captured {
                return Err(Error::GridOverflow {
                    captured: q_mass / captured,
                });
            }
            inputs.push(InputBranch {
                weight: w,
                amps,
                psi,
                q_density,
            });
        }

        // s lattice fine against the momentum spread
        let (_, in_psd) = quadrature_moments(input, Quadrature::P)?;
        let (_, a_psd) = quadrature_moments(rho_a, Quadrature::P)?;
        let s_sd = (in_psd * in_psd + a_psd * a_psd).sqrt().max(1e-3);
        let wanted = (2.0 * std::f64::consts::PI * hbar / (step * s_sd / 64.0)).ceil() as usize;
        let fft_len = wanted.max(4 * x_len).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);

        Ok(Self {
            cutoff,
            gain,
            step,
            x_first,
            x_len,
            q_first,
            inputs,
            resource_a,
            input: input.normalized()?,
            input_is_pure,
            fft,
        })
    }

    /// Draws the Bell-measurement outcome `beta` and the input branch it came from.
    fn sample_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, C64) {
        let n = self.cutoff.n_max();
        let hbar = self.cutoff.hbar();
        let step = self.step;
        let total: f64 = self.inputs.iter().map(|b| b.weight).sum();
        let mut pick = rng.random::<f64>() * total;
        let mut branch = self.inputs.len() - 1;
        for (i, b) in self.inputs.iter().enumerate() {
            if pick < b.weight {
                branch = i;
                break;
            }
            pick -= b.weight;
        }
        let input = &self.inputs[branch];

        let q = sample_linear_density(rng, self.q_first as f64 * step, step, &input.q_density);

        // e_k(x_j - q) for every eigen-branch of rho_A
        let mut h = vec![0.0; n];
        let mut e = vec![c64(0.0, 0.0); self.x_len * self.resource_a.len()];
        let k_len = self.resource_a.len();
        for j in 0..self.x_len {
            let x = (self.x_first + j as i64) as f64 * step - q;
            hermite_functions(x, hbar, &mut h);
            for (k, (_, v)) in self.resource_a.iter().enumerate() {
                e[j * k_len + k] = v.iter().zip(&h).map(|(c, &hk)| c * hk).sum();
            }
        }
        let weights: Vec<f64> = self
            .resource_a
            .iter()
            .enumerate()
            .map(|(k, (w, _))| {
                w * input
                    .psi
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p.norm_sqr() * e[j * k_len + k].norm_sqr())
                    .sum::<f64>()
            })
            .collect();
        let mut pick = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut k_branch = k_len - 1;
        for (k, w) in weights.iter().enumerate() {
            if pick < *w {
                k_branch = k;
                break;
            }
            pick -= w;
        }

        // |int exp(-i s x / hbar) psi(x) e_k(x - q) dx|^2 on s_m = 2 pi hbar m / (L step)
        let len = self.fft.len();
        let mut buf = vec![c64(0.0, 0.0); len];
        for j in 0..self.x_len {
            buf[j] = input.psi[j] * e[j * k_len + k_branch];
        }
        self.fft.process(&mut buf);
        let half = len / 2;
        let ordered: Vec<f64> = (0..len).map(|m| buf[(m + half) % len].norm_sqr()).collect();
        let ds = 2.0 * std::f64::consts::PI * hbar / (len as f64 * step);
        let s = sample_linear_density(rng, -(half as f64) * ds, ds, &ordered);

        (branch, c64(q, s) / (2.0 * hbar).sqrt())
    }

    /// Runs one shot through `resource`, whose mode-A marginal must match the one
    /// the teleporter was prepared with.
    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R, resource: &DensityOperator) -> Result<Shot> {
        require_modes(resource.modes(), 2)?;
        self.cutoff.ensure_same(&resource.cutoff())?;
        let (branch, beta) = self.sample_outcome(rng);
        let n = self.cutoff.n_max();
        let phi = displacement_elements(-beta, n, n) * &self.inputs[branch].amps;
        let rho_b = condition_on(resource.matrix(), &phi, n);
        let tr = rho_b.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState("conditional state has no weight".into()));
        }
        let d = displacement_elements(beta * self.gain, n, n);
        let output = (&d * rho_b * d.adjoint()).unscale(tr);
        let output = DensityOperator::from_parts_hermitized(output, self.cutoff, 1);
        let fidelity = self.fidelity_to_input(&output);
        Ok(Shot {
            beta,
            output,
            fidelity,
        })
    }

    fn fidelity_to_input(&self, output: &DensityOperator) -> f64 {
        let f = if self.input_is_pure {
            let v = &self.inputs[0].amps;
            (v.adjoint() * output.matrix() * v)[(0, 0)].re
        } else {
            fidelity_matrices(self.input.matrix(), output.matrix())
        };
        f.clamp(0.0, 1.0)
    }
}

/// `rho_B[b, b'] = sum phi_a conj(phi_a') rho[(a,b),(a',b')]`.
fn condition_on(rho: &CMatrix, phi: &CVector, n: usize) -> CMatrix {
    let dim = n * n;
    let data = rho.as_slice();
    // t[(a,b), b'] = sum_a' rho[(a,b),(a',b')] conj(phi_a')
    let mut t = vec![c64(0.0, 0.0); dim * n];
    for bp in 0..n {
        let out = &mut t[bp * dim..(bp + 1) * dim];
        for ap in 0..n {
            let c = phi[ap].conj();
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let col = ap * n + bp;
            for (o, r) in out.iter_mut().zip(&data[col * dim..(col + 1) * dim]) {
                *o += r * c;
            }
        }
    }
    CMatrix::from_fn(n, n, |b, bp| {
        let col = &t[bp * dim..(bp + 1) * dim];
        (0..n).map(|a| phi[a] * col[a * n + b]).sum()
    })
}

fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

/// One shot with `config.resource` taken as already having passed the channel.
pub fn bk_teleport_shot<R: Rng + ?Sized>(
    rng: &mut R,
    input: &DensityOperator,
    config: &TeleportConfig,
) -> Result<(DensityOperator, f64)> {
    config.validate()?;
    let rho_a = config.resource.partial_trace(Mode::A)?;
    let teleporter = Teleporter::new(input, &rho_a, config.gain)?;
    let shot = teleporter.shot(rng, &config.resource)?;
    Ok((shot.output, shot.fidelity))
}

/// Runs `config.shots` shots in parallel. The channel is applied to the resource
/// first; a Werner channel picks its branch independently in every shot.
/// Shot `i` uses the ChaCha8 stream `i` of `config.seed`.
pub fn bk_teleport_average(input: &DensityOperator, config: &TeleportConfig) -> Result<TeleportResult> {
    config.validate()?;
    require_modes(input.modes(), 1)?;
    let (intact, broken, p_broken) = match config.channel.kind {
        ChannelKind::Werner { p } => {
            let broken = if p > 0.0 {
                Some(product_of_marginals(&config.resource)?)
            } else {
                None
            };
            (config.resource.clone(), broken, p)
        }
        _ => (config.channel.apply(&config.resource)?, None, 0.0),
    };
    let rho_a = intact.partial_trace(Mode::A)?;
    let teleporter = Teleporter::new(input, &rho_a, config.gain)?;
    let n = input.cutoff().n_max();

    let chunks: Vec<Result<(CMatrix, Vec<f64>, f64)>> = (0..config.shots.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sum = CMatrix::zeros(n, n);
            let mut fids = Vec::with_capacity(CHUNK);
            let mut lost: f64 = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(config.shots) {
                let mut rng = shot_rng(config.seed, i);
                let resource = match &broken {
                    Some(product) if werner_branch(&mut rng, p_broken)? == WernerBranch::Broken => product,
                    _ => &intact,
                };
                let shot = teleporter.shot(&mut rng, resource)?;
                lost = lost.max(shot.output.lost_mass());
                sum += shot.output.matrix();
                fids.push(shot.fidelity);
            }
            Ok((sum, fids, lost))
        })
        .collect();

    let mut sum = CMatrix::zeros(n, n);
    let mut fids = Vec::with_capacity(config.shots);
    let mut max_lost: f64 = 0.0;
    for chunk in chunks {
        let (s, f, l) = chunk?;
        sum += s;
        fids.extend(f);
        max_lost = max_lost.max(l);
    }
    let shots = config.shots as f64;
    let mean = fids.iter().sum::<f64>() / shots;
    let stderr = if config.shots > 1 {
        (fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (shots - 1.0) / shots).sqrt()
    } else {
        0.0
    };
    if max_lost > 1e-3 {
        log::warn!("teleported outputs lose up to {max_lost:.2e} of their trace at n_max = {n}");
    }
    Ok(TeleportResult {
        avg_output: DensityOperator::from_parts_hermitized(sum.unscale(shots), input.cutoff(), 1),
        avg_fidelity: mean,
        per_shot_fidelities: fids,
        stderr,
        max_lost_mass: max_lost,
    })
}
