//! Eavesdropper channels: the entanglement-breaking mixture (Werner-type) and
//! pure loss to a vacuum environment (wiretap).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{beamsplitter_sector, require_modes, CMatrix, Cutoff, DensityOperator, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelKind {
    /// With probability `p` the state is replaced by the product of its marginals.
    Werner { p: f64 },
    /// Beamsplitter of transmissivity `eta` to a vacuum mode that is discarded.
    Wiretap { eta: f64 },
    Identity,
}

/// A channel and the mode it acts on. On single-mode states the target is
/// the only mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub target: Mode,
}

impl ChannelSpec {
    pub fn werner(p: f64) -> Result<Self> {
        Self::new(ChannelKind::Werner { p }, Mode::B)
    }

    pub fn wiretap(eta: f64) -> Result<Self> {
        Self::new(ChannelKind::Wiretap { eta }, Mode::B)
    }

    pub fn identity() -> Self {
        Self {
            kind: ChannelKind::Identity,
            target: Mode::B,
        }
    }

    pub fn new(kind: ChannelKind, target: Mode) -> Result<Self> {
        let spec = Self { kind, target };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ChannelKind::Werner { p } => unit_interval("p", p),
            ChannelKind::Wiretap { eta } => unit_interval("eta", eta),
            ChannelKind::Identity => Ok(()),
        }
    }

    /// Deterministic action on a density operator.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.validate()?;
        match self.kind {
            ChannelKind::Werner { p } => werner_apply(rho, p),
            ChannelKind::Wiretap { eta } => wiretap_apply(rho, eta, self.target),
            ChannelKind::Identity => Ok(rho.clone()),
        }
    }

    /// One stochastic realization; only the Werner channel is random.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, rho: &DensityOperator) -> Result<DensityOperator> {
        match self.kind {
            ChannelKind::Werner { p } => werner_sample(rng, rho, p),
            _ => self.apply(rho),
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside [0,1]")))
    }
}

/// `Tr_B(rho) (x) Tr_A(rho)`.
pub fn product_of_marginals(rho: &DensityOperator) -> Result<DensityOperator> {
    require_modes(rho.modes(), 2)?;
    rho.partial_trace(Mode::A)?.tensor(&rho.partial_trace(Mode::B)?)
}

/// `p Tr_B(rho) (x) Tr_A(rho) + (1 - p) rho`.
pub fn werner_apply(rho: &DensityOperator, p: f64) -> Result<DensityOperator> {
    unit_interval("p", p)?;
    require_modes(rho.modes(), 2)?;
    if p == 0.0 {
        return Ok(rho.clone());
    }
    DensityOperator::mix(p, &product_of_marginals(rho)?, rho)
}

/// Which branch of the Werner mixture a shot falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WernerBranch {
    Intact,
    Broken,
}

pub fn werner_branch<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<WernerBranch> {
    unit_interval("p", p)?;
    Ok(if rng.random_bool(p) {
        WernerBranch::Broken
    } else {
        WernerBranch::Intact
    })
}

pub fn werner_sample<R: Rng + ?Sized>(rng: &mut R, rho: &DensityOperator, p: f64) -> Result<DensityOperator> {
    require_modes(rho.modes(), 2)?;
    match werner_branch(rng, p)? {
        WernerBranch::Broken => product_of_marginals(rho),
        WernerBranch::Intact => Ok(rho.clone()),
    }
}

/// Pure-loss Kraus amplitudes: `coeffs[l][n] = <n - l|K_l|n>` for `l <= n < n_max`,
/// read off the beamsplitter coupling the mode to a vacuum environment.
pub fn loss_kraus_coefficients(eta: f64, cutoff: Cutoff) -> Result<Vec<Vec<f64>>> {
    unit_interval("eta", eta)?;
    let n = cutoff.n_max();
    let theta = eta.sqrt().acos();
    let mut coeffs = vec![vec![0.0; n]; n];
    for photons in 0..n {
        let block = beamsplitter_sector(theta, photons);
        // |photons, 0> -> sum_l c |photons - l, l>
        for (l, row) in coeffs.iter_mut().enumerate().take(photons + 1) {
            row[photons] = block[(photons - l, photons)];
        }
    }
    Ok(coeffs)
}

/// Dense single-mode Kraus operators of the loss channel.
pub fn loss_kraus(eta: f64, cutoff: Cutoff) -> Result<Vec<CMatrix>> {
    let n = cutoff.n_max();
    let coeffs = loss_kraus_coefficients(eta, cutoff)?;
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(l, row)| {
            let mut k = CMatrix::zeros(n, n);
            for m in l..n {
                k[(m - l, m)] = row[m].into();
            }
            k
        })
        .collect())
}

/// Couples `mode` to a vacuum environment with transmissivity `eta` and traces
/// the environment out.
pub fn wiretap_apply(rho: &DensityOperator, eta: f64, mode: Mode) -> Result<DensityOperator> {
    unit_interval("eta", eta)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let cutoff = rho.cutoff();
    let n = cutoff.n_max();
    let coeffs = loss_kraus_coefficients(eta, cutoff)?;
    let src = rho.matrix();
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    match rho.modes() {
        1 => {
            for (l, c) in coeffs.iter().enumerate() {
                for j in l..n {
                    for i in l..n {
                        out[(i - l, j - l)] += src[(i, j)] * (c[i] * c[j]);
                    }
                }
            }
        }
        _ => {
            // index = a * n + b; the lost photon comes out of the target mode
            let split = |idx: usize| match mode {
                Mode::A => (idx / n, idx % n, n),
                Mode::B => (idx % n, idx / n, 1),
            };
            for (l, c) in coeffs.iter().enumerate() {
                for j in 0..n * n {
                    let (tj, _, stride) = split(j);
                    if tj < l {
                        continue;
                    }
                    let jj = j - l * stride;
                    for i in 0..n * n {
                        let (ti, _, _) = split(i);
                        if ti < l {
                            continue;
                        }
                        out[(i - l * stride, jj)] += src[(i, j)] * (c[ti] * c[tj]);
                    }
                }
            }
        }
    }
    Ok(DensityOperator::from_parts(out, cutoff, rho.modes()))
}

/// Channels applied left to right.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelSequence {
    pub specs: Vec<ChannelSpec>,
}

impl ChannelSequence {
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.specs
            .iter()
            .try_fold(rho.clone(), |state, spec| spec.apply(&state))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, rho: &DensityOperator) -> Result<DensityOperator> {
        self.specs
            .iter()
            .try_fold(rho.clone(), |state, spec| spec.sample(rng, &state))
    }
}

pub fn compose(specs: &[ChannelSpec]) -> Result<ChannelSequence> {
    for spec in specs {
        spec.validate()?;
    }
    Ok(ChannelSequence {
        specs: specs.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{thermal, tmsv};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &DensityOperator, b: &DensityOperator) -> f64 {
        (a.matrix() - b.matrix()).camax()
    }

    #[test]
    fn loss_on_thermal_scales_mean_photon_number() {
        let cut = Cutoff::for_thermal(2.0).unwrap();
        let out = wiretap_apply(&thermal(2.0, cut).unwrap(), 0.6, Mode::A).unwrap();
        let want = thermal(1.2, cut).unwrap();
        assert!(max_diff(&out, &want) < cut.tau_norm());
    }

    #[test]
    fn loss_extremes() {
        let cut = Cutoff::new(12).unwrap();
        let rho = thermal(0.8, cut).unwrap();
        assert_eq!(wiretap_apply(&rho, 1.0, Mode::A).unwrap(), rho);
        let vac = wiretap_apply(&rho, 0.0, Mode::A).unwrap();
        assert!((vac.matrix()[(0, 0)].re - rho.trace()).abs() < 1e-14);
        assert!((vac.purity() - rho.trace().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn two_mode_loss_acts_on_the_target_only() {
        let cut = Cutoff::new(10).unwrap();
        let rho = tmsv(0.5, cut).unwrap();
        for mode in [Mode::A, Mode::B] {
            let out = wiretap_apply(&rho, 0.7, mode).unwrap();
            assert!((out.trace() - rho.trace()).abs() < 1e-12);
            let untouched = out.partial_trace(mode.other()).unwrap();
            assert!(max_diff(&untouched, &rho.partial_trace(mode.other()).unwrap()) < 1e-13);
            let hit = out.partial_trace(mode).unwrap();
            let direct = wiretap_apply(&rho.partial_trace(mode).unwrap(), 0.7, Mode::A).unwrap();
            assert!(max_diff(&hit, &direct) < 1e-13);
        }
    }

    #[test]
    fn werner_sample_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let broken = (0..10_000)
            .filter(|_| werner_branch(&mut rng, 0.3).unwrap() == WernerBranch::Broken)
            .count();
        let freq = broken as f64 / 1e4;
        assert!((freq - 0.3).abs() < 0.015, "{freq}");
    }

    #[test]
    fn compose_losses_multiply() {
        let cut = Cutoff::new(40).unwrap();
        let rho = thermal(1.0, cut).unwrap();
        let seq = compose(&[ChannelSpec::wiretap(0.9).unwrap(), ChannelSpec::wiretap(0.9).unwrap()]).unwrap();
        let once = ChannelSpec::wiretap(0.81).unwrap().apply(&rho).unwrap();
        assert!(max_diff(&seq.apply(&rho).unwrap(), &once) < 1e-12);
        assert_eq!(compose(&[ChannelSpec::identity()]).unwrap().apply(&rho).unwrap(), rho);
    }
}
