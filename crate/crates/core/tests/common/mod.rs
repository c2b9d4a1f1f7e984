//! Invariant checks shared by the property suite and the acceptance run.
#![allow(dead_code)]

use cvsteg::channels::{product_of_marginals, werner_apply, wiretap_apply};
use cvsteg::fock::{c64, Cutoff, DensityOperator, Mode, PureState};
use cvsteg::metrics::{fidelity, wigner, WignerSpec};
use cvsteg::states::{cat_odd, coherent, random_density, thermal, tmsv, tmsv_pure};
use cvsteg::teleport::{bk_teleport_average, TeleportConfig};
use cvsteg::channels::ChannelSpec;
use rand::Rng;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Trace one, Hermitian, positive and normalised within the cutoff tolerance.
pub fn density_invariants(rho: &DensityOperator) -> Check {
    rho.check_invariants().map_err(|e| e.to_string())?;
    let m = rho.matrix();
    let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ensure(herm < 1e-12, || format!("hermiticity defect {herm}"))?;
    ensure(rho.min_eigenvalue() > -1e-10, || format!("negative eigenvalue {}", rho.min_eigenvalue()))?;
    ensure(rho.trace() <= 1.0 + 1e-10, || format!("trace {} above one", rho.trace()))
}

pub fn pure_invariants(psi: &PureState) -> Check {
    let n = psi.norm_sqr();
    let tau = psi.cutoff().tau_norm();
    ensure(n <= 1.0 + 1e-12 && n >= 1.0 - tau, || format!("norm {n} outside [1 - {tau}, 1]"))
}

/// Both eavesdropper channels preserve the trace of a two-mode state.
pub fn channel_trace_preservation(rho: &DensityOperator, p: f64, eta: f64) -> Check {
    let tr = rho.trace();
    for (name, out) in [
        ("werner", werner_apply(rho, p)),
        ("wiretap B", wiretap_apply(rho, eta, Mode::B)),
        ("wiretap A", wiretap_apply(rho, eta, Mode::A)),
    ] {
        let out = out.map_err(|e| e.to_string())?;
        ensure((out.trace() - tr).abs() < 1e-10, || format!("{name}: trace {} -> {}", tr, out.trace()))?;
        density_invariants(&out).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

/// `Tr_B(a (x) b) = a Tr b`, `Tr_A(a (x) b) = b Tr a`, and marginals of the
/// product of marginals are the original marginals.
pub fn partial_trace_tensor(a: &DensityOperator, b: &DensityOperator, joint: &DensityOperator) -> Check {
    let ab = a.tensor(b).map_err(|e| e.to_string())?;
    let keep_a = ab.partial_trace(Mode::A).map_err(|e| e.to_string())?;
    let keep_b = ab.partial_trace(Mode::B).map_err(|e| e.to_string())?;
    let da = (keep_a.matrix() - a.matrix().scale(b.trace())).norm();
    let db = (keep_b.matrix() - b.matrix().scale(a.trace())).norm();
    ensure(da < 1e-12 && db < 1e-12, || format!("tensor marginals off by {da}, {db}"))?;
    let prod = product_of_marginals(joint).map_err(|e| e.to_string())?;
    for mode in [Mode::A, Mode::B] {
        let d = (prod.partial_trace(mode).unwrap().matrix() - joint.partial_trace(mode).unwrap().matrix()).norm();
        ensure(d < 1e-12, || format!("product of marginals changes mode {mode:?} by {d}"))?;
    }
    Ok(())
}

/// The Wigner function integrates to the trace.
pub fn wigner_normalization(rho: &DensityOperator) -> Check {
    let half = (2.0 * 2.0 * rho.cutoff().n_max() as f64).sqrt() + 6.0;
    let grid = wigner(rho, WignerSpec::square(half, 161)).map_err(|e| e.to_string())?;
    let err = (grid.integral() - rho.trace()).abs();
    ensure(err < 1e-3, || format!("Wigner integral off by {err}"))
}

/// Fidelity cannot decrease under partial trace.
pub fn fidelity_monotone(rho: &DensityOperator, sigma: &DensityOperator) -> Check {
    let joint = fidelity(rho, sigma).map_err(|e| e.to_string())?;
    for mode in [Mode::A, Mode::B] {
        let f = fidelity(&rho.partial_trace(mode).unwrap(), &sigma.partial_trace(mode).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(f >= joint - 1e-9, || format!("fidelity fell from {joint} to {f} keeping {mode:?}"))?;
    }
    Ok(())
}

/// Random full-rank or low-rank two-mode state.
pub fn random_two_mode<R: Rng>(rng: &mut R, levels: usize) -> DensityOperator {
    let cut = Cutoff::new(levels).unwrap();
    let rank = rng.random_range(1..=cut.dim(2));
    random_density(rng, cut, 2, rank).unwrap()
}

/// Two identical seeded teleportation runs agree to the bit.
pub fn seed_replay(seed: u64) -> Check {
    let cut = Cutoff::new(12).unwrap();
    let input = coherent(c64(0.4, -0.3), cut).to_density();
    let config = TeleportConfig::new(tmsv(0.5, cut).unwrap(), ChannelSpec::werner(0.5).unwrap(), 64, seed)
        .map_err(|e| e.to_string())?;
    let first = bk_teleport_average(&input, &config).map_err(|e| e.to_string())?;
    let second = bk_teleport_average(&input, &config).map_err(|e| e.to_string())?;
    let same = first.per_shot_fidelities.iter().zip(&second.per_shot_fidelities).all(|(a, b)| a.to_bits() == b.to_bits())
        && first.avg_output.matrix() == second.avg_output.matrix();
    ensure(same, || format!("seed {seed} did not replay"))
}

/// Every constructor yields a state meeting its type invariants.
pub fn constructor_invariants(r: f64, nbar: f64, alpha: f64) -> Check {
    let cut = Cutoff::new(40).unwrap();
    pure_invariants(&coherent(c64(alpha, -alpha / 2.0), cut))?;
    pure_invariants(&cat_odd(c64(0.0, alpha.max(0.3)), cut).map_err(|e| e.to_string())?)?;
    let th = thermal(nbar, Cutoff::for_thermal(nbar).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    density_invariants(&th)?;
    let pair = tmsv_pure(r, Cutoff::for_tmsv(r).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    pure_invariants(&pair)?;
    let m = pair.amplitude_matrix().map_err(|e| e.to_string())?;
    density_invariants(&DensityOperator::new(&m * m.adjoint(), pair.cutoff(), 1).map_err(|e| e.to_string())?)
}
