//! Rate formulas: superdense coding over a TMSV, the classical thermal rate,
//! the eavesdropping probability below which the quantum rate still wins, and
//! the repeaterless bound for pure loss.
//!
//! Entropic rates are in nats; the loss bound is in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::thermal_entropy;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

fn check_nbar(nbar: f64) -> Result<()> {
    if nbar >= 0.0 && nbar.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("nbar must be finite and >= 0, got {nbar}")))
    }
}

/// Superdense-coding capacity `ln(1 + nbar + nbar^2)`.
pub fn sdc_capacity(nbar: f64) -> Result<f64> {
    check_nbar(nbar)?;
    Ok((1.0 + nbar + nbar * nbar).ln())
}

/// Classical rate `(1 + nbar) ln(1 + nbar) - nbar ln nbar`.
pub fn classical_capacity(nbar: f64) -> Result<f64> {
    check_nbar(nbar)?;
    thermal_entropy(nbar)
}

/// `1 - S(nbar) / C(nbar)`; negative when superdense coding cannot beat the
/// classical rate even without an eavesdropper.
pub fn advantage_p_max(nbar: f64) -> Result<f64> {
    check_nbar(nbar)?;
    if nbar == 0.0 {
        return Err(Error::Domain("p_max is undefined at nbar = 0".into()));
    }
    Ok(1.0 - classical_capacity(nbar)? / sdc_capacity(nbar)?)
}

/// Mean photon number where `advantage_p_max` crosses zero, by bisection to `1e-6`.
pub fn advantage_threshold() -> Result<f64> {
    let (mut lo, mut hi) = (0.5, 10.0);
    if advantage_p_max(lo)? >= 0.0 || advantage_p_max(hi)? <= 0.0 {
        return Err(Error::Domain("threshold not bracketed".into()));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if advantage_p_max(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Squeezing giving a TMSV marginal of mean photon number `nbar`.
pub fn squeezing_for_nbar(nbar: f64) -> Result<f64> {
    check_nbar(nbar)?;
    Ok(nbar.sqrt().asinh())
}

/// Repeaterless bound `-log2(1 - eta)` in bits per use.
pub fn plob_rate(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0,1), got {eta}")));
    }
    Ok(-(1.0 - eta).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub nbar: f64,
    pub quantum_rate: f64,
    pub classical_rate: f64,
    pub p_max: f64,
}

pub fn rate_point(nbar: f64) -> Result<RatePoint> {
    Ok(RatePoint {
        nbar,
        quantum_rate: sdc_capacity(nbar)?,
        classical_rate: classical_capacity(nbar)?,
        p_max: advantage_p_max(nbar)?,
    })
}
