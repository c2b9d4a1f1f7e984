use super::{c64, CMatrix, Cutoff, ModeOperator, C64};

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Exact matrix elements `<n|D(beta)|m>` for `n < rows`, `m < cols`.
///
/// Uses the associated-Laguerre closed form
/// `<n|D|m> = sqrt(m!/n!) beta^(n-m) e^{-|beta|^2/2} L_m^(n-m)(|beta|^2)` for `n >= m`
/// and its mirror with `-conj(beta)` above the diagonal, so no truncated generator is
/// exponentiated and every element is correct regardless of the box size.
pub fn displacement_elements(beta: C64, rows: usize, cols: usize) -> CMatrix {
    let mut d = CMatrix::zeros(rows, cols);
    let x = beta.norm_sqr();
    if x == 0.0 {
        for k in 0..rows.min(cols) {
            d[(k, k)] = c64(1.0, 0.0);
        }
        return d;
    }
    let ln_abs = 0.5 * x.ln();
    let phi = beta.arg();
    let lf = ln_factorials(rows.max(cols));
    let mut lag = Vec::with_capacity(rows.max(cols));
    for k in 0..rows.max(cols) {
        let len_lower = cols.min(rows.saturating_sub(k));
        let len_upper = if k == 0 { 0 } else { rows.min(cols.saturating_sub(k)) };
        let len = len_lower.max(len_upper);
        if len == 0 {
            continue;
        }
        laguerre_run(k as f64, x, len, &mut lag);
        let lower_phase = C64::from_polar(1.0, k as f64 * phi);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let upper_phase = C64::from_polar(sign, -(k as f64) * phi);
        for (j, &l) in lag.iter().enumerate() {
            let magnitude = (0.5 * (lf[j] - lf[j + k]) + k as f64 * ln_abs - 0.5 * x).exp() * l;
            if j < len_lower {
                d[(j + k, j)] = lower_phase * magnitude;
            }
            if j < len_upper {
                d[(j, j + k)] = upper_phase * magnitude;
            }
        }
    }
    d
}

/// `L_j^(k)(x)` for `j = 0..len` by the forward three-term recurrence.
fn laguerre_run(k: f64, x: f64, len: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if len > 1 {
        out.push(1.0 + k - x);
    }
    for j in 1..len.saturating_sub(1) {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * out[j] - (jf + k) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
}

/// Single-mode displacement `exp(alpha a^dag - conj(alpha) a)`, which shifts
/// `<x>` by `sqrt(2 hbar) Re(alpha)` and `<p>` by `sqrt(2 hbar) Im(alpha)`.
pub fn displacement(alpha: C64, cutoff: Cutoff) -> ModeOperator {
    let n = cutoff.n_max();
    let d = displacement_elements(alpha, n, n);
    let lost = 1.0 - d.column(0).norm_squared();
    if lost > cutoff.tau_norm() {
        log::warn!("displacement by {alpha} loses {lost:.2e} of the vacuum norm at n_max = {n}");
    }
    ModeOperator::from_parts(d, cutoff, 1, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation, expm};

    fn padded_reference(beta: C64, n: usize, pad: usize) -> CMatrix {
        let big = Cutoff::new(n + pad).unwrap();
        let a = annihilation(big).matrix().clone();
        let gen = a.adjoint().map(|v| v * beta) - a.map(|v| v * beta.conj());
        expm(&gen).view((0, 0), (n, n)).into_owned()
    }

    #[test]
    fn agrees_with_padded_exponential() {
        for &beta in &[c64(0.3, 0.0), c64(-1.1, 0.7), c64(0.0, -2.0), c64(2.5, 1.5)] {
            let n = 25;
            let exact = displacement_elements(beta, n, n);
            let reference = padded_reference(beta, n, 120);
            let err = (exact - reference).camax();
            assert!(err < 1e-10, "beta {beta}: {err}");
        }
    }

    #[test]
    fn coherent_column_and_rectangular_shape() {
        let beta = c64(0.8, -0.4);
        let d = displacement_elements(beta, 12, 5);
        assert_eq!(d.shape(), (12, 5));
        let mut amp = (-beta.norm_sqr() / 2.0).exp();
        let mut want = c64(amp, 0.0);
        for n in 0..12 {
            assert!((d[(n, 0)] - want).norm() < 1e-14);
            amp = 1.0 / ((n + 1) as f64).sqrt();
            want = want * beta * amp;
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let d = displacement_elements(c64(0.0, 0.0), 4, 6);
        assert_eq!(d[(3, 3)], c64(1.0, 0.0));
        assert_eq!(d[(3, 4)], c64(0.0, 0.0));
    }
}
