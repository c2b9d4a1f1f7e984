//! Homodyne sampling by inverse CDF on an adaptive quadrature grid.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{
    c64, hermite_functions, quadrature_operator, require_modes, CMatrix, Cutoff, DensityOperator, Grid,
    Mode, Quadrature, C64,
};

/// Smallest number of grid points used for a marginal.
pub const MIN_GRID_POINTS: usize = 2048;
/// Required fraction of the marginal's mass on the grid.
pub const GRID_CAPTURE: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneOutcome {
    pub outcome: f64,
    /// Conditional state given the outcome's bin: the measured mode for a single-mode
    /// input, the other mode for a two-mode input.
    pub post_state: DensityOperator,
}

/// Step resolving the shortest oscillation of `<x|k>` for `k < n_max` with 16 points.
pub(crate) fn resolving_step(cutoff: Cutoff) -> f64 {
    let n = cutoff.n_max() as f64;
    2.0 * std::f64::consts::PI * cutoff.hbar().sqrt() / (2.0 * n + 1.0).sqrt() / 16.0
}

/// Mean and standard deviation of a quadrature of a single-mode state.
pub(crate) fn quadrature_moments(rho: &DensityOperator, quadrature: Quadrature) -> Result<(f64, f64)> {
    let op = quadrature_operator(quadrature, rho.cutoff());
    let tr = rho.trace();
    let mean = rho.expectation(&op)?.re / tr;
    let sq = op.compose(&op)?;
    let second = rho.expectation(&sq)?.re / tr;
    Ok((mean, (second - mean * mean).max(0.0).sqrt()))
}

/// Draws from the piecewise-linear density through `values` at `start + i * step`.
/// Negative values from rounding are treated as zero.
pub(crate) fn sample_linear_density<R: Rng + ?Sized>(rng: &mut R, start: f64, step: f64, values: &[f64]) -> f64 {
    let clipped = |i: usize| values[i].max(0.0);
    let mut cumulative = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() - 1 {
        acc += 0.5 * (clipped(i) + clipped(i + 1)) * step;
        cumulative.push(acc);
    }
    let target = rng.random::<f64>() * acc;
    let cell = cumulative.partition_point(|&c| c < target).min(cumulative.len() - 1);
    let before = if cell == 0 { 0.0 } else { cumulative[cell - 1] };
    let mass = target - before;
    let (d0, d1) = (clipped(cell), clipped(cell + 1));
    let slope = (d1 - d0) / step;
    let offset = if slope.abs() < 1e-14 * (d0 + d1).max(1e-300) / step {
        if d0 > 0.0 {
            mass / d0
        } else {
            0.5 * step
        }
    } else {
        // d0 t + slope t^2 / 2 = mass
        let disc = (d0 * d0 + 2.0 * slope * mass).max(0.0);
        (disc.sqrt() - d0) / slope
    };
    start + step * cell as f64 + offset.clamp(0.0, step)
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let inner: f64 = values.iter().sum();
    step * (inner - 0.5 * (values[0] + values[values.len() - 1]))
}

/// Marginal of a single-mode state on an adaptive grid, checked for captured mass.
fn marginal_on_grid(rho: &DensityOperator, quadrature: Quadrature) -> Result<(Grid, Vec<f64>)> {
    let (mean, sd) = quadrature_moments(rho, quadrature)?;
    let cutoff = rho.cutoff();
    let half = 6.0 * sd.max((cutoff.hbar() / 2.0).sqrt() * 0.1);
    let step = resolving_step(cutoff);
    let len = MIN_GRID_POINTS.max((2.0 * half / step).ceil() as usize + 1);
    let grid = Grid::centered(mean, half, len)?;
    let values = rho.quadrature_marginal(quadrature, &grid.points())?;
    let captured = trapezoid(&values, grid.step) / rho.trace();
    if captured < GRID_CAPTURE {
        return Err(Error::GridOverflow { captured });
    }
    Ok((grid, values))
}

/// `P[m, n] = int_bin <m|y><y|n> dy` over `[lo, hi]` of the quadrature at angle `theta`.
fn bin_projector(cutoff: Cutoff, theta: f64, lo: f64, hi: f64) -> CMatrix {
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let n = cutoff.n_max();
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut real = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut h = vec![0.0; n];
    for (t, w) in NODES.iter().zip(WEIGHTS) {
        hermite_functions(mid + half * t, cutoff.hbar(), &mut h);
        let hv = nalgebra::DVector::from_column_slice(&h);
        real += (&hv * hv.transpose()) * (w * half);
    }
    CMatrix::from_fn(n, n, |m, k| real[(m, k)] * C64::from_polar(1.0, (m as f64 - k as f64) * theta))
}

fn bin_of(grid: &Grid, outcome: f64) -> (f64, f64) {
    let cell = (((outcome - grid.start) / grid.step).floor().max(0.0) as usize).min(grid.len - 2);
    (grid.point(cell), grid.point(cell + 1))
}

/// Draws `count` independent outcomes of a quadrature, building the marginal once.
pub fn homodyne_outcomes<R: Rng + ?Sized>(
    rng: &mut R,
    rho: &DensityOperator,
    quadrature: Quadrature,
    count: usize,
) -> Result<Vec<f64>> {
    require_modes(rho.modes(), 1)?;
    let (grid, values) = marginal_on_grid(rho, quadrature)?;
    Ok((0..count)
        .map(|_| sample_linear_density(rng, grid.start, grid.step, &values))
        .collect())
}

/// Measures a quadrature of a single-mode state.
pub fn homodyne_sample<R: Rng + ?Sized>(
    rng: &mut R,
    rho: &DensityOperator,
    quadrature: Quadrature,
) -> Result<HomodyneOutcome> {
    require_modes(rho.modes(), 1)?;
    let (grid, values) = marginal_on_grid(rho, quadrature)?;
    let outcome = sample_linear_density(rng, grid.start, grid.step, &values);
    let (lo, hi) = bin_of(&grid, outcome);
    let proj = bin_projector(rho.cutoff(), quadrature.angle(), lo, hi);
    let post = &proj * rho.matrix() * &proj;
    let tr = post.trace().re;
    if !(tr > 0.0) {
        return Err(Error::InvalidState("outcome bin has no weight".into()));
    }
    Ok(HomodyneOutcome {
        outcome,
        post_state: DensityOperator::from_parts_hermitized(post.unscale(tr), rho.cutoff(), 1),
    })
}

/// Measures a quadrature of one mode of a two-mode state; the post state is the
/// conditional state of the other mode.
pub fn homodyne_sample_mode<R: Rng + ?Sized>(
    rng: &mut R,
    rho: &DensityOperator,
    measured: Mode,
    quadrature: Quadrature,
) -> Result<HomodyneOutcome> {
    require_modes(rho.modes(), 2)?;
    let marginal = rho.partial_trace(measured)?;
    let (grid, values) = marginal_on_grid(&marginal, quadrature)?;
    let outcome = sample_linear_density(rng, grid.start, grid.step, &values);
    let (lo, hi) = bin_of(&grid, outcome);
    let cutoff = rho.cutoff();
    let proj = bin_projector(cutoff, quadrature.angle(), lo, hi);
    let n = cutoff.n_max();
    let src = rho.matrix();
    let index = |m: usize, o: usize| match measured {
        Mode::A => m * n + o,
        Mode::B => o * n + m,
    };
    // Tr_measured[(P (x) 1) rho]
    let mut post = CMatrix::zeros(n, n);
    for o2 in 0..n {
        for o1 in 0..n {
            let mut acc = c64(0.0, 0.0);
            for m in 0..n {
                for k in 0..n {
                    acc += proj[(k, m)] * src[(index(m, o1), index(k, o2))];
                }
            }
            post[(o1, o2)] = acc;
        }
    }
    let tr = post.trace().re;
    if !(tr > 0.0) {
        return Err(Error::InvalidState("outcome bin has no weight".into()));
    }
    Ok(HomodyneOutcome {
        outcome,
        post_state: DensityOperator::from_parts_hermitized(post.unscale(tr), cutoff, 1),
    })
}
