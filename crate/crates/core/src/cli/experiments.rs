//! The experiment catalog.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::{CliError, CliResult, Context, Experiment, Outcome, ParamSpec, Table};
use crate::capacities::{
    advantage_threshold, classical_capacity, plob_rate, rate_point, sdc_capacity, squeezing_for_nbar,
};
use crate::channels::{ChannelKind, ChannelSpec};
use crate::error::Error as SimError;
use crate::fock::{c64, Cutoff, DensityOperator, Mode, TAU_NORM};
use crate::gkp_logic::{analyze_state, bell_test, Estimator, Pauli, Readout};
use crate::metrics::{
    ef_margin_curve, fidelity, fvdg_bounds, fvdg_mixture_lower, squeezing_db, squeezing_margin, trace_distance,
    wigner, wigner_min, WignerGrid, WignerSpec,
};
use crate::states::{cat_odd, coherent, gkp, gkp_bell, gkp_levels, random_density, thermal, tmsv, GkpParams};
use crate::teleport::{bk_teleport_average, cat_fidelity_tmsv_closed, tmsv_teleport_noise, TeleportConfig, TeleportResult};

const CHANNELS: &[&str] = &["identity", "werner", "wiretap"];
const ESTIMATORS: &[&str] = &["binned", "displacement"];
const STATES: &[&str] = &["vacuum", "thermal", "coherent", "cat", "gkp", "teleported-cat"];

/// Wigner negativity below this value counts as observed.
const NEGATIVITY_THRESHOLD: f64 = -1e-3;

pub fn catalog() -> Vec<Experiment> {
    let teleport_params = || {
        vec![
            ParamSpec::float("alpha", 1.5, "cat amplitude z, alpha = -i z"),
            ParamSpec::float("r", 1.15, "TMSV squeezing"),
            ParamSpec::choice("channel", "identity", CHANNELS, "eavesdropper channel on mode B"),
            ParamSpec::float("p", 0.0, "Werner breaking probability"),
            ParamSpec::float("eta", 1.0, "wiretap transmissivity"),
            ParamSpec::int("shots", 2000, "Monte Carlo shots"),
            ParamSpec::float("gain", 1.0, "feed-forward gain"),
            ParamSpec::int("n_max", 0, "Fock cutoff, 0 for automatic"),
        ]
    };
    let gkp_params = || {
        vec![
            ParamSpec::float("epsilon", 0.1, "GKP envelope"),
            ParamSpec::float("r", 3.2, "TMSV squeezing of the teleportation resource"),
            ParamSpec::int("n_max", 110, "Fock cutoff of each mode"),
            ParamSpec::choice("estimator", "binned", ESTIMATORS, "logical Pauli readout"),
        ]
    };
    vec![
        Experiment {
            name: "tmsv-marginal",
            figure: "Fig. 1",
            summary: "Trace distance between the TMSV marginal and the thermal state",
            params: vec![
                ParamSpec::float("r_min", 0.5, "smallest squeezing"),
                ParamSpec::float("r_max", 1.5, "largest squeezing"),
                ParamSpec::int("steps", 11, "number of squeezing values"),
                ParamSpec::int("n_max", 0, "Fock cutoff, 0 for automatic"),
            ],
            run: tmsv_marginal,
        },
        Experiment {
            name: "ef-margin",
            figure: "Fig. 1",
            summary: "Percent gain in entanglement from the squeezing hidden at fidelity 0.99",
            params: vec![
                ParamSpec::float("r_min", 0.2, "smallest squeezing"),
                ParamSpec::float("r_max", 2.0, "largest squeezing"),
                ParamSpec::int("steps", 37, "number of squeezing values"),
            ],
            run: ef_margin,
        },
        Experiment {
            name: "cat-teleport",
            figure: "Figs. 2-3",
            summary: "Odd cat teleported through a TMSV resource: fidelity and averaged Wigner function",
            params: {
                let mut p = teleport_params();
                p.push(ParamSpec::float("half_width", 4.0, "Wigner grid half width"));
                p.push(ParamSpec::int("points", 81, "Wigner grid points per axis"));
                p
            },
            run: cat_teleport,
        },
        Experiment {
            name: "werner-sweep",
            figure: "Fig. 2c",
            summary: "Teleportation fidelity against the Werner probability with the affine prediction",
            params: vec![
                ParamSpec::float("alpha", 1.5, "cat amplitude z, alpha = -i z"),
                ParamSpec::float("r", 1.15, "TMSV squeezing"),
                ParamSpec::int("shots", 2000, "Monte Carlo shots per point"),
                ParamSpec::int("p_steps", 5, "number of probabilities in [0, 1]"),
                ParamSpec::int("n_max", 0, "Fock cutoff, 0 for automatic"),
            ],
            run: werner_sweep,
        },
        Experiment {
            name: "fvdg-mixture",
            figure: "Fig. 2c",
            summary: "Random check of the mixture fidelity lower bound",
            params: vec![
                ParamSpec::int("trials", 1000, "random triples"),
                ParamSpec::int("dim", 6, "Hilbert space dimension"),
            ],
            run: fvdg_mixture,
        },
        Experiment {
            name: "gkp-teleport",
            figure: "Fig. 5",
            summary: "Tomography of a GKP Bell pair with one half teleported through a lossy TMSV",
            params: {
                let mut p = gkp_params();
                p.push(ParamSpec::float("eta", 0.9, "wiretap transmissivity of the resource"));
                p
            },
            run: gkp_teleport,
        },
        Experiment {
            name: "gkp-bell",
            figure: "Fig. 5",
            summary: "CHSH value of the teleported GKP pair against resource loss",
            params: {
                let mut p = gkp_params();
                p.push(ParamSpec::float("eta_min", 0.85, "smallest transmissivity"));
                p.push(ParamSpec::float("eta_max", 1.0, "largest transmissivity"));
                p.push(ParamSpec::int("steps", 4, "number of transmissivities"));
                p
            },
            run: gkp_bell_sweep,
        },
        Experiment {
            name: "pmax-curve",
            figure: "Fig. 4",
            summary: "Superdense coding and classical rates with the tolerable eavesdropping probability",
            params: vec![
                ParamSpec::float("nbar_min", 0.05, "smallest mean photon number"),
                ParamSpec::float("nbar_max", 20.0, "largest mean photon number"),
                ParamSpec::int("steps", 400, "number of points"),
            ],
            run: pmax_curve,
        },
        Experiment {
            name: "capacity-threshold",
            figure: "Fig. 4",
            summary: "Photon number where superdense coding starts to win, asymptotes and the loss bound",
            params: vec![
                ParamSpec::float("r_asymptote", 5.0, "squeezing for the large-r checks"),
                ParamSpec::float("eta", 0.9, "transmissivity for the loss bound"),
                ParamSpec::int("steps", 50, "points of the loss-bound table"),
            ],
            run: capacity_threshold,
        },
        Experiment {
            name: "wigner-dump",
            figure: "Fig. 2a-b",
            summary: "Wigner function of a single-mode state on a grid",
            params: {
                let mut p = teleport_params();
                p.insert(0, ParamSpec::choice("state", "cat", STATES, "state to evaluate"));
                p.push(ParamSpec::float("nbar", 1.0, "thermal mean photon number"));
                p.push(ParamSpec::float("epsilon", 0.1, "GKP envelope"));
                p.push(ParamSpec::float("theta", 0.0, "GKP Bloch angle"));
                p.push(ParamSpec::float("half_width", 4.0, "grid half width"));
                p.push(ParamSpec::int("points", 101, "grid points per axis"));
                p
            },
            run: wigner_dump,
        },
    ]
}

fn linspace(lo: f64, hi: f64, steps: usize) -> CliResult<Vec<f64>> {
    if steps == 0 || !(hi >= lo) {
        return Err(CliError::Config(format!("bad range [{lo}, {hi}] with {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

fn num(v: f64) -> Value {
    json!(v)
}

fn summary(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn tmsv_marginal(ctx: &Context) -> CliResult<Outcome> {
    let rs = linspace(ctx.f64("r_min")?, ctx.f64("r_max")?, ctx.usize("steps")?)?;
    let mut table = Table::new("tmsv_marginal", &["r", "nbar", "n_max", "trace_distance", "lost_mass"]);
    let (mut worst, mut lost, mut biggest) = (0.0f64, 0.0f64, 0);
    for r in rs {
        let nbar = r.sinh().powi(2);
        let cut = Cutoff::new(ctx.n_max(ctx.usize("n_max")?, Cutoff::for_tmsv(r)?.n_max()))?;
        let marginal = tmsv(r, cut)?.partial_trace(Mode::A)?;
        if marginal.lost_mass() > cut.tau_norm() {
            return Err(SimError::CutoffTooSmall { n_max: cut.n_max(), lost: marginal.lost_mass() }.into());
        }
        let td = trace_distance(&marginal, &thermal(nbar, cut)?)?;
        worst = worst.max(td);
        lost = lost.max(marginal.lost_mass());
        biggest = biggest.max(cut.n_max());
        table.push(vec![num(r), num(nbar), json!(cut.n_max()), num(td), num(marginal.lost_mass())]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: summary(&[("max_trace_distance", num(worst))]),
        n_max: Some(biggest),
        lost_mass: lost,
    })
}

fn ef_margin(ctx: &Context) -> CliResult<Outcome> {
    let rs = linspace(ctx.f64("r_min")?, ctx.f64("r_max")?, ctx.usize("steps")?)?;
    let curve = ef_margin_curve(&rs)?;
    let dr = squeezing_margin(0.99)?;
    let mut table = Table::new("ef_margin", &["r", "nbar", "percent_increase"]);
    for (r, pct) in rs.iter().zip(&curve) {
        table.push(vec![num(*r), num(r.sinh().powi(2)), num(*pct)]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: summary(&[("delta_r", num(dr)), ("delta_db", num(squeezing_db(dr)))]),
        n_max: None,
        lost_mass: 0.0,
    })
}

fn channel_from(ctx: &Context) -> CliResult<ChannelSpec> {
    Ok(match ctx.choice("channel")? {
        "werner" => ChannelSpec::werner(ctx.f64("p")?)?,
        "wiretap" => ChannelSpec::wiretap(ctx.f64("eta")?)?,
        _ => ChannelSpec::identity(),
    })
}

fn cat_cutoff(ctx: &Context, r: f64, alpha: f64) -> CliResult<Cutoff> {
    let auto = Cutoff::for_tmsv(r)?.n_max().max(Cutoff::for_coherent(c64(alpha, 0.0))?.n_max());
    Ok(Cutoff::new(ctx.n_max(ctx.usize("n_max")?, auto))?)
}

fn teleport_cat(
    ctx: &Context,
    channel: ChannelSpec,
    cut: Cutoff,
) -> CliResult<(DensityOperator, TeleportResult)> {
    let r = ctx.f64("r")?;
    let input = cat_odd(c64(0.0, -ctx.f64("alpha")?), cut)?.to_density();
    let mut config = TeleportConfig::new(tmsv(r, cut)?, channel, ctx.usize("shots")?, ctx.seed)?;
    if let Ok(gain) = ctx.f64("gain") {
        config = config.with_gain(gain)?;
    }
    let result = bk_teleport_average(&input, &config)?;
    Ok((input, result))
}

fn wigner_table(name: &str, grid: &WignerGrid) -> Table {
    let spec = grid.spec();
    let mut table = Table::new(name, &["x", "p", "w"]);
    for i in 0..spec.nx {
        for j in 0..spec.np {
            table.push(vec![num(spec.x(i)), num(spec.p(j)), num(grid.values[(i, j)])]);
        }
    }
    table
}

fn cat_teleport(ctx: &Context) -> CliResult<Outcome> {
    let (r, alpha) = (ctx.f64("r")?, ctx.f64("alpha")?);
    let channel = channel_from(ctx)?;
    let cut = cat_cutoff(ctx, r, alpha)?;
    let (_, result) = teleport_cat(ctx, channel, cut)?;
    let grid = wigner(&result.avg_output, WignerSpec::square(ctx.f64("half_width")?, ctx.usize("points")?))?;
    let w_min = wigner_min(&grid);
    let mut shots = Table::new("shots", &["shot", "fidelity"]);
    for (i, f) in result.per_shot_fidelities.iter().enumerate() {
        shots.push(vec![json!(i), num(*f)]);
    }
    let mut out = summary(&[
        ("avg_fidelity", num(result.avg_fidelity)),
        ("stderr", num(result.stderr)),
        ("wigner_min", num(w_min)),
        ("wigner_negative", json!(w_min < NEGATIVITY_THRESHOLD)),
    ]);
    let gaussian_resource = !matches!(channel.kind, ChannelKind::Werner { p } if p > 0.0 && p < 1.0);
    if gaussian_resource && ctx.f64("gain")? == 1.0 {
        let noise = tmsv_teleport_noise(r, &channel, cut.hbar())?;
        out.insert("effective_noise_variance".into(), num(noise.var_x));
    }
    if matches!(channel.kind, ChannelKind::Identity) || channel.kind == (ChannelKind::Werner { p: 0.0 }) {
        out.insert("closed_form_fidelity".into(), num(cat_fidelity_tmsv_closed(r, alpha)?));
    }
    Ok(Outcome {
        tables: vec![shots, wigner_table("wigner", &grid)],
        summary: out,
        n_max: Some(cut.n_max()),
        lost_mass: result.max_lost_mass,
    })
}

fn werner_sweep(ctx: &Context) -> CliResult<Outcome> {
    let (r, alpha) = (ctx.f64("r")?, ctx.f64("alpha")?);
    let cut = cat_cutoff(ctx, r, alpha)?;
    let ps = linspace(0.0, 1.0, ctx.usize("p_steps")?)?;
    let (input, intact) = teleport_cat(ctx, ChannelSpec::werner(0.0)?, cut)?;
    let (_, broken) = teleport_cat(ctx, ChannelSpec::werner(1.0)?, cut)?;
    let td_c = trace_distance(&input, &intact.avg_output.normalized()?)?;
    let td_th = trace_distance(&input, &broken.avg_output.normalized()?)?;
    let mut table = Table::new(
        "werner_sweep",
        &[
            "p",
            "fidelity",
            "stderr",
            "affine_prediction",
            "residual_over_stderr",
            "fvdg_mixture_lower",
            "fvdg_lower",
            "output_fidelity",
            "wigner_min",
        ],
    );
    let mut lost = intact.max_lost_mass.max(broken.max_lost_mass);
    let mut worst = 0.0f64;
    for p in ps {
        let (_, res) = teleport_cat(ctx, ChannelSpec::werner(p)?, cut)?;
        lost = lost.max(res.max_lost_mass);
        let affine = p * broken.avg_fidelity + (1.0 - p) * intact.avg_fidelity;
        let combined = (res.stderr.powi(2) + (p * broken.stderr).powi(2) + ((1.0 - p) * intact.stderr).powi(2)).sqrt();
        let residual = (res.avg_fidelity - affine).abs() / combined.max(1e-300);
        worst = worst.max(residual);
        let output = res.avg_output.normalized()?;
        let direct = fvdg_bounds(&input, &output)?;
        let grid = wigner(&res.avg_output, WignerSpec::square(4.0, 61))?;
        table.push(vec![
            num(p),
            num(res.avg_fidelity),
            num(res.stderr),
            num(affine),
            num(residual),
            num(fvdg_mixture_lower(p, td_th, td_c)?),
            num(direct.lower),
            num(fidelity(&input, &output)?),
            num(wigner_min(&grid)),
        ]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: summary(&[
            ("fidelity_tmsv", num(intact.avg_fidelity)),
            ("fidelity_thermal", num(broken.avg_fidelity)),
            ("max_residual_over_stderr", num(worst)),
        ]),
        n_max: Some(cut.n_max()),
        lost_mass: lost,
    })
}

fn fvdg_mixture(ctx: &Context) -> CliResult<Outcome> {
    let dim = ctx.usize("dim")?;
    let cut = Cutoff::new(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut table = Table::new("fvdg_mixture", &["trial", "p", "fidelity", "mixture_lower", "holds"]);
    let mut violations = 0;
    for trial in 0..ctx.usize("trials")? {
        let reference = random_density(&mut rng, cut, 1, dim)?;
        let th = random_density(&mut rng, cut, 1, dim)?;
        let c = random_density(&mut rng, cut, 1, dim)?;
        let p: f64 = rand::Rng::random(&mut rng);
        let mixed = DensityOperator::mix(p, &th, &c)?;
        let f = fidelity(&mixed, &reference)?;
        let lower = fvdg_mixture_lower(p, trace_distance(&th, &reference)?, trace_distance(&c, &reference)?)?;
        let holds = f >= lower - 1e-12;
        violations += usize::from(!holds);
        table.push(vec![json!(trial), num(p), num(f), num(lower), json!(holds)]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: summary(&[("violations", json!(violations))]),
        n_max: Some(dim),
        lost_mass: 0.0,
    })
}

fn estimator(ctx: &Context) -> CliResult<Estimator> {
    Ok(match ctx.choice("estimator")? {
        "displacement" => Estimator::Displacement,
        _ => Estimator::BinnedHomodyne,
    })
}

fn gkp_pair(ctx: &Context) -> CliResult<(crate::fock::PureState, Cutoff)> {
    let cut = Cutoff::new(ctx.n_max(ctx.usize("n_max")?, 110))?;
    let psi = gkp_bell(ctx.f64("epsilon")?, cut)?;
    Ok((psi, cut))
}

fn gkp_teleport(ctx: &Context) -> CliResult<Outcome> {
    let (psi, cut) = gkp_pair(ctx)?;
    let eta = ctx.f64("eta")?;
    let readout = Readout::teleported(estimator(ctx)?, ctx.f64("r")?, &ChannelSpec::wiretap(eta)?, cut.hbar())?;
    let report = analyze_state(&psi, &readout)?;
    let names = ["I", "X", "Y", "Z"];
    let mut paulis = Table::new("paulis", &["first", "second", "expectation"]);
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            paulis.push(vec![
                json!(names[p.index()]),
                json!(names[q.index()]),
                num(report.tomogram.expectations[p.index()][q.index()]),
            ]);
        }
    }
    let mut density = Table::new("density", &["row", "col", "re", "im"]);
    for i in 0..4 {
        for j in 0..4 {
            let v = report.tomogram.projected[(i, j)];
            density.push(vec![json!(i), json!(j), num(v.re), num(v.im)]);
        }
    }
    Ok(Outcome {
        tables: vec![paulis, density],
        summary: summary(&[
            ("bell_fidelity", num(report.bell_fidelity)),
            ("concurrence", num(report.concurrence)),
            ("entanglement_of_formation", num(report.entanglement_of_formation)),
            ("ppt_entangled", json!(report.ppt.entangled)),
            ("log_negativity", num(report.ppt.log_negativity)),
            ("chsh", num(report.bell.s)),
            ("chsh_rotated", num(report.bell_rotated.s)),
            ("noise_variance", num(readout.noise[1].map_or(0.0, |n| n.var_x))),
        ]),
        n_max: Some(cut.n_max()),
        lost_mass: report.lost_mass,
    })
}

fn gkp_bell_sweep(ctx: &Context) -> CliResult<Outcome> {
    let (psi, cut) = gkp_pair(ctx)?;
    let est = estimator(ctx)?;
    let mut table = Table::new("gkp_bell", &["eta", "loss", "xx", "xz", "zx", "zz", "s", "s_rotated"]);
    for eta in linspace(ctx.f64("eta_min")?, ctx.f64("eta_max")?, ctx.usize("steps")?)? {
        let readout = Readout::teleported(est, ctx.f64("r")?, &ChannelSpec::wiretap(eta)?, cut.hbar())?;
        let plain = bell_test(&psi, false, &readout)?;
        let rotated = bell_test(&psi, true, &readout)?;
        table.push(vec![
            num(eta),
            num(1.0 - eta),
            num(plain.xx),
            num(plain.xz),
            num(plain.zx),
            num(plain.zz),
            num(plain.s),
            num(rotated.s),
        ]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: Map::new(),
        n_max: Some(cut.n_max()),
        lost_mass: psi.lost_mass(),
    })
}

fn pmax_curve(ctx: &Context) -> CliResult<Outcome> {
    let mut table = Table::new("pmax_curve", &["nbar", "r", "quantum_rate", "classical_rate", "p_max"]);
    for nbar in linspace(ctx.f64("nbar_min")?, ctx.f64("nbar_max")?, ctx.usize("steps")?)? {
        let point = rate_point(nbar)?;
        table.push(vec![
            num(nbar),
            num(squeezing_for_nbar(nbar)?),
            num(point.quantum_rate),
            num(point.classical_rate),
            num(point.p_max),
        ]);
    }
    let threshold = advantage_threshold()?;
    Ok(Outcome {
        tables: vec![table],
        summary: summary(&[("threshold_nbar", num(threshold))]),
        n_max: None,
        lost_mass: 0.0,
    })
}

fn capacity_threshold(ctx: &Context) -> CliResult<Outcome> {
    let threshold = advantage_threshold()?;
    let r = ctx.f64("r_asymptote")?;
    let nbar = r.sinh().powi(2);
    let mut table = Table::new("plob", &["eta", "bits_per_use"]);
    for eta in linspace(0.01, 0.99, ctx.usize("steps")?)? {
        table.push(vec![num(eta), num(plob_rate(eta)?)]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: summary(&[
            ("threshold_nbar", num(threshold)),
            ("threshold_r", num(squeezing_for_nbar(threshold)?)),
            ("sdc_over_4r", num(sdc_capacity(nbar)? / (4.0 * r))),
            ("classical_over_2r", num(classical_capacity(nbar)? / (2.0 * r))),
            ("plob_bits", num(plob_rate(ctx.f64("eta")?)?)),
        ]),
        n_max: None,
        lost_mass: 0.0,
    })
}

fn wigner_dump(ctx: &Context) -> CliResult<Outcome> {
    let state = ctx.choice("state")?;
    let alpha = ctx.f64("alpha")?;
    let requested = ctx.usize("n_max")?;
    let (rho, cut, lost) = match state {
        "vacuum" => {
            let cut = Cutoff::new(ctx.n_max(requested, 2))?;
            (thermal(0.0, cut)?, cut, 0.0)
        }
        "thermal" => {
            let nbar = ctx.f64("nbar")?;
            let cut = Cutoff::new(ctx.n_max(requested, Cutoff::for_thermal(nbar)?.n_max()))?;
            let rho = thermal(nbar, cut)?;
            let lost = rho.lost_mass();
            (rho, cut, lost)
        }
        "coherent" => {
            let cut = Cutoff::new(ctx.n_max(requested, Cutoff::for_coherent(c64(0.0, -alpha))?.n_max()))?;
            let psi = coherent(c64(0.0, -alpha), cut);
            (psi.to_density(), cut, psi.lost_mass())
        }
        "cat" => {
            let cut = Cutoff::new(ctx.n_max(requested, Cutoff::for_coherent(c64(alpha, 0.0))?.n_max()))?;
            let psi = cat_odd(c64(0.0, -alpha), cut)?;
            (psi.to_density(), cut, psi.lost_mass())
        }
        "gkp" => {
            let eps = ctx.f64("epsilon")?;
            let cut = Cutoff::new(ctx.n_max(requested, gkp_levels(eps, 10, 2.0, TAU_NORM)?))?;
            let psi = gkp(GkpParams::new(ctx.f64("theta")?, eps), cut)?;
            (psi.to_density(), cut, psi.lost_mass())
        }
        _ => {
            let cut = cat_cutoff(ctx, ctx.f64("r")?, alpha)?;
            let (_, result) = teleport_cat(ctx, channel_from(ctx)?, cut)?;
            (result.avg_output, cut, result.max_lost_mass)
        }
    };
    let grid = wigner(&rho, WignerSpec::square(ctx.f64("half_width")?, ctx.usize("points")?))?;
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for v in grid.values.iter() {
        max = max.max(*v);
        min = min.min(*v);
    }
    Ok(Outcome {
        tables: vec![wigner_table("wigner", &grid)],
        summary: summary(&[
            ("wigner_min", num(min)),
            ("wigner_max", num(max)),
            ("integral", num(grid.integral())),
            ("trace", num(rho.trace())),
        ]),
        n_max: Some(cut.n_max()),
        lost_mass: lost,
    })
}
