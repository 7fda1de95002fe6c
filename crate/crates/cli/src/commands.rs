use anyhow::{bail, ensure, Context, Result};
use chanlab::asymptotics::{deviation, predicted_limit, SpectralAtoms};
use chanlab::channels::{
    hayden_winter_check, monte_carlo, ChannelParams, Experiment, InputSpec, OutputSide, Pairing,
};
use chanlab::linalg::haar_unitary;
use chanlab::moments::{limit_moment, moment, MomentModel, MomentRequest};
use chanlab::weingarten::{asymptotic_wg, format_rational, relative_error, WeingartenTable};
use chanlab::{rng, Exec};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::render::{self, float, numbered};
use crate::{
    ConvergenceArgs, Format, HwArgs, InputArg, InputArgs, ModelArg, MomentsArgs, Report,
    SimulateArgs,
};

fn input_spec(args: &InputArgs, n: usize, d_in: usize) -> Result<InputSpec> {
    Ok(match args.input {
        InputArg::Bell => InputSpec::Bell,
        InputArg::Dephased => InputSpec::DephasedBell,
        InputArg::Product => InputSpec::ProductState,
        InputArg::Lowrank => InputSpec::LowRank {
            rank: args
                .rank
                .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize),
        },
        InputArg::Mixed => InputSpec::MixedBell { l: args.l },
        InputArg::Generalized => {
            let m = args.m_abs.context("--input generalized needs --m-abs")?;
            InputSpec::with_overlap(m, d_in)?
        }
    })
}

#[derive(Serialize)]
struct WgEntry {
    cycle_type: String,
    exact: String,
    decimal: f64,
    asymptotic: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct WgReport {
    dimension: u64,
    degree: usize,
    convolution_identity: bool,
    entries: Vec<WgEntry>,
}

pub fn wg(n: u64, p: usize, format: Format) -> Result<Report> {
    let table = WeingartenTable::build(n, p)?;
    let identity = table.verify_convolution()?;
    let entries: Vec<WgEntry> = table
        .entries()
        .map(|(ty, v)| {
            let asymptotic = asymptotic_wg(n, &ty.representative());
            WgEntry {
                cycle_type: ty.to_string(),
                exact: format_rational(v),
                decimal: v.to_f64().unwrap_or(f64::NAN),
                asymptotic,
                relative_error: relative_error(asymptotic, v),
            }
        })
        .collect();
    let body = match format {
        Format::Json => render::json(&WgReport {
            dimension: n,
            degree: p,
            convolution_identity: identity,
            entries,
        })?,
        Format::Csv => render::csv(
            &[
                "cycle_type",
                "exact",
                "decimal",
                "asymptotic",
                "relative_error",
            ]
            .map(String::from),
            entries.iter().map(|e| {
                [
                    e.cycle_type.clone(),
                    e.exact.clone(),
                    float(e.decimal),
                    float(e.asymptotic),
                    float(e.relative_error),
                ]
            }),
        )?,
    };
    Ok(Report { body, ok: identity })
}

#[derive(Serialize)]
struct SimulateReport {
    pairing: &'static str,
    input: String,
    side: &'static str,
    n: usize,
    k: usize,
    d_in: usize,
    trials: usize,
    seed: u64,
    means: Vec<f64>,
    std_devs: Vec<f64>,
    mean_entropy: f64,
    predicted: Option<Vec<f64>>,
    deviations: Option<Vec<f64>>,
    spectra: Vec<Vec<f64>>,
    entropies: Vec<f64>,
}

pub fn simulate(args: &SimulateArgs, seed: u64, exec: Exec, format: Format) -> Result<Report> {
    let d_in = args.din.unwrap_or(args.n);
    let params = ChannelParams::new(args.n, args.k, d_in)?;
    let spec = input_spec(&args.input, args.n, d_in)?;
    let exp = Experiment::new(params, args.pairing.into(), spec, args.input.side.into());
    let mc = monte_carlo(&exp, args.trials, seed, exec)?;
    let body = match format {
        Format::Csv => {
            let width = mc.means.len();
            let header: Vec<String> = std::iter::once("trial".to_string())
                .chain(numbered("lambda", width))
                .chain(["entropy".into()])
                .collect();
            render::csv(
                &header,
                mc.trials
                    .iter()
                    .zip(&mc.entropies)
                    .enumerate()
                    .map(|(i, (t, s))| {
                        std::iter::once(i.to_string())
                            .chain(t.iter().map(|x| float(*x)))
                            .chain([float(*s)])
                    }),
            )?
        }
        Format::Json => {
            let predicted = predicted_limit(&exp)?;
            render::json(&SimulateReport {
                pairing: exp.pairing.name(),
                input: exp.input.name(),
                side: exp.side.name(),
                n: args.n,
                k: args.k,
                d_in,
                trials: args.trials,
                seed,
                deviations: predicted.as_ref().map(|a| deviation(&mc.means, a)),
                predicted: predicted.map(|a| a.expanded()),
                mean_entropy: mc.mean_entropy(),
                means: mc.means,
                std_devs: mc.std_devs,
                spectra: mc.trials,
                entropies: mc.entropies,
            })?
        }
    };
    Ok(Report { body, ok: true })
}

#[derive(Serialize)]
struct MomentRow {
    n: usize,
    d_in: usize,
    exact: f64,
    exact_rational: Option<String>,
    mc_mean: Option<f64>,
    mc_standard_error: Option<f64>,
    limit: f64,
    gap_exact_mc: Option<f64>,
    gap_exact_limit: f64,
    gap_mc_limit: Option<f64>,
    within_3se: Option<bool>,
}

#[derive(Serialize)]
struct MomentsReport {
    model: &'static str,
    k: usize,
    l: Option<usize>,
    p: usize,
    trials: usize,
    seed: u64,
    rows: Vec<MomentRow>,
}

pub fn moments(args: &MomentsArgs, seed: u64, exec: Exec, format: Format) -> Result<Report> {
    ensure!(!args.n.is_empty(), "--n needs at least one value");
    let n0 = args.n[0];
    let din0 = args.din.unwrap_or(n0);
    let mixed = matches!(
        args.model,
        ModelArg::MixedDirect | ModelArg::MixedComplementary
    );
    ensure!(
        !(mixed && args.m_abs.is_some()),
        "mixed models take no --m-abs"
    );
    let mut rows = Vec::with_capacity(args.n.len());
    for (i, &n) in args.n.iter().enumerate() {
        ensure!(i == 0 || n > args.n[i - 1], "--n must be ascending");
        ensure!(
            (n * din0).is_multiple_of(n0),
            "d_in / n ratio not representable at n = {n}"
        );
        let d_in = n * din0 / n0;
        let (mut req, pairing, spec, side) = match args.model {
            ModelArg::Conjugate => (
                MomentRequest::conjugate(n, args.k, d_in, args.p),
                Pairing::Conjugate,
                InputSpec::Bell,
                OutputSide::Complementary,
            ),
            ModelArg::Identical => (
                MomentRequest::identical(n, args.k, d_in, args.p),
                Pairing::Identical,
                InputSpec::Bell,
                OutputSide::Complementary,
            ),
            ModelArg::MixedDirect | ModelArg::MixedComplementary => {
                let side = if args.model == ModelArg::MixedDirect {
                    OutputSide::Direct
                } else {
                    OutputSide::Complementary
                };
                let spec = InputSpec::MixedBell { l: args.l };
                (
                    MomentRequest::mixed(side, n, args.k, args.l, args.p),
                    Pairing::Conjugate,
                    spec,
                    side,
                )
            }
        };
        let spec = match args.m_abs {
            Some(m) => {
                let spec = InputSpec::with_overlap(m, d_in)?;
                if let InputSpec::GeneralizedBell(a) = &spec {
                    req = req.with_input(a.clone());
                }
                spec
            }
            None => spec,
        };
        if args.allow_order_four {
            req = req.allow_order_four();
        }
        let exact = moment(&req, exec)?;
        let limit = limit_moment(&req)?;
        let estimate = if args.trials > 0 {
            let params = ChannelParams::new(n, args.k, d_in)?;
            let mc = monte_carlo(
                &Experiment::new(params, pairing, spec, side),
                args.trials,
                seed,
                exec,
            )?;
            Some(mc.moment_estimate(args.p as u32))
        } else {
            None
        };
        rows.push(MomentRow {
            n,
            d_in,
            exact: exact.value,
            exact_rational: exact.exact_string(),
            mc_mean: estimate.map(|e| e.0),
            mc_standard_error: estimate.map(|e| e.1),
            limit,
            gap_exact_mc: estimate.map(|e| (exact.value - e.0).abs()),
            gap_exact_limit: (exact.value - limit).abs(),
            gap_mc_limit: estimate.map(|e| (e.0 - limit).abs()),
            within_3se: estimate.map(|(m, se)| (exact.value - m).abs() <= 3.0 * se + 1e-10),
        });
    }
    let ok = rows.iter().all(|r| r.within_3se != Some(false));
    let model = match args.model {
        ModelArg::Conjugate => MomentModel::Conjugate,
        ModelArg::Identical => MomentModel::Identical,
        ModelArg::MixedDirect => MomentModel::MixedDirect,
        ModelArg::MixedComplementary => MomentModel::MixedComplementary,
    };
    let opt = |x: Option<f64>| x.map(float).unwrap_or_default();
    let body = match format {
        Format::Json => render::json(&MomentsReport {
            model: model.name(),
            k: args.k,
            l: mixed.then_some(args.l),
            p: args.p,
            trials: args.trials,
            seed,
            rows,
        })?,
        Format::Csv => render::csv(
            &[
                "n",
                "d_in",
                "exact",
                "exact_rational",
                "mc_mean",
                "mc_standard_error",
                "limit",
                "gap_exact_mc",
                "gap_exact_limit",
                "gap_mc_limit",
                "within_3se",
            ]
            .map(String::from),
            rows.iter().map(|r| {
                [
                    r.n.to_string(),
                    r.d_in.to_string(),
                    float(r.exact),
                    r.exact_rational.clone().unwrap_or_default(),
                    opt(r.mc_mean),
                    opt(r.mc_standard_error),
                    float(r.limit),
                    opt(r.gap_exact_mc),
                    float(r.gap_exact_limit),
                    opt(r.gap_mc_limit),
                    r.within_3se.map(|b| b.to_string()).unwrap_or_default(),
                ]
            }),
        )?,
    };
    Ok(Report { body, ok })
}

#[derive(Serialize)]
struct ConvergenceRow {
    n: usize,
    d_in: usize,
    means: Vec<f64>,
    predicted: Vec<f64>,
    max_deviation: f64,
    mean_entropy: f64,
    limit_entropy: f64,
    entropy_gap: f64,
}

#[derive(Serialize)]
struct ConvergenceReport {
    pairing: &'static str,
    input: String,
    side: &'static str,
    k: usize,
    t: f64,
    trials: usize,
    seed: u64,
    non_increasing: bool,
    rows: Vec<ConvergenceRow>,
}

pub fn convergence(
    args: &ConvergenceArgs,
    seed: u64,
    exec: Exec,
    format: Format,
) -> Result<Report> {
    ensure!(!args.n.is_empty(), "--n needs at least one value");
    ensure!(
        args.n.windows(2).all(|w| w[0] < w[1]),
        "--n must be ascending"
    );
    let t = args.t.unwrap_or(1.0 / args.k as f64);
    let pairing: Pairing = args.pairing.into();
    let mut rows = Vec::with_capacity(args.n.len());
    let mut input_name = String::new();
    for &n in &args.n {
        let exact_din = t * (n * args.k) as f64;
        let d_in = exact_din.round() as usize;
        ensure!(
            (exact_din - d_in as f64).abs() < 1e-9,
            "t n k is not an integer at n = {n}"
        );
        let params = ChannelParams::new(n, args.k, d_in)?;
        let exp = Experiment::new(
            params,
            pairing,
            input_spec(&args.input, n, d_in)?,
            args.input.side.into(),
        );
        input_name = exp.input.name();
        let Some(atoms): Option<SpectralAtoms> = predicted_limit(&exp)? else {
            bail!(
                "no limit prediction for {} pairing with {} input",
                pairing,
                exp.input.name()
            );
        };
        let mc = monte_carlo(&exp, args.trials, seed, exec)?;
        let max_deviation = deviation(&mc.means, &atoms).into_iter().fold(0.0, f64::max);
        let mean_entropy = mc.mean_entropy();
        let limit_entropy = atoms.entropy();
        rows.push(ConvergenceRow {
            n,
            d_in,
            predicted: atoms.expanded(),
            means: mc.means,
            max_deviation,
            mean_entropy,
            limit_entropy,
            entropy_gap: (mean_entropy - limit_entropy).abs(),
        });
    }
    // the first two sizes are allowed to be noisy
    let non_increasing = rows
        .windows(2)
        .skip(1)
        .all(|w| w[1].max_deviation <= w[0].max_deviation);
    let body = match format {
        Format::Json => render::json(&ConvergenceReport {
            pairing: pairing.name(),
            input: input_name,
            side: OutputSide::from(args.input.side).name(),
            k: args.k,
            t,
            trials: args.trials,
            seed,
            non_increasing,
            rows,
        })?,
        Format::Csv => {
            let width = rows.iter().map(|r| r.means.len()).max().unwrap_or(0);
            let header: Vec<String> = ["n".to_string(), "d_in".to_string()]
                .into_iter()
                .chain(numbered("lambda", width))
                .chain(
                    [
                        "max_deviation",
                        "mean_entropy",
                        "limit_entropy",
                        "entropy_gap",
                    ]
                    .map(String::from),
                )
                .collect();
            render::csv(
                &header,
                rows.iter().map(|r| {
                    let mut cells = vec![r.n.to_string(), r.d_in.to_string()];
                    cells.extend(r.means.iter().map(|x| float(*x)));
                    cells.resize(2 + width, String::new());
                    cells.extend(
                        [
                            r.max_deviation,
                            r.mean_entropy,
                            r.limit_entropy,
                            r.entropy_gap,
                        ]
                        .map(float),
                    );
                    cells
                }),
            )?
        }
    };
    Ok(Report {
        body,
        ok: non_increasing,
    })
}

#[derive(Serialize)]
struct HwTrial {
    trial: usize,
    overlap: f64,
    ok: bool,
}

#[derive(Serialize)]
struct HwReport {
    n: usize,
    k: usize,
    d_in: usize,
    seed: u64,
    bound: f64,
    pass_rate: f64,
    trials: Vec<HwTrial>,
}

pub fn hw(args: &HwArgs, seed: u64, exec: Exec, format: Format) -> Result<Report> {
    ensure!(args.trials > 0, "--trials must be positive");
    let params = ChannelParams::new(args.n, args.k, args.din.unwrap_or(args.n))?;
    let checks = exec.map_indexed(args.trials, |i| {
        let mut r = rng::stream(seed, i as u64);
        hayden_winter_check(&haar_unitary(params.total_dim(), &mut r), params)
    });
    let checks = checks.into_iter().collect::<chanlab::Result<Vec<_>>>()?;
    let bound = params.d_in as f64 / params.total_dim() as f64;
    let passed = checks.iter().filter(|c| c.ok).count();
    let pass_rate = passed as f64 / checks.len() as f64;
    let trials: Vec<HwTrial> = checks
        .iter()
        .enumerate()
        .map(|(trial, c)| HwTrial {
            trial,
            overlap: c.overlap,
            ok: c.ok,
        })
        .collect();
    let body = match format {
        Format::Json => render::json(&HwReport {
            n: params.n,
            k: params.k,
            d_in: params.d_in,
            seed,
            bound,
            pass_rate,
            trials,
        })?,
        Format::Csv => render::csv(
            &["trial", "overlap", "bound", "ok"].map(String::from),
            trials.iter().map(|t| {
                [
                    t.trial.to_string(),
                    float(t.overlap),
                    float(bound),
                    t.ok.to_string(),
                ]
            }),
        )?,
    };
    Ok(Report {
        body,
        ok: passed == checks.len(),
    })
}
