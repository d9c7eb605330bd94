use anyhow::bail;
use clap::Args;
use disint_core::disintegration::{outer_measure, CoverTarget, OuterFlag, DEFAULT_COVER_BUDGET};
use disint_core::fixtures;
use disint_core::{marginal_x, FiberFunctional, LatticeSet, Radius, RatioConfig, RatioProbe, Regime};
use rand::seq::index::sample;
use serde::Serialize;

use crate::output::{cell, OutputArgs};
use crate::{positive, ScheduleArgs};

#[derive(Debug, Clone, Args)]
pub struct DiagonalArgs {
    /// Atoms of the diagonal measure.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Interior x sampled.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Half-width of the accepted band around 1/2.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_COVER_BUDGET)]
    pub cover_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Treat the atoms as exact rather than as an empirical sample.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct Sample {
    x_index: usize,
    x: f64,
    ratios: Vec<Option<f64>>,
    l_upper: f64,
    l_lower: f64,
    value: f64,
    in_band: bool,
    outer_measure: f64,
    outer_flag: OuterFlag,
    cover_sets: usize,
    cover_evaluations: usize,
}

#[derive(Debug, Serialize)]
struct Boundary {
    x: f64,
    /// `l_x` of the empty set `[0, 0)`.
    value: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    n: usize,
    regime: Regime,
    band: (f64, f64),
    radii: Vec<f64>,
    samples: Vec<Sample>,
    boundary: Boundary,
    in_band: usize,
    outer_zero: usize,
    passed: bool,
}

pub fn run(args: &DiagonalArgs) -> anyhow::Result<bool> {
    if args.n < 40 {
        bail!("--n must be at least 40");
    }
    let tol = positive("--tol", args.tol)?;
    let n = args.n;
    let zeta = fixtures::diagonal(n, !args.exact);
    let mu = marginal_x(&zeta);
    let schedule = args.schedule.schedule(zeta.carrier_x().diameter())?;
    let config = RatioConfig { tail: args.schedule.tail, ..RatioConfig::for_regime(Regime::of(&zeta)) };
    let band = (0.5 - tol, 0.5 + tol);

    // Interior: the middle 90% of the grid.
    let (lo, hi) = (n / 20, n - n / 20);
    let mut rng = fixtures::rng(args.seed);
    let mut picked: Vec<usize> =
        sample(&mut rng, hi - lo, args.samples.min(hi - lo)).into_iter().map(|t| lo + t).collect();
    picked.sort_unstable();

    let mut samples = Vec::with_capacity(picked.len());
    for i in picked {
        let x = zeta.carrier_x().point(i)[0];
        let probe = RatioProbe::at_atom(&zeta, &mu, i, &schedule, config)?;
        // The grid spacing exceeds 2^-20, so this ball meets the carrier in
        // exactly the points of [0, x).
        let target = LatticeSet::ball(0, Radius::dyadic_floor(x, 20)?);
        let est = probe.full_estimate(&target);
        let outer = outer_measure(&probe, &CoverTarget::Set(target), args.cover_budget)?;
        samples.push(Sample {
            x_index: i,
            x,
            in_band: (band.0..=band.1).contains(&est.value),
            ratios: est.ratios,
            l_upper: est.l_upper,
            l_lower: est.l_lower,
            value: est.value,
            outer_measure: outer.value,
            outer_flag: outer.flag,
            cover_sets: outer.cover.len(),
            cover_evaluations: outer.evaluations,
        });
    }
    let boundary_probe = RatioProbe::at_atom(&zeta, &mu, 0, &schedule, config)?;
    let boundary = Boundary { x: 0.0, value: boundary_probe.l_x(&LatticeSet::empty()) };

    let in_band = samples.iter().filter(|s| s.in_band).count();
    let outer_zero = samples.iter().filter(|s| s.outer_measure == 0.0).count();
    let passed = in_band * 100 >= 95 * samples.len() && outer_zero == samples.len();
    args.output.table(
        &["x_index", "x", "k", "rho", "ratio"],
        samples.iter().flat_map(|s| {
            s.ratios.iter().enumerate().map(|(k, r)| {
                vec![s.x_index.to_string(), s.x.to_string(), k.to_string(), schedule.radius(k).to_string(), cell(*r)]
            })
        }),
    )?;
    let report = Report {
        n,
        regime: Regime::of(&zeta),
        band,
        radii: schedule.radii().to_vec(),
        samples,
        boundary,
        in_band,
        outer_zero,
        passed,
    };
    args.output.report(&report)?;
    Ok(passed)
}
