use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use disint_core::disintegration::{annulus_vanishing, caratheodory_check, AnnulusReport, DEFAULT_COVER_BUDGET};
use disint_core::fixtures::{self, FixtureRng};
use disint_core::io::{read_measure, read_pairs_csv};
use disint_core::{
    estimated_disintegration, exact_disintegration, marginal_x, marginal_y, Disintegration, EstimateConfig,
    ExceptionReason, Generator, JointMeasure, LatticeSet, Metric, ProductSet, RatioConfig, RatioProbe, Regime,
    ScaleSchedule,
};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::output::{finite, OutputArgs};
use crate::{positive, ScheduleArgs};

const RECONSTRUCTION_SETS: usize = 200;
const RECONSTRUCTION_TOL: f64 = 1e-10;
const DIAGNOSTIC_ATOMS: usize = 4;
const CARATHEODORY_POINTS: usize = 64;
const CONCENTRATION_RADIUS: f64 = 0.05;
const CONCENTRATION_MASS: f64 = 0.95;
const CONCENTRATION_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Args)]
pub struct DisintegrateArgs {
    /// Measure file: JSON, or CSV of sampled pairs when the name ends in `.csv`.
    #[arg(long)]
    pub input: PathBuf,
    /// Leading CSV columns that hold the x coordinates.
    #[arg(long, default_value_t = 1)]
    pub x_dim: usize,
    /// Metric for CSV input.
    #[arg(long, default_value = "euclidean")]
    pub metric: Metric,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Largest admissible singleton spread; 1e-6 for exact input, 0.02 for samples.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_COVER_BUDGET)]
    pub cover_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// x atoms sampled for the concentration diagnostic.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct ScheduleInfo {
    rho_base: f64,
    scales: usize,
    tail: usize,
}

#[derive(Debug, Serialize)]
struct Reconstruction {
    sets: usize,
    /// `max_C |sum_x mu(x) nu_x(C_x) - zeta(C)|` for the conditional fibers.
    exact_residual: f64,
    /// The same for the estimated fibers; bounded by the exceptional mass
    /// plus the fiber error.
    estimated_residual: f64,
    /// `max_j |sum_x mu(x) nu_x({y_j}) - nu({y_j})|` for the conditional fibers.
    marginal_y_residual: f64,
}

#[derive(Debug, Serialize)]
struct AnnulusEntry {
    x: usize,
    #[serde(flatten)]
    report: AnnulusReport,
}

#[derive(Debug, Serialize)]
struct Concentration {
    radius: f64,
    min_mass: f64,
    sampled: usize,
    concentrated: usize,
    exceptional: usize,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct Diagnostics {
    annulus: Vec<AnnulusEntry>,
    caratheodory_worst_slack: Option<f64>,
    caratheodory_violations: usize,
    concentration: Option<Concentration>,
}

#[derive(Debug, Serialize)]
struct Report {
    regime: Regime,
    schedule: ScheduleInfo,
    tolerance: f64,
    exceptional_mass: f64,
    exceptional: BTreeMap<usize, ExceptionReason>,
    fibers: BTreeMap<usize, Vec<(usize, f64)>>,
    reconstruction: Reconstruction,
    diagnostics: Diagnostics,
    passed: bool,
}

fn load(args: &DisintegrateArgs) -> anyhow::Result<JointMeasure> {
    let path = &args.input;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let zeta = if is_csv { read_pairs_csv(path, args.x_dim, args.metric) } else { read_measure(path) };
    zeta.with_context(|| format!("reading {}", path.display()))
}

/// Rectangles with few y columns, or random subsets of the support; both
/// stay cheap on large carriers.
fn random_set(rng: &mut FixtureRng, zeta: &JointMeasure) -> ProductSet {
    let (nx, ny) = (zeta.carrier_x().len(), zeta.carrier_y().len());
    if rng.gen_bool(0.5) {
        let xs: Vec<usize> = (0..nx).filter(|_| rng.gen_bool(0.5)).collect();
        let k = rng.gen_range(0..=ny.min(32));
        ProductSet::rectangle(nx, ny, xs, sample(rng, ny, k)).expect("in range")
    } else {
        let p: f64 = rng.gen();
        let pairs: Vec<(usize, usize)> =
            zeta.entries().iter().filter(|_| rng.gen_bool(p)).map(|e| (e.i, e.j)).collect();
        ProductSet::pairs(nx, ny, pairs).expect("in range")
    }
}

fn reconstruction(
    rng: &mut FixtureRng,
    zeta: &JointMeasure,
    exact: &Disintegration,
    est: &Disintegration,
) -> Reconstruction {
    let (mut exact_residual, mut estimated_residual): (f64, f64) = (0.0, 0.0);
    for _ in 0..RECONSTRUCTION_SETS {
        let c = random_set(rng, zeta);
        let truth = zeta.measure_of(&c);
        exact_residual = exact_residual.max((exact.reconstruct(&c) - truth).abs());
        estimated_residual = estimated_residual.max((est.reconstruct(&c) - truth).abs());
    }
    let nu = marginal_y(zeta);
    let marginal_y_residual =
        exact.reconstructed_marginal_y().iter().enumerate().map(|(j, v)| (v - nu.weight(j)).abs()).fold(0.0, f64::max);
    Reconstruction { sets: RECONSTRUCTION_SETS, exact_residual, estimated_residual, marginal_y_residual }
}

fn evenly_spaced(items: &[usize], k: usize) -> Vec<usize> {
    if items.len() <= k {
        return items.to_vec();
    }
    (0..k).map(|t| items[t * (items.len() - 1) / (k - 1).max(1)]).collect()
}

fn concentration(
    rng: &mut FixtureRng,
    zeta: &JointMeasure,
    est: &Disintegration,
    support: &[usize],
    samples: usize,
) -> Option<Concentration> {
    let (cx, cy) = (zeta.carrier_x(), zeta.carrier_y());
    if !zeta.is_empirical() || cx.dim() != cy.dim() || support.is_empty() {
        return None;
    }
    let picked = sample(rng, support.len(), samples.min(support.len()));
    let (mut concentrated, mut exceptional) = (0, 0);
    for t in picked.iter() {
        let i = support[t];
        let Some(f) = est.fiber(i) else {
            exceptional += 1;
            continue;
        };
        let near: f64 = f
            .atoms()
            .iter()
            .filter(|&&(j, _)| cx.metric().distance(cx.point(i), cy.point(j)) <= CONCENTRATION_RADIUS)
            .map(|&(_, w)| w)
            .sum();
        if near >= CONCENTRATION_MASS {
            concentrated += 1;
        }
    }
    let sampled = picked.len();
    Some(Concentration {
        radius: CONCENTRATION_RADIUS,
        min_mass: CONCENTRATION_MASS,
        sampled,
        concentrated,
        exceptional,
        passed: concentrated as f64 >= CONCENTRATION_FRACTION * sampled as f64,
    })
}

pub fn run(args: &DisintegrateArgs) -> anyhow::Result<bool> {
    let started = std::time::Instant::now();
    let zeta = load(args)?;
    let schedule: ScaleSchedule = args.schedule.schedule(zeta.carrier_x().diameter())?;
    let regime = Regime::of(&zeta);
    let mut config = EstimateConfig::for_joint(&zeta);
    config.ratio.tail = args.schedule.tail;
    if let Some(t) = args.tol {
        config.tolerance = positive("--tol", t)?;
    }
    let mu = marginal_x(&zeta);
    let exact = exact_disintegration(&zeta);
    let est = estimated_disintegration(&zeta, &mu, &schedule, &config)?;
    log::info!("estimated disintegration done after {:.2?}", started.elapsed());

    let mut rng = fixtures::rng(args.seed);
    let recon = reconstruction(&mut rng, &zeta, &exact, &est);
    log::info!("reconstruction audit done after {:.2?}", started.elapsed());

    let support: Vec<usize> = (0..mu.weights().len()).filter(|&i| mu.weight(i) > 0.0).collect();
    let ratio = RatioConfig { tail: args.schedule.tail, ..RatioConfig::for_regime(regime) };
    let cy = zeta.carrier_y();
    let mut annulus = Vec::new();
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for (t, i) in evenly_spaced(&support, DIAGNOSTIC_ATOMS).into_iter().enumerate() {
        let probe = RatioProbe::at_atom(&zeta, &mu, i, &schedule, ratio)?;
        for &(center, radius) in &config.annulus_probes {
            annulus.push(AnnulusEntry { x: i, report: annulus_vanishing(&probe, center, radius, &config.gammas)? });
        }
        // One split ball per atom, cycling through the probe family.
        let Some(&(center, radius)) = config.annulus_probes.get(t % config.annulus_probes.len().max(1)) else {
            continue;
        };
        let c: BTreeSet<usize> = sample(&mut rng, cy.len(), cy.len().min(CARATHEODORY_POINTS)).into_iter().collect();
        let covers = vec![vec![LatticeSet::whole(cy)]];
        let ball = Generator::open_ball(center, radius);
        let r = caratheodory_check(&probe, &c, &ball, &covers, &config.gammas, args.cover_budget)?;
        worst = worst.min(r.worst_slack);
        violations += r.violations;
    }
    log::info!("annulus and Caratheodory diagnostics done after {:.2?}", started.elapsed());
    let conc = concentration(&mut rng, &zeta, &est, &support, args.samples);

    let passed = recon.exact_residual <= RECONSTRUCTION_TOL
        && recon.marginal_y_residual <= RECONSTRUCTION_TOL
        && violations == 0
        && conc.as_ref().is_none_or(|c| c.passed);
    let report = Report {
        regime,
        schedule: ScheduleInfo { rho_base: schedule.radius(0), scales: args.schedule.scales, tail: args.schedule.tail },
        tolerance: config.tolerance,
        exceptional_mass: est.exceptional_mass(),
        exceptional: est.exceptional().clone(),
        fibers: est.fibers().map(|(i, f)| (i, f.atoms().to_vec())).collect(),
        reconstruction: recon,
        diagnostics: Diagnostics {
            annulus,
            caratheodory_worst_slack: finite(worst),
            caratheodory_violations: violations,
            concentration: conc,
        },
        passed,
    };
    args.output.report(&report)?;
    args.output.table(
        &["x", "mu", "exceptional", "fiber_atoms", "fiber_mass"],
        (0..zeta.carrier_x().len()).map(|i| {
            let f = est.fiber(i);
            vec![
                i.to_string(),
                mu.weight(i).to_string(),
                est.exceptional().contains_key(&i).to_string(),
                f.map_or(0, |f| f.atoms().len()).to_string(),
                f.map_or(0.0, |f| f.total_mass()).to_string(),
            ]
        }),
    )?;
    Ok(passed)
}
