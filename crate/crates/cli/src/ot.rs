use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use disint_core::io::read_ot_instance;
use disint_core::transport::{solve_plan_with, CONJUGACY_TOL};
use disint_core::{exact_disintegration, verify_conjugacy, ConjugacyReport, Error, PricePair, TransferencePlan};
use serde::Serialize;

use crate::output::OutputArgs;
use crate::positive;

#[derive(Debug, Clone, Args)]
pub struct OtArgs {
    /// Instance file; a missing plan or missing prices are solved for.
    #[arg(long)]
    pub input: PathBuf,
    /// Tolerance of the competitive and almost-sure equality checks.
    #[arg(long, default_value_t = CONJUGACY_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Source {
    Given,
    Solved,
}

#[derive(Debug, Serialize)]
struct Report {
    plan_source: Source,
    price_source: Source,
    /// Simplex pivots, when the solver ran.
    iterations: Option<usize>,
    plan: TransferencePlan,
    prices: PricePair,
    conjugacy: Option<ConjugacyReport>,
    /// Why the prices could not be checked.
    failure: Option<String>,
    passed: bool,
}

pub fn run(args: &OtArgs) -> anyhow::Result<bool> {
    let tol = positive("--tol", args.tol)?;
    let inst = read_ot_instance(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let solved = if inst.plan.is_none() || inst.prices.is_none() {
        Some(solve_plan_with(&inst.mu, &inst.nu, &inst.matrix)?)
    } else {
        None
    };
    let iterations = solved.as_ref().map(|s| s.iterations);
    let (plan, plan_source) = match (inst.plan, &solved) {
        (Some(p), _) => (p, Source::Given),
        (None, Some(s)) => (s.plan.clone(), Source::Solved),
        (None, None) => unreachable!("solver runs when the plan is missing"),
    };
    let (prices, price_source) = match (inst.prices, solved) {
        (Some(p), _) => (p, Source::Given),
        (None, Some(s)) => (s.prices, Source::Solved),
        (None, None) => unreachable!("solver runs when prices are missing"),
    };

    let d = exact_disintegration(plan.plan());
    let (conjugacy, failure) = match verify_conjugacy(&plan, &prices, &inst.matrix, &d, tol) {
        Ok(r) => (Some(r), None),
        Err(e @ (Error::NotCompetitive { .. } | Error::NotIntegrable)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let passed = conjugacy.as_ref().is_some_and(|r| r.passed);
    if let Some(r) = &conjugacy {
        args.output.table(
            &["x", "mass", "gap"],
            r.fiber_gaps.iter().map(|g| vec![g.x.to_string(), g.mass.to_string(), g.gap.to_string()]),
        )?;
    }
    let report = Report { plan_source, price_source, iterations, plan, prices, conjugacy, failure, passed };
    args.output.report(&report)?;
    Ok(passed)
}
