use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use disint_core::fixtures::{self, RandomJoint};
use disint_core::io::{FunctionSpec, MeasureFile};
use disint_core::{
    exact_disintegration, integrability_report, integrate, iterated_xy_checked, iterated_yx_checked, Error,
    IntegrabilityReport, JointMeasure, PairFunction, PairPoint,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::{cell, OutputArgs};
use crate::positive;

#[derive(Debug, Clone, Args)]
pub struct FubiniArgs {
    /// `{"measure": {..}, "function": {..}}`; a random suite runs when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Instances in the random suite.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted |iterated - joint|.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Deserialize)]
struct FubiniFile {
    measure: MeasureFile,
    function: FunctionSpec,
}

#[derive(Debug, Serialize)]
struct Instance {
    integrable: Option<bool>,
    joint: Option<f64>,
    xy: Option<f64>,
    yx: Option<f64>,
    residual: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Report {
    instances: usize,
    integrable: usize,
    non_integrable: usize,
    disagreements: usize,
    tolerance: f64,
    max_residual_xy: f64,
    max_residual_yx: f64,
    /// Full three-way report for a single input instance.
    #[serde(skip_serializing_if = "Option::is_none")]
    integrability: Option<IntegrabilityReport>,
    passed: bool,
}

struct Checked {
    instance: Instance,
    report: Option<IntegrabilityReport>,
    err_xy: f64,
    err_yx: f64,
}

fn check<F: PairFunction + ?Sized>(f: &F, zeta: &JointMeasure) -> anyhow::Result<Checked> {
    let dx = exact_disintegration(zeta);
    let dy = exact_disintegration(&zeta.transpose());
    let report = match integrability_report(f, &dx, &dy, zeta) {
        Ok(r) => r,
        Err(Error::DisintegrationInconsistent(msg)) => {
            log::warn!("{msg}");
            let instance = Instance { integrable: None, joint: None, xy: None, yx: None, residual: None };
            return Ok(Checked { instance, report: None, err_xy: 0.0, err_yx: 0.0 });
        }
        Err(e) => return Err(e.into()),
    };
    if !report.integrable {
        let instance = Instance { integrable: Some(false), joint: None, xy: None, yx: None, residual: None };
        return Ok(Checked { instance, report: Some(report), err_xy: 0.0, err_yx: 0.0 });
    }
    let joint = integrate(f, zeta)?;
    let xy = iterated_xy_checked(f, &dx, &report)?.value;
    let yx = iterated_yx_checked(f, &dy, &report)?.value;
    let (err_xy, err_yx) = ((xy - joint).abs(), (yx - joint).abs());
    let instance = Instance {
        integrable: Some(true),
        joint: Some(joint),
        xy: Some(xy),
        yx: Some(yx),
        residual: Some(err_xy.max(err_yx)),
    };
    Ok(Checked { instance, report: Some(report), err_xy, err_yx })
}

fn random_suite(args: &FubiniArgs) -> anyhow::Result<Vec<Checked>> {
    let mut rng = fixtures::rng(args.seed);
    let mut out = Vec::with_capacity(args.n);
    for t in 0..args.n {
        let zeta = fixtures::random_joint(&mut rng, RandomJoint::default())?;
        let (nx, ny) = (zeta.carrier_x().len(), zeta.carrier_y().len());
        let mut values: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(-5.0..5.0)).collect();
        // Every tenth instance is not integrable.
        if t % 10 == 0 {
            let e = zeta.entries()[rng.gen_range(0..zeta.entries().len())];
            values[e.i * ny + e.j] = f64::INFINITY;
        }
        let f = move |p: PairPoint<'_>| values[p.i * ny + p.j];
        out.push(check(&f, &zeta)?);
    }
    Ok(out)
}

pub fn run(args: &FubiniArgs) -> anyhow::Result<bool> {
    let tol = positive("--tol", args.tol)?;
    let results = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: FubiniFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let zeta = file.measure.into_joint()?;
            vec![check(&file.function.compile(), &zeta)?]
        }
        None => random_suite(args)?,
    };
    let disagreements = results.iter().filter(|c| c.instance.integrable.is_none()).count();
    let integrable = results.iter().filter(|c| c.instance.integrable == Some(true)).count();
    let max_residual_xy = results.iter().map(|c| c.err_xy).fold(0.0, f64::max);
    let max_residual_yx = results.iter().map(|c| c.err_yx).fold(0.0, f64::max);
    let passed = disagreements == 0 && max_residual_xy <= tol && max_residual_yx <= tol;
    args.output.table(
        &["instance", "integrable", "joint", "xy", "yx", "residual"],
        results.iter().enumerate().map(|(k, c)| {
            let i = &c.instance;
            vec![
                k.to_string(),
                i.integrable.map_or_else(String::new, |b| b.to_string()),
                cell(i.joint),
                cell(i.xy),
                cell(i.yx),
                cell(i.residual),
            ]
        }),
    )?;
    let single = if args.input.is_some() { results.first().and_then(|c| c.report) } else { None };
    let report = Report {
        instances: results.len(),
        integrable,
        non_integrable: results.len() - integrable - disagreements,
        disagreements,
        tolerance: tol,
        max_residual_xy,
        max_residual_yx,
        integrability: single,
        passed,
    };
    args.output.report(&report)?;
    Ok(passed)
}
