//! `optimize`, `evaluate` and `gradcheck`.
//!
//! Every command that writes an output directory writes the resolved
//! configuration to `config.toml` before anything else; that file together
//! with its seed reproduces the run byte for byte.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use corridor_tilt_core::{
    bs_vat, compute_partition, finite_diff_check, performance, population_mean, rss_cdf, rss_field,
    ChannelModel, ConvergenceTrace, Error as CoreError, Population, Termination, TiltVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_with_overrides, serialize_config, ScenarioConfig};
use crate::table::{self, fmt_num, round_sig};

pub const SNAPSHOT: &str = "config.toml";

/// Reads a configuration file, applies overrides and the seed override.
pub fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut all = overrides.to_vec();
    if let Some(seed) = seed {
        all.push(format!("optimizer.seed={seed}"));
    }
    Ok(parse_with_overrides(&text, &all)?)
}

/// Performance and per-population means of one tilt vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub phi_dbm: f64,
    pub mean_ground_dbm: Option<f64>,
    pub mean_uav_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    pub evaluation: Evaluation,
    pub termination: Termination,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Full-precision optimizer trace.
    pub trace: ConvergenceTrace,
}

fn prepare_out_dir(config: &ScenarioConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(SNAPSHOT);
    fs::write(&path, serialize_config(config))
        .with_context(|| format!("writing {}", path.display()))
}

fn optional(r: corridor_tilt_core::Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CoreError::EmptyPopulation) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Optimal partition, RSS field, CDFs and tilt table for fixed tilts.
fn write_evaluation(
    model: &ChannelModel<'_>,
    tilts: &TiltVector,
    out: &Path,
) -> Result<Evaluation> {
    let partition = compute_partition(model, tilts)?;
    let phi_dbm = performance(model, &partition, tilts)?;
    let field = rss_field(model, &partition, tilts)?;
    let scenario = model.scenario();
    table::write_tilts(
        &out.join("tilts.csv"),
        scenario,
        tilts.as_slice(),
        &partition.cell_masses(model),
    )?;
    table::write_partition(
        &out.join("partition.csv"),
        scenario.grid(),
        partition.assignment(),
        &field,
    )?;
    for (population, name) in [
        (Population::Ground, "cdf_ground.csv"),
        (Population::Uav, "cdf_uav.csv"),
    ] {
        let cdf = match rss_cdf(model, &partition, tilts, population) {
            Ok(cdf) => cdf,
            Err(CoreError::EmptyPopulation) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        table::write_cdf(&out.join(name), &cdf)?;
    }
    Ok(Evaluation {
        phi_dbm,
        mean_ground_dbm: optional(population_mean(
            model,
            &partition,
            tilts,
            Population::Ground,
        ))?,
        mean_uav_dbm: optional(population_mean(model, &partition, tilts, Population::Uav))?,
    })
}

fn summary_fields(e: &Evaluation) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    vec![
        fmt_num(e.phi_dbm),
        opt(e.mean_ground_dbm),
        opt(e.mean_uav_dbm),
    ]
}

const SUMMARY_HEADER: [&str; 3] = ["phi_dbm", "mean_rss_ground_dbm", "mean_rss_uav_dbm"];

/// Runs the alternating optimizer and writes all result tables.
///
/// The reported tilts are the 9-digit values written to `tilts.csv`; the
/// partition, CDFs and final performance are computed from those values so
/// that `evaluate` on the same table reproduces them exactly.
pub fn optimize(config: &ScenarioConfig, out: &Path) -> Result<OptimizeReport> {
    prepare_out_dir(config, out)?;
    let scenario = config.build()?;
    let model = ChannelModel::with_budget(&scenario, config.cache_budget_bytes());
    let outcome = bs_vat(&model, &config.optimizer_config())?;
    let tilts = TiltVector::new(
        outcome
            .tilts
            .as_slice()
            .iter()
            .map(|&t| round_sig(t))
            .collect(),
    )?;
    let evaluation = write_evaluation(&model, &tilts, out)?;
    let trace = outcome.trace;
    table::write_convergence(&out.join("convergence.csv"), &trace)?;

    let report = OptimizeReport {
        evaluation,
        termination: trace.termination,
        outer_iterations: trace.outer_iterations(),
        inner_iterations: trace.inner_iterations(),
        trace,
    };
    let mut header = SUMMARY_HEADER.to_vec();
    header.extend(["termination", "outer_iterations", "inner_iterations"]);
    let mut summary = table::Table::create(&out.join("summary.csv"), &header)?;
    let mut row = summary_fields(&report.evaluation);
    row.extend([
        termination_label(report.termination).to_owned(),
        report.outer_iterations.to_string(),
        report.inner_iterations.to_string(),
    ]);
    summary.row(row)?;
    summary.finish()?;
    Ok(report)
}

pub fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::Threshold => "threshold",
        Termination::Cap => "cap",
    }
}

/// Evaluates fixed tilts read from a table with `station_id` and `tilt_deg`
/// columns.
pub fn evaluate(config: &ScenarioConfig, tilts_path: &Path, out: &Path) -> Result<Evaluation> {
    let scenario = config.build()?;
    let tilts = TiltVector::new(table::read_tilts(tilts_path, scenario.station_count())?)?;
    prepare_out_dir(config, out)?;
    let model = ChannelModel::with_budget(&scenario, config.cache_budget_bytes());
    let evaluation = write_evaluation(&model, &tilts, out)?;
    let mut summary = table::Table::create(&out.join("summary.csv"), &SUMMARY_HEADER)?;
    summary.row(summary_fields(&evaluation))?;
    summary.finish()?;
    Ok(evaluation)
}

/// Largest tilt magnitude drawn by `gradcheck`.
pub const GRADCHECK_TILT_RANGE_DEG: f64 = 45.0;
/// `gradcheck` passes below this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Maximum relative gradient error of each trial.
pub fn gradcheck(config: &ScenarioConfig, step_deg: f64, trials: usize) -> Result<Vec<f64>> {
    if !(step_deg > 0.0 && step_deg <= 90.0 - GRADCHECK_TILT_RANGE_DEG) {
        bail!(
            "step must lie in (0, {}] degrees",
            90.0 - GRADCHECK_TILT_RANGE_DEG
        );
    }
    let scenario = config.build()?;
    let model = ChannelModel::with_budget(&scenario, config.cache_budget_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(config.optimizer.seed);
    let range = GRADCHECK_TILT_RANGE_DEG;
    (0..trials)
        .map(|_| {
            let tilts = (0..scenario.station_count())
                .map(|_| rng.random_range(-range..=range))
                .collect();
            Ok(finite_diff_check(
                &model,
                &TiltVector::new(tilts)?,
                step_deg,
            )?)
        })
        .collect()
}
