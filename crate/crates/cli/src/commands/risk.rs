//! `risk`: Monte Carlo detection-risk curve over a separation grid.
//!
//! For each multiplier A the test is run on paired replicates (one null
//! sample, one alternative sample) at rejection threshold
//! `threshold_factor * A * lambda`. Unless the config pins a fixed `tau`,
//! alternatives are placed on the decision boundary tau = A * lambda, so
//! the curve traces the transition from indistinguishable (small A, total
//! risk near 1) to trivially separable (large A, total risk near 0).
//!
//! With several alternative families, every family reuses the same per-A
//! replicate seeds: the null arm is then literally identical across
//! families, and the reported row keeps the family with the worst type-II
//! error, which is the risk the guarantees are stated against.
//!
//! Replicates are distributed over the worker pool by index with one
//! derived seed per index, so the CSV is byte-identical at any thread
//! count. A companion gnuplot script plots total risk against A.

use std::path::Path;

use anyhow::Context;
use sparse_detect_core::detect::{
    rate_bundle, risk_replicate, summarize_risk, AlternativeFamily, AlternativeKind, RiskEstimate,
};
use sparse_detect_core::estimator::alpha_s;
use sparse_detect_core::seed::SeedToken;

use crate::config::{CommandConfig, RiskConfig};
use crate::output::{grid_hash, write_text, Field, Table};
use crate::parallel::try_map_indexed;
use crate::{RunError, RunOutcome};

/// Output table name.
pub const FILE_NAME: &str = "risk.csv";
/// Companion plot script name.
pub const PLOT_NAME: &str = "risk.gp";

const COLUMNS: &[&str] = &["A", "type1", "type2_worst", "total", "half_width", "replicates"];

/// Parses an alternative-family name as used in configs.
pub fn alternative_kind(name: &str) -> Result<AlternativeKind, String> {
    match name {
        "prior_draws" => Ok(AlternativeKind::PriorDraws),
        "equal_spread" => Ok(AlternativeKind::EqualSpread),
        "single_spike" => Ok(AlternativeKind::SingleSpike),
        other => Err(format!(
            "unknown alternative family: {other} \
             (expected prior_draws, equal_spread, or single_spike)"
        )),
    }
}

/// One estimated point of the risk curve.
#[derive(Clone, Debug)]
pub struct RiskRow {
    pub a: f64,
    pub estimate: RiskEstimate,
}

/// Computes the full curve for a validated config.
pub fn compute_rows(
    cfg: &RiskConfig,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<RiskRow>, RunError> {
    let problem = cfg.problem().map_err(RunError::usage)?;
    let lambda = rate_bundle(&problem)
        .map_err(|e| RunError::usage(e.to_string()))?
        .lambda_eq6;
    let alpha = alpha_s(problem.s, problem.p);
    let kinds: Vec<AlternativeKind> = cfg
        .alternatives
        .iter()
        .map(|name| alternative_kind(name).map_err(RunError::usage))
        .collect::<Result<_, _>>()?;
    let master = SeedToken::from_master(seed);

    let mut rows = Vec::with_capacity(cfg.a_grid.len());
    for (i, &a) in cfg.a_grid.iter().enumerate() {
        let tau = cfg.tau.unwrap_or(a * lambda);
        let seed_a = master.derive("risk-grid", i as u64);
        let mut worst: Option<RiskEstimate> = None;
        for &kind in &kinds {
            let family = AlternativeFamily::new(kind, tau)
                .map_err(|e| RunError::usage(e.to_string()))?;
            let outcomes = try_map_indexed(pool, cfg.replicates, |r| {
                risk_replicate(
                    &problem,
                    &family,
                    a,
                    lambda,
                    alpha,
                    cfg.threshold_factor,
                    seed_a,
                    r as u64,
                )
                .with_context(|| format!("risk replicate {r} at A = {a}"))
            })?;
            let estimate = summarize_risk(&outcomes, &family);
            worst = Some(match worst {
                None => estimate,
                // The null stream is shared, so type1 agrees across
                // families; keep the family with the larger type-II error.
                Some(prev) if estimate.type2_worst > prev.type2_worst => estimate,
                Some(prev) => prev,
            });
        }
        rows.push(RiskRow { a, estimate: worst.expect("alternatives validated non-empty") });
    }
    Ok(rows)
}

fn plot_script(metadata: &str) -> String {
    format!(
        "{metadata}\
         set datafile separator \",\"\n\
         set terminal pngcairo size 900,600\n\
         set output \"risk.png\"\n\
         set logscale x 2\n\
         set xlabel \"separation multiplier A\"\n\
         set ylabel \"total risk (type I + worst type II)\"\n\
         set yrange [0:2]\n\
         set key top right\n\
         plot \"{FILE_NAME}\" every ::1 using 1:4 with linespoints lw 2 title \"total risk\", \\\n\
         \x20    \"{FILE_NAME}\" every ::1 using 1:($4 + $5) with lines dashtype 2 title \"+95% half-width\", \\\n\
         \x20    \"{FILE_NAME}\" every ::1 using 1:($4 - $5) with lines dashtype 2 title \"-95% half-width\"\n"
    )
}

/// Runs the command and writes `risk.csv` and `risk.gp` under `out`.
pub fn run(
    cfg: &RiskConfig,
    seed: u64,
    out: &Path,
    pool: &rayon::ThreadPool,
) -> Result<RunOutcome, RunError> {
    let rows = compute_rows(cfg, seed, pool)?;
    let hash = grid_hash(RiskConfig::COMMAND, &cfg.canonical_json());
    let table = Table {
        schema_version: cfg.schema_version,
        seed,
        grid_hash: hash.clone(),
        columns: COLUMNS,
        rows: rows
            .iter()
            .map(|row| {
                vec![
                    Field::Float(row.a),
                    Field::Float(row.estimate.type1),
                    Field::Float(row.estimate.type2_worst),
                    Field::Float(row.estimate.total),
                    Field::Float(row.estimate.half_width),
                    Field::UInt(row.estimate.replicates as u64),
                ]
            })
            .collect(),
    };
    table.write(out, FILE_NAME)?;
    let metadata =
        format!("# schema_version={} seed={seed} grid_hash={hash}\n", cfg.schema_version);
    write_text(out, PLOT_NAME, &plot_script(&metadata))?;
    Ok(RunOutcome::Success)
}
