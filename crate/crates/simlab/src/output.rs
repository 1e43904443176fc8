use std::io::Write;

use serde::Serialize;

use crate::ablation::{AblationTable, CorruptionRow};
use crate::error::Result;
use crate::run::RunResult;

#[derive(Serialize)]
struct CurveRecord {
    run: usize,
    seed: u64,
    step: u64,
    tau: f64,
}

/// One row per checkpoint: `run,seed,step,tau`.
pub fn write_curves_csv<W: Write>(runs: &[RunResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (run, result) in runs.iter().enumerate() {
        for p in &result.curve {
            out.serialize(CurveRecord { run, seed: result.seed, step: p.step, tau: p.tau })?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ArmRecord<'a> {
    hypothesis: String,
    arm: &'a str,
    mean_tau: f64,
    std_tau: f64,
    runs: usize,
    mean_human_queries: f64,
    mean_auto_queries: f64,
}

pub fn write_ablation_csv<W: Write>(table: &AblationTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for arm in &table.arms {
        out.serialize(ArmRecord {
            hypothesis: table.hypothesis.to_string(),
            arm: &arm.label,
            mean_tau: arm.mean_tau,
            std_tau: arm.std_tau,
            runs: arm.taus.len(),
            mean_human_queries: arm.mean_human_queries,
            mean_auto_queries: arm.mean_auto_queries,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CorruptionRecord {
    fraction: f64,
    mean_prior_tau: f64,
    mean_tau: f64,
    std_tau: f64,
    degradation: f64,
}

pub fn write_corruption_csv<W: Write>(rows: &[CorruptionRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(CorruptionRecord {
            fraction: r.fraction,
            mean_prior_tau: r.mean_prior_tau,
            mean_tau: r.mean_tau,
            std_tau: r.std_tau,
            degradation: r.degradation,
        })?;
    }
    out.flush()?;
    Ok(())
}
