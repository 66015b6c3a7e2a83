//! Cross-run comparison tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::run::RunSummary;
use crate::error::{Error, Result};

/// Metric means of one run and their values relative to the best run.
/// Normalised values are `best / value` on magnitudes, so the best run
/// scores 1 and worse runs less.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub failed: bool,
    pub cot: Option<f64>,
    pub tau_pct: f64,
    pub w_ext: f64,
    pub c_avg_err: f64,
    /// `[cot, tau_pct, w_ext, c_avg_err]`; `None` for failed runs.
    pub normalized: Option<[Option<f64>; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub failures: usize,
}

fn relative(best: f64, value: f64) -> f64 {
    if value == best {
        1.0
    } else {
        best / value
    }
}

/// Builds the comparison table. Failed runs are listed and counted but take
/// no part in the normalisation.
pub fn export_summary(runs: &[RunSummary]) -> Result<ComparisonTable> {
    if runs.is_empty() {
        return Err(Error::InvalidInput("no runs to compare".into()));
    }
    let ok: Vec<&RunSummary> = runs.iter().filter(|r| !r.failed).collect();
    let metric = |r: &RunSummary| -> [Option<f64>; 4] {
        [
            r.means.cot.map(f64::abs),
            Some(r.means.tau_pct.abs()),
            Some(r.means.w_ext.abs()),
            Some(r.means.c_avg_err.abs()),
        ]
    };
    let mut best = [None::<f64>; 4];
    for r in &ok {
        for (b, v) in best.iter_mut().zip(metric(r)) {
            if let Some(v) = v {
                *b = Some(b.map_or(v, |x| x.min(v)));
            }
        }
    }
    let rows = runs
        .iter()
        .map(|r| {
            let normalized = (!r.failed).then(|| {
                let m = metric(r);
                std::array::from_fn(|k| match (best[k], m[k]) {
                    (Some(b), Some(v)) => Some(relative(b, v)),
                    _ => None,
                })
            });
            ComparisonRow {
                name: r.name.clone(),
                failed: r.failed,
                cot: r.means.cot,
                tau_pct: r.means.tau_pct,
                w_ext: r.means.w_ext,
                c_avg_err: r.means.c_avg_err,
                normalized,
            }
        })
        .collect();
    Ok(ComparisonTable {
        rows,
        failures: runs.len() - ok.len(),
    })
}

impl ComparisonTable {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "name", "failed", "cot", "tau_pct", "w_ext", "c_avg_err", "cot_rel", "tau_pct_rel",
            "w_ext_rel", "c_avg_err_rel",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let rel = r.normalized.unwrap_or([None; 4]);
            w.write_record([
                r.name.clone(),
                r.failed.to_string(),
                opt(r.cot),
                r.tau_pct.to_string(),
                r.w_ext.to_string(),
                r.c_avg_err.to_string(),
                opt(rel[0]),
                opt(rel[1]),
                opt(rel[2]),
                opt(rel[3]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
