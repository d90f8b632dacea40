//! Per-seed trace files: CSV with columns t,A,B,C,D,suboptimality,v_norm_sq,
//! UTF-8 with LF line endings, reals rendered with 17 significant decimal
//! digits so identical arithmetic yields byte-identical files. Columns a row
//! has no value for (the dual potentials of an SGD run, the update norm of
//! the t = 0 row) are left empty.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use dfsdca::PotentialSnapshot;

pub const TRACE_HEADER: &str = "t,A,B,C,D,suboptimality,v_norm_sq";

/// One trace row. `dual_err` maps to column A, `primal_err` to B, the
/// average-convex Lyapunov value to C and the each-convex one to D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub dual_err: Option<f64>,
    pub primal_err: f64,
    pub lyapunov_avg: Option<f64>,
    pub lyapunov_each: Option<f64>,
    pub suboptimality: f64,
    pub v_norm_sq: Option<f64>,
}

impl From<&PotentialSnapshot> for TraceRow {
    fn from(snap: &PotentialSnapshot) -> Self {
        Self {
            t: snap.t,
            dual_err: Some(snap.dual_err),
            primal_err: snap.primal_err,
            lyapunov_avg: Some(snap.lyapunov_avg),
            lyapunov_each: Some(snap.lyapunov_each),
            suboptimality: snap.suboptimality,
            v_norm_sq: snap.v_norm_sq,
        }
    }
}

/// 17 significant decimal digits: enough to reproduce any f64 exactly.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

pub fn render_trace(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.t,
            format_opt(row.dual_err),
            format_real(row.primal_err),
            format_opt(row.lyapunov_avg),
            format_opt(row.lyapunov_each),
            format_real(row.suboptimality),
            format_opt(row.v_norm_sq),
        ));
    }
    out
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> anyhow::Result<()> {
    fs::write(path, render_trace(rows))
        .with_context(|| format!("cannot write trace {}", path.display()))
}

pub fn read_trace(path: &Path) -> anyhow::Result<Vec<TraceRow>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read trace {}", path.display()))?;
    parse_trace(&text).with_context(|| format!("malformed trace {}", path.display()))
}

pub fn parse_trace(text: &str) -> anyhow::Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRACE_HEADER => {}
        other => bail!("expected header {TRACE_HEADER:?}, found {other:?}"),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("line {}: expected 7 fields, found {}", idx + 2, fields.len());
        }
        let real = |s: &str| -> anyhow::Result<f64> {
            s.parse()
                .map_err(|_| anyhow::anyhow!("line {}: bad real {s:?}", idx + 2))
        };
        let opt = |s: &str| -> anyhow::Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                real(s).map(Some)
            }
        };
        rows.push(TraceRow {
            t: fields[0]
                .parse()
                .map_err(|_| anyhow::anyhow!("line {}: bad iteration {:?}", idx + 2, fields[0]))?,
            dual_err: opt(fields[1])?,
            primal_err: real(fields[2])?,
            lyapunov_avg: opt(fields[3])?,
            lyapunov_each: opt(fields[4])?,
            suboptimality: real(fields[5])?,
            v_norm_sq: opt(fields[6])?,
        });
    }
    Ok(rows)
}

/// Entry-wise mean across seeds. All traces must share the snapshot grid; an
/// optional column contributes only where every seed has it.
pub fn mean_rows(per_seed: &[Vec<TraceRow>]) -> anyhow::Result<Vec<TraceRow>> {
    let Some(first) = per_seed.first() else {
        return Ok(Vec::new());
    };
    for rows in per_seed {
        if rows.len() != first.len() {
            bail!("traces disagree on row count");
        }
    }
    let count = per_seed.len() as f64;
    let mut out = Vec::with_capacity(first.len());
    for r in 0..first.len() {
        let t = first[r].t;
        for rows in per_seed {
            if rows[r].t != t {
                bail!("traces disagree on the snapshot grid at row {r}");
            }
        }
        let mean = |f: &dyn Fn(&TraceRow) -> f64| {
            let vals: Vec<f64> = per_seed.iter().map(|rows| f(&rows[r])).collect();
            dfsdca::vector::pairwise_sum(&vals) / count
        };
        let mean_opt = |f: &dyn Fn(&TraceRow) -> Option<f64>| -> Option<f64> {
            let vals: Option<Vec<f64>> = per_seed.iter().map(|rows| f(&rows[r])).collect();
            vals.map(|vals| dfsdca::vector::pairwise_sum(&vals) / count)
        };
        out.push(TraceRow {
            t,
            dual_err: mean_opt(&|row| row.dual_err),
            primal_err: mean(&|row| row.primal_err),
            lyapunov_avg: mean_opt(&|row| row.lyapunov_avg),
            lyapunov_each: mean_opt(&|row| row.lyapunov_each),
            suboptimality: mean(&|row| row.suboptimality),
            v_norm_sq: mean_opt(&|row| row.v_norm_sq),
        });
    }
    Ok(out)
}
