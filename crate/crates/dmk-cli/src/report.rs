//! Diagnostics CSV, run summaries, and convergence-rate fitting.
//!
//! The CSV header is fixed; floats carry 17 significant digits so reruns of
//! the same configuration produce byte-identical files. The summary repeats
//! the final Lyapunov value with the same formatting as the CSV, so the two
//! agree textually as well as numerically.

use std::fmt::Write as _;
use std::path::Path;

use dmk_core::diagnostics::DiagnosticsRecord;

use crate::{io_err, CliError};

pub const CSV_HEADER: &str =
    "step,time,dt,var,lyapunov,energy,mass_term,mu_integral,err,cg_iters,mu_min,mu_max,support_fraction";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_text(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 256);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let err = r.err.map(float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            float(r.time),
            float(r.dt),
            float(r.var),
            float(r.lyapunov),
            float(r.energy),
            float(r.mass_term),
            float(r.mu_integral),
            err,
            r.cg_iterations,
            float(r.mu_min),
            float(r.mu_max),
            float(r.support_fraction),
        );
    }
    out
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    std::fs::write(path, csv_text(records)).map_err(io_err(path))
}

/// What one refinement level produced.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub level: usize,
    pub coarse_triangles: usize,
    pub fine_nodes: usize,
    /// Longest coarse-mesh edge.
    pub h: f64,
    pub wall_seconds: f64,
    /// The level's results, or the error that aborted it.
    pub outcome: Result<LevelResult, String>,
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub steps: usize,
    pub converged: bool,
    pub var: f64,
    pub lyapunov: f64,
    pub err: Option<f64>,
    pub support_fraction: f64,
    pub branch_point: Option<[f64; 2]>,
}

/// Least-squares slope of `ln err` against `ln h` over `(h, err)` pairs;
/// the observed convergence rate. `None` with fewer than two usable points.
pub fn least_squares_rate(points: &[(f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(h, e)| h > 0.0 && e > 0.0)
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let xm = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = usable.iter().map(|&(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = usable.iter().map(|&(x, _)| (x - xm) * (x - xm)).sum();
    Some(num / den)
}

pub fn summary_text(
    scenario: &str,
    levels: &[LevelOutcome],
    err_rate: Option<f64>,
    resolved_config_toml: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {scenario}");
    let _ = writeln!(out, "levels: {}", levels.len());
    for l in levels {
        let _ = writeln!(out);
        let _ = writeln!(out, "[level {}]", l.level);
        let _ = writeln!(out, "coarse_triangles: {}", l.coarse_triangles);
        let _ = writeln!(out, "fine_nodes: {}", l.fine_nodes);
        let _ = writeln!(out, "mesh_size_h: {}", float(l.h));
        match &l.outcome {
            Ok(r) => {
                let _ = writeln!(out, "status: ok");
                let _ = writeln!(out, "steps: {}", r.steps);
                let _ = writeln!(out, "converged: {}", r.converged);
                let _ = writeln!(out, "var: {}", float(r.var));
                let _ = writeln!(out, "lyapunov: {}", float(r.lyapunov));
                match r.err {
                    Some(e) => {
                        let _ = writeln!(out, "err: {}", float(e));
                    }
                    None => {
                        let _ = writeln!(out, "err: n/a");
                    }
                }
                let _ = writeln!(out, "support_fraction: {}", float(r.support_fraction));
                match r.branch_point {
                    Some([x, y]) => {
                        let _ = writeln!(out, "branch_point: ({}, {})", float(x), float(y));
                    }
                    None => {
                        let _ = writeln!(out, "branch_point: none");
                    }
                }
            }
            Err(msg) => {
                let _ = writeln!(out, "status: failed: {msg}");
            }
        }
        let _ = writeln!(out, "wall_seconds: {:.3}", l.wall_seconds);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[rates]");
    match err_rate {
        Some(r) => {
            let _ = writeln!(out, "err_rate_least_squares: {r:.4}");
        }
        None => {
            let _ = writeln!(out, "err_rate_least_squares: n/a");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[branch_extractor]");
    let _ = writeln!(out, "strip_height: 2h");
    let _ = writeln!(out, "min_cluster_separation: 4h");
    let _ = writeln!(out);
    let _ = writeln!(out, "[resolved_config]");
    for line in resolved_config_toml.lines() {
        let _ = writeln!(out, "  {line}");
    }
    out
}

pub fn write_summary(
    path: &Path,
    scenario: &str,
    levels: &[LevelOutcome],
    err_rate: Option<f64>,
    resolved_config_toml: &str,
) -> Result<(), CliError> {
    std::fs::write(path, summary_text(scenario, levels, err_rate, resolved_config_toml))
        .map_err(io_err(path))
}
