//! Score-to-distance conversions: the linear bound and saved hierarchy runs.

use std::path::Path;

use log::debug;
use serde::Serialize;

use rqlab_core::hierarchy::{BoundReport, Mode};
use rqlab_core::measures::{linear_bound_epsilon, percent_one_decimal, LinearBoundInputs};

use crate::CliError;

/// Scores of the comparison row.
pub const TABLE1_SCORES: [f64; 8] = [7.66, 7.72, 7.78, 7.88, 8.06, 8.22, 8.37, 8.50];

/// Experimental scores the linear bound is evaluated at by default.
pub const EXPERIMENT_SCORES: [f64; 2] = [8.09, 7.83];

pub fn linear_eps(score: f64) -> Result<f64, CliError> {
    Ok(linear_bound_epsilon(LinearBoundInputs::for_score(score))?)
}

/// `(score, eps, eps in percent rounded half-up to one decimal)`.
pub fn table1_row() -> Result<Vec<(f64, f64, f64)>, CliError> {
    TABLE1_SCORES
        .iter()
        .map(|&b| {
            let e = linear_eps(b)?;
            Ok((b, e, percent_one_decimal(e)))
        })
        .collect()
}

/// Saved bound-mode reports under `dir` (`*.json`), sorted by level and eps.
/// Files that are not bound reports are skipped.
pub fn load_reports(dir: &Path) -> Result<Vec<BoundReport>, CliError> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::Input {
        path: dir.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut paths: Vec<_> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = crate::read_input(&p)?;
        match serde_json::from_str::<BoundReport>(&text) {
            Ok(r) if r.mode == Mode::Bound && r.bound.is_some() => out.push(r),
            Ok(_) => debug!("{}: not a solved bound report", p.display()),
            Err(e) => debug!("{}: skipped ({e})", p.display()),
        }
    }
    out.sort_by(|a, b| (a.level, a.eps).partial_cmp(&(b.level, b.eps)).expect("finite eps"));
    Ok(out)
}

/// What a grid of solved relaxations says about a score.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyBracket {
    pub level: usize,
    /// Largest grid eps whose bound is below the score: the distance to the
    /// separable set exceeds it.
    pub dsep_above: Option<f64>,
    /// Smallest grid eps whose bound reaches the score.
    pub consistent_from: Option<f64>,
    pub grid: Vec<(f64, f64)>,
}

pub fn brackets(reports: &[BoundReport], score: f64) -> Vec<HierarchyBracket> {
    let mut levels: Vec<usize> = reports.iter().map(|r| r.level).collect();
    levels.dedup();
    levels
        .into_iter()
        .map(|level| {
            let grid: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.level == level)
                .map(|r| (r.eps, r.bound.expect("filtered")))
                .collect();
            let dsep_above = grid.iter().filter(|g| g.1 < score).map(|g| g.0).fold(None, |m: Option<f64>, e| {
                Some(m.map_or(e, |m| m.max(e)))
            });
            let consistent_from = grid.iter().filter(|g| g.1 >= score).map(|g| g.0).fold(None, |m: Option<f64>, e| {
                Some(m.map_or(e, |m| m.min(e)))
            });
            HierarchyBracket {
                level,
                dsep_above,
                consistent_from,
                grid,
            }
        })
        .collect()
}
