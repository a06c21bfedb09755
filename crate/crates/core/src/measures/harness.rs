//! Randomized checks that measures do not increase under free operations.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{dind_upper, dsep_two_rebit, random_two_rebit, DindSettings, MeasuresError};
use crate::qmat::random::{orthogonal, real_channel, real_state, seeded};
use crate::qmat::{DensityMatrix, Operator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Dsep,
    /// Product-state search with this many starts.
    DindUpper { starts: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreeOp {
    /// Independent random real channels (2 -> 2) on each rebit.
    LocalChannels,
    /// Keep the first rebit, replace the second by a fixed random state.
    TraceAndReplace,
    /// A random global orthogonal conjugation; not free, used as a negative control.
    GlobalOrthogonal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnessReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `after - before` seen (may be negative).
    pub max_increase: f64,
    pub worst_trial: usize,
    pub tolerance: f64,
}

/// Independent stream per trial.
pub(crate) fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn summarize(diffs: Vec<f64>, tol: f64) -> HarnessReport {
    let mut worst = (0, f64::NEG_INFINITY);
    for (k, d) in diffs.iter().enumerate() {
        if *d > worst.1 {
            worst = (k, *d);
        }
    }
    HarnessReport {
        trials: diffs.len(),
        violations: diffs.iter().filter(|d| **d > tol).count(),
        max_increase: worst.1,
        worst_trial: worst.0,
        tolerance: tol,
    }
}

fn evaluate(m: Measure, rho: &DensityMatrix, seed: u64) -> Result<f64, MeasuresError> {
    match m {
        Measure::Dsep => Ok(dsep_two_rebit(rho)?.distance),
        Measure::DindUpper { starts } => {
            let s = DindSettings {
                starts,
                seed,
                ..DindSettings::default()
            };
            Ok(dind_upper(rho, &s)?.0)
        }
    }
}

fn apply(op: FreeOp, rho: &DensityMatrix, rng: &mut impl Rng) -> Result<DensityMatrix, MeasuresError> {
    Ok(match op {
        FreeOp::LocalChannels => {
            let k1 = rng.random_range(1..=4);
            let k2 = rng.random_range(1..=4);
            let a = real_channel(2, 2, k1, rng);
            let b = real_channel(2, 2, k2, rng);
            b.apply_on(&a.apply_on(rho, 0)?, 1)?
        }
        FreeOp::TraceAndReplace => rho.partial_trace(&[0])?.tensor(&real_state(&[2], rng)),
        FreeOp::GlobalOrthogonal => {
            let o = Operator::Real(orthogonal(4, rng));
            let m = o.mul(rho.op()).mul(&o.adjoint());
            DensityMatrix::new_unchecked(vec![2, 2], m.add(&m.adjoint()).scale(0.5))?
        }
    })
}

/// Draws a random real two-rebit state per trial, applies `op` and records
/// `measure(after) - measure(before)`; increases above `1e-6` count as violations.
pub fn monotonicity_harness(
    measure: Measure,
    op: FreeOp,
    trials: usize,
    seed: u64,
) -> Result<HarnessReport, MeasuresError> {
    let diffs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let mut rng = seeded(s);
            let rho = random_two_rebit(&mut rng);
            let after = apply(op, &rho, &mut rng)?;
            Ok(evaluate(measure, &after, s)? - evaluate(measure, &rho, s)?)
        })
        .collect::<Result<_, MeasuresError>>()?;
    Ok(summarize(diffs, 1e-6))
}

/// Data processing for the trace distance: random real state pairs on a
/// 4-dimensional system through random real channels to dimension 2..=4.
/// Increases above `1e-9` count as violations.
pub fn trace_distance_dpi(trials: usize, seed: u64) -> Result<HarnessReport, MeasuresError> {
    let diffs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(trial_seed(seed, t));
            let rho = real_state(&[4], &mut rng);
            let sigma = real_state(&[4], &mut rng);
            let d_out = rng.random_range(2..=4);
            let kraus = rng.random_range(1..=4);
            let ch = real_channel(4, d_out, kraus, &mut rng);
            let before = rho.trace_distance(&sigma);
            let after = ch.apply(&rho)?.trace_distance(&ch.apply(&sigma)?);
            Ok(after - before)
        })
        .collect::<Result<_, MeasuresError>>()?;
    Ok(summarize(diffs, 1e-9))
}
