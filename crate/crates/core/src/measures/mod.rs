//! Distances to separable and product states, two-rebit entanglement of
//! formation, Schmidt-coefficient distances and the linear score bound.

mod harness;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use rqlab_sdp::{
    solve_interior_point, BlockKind, Constraint, Residuals, SdpError, SdpProblem, SdpSolution, Sense, Status,
};
use serde::Serialize;
use thiserror::Error;

use crate::qmat::consts::yy;
use crate::qmat::random::{real_state, seeded};
use crate::qmat::{eigh, trace_norm, DensityMatrix, Field, Operator, QmatError, RealMatrix};

pub use harness::{monotonicity_harness, trace_distance_dpi, FreeOp, HarnessReport, Measure};

#[derive(Debug, Error)]
pub enum MeasuresError {
    #[error("expected a real two-rebit state (field real, dims [2, 2]); got field {field:?}, dims {dims:?}")]
    NotTwoRebit { field: Field, dims: Vec<usize> },
    #[error("expected a bipartite pure state: {0}")]
    NotPure(String),
    #[error("separability SDP ended with status {status:?} (residuals {residuals:?})")]
    Solver { status: Status, residuals: Residuals },
    #[error("linear bound inputs: {0}")]
    BadInputs(String),
    #[error("linear bound denominator B_all_sup - B_all_inf is zero")]
    ZeroDenominator,
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Qmat(#[from] QmatError),
}

fn real_two_rebit(rho: &DensityMatrix) -> Result<&RealMatrix, MeasuresError> {
    match rho.op() {
        Operator::Real(m) if rho.dims() == [2, 2] => Ok(m),
        _ => Err(MeasuresError::NotTwoRebit {
            field: rho.field(),
            dims: rho.dims().to_vec(),
        }),
    }
}

/// Adds coefficient `c` on the full-matrix entry `(k, l)` of a symmetric block.
fn add_full(con: &mut Constraint, block: usize, k: usize, l: usize, c: f64) {
    con.add(block, k, l, if k == l { c } else { 0.5 * c });
}

/// `min 1/4 (tr M + tr N)` over `[[M, rho - sigma], [rho - sigma, N]] >= 0`,
/// which equals `1/2 ||rho - sigma||_1` at the optimum. `sigma` is the image
/// of a PSD variable block `V` (unit trace) under `coef`: entry `(i, j)` of
/// sigma is `sum c V_kl` over `coef(i, j) = [(k, l, c)]`.
fn trace_distance_problem(
    rho: &RealMatrix,
    vsize: usize,
    coef: impl Fn(usize, usize) -> Vec<(usize, usize, f64)>,
    extra: impl FnOnce(&mut SdpProblem, usize),
) -> SdpProblem {
    let d = rho.nrows();
    let mut p = SdpProblem::new(Sense::Min);
    let s = p.add_block("MN", 2 * d, BlockKind::Psd);
    let v = p.add_block("sigma", vsize, BlockKind::Psd);
    for i in 0..2 * d {
        p.add_objective(s, i, i, 0.25);
    }
    for i in 0..d {
        for j in 0..d {
            let mut c = Constraint::eq(rho[(i, j)]);
            add_full(&mut c, s, i, d + j, 1.0);
            for (k, l, w) in coef(i, j) {
                add_full(&mut c, v, k, l, w);
            }
            p.add_constraint(c);
        }
    }
    let mut tr = Constraint::eq(1.0);
    for k in 0..vsize {
        tr.add(v, k, k, 1.0);
    }
    p.add_constraint(tr);
    extra(&mut p, v);
    p.canonicalize();
    p
}

/// The separability SDP for a real two-rebit state: `sigma >= 0`,
/// `tr sigma = 1`, `sigma^{T_A} = sigma`.
pub fn dsep_problem(rho: &DensityMatrix) -> Result<SdpProblem, MeasuresError> {
    let m = real_two_rebit(rho)?;
    Ok(trace_distance_problem(m, 4, |i, j| vec![(i, j, 1.0)], |p, v| {
        // (a1 b1, a2 b2) = (a2 b1, a1 b2); the map is an involution on
        // unordered pairs, so keep the orbit representative with (i, j) < (k, l).
        for i in 0..4 {
            for j in i..4 {
                let (a1, b1, a2, b2) = (i / 2, i % 2, j / 2, j % 2);
                let (k, l) = (a2 * 2 + b1, a1 * 2 + b2);
                let (k, l) = (k.min(l), k.max(l));
                if (i, j) >= (k, l) {
                    continue;
                }
                let mut c = Constraint::eq(0.0);
                add_full(&mut c, v, i, j, 1.0);
                add_full(&mut c, v, k, l, -1.0);
                p.add_constraint(c);
            }
        }
    }))
}

#[derive(Clone, Debug)]
pub struct SeparabilityResult {
    pub distance: f64,
    /// Closest PPT (hence separable) state found.
    pub witness: DensityMatrix,
    pub certificate: SdpSolution,
}

fn solve_checked(p: &SdpProblem) -> Result<SdpSolution, MeasuresError> {
    let sol = solve_interior_point(p, 1e-9)?;
    if sol.status != Status::Optimal && sol.residuals.max() > 1e-7 {
        return Err(MeasuresError::Solver {
            status: sol.status,
            residuals: sol.residuals,
        });
    }
    Ok(sol)
}

fn witness_from(block: &DMatrix<f64>, dims: Vec<usize>) -> DensityMatrix {
    let m = (block + block.transpose()) * 0.5;
    let tr = m.trace();
    let w = DensityMatrix::new_unchecked(dims, Operator::Real(m / tr)).expect("shape");
    let (w, clipped) = w.clip_to_psd();
    if clipped > 0.0 {
        log::debug!("witness clipped to PSD, truncated mass {clipped:.3e}");
    }
    w
}

/// Trace distance of a real two-rebit state to the separable set.
pub fn dsep_two_rebit(rho: &DensityMatrix) -> Result<SeparabilityResult, MeasuresError> {
    let p = dsep_problem(rho)?;
    let sol = solve_checked(&p)?;
    let witness = witness_from(&sol.primal[1], vec![2, 2]);
    Ok(SeparabilityResult {
        distance: sol.objective.clamp(0.0, 1.0),
        witness,
        certificate: sol,
    })
}

#[derive(Clone, Debug)]
pub struct DindSettings {
    pub starts: usize,
    /// Stop alternating when a round improves by less than this.
    pub step_tol: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for DindSettings {
    fn default() -> Self {
        DindSettings {
            starts: 64,
            step_tol: 1e-9,
            max_rounds: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DindBounds {
    pub lower: f64,
    pub upper: f64,
    /// Product state attaining `upper`.
    pub product: (DensityMatrix, DensityMatrix),
}

/// Best `rho_1` (if `first`) or `rho_2` with the other factor fixed.
fn product_half_step(rho: &RealMatrix, fixed: &RealMatrix, first: bool) -> Result<(f64, RealMatrix), MeasuresError> {
    let p = trace_distance_problem(
        rho,
        2,
        |i, j| {
            let (a, b, a2, b2) = (i / 2, i % 2, j / 2, j % 2);
            if first {
                vec![(a, a2, fixed[(b, b2)])]
            } else {
                vec![(b, b2, fixed[(a, a2)])]
            }
        },
        |_, _| {},
    );
    let sol = solve_checked(&p)?;
    let w = witness_from(&sol.primal[1], vec![2]);
    Ok((sol.objective, w.op().as_real().expect("real").clone()))
}

fn product_distance(rho: &RealMatrix, r1: &RealMatrix, r2: &RealMatrix) -> f64 {
    0.5 * trace_norm(&Operator::Real(rho - r1.kronecker(r2))).expect("finite")
}

fn alternating_search(
    rho: &RealMatrix,
    start: RealMatrix,
    s: &DindSettings,
) -> Result<(f64, RealMatrix, RealMatrix), MeasuresError> {
    let mut r2 = start;
    let (mut best, mut r1) = product_half_step(rho, &r2, true)?;
    for _ in 0..s.max_rounds {
        let (_, n2) = product_half_step(rho, &r1, false)?;
        let (_, n1) = product_half_step(rho, &n2, true)?;
        let v = product_distance(rho, &n1, &n2);
        let improved = best - v;
        if v < best {
            best = v;
            r1 = n1;
            r2 = n2;
        }
        if improved < s.step_tol {
            break;
        }
    }
    Ok((product_distance(rho, &r1, &r2), r1, r2))
}

/// Bracket on the distance to product states: the separable distance below,
/// an alternating product-state search (plus `I/4`) above.
pub fn dind_bounds(rho: &DensityMatrix) -> Result<DindBounds, MeasuresError> {
    dind_bounds_with(rho, &DindSettings::default())
}

pub fn dind_bounds_with(rho: &DensityMatrix, s: &DindSettings) -> Result<DindBounds, MeasuresError> {
    let lower = dsep_two_rebit(rho)?.distance;
    let (upper, r1, r2) = dind_upper(rho, s)?;
    let st = |m: RealMatrix| DensityMatrix::new_unchecked(vec![2], Operator::Real(m)).expect("shape");
    Ok(DindBounds {
        lower,
        upper,
        product: (st(r1), st(r2)),
    })
}

/// Upper bound only; see [`dind_bounds`].
pub fn dind_upper(rho: &DensityMatrix, s: &DindSettings) -> Result<(f64, RealMatrix, RealMatrix), MeasuresError> {
    let m = real_two_rebit(rho)?;
    let half = RealMatrix::identity(2, 2) * 0.5;
    let mut rng = seeded(s.seed);
    let starts: Vec<RealMatrix> = (0..s.starts)
        .map(|_| real_state(&[2], &mut rng).op().as_real().expect("real").clone())
        .collect();
    let runs: Vec<_> = starts
        .into_par_iter()
        .map(|st| alternating_search(m, st, s))
        .collect::<Result<_, _>>()?;
    let mut best = (product_distance(m, &half, &half), half.clone(), half);
    for r in runs {
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(best)
}

/// `H(q) = -q log2 q - (1 - q) log2 (1 - q)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(q: f64) -> f64 {
    let t = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    t(q) + t(1.0 - q)
}

/// Real entanglement of formation of two rebits from the `Y (x) Y` correlator.
pub fn ef_two_rebit(rho: &DensityMatrix) -> Result<f64, MeasuresError> {
    let m = real_two_rebit(rho)?;
    let c = (m * yy()).trace().abs().min(1.0);
    Ok(binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureDistance {
    /// Product of the two largest Schmidt coefficients.
    pub value: f64,
    /// True for two qubits/rebits, where `value` is the exact distance.
    pub exact: bool,
    pub schmidt: Vec<f64>,
}

/// Distance of a pure bipartite state to the separable set via its Schmidt
/// coefficients `c >= s >= ...`: returns `c s`.
pub fn pure_state_sep_distance(psi: &DensityMatrix) -> Result<PureDistance, MeasuresError> {
    let dims = psi.dims();
    if dims.len() != 2 {
        return Err(MeasuresError::NotPure(format!("dims {dims:?} are not bipartite")));
    }
    let (vals, vecs) = eigh(psi.op())?;
    let n = vals.len();
    if vals[n - 1] < 1.0 - 1e-9 {
        return Err(MeasuresError::NotPure(format!(
            "largest eigenvalue {} < 1, state is mixed",
            vals[n - 1]
        )));
    }
    let v = vecs.to_c64();
    let (d1, d2) = (dims[0], dims[1]);
    let m = nalgebra::DMatrix::from_fn(d1, d2, |i, j| v[(i * d2 + j, n - 1)]);
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let value = sv[0] * sv.get(1).copied().unwrap_or(0.0);
    Ok(PureDistance {
        value,
        exact: d1 == 2 && d2 == 2,
        schmidt: sv,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearBoundInputs {
    pub score: f64,
    pub set_sup: f64,
    pub all_sup: f64,
    pub all_inf: f64,
}

impl LinearBoundInputs {
    /// Defaults for the network functional: `7.66`, `6 sqrt 2`, `-6 sqrt 2`.
    pub fn for_score(score: f64) -> Self {
        let q = crate::bellnet::complex_optimum();
        LinearBoundInputs {
            score,
            set_sup: crate::bellnet::REAL_UPPER_BOUND,
            all_sup: q,
            all_inf: -q,
        }
    }
}

/// `max(0, (B - B_set_sup) / (B_all_sup - B_all_inf))`.
pub fn linear_bound_epsilon(i: LinearBoundInputs) -> Result<f64, MeasuresError> {
    if ![i.score, i.set_sup, i.all_sup, i.all_inf].iter().all(|v| v.is_finite()) {
        return Err(MeasuresError::BadInputs("non-finite value".into()));
    }
    let den = i.all_sup - i.all_inf;
    if den == 0.0 {
        return Err(MeasuresError::ZeroDenominator);
    }
    if !(i.all_inf <= i.set_sup && i.set_sup <= i.all_sup) {
        return Err(MeasuresError::BadInputs(format!(
            "need B_all_inf <= B_set_sup <= B_all_sup, got {} <= {} <= {}",
            i.all_inf, i.set_sup, i.all_sup
        )));
    }
    Ok(((i.score - i.set_sup) / den).max(0.0))
}

/// `100 v` rounded half-up to one decimal.
pub fn percent_one_decimal(v: f64) -> f64 {
    // The nudge absorbs representation error in values such as 0.0235.
    ((v * 1000.0) + 0.5 + 1e-9).floor() / 10.0
}

/// Random real two-rebit state from the seeded generator.
pub fn random_two_rebit(rng: &mut impl Rng) -> DensityMatrix {
    real_state(&[2, 2], rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::consts::*;

    fn rho_bar() -> DensityMatrix {
        let m = (phi_minus().op().as_real().unwrap() + psi_plus().op().as_real().unwrap()) * 0.5;
        DensityMatrix::real(vec![2, 2], m).unwrap()
    }

    #[test]
    fn dsep_of_self_tested_state_is_half() {
        let r = dsep_two_rebit(&rho_bar()).unwrap();
        assert!((r.distance - 0.5).abs() < 1e-6, "{}", r.distance);
        assert!((r.witness.trace_distance(&rho_bar()) - r.distance).abs() < 1e-6);
        let pt = r.witness.partial_transpose(0).unwrap();
        assert!(pt.op().max_abs_diff(r.witness.op()) < 1e-6);
    }

    #[test]
    fn separable_input_has_zero_distance() {
        let r = dsep_two_rebit(&basis_state(vec![2, 2], 0)).unwrap();
        assert!(r.distance.abs() < 1e-7);
    }

    #[test]
    fn ef_endpoints() {
        assert!((ef_two_rebit(&rho_bar()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ef_two_rebit(&basis_state(vec![2, 2], 0)).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_input_is_rejected() {
        assert!(matches!(
            dsep_two_rebit(&y_state(1.0).tensor(&y_state(1.0))),
            Err(MeasuresError::NotTwoRebit { .. })
        ));
    }

    #[test]
    fn percent_rounding_is_half_up() {
        assert_eq!(percent_one_decimal(0.0235), 2.4);
        assert_eq!(percent_one_decimal(0.02349), 2.3);
        assert_eq!(percent_one_decimal(0.0), 0.0);
    }
}
