//! Real simulation of complex quantum models with a delocalized reference
//! frame of rebits.
//!
//! Conventions: `|y+-> = (|0> +- i|1>)/sqrt 2`, `v = (x)^n |y+>`,
//! `|R> = sqrt 2 Re v`, `|I> = -sqrt 2 Im v`. `J = [[0, 1], [-1, 0]]` on any
//! single frame rebit maps `R -> I` and `I -> -R`, so it represents `i`.
//! Frame rebits always come after the system factors.

mod network;

pub use network::{
    complex_distribution, simulate_network, simulate_network_model, simulate_real, Audit, AuditEntry,
    Distribution, FrameLink, Network, Party, RealModel, Source,
};

use nalgebra::DVector;
use thiserror::Error;

use crate::bellnet::BellError;
use crate::qmat::consts::j_mat;
use crate::qmat::{
    apply_local, conjugate_local, eigvalsh, ComplexMatrix, DensityMatrix, Field, KrausMap, Operator, QmatError,
    RealMatrix,
};

/// Largest frame accepted by [`frame_state`].
pub const MAX_FRAME: usize = 12;
/// Largest total carrier dimension.
pub const MAX_DIM: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum RealsimError {
    #[error("frame of {0} rebits requested; between 1 and {MAX_FRAME} are supported")]
    FrameSize(usize),
    #[error("carrier dimension {0} exceeds the cap of {MAX_DIM}; use fewer frame rebits or smaller systems")]
    DimCap(usize),
    #[error("input is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("site {index} out of range for {count}")]
    Site { index: usize, count: usize },
    #[error("state is not dephased; call dephase first")]
    NotDephased,
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("expected a real input, got {0:?}")]
    Field(Field),
    #[error("wiring: {0}")]
    Wiring(String),
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error(transparent)]
    Bell(#[from] BellError),
}

fn check_dim(d: usize) -> Result<(), RealsimError> {
    if d > MAX_DIM {
        return Err(RealsimError::DimCap(d));
    }
    Ok(())
}

/// The two logical frame vectors on `n` rebits.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBasis {
    pub n: usize,
    pub r: DVector<f64>,
    pub i: DVector<f64>,
}

impl FrameBasis {
    pub fn new(n: usize) -> Result<Self, RealsimError> {
        if n == 0 || n > MAX_FRAME {
            return Err(RealsimError::FrameSize(n));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // (x)^n (1, i)/sqrt 2 as (re, im).
        let mut re = DVector::from_element(1, 1.0);
        let mut im = DVector::from_element(1, 0.0);
        for _ in 0..n {
            let (a, b) = (re.clone(), im.clone());
            re = DVector::from_fn(a.len() * 2, |k, _| if k % 2 == 0 { a[k / 2] * h } else { -b[k / 2] * h });
            im = DVector::from_fn(a.len() * 2, |k, _| if k % 2 == 0 { b[k / 2] * h } else { a[k / 2] * h });
        }
        let s = std::f64::consts::SQRT_2;
        Ok(FrameBasis {
            n,
            r: re * s,
            i: im * -s,
        })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// `|R><R| + |I><I|`.
    pub fn projector(&self) -> RealMatrix {
        &self.r * self.r.transpose() + &self.i * self.i.transpose()
    }

    /// `|I><R| - |R><I|`, the logical action of `J`.
    pub fn logical_j(&self) -> RealMatrix {
        &self.i * self.r.transpose() - &self.r * self.i.transpose()
    }
}

/// `J` on frame rebit `k` of an `n`-rebit frame, as a `2^n` matrix.
pub fn j_on(n: usize, k: usize) -> RealMatrix {
    let left = RealMatrix::identity(1 << k, 1 << k);
    let right = RealMatrix::identity(1 << (n - k - 1), 1 << (n - k - 1));
    left.kronecker(&j_mat()).kronecker(&right)
}

/// `((x)^n |y+><y+| + (x)^n |y-><y-|) / 2` as a real state on `n` rebits.
pub fn frame_state(n: usize) -> Result<DensityMatrix, RealsimError> {
    let f = FrameBasis::new(n)?;
    Ok(DensityMatrix::new_unchecked(vec![2; n], Operator::Real(f.projector() * 0.5))?)
}

/// The broadcasting isometry on `(L, L')`:
/// `sum_s |y_s><y_s| (x) (|y_s><0| + |y_-s><1|)`, which is real.
pub fn broadcast_unitary() -> RealMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    RealMatrix::from_row_slice(
        4,
        4,
        &[
            h, h, 0.0, 0.0, //
            0.0, 0.0, h, -h, //
            0.0, 0.0, h, h, //
            -h, h, 0.0, 0.0,
        ],
    )
}

/// Appends a rebit in `|0>` and applies [`broadcast_unitary`] on `(site, new)`.
pub fn broadcast(rho: &DensityMatrix, site: usize) -> Result<DensityMatrix, RealsimError> {
    if site >= rho.dims().len() || rho.dims()[site] != 2 {
        return Err(RealsimError::Site {
            index: site,
            count: rho.dims().len(),
        });
    }
    check_dim(rho.dim() * 2)?;
    let mut zero = RealMatrix::zeros(2, 2);
    zero[(0, 0)] = 1.0;
    let big = rho.tensor(&DensityMatrix::new_unchecked(vec![2], Operator::Real(zero))?);
    let new = big.dims().len() - 1;
    let op = conjugate_local(&Operator::Real(broadcast_unitary()), big.op(), big.dims(), &[site, new]);
    Ok(DensityMatrix::new_unchecked(big.dims().to_vec(), op)?)
}

/// A real carrier for a complex state: system factors followed by `n` frame rebits.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedState {
    pub carrier: DensityMatrix,
    /// Number of system factors at the front of `carrier.dims()`.
    pub n_sys: usize,
    pub n: usize,
    pub dephased: bool,
}

impl LiftedState {
    pub fn sys_dims(&self) -> &[usize] {
        &self.carrier.dims()[..self.n_sys]
    }

    pub fn frame_sites(&self) -> std::ops::Range<usize> {
        self.n_sys..self.n_sys + self.n
    }

    /// `(rho + J rho J^T) / 2` with `J` on the first frame rebit.
    pub fn dephase(&self) -> LiftedState {
        let dims = self.carrier.dims();
        let j = Operator::Real(j_mat());
        let t = conjugate_local(&j, self.carrier.op(), dims, &[self.n_sys]);
        let op = self.carrier.op().add(&t).scale(0.5);
        LiftedState {
            carrier: DensityMatrix::new_unchecked(dims.to_vec(), op).expect("same shape"),
            n_sys: self.n_sys,
            n: self.n,
            dephased: true,
        }
    }

    /// Recovers the complex state: `Re = tr_L c`, `Im = -tr_L (J_1 c)`.
    pub fn decode(&self) -> Result<DensityMatrix, RealsimError> {
        let c = self.carrier.op().as_real().expect("carriers are real");
        let dims = self.carrier.dims();
        let keep: Vec<usize> = (0..self.n_sys).collect();
        let sys: Vec<usize> = self.sys_dims().to_vec();
        if keep.is_empty() {
            return Ok(DensityMatrix::new_unchecked(vec![1], Operator::Real(RealMatrix::identity(1, 1)))?);
        }
        let re = crate::qmat::partial_trace_mat(c, dims, &keep);
        let jc = crate::qmat::apply_local_left(&j_mat(), c, dims, &[self.n_sys]);
        let im = -crate::qmat::partial_trace_mat(&jc, dims, &keep);
        Ok(DensityMatrix::new_unchecked(sys, Operator::Complex(ComplexMatrix { re, im }).demote_if_real())?)
    }

    /// Broadcasts frame rebit `k` into a new frame rebit at the end.
    pub fn broadcast(&self, k: usize) -> Result<LiftedState, RealsimError> {
        if k >= self.n {
            return Err(RealsimError::Site { index: k, count: self.n });
        }
        Ok(LiftedState {
            carrier: broadcast(&self.carrier, self.n_sys + k)?,
            n_sys: self.n_sys,
            n: self.n + 1,
            dephased: self.dephased,
        })
    }

    /// Reduced state of the frame rebits.
    pub fn frame_marginal(&self) -> Result<DensityMatrix, RealsimError> {
        let keep: Vec<usize> = self.frame_sites().collect();
        Ok(self.carrier.partial_trace(&keep)?)
    }
}

fn lift_size(rho: &DensityMatrix, n: usize) -> Result<FrameBasis, RealsimError> {
    let f = FrameBasis::new(n)?;
    check_dim(rho.dim() * f.dim())?;
    let herr = rho.op().hermiticity_error();
    if herr > 1e-10 {
        return Err(RealsimError::NotHermitian(herr));
    }
    Ok(f)
}

/// `rho^Re (x) (|R><R| + |I><I|)/2 + rho^Im (x) (|I><R| - |R><I|)/2`.
pub fn lift_state(rho: &DensityMatrix, n: usize) -> Result<LiftedState, RealsimError> {
    let f = lift_size(rho, n)?;
    let (re, im) = rho.op().parts();
    let m = re.kronecker(&(f.projector() * 0.5)) + im.kronecker(&(f.logical_j() * 0.5));
    let mut dims = rho.dims().to_vec();
    dims.extend(std::iter::repeat_n(2, n));
    Ok(LiftedState {
        carrier: DensityMatrix::new_unchecked(dims, Operator::Real(m))?,
        n_sys: rho.dims().len(),
        n,
        dephased: true,
    })
}

/// `psi^Re (x) |R> + psi^Im (x) |I>` for a pure input, not dephased.
pub fn lift_pure(dims: Vec<usize>, re: &DVector<f64>, im: &DVector<f64>, n: usize) -> Result<LiftedState, RealsimError> {
    let f = FrameBasis::new(n)?;
    let d: usize = dims.iter().product();
    if re.len() != d || im.len() != d {
        return Err(QmatError::Shape(format!("vector length {} for dims {dims:?}", re.len())).into());
    }
    check_dim(d * f.dim())?;
    let norm = (re.norm_squared() + im.norm_squared()).sqrt();
    let w = (re.kronecker(&f.r) + im.kronecker(&f.i)) / norm;
    let n_sys = dims.len();
    let mut all = dims;
    all.extend(std::iter::repeat_n(2, n));
    Ok(LiftedState {
        carrier: DensityMatrix::new_unchecked(all, Operator::Real(&w * w.transpose()))?,
        n_sys,
        n,
        dephased: false,
    })
}

/// `M^Re (x) I + M^Im (x) J`, acting on the system followed by one frame rebit.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedOperator {
    pub matrix: RealMatrix,
    pub re: RealMatrix,
    pub im: RealMatrix,
}

impl LiftedOperator {
    pub fn new(m: &Operator) -> Self {
        let (re, im) = m.parts();
        let matrix = re.kronecker(&RealMatrix::identity(2, 2)) + im.kronecker(&j_mat());
        LiftedOperator { matrix, re, im }
    }

    pub fn op(&self) -> Operator {
        Operator::Real(self.matrix.clone())
    }
}

/// Checks elements are PSD and sum to the identity, both to `1e-10`.
pub fn check_povm(e: &[Operator]) -> Result<(), RealsimError> {
    let first = e.first().ok_or_else(|| RealsimError::InvalidPovm("no elements".into()))?;
    let d = first.nrows();
    let mut sum = Operator::zeros(d, d, Field::Real);
    for (k, el) in e.iter().enumerate() {
        if el.nrows() != d || el.ncols() != d {
            return Err(RealsimError::InvalidPovm(format!("element {k} has the wrong shape")));
        }
        let herr = el.hermiticity_error();
        if herr > 1e-10 {
            return Err(RealsimError::InvalidPovm(format!("element {k} is not Hermitian ({herr:.3e})")));
        }
        let min = eigvalsh(el)?[0];
        if min < -1e-10 {
            return Err(RealsimError::InvalidPovm(format!("element {k} has eigenvalue {min:.3e}")));
        }
        sum = sum.add(el);
    }
    let dev = sum.max_abs_diff(&Operator::identity(d, Field::Real));
    if dev > 1e-10 {
        return Err(RealsimError::InvalidPovm(format!("elements sum to identity only within {dev:.3e}")));
    }
    Ok(())
}

pub fn lift_povm(e: &[Operator]) -> Result<Vec<LiftedOperator>, RealsimError> {
    check_povm(e)?;
    Ok(e.iter().map(LiftedOperator::new).collect())
}

/// Outcome probabilities and normalized post-measurement states of the
/// unmeasured systems (`None` for zero-probability outcomes).
#[derive(Clone, Debug)]
pub struct SimulatedMeasurement {
    pub probs: Vec<f64>,
    pub post: Vec<Option<LiftedState>>,
}

/// Below this an outcome gets no post-measurement state.
const ZERO_PROB: f64 = 1e-14;

/// Measures system factors `sites` with the lifted POVM, using a freshly
/// broadcast copy of frame rebit `0` to host `J`.
pub fn simulate_measurement(
    s: &LiftedState,
    e: &[Operator],
    sites: &[usize],
) -> Result<SimulatedMeasurement, RealsimError> {
    simulate_measurement_from(s, e, sites, 0)
}

/// As [`simulate_measurement`], broadcasting from frame rebit `frame`.
pub fn simulate_measurement_from(
    s: &LiftedState,
    e: &[Operator],
    sites: &[usize],
    frame: usize,
) -> Result<SimulatedMeasurement, RealsimError> {
    if !s.dephased {
        return Err(RealsimError::NotDephased);
    }
    if sites.is_empty() {
        return Err(RealsimError::Wiring("no measured subsystems".into()));
    }
    for (k, &site) in sites.iter().enumerate() {
        if site >= s.n_sys || sites[..k].contains(&site) {
            return Err(RealsimError::Site {
                index: site,
                count: s.n_sys,
            });
        }
    }
    let d: usize = sites.iter().map(|&k| s.carrier.dims()[k]).product();
    if e.first().is_some_and(|x| x.nrows() != d) {
        return Err(QmatError::Shape(format!("POVM acts on dimension {}, sites have {d}", e[0].nrows())).into());
    }
    let lifted = lift_povm(e)?;
    let big = s.broadcast(frame)?;
    let dims = big.carrier.dims().to_vec();
    let fresh = dims.len() - 1;
    let mut on: Vec<usize> = sites.to_vec();
    on.push(fresh);
    let keep: Vec<usize> = (0..fresh).filter(|k| !sites.contains(k)).collect();
    let n_sys = s.n_sys - sites.len();
    let mut probs = Vec::with_capacity(e.len());
    let mut post = Vec::with_capacity(e.len());
    for l in &lifted {
        let t = apply_local(&l.op(), big.carrier.op(), &dims, &on);
        let p = t.trace_re();
        probs.push(p);
        if p <= ZERO_PROB {
            post.push(None);
            continue;
        }
        let r = t.map_linear(|m| crate::qmat::partial_trace_mat(m, &dims, &keep));
        let r = r.add(&r.adjoint()).scale(0.5 / p);
        let kd: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
        post.push(Some(LiftedState {
            carrier: DensityMatrix::new_unchecked(kd, r)?,
            n_sys,
            n: s.n,
            dephased: true,
        }));
    }
    Ok(SimulatedMeasurement { probs, post })
}

/// Choi matrix `sum_ij |i><j| (x) f(|i><j|)` of the complexification of a
/// real-linear map `f` on `d_in x d_in` real matrices. The complexified map
/// sends `X` to `f(Re X) + i f(Im X)`; on the real matrix units it agrees
/// with `f`, so the Choi matrix is real.
pub fn complexified_choi(d_in: usize, f: impl Fn(&RealMatrix) -> RealMatrix) -> RealMatrix {
    let mut blocks: Vec<Vec<RealMatrix>> = Vec::with_capacity(d_in);
    for i in 0..d_in {
        let mut row = Vec::with_capacity(d_in);
        for j in 0..d_in {
            let mut u = RealMatrix::zeros(d_in, d_in);
            u[(i, j)] = 1.0;
            row.push(f(&u));
        }
        blocks.push(row);
    }
    let d_out = blocks[0][0].nrows();
    RealMatrix::from_fn(d_in * d_out, d_in * d_out, |r, c| blocks[r / d_out][c / d_out][(r % d_out, c % d_out)])
}

/// Complexifies a real Kraus map (same Kraus operators, complex field) and
/// returns it with the minimum eigenvalue of its Choi matrix.
pub fn complexify_and_check_cp(k: &KrausMap) -> Result<(KrausMap, f64), RealsimError> {
    if k.field != Field::Real {
        return Err(RealsimError::Field(k.field));
    }
    let din: usize = k.input_dims.iter().product();
    let choi = complexified_choi(din, |u| {
        k.apply_op(&Operator::Real(u.clone())).as_real().expect("real map").clone()
    });
    let min = eigvalsh(&Operator::Real(choi))?[0];
    let kraus = k
        .kraus
        .iter()
        .map(|o| Operator::Complex(o.to_complex()))
        .collect();
    let c = KrausMap::new(k.input_dims.clone(), k.output_dims.clone(), kraus, k.trace_preserving)?;
    Ok((c, min))
}
