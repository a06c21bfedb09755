//! Dense real and complex matrices with multipartite bookkeeping.
//!
//! Complex matrices are stored as a pair of real matrices `(re, im)`. Every
//! multipartite operation here (partial trace, partial transpose, subsystem
//! permutation) is real-linear, so it is implemented once on real matrices and
//! applied to both parts.

mod multi;
pub mod random;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use multi::{apply_local_left, offsets, partial_trace_mat, partial_transpose_mat, permute_mat};

pub type RealMatrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmatError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("field mismatch: {0:?} vs {1:?}")]
    FieldMismatch(Field, Field),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    NotNormalized(f64),
    #[error("minimum eigenvalue {0:.3e} is below -1e-9")]
    NotPsd(f64),
    #[error("subsystem {index} out of range for {count} subsystems")]
    BadSubsystem { index: usize, count: usize },
    #[error("empty keep set; use the trace instead")]
    EmptyKeep,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("Kraus operators are not trace non-increasing (excess {0:.3e})")]
    NotTraceNonIncreasing(f64),
    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("invalid JSON: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    pub re: RealMatrix,
    pub im: RealMatrix,
}

impl ComplexMatrix {
    pub fn new(re: RealMatrix, im: RealMatrix) -> Result<Self, QmatError> {
        if re.shape() != im.shape() {
            return Err(QmatError::Shape(format!(
                "re is {:?}, im is {:?}",
                re.shape(),
                im.shape()
            )));
        }
        Ok(ComplexMatrix { re, im })
    }

    pub fn from_real(re: RealMatrix) -> Self {
        let im = RealMatrix::zeros(re.nrows(), re.ncols());
        ComplexMatrix { re, im }
    }

    pub fn zeros(r: usize, c: usize) -> Self {
        Self::from_real(RealMatrix::zeros(r, c))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real(RealMatrix::identity(n, n))
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    pub fn transpose(&self) -> Self {
        ComplexMatrix {
            re: self.re.transpose(),
            im: self.im.transpose(),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn mul(&self, o: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn add(&self, o: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    pub fn sub(&self, o: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            re: &self.re * s,
            im: &self.im * s,
        }
    }

    /// Multiplies by the complex scalar `s`.
    pub fn scale_c(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            re: &self.re * s.re - &self.im * s.im,
            im: &self.re * s.im + &self.im * s.re,
        }
    }

    pub fn kron(&self, o: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            re: self.re.kronecker(&o.re) - self.im.kronecker(&o.im),
            im: self.re.kronecker(&o.im) + self.im.kronecker(&o.re),
        }
    }

    pub fn trace(&self) -> Complex64 {
        Complex64::new(self.re.trace(), self.im.trace())
    }

    /// Applies a real-linear map to both parts.
    pub fn map_parts(&self, f: impl Fn(&RealMatrix) -> RealMatrix) -> ComplexMatrix {
        ComplexMatrix {
            re: f(&self.re),
            im: f(&self.im),
        }
    }

    pub fn to_c64(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }

    pub fn from_c64(m: &DMatrix<Complex64>) -> Self {
        ComplexMatrix {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    pub fn max_abs_diff(&self, o: &ComplexMatrix) -> f64 {
        max_abs(&(&self.re - &o.re)).max(max_abs(&(&self.im - &o.im)))
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        max_abs(&(&self.re - self.re.transpose())).max(max_abs(&(&self.im + self.im.transpose())))
    }
}

pub(crate) fn max_abs(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// A matrix over either field.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Real(RealMatrix),
    Complex(ComplexMatrix),
}

impl Operator {
    pub fn field(&self) -> Field {
        match self {
            Operator::Real(_) => Field::Real,
            Operator::Complex(_) => Field::Complex,
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Operator::Real(m) => m.nrows(),
            Operator::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Operator::Real(m) => m.ncols(),
            Operator::Complex(m) => m.ncols(),
        }
    }

    pub fn identity(n: usize, field: Field) -> Self {
        match field {
            Field::Real => Operator::Real(RealMatrix::identity(n, n)),
            Field::Complex => Operator::Complex(ComplexMatrix::identity(n)),
        }
    }

    pub fn zeros(r: usize, c: usize, field: Field) -> Self {
        match field {
            Field::Real => Operator::Real(RealMatrix::zeros(r, c)),
            Field::Complex => Operator::Complex(ComplexMatrix::zeros(r, c)),
        }
    }

    pub fn as_real(&self) -> Option<&RealMatrix> {
        match self {
            Operator::Real(m) => Some(m),
            Operator::Complex(_) => None,
        }
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        match self {
            Operator::Real(m) => ComplexMatrix::from_real(m.clone()),
            Operator::Complex(m) => m.clone(),
        }
    }

    /// Real part and (possibly zero) imaginary part.
    pub fn parts(&self) -> (RealMatrix, RealMatrix) {
        let c = self.to_complex();
        (c.re, c.im)
    }

    pub fn to_c64(&self) -> DMatrix<Complex64> {
        self.to_complex().to_c64()
    }

    /// Applies a real-linear map, preserving the field.
    pub fn map_linear(&self, f: impl Fn(&RealMatrix) -> RealMatrix) -> Operator {
        match self {
            Operator::Real(m) => Operator::Real(f(m)),
            Operator::Complex(m) => Operator::Complex(m.map_parts(f)),
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Real(m) => Operator::Real(m.transpose()),
            Operator::Complex(m) => Operator::Complex(m.adjoint()),
        }
    }

    pub fn mul(&self, o: &Operator) -> Operator {
        match (self, o) {
            (Operator::Real(a), Operator::Real(b)) => Operator::Real(a * b),
            _ => Operator::Complex(self.to_complex().mul(&o.to_complex())),
        }
    }

    pub fn add(&self, o: &Operator) -> Operator {
        match (self, o) {
            (Operator::Real(a), Operator::Real(b)) => Operator::Real(a + b),
            _ => Operator::Complex(self.to_complex().add(&o.to_complex())),
        }
    }

    pub fn sub(&self, o: &Operator) -> Operator {
        match (self, o) {
            (Operator::Real(a), Operator::Real(b)) => Operator::Real(a - b),
            _ => Operator::Complex(self.to_complex().sub(&o.to_complex())),
        }
    }

    pub fn scale(&self, s: f64) -> Operator {
        self.map_linear(|m| m * s)
    }

    /// Kronecker product; a real factor is promoted when the other is complex.
    pub fn tensor(&self, o: &Operator) -> Operator {
        match (self, o) {
            (Operator::Real(a), Operator::Real(b)) => Operator::Real(a.kronecker(b)),
            _ => Operator::Complex(self.to_complex().kron(&o.to_complex())),
        }
    }

    /// Kronecker product that refuses to mix fields.
    pub fn tensor_same_field(&self, o: &Operator) -> Result<Operator, QmatError> {
        if self.field() != o.field() {
            return Err(QmatError::FieldMismatch(self.field(), o.field()));
        }
        Ok(self.tensor(o))
    }

    /// `tr(self * o)`, real part.
    pub fn trace_prod_re(&self, o: &Operator) -> f64 {
        let (a, b) = self.parts();
        let (c, d) = o.parts();
        // tr(XY) = sum_ij X_ij Y_ji
        a.component_mul(&c.transpose()).sum() - b.component_mul(&d.transpose()).sum()
    }

    pub fn trace_re(&self) -> f64 {
        match self {
            Operator::Real(m) => m.trace(),
            Operator::Complex(m) => m.re.trace(),
        }
    }

    pub fn max_abs_diff(&self, o: &Operator) -> f64 {
        if self.nrows() != o.nrows() || self.ncols() != o.ncols() {
            return f64::INFINITY;
        }
        self.to_complex().max_abs_diff(&o.to_complex())
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.to_complex().hermiticity_error()
    }

    pub fn is_finite(&self) -> bool {
        let (a, b) = self.parts();
        a.iter().chain(b.iter()).all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        let (a, b) = self.parts();
        max_abs(&a).max(max_abs(&b))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let (a, b) = self.parts();
        (a.norm_squared() + b.norm_squared()).sqrt()
    }

    /// Drops the imaginary part if it is exactly zero.
    pub fn demote_if_real(self) -> Operator {
        match self {
            Operator::Complex(m) if m.im.iter().all(|v| *v == 0.0) => Operator::Real(m.re),
            o => o,
        }
    }
}

/// `(op (x) I) m` with `op` acting on `sites` of a matrix with subsystem `dims`.
pub fn apply_local(op: &Operator, m: &Operator, dims: &[usize], sites: &[usize]) -> Operator {
    match (op, m) {
        (Operator::Real(a), Operator::Real(b)) => Operator::Real(apply_local_left(a, b, dims, sites)),
        (Operator::Real(a), Operator::Complex(c)) => {
            Operator::Complex(c.map_parts(|p| apply_local_left(a, p, dims, sites)))
        }
        _ => {
            let (a, b) = op.parts();
            let (c, d) = m.parts();
            let f = |x: &RealMatrix, y: &RealMatrix| apply_local_left(x, y, dims, sites);
            Operator::Complex(ComplexMatrix {
                re: f(&a, &c) - f(&b, &d),
                im: f(&a, &d) + f(&b, &c),
            })
        }
    }
}

/// `op m op^dagger` with `op` acting on `sites`.
pub fn conjugate_local(op: &Operator, m: &Operator, dims: &[usize], sites: &[usize]) -> Operator {
    let left = apply_local(op, m, dims, sites);
    apply_local(op, &left.adjoint(), dims, sites).adjoint()
}

/// Eigendecomposition of a symmetric or Hermitian matrix: eigenvalues in
/// ascending order and orthonormal eigenvectors as columns.
pub fn eigh(m: &Operator) -> Result<(DVector<f64>, Operator), QmatError> {
    if m.nrows() != m.ncols() {
        return Err(QmatError::Shape("eigh needs a square matrix".into()));
    }
    if !m.is_finite() {
        return Err(QmatError::NonFinite);
    }
    let herr = m.hermiticity_error();
    if herr > 1e-8 * m.max_abs().max(1.0) {
        return Err(QmatError::NotHermitian(herr));
    }
    let n = m.nrows();
    match m {
        Operator::Real(a) => {
            let e = SymmetricEigen::new(symmetrized(a));
            let order = ascending(&e.eigenvalues);
            let vals = DVector::from_iterator(n, order.iter().map(|&k| e.eigenvalues[k]));
            let vecs = RealMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
            Ok((vals, Operator::Real(vecs)))
        }
        Operator::Complex(c) => {
            let h = c.add(&c.adjoint()).scale(0.5).to_c64();
            let e = SymmetricEigen::new(h);
            let order = ascending(&e.eigenvalues);
            let vals = DVector::from_iterator(n, order.iter().map(|&k| e.eigenvalues[k]));
            let vecs = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
            Ok((vals, Operator::Complex(ComplexMatrix::from_c64(&vecs))))
        }
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &Operator) -> Result<DVector<f64>, QmatError> {
    Ok(eigh(m)?.0)
}

fn symmetrized(a: &RealMatrix) -> RealMatrix {
    (a + a.transpose()) * 0.5
}

fn ascending(v: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// Sum of singular values.
pub fn trace_norm(m: &Operator) -> Result<f64, QmatError> {
    if !m.is_finite() {
        return Err(QmatError::NonFinite);
    }
    if m.nrows() != m.ncols() {
        return Err(QmatError::Shape("trace norm needs a square matrix".into()));
    }
    if m.hermiticity_error() <= 1e-12 * m.max_abs().max(1.0) {
        return Ok(eigvalsh(m)?.iter().map(|v| v.abs()).sum());
    }
    Ok(match m {
        Operator::Real(a) => a.clone().svd(false, false).singular_values.sum(),
        Operator::Complex(c) => c.to_c64().svd(false, false).singular_values.sum(),
    })
}

/// Reconstructs `V diag(f(λ)) V†` from an eigendecomposition.
pub fn spectral_map(vals: &DVector<f64>, vecs: &Operator, f: impl Fn(f64) -> f64) -> Operator {
    let scaled_cols = |m: &RealMatrix| {
        let mut s = m.clone();
        for (j, &l) in vals.iter().enumerate() {
            s.column_mut(j).scale_mut(f(l));
        }
        s
    };
    match vecs {
        Operator::Real(v) => Operator::Real(scaled_cols(v) * v.transpose()),
        Operator::Complex(v) => {
            let s = ComplexMatrix {
                re: scaled_cols(&v.re),
                im: scaled_cols(&v.im),
            };
            Operator::Complex(s.mul(&v.adjoint()))
        }
    }
}

/// Multipartite density matrix with explicit subsystem dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    op: Operator,
}

impl DensityMatrix {
    /// Validates shape, Hermiticity (1e-10), unit trace (1e-10) and
    /// positivity (minimum eigenvalue >= -1e-9).
    pub fn new(dims: Vec<usize>, op: Operator) -> Result<Self, QmatError> {
        let rho = Self::new_unchecked(dims, op)?;
        let herr = rho.op.hermiticity_error();
        if herr > 1e-10 {
            return Err(QmatError::NotHermitian(herr));
        }
        let tr = rho.op.trace_re();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(QmatError::NotNormalized(tr));
        }
        let min = eigvalsh(&rho.op)?[0];
        if min < -1e-9 {
            return Err(QmatError::NotPsd(min));
        }
        Ok(rho)
    }

    /// Checks only the shape against `dims`.
    pub fn new_unchecked(dims: Vec<usize>, op: Operator) -> Result<Self, QmatError> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || op.nrows() != d || op.ncols() != d {
            return Err(QmatError::Shape(format!(
                "dims {dims:?} need a {d}x{d} matrix, got {}x{}",
                op.nrows(),
                op.ncols()
            )));
        }
        if !op.is_finite() {
            return Err(QmatError::NonFinite);
        }
        Ok(DensityMatrix { dims, op })
    }

    pub fn real(dims: Vec<usize>, m: RealMatrix) -> Result<Self, QmatError> {
        Self::new(dims, Operator::Real(m))
    }

    pub fn complex(dims: Vec<usize>, m: ComplexMatrix) -> Result<Self, QmatError> {
        Self::new(dims, Operator::Complex(m))
    }

    /// `|v><v|` for a normalized real vector.
    pub fn pure_real(dims: Vec<usize>, v: &DVector<f64>) -> Result<Self, QmatError> {
        let v = v / v.norm();
        Self::new(dims, Operator::Real(&v * v.transpose()))
    }

    /// `|v><v|` for a complex vector given by its parts.
    pub fn pure_complex(dims: Vec<usize>, re: &DVector<f64>, im: &DVector<f64>) -> Result<Self, QmatError> {
        let n = (re.norm_squared() + im.norm_squared()).sqrt();
        let (a, b) = (re / n, im / n);
        let m = ComplexMatrix {
            re: &a * a.transpose() + &b * b.transpose(),
            im: &b * a.transpose() - &a * b.transpose(),
        };
        Self::new(dims, Operator::Complex(m))
    }

    pub fn maximally_mixed(dims: Vec<usize>, field: Field) -> Self {
        let d: usize = dims.iter().product();
        let op = Operator::identity(d, field).scale(1.0 / d as f64);
        DensityMatrix { dims, op }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    pub fn field(&self) -> Field {
        self.op.field()
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn tensor(&self, o: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&o.dims);
        DensityMatrix {
            dims,
            op: self.op.tensor(&o.op),
        }
    }

    fn check_sub(&self, index: usize) -> Result<(), QmatError> {
        if index >= self.dims.len() {
            return Err(QmatError::BadSubsystem {
                index,
                count: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Reduced state on `keep` (kept in their original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, QmatError> {
        if keep.is_empty() {
            return Err(QmatError::EmptyKeep);
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        for &k in &keep {
            self.check_sub(k)?;
        }
        let dims = &self.dims;
        let op = self.op.map_linear(|m| partial_trace_mat(m, dims, &keep));
        Ok(DensityMatrix {
            dims: keep.iter().map(|&k| self.dims[k]).collect(),
            op,
        })
    }

    pub fn partial_transpose(&self, sub: usize) -> Result<DensityMatrix, QmatError> {
        self.check_sub(sub)?;
        let dims = &self.dims;
        Ok(DensityMatrix {
            dims: self.dims.clone(),
            op: self.op.map_linear(|m| partial_transpose_mat(m, dims, sub)),
        })
    }

    /// Reorders subsystems: new subsystem `k` is old subsystem `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<DensityMatrix, QmatError> {
        let mut seen = vec![false; self.dims.len()];
        if perm.len() != self.dims.len() {
            return Err(QmatError::Shape("permutation length".into()));
        }
        for &p in perm {
            self.check_sub(p)?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(QmatError::Shape("repeated subsystem in permutation".into()));
            }
        }
        let dims = &self.dims;
        Ok(DensityMatrix {
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            op: self.op.map_linear(|m| permute_mat(m, dims, perm)),
        })
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        eigvalsh(&self.op).expect("density matrices are Hermitian")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace_distance(&self, o: &DensityMatrix) -> f64 {
        0.5 * trace_norm(&self.op.sub(&o.op)).expect("finite Hermitian difference")
    }

    /// Clips negative eigenvalues and renormalizes; returns the clipped mass.
    pub fn clip_to_psd(&self) -> (DensityMatrix, f64) {
        let (vals, vecs) = eigh(&self.op).expect("Hermitian");
        let clipped: f64 = vals.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
        let op = spectral_map(&vals, &vecs, |l| l.max(0.0));
        let tr = op.trace_re();
        if clipped > 0.0 {
            log::debug!("clipped {clipped:.3e} of negative eigenvalue mass");
        }
        (
            DensityMatrix {
                dims: self.dims.clone(),
                op: op.scale(1.0 / tr),
            },
            clipped,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&StateJson::from_state(self)).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, QmatError> {
        let j: StateJson = serde_json::from_str(s).map_err(|e| QmatError::Json(e.to_string()))?;
        j.into_state()
    }
}

/// `{"field": .., "re": [[..]], "im": [[..]]?}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub field: Field,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

fn rows_of(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: &[Vec<f64>]) -> Result<RealMatrix, QmatError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err(QmatError::Json("ragged matrix rows".into()));
    }
    Ok(RealMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl OperatorJson {
    pub fn from_op(op: &Operator) -> Self {
        match op {
            Operator::Real(m) => OperatorJson {
                field: Field::Real,
                re: rows_of(m),
                im: None,
            },
            Operator::Complex(c) => OperatorJson {
                field: Field::Complex,
                re: rows_of(&c.re),
                im: Some(rows_of(&c.im)),
            },
        }
    }

    pub fn into_op(self) -> Result<Operator, QmatError> {
        let re = from_rows(&self.re)?;
        match (self.field, self.im) {
            (Field::Real, None) => Ok(Operator::Real(re)),
            (Field::Complex, Some(im)) => Ok(Operator::Complex(ComplexMatrix::new(re, from_rows(&im)?)?)),
            (Field::Real, Some(_)) => Err(QmatError::Json("'im' given for a real matrix".into())),
            (Field::Complex, None) => Err(QmatError::Json("'im' is required for a complex matrix".into())),
        }
    }
}

/// `{"dims": [..], "field": .., "re": .., "im": ..?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dims: Vec<usize>,
    #[serde(flatten)]
    pub op: OperatorJson,
}

impl StateJson {
    pub fn from_state(s: &DensityMatrix) -> Self {
        StateJson {
            dims: s.dims.clone(),
            op: OperatorJson::from_op(&s.op),
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix, QmatError> {
        DensityMatrix::new(self.dims, self.op.into_op()?)
    }
}

/// Completely positive map given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausMap {
    pub field: Field,
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    pub kraus: Vec<Operator>,
    pub trace_preserving: bool,
}

impl KrausMap {
    pub fn new(
        input_dims: Vec<usize>,
        output_dims: Vec<usize>,
        kraus: Vec<Operator>,
        trace_preserving: bool,
    ) -> Result<Self, QmatError> {
        let din: usize = input_dims.iter().product();
        let dout: usize = output_dims.iter().product();
        if kraus.is_empty() {
            return Err(QmatError::Shape("no Kraus operators".into()));
        }
        let field = if kraus.iter().all(|k| k.field() == Field::Real) {
            Field::Real
        } else {
            Field::Complex
        };
        let mut s = Operator::zeros(din, din, field);
        for k in &kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(QmatError::Shape(format!(
                    "Kraus operator is {}x{}, expected {dout}x{din}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            s = s.add(&k.adjoint().mul(k));
        }
        let excess = eigvalsh(&s)?[din - 1] - 1.0;
        if excess > 1e-9 {
            return Err(QmatError::NotTraceNonIncreasing(excess));
        }
        if trace_preserving {
            let dev = s.max_abs_diff(&Operator::identity(din, field));
            if dev > 1e-9 {
                return Err(QmatError::NotTracePreserving(dev));
            }
        }
        Ok(KrausMap {
            field,
            input_dims,
            output_dims,
            kraus,
            trace_preserving,
        })
    }

    /// `sum_k K rho K^dagger` on the whole input.
    pub fn apply_op(&self, rho: &Operator) -> Operator {
        let mut out: Option<Operator> = None;
        for k in &self.kraus {
            let t = k.mul(rho).mul(&k.adjoint());
            out = Some(match out {
                None => t,
                Some(o) => o.add(&t),
            });
        }
        out.expect("at least one Kraus operator")
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, QmatError> {
        if rho.dims != self.input_dims {
            return Err(QmatError::Shape(format!(
                "map expects dims {:?}, state has {:?}",
                self.input_dims, rho.dims
            )));
        }
        DensityMatrix::new_unchecked(self.output_dims.clone(), self.apply_op(&rho.op))
    }

    /// Applies the map to subsystem `site` of `rho` (identity elsewhere).
    pub fn apply_on(&self, rho: &DensityMatrix, site: usize) -> Result<DensityMatrix, QmatError> {
        rho.check_sub(site)?;
        if self.input_dims.len() != 1 || self.input_dims[0] != rho.dims[site] {
            return Err(QmatError::Shape("local map must act on one matching subsystem".into()));
        }
        let before: usize = rho.dims[..site].iter().product();
        let after: usize = rho.dims[site + 1..].iter().product();
        let field = self.field;
        let mut dims = rho.dims.clone();
        dims[site] = self.output_dims[0];
        let mut out: Option<Operator> = None;
        for k in &self.kraus {
            let full = Operator::identity(before, field)
                .tensor(k)
                .tensor(&Operator::identity(after, field));
            let t = full.mul(&rho.op).mul(&full.adjoint());
            out = Some(match out {
                None => t,
                Some(o) => o.add(&t),
            });
        }
        DensityMatrix::new_unchecked(dims, out.expect("nonempty"))
    }
}

/// Pauli matrices and common states.
pub mod consts {
    use super::*;

    pub fn pauli_x() -> RealMatrix {
        RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn pauli_z() -> RealMatrix {
        RealMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    /// `sigma_Y` as a complex matrix (purely imaginary).
    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix {
            re: RealMatrix::zeros(2, 2),
            im: RealMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        }
    }

    /// `J = i sigma_Y = [[0, 1], [-1, 0]]`.
    pub fn j_mat() -> RealMatrix {
        RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    /// `sigma_Y (x) sigma_Y`, which is real.
    pub fn yy() -> RealMatrix {
        RealMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0,
            ],
        )
    }

    fn bell(v: [f64; 4]) -> DensityMatrix {
        DensityMatrix::pure_real(vec![2, 2], &DVector::from_row_slice(&v)).expect("valid")
    }

    pub fn phi_plus() -> DensityMatrix {
        bell([1.0, 0.0, 0.0, 1.0])
    }

    pub fn phi_minus() -> DensityMatrix {
        bell([1.0, 0.0, 0.0, -1.0])
    }

    pub fn psi_plus() -> DensityMatrix {
        bell([0.0, 1.0, 1.0, 0.0])
    }

    pub fn psi_minus() -> DensityMatrix {
        bell([0.0, 1.0, -1.0, 0.0])
    }

    /// `(|0> + s i|1>)/sqrt 2` projector, `s = +1` or `-1`.
    pub fn y_state(s: f64) -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure_complex(
            vec![2],
            &DVector::from_row_slice(&[h, 0.0]),
            &DVector::from_row_slice(&[0.0, s * h]),
        )
        .expect("valid")
    }

    /// `|i><i|` on `dims`.
    pub fn basis_state(dims: Vec<usize>, i: usize) -> DensityMatrix {
        let d: usize = dims.iter().product();
        let mut m = RealMatrix::zeros(d, d);
        m[(i, i)] = 1.0;
        DensityMatrix::new_unchecked(dims, Operator::Real(m)).expect("shape")
    }
}

#[cfg(test)]
mod tests {
    use super::consts::*;
    use super::*;

    #[test]
    fn identity_tensor_identity() {
        let i2 = Operator::identity(2, Field::Real);
        assert_eq!(i2.tensor(&i2), Operator::identity(4, Field::Real));
    }

    #[test]
    fn y_plus_squared_by_hand() {
        // |y+><y+| = 1/2 [[1, -i], [i, 1]]; its square tensor has entries (+-1, +-i)/4.
        let y = y_state(1.0);
        let t = y.tensor(&y).into_op().to_complex();
        let expect_re = [
            [1.0, 0.0, 0.0, -1.0],
            [0.0, 1.0, 1.0, 0.0],
            [0.0, 1.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0, 1.0],
        ];
        let expect_im = [
            [0.0, -1.0, -1.0, 0.0],
            [1.0, 0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0, -1.0],
            [0.0, 1.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((t.re[(i, j)] - expect_re[i][j] / 4.0).abs() < 1e-15);
                assert!((t.im[(i, j)] - expect_im[i][j] / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn strict_tensor_rejects_mixed_fields() {
        let a = Operator::identity(2, Field::Real);
        let b = Operator::identity(2, Field::Complex);
        assert!(matches!(a.tensor_same_field(&b), Err(QmatError::FieldMismatch(..))));
        assert_eq!(a.tensor(&b).field(), Field::Complex);
    }

    #[test]
    fn eigh_sorts_and_rejects_asymmetric() {
        let d = Operator::Real(RealMatrix::from_diagonal(&DVector::from_row_slice(&[3.0, 1.0, 2.0])));
        let (v, _) = eigh(&d).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
        let a = Operator::Real(RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(matches!(eigh(&a), Err(QmatError::NotHermitian(_))));
        let (v, _) = eigh(&Operator::Real(yy())).unwrap();
        for (a, b) in v.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn density_validation() {
        let bad = Operator::Real(RealMatrix::identity(2, 2));
        assert!(matches!(DensityMatrix::new(vec![2], bad), Err(QmatError::NotNormalized(_))));
        let neg = Operator::Real(RealMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, -0.5]));
        assert!(matches!(DensityMatrix::new(vec![2], neg), Err(QmatError::NotPsd(_))));
        let shape = Operator::Real(RealMatrix::identity(3, 3) / 3.0);
        assert!(matches!(DensityMatrix::new(vec![2], shape), Err(QmatError::Shape(_))));
    }

    #[test]
    fn partial_trace_errors() {
        let r = phi_plus();
        assert_eq!(r.partial_trace(&[]), Err(QmatError::EmptyKeep));
        assert!(matches!(r.partial_trace(&[2]), Err(QmatError::BadSubsystem { .. })));
    }

    #[test]
    fn trace_norm_basics() {
        assert!((trace_norm(&Operator::identity(4, Field::Real)).unwrap() - 4.0).abs() < 1e-12);
        let nonsym = Operator::Real(RealMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]));
        assert!((trace_norm(&nonsym).unwrap() - 2.0).abs() < 1e-12);
        let nan = Operator::Real(RealMatrix::from_element(1, 1, f64::NAN));
        assert_eq!(trace_norm(&nan), Err(QmatError::NonFinite));
    }

    #[test]
    fn json_round_trip_and_im_rule() {
        let y = y_state(-1.0);
        assert_eq!(DensityMatrix::from_json(&y.to_json()).unwrap(), y);
        let r = phi_plus();
        assert!(!r.to_json().contains("\"im\""));
        assert!(DensityMatrix::from_json(r#"{"dims":[1],"field":"complex","re":[[1.0]]}"#).is_err());
    }

    #[test]
    fn kraus_map_validation() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ok = KrausMap::new(
            vec![2],
            vec![2],
            vec![
                Operator::Real(RealMatrix::identity(2, 2) * h),
                Operator::Real(pauli_x() * h),
            ],
            true,
        );
        assert!(ok.is_ok());
        let too_big = KrausMap::new(vec![2], vec![2], vec![Operator::Real(pauli_x() * 1.1)], false);
        assert!(matches!(too_big, Err(QmatError::NotTraceNonIncreasing(_))));
        let lossy = KrausMap::new(vec![2], vec![2], vec![Operator::Real(pauli_x() * 0.5)], true);
        assert!(matches!(lossy, Err(QmatError::NotTracePreserving(_))));
    }
}
