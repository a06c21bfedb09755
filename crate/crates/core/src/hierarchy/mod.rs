//! Moment-matrix relaxation bounding the Bell score of real strategies whose
//! Alice-Charlie state (after Bob's outcome is summed) is within trace
//! distance `eps` of a separable state.
//!
//! Moment matrices are indexed by pairs (Alice word, Charlie word). Words are
//! products of the projectors `A_x = A_{1|x}` and `C_z = C_{1|z}`; only
//! `X^2 = X` is used to reduce them. The entry at `((a1, c1), (a2, c2))`
//! stands for `tr((rev(a2) a1 (x) rev(c2) c1) rho)`.
//!
//! Every equality class of entries is a single scalar variable `y_k`, so the
//! problem is the linear matrix inequality `F0 + sum_k y_k F_k >= 0`. It is
//! handed to the SDP layer as the dual of `min <F0, X> s.t. <-F_k, X> = c_k`,
//! whose primal objective is then an upper bound on the score.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellnet::{coefficients, idx, Behavior, LEN, NB, NX, NZ};
use rqlab_sdp::{
    sdpa::write_sdpa_file, solve_interior_point_with, solve_splitting_with, BlockKind, Constraint, IpmSettings,
    Residuals, SdpError, SdpProblem, Sense, SplittingSettings, Status,
};

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("level {0} is not supported here (allowed: {1})")]
    Level(usize, &'static str),
    #[error("epsilon {0} outside [0, 1]")]
    Epsilon(f64),
    #[error("pinned behavior has a negative entry {0:.3e}")]
    NegativePin(f64),
    #[error("solver stopped with {status:?} (max residual {:.3e})", residuals.max())]
    Solver { status: Status, residuals: Residuals },
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PartyLabel {
    Alice,
    Charlie,
}

impl PartyLabel {
    fn letters(self) -> u8 {
        match self {
            PartyLabel::Alice => NX as u8,
            PartyLabel::Charlie => NZ as u8,
        }
    }
}

/// Removes immediate repetitions (`X X = X`).
pub fn reduce(word: &[u8]) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

/// Words without immediate repetitions up to a degree, sorted by length then
/// lexicographically; position 0 is the empty word.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    pub party: PartyLabel,
    /// `A_{1|1}` .. or `C_{1|1}` ..; letter `k` (1-based) is `alphabet[k - 1]`.
    pub alphabet: Vec<String>,
    pub words: Vec<Vec<u8>>,
    pub index: HashMap<Vec<u8>, usize>,
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn label(&self, w: &[u8]) -> String {
        if w.is_empty() {
            return "1".into();
        }
        w.iter().map(|&l| self.alphabet[l as usize - 1].as_str()).collect::<Vec<_>>().join(" ")
    }
}

pub fn build_basis(party: PartyLabel, level: usize) -> Result<MonomialBasis, HierarchyError> {
    if !(1..=3).contains(&level) {
        return Err(HierarchyError::Level(level, "1, 2 or 3"));
    }
    let n = party.letters();
    let prefix = match party {
        PartyLabel::Alice => "A",
        PartyLabel::Charlie => "C",
    };
    let alphabet = (1..=n).map(|k| format!("{prefix}_{{1|{k}}}")).collect();
    let mut words = vec![Vec::new()];
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &layer {
            for l in 1..=n {
                if w.last() != Some(&l) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(MonomialBasis {
        party,
        alphabet,
        words,
        index,
    })
}

/// `c + sum coef * y_var`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Affine {
    pub c: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { c, terms: Vec::new() }
    }

    pub fn var(k: usize) -> Self {
        Affine {
            c: 0.0,
            terms: vec![(k, 1.0)],
        }
    }

    pub fn add_scaled(&mut self, o: &Affine, s: f64) {
        self.c += s * o.c;
        for &(k, v) in &o.terms {
            match self.terms.iter_mut().find(|t| t.0 == k) {
                Some(t) => t.1 += s * v,
                None => self.terms.push((k, s * v)),
            }
        }
        self.terms.retain(|t| t.1 != 0.0);
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.c + self.terms.iter().map(|&(k, v)| v * y[k]).sum::<f64>()
    }
}

/// The seven moment matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Gamma {
    /// `Gamma(tau^b)`.
    Tau(usize),
    Sigma,
    M,
    N,
}

impl Gamma {
    pub const ALL: [Gamma; 7] = [Gamma::Tau(0), Gamma::Tau(1), Gamma::Tau(2), Gamma::Tau(3), Gamma::Sigma, Gamma::M, Gamma::N];

    fn slot(self) -> usize {
        match self {
            Gamma::Tau(b) => b,
            Gamma::Sigma => 4,
            Gamma::M => 5,
            Gamma::N => 6,
        }
    }
}

/// One equality class of moment entries.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentClass {
    pub gamma: Gamma,
    /// Canonical (Alice word, Charlie word).
    pub key: (Vec<u8>, Vec<u8>),
    pub value: Affine,
    /// Number of upper-triangle entries in the class.
    pub entries: usize,
}

/// What the problem optimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Maximize the Bell score subject to the trace budget `4 eps`.
    Bound,
    /// Behavior pinned; minimize `(Gamma(M)_11 + Gamma(N)_11) / 4`, the
    /// smallest `eps` for which the pinned behavior is feasible.
    Feasibility,
}

#[derive(Clone, Debug)]
pub struct MomentProblem {
    pub level: usize,
    pub epsilon: f64,
    pub mode: Mode,
    pub alice: MonomialBasis,
    pub charlie: MonomialBasis,
    /// `|alice| * |charlie|`.
    pub dim: usize,
    pub classes: Vec<MomentClass>,
    /// Class id of every entry of each moment matrix, row-major `dim x dim`.
    pub class_of: Vec<Vec<u32>>,
    pub num_vars: usize,
    /// `P(a, b, c | x, z)` in terms of the variables, indexed like [`Behavior`].
    pub p_map: Vec<Affine>,
    pub objective: Affine,
}

struct WordAlgebra {
    /// `prod[i][j]` = id of `reduce(rev(w_j) w_i)`.
    prod: Vec<Vec<u32>>,
    /// id of the reversed word.
    rev: Vec<u32>,
}

impl WordAlgebra {
    fn new(b: &MonomialBasis) -> Self {
        let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut words: Vec<Vec<u8>> = Vec::new();
        let mut intern = |w: Vec<u8>, words: &mut Vec<Vec<u8>>| -> u32 {
            let n = ids.len() as u32;
            *ids.entry(w.clone()).or_insert_with(|| {
                words.push(w);
                n
            })
        };
        let n = b.len();
        let mut prod = vec![vec![0u32; n]; n];
        for (i, wi) in b.words.iter().enumerate() {
            for (j, wj) in b.words.iter().enumerate() {
                let mut w: Vec<u8> = wj.iter().rev().copied().collect();
                w.extend_from_slice(wi);
                prod[i][j] = intern(reduce(&w), &mut words);
            }
        }
        let rev = (0..words.len())
            .map(|k| {
                let r: Vec<u8> = words[k].iter().rev().copied().collect();
                intern(r, &mut words)
            })
            .collect::<Vec<_>>();
        WordAlgebra { prod, rev }
    }
}

/// Words for a word-pair id, rebuilt for reporting.
fn word_of(b: &MonomialBasis, i: usize, j: usize) -> Vec<u8> {
    let mut w: Vec<u8> = b.words[j].iter().rev().copied().collect();
    w.extend_from_slice(&b.words[i]);
    reduce(&w)
}

fn check_level(level: usize) -> Result<(), HierarchyError> {
    if !(1..=2).contains(&level) {
        return Err(HierarchyError::Level(level, "1 or 2"));
    }
    Ok(())
}

/// Builds the relaxation at `level` with trace budget `eps`. With
/// `fixed_behavior`, the behavior is pinned and the problem asks for the
/// smallest feasible `eps` instead (see [`Mode::Feasibility`]).
pub fn build_moment_problem(
    level: usize,
    epsilon: f64,
    fixed_behavior: Option<&Behavior>,
) -> Result<MomentProblem, HierarchyError> {
    check_level(level)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(HierarchyError::Epsilon(epsilon));
    }
    let alice = build_basis(PartyLabel::Alice, level)?;
    let charlie = build_basis(PartyLabel::Charlie, level)?;
    let (na, nc) = (alice.len(), charlie.len());
    let dim = na * nc;
    let wa = WordAlgebra::new(&alice);
    let wc = WordAlgebra::new(&charlie);

    let mut classes: Vec<MomentClass> = Vec::new();
    let mut lookup: HashMap<(usize, u32, u32), u32> = HashMap::new();
    let mut class_of = vec![vec![0u32; dim * dim]; Gamma::ALL.len()];
    for g in Gamma::ALL {
        let cells = &mut class_of[g.slot()];
        for r in 0..dim {
            let (a1, c1) = (r / nc, r % nc);
            for c in r..dim {
                let (a2, c2) = (c / nc, c % nc);
                let (pa, pc) = (wa.prod[a1][a2], wc.prod[c1][c2]);
                let key = match g {
                    // Partial transpose on A leaves the entry unchanged.
                    Gamma::Sigma => (pa.min(wa.rev[pa as usize]), pc.min(wc.rev[pc as usize])),
                    _ => (pa, pc).min((wa.rev[pa as usize], wc.rev[pc as usize])),
                };
                let id = *lookup.entry((g.slot(), key.0, key.1)).or_insert_with(|| {
                    classes.push(MomentClass {
                        gamma: g,
                        key: (word_of(&alice, a1, a2), word_of(&charlie, c1, c2)),
                        value: Affine::default(),
                        entries: 0,
                    });
                    (classes.len() - 1) as u32
                });
                classes[id as usize].entries += 1;
                cells[r * dim + c] = id;
                cells[c * dim + r] = id;
            }
        }
    }

    // Entries carrying behavior data, all in row 0 of Gamma(tau^b).
    let cell = |g: Gamma, a: usize, c: usize| class_of[g.slot()][a * nc + c] as usize;
    let pb = |b: usize| cell(Gamma::Tau(b), 0, 0);
    let pa = |b: usize, x: usize| cell(Gamma::Tau(b), 1 + x, 0);
    let pc = |b: usize, z: usize| cell(Gamma::Tau(b), 0, 1 + z);
    let pac = |b: usize, x: usize, z: usize| cell(Gamma::Tau(b), 1 + x, 1 + z);

    // Pinned values: P(b), P(a=0, b | x), P(b, c=0 | z), P(0, b, 0 | x, z).
    let mut pinned: HashMap<usize, f64> = HashMap::new();
    if let Some(p) = fixed_behavior {
        for b in 0..NB {
            pinned.insert(pb(b), p.bob_marginal(b));
            for x in 0..NX {
                pinned.insert(pa(b, x), (0..2).map(|c| p.get(x, 0, 0, b, c)).sum());
                for z in 0..NZ {
                    pinned.insert(pac(b, x, z), p.get(x, z, 0, b, 0));
                }
            }
            for z in 0..NZ {
                pinned.insert(pc(b, z), (0..2).map(|a| p.get(0, z, a, b, 0)).sum());
            }
        }
    }
    let sigma_one = cell(Gamma::Sigma, 0, 0);
    let tau_last = pb(NB - 1);
    let mut num_vars = 0;
    for (k, cl) in classes.iter_mut().enumerate() {
        cl.value = if let Some(&v) = pinned.get(&k) {
            Affine::constant(v)
        } else if k == sigma_one {
            Affine::constant(1.0)
        } else if k == tau_last && fixed_behavior.is_none() {
            // Filled in below once the other P(b) have variables.
            Affine::default()
        } else {
            num_vars += 1;
            Affine::var(num_vars - 1)
        };
    }
    if fixed_behavior.is_none() {
        let mut v = Affine::constant(1.0);
        for b in 0..NB - 1 {
            v.add_scaled(&classes[pb(b)].value.clone(), -1.0);
        }
        classes[tau_last].value = v;
    }

    let val = |k: usize| classes[k].value.clone();
    let mut p_map = vec![Affine::default(); LEN];
    for b in 0..NB {
        for x in 0..NX {
            for z in 0..NZ {
                let (p00, pa0, p0c, pbv) = (val(pac(b, x, z)), val(pa(b, x)), val(pc(b, z)), val(pb(b)));
                let mut e = p00.clone();
                p_map[idx(x, z, 0, b, 0)] = e.clone();
                e = pa0.clone();
                e.add_scaled(&p00, -1.0);
                p_map[idx(x, z, 0, b, 1)] = e;
                e = p0c.clone();
                e.add_scaled(&p00, -1.0);
                p_map[idx(x, z, 1, b, 0)] = e;
                e = pbv;
                e.add_scaled(&pa0, -1.0);
                e.add_scaled(&p0c, -1.0);
                e.add_scaled(&p00, 1.0);
                p_map[idx(x, z, 1, b, 1)] = e;
            }
        }
    }
    for e in p_map.iter() {
        if e.is_constant() && e.c < -1e-9 {
            return Err(HierarchyError::NegativePin(e.c));
        }
    }

    let (mode, objective) = match fixed_behavior {
        None => {
            let k = coefficients();
            let mut obj = Affine::default();
            for b in 0..NB {
                for x in 0..NX {
                    for z in 0..NZ {
                        if k[b][x][z] == 0.0 {
                            continue;
                        }
                        for a in 0..2 {
                            for c in 0..2 {
                                let s = if a == c { 1.0 } else { -1.0 };
                                obj.add_scaled(&p_map[idx(x, z, a, b, c)], s * k[b][x][z]);
                            }
                        }
                    }
                }
            }
            (Mode::Bound, obj)
        }
        Some(_) => {
            let mut obj = Affine::default();
            obj.add_scaled(&val(cell(Gamma::M, 0, 0)), -0.25);
            obj.add_scaled(&val(cell(Gamma::N, 0, 0)), -0.25);
            (Mode::Feasibility, obj)
        }
    };

    Ok(MomentProblem {
        level,
        epsilon,
        mode,
        alice,
        charlie,
        dim,
        classes,
        class_of,
        num_vars,
        p_map,
        objective,
    })
}

impl MomentProblem {
    fn value(&self, g: Gamma, r: usize, c: usize) -> &Affine {
        &self.classes[self.class_of[g.slot()][r * self.dim + c] as usize].value
    }

    /// `(row label, col label)` pairs for every upper-triangle entry of each class.
    pub fn equality_classes(&self) -> Vec<Vec<(Gamma, usize, usize)>> {
        let mut out = vec![Vec::new(); self.classes.len()];
        for g in Gamma::ALL {
            for r in 0..self.dim {
                for c in r..self.dim {
                    out[self.class_of[g.slot()][r * self.dim + c] as usize].push((g, r, c));
                }
            }
        }
        out
    }

    /// Human-readable `(Alice word, Charlie word)` of a row/column index.
    pub fn index_label(&self, i: usize) -> String {
        let nc = self.charlie.len();
        format!(
            "{} (x) {}",
            self.alice.label(&self.alice.words[i / nc]),
            self.charlie.label(&self.charlie.words[i % nc])
        )
    }

    /// Moment matrix `g` at the variable values `y`.
    pub fn gamma_at(&self, g: Gamma, y: &[f64]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |r, c| self.value(g, r, c).eval(y))
    }

    /// The behavior encoded by `y`.
    pub fn behavior_at(&self, y: &[f64]) -> Vec<f64> {
        self.p_map.iter().map(|e| e.eval(y)).collect()
    }

    /// Sizes of the PSD blocks: four `Gamma(tau^b)`, `Gamma(sigma)`, the
    /// `2 dim` trace-distance block.
    pub fn block_sizes(&self) -> Vec<usize> {
        vec![self.dim, self.dim, self.dim, self.dim, self.dim, 2 * self.dim]
    }

    /// Lowers the LMI to the SDP layer (see the module docs).
    pub fn to_sdp(&self) -> SdpProblem {
        let d = self.dim;
        let mut p = SdpProblem::new(Sense::Min);
        let mut rows: Vec<Constraint> = (0..self.num_vars)
            .map(|k| {
                let c = self.objective.terms.iter().find(|t| t.0 == k).map_or(0.0, |t| t.1);
                Constraint::eq(c)
            })
            .collect();
        let put = |p: &mut SdpProblem, rows: &mut Vec<Constraint>, blk: usize, i: usize, j: usize, e: &Affine| {
            if e.c != 0.0 {
                p.add_objective(blk, i, j, e.c);
            }
            for &(k, v) in &e.terms {
                rows[k].add(blk, i, j, -v);
            }
        };
        for b in 0..NB {
            let blk = p.add_block(format!("tau{b}"), d, BlockKind::Psd);
            for r in 0..d {
                for c in r..d {
                    put(&mut p, &mut rows, blk, r, c, self.value(Gamma::Tau(b), r, c));
                }
            }
        }
        let blk = p.add_block("sigma", d, BlockKind::Psd);
        for r in 0..d {
            for c in r..d {
                put(&mut p, &mut rows, blk, r, c, self.value(Gamma::Sigma, r, c));
            }
        }
        let blk = p.add_block("trace_distance", 2 * d, BlockKind::Psd);
        for r in 0..d {
            for c in r..d {
                put(&mut p, &mut rows, blk, r, c, self.value(Gamma::M, r, c));
                put(&mut p, &mut rows, blk, d + r, d + c, self.value(Gamma::N, r, c));
            }
            for c in 0..d {
                let mut e = self.value(Gamma::Sigma, r, c).clone();
                e.c = -e.c;
                for t in e.terms.iter_mut() {
                    t.1 = -t.1;
                }
                for b in 0..NB {
                    e.add_scaled(self.value(Gamma::Tau(b), r, c), 1.0);
                }
                put(&mut p, &mut rows, blk, r, d + c, &e);
            }
        }
        let free: Vec<&Affine> = self.p_map.iter().filter(|e| !e.is_constant()).collect();
        let extra = usize::from(self.mode == Mode::Bound);
        if !free.is_empty() || extra > 0 {
            let blk = p.add_block("linear", free.len() + extra, BlockKind::Diagonal);
            for (i, e) in free.iter().enumerate() {
                put(&mut p, &mut rows, blk, i, i, e);
            }
            if extra > 0 {
                let mut e = Affine::constant(4.0 * self.epsilon);
                e.add_scaled(self.value(Gamma::M, 0, 0), -1.0);
                e.add_scaled(self.value(Gamma::N, 0, 0), -1.0);
                put(&mut p, &mut rows, blk, free.len(), free.len(), &e);
            }
        }
        for r in rows {
            p.add_constraint(r);
        }
        p.canonicalize();
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    Interior,
    Splitting,
    Export(PathBuf),
}

impl Backend {
    fn name(&self) -> &'static str {
        match self {
            Backend::Interior => "interior",
            Backend::Splitting => "splitting",
            Backend::Export(_) => "export",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub level: usize,
    pub eps: f64,
    pub mode: Mode,
    /// Upper bound on the score, or in feasibility mode the smallest feasible
    /// `eps`. `None` for export.
    pub bound: Option<f64>,
    pub backend: String,
    pub residuals: Option<Residuals>,
    pub status: Option<Status>,
    pub iterations: Option<usize>,
    /// Variable values (moment classes), when solved.
    #[serde(skip)]
    pub y: Vec<f64>,
    pub path: Option<String>,
}

/// Accepted residual for a non-`Optimal` iterate.
const ACCEPT: f64 = 1e-5;

/// Solver knobs; `None` keeps the backend default.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: Option<usize>,
    /// Interior-point cap on the sum of block sides.
    pub cap: Option<usize>,
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions {
            tol,
            max_iters: None,
            cap: None,
        }
    }
}

pub fn solve_hierarchy(mp: &MomentProblem, backend: &Backend, tol: f64) -> Result<BoundReport, HierarchyError> {
    solve_hierarchy_with(mp, backend, &SolveOptions::with_tol(tol))
}

pub fn solve_hierarchy_with(
    mp: &MomentProblem,
    backend: &Backend,
    opts: &SolveOptions,
) -> Result<BoundReport, HierarchyError> {
    let sdp = mp.to_sdp();
    let mut report = BoundReport {
        level: mp.level,
        eps: mp.epsilon,
        mode: mp.mode,
        bound: None,
        backend: backend.name().into(),
        residuals: None,
        status: None,
        iterations: None,
        y: Vec::new(),
        path: None,
    };
    let sol = match backend {
        Backend::Export(path) => {
            write_sdpa_file(&sdp, path)?;
            report.path = Some(path.display().to_string());
            return Ok(report);
        }
        Backend::Interior => {
            let d = IpmSettings::default();
            let s = IpmSettings {
                tol: opts.tol,
                max_iters: opts.max_iters.unwrap_or(d.max_iters),
                cap: opts.cap.unwrap_or(d.cap),
                ..d
            };
            solve_interior_point_with(&sdp, &s)?
        }
        Backend::Splitting => {
            let d = SplittingSettings::default();
            let s = SplittingSettings {
                tol: opts.tol,
                max_iters: opts.max_iters.unwrap_or(d.max_iters),
                ..d
            };
            solve_splitting_with(&sdp, &s)?
        }
    };
    if sol.status != Status::Optimal && sol.residuals.max() > ACCEPT {
        return Err(HierarchyError::Solver {
            status: sol.status,
            residuals: sol.residuals,
        });
    }
    let raw = mp.objective.c + sol.objective;
    report.bound = Some(match mp.mode {
        Mode::Bound => raw,
        Mode::Feasibility => -raw,
    });
    report.residuals = Some(sol.residuals);
    report.status = Some(sol.status);
    report.iterations = Some(sol.iterations);
    report.y = sol.dual;
    Ok(report)
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_collapses_runs() {
        assert_eq!(reduce(&[1, 1, 2, 2, 2, 1]), vec![1, 2, 1]);
        assert_eq!(reduce(&[]), Vec::<u8>::new());
    }

    #[test]
    fn basis_sizes() {
        let s = |p, n| build_basis(p, n).unwrap().len();
        assert_eq!(s(PartyLabel::Alice, 1), 4);
        assert_eq!(s(PartyLabel::Alice, 2), 10);
        assert_eq!(s(PartyLabel::Charlie, 1), 7);
        assert_eq!(s(PartyLabel::Charlie, 2), 37);
        assert_eq!(s(PartyLabel::Alice, 3), 22);
        assert!(build_basis(PartyLabel::Alice, 4).is_err());
        let b = build_basis(PartyLabel::Alice, 1).unwrap();
        assert_eq!(b.label(&b.words[2]), "A_{1|2}");
    }

    #[test]
    fn budget_row_appears_once() {
        let mp = build_moment_problem(1, 0.1, None).unwrap();
        let sdp = mp.to_sdp();
        let lin = sdp.blocks.iter().find(|b| b.name == "linear").unwrap();
        assert_eq!(lin.size, LEN + 1);
    }
}
