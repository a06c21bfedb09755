//! Lowering of an [`SdpProblem`] to the internal equality standard form
//!
//! ```text
//!   min <C, X>  s.t.  <A_i, X> = b_i,  X = diag(X_1, .., X_p, x_lp),  X_k PSD, x_lp >= 0
//! ```
//!
//! Diagonal blocks are concatenated into one LP vector; free blocks are split
//! into a positive and a negative part inside that vector; maximization is
//! turned into minimization by negating `C`.

use nalgebra::{DMatrix, DVector};

use crate::problem::{BlockKind, Relation, SdpProblem, SymSparse};
use crate::SdpError;

pub(crate) struct PsdBlock {
    pub n: usize,
    pub c: DMatrix<f64>,
    /// Constraint rows touching this block: (row, upper-triangle entries).
    pub rows: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

impl PsdBlock {
    /// `<A_i, X>` for every row in this block, accumulated into `out`.
    pub fn apply(&self, x: &DMatrix<f64>, out: &mut [f64]) {
        for (i, ents) in &self.rows {
            out[*i] += sym_dot(ents, x);
        }
    }

    /// `sum_i y_i A_i` restricted to this block.
    pub fn adjoint(&self, y: &[f64]) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n, self.n);
        for (i, ents) in &self.rows {
            let yi = y[*i];
            if yi == 0.0 {
                continue;
            }
            for &(p, q, v) in ents {
                s[(p, q)] += yi * v;
                if p != q {
                    s[(q, p)] += yi * v;
                }
            }
        }
        s
    }
}

pub(crate) fn sym_dot(ents: &[(usize, usize, f64)], x: &DMatrix<f64>) -> f64 {
    ents.iter()
        .map(|&(p, q, v)| if p == q { v * x[(p, q)] } else { v * (x[(p, q)] + x[(q, p)]) })
        .sum()
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Origin {
    Psd(usize),
    Lp { start: usize, n: usize },
    Free { plus: usize, minus: usize, n: usize },
}

pub(crate) struct StdForm {
    pub m: usize,
    pub psd: Vec<PsdBlock>,
    pub lp_c: DVector<f64>,
    /// For each constraint row, its LP entries `(lp index, coefficient)`.
    pub lp_rows: Vec<Vec<(usize, f64)>>,
    /// For each LP index, the rows touching it.
    pub lp_cols: Vec<Vec<(usize, f64)>>,
    pub b: DVector<f64>,
    /// +1 for minimization, -1 for maximization.
    pub sign: f64,
    /// Mapping of every block of the slack-augmented problem.
    pub origin: Vec<Origin>,
    /// Number of blocks in the user's problem (slack blocks follow).
    pub user_blocks: usize,
}

impl StdForm {
    pub fn from_problem(p: &SdpProblem) -> Result<Self, SdpError> {
        p.validate()?;
        let user_blocks = p.blocks.len();
        let mut q = p.with_slacks();
        q.canonicalize();
        let sign = match q.sense {
            crate::Sense::Min => 1.0,
            crate::Sense::Max => -1.0,
        };

        let mut origin = Vec::with_capacity(q.blocks.len());
        let mut psd = Vec::new();
        let mut lp_len = 0usize;
        for blk in &q.blocks {
            match blk.kind {
                BlockKind::Psd => {
                    origin.push(Origin::Psd(psd.len()));
                    psd.push(PsdBlock {
                        n: blk.size,
                        c: DMatrix::zeros(blk.size, blk.size),
                        rows: Vec::new(),
                    });
                }
                BlockKind::Diagonal => {
                    origin.push(Origin::Lp {
                        start: lp_len,
                        n: blk.size,
                    });
                    lp_len += blk.size;
                }
                BlockKind::Free => {
                    origin.push(Origin::Free {
                        plus: lp_len,
                        minus: lp_len + blk.size,
                        n: blk.size,
                    });
                    lp_len += 2 * blk.size;
                }
            }
        }

        let m = q.constraints.len();
        let mut lp_c = DVector::zeros(lp_len);
        let mut lp_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut lp_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp_len];

        for (b, mat) in &q.objective {
            match origin[*b] {
                Origin::Psd(k) => {
                    for &(i, j, v) in mat.entries() {
                        psd[k].c[(i, j)] += sign * v;
                        if i != j {
                            psd[k].c[(j, i)] += sign * v;
                        }
                    }
                }
                Origin::Lp { start, .. } => {
                    for &(i, _, v) in mat.entries() {
                        lp_c[start + i] += sign * v;
                    }
                }
                Origin::Free { plus, minus, .. } => {
                    for &(i, _, v) in mat.entries() {
                        lp_c[plus + i] += sign * v;
                        lp_c[minus + i] -= sign * v;
                    }
                }
            }
        }

        let mut b = DVector::zeros(m);
        for (row, con) in q.constraints.iter().enumerate() {
            debug_assert_eq!(con.relation, Relation::Eq);
            b[row] = con.rhs;
            for (blk, mat) in &con.terms {
                match origin[*blk] {
                    Origin::Psd(k) => psd[k].rows.push((row, mat.entries().to_vec())),
                    Origin::Lp { start, .. } => {
                        for &(i, _, v) in mat.entries() {
                            lp_rows[row].push((start + i, v));
                            lp_cols[start + i].push((row, v));
                        }
                    }
                    Origin::Free { plus, minus, .. } => {
                        for &(i, _, v) in mat.entries() {
                            lp_rows[row].push((plus + i, v));
                            lp_cols[plus + i].push((row, v));
                            lp_rows[row].push((minus + i, -v));
                            lp_cols[minus + i].push((row, -v));
                        }
                    }
                }
            }
        }

        Ok(StdForm {
            m,
            psd,
            lp_c,
            lp_rows,
            lp_cols,
            b,
            sign,
            origin,
            user_blocks,
        })
    }

    pub fn lp_len(&self) -> usize {
        self.lp_c.len()
    }

    /// Barrier degree (sum of PSD sides plus LP length).
    pub fn degree(&self) -> usize {
        self.psd.iter().map(|b| b.n).sum::<usize>() + self.lp_len()
    }

    /// `A(X)`.
    pub fn apply(&self, x_psd: &[DMatrix<f64>], x_lp: &DVector<f64>) -> DVector<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, x) in self.psd.iter().zip(x_psd) {
            blk.apply(x, &mut out);
        }
        for (row, ents) in self.lp_rows.iter().enumerate() {
            out[row] += ents.iter().map(|&(k, v)| v * x_lp[k]).sum::<f64>();
        }
        DVector::from_vec(out)
    }

    /// `A^T(y)` as block values.
    pub fn adjoint(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let ys = y.as_slice();
        let psd = self.psd.iter().map(|b| b.adjoint(ys)).collect();
        let mut lp = DVector::zeros(self.lp_len());
        for (k, col) in self.lp_cols.iter().enumerate() {
            lp[k] = col.iter().map(|&(i, v)| v * ys[i]).sum();
        }
        (psd, lp)
    }

    pub fn objective(&self, x_psd: &[DMatrix<f64>], x_lp: &DVector<f64>) -> f64 {
        self.psd
            .iter()
            .zip(x_psd)
            .map(|(b, x)| b.c.dot(x))
            .sum::<f64>()
            + self.lp_c.dot(x_lp)
    }

    pub fn c_norm(&self) -> f64 {
        (self.psd.iter().map(|b| b.c.norm_squared()).sum::<f64>() + self.lp_c.norm_squared()).sqrt()
    }

    /// Frobenius norm of each `A_i`.
    pub fn row_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.m];
        for blk in &self.psd {
            for (i, ents) in &blk.rows {
                sq[*i] += ents
                    .iter()
                    .map(|&(p, q, v)| if p == q { v * v } else { 2.0 * v * v })
                    .sum::<f64>();
            }
        }
        for (i, ents) in self.lp_rows.iter().enumerate() {
            sq[i] += ents.iter().map(|&(_, v)| v * v).sum::<f64>();
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Divides constraint row `i` (coefficients and rhs) by `r[i]`.
    pub fn scale_rows(&mut self, r: &[f64]) {
        for blk in &mut self.psd {
            for (i, ents) in &mut blk.rows {
                for e in ents.iter_mut() {
                    e.2 /= r[*i];
                }
            }
        }
        for (i, ents) in self.lp_rows.iter_mut().enumerate() {
            for e in ents.iter_mut() {
                e.1 /= r[i];
            }
        }
        for col in &mut self.lp_cols {
            for e in col.iter_mut() {
                e.1 /= r[e.0];
            }
        }
        for (i, v) in self.b.iter_mut().enumerate() {
            *v /= r[i];
        }
    }

    /// Divides `b` by `sb` and `C` by `sc`.
    pub fn scale_data(&mut self, sb: f64, sc: f64) {
        self.b /= sb;
        for blk in &mut self.psd {
            blk.c /= sc;
        }
        self.lp_c /= sc;
    }

    /// Maps internal block values back to the user's blocks (slacks dropped).
    pub fn recover_primal(&self, x_psd: &[DMatrix<f64>], x_lp: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.origin[..self.user_blocks]
            .iter()
            .map(|o| match *o {
                Origin::Psd(k) => x_psd[k].clone(),
                Origin::Lp { start, n } => {
                    DMatrix::from_diagonal(&x_lp.rows(start, n).into_owned())
                }
                Origin::Free { plus, minus, n } => DMatrix::from_diagonal(
                    &(x_lp.rows(plus, n) - x_lp.rows(minus, n)).into_owned(),
                ),
            })
            .collect()
    }
}

/// Used by tests and the SDPA writer: dense view of a sparse symmetric matrix.
pub fn densify(m: &SymSparse, n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for &(i, j, v) in m.entries() {
        d[(i, j)] += v;
        if i != j {
            d[(j, i)] += v;
        }
    }
    d
}
