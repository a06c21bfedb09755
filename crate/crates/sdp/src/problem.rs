//! Block-diagonal SDP data model.
//!
//! A problem is `min/max sum_k <C_k, X_k>` over block variables `X_k`, subject
//! to linear constraints `sum_k <A_ik, X_k> (= | <=) b_i`. Coefficient matrices
//! are symmetric and stored by their upper triangle; an entry `(i, j, v)` with
//! `i < j` stands for `v` at both `(i, j)` and `(j, i)`.

use serde::{Deserialize, Serialize};

use crate::SdpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Symmetric positive semidefinite matrix.
    Psd,
    /// Diagonal matrix with nonnegative entries (an LP block).
    Diagonal,
    /// Vector of unconstrained scalars, stored on a diagonal.
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub size: usize,
    pub kind: BlockKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
}

/// Sparse symmetric matrix, upper-triangle triplets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymSparse {
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` to entry `(i, j)` (and its mirror). Order of `i`, `j` is irrelevant.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((i, j, v));
    }

    pub fn with(mut self, i: usize, j: usize, v: f64) -> Self {
        self.add(i, j, v);
        self
    }

    /// Sorts by `(i, j)`, merges duplicates and drops exact zeros.
    pub fn canonicalize(&mut self) {
        self.entries
            .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        self.entries = merged;
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `<A, X>` for a dense symmetric `X` given as an accessor.
    pub fn dot_with(&self, x: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x(i, i) } else { 2.0 * v * x(i, j) })
            .sum()
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn frobenius(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: f64) -> SymSparse {
        SymSparse {
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect(),
        }
    }
}

/// Coefficients of one linear form across blocks: `(block index, matrix)`.
pub type BlockTerms = Vec<(usize, SymSparse)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: BlockTerms,
    pub rhs: f64,
    pub relation: Relation,
}

impl Constraint {
    pub fn new(relation: Relation, rhs: f64) -> Self {
        Constraint {
            terms: Vec::new(),
            rhs,
            relation,
        }
    }

    pub fn eq(rhs: f64) -> Self {
        Self::new(Relation::Eq, rhs)
    }

    pub fn le(rhs: f64) -> Self {
        Self::new(Relation::Le, rhs)
    }

    /// Adds `v` at `(i, j)` of `block`.
    pub fn add(&mut self, block: usize, i: usize, j: usize, v: f64) {
        add_term(&mut self.terms, block, i, j, v);
    }

    pub fn with(mut self, block: usize, i: usize, j: usize, v: f64) -> Self {
        self.add(block, i, j, v);
        self
    }
}

fn add_term(terms: &mut BlockTerms, block: usize, i: usize, j: usize, v: f64) {
    match terms.iter_mut().find(|(b, _)| *b == block) {
        Some((_, m)) => m.add(i, j, v),
        None => terms.push((block, SymSparse::new().with(i, j, v))),
    }
}

fn canonicalize_terms(terms: &mut BlockTerms) {
    terms.sort_by_key(|(b, _)| *b);
    let mut merged: BlockTerms = Vec::with_capacity(terms.len());
    for (b, m) in terms.drain(..) {
        match merged.last_mut() {
            Some((lb, lm)) if *lb == b => lm.entries.extend(m.entries),
            _ => merged.push((b, m)),
        }
    }
    for (_, m) in merged.iter_mut() {
        m.canonicalize();
    }
    merged.retain(|(_, m)| !m.is_empty());
    *terms = merged;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub sense: Sense,
    pub blocks: Vec<Block>,
    pub objective: BlockTerms,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        SdpProblem {
            sense,
            blocks: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Appends a block and returns its index.
    pub fn add_block(&mut self, name: impl Into<String>, size: usize, kind: BlockKind) -> usize {
        self.blocks.push(Block {
            name: name.into(),
            size,
            kind,
        });
        self.blocks.len() - 1
    }

    pub fn add_objective(&mut self, block: usize, i: usize, j: usize, v: f64) {
        add_term(&mut self.objective, block, i, j, v);
    }

    pub fn add_constraint(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn block_sides(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn has_inequalities(&self) -> bool {
        self.constraints.iter().any(|c| c.relation == Relation::Le)
    }

    /// Sorts and merges all coefficient lists.
    pub fn canonicalize(&mut self) {
        canonicalize_terms(&mut self.objective);
        for c in &mut self.constraints {
            canonicalize_terms(&mut c.terms);
        }
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let check = |terms: &BlockTerms, what: &str| -> Result<(), SdpError> {
            for (b, m) in terms {
                let block = self.blocks.get(*b).ok_or_else(|| {
                    SdpError::Malformed(format!("{what}: block index {b} out of range"))
                })?;
                for &(i, j, v) in m.entries() {
                    if !v.is_finite() {
                        return Err(SdpError::Malformed(format!("{what}: non-finite coefficient")));
                    }
                    if j >= block.size {
                        return Err(SdpError::Malformed(format!(
                            "{what}: entry ({i},{j}) outside block '{}' of size {}",
                            block.name, block.size
                        )));
                    }
                    if block.kind != BlockKind::Psd && i != j {
                        return Err(SdpError::Malformed(format!(
                            "{what}: off-diagonal entry in non-PSD block '{}'",
                            block.name
                        )));
                    }
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (k, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(SdpError::Malformed(format!("constraint {k}: non-finite rhs")));
            }
            check(&c.terms, &format!("constraint {k}"))?;
        }
        if self.blocks.iter().any(|b| b.size == 0) {
            return Err(SdpError::Malformed("zero-sized block".into()));
        }
        Ok(())
    }

    /// Returns an equivalent problem with only equality constraints: each
    /// `<=` row `k` gets its own 1x1 diagonal slack block named `slack_k`.
    pub fn with_slacks(&self) -> SdpProblem {
        let mut out = self.clone();
        for k in 0..out.constraints.len() {
            if out.constraints[k].relation == Relation::Le {
                let s = out.add_block(format!("slack_{k}"), 1, BlockKind::Diagonal);
                let c = &mut out.constraints[k];
                c.add(s, 0, 0, 1.0);
                c.relation = Relation::Eq;
            }
        }
        out
    }

    /// Evaluates the objective at the given block values.
    pub fn objective_at(&self, x: &[nalgebra::DMatrix<f64>]) -> f64 {
        terms_dot(&self.objective, x)
    }

    /// Left-hand side of constraint `k` at the given block values.
    pub fn constraint_lhs(&self, k: usize, x: &[nalgebra::DMatrix<f64>]) -> f64 {
        terms_dot(&self.constraints[k].terms, x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SdpError> {
        let p: SdpProblem =
            serde_json::from_str(s).map_err(|e| SdpError::Malformed(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

fn terms_dot(terms: &BlockTerms, x: &[nalgebra::DMatrix<f64>]) -> f64 {
    terms
        .iter()
        .map(|(b, m)| m.dot_with(|i, j| x[*b][(i, j)]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_merges_mirrored_entries() {
        let mut m = SymSparse::new().with(1, 0, 2.0).with(0, 1, 3.0).with(2, 2, 0.0);
        m.canonicalize();
        assert_eq!(m.entries(), &[(0, 1, 5.0)]);
    }

    #[test]
    fn slack_conversion_names_blocks_by_row() {
        let mut p = SdpProblem::new(Sense::Min);
        let x = p.add_block("X", 2, BlockKind::Psd);
        p.add_constraint(Constraint::eq(1.0).with(x, 0, 0, 1.0));
        p.add_constraint(Constraint::le(3.0).with(x, 1, 1, 1.0));
        let q = p.with_slacks();
        assert!(!q.has_inequalities());
        assert_eq!(q.blocks[1].name, "slack_1");
        assert_eq!(q.blocks[1].kind, BlockKind::Diagonal);
    }

    #[test]
    fn validate_rejects_offdiagonal_in_lp_block() {
        let mut p = SdpProblem::new(Sense::Min);
        let d = p.add_block("d", 3, BlockKind::Diagonal);
        p.add_constraint(Constraint::eq(1.0).with(d, 0, 1, 1.0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_dump_round_trips() {
        let mut p = SdpProblem::new(Sense::Max);
        let x = p.add_block("X", 2, BlockKind::Psd);
        p.add_objective(x, 0, 1, 1.0);
        p.add_constraint(Constraint::le(1.0).with(x, 0, 0, 1.0));
        let q = SdpProblem::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
    }
}
