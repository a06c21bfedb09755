//! Alternating optimization over the joint state and the three parties'
//! projective measurements.

use rand::Rng;
use rayon::prelude::*;

use super::{bell_operator, bell_score, behavior_from_strategy, coefficients, BellReport, Strategy, NB, NX, NZ};
use crate::qmat::random::{gaussian, orthogonal, seeded, unitary};
use crate::qmat::{
    apply_local, eigh, partial_trace_mat, spectral_map, ComplexMatrix, DensityMatrix, Field, Operator,
};

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub seed: u64,
    pub strategy: Strategy,
    pub report: BellReport,
    /// `tr(W rho)` after each full round.
    pub trace: Vec<f64>,
    /// False when `iters` ran out before the score settled.
    pub converged: bool,
}

fn random_hermitian(d: usize, field: Field, rng: &mut impl Rng) -> Operator {
    let g = match field {
        Field::Real => Operator::Real(gaussian(d, d, rng)),
        Field::Complex => Operator::Complex(ComplexMatrix {
            re: gaussian(d, d, rng),
            im: gaussian(d, d, rng),
        }),
    };
    g.add(&g.adjoint()).scale(0.5)
}

/// Projector onto the strictly positive eigenspace; zero modes go to the
/// complement, which keeps the `+` element as small as possible.
fn positive_projector(h: &Operator) -> Operator {
    let h = h.add(&h.adjoint()).scale(0.5);
    let (vals, vecs) = eigh(&h).expect("Hermitian by construction");
    let tol = 1e-12 * vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    spectral_map(&vals, &vecs, |l| if l > tol { 1.0 } else { 0.0 })
}

fn binary_from_projector(p: Operator) -> Vec<Operator> {
    let i = Operator::identity(p.nrows(), p.field());
    let q = i.sub(&p);
    vec![p, q]
}

fn random_binary(d: usize, field: Field, rng: &mut impl Rng) -> Vec<Operator> {
    binary_from_projector(positive_projector(&random_hermitian(d, field, rng)))
}

/// Rank-one projectors of a random basis, dealt round-robin to the four outcomes.
fn random_bob(d: usize, field: Field, rng: &mut impl Rng) -> Vec<Operator> {
    let u = match field {
        Field::Real => Operator::Real(orthogonal(d, rng)),
        Field::Complex => Operator::Complex(unitary(d, rng)),
    };
    let mut out = vec![Operator::zeros(d, d, field); NB];
    for j in 0..d {
        let col = u.map_linear(|m| m.columns(j, 1).into_owned());
        out[j % NB] = out[j % NB].add(&col.mul(&col.adjoint()));
    }
    out
}

fn top_state(w: &Operator, dims: &[usize]) -> DensityMatrix {
    let w = w.add(&w.adjoint()).scale(0.5);
    let (_, vecs) = eigh(&w).expect("Bell operator is Hermitian");
    let n = w.nrows();
    let v = vecs.map_linear(|m| m.columns(n - 1, 1).into_owned());
    DensityMatrix::new_unchecked(dims.to_vec(), v.mul(&v.adjoint())).expect("shape")
}

fn observable(e: &[Operator]) -> Operator {
    e[0].sub(&e[1])
}

/// `tr_{rest}((K on sites) rho)`, Hermitian part.
fn conditional(k: &Operator, rho: &Operator, dims: &[usize], sites: &[usize], keep: usize) -> Operator {
    let t = apply_local(k, rho, dims, sites);
    let r = t.map_linear(|m| partial_trace_mat(m, dims, &[keep]));
    r.add(&r.adjoint()).scale(0.5)
}

fn sum_ops(it: impl Iterator<Item = Operator>) -> Option<Operator> {
    it.reduce(|a, b| a.add(&b))
}

struct Round<'a> {
    dims: [usize; 3],
    field: Field,
    k: &'a [[[f64; NZ]; NX]; NB],
}

impl Round<'_> {
    fn update_alice(&self, s: &mut Strategy) {
        let rho = s.state.op();
        let [_, db, dc] = self.dims;
        let c: Vec<Operator> = s.charlie.iter().map(|e| observable(e)).collect();
        for x in 0..NX {
            let kx = sum_ops((0..NB).flat_map(|b| {
                let c = &c;
                let bob = &s.bob;
                (0..NZ)
                    .filter(move |&z| self.k[b][x][z] != 0.0)
                    .map(move |z| bob[b].tensor(&c[z]).scale(self.k[b][x][z]))
            }))
            .unwrap_or_else(|| Operator::zeros(db * dc, db * dc, self.field));
            let g = conditional(&kx, rho, &self.dims, &[1, 2], 0);
            s.alice[x] = binary_from_projector(positive_projector(&g));
        }
    }

    fn update_charlie(&self, s: &mut Strategy) {
        let rho = s.state.op();
        let [da, db, _] = self.dims;
        let a: Vec<Operator> = s.alice.iter().map(|e| observable(e)).collect();
        for z in 0..NZ {
            let kz = sum_ops((0..NB).flat_map(|b| {
                let a = &a;
                let bob = &s.bob;
                (0..NX)
                    .filter(move |&x| self.k[b][x][z] != 0.0)
                    .map(move |x| a[x].tensor(&bob[b]).scale(self.k[b][x][z]))
            }))
            .unwrap_or_else(|| Operator::zeros(da * db, da * db, self.field));
            let g = conditional(&kz, rho, &self.dims, &[0, 1], 2);
            s.charlie[z] = binary_from_projector(positive_projector(&g));
        }
    }

    /// For each pair of outcomes, re-splits their summed projector along the
    /// positive part of the difference of conditional operators. Each step
    /// is optimal given the others, so the score cannot decrease.
    fn update_bob(&self, s: &mut Strategy) {
        let rho = s.state.op();
        let [da, _, dc] = self.dims;
        let a: Vec<Operator> = s.alice.iter().map(|e| observable(e)).collect();
        let c: Vec<Operator> = s.charlie.iter().map(|e| observable(e)).collect();
        let h: Vec<Operator> = (0..NB)
            .map(|b| {
                let kb = sum_ops((0..NX).flat_map(|x| {
                    let (a, c) = (&a, &c);
                    (0..NZ)
                        .filter(move |&z| self.k[b][x][z] != 0.0)
                        .map(move |z| a[x].tensor(&c[z]).scale(self.k[b][x][z]))
                }))
                .unwrap_or_else(|| Operator::zeros(da * dc, da * dc, self.field));
                conditional(&kb, rho, &self.dims, &[0, 2], 1)
            })
            .collect();
        for b in 0..NB {
            for b2 in b + 1..NB {
                let q = s.bob[b].add(&s.bob[b2]);
                let d = h[b].sub(&h[b2]);
                let e = positive_projector(&q.mul(&d).mul(&q));
                let rest = q.sub(&e);
                s.bob[b2] = rest.add(&rest.adjoint()).scale(0.5);
                s.bob[b] = e;
            }
        }
    }
}

/// One see-saw run from a random projective starting point.
///
/// Each round sets the state to the top eigenvector of the Bell operator,
/// then updates Alice, Bob and Charlie in turn. Stops when a round improves
/// the score by less than `1e-12`.
pub fn seesaw(field: Field, dims: [usize; 3], seed: u64, iters: usize) -> SeesawResult {
    let mut rng = seeded(seed);
    let [da, db, dc] = dims;
    let k = coefficients();
    let mut s = Strategy {
        field,
        state: DensityMatrix::maximally_mixed(dims.to_vec(), field),
        alice: (0..NX).map(|_| random_binary(da, field, &mut rng)).collect(),
        bob: random_bob(db, field, &mut rng),
        charlie: (0..NZ).map(|_| random_binary(dc, field, &mut rng)).collect(),
    };
    let round = Round {
        dims,
        field,
        k: &k,
    };
    let mut trace = Vec::with_capacity(iters);
    let mut converged = false;
    for _ in 0..iters {
        let w = bell_operator(&s.alice, &s.bob, &s.charlie);
        s.state = top_state(&w, &dims);
        round.update_alice(&mut s);
        round.update_bob(&mut s);
        round.update_charlie(&mut s);
        let w = bell_operator(&s.alice, &s.bob, &s.charlie);
        let score = w.trace_prod_re(s.state.op());
        let prev = trace.last().copied();
        trace.push(score);
        if let Some(p) = prev {
            if score - p < 1e-12 {
                converged = true;
                break;
            }
        }
    }
    // Final state update so the reported strategy is a fixed point of the state step.
    let w = bell_operator(&s.alice, &s.bob, &s.charlie);
    s.state = top_state(&w, &dims);
    let report = bell_score(&behavior_from_strategy(&s).expect("see-saw iterates are valid strategies"));
    SeesawResult {
        seed,
        strategy: s,
        report,
        trace,
        converged,
    }
}

/// Runs `seeds` in parallel and returns the best result (lowest seed on ties)
/// together with all scores in seed order.
pub fn best_of_seeds(
    field: Field,
    dims: [usize; 3],
    seeds: impl IntoIterator<Item = u64>,
    iters: usize,
) -> (SeesawResult, Vec<f64>) {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    assert!(!seeds.is_empty(), "at least one seed");
    let runs: Vec<SeesawResult> = seeds.par_iter().map(|&s| seesaw(field, dims, s, iters)).collect();
    let scores = runs.iter().map(|r| r.report.total).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.report.total > a.report.total { b } else { a })
        .expect("nonempty");
    (best, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_is_monotone() {
        for seed in 0..5 {
            let r = seesaw(Field::Complex, [2, 4, 2], seed, 200);
            for w in r.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-10, "{:?}", r.trace);
            }
        }
    }

    #[test]
    fn real_run_stays_real() {
        let r = seesaw(Field::Real, [2, 2, 2], 3, 20);
        assert_eq!(r.strategy.state.field(), Field::Real);
        assert!(r.strategy.bob.iter().all(|o| o.field() == Field::Real));
    }
}
