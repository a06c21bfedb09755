//! Seeded random states, channels and measurements.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{eigh, spectral_map, ComplexMatrix, DensityMatrix, Field, KrausMap, Operator, RealMatrix};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(r: usize, c: usize, rng: &mut impl Rng) -> RealMatrix {
    RealMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_op(r: usize, c: usize, field: Field, rng: &mut impl Rng) -> Operator {
    match field {
        Field::Real => Operator::Real(gaussian(r, c, rng)),
        Field::Complex => {
            let re = gaussian(r, c, rng);
            let im = gaussian(r, c, rng);
            Operator::Complex(ComplexMatrix { re, im })
        }
    }
}

/// `G G^dagger / tr` for a square Ginibre matrix `G`.
pub fn ginibre_state(dims: &[usize], field: Field, rng: &mut impl Rng) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = gaussian_op(d, d, field, rng);
    let m = g.mul(&g.adjoint());
    let tr = m.trace_re();
    let m = m.scale(1.0 / tr);
    let m = m.add(&m.adjoint()).scale(0.5);
    DensityMatrix::new_unchecked(dims.to_vec(), m).expect("shape")
}

pub fn real_state(dims: &[usize], rng: &mut impl Rng) -> DensityMatrix {
    ginibre_state(dims, Field::Real, rng)
}

pub fn complex_state(dims: &[usize], rng: &mut impl Rng) -> DensityMatrix {
    ginibre_state(dims, Field::Complex, rng)
}

/// Random pure state (Gaussian vector, normalized).
pub fn pure_state(dims: &[usize], field: Field, rng: &mut impl Rng) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = gaussian_op(d, 1, field, rng);
    let m = g.mul(&g.adjoint());
    let tr = m.trace_re();
    DensityMatrix::new_unchecked(dims.to_vec(), m.scale(1.0 / tr)).expect("shape")
}

/// `ρ_1 (x) ρ_2 (x) ...` with independent random factors.
pub fn product_state(dims: &[usize], field: Field, rng: &mut impl Rng) -> DensityMatrix {
    let mut out = ginibre_state(&dims[..1], field, rng);
    for d in &dims[1..] {
        out = out.tensor(&ginibre_state(&[*d], field, rng));
    }
    out
}

/// Thin `Q` factor of a Gaussian `rows x cols` matrix (`rows >= cols`).
fn isometry(rows: usize, cols: usize, field: Field, rng: &mut impl Rng) -> Operator {
    assert!(rows >= cols, "isometry needs rows >= cols");
    match gaussian_op(rows, cols, field, rng) {
        Operator::Real(a) => Operator::Real(a.qr().q()),
        Operator::Complex(c) => Operator::Complex(ComplexMatrix::from_c64(&c.to_c64().qr().q())),
    }
}

pub fn orthogonal(n: usize, rng: &mut impl Rng) -> RealMatrix {
    match isometry(n, n, Field::Real, rng) {
        Operator::Real(m) => m,
        Operator::Complex(_) => unreachable!(),
    }
}

pub fn unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    isometry(n, n, Field::Complex, rng).to_complex()
}

/// Trace-preserving channel from a random isometry. `n_kraus` is raised to
/// `ceil(d_in / d_out)` when smaller, since fewer operators cannot preserve trace.
pub fn channel(d_in: usize, d_out: usize, n_kraus: usize, field: Field, rng: &mut impl Rng) -> KrausMap {
    let n_kraus = n_kraus.max(d_in.div_ceil(d_out));
    let v = isometry(d_out * n_kraus, d_in, field, rng);
    let kraus = (0..n_kraus)
        .map(|k| v.map_linear(|m| m.rows(k * d_out, d_out).into_owned()))
        .collect();
    KrausMap::new(vec![d_in], vec![d_out], kraus, true).expect("isometry blocks form a channel")
}

pub fn real_channel(d_in: usize, d_out: usize, n_kraus: usize, rng: &mut impl Rng) -> KrausMap {
    channel(d_in, d_out, n_kraus, Field::Real, rng)
}

/// `E_k = S^{-1/2} G_k^dagger G_k S^{-1/2}` with `S = sum_k G_k^dagger G_k`.
pub fn povm(d: usize, outcomes: usize, field: Field, rng: &mut impl Rng) -> Vec<Operator> {
    let gs: Vec<Operator> = (0..outcomes)
        .map(|_| {
            let g = gaussian_op(d, d, field, rng);
            g.adjoint().mul(&g)
        })
        .collect();
    let mut s = Operator::zeros(d, d, field);
    for g in &gs {
        s = s.add(g);
    }
    let (vals, vecs) = eigh(&s).expect("Hermitian");
    let w = spectral_map(&vals, &vecs, |l| 1.0 / l.sqrt());
    gs.iter()
        .map(|g| {
            let e = w.mul(g).mul(&w);
            e.add(&e.adjoint()).scale(0.5)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channels_and_povms_are_valid() {
        let mut rng = seeded(1);
        for field in [Field::Real, Field::Complex] {
            let ch = channel(3, 2, 4, field, &mut rng);
            assert!(ch.trace_preserving);
            let e = povm(3, 3, field, &mut rng);
            let mut s = Operator::zeros(3, 3, field);
            for x in &e {
                assert!(super::super::eigvalsh(x).unwrap()[0] > -1e-12);
                s = s.add(x);
            }
            assert!(s.max_abs_diff(&Operator::identity(3, field)) < 1e-12);
        }
    }

    #[test]
    fn states_are_valid_density_matrices() {
        let mut rng = seeded(2);
        for field in [Field::Real, Field::Complex] {
            let s = ginibre_state(&[2, 3], field, &mut rng);
            DensityMatrix::new(s.dims().to_vec(), s.op().clone()).unwrap();
            let p = pure_state(&[4], field, &mut rng);
            assert!((p.eigenvalues()[3] - 1.0).abs() < 1e-12);
        }
    }
}
