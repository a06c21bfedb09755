#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqlab_sdp::{BlockKind, Constraint, SdpProblem, Sense};

/// Random problem that is strictly feasible on both sides: `b = A(X0)` and
/// `C = Z0 + A'(y0)` with `X0, Z0` positive definite.
pub fn random_feasible(seed: u64) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sense = if rng.random_bool(0.5) { Sense::Min } else { Sense::Max };
    let mut p = SdpProblem::new(sense);
    let nblocks = rng.random_range(1..=2);
    let mut sizes = Vec::new();
    for k in 0..nblocks {
        let n = rng.random_range(2..=8);
        p.add_block(format!("X{k}"), n, BlockKind::Psd);
        sizes.push((n, BlockKind::Psd));
    }
    if rng.random_bool(0.5) {
        let n = rng.random_range(1..=4);
        p.add_block("d", n, BlockKind::Diagonal);
        sizes.push((n, BlockKind::Diagonal));
    }
    let m = rng.random_range(1..=10);

    let interior = |rng: &mut ChaCha8Rng, n: usize, kind: BlockKind| -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; n]; n];
        if kind == BlockKind::Diagonal {
            for i in 0..n {
                g[i][i] = rng.random_range(0.5..2.0);
            }
            return g;
        }
        let a: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                g[i][j] = (0..n).map(|k| a[i][k] * a[j][k]).sum::<f64>();
            }
            g[i][i] += 0.5;
        }
        g
    };
    let x0: Vec<_> = sizes.iter().map(|&(n, k)| interior(&mut rng, n, k)).collect();
    let z0: Vec<_> = sizes.iter().map(|&(n, k)| interior(&mut rng, n, k)).collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();

    // C starts at Z0 (in the problem's own sense).
    let s = if sense == Sense::Min { 1.0 } else { -1.0 };
    let mut cmat: Vec<Vec<Vec<f64>>> = z0.iter().map(|z| z.iter().map(|r| r.iter().map(|v| s * v).collect()).collect()).collect();
    for i in 0..m {
        let mut con = Constraint::eq(0.0);
        let mut rhs = 0.0;
        for (b, &(n, kind)) in sizes.iter().enumerate() {
            for r in 0..n {
                for c in r..n {
                    if kind == BlockKind::Diagonal && r != c {
                        continue;
                    }
                    if !rng.random_bool(0.6) {
                        continue;
                    }
                    let v: f64 = rng.random_range(-1.0..1.0);
                    con.add(b, r, c, v);
                    rhs += if r == c { v * x0[b][r][c] } else { 2.0 * v * x0[b][r][c] };
                    cmat[b][r][c] += s * y0[i] * v;
                    if r != c {
                        cmat[b][c][r] += s * y0[i] * v;
                    }
                }
            }
        }
        con.rhs = rhs;
        p.add_constraint(con);
    }
    for (b, &(n, _)) in sizes.iter().enumerate() {
        for r in 0..n {
            for c in r..n {
                if cmat[b][r][c] != 0.0 {
                    p.add_objective(b, r, c, cmat[b][r][c]);
                }
            }
        }
    }
    p
}

/// `min tr X` with `X11 = 1`, `X22 = 2` over 2x2 PSD matrices.
pub fn trace_toy() -> SdpProblem {
    let mut p = SdpProblem::new(Sense::Min);
    let x = p.add_block("X", 2, BlockKind::Psd);
    p.add_objective(x, 0, 0, 1.0);
    p.add_objective(x, 1, 1, 1.0);
    p.add_constraint(Constraint::eq(1.0).with(x, 0, 0, 1.0));
    p.add_constraint(Constraint::eq(2.0).with(x, 1, 1, 1.0));
    p
}

/// `X psd, tr X = -1`.
pub fn infeasible_toy() -> SdpProblem {
    let mut p = SdpProblem::new(Sense::Min);
    let x = p.add_block("X", 2, BlockKind::Psd);
    p.add_constraint(Constraint::eq(-1.0).with(x, 0, 0, 1.0).with(x, 1, 1, 1.0));
    p
}
