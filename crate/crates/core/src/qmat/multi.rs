//! Index arithmetic on multipartite matrices.
//!
//! Subsystem 0 is the most significant digit of a basis index.

use super::RealMatrix;

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Full-space offsets of every multi-index over `subset`, enumerated with the
/// first listed subsystem most significant.
pub fn offsets(dims: &[usize], subset: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &k in subset {
        let mut next = Vec::with_capacity(out.len() * dims[k]);
        for &o in &out {
            for i in 0..dims[k] {
                next.push(o + i * st[k]);
            }
        }
        out = next;
    }
    out
}

fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    (0..n).filter(|k| !subset.contains(k)).collect()
}

/// Trace over every subsystem not in `keep`.
pub fn partial_trace_mat(m: &RealMatrix, dims: &[usize], keep: &[usize]) -> RealMatrix {
    let ko = offsets(dims, keep);
    let to = offsets(dims, &complement(dims.len(), keep));
    let n = ko.len();
    RealMatrix::from_fn(n, n, |r, c| {
        to.iter().map(|t| m[(ko[r] + t, ko[c] + t)]).sum()
    })
}

/// Transposes the indices of subsystem `sub`.
pub fn partial_transpose_mat(m: &RealMatrix, dims: &[usize], sub: usize) -> RealMatrix {
    let st = strides(dims)[sub];
    let d = dims[sub];
    RealMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        let dr = (r / st) % d;
        let dc = (c / st) % d;
        m[(r - dr * st + dc * st, c - dc * st + dr * st)]
    })
}

/// New subsystem `k` is old subsystem `perm[k]`.
pub fn permute_mat(m: &RealMatrix, dims: &[usize], perm: &[usize]) -> RealMatrix {
    let map = offsets(dims, perm);
    RealMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(map[i], map[j])])
}

/// `(op (x) I) m`, with `op` acting on `sites` (in the listed order).
pub fn apply_local_left(op: &RealMatrix, m: &RealMatrix, dims: &[usize], sites: &[usize]) -> RealMatrix {
    let so = offsets(dims, sites);
    let ro = offsets(dims, &complement(dims.len(), sites));
    let ds = so.len();
    assert_eq!(op.nrows(), ds, "local operator size");
    let mut out = RealMatrix::zeros(m.nrows(), m.ncols());
    let mut v = vec![0.0; ds];
    for col in 0..m.ncols() {
        let mc = m.column(col);
        let mut oc = out.column_mut(col);
        for &r in &ro {
            let mut any = false;
            for (s, o) in so.iter().enumerate() {
                v[s] = mc[o + r];
                any |= v[s] != 0.0;
            }
            if !any {
                continue;
            }
            for (s, o) in so.iter().enumerate() {
                let mut acc = 0.0;
                for (t, vt) in v.iter().enumerate() {
                    acc += op[(s, t)] * vt;
                }
                oc[o + r] = acc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_match_kron_ordering() {
        assert_eq!(offsets(&[2, 3], &[0]), vec![0, 3]);
        assert_eq!(offsets(&[2, 3], &[1]), vec![0, 1, 2]);
        assert_eq!(offsets(&[2, 3], &[1, 0]), vec![0, 3, 1, 4, 2, 5]);
    }

    #[test]
    fn local_application_equals_kron() {
        let a = RealMatrix::from_fn(2, 2, |i, j| (i * 2 + j) as f64 + 1.0);
        let m = RealMatrix::from_fn(6, 6, |i, j| (i as f64 - j as f64).sin());
        let full = a.kronecker(&RealMatrix::identity(3, 3));
        assert!((apply_local_left(&a, &m, &[2, 3], &[0]) - &full * &m).norm() < 1e-12);
        let b = RealMatrix::from_fn(3, 3, |i, j| (i + 3 * j) as f64);
        let full = RealMatrix::identity(2, 2).kronecker(&b);
        assert!((apply_local_left(&b, &m, &[2, 3], &[1]) - &full * &m).norm() < 1e-12);
    }
}
