//! First-order operator splitting on the homogeneous self-dual embedding.
//!
//! The dual `max b'y s.t. C - A'y in K` is written as the conic program
//! `min -b'y s.t. A_s y + s = svec(C), s in K` with `A_s y = svec(A'y)` and
//! solved by ADMM on the embedding, with over-relaxation. The cone variable's
//! dual is `svec(X)`, so both the primal and dual solution come out of one run.
//! Memory is linear in the number of nonzeros plus one `m x m` factor (or none,
//! when the conjugate-gradient path is used).

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::standard::StdForm;
use crate::{Residuals, SdpError, SdpProblem, SdpSolution, Status};

#[derive(Clone, Debug)]
pub struct SplittingSettings {
    pub tol: f64,
    pub max_iters: usize,
    /// Over-relaxation parameter in (0, 2).
    pub alpha: f64,
    /// Rescale constraint rows and data norms before iterating.
    pub equilibrate: bool,
    /// Above this many constraints the linear system is solved by CG.
    pub dense_limit: usize,
    /// Consecutive iterations of growing residual that count as divergence.
    pub divergence_window: usize,
}

impl Default for SplittingSettings {
    fn default() -> Self {
        SplittingSettings {
            tol: 1e-4,
            max_iters: 50_000,
            alpha: 1.5,
            equilibrate: true,
            dense_limit: 3000,
            divergence_window: 1000,
        }
    }
}

pub fn solve_splitting(p: &SdpProblem, tol: f64) -> Result<SdpSolution, SdpError> {
    solve_splitting_with(
        p,
        &SplittingSettings {
            tol,
            ..SplittingSettings::default()
        },
    )
}

pub fn solve_splitting_with(
    p: &SdpProblem,
    settings: &SplittingSettings,
) -> Result<SdpSolution, SdpError> {
    let mut sf = StdForm::from_problem(p)?;
    let m = sf.m;
    let orig_norms = (sf.b.norm(), sf.c_norm());
    let mut r = vec![1.0; m];
    let (mut sb, mut sc) = (1.0, 1.0);
    if settings.equilibrate {
        for (ri, n) in r.iter_mut().zip(sf.row_norms()) {
            if n > 0.0 {
                *ri = n;
            }
        }
        sf.scale_rows(&r);
        sb = sf.b.norm().max(1.0);
        sc = sf.c_norm().max(1.0);
        sf.scale_data(sb, sc);
    }
    let unscale = Unscale {
        r: DVector::from_vec(r.clone()),
        sb,
        sc,
        b_norm: orig_norms.0,
        c_norm: orig_norms.1,
    };
    let solver = Admm::new(&sf, settings, unscale);
    let out = solver.run()?;

    let sign = sf.sign;
    let x_psd: Vec<DMatrix<f64>> = out.x_psd.iter().map(|x| x * sb).collect();
    let x_lp = &out.x_lp * sb;
    let y: Vec<f64> = out
        .y
        .iter()
        .zip(&r)
        .map(|(v, ri)| sign * sc * v / ri)
        .collect();
    Ok(SdpSolution {
        status: out.status,
        objective: sign * sb * sc * out.pobj,
        dual_objective: sign * sb * sc * out.dobj,
        primal: sf.recover_primal(&x_psd, &x_lp),
        dual: y,
        residuals: out.residuals,
        iterations: out.iterations,
        tol: settings.tol,
    })
}

enum LinSolver {
    Dense(Cholesky<f64, Dyn>),
    Cg { diag: DVector<f64> },
}

struct AdmmOut {
    status: Status,
    x_psd: Vec<DMatrix<f64>>,
    x_lp: DVector<f64>,
    y: DVector<f64>,
    pobj: f64,
    dobj: f64,
    residuals: Residuals,
    iterations: usize,
}

/// Maps residuals of the equilibrated problem back to the original one.
struct Unscale {
    r: DVector<f64>,
    sb: f64,
    sc: f64,
    b_norm: f64,
    c_norm: f64,
}

struct Admm<'a> {
    sf: &'a StdForm,
    un: Unscale,
    settings: &'a SplittingSettings,
    /// Offsets of each PSD block inside the cone vector; LP part follows.
    offsets: Vec<usize>,
    nk: usize,
    lin: LinSolver,
    /// `h = [c; b_s] = [-b; svec(C)]` and `g = M^{-1} h`.
    h_x: DVector<f64>,
    h_s: DVector<f64>,
    g_x: DVector<f64>,
    g_s: DVector<f64>,
    hg: f64,
}

impl<'a> Admm<'a> {
    fn new(sf: &'a StdForm, settings: &'a SplittingSettings, un: Unscale) -> Self {
        let mut offsets = Vec::with_capacity(sf.psd.len());
        let mut nk = 0;
        for blk in &sf.psd {
            offsets.push(nk);
            nk += blk.n * (blk.n + 1) / 2;
        }
        let lp_off = nk;
        nk += sf.lp_len();

        let diag = gram_diag(sf);
        let lin = if sf.m <= settings.dense_limit {
            let mut g = gram(sf);
            for i in 0..sf.m {
                g[(i, i)] += 1.0;
            }
            LinSolver::Dense(Cholesky::new(g).expect("I + A'A is positive definite"))
        } else {
            LinSolver::Cg {
                diag: diag.add_scalar(1.0),
            }
        };

        let mut s = Admm {
            sf,
            un,
            settings,
            offsets,
            nk,
            lin,
            h_x: -&sf.b,
            h_s: DVector::zeros(nk),
            g_x: DVector::zeros(sf.m),
            g_s: DVector::zeros(nk),
            hg: 0.0,
        };
        let c_mats: Vec<DMatrix<f64>> = sf.psd.iter().map(|b| b.c.clone()).collect();
        let mut hs = s.svec(&c_mats);
        hs.rows_mut(lp_off, sf.lp_len()).copy_from(&sf.lp_c);
        s.h_s = hs;
        let (gx, gs) = s.solve_m(&s.h_x, &s.h_s, None);
        s.hg = s.h_x.dot(&gx) + s.h_s.dot(&gs);
        s.g_x = gx;
        s.g_s = gs;
        s
    }

    fn lp_off(&self) -> usize {
        self.nk - self.sf.lp_len()
    }

    fn svec(&self, mats: &[DMatrix<f64>]) -> DVector<f64> {
        let mut v = DVector::zeros(self.nk);
        let r2 = std::f64::consts::SQRT_2;
        for ((blk, off), x) in self.sf.psd.iter().zip(&self.offsets).zip(mats) {
            let mut k = *off;
            for j in 0..blk.n {
                for i in 0..=j {
                    v[k] = if i == j { x[(i, j)] } else { r2 * x[(i, j)] };
                    k += 1;
                }
            }
        }
        v
    }

    fn smat(&self, v: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let r2 = std::f64::consts::SQRT_2;
        let mats = self
            .sf
            .psd
            .iter()
            .zip(&self.offsets)
            .map(|(blk, off)| {
                let mut x = DMatrix::zeros(blk.n, blk.n);
                let mut k = *off;
                for j in 0..blk.n {
                    for i in 0..=j {
                        if i == j {
                            x[(i, i)] = v[k];
                        } else {
                            x[(i, j)] = v[k] / r2;
                            x[(j, i)] = v[k] / r2;
                        }
                        k += 1;
                    }
                }
                x
            })
            .collect();
        let lp = v.rows(self.lp_off(), self.sf.lp_len()).into_owned();
        (mats, lp)
    }

    /// `A_s y = svec(A'y)`.
    fn a_s(&self, y: &DVector<f64>) -> DVector<f64> {
        let (mats, lp) = self.sf.adjoint(y);
        let mut v = self.svec(&mats);
        v.rows_mut(self.lp_off(), lp.len()).copy_from(&lp);
        v
    }

    /// `A_s' s = A(smat(s))`.
    fn a_s_t(&self, s: &DVector<f64>) -> DVector<f64> {
        let (mats, lp) = self.smat(s);
        self.sf.apply(&mats, &lp)
    }

    /// Solves `[[I, A_s'], [-A_s, I]] [x; s] = [a; bb]`.
    fn solve_m(
        &self,
        a: &DVector<f64>,
        bb: &DVector<f64>,
        warm: Option<&DVector<f64>>,
    ) -> (DVector<f64>, DVector<f64>) {
        let rhs = a - self.a_s_t(bb);
        let x = match &self.lin {
            LinSolver::Dense(ch) => ch.solve(&rhs),
            LinSolver::Cg { diag } => self.cg(&rhs, diag, warm),
        };
        let s = bb + self.a_s(&x);
        (x, s)
    }

    fn cg(&self, rhs: &DVector<f64>, diag: &DVector<f64>, warm: Option<&DVector<f64>>) -> DVector<f64> {
        let op = |v: &DVector<f64>| v + self.a_s_t(&self.a_s(v));
        let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(rhs.len()));
        let mut r = rhs - op(&x);
        let mut z = r.component_div(diag);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let target = 1e-10 * rhs.norm().max(1e-300);
        for _ in 0..rhs.len().max(50) {
            if r.norm() <= target {
                break;
            }
            let ap = op(&p);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            z = r.component_div(diag);
            let rz_new = r.dot(&z);
            p = &z + &p * (rz_new / rz);
            rz = rz_new;
        }
        x
    }

    fn project_cone(&self, v: &mut DVector<f64>) {
        let (mats, _) = self.smat(v);
        let projected: Vec<DMatrix<f64>> = mats
            .into_iter()
            .map(project_psd)
            .collect();
        let sv = self.svec(&projected);
        let lp_off = self.lp_off();
        v.rows_mut(0, lp_off).copy_from(&sv.rows(0, lp_off));
        for k in lp_off..self.nk {
            v[k] = v[k].max(0.0);
        }
    }

    fn run(&self) -> Result<AdmmOut, SdpError> {
        let m = self.sf.m;
        let nk = self.nk;
        let alpha = self.settings.alpha;
        let tol = self.settings.tol;

        // u = (x, y, tau), v = (r, s, kappa); x is our dual y, y is svec(X), s is svec(Z).
        let mut ux = DVector::zeros(m);
        let mut uy = DVector::zeros(nk);
        let mut ut = 1.0;
        let mut vr = DVector::zeros(m);
        let mut vs = DVector::zeros(nk);
        let mut vk = 1.0;

        let un = &self.un;
        let obj_scale = un.sb * un.sc;
        let mut last_err = f64::INFINITY;
        let mut growing = 0;
        let mut warm: Option<DVector<f64>> = None;
        let mut status = Status::Inaccurate;
        let mut iterations = self.settings.max_iters;
        let mut residuals = Residuals::default();

        for it in 0..self.settings.max_iters {
            // u~ = (I + Q)^{-1} (u + v)
            let wx = &ux + &vr;
            let wy = &uy + &vs;
            let wt = ut + vk;
            let (zx, zs) = self.solve_m(&wx, &wy, warm.as_ref());
            warm = Some(zx.clone());
            let tau_t = (wt + self.h_x.dot(&zx) + self.h_s.dot(&zs)) / (1.0 + self.hg);
            let tx = zx - &self.g_x * tau_t;
            let ty = zs - &self.g_s * tau_t;

            // Relaxed projection step.
            let rx = &tx * alpha + &ux * (1.0 - alpha);
            let ry = &ty * alpha + &uy * (1.0 - alpha);
            let rt = alpha * tau_t + (1.0 - alpha) * ut;
            let nx = &rx - &vr;
            let mut ny = &ry - &vs;
            self.project_cone(&mut ny);
            let nt = (rt - vk).max(0.0);

            vr += &nx - &rx;
            vs += &ny - &ry;
            vk += nt - rt;
            ux = nx;
            uy = ny;
            ut = nt;

            if !ut.is_finite() || !uy.iter().all(|v| v.is_finite()) {
                return Err(SdpError::Diverged {
                    iterations: it,
                    diagnostics: "non-finite iterate".into(),
                });
            }

            // Residuals in terms of the original conic pair.
            let tau = ut.max(1e-300);
            let ax = self.a_s_t(&uy);
            let aty = self.a_s(&ux);
            let pobj = self.h_s.dot(&uy);
            let dobj = -self.h_x.dot(&ux);
            let pres = (&ax + &self.h_x * ut).component_mul(&un.r).norm() * un.sb / tau;
            let dres = (&aty + &vs - &self.h_s * ut).norm() * un.sc / tau;
            let (po, dob) = (obj_scale * pobj / tau, obj_scale * dobj / tau);
            residuals = Residuals {
                primal: pres / (1.0 + un.b_norm),
                dual: dres / (1.0 + un.c_norm),
                gap: (po - dob).abs() / (1.0 + po.abs()),
            };
            let err = residuals.max();
            if it % 500 == 0 {
                debug!(
                    "admm it {it}: pobj {po:.6e} dobj {dob:.6e} pres {:.2e} dres {:.2e} gap {:.2e} tau {ut:.2e} kappa {vk:.2e}",
                    residuals.primal, residuals.dual, residuals.gap
                );
            }
            if err <= tol {
                status = Status::Optimal;
                iterations = it + 1;
                break;
            }

            // Certificates on the unnormalized iterate.
            if dobj > 0.0 && (&aty + &vs).norm() / dobj < tol && ut < 1e-6 * vk.max(1e-300) {
                status = Status::Infeasible;
                iterations = it + 1;
                break;
            }
            if pobj < 0.0 && ax.norm() / (-pobj) < tol && ut < 1e-6 * vk.max(1e-300) {
                status = Status::Unbounded;
                iterations = it + 1;
                break;
            }

            if err > last_err {
                growing += 1;
                if growing >= self.settings.divergence_window {
                    return Err(SdpError::Diverged {
                        iterations: it + 1,
                        diagnostics: format!(
                            "residual grew for {growing} consecutive iterations (last {err:.3e}, tau {ut:.3e}, kappa {vk:.3e})"
                        ),
                    });
                }
            } else {
                growing = 0;
            }
            last_err = err;
        }

        let tau = if ut > 0.0 { ut } else { 1.0 };
        let (x_psd, x_lp) = self.smat(&(&uy / tau));
        Ok(AdmmOut {
            status,
            x_psd,
            x_lp,
            y: &ux / tau,
            pobj: self.h_s.dot(&uy) / tau,
            dobj: -self.h_x.dot(&ux) / tau,
            residuals,
            iterations,
        })
    }
}

/// `(A A')_ij = <A_i, A_j>`.
/// Projection onto the PSD cone. The matrix is split into the connected
/// components of its sparsity graph first; `SymmetricEigen` can return NaN on
/// large matrices that are mostly zero, and small components are cheaper anyway.
pub(crate) fn project_psd(x: DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if x[(i, j)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut comps: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    if comps.len() == 1 {
        return project_dense(x);
    }
    let mut out = DMatrix::zeros(n, n);
    for idx in comps.values() {
        if idx.len() == 1 {
            let i = idx[0];
            out[(i, i)] = x[(i, i)].max(0.0);
            continue;
        }
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| x[(idx[a], idx[b])]);
        let p = project_dense(sub);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(i, j)] = p[(a, b)];
            }
        }
    }
    out
}

fn project_dense(x: DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut e = SymmetricEigen::new(x.clone());
    let mut shift = 0.0;
    if !e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|v| v.is_finite()) {
        shift = x.norm().max(1.0);
        e = SymmetricEigen::new(&x + DMatrix::identity(n, n) * shift);
    }
    let mut vals = e.eigenvalues.add_scalar(-shift);
    if shift == 0.0 && vals.iter().all(|&l| l >= 0.0) {
        return x;
    }
    vals.apply(|l| *l = l.max(0.0));
    let q = &e.eigenvectors;
    let mut scaled = q.clone();
    for (j, l) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*l);
    }
    scaled * q.transpose()
}

fn gram(sf: &StdForm) -> DMatrix<f64> {
    use std::collections::HashMap;
    let m = sf.m;
    let mut g = DMatrix::zeros(m, m);
    for blk in &sf.psd {
        let mut by_entry: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
        for (i, ents) in &blk.rows {
            for &(p, q, v) in ents {
                by_entry.entry((p, q)).or_default().push((*i, v));
            }
        }
        for ((p, q), list) in by_entry {
            let w = if p == q { 1.0 } else { 2.0 };
            for &(i, vi) in &list {
                for &(j, vj) in &list {
                    g[(i, j)] += w * vi * vj;
                }
            }
        }
    }
    for col in &sf.lp_cols {
        for &(i, vi) in col {
            for &(j, vj) in col {
                g[(i, j)] += vi * vj;
            }
        }
    }
    g
}

fn gram_diag(sf: &StdForm) -> DVector<f64> {
    DVector::from_iterator(sf.m, sf.row_norms().into_iter().map(|n| n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BlockKind, Constraint, Sense};

    #[test]
    fn trace_toy() {
        let mut p = SdpProblem::new(Sense::Min);
        let x = p.add_block("X", 2, BlockKind::Psd);
        p.add_objective(x, 0, 0, 1.0);
        p.add_objective(x, 1, 1, 1.0);
        p.add_objective(x, 0, 1, 0.5);
        p.add_constraint(Constraint::eq(1.0).with(x, 0, 0, 1.0));
        p.add_constraint(Constraint::eq(2.0).with(x, 1, 1, 1.0));
        // min 3 + X01 with X01 >= -sqrt(2)
        let sol = solve_splitting(&p, 1e-6).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - (3.0 - 2f64.sqrt())).abs() < 1e-4, "{}", sol.objective);
    }

    #[test]
    fn cg_path_matches_dense_path() {
        let mut p = SdpProblem::new(Sense::Max);
        let x = p.add_block("X", 3, BlockKind::Psd);
        let d = p.add_block("d", 2, BlockKind::Diagonal);
        p.add_objective(x, 0, 1, 1.0);
        p.add_objective(x, 1, 2, 1.0);
        p.add_objective(d, 0, 0, -1.0);
        p.add_constraint(
            Constraint::eq(1.0)
                .with(x, 0, 0, 1.0)
                .with(x, 1, 1, 1.0)
                .with(x, 2, 2, 1.0),
        );
        p.add_constraint(Constraint::le(0.3).with(x, 0, 2, 1.0).with(d, 1, 1, 1.0));
        p.add_constraint(Constraint::eq(0.1).with(d, 0, 0, 1.0));
        let dense = solve_splitting(&p, 1e-6).unwrap();
        let cg = solve_splitting_with(
            &p,
            &SplittingSettings {
                tol: 1e-6,
                dense_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(dense.status, Status::Optimal);
        assert_eq!(cg.status, Status::Optimal);
        assert!((dense.objective - cg.objective).abs() < 1e-4);
    }
    #[test]
    fn component_projection_matches_full_projection() {
        // Two interleaved 3x3 blocks, one isolated negative diagonal entry and
        // an all-zero row.
        let n = 8;
        let mut x = DMatrix::zeros(n, n);
        let a = [0, 2, 5];
        let b = [1, 4, 6];
        let va = [[1.0, 2.0, -0.5], [2.0, -1.0, 0.3], [-0.5, 0.3, 0.2]];
        let vb = [[-2.0, 0.1, 0.7], [0.1, 0.5, -1.5], [0.7, -1.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                x[(a[i], a[j])] = va[i][j];
                x[(b[i], b[j])] = vb[i][j];
            }
        }
        x[(3, 3)] = -0.4;
        let got = project_psd(x.clone());
        let e = SymmetricEigen::new(x);
        let vals = e.eigenvalues.map(|l| l.max(0.0));
        let want = &e.eigenvectors * DMatrix::from_diagonal(&vals) * e.eigenvectors.transpose();
        assert!((&got - &want).amax() < 1e-12);
        assert!((project_psd(got.clone()) - &got).amax() < 1e-12);
    }

    #[test]
    fn sparse_off_diagonal_projection_is_finite() {
        let n = 600;
        let mut x = DMatrix::zeros(n, n);
        for k in 0..40 {
            let (i, j) = (7 * k % n, (13 * k + 300) % n);
            x[(i, j)] = 0.01 * (k as f64 + 1.0);
            x[(j, i)] = x[(i, j)];
        }
        let p = project_psd(x);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!(SymmetricEigen::new(p).eigenvalues.min() > -1e-12);
    }
}
