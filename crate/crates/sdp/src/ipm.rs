//! Dense primal-dual interior-point method.
//!
//! Infeasible-start path following with Nesterov-Todd scaling, a dense Schur
//! complement and Mehrotra's predictor-corrector. Each iteration costs one
//! Cholesky factorization of the `m x m` Schur matrix, so this solver is meant
//! for problems with at most a few thousand constraints and small blocks.

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::standard::StdForm;
use crate::{Residuals, SdpError, SdpProblem, SdpSolution, Status};

#[derive(Clone, Debug)]
pub struct IpmSettings {
    /// Target for the relative primal/dual residuals and duality gap.
    pub tol: f64,
    pub max_iters: usize,
    /// Largest accepted sum of block sides.
    pub cap: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        IpmSettings {
            tol: 1e-8,
            max_iters: 100,
            cap: 600,
            step_fraction: 0.98,
        }
    }
}

pub fn solve_interior_point(p: &SdpProblem, tol: f64) -> Result<SdpSolution, SdpError> {
    solve_interior_point_with(
        p,
        &IpmSettings {
            tol,
            ..IpmSettings::default()
        },
    )
}

pub fn solve_interior_point_with(
    p: &SdpProblem,
    settings: &IpmSettings,
) -> Result<SdpSolution, SdpError> {
    let size = p.block_sides();
    if size > settings.cap {
        return Err(SdpError::TooLarge {
            size,
            cap: settings.cap,
        });
    }
    let sf = StdForm::from_problem(p)?;
    Ok(Ipm::new(&sf, settings).run())
}

/// Upper-and-lower expanded coefficient lists per PSD block, for the Schur matrix.
type FullRows = Vec<(usize, Vec<(usize, usize, f64)>)>;

struct PsdScaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    lam: DVector<f64>,
}

struct LpScaling {
    /// `sqrt(x / z)`: the 1-d analogue of the NT point.
    w: DVector<f64>,
    lam: DVector<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    dzl: DVector<f64>,
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
    zl: DVector<f64>,
}

struct Ipm<'a> {
    sf: &'a StdForm,
    settings: &'a IpmSettings,
    full: Vec<FullRows>,
    b_norm: f64,
    c_norm: f64,
}

impl<'a> Ipm<'a> {
    fn new(sf: &'a StdForm, settings: &'a IpmSettings) -> Self {
        let full = sf
            .psd
            .iter()
            .map(|blk| {
                blk.rows
                    .iter()
                    .map(|(i, ents)| {
                        let mut f = Vec::with_capacity(2 * ents.len());
                        for &(p, q, v) in ents {
                            f.push((p, q, v));
                            if p != q {
                                f.push((q, p, v));
                            }
                        }
                        (*i, f)
                    })
                    .collect()
            })
            .collect();
        Ipm {
            sf,
            settings,
            full,
            b_norm: sf.b.norm(),
            c_norm: sf.c_norm(),
        }
    }

    fn initial_point(&self) -> Iterate {
        let sf = self.sf;
        let row_norms = sf.row_norms();
        let mut x = Vec::with_capacity(sf.psd.len());
        let mut z = Vec::with_capacity(sf.psd.len());
        for blk in &sf.psd {
            let n = blk.n as f64;
            let mut ratio: f64 = 0.0;
            let mut amax: f64 = 0.0;
            for (i, ents) in &blk.rows {
                let na = ents
                    .iter()
                    .map(|&(p, q, v)| if p == q { v * v } else { 2.0 * v * v })
                    .sum::<f64>()
                    .sqrt();
                ratio = ratio.max((1.0 + sf.b[*i].abs()) / (1.0 + na));
                amax = amax.max(na);
            }
            let xi = 10f64.max(n.sqrt()).max(n * ratio);
            let eta = 10f64.max(n.sqrt()).max(amax).max(blk.c.norm());
            x.push(DMatrix::identity(blk.n, blk.n) * xi);
            z.push(DMatrix::identity(blk.n, blk.n) * eta);
        }
        let nl = sf.lp_len();
        let (mut xi, mut eta) = (10f64.max((nl as f64).sqrt()), 10f64.max((nl as f64).sqrt()));
        for (k, col) in sf.lp_cols.iter().enumerate() {
            for &(i, v) in col {
                xi = xi.max((1.0 + sf.b[i].abs()) / (1.0 + v.abs()));
                eta = eta.max(v.abs()).max(row_norms[i].min(v.abs() * 10.0));
            }
            eta = eta.max(sf.lp_c[k].abs());
        }
        Iterate {
            x,
            xl: DVector::from_element(nl, xi),
            y: DVector::zeros(sf.m),
            z,
            zl: DVector::from_element(nl, eta),
        }
    }

    fn run(&self) -> SdpSolution {
        let sf = self.sf;
        let tol = self.settings.tol;
        let nu = sf.degree().max(1) as f64;
        let mut it = self.initial_point();

        let mut best: Option<(f64, Iterate, Residuals, f64, f64)> = None;
        let mut status = Status::IterLimit;
        let mut iterations = 0;
        let mut stall = 0;

        for k in 0..self.settings.max_iters {
            iterations = k;
            let ax = sf.apply(&it.x, &it.xl);
            let rp = &sf.b - &ax;
            let (aty, atyl) = sf.adjoint(&it.y);
            let rd: Vec<DMatrix<f64>> = sf
                .psd
                .iter()
                .zip(it.z.iter().zip(&aty))
                .map(|(blk, (z, a))| &blk.c - z - a)
                .collect();
            let rdl = &sf.lp_c - &it.zl - &atyl;

            let pobj = sf.objective(&it.x, &it.xl);
            let dobj = sf.b.dot(&it.y);
            let xz = inner(&it.x, &it.z) + it.xl.dot(&it.zl);
            let res = Residuals {
                primal: rp.norm() / (1.0 + self.b_norm),
                dual: (rd.iter().map(|m| m.norm_squared()).sum::<f64>() + rdl.norm_squared())
                    .sqrt()
                    / (1.0 + self.c_norm),
                gap: (pobj - dobj).abs().max(xz.abs()) / (1.0 + pobj.abs()),
            };
            let err = res.max();
            debug!(
                "ipm it {k}: pobj {pobj:.10e} dobj {dobj:.10e} pinf {:.2e} dinf {:.2e} gap {:.2e}",
                res.primal, res.dual, res.gap
            );

            let improved = best.as_ref().is_none_or(|b| err < b.0);
            if improved {
                if best.as_ref().is_some_and(|b| err > 0.5 * b.0) {
                    stall += 1;
                } else {
                    stall = 0;
                }
                best = Some((err, clone_iterate(&it), res, pobj, dobj));
            } else {
                stall += 1;
            }
            if err <= tol {
                status = Status::Optimal;
                break;
            }
            if stall >= 8 {
                status = Status::Inaccurate;
                break;
            }
            if let Some(s) = self.infeasibility(&it, &aty, &atyl, &ax, pobj, dobj) {
                status = s;
                best = Some((err, clone_iterate(&it), res, pobj, dobj));
                break;
            }

            let Some((ps, ls)) = self.scaling(&it) else {
                status = Status::Inaccurate;
                break;
            };
            let Some(chol) = self.schur(&ps, &ls) else {
                status = Status::Inaccurate;
                break;
            };

            // Predictor: aim for zero complementarity.
            let h_pred: Vec<DMatrix<f64>> = ps
                .iter()
                .map(|s| DMatrix::from_diagonal(&(-&s.lam)))
                .collect();
            let hl_pred = -&ls.lam;
            let pred = self.direction(&ps, &ls, &chol, &rp, &rd, &rdl, &h_pred, &hl_pred);
            let (sdx, sdxl, sdz, sdzl) = scaled(&ps, &ls, &pred);
            let ap = max_step_all(&ps, &ls, &sdx, &sdxl).min(1.0);
            let ad = max_step_all(&ps, &ls, &sdz, &sdzl).min(1.0);
            let mu = xz / nu;
            let mu_aff = {
                let mut acc = 0.0;
                for (s, (dx, dz)) in ps.iter().zip(sdx.iter().zip(&sdz)) {
                    let lx = DMatrix::from_diagonal(&s.lam) + dx * ap;
                    let lz = DMatrix::from_diagonal(&s.lam) + dz * ad;
                    acc += lx.dot(&lz);
                }
                let lx = &ls.lam + &sdxl * ap;
                let lz = &ls.lam + &sdzl * ad;
                acc + lx.dot(&lz)
            } / nu;
            let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);

            // Corrector with the second-order term.
            let target = sigma * mu;
            let h_corr: Vec<DMatrix<f64>> = ps
                .iter()
                .zip(sdx.iter().zip(&sdz))
                .map(|(s, (dx, dz))| {
                    let n = s.lam.len();
                    let prod = dx * dz;
                    let mut h = DMatrix::zeros(n, n);
                    for j in 0..n {
                        for i in 0..n {
                            let mut r = -0.5 * (prod[(i, j)] + prod[(j, i)]);
                            if i == j {
                                r += target - s.lam[i] * s.lam[i];
                            }
                            h[(i, j)] = 2.0 * r / (s.lam[i] + s.lam[j]);
                        }
                    }
                    h
                })
                .collect();
            let hl_corr = DVector::from_iterator(
                ls.lam.len(),
                (0..ls.lam.len()).map(|i| {
                    (target - ls.lam[i] * ls.lam[i] - sdxl[i] * sdzl[i]) / ls.lam[i]
                }),
            );
            let dir = self.direction(&ps, &ls, &chol, &rp, &rd, &rdl, &h_corr, &hl_corr);
            let (sdx, sdxl, sdz, sdzl) = scaled(&ps, &ls, &dir);
            let gamma = self.settings.step_fraction;
            let ap = (gamma * max_step_all(&ps, &ls, &sdx, &sdxl)).min(1.0);
            let ad = (gamma * max_step_all(&ps, &ls, &sdz, &sdzl)).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                status = Status::Inaccurate;
                break;
            }
            for (x, dx) in it.x.iter_mut().zip(&dir.dx) {
                *x += dx * ap;
                symmetrize(x);
            }
            it.xl += &dir.dxl * ap;
            it.y += &dir.dy * ad;
            for (z, dz) in it.z.iter_mut().zip(&dir.dz) {
                *z += dz * ad;
                symmetrize(z);
            }
            it.zl += &dir.dzl * ad;
            iterations = k + 1;
        }

        let (_, it, residuals, pobj, dobj) = best.expect("at least one iteration");
        let sign = sf.sign;
        SdpSolution {
            status,
            objective: sign * pobj,
            dual_objective: sign * dobj,
            primal: sf.recover_primal(&it.x, &it.xl),
            dual: it.y.iter().map(|v| sign * v).collect(),
            residuals,
            iterations,
            tol: self.settings.tol,
        }
    }

    /// Farkas-type certificates on the current iterate.
    fn infeasibility(
        &self,
        it: &Iterate,
        aty: &[DMatrix<f64>],
        atyl: &DVector<f64>,
        ax: &DVector<f64>,
        pobj: f64,
        dobj: f64,
    ) -> Option<Status> {
        let tol = self.settings.tol.max(1e-10);
        // Primal infeasible: b'y > 0 with A'y <= 0.
        if dobj > 1e6 * (1.0 + self.c_norm) {
            let mut worst: f64 = 0.0;
            for a in aty {
                let e = SymmetricEigen::new(a.clone()).eigenvalues;
                worst = worst.max(e.max());
            }
            if atyl.len() > 0 {
                worst = worst.max(atyl.max());
            }
            if worst / dobj < tol {
                return Some(Status::Infeasible);
            }
        }
        // Dual infeasible: <C,X> < 0 with A(X) = 0, X psd.
        if pobj < -1e6 * (1.0 + self.b_norm) {
            let _ = it;
            if ax.norm() / (-pobj) < tol {
                return Some(Status::Unbounded);
            }
        }
        None
    }

    fn scaling(&self, it: &Iterate) -> Option<(Vec<PsdScaling>, LpScaling)> {
        let mut ps = Vec::with_capacity(it.x.len());
        for (x, z) in it.x.iter().zip(&it.z) {
            let lx = Cholesky::new(x.clone())?.l();
            let lz = Cholesky::new(z.clone())?.l();
            let svd = (lz.transpose() * &lx).svd(true, true);
            let v = svd.v_t?.transpose();
            let s = svd.singular_values;
            if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return None;
            }
            let n = s.len();
            let mut g = &lx * &v;
            let mut ginv = v.transpose();
            for j in 0..n {
                let f = s[j].sqrt();
                g.column_mut(j).scale_mut(1.0 / f);
                ginv.row_mut(j).scale_mut(f);
            }
            // ginv = S^{1/2} V' Lx^{-1}
            let ginv = lx
                .transpose()
                .solve_upper_triangular(&ginv.transpose())?
                .transpose();
            let w = &g * g.transpose();
            ps.push(PsdScaling { g, ginv, w, lam: s });
        }
        let w = it.xl.zip_map(&it.zl, |x, z| (x / z).sqrt());
        let lam = it.xl.zip_map(&it.zl, |x, z| (x * z).sqrt());
        if lam.iter().any(|v| !(v > &0.0)) {
            return None;
        }
        Some((ps, LpScaling { w, lam }))
    }

    /// Factorized Schur complement `M_ij = <A_i, W A_j W>`.
    fn schur(&self, ps: &[PsdScaling], ls: &LpScaling) -> Option<Cholesky<f64, Dyn>> {
        let m = self.sf.m;
        let mut mm = DMatrix::<f64>::zeros(m, m);
        for (rows, s) in self.full.iter().zip(ps) {
            let n = s.w.nrows();
            let w = s.w.as_slice();
            for a in 0..rows.len() {
                let (i, ei) = &rows[a];
                for (j, ej) in &rows[a..] {
                    let mut acc = 0.0;
                    for &(p, q, va) in ei {
                        for &(r, t, vb) in ej {
                            acc += va * vb * w[p + r * n] * w[t + q * n];
                        }
                    }
                    mm[(*i, *j)] += acc;
                    if i != j {
                        mm[(*j, *i)] += acc;
                    }
                }
            }
        }
        for (k, col) in self.sf.lp_cols.iter().enumerate() {
            let w2 = ls.w[k] * ls.w[k];
            for (a, &(i, vi)) in col.iter().enumerate() {
                for &(j, vj) in &col[a..] {
                    let v = vi * vj * w2;
                    mm[(i, j)] += v;
                    if i != j {
                        mm[(j, i)] += v;
                    }
                }
            }
        }
        let scale = (0..m).map(|i| mm[(i, i)]).fold(0.0, f64::max).max(1e-300);
        if let Some(c) = Cholesky::new(mm.clone()) {
            return Some(c);
        }
        for e in [1e-14, 1e-12, 1e-10] {
            let mut reg = mm.clone();
            for i in 0..m {
                reg[(i, i)] += e * scale;
            }
            if let Some(c) = Cholesky::new(reg) {
                debug!("schur regularized with {e:e}");
                return Some(c);
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        ps: &[PsdScaling],
        ls: &LpScaling,
        chol: &Cholesky<f64, Dyn>,
        rp: &DVector<f64>,
        rd: &[DMatrix<f64>],
        rdl: &DVector<f64>,
        h: &[DMatrix<f64>],
        hl: &DVector<f64>,
    ) -> Direction {
        let sf = self.sf;
        // T = G H G' - W Rd W
        let t: Vec<DMatrix<f64>> = ps
            .iter()
            .zip(h.iter().zip(rd))
            .map(|(s, (h, r))| &s.g * h * s.g.transpose() - &s.w * r * &s.w)
            .collect();
        let w2 = ls.w.component_mul(&ls.w);
        let tl = ls.w.component_mul(hl) - w2.component_mul(rdl);
        let at = sf.apply(&t, &tl);
        let rhs = rp - at;
        let dy = chol.solve(&rhs);
        let (a_dy, a_dyl) = sf.adjoint(&dy);
        let dz: Vec<DMatrix<f64>> = rd.iter().zip(&a_dy).map(|(r, a)| r - a).collect();
        let dzl = rdl - &a_dyl;
        let dx: Vec<DMatrix<f64>> = t
            .iter()
            .zip(ps.iter().zip(&a_dy))
            .map(|(t, (s, a))| {
                let mut d = t + &s.w * a * &s.w;
                symmetrize(&mut d);
                d
            })
            .collect();
        let dxl = &tl + w2.component_mul(&a_dyl);
        Direction {
            dx,
            dxl,
            dy,
            dz,
            dzl,
        }
    }
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        x: it.x.clone(),
        xl: it.xl.clone(),
        y: it.y.clone(),
        z: it.z.clone(),
        zl: it.zl.clone(),
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

type Scaled = (Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>, DVector<f64>);

fn scaled(ps: &[PsdScaling], ls: &LpScaling, d: &Direction) -> Scaled {
    let sdx = ps
        .iter()
        .zip(&d.dx)
        .map(|(s, dx)| {
            let mut m = &s.ginv * dx * s.ginv.transpose();
            symmetrize(&mut m);
            m
        })
        .collect();
    let sdz = ps
        .iter()
        .zip(&d.dz)
        .map(|(s, dz)| {
            let mut m = s.g.transpose() * dz * &s.g;
            symmetrize(&mut m);
            m
        })
        .collect();
    let sdxl = d.dxl.component_div(&ls.w);
    let sdzl = d.dzl.component_mul(&ls.w);
    (sdx, sdxl, sdz, sdzl)
}

/// Largest `a` with `Lambda + a D` PSD in every block.
fn max_step_all(ps: &[PsdScaling], ls: &LpScaling, d: &[DMatrix<f64>], dl: &DVector<f64>) -> f64 {
    let mut step = f64::INFINITY;
    for (s, d) in ps.iter().zip(d) {
        let n = s.lam.len();
        let mut m = d.clone();
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] /= (s.lam[i] * s.lam[j]).sqrt();
            }
        }
        symmetrize(&mut m);
        let e = SymmetricEigen::new(m).eigenvalues.min();
        if e < 0.0 {
            step = step.min(-1.0 / e);
        }
    }
    for (l, v) in ls.lam.iter().zip(dl.iter()) {
        if *v < 0.0 {
            step = step.min(-l / v);
        }
    }
    step
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BlockKind, Constraint, Sense};

    fn trace_toy() -> SdpProblem {
        // min tr X  s.t.  X11 = 1, X22 = 2, X psd.
        let mut p = SdpProblem::new(Sense::Min);
        let x = p.add_block("X", 2, BlockKind::Psd);
        p.add_objective(x, 0, 0, 1.0);
        p.add_objective(x, 1, 1, 1.0);
        p.add_constraint(Constraint::eq(1.0).with(x, 0, 0, 1.0));
        p.add_constraint(Constraint::eq(2.0).with(x, 1, 1, 1.0));
        p
    }

    #[test]
    fn trace_toy_reaches_diag_one_two() {
        let sol = solve_interior_point(&trace_toy(), 1e-8).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-7);
        let x = &sol.primal[0];
        assert!((x[(0, 0)] - 1.0).abs() < 1e-7);
        assert!((x[(1, 1)] - 2.0).abs() < 1e-7);
        assert!(x[(0, 1)].abs() < 1e-6);
    }

    #[test]
    fn max_sense_and_lp_block() {
        // max x0 + 2 x1 s.t. x0 + x1 <= 1, x >= 0  -> 2
        let mut p = SdpProblem::new(Sense::Max);
        let d = p.add_block("x", 2, BlockKind::Diagonal);
        p.add_objective(d, 0, 0, 1.0);
        p.add_objective(d, 1, 1, 2.0);
        p.add_constraint(Constraint::le(1.0).with(d, 0, 0, 1.0).with(d, 1, 1, 1.0));
        let sol = solve_interior_point(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-7, "{}", sol.objective);
    }

    #[test]
    fn free_block_is_split() {
        // min t s.t. t - x = -3, x >= 0, t free  -> t = -3
        let mut p = SdpProblem::new(Sense::Min);
        let t = p.add_block("t", 1, BlockKind::Free);
        let x = p.add_block("x", 1, BlockKind::Diagonal);
        p.add_objective(t, 0, 0, 1.0);
        p.add_objective(x, 0, 0, 1.0);
        p.add_constraint(Constraint::eq(-3.0).with(t, 0, 0, 1.0).with(x, 0, 0, -1.0));
        let sol = solve_interior_point(&p, 1e-8).unwrap();
        assert!((sol.objective + 3.0).abs() < 1e-6, "{:?}", sol.objective);
        assert!((sol.primal[0][(0, 0)] + 3.0).abs() < 1e-6);
    }

    #[test]
    fn cap_is_enforced() {
        let mut p = SdpProblem::new(Sense::Min);
        p.add_block("X", 700, BlockKind::Psd);
        assert!(matches!(
            solve_interior_point(&p, 1e-8),
            Err(SdpError::TooLarge { .. })
        ));
    }

    #[test]
    fn infeasible_trace_is_detected() {
        let mut p = SdpProblem::new(Sense::Min);
        let x = p.add_block("X", 2, BlockKind::Psd);
        p.add_constraint(Constraint::eq(-1.0).with(x, 0, 0, 1.0).with(x, 1, 1, 1.0));
        let sol = solve_interior_point(&p, 1e-8).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }
}
