use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rqlab_core::bellnet::{
    behavior_from_strategy, bell_score, build_optimal_complex_strategy, complex_optimum, seesaw, Strategy,
    LEN,
};
use rqlab_core::hierarchy::*;
use rqlab_core::measures::dsep_two_rebit;
use rqlab_core::qmat::{eigh, spectral_map, DensityMatrix, Field, Operator};
use rqlab_sdp::{sdpa::read_sdpa_file, BlockKind};

const B_REAL: f64 = 7.66;

fn words_oracle(letters: u8, level: usize) -> BTreeSet<(usize, Vec<u8>)> {
    // Every word of length <= level (repeats allowed), reduced.
    let mut out = BTreeSet::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    out.insert((0, Vec::new()));
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &layer {
            for l in 1..=letters {
                let mut v = w.clone();
                v.push(l);
                let r = reduce(&v);
                out.insert((r.len(), r));
                next.push(v);
            }
        }
        layer = next;
    }
    out
}

#[test]
fn bases_match_brute_force_enumeration() {
    for (party, letters) in [(PartyLabel::Alice, 3u8), (PartyLabel::Charlie, 6u8)] {
        for level in 1..=3 {
            let b = build_basis(party, level).unwrap();
            let want: Vec<Vec<u8>> = words_oracle(letters, level).into_iter().map(|(_, w)| w).collect();
            assert_eq!(b.words, want, "{party:?} level {level}");
            assert!(b.words[0].is_empty());
            for (i, w) in b.words.iter().enumerate() {
                assert_eq!(b.index[w], i);
                assert!(w.windows(2).all(|p| p[0] != p[1]));
            }
        }
    }
    let sizes: Vec<usize> = [(PartyLabel::Alice, 1), (PartyLabel::Alice, 2), (PartyLabel::Charlie, 1), (PartyLabel::Charlie, 2)]
        .iter()
        .map(|&(p, n)| build_basis(p, n).unwrap().len())
        .collect();
    assert_eq!(sizes, vec![4, 10, 7, 37]);
    assert!(matches!(build_basis(PartyLabel::Charlie, 0), Err(HierarchyError::Level(..))));
}

#[test]
fn input_ranges() {
    assert!(matches!(build_moment_problem(1, -0.1, None), Err(HierarchyError::Epsilon(_))));
    assert!(matches!(build_moment_problem(1, 1.5, None), Err(HierarchyError::Epsilon(_))));
    assert!(matches!(build_moment_problem(3, 0.0, None), Err(HierarchyError::Level(..))));
}

#[test]
fn level_two_structure() {
    let mp = build_moment_problem(2, 0.1, None).unwrap();
    assert_eq!(mp.dim, 370);
    assert_eq!(mp.block_sizes(), vec![370, 370, 370, 370, 370, 740]);
    let sdp = mp.to_sdp();
    let psd: Vec<usize> = sdp.blocks.iter().filter(|b| b.kind == BlockKind::Psd).map(|b| b.size).collect();
    assert_eq!(psd, vec![370, 370, 370, 370, 370, 740]);
    let lin: Vec<_> = sdp.blocks.iter().filter(|b| b.kind == BlockKind::Diagonal).collect();
    assert_eq!(lin.len(), 1);
    assert_eq!(lin[0].size, LEN + 1);
    assert_eq!(sdp.constraints.len(), mp.num_vars);
    normalization_holds(&mp);
}

fn normalization_holds(mp: &MomentProblem) {
    let cls = |g: Gamma| &mp.classes[mp.class_of[Gamma::ALL.iter().position(|&h| h == g).unwrap()][0] as usize];
    let s = cls(Gamma::Sigma).value.clone();
    assert!(s.is_constant() && s.c == 1.0);
    let mut t = Affine::default();
    for b in 0..4 {
        t.add_scaled(&cls(Gamma::Tau(b)).value, 1.0);
    }
    assert!(t.terms.iter().all(|&(_, v)| v.abs() < 1e-15), "{t:?}");
    assert!((t.c - 1.0).abs() < 1e-15);
}

#[test]
fn budget_is_the_only_extra_linear_row() {
    for eps in [0.0, 0.3] {
        let mp = build_moment_problem(1, eps, None).unwrap();
        normalization_holds(&mp);
        let sdp = mp.to_sdp();
        let k = sdp.blocks.iter().position(|b| b.name == "linear").unwrap();
        let last = sdp.blocks[k].size - 1;
        // The budget row is the only diagonal entry with a constant 4 eps.
        let mut consts = 0;
        for (blk, m) in &sdp.objective {
            if *blk != k {
                continue;
            }
            for &(i, j, v) in m.entries() {
                assert_eq!(i, j);
                if i == last {
                    assert!((v - 4.0 * eps).abs() < 1e-15);
                    consts += 1;
                }
            }
        }
        assert_eq!(consts, usize::from(eps != 0.0));
    }
    let fixed = behavior_from_strategy(&build_optimal_complex_strategy()).unwrap();
    let mp = build_moment_problem(1, 0.0, Some(&fixed)).unwrap();
    assert_eq!(mp.mode, Mode::Feasibility);
    let sdp = mp.to_sdp();
    assert!(sdp.blocks.iter().all(|b| b.kind == BlockKind::Psd));
}

fn letter_ops(povms: &[Vec<Operator>]) -> Vec<Operator> {
    povms.iter().map(|e| e[0].clone()).collect()
}

fn word_op(letters: &[Operator], w: &[u8], d: usize) -> Operator {
    let mut m = Operator::identity(d, Field::Real);
    for &l in w {
        m = m.mul(&letters[l as usize - 1]);
    }
    m
}

/// Moment matrix of the operator `x` on A (x) C (or A (x) B (x) C with Bob's
/// element `bob`): entry `(r, c)` is `tr(x W_c^dagger W_r)` on both sides.
fn moments(mp: &MomentProblem, s: &Strategy, x: &Operator, bob: Option<&Operator>) -> DMatrix<f64> {
    let [da, _, dc] = s.dims();
    let nc = mp.charlie.len();
    let la = letter_ops(&s.alice);
    let lc = letter_ops(&s.charlie);
    let wa: Vec<Operator> = mp.alice.words.iter().map(|w| word_op(&la, w, da)).collect();
    let wc: Vec<Operator> = mp.charlie.words.iter().map(|w| word_op(&lc, w, dc)).collect();
    let mut g = DMatrix::zeros(mp.dim, mp.dim);
    for r in 0..mp.dim {
        for c in 0..mp.dim {
            let a = wa[c / nc].adjoint().mul(&wa[r / nc]);
            let cc = wc[c % nc].adjoint().mul(&wc[r % nc]);
            let op = match bob {
                Some(bb) => a.tensor(bb).tensor(&cc),
                None => a.tensor(&cc),
            };
            g[(r, c)] = x.trace_prod_re(&op);
        }
    }
    g
}

fn abs_op(m: &Operator) -> Operator {
    let (vals, vecs) = eigh(m).unwrap();
    spectral_map(&vals, &vecs, f64::abs)
}

fn real_strategy(seed: u64, iters: usize) -> Strategy {
    seesaw(Field::Real, [2, 4, 2], seed, iters).strategy
}

#[test]
fn classes_hold_on_explicit_real_strategies() {
    for (seed, iters) in [(3, 1), (7, 4), (11, 40)] {
        let s = real_strategy(seed, iters);
        let mp = build_moment_problem(1, 0.2, None).unwrap();
        let tau = s.state.partial_trace(&[0, 2]).unwrap();
        let rho_a = s.state.partial_trace(&[0]).unwrap();
        let rho_c = s.state.partial_trace(&[2]).unwrap();
        let sigma = rho_a.tensor(&rho_c);
        let diff = tau.op().sub(sigma.op());
        let m = abs_op(&diff);

        let mut mats = Vec::new();
        for b in 0..4 {
            mats.push((Gamma::Tau(b), moments(&mp, &s, s.state.op(), Some(&s.bob[b]))));
        }
        mats.push((Gamma::Sigma, moments(&mp, &s, sigma.op(), None)));
        mats.push((Gamma::M, moments(&mp, &s, &m, None)));
        mats.push((Gamma::N, moments(&mp, &s, &m, None)));

        // Every class is constant on the explicit moment matrices.
        let classes = mp.equality_classes();
        let at = |g: Gamma, r: usize, c: usize| mats.iter().find(|(h, _)| *h == g).unwrap().1[(r, c)];
        for entries in &classes {
            let (g0, r0, c0) = entries[0];
            let v0 = at(g0, r0, c0);
            for &(g, r, c) in entries {
                assert!((at(g, r, c) - v0).abs() < 1e-12, "{g:?} {} / {}", mp.index_label(r), mp.index_label(c));
            }
        }

        // Read the variables off and compare everything derived from them.
        let mut y = vec![0.0; mp.num_vars];
        for (cl, entries) in mp.classes.iter().zip(&classes) {
            if let [(k, 1.0)] = cl.value.terms[..] {
                if cl.value.c == 0.0 {
                    let (g, r, c) = entries[0];
                    y[k] = at(g, r, c);
                }
            }
        }
        for (g, want) in &mats {
            assert!((mp.gamma_at(*g, &y) - want).amax() < 1e-12, "{g:?}");
        }
        let beh = behavior_from_strategy(&s).unwrap();
        let got = mp.behavior_at(&y);
        for (a, b) in got.iter().zip(beh.raw()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((mp.objective.eval(&y) - bell_score(&beh).total).abs() < 1e-10);

        // The point satisfies every LMI block.
        for (_, g) in &mats[..5] {
            assert!(g.clone().symmetric_eigen().eigenvalues.min() > -1e-10);
        }
        let d = mp.dim;
        let mut big = DMatrix::zeros(2 * d, 2 * d);
        let cross = mats[..4].iter().fold(DMatrix::zeros(d, d), |acc, (_, g)| acc + g) - &mats[4].1;
        big.view_mut((0, 0), (d, d)).copy_from(&mats[5].1);
        big.view_mut((d, d), (d, d)).copy_from(&mats[6].1);
        big.view_mut((0, d), (d, d)).copy_from(&cross);
        big.view_mut((d, 0), (d, d)).copy_from(&cross.transpose());
        assert!(big.symmetric_eigen().eigenvalues.min() > -1e-10);
        let budget = mats[5].1[(0, 0)] + mats[6].1[(0, 0)];
        let tn = rqlab_core::qmat::trace_norm(&diff).unwrap();
        assert!((budget - 2.0 * tn).abs() < 1e-12);
    }
}

#[test]
fn level_one_bounds() {
    let grid = [0.0, 0.1, 0.3, 0.5];
    let mut bounds = Vec::new();
    for eps in grid {
        let mp = build_moment_problem(1, eps, None).unwrap();
        let r = solve_hierarchy(&mp, &Backend::Interior, 1e-8).unwrap();
        let b = r.bound.unwrap();
        assert!(r.residuals.unwrap().max() <= 1e-5);
        bounds.push(b);

        // Solver output: collapsed classes agree by construction and the blocks are PSD.
        for g in Gamma::ALL {
            let m = mp.gamma_at(g, &r.y);
            assert!((&m - m.transpose()).amax() == 0.0);
            if !matches!(g, Gamma::M | Gamma::N) {
                assert!(m.symmetric_eigen().eigenvalues.min() > -1e-5, "{g:?}");
            }
        }
        let p = mp.behavior_at(&r.y);
        assert!(p.iter().all(|&v| v > -1e-6));
        let beh = rqlab_core::bellnet::Behavior::from_raw(p).unwrap();
        assert!((bell_score(&beh).total - b).abs() < 1e-5);
    }
    assert!((B_REAL..=12.0).contains(&bounds[0]), "{bounds:?}");
    for w in bounds.windows(2) {
        assert!(w[1] >= w[0] - 1e-5, "{bounds:?}");
    }
    assert!(bounds[3] >= complex_optimum() - 1e-4, "{bounds:?}");
    let r = solve_hierarchy(&build_moment_problem(1, 0.5, None).unwrap(), &Backend::Interior, 1e-8).unwrap();
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for k in ["level", "eps", "bound", "backend", "residuals"] {
        assert!(json.get(k).is_some(), "{k}");
    }
}

#[test]
fn bound_is_sound_for_real_strategies() {
    for (seed, iters) in [(5, 2), (21, 60)] {
        let s = real_strategy(seed, iters);
        let score = bell_score(&behavior_from_strategy(&s).unwrap()).total;
        let tau = s.state.partial_trace(&[0, 2]).unwrap();
        let eps0 = dsep_two_rebit(&tau).unwrap().distance;
        let mp = build_moment_problem(1, (eps0 + 1e-6).min(1.0), None).unwrap();
        let bound = solve_hierarchy(&mp, &Backend::Interior, 1e-8).unwrap().bound.unwrap();
        assert!(score <= bound + 1e-6, "seed {seed}: score {score} eps {eps0} bound {bound}");
    }
    // A product strategy has eps0 = 0.
    let mut s = real_strategy(9, 3);
    let parts: Vec<DensityMatrix> = (0..3).map(|k| s.state.partial_trace(&[k]).unwrap()).collect();
    s.state = parts[0].tensor(&parts[1]).tensor(&parts[2]);
    let score = bell_score(&behavior_from_strategy(&s).unwrap()).total;
    let tau = s.state.partial_trace(&[0, 2]).unwrap();
    assert!(dsep_two_rebit(&tau).unwrap().distance < 1e-6);
    let bound = solve_hierarchy(&build_moment_problem(1, 1e-6, None).unwrap(), &Backend::Interior, 1e-8)
        .unwrap()
        .bound
        .unwrap();
    assert!(score <= bound + 1e-6);
}

#[test]
fn feasibility_mode() {
    let fixed = behavior_from_strategy(&build_optimal_complex_strategy()).unwrap();
    let mp = build_moment_problem(1, 0.5, Some(&fixed)).unwrap();
    assert_eq!(mp.p_map.iter().filter(|e| e.is_constant()).count(), LEN);
    for (e, v) in mp.p_map.iter().zip(fixed.raw()) {
        assert!((e.c - v).abs() < 1e-12);
    }
    let r = solve_hierarchy(&mp, &Backend::Interior, 1e-8).unwrap();
    let min_eps = r.bound.unwrap();
    assert!(min_eps <= 0.5, "{min_eps}");
    assert!(min_eps >= -1e-5, "{min_eps}");

    let mut bad = fixed.raw().to_vec();
    bad[0] = -0.2;
    let bad = rqlab_core::bellnet::Behavior::from_raw(bad).unwrap();
    assert!(matches!(build_moment_problem(1, 0.0, Some(&bad)), Err(HierarchyError::NegativePin(_))));
}

#[test]
fn level_two_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("level2.dat-s");
    let fixed = behavior_from_strategy(&build_optimal_complex_strategy()).unwrap();
    for pin in [None, Some(&fixed)] {
        let mp = build_moment_problem(2, 0.0, pin).unwrap();
        let r = solve_hierarchy(&mp, &Backend::Export(path.clone()), 1e-3).unwrap();
        assert!(r.bound.is_none());
        assert_eq!(r.path.as_deref(), Some(path.to_str().unwrap()));
        let back = read_sdpa_file(&path).unwrap();
        let sdp = mp.to_sdp();
        assert_eq!(back.constraints.len(), sdp.constraints.len());
        let sizes = |p: &rqlab_sdp::SdpProblem| p.blocks.iter().map(|b| (b.size, b.kind)).collect::<Vec<_>>();
        assert_eq!(sizes(&back), sizes(&sdp));
        let nnz = |p: &rqlab_sdp::SdpProblem| p.constraints.iter().map(|c| c.terms.iter().map(|t| t.1.nnz()).sum::<usize>()).sum::<usize>();
        assert_eq!(nnz(&back), nnz(&sdp));
        for (a, b) in back.constraints.iter().zip(&sdp.constraints) {
            assert!((a.rhs - b.rhs).abs() <= 1e-15 * b.rhs.abs().max(1.0));
        }
    }
}

/// Hours on one core; run with `--ignored` to attempt the level-2 value.
#[test]
#[ignore]
fn level_two_splitting_bound() {
    let mp = build_moment_problem(2, 0.0, None).unwrap();
    let r = solve_hierarchy(&mp, &Backend::Splitting, 1e-3).unwrap();
    let b = r.bound.unwrap();
    assert!((b - B_REAL).abs() <= 0.1, "{b}");
}
