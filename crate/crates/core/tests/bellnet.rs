use proptest::prelude::*;
use rqlab_core::bellnet::*;
use rqlab_core::qmat::consts::basis_state;
use rqlab_core::qmat::{Field, Operator, RealMatrix};

fn proj(d: usize, i: usize) -> Operator {
    let mut m = RealMatrix::zeros(d, d);
    m[(i, i)] = 1.0;
    Operator::Real(m)
}

#[test]
fn optimal_strategy_reaches_quantum_maximum() {
    let s = build_optimal_complex_strategy();
    let p = behavior_from_strategy(&s).unwrap();
    assert!(ns_check(p.raw()).is_empty());
    let r = bell_score(&p);
    assert!((r.total - 6.0 * 2f64.sqrt()).abs() < 1e-9, "{}", r.total);
    for b in 0..NB {
        assert!((p.bob_marginal(b) - 0.25).abs() < 1e-12);
        for t in r.chsh_terms(b) {
            assert!((t - 0.25 * 2.0 * 2f64.sqrt()).abs() < 1e-9);
        }
    }
    assert!((r.per_b.iter().sum::<f64>() - r.total).abs() < 1e-10);
}

#[test]
fn frozen_charlie_signs_match_search() {
    assert_eq!(search_charlie_signs(), Some(CHARLIE_SIGNS));
}

#[test]
fn maximally_mixed_uniform_measurements_give_zero() {
    let s = uniform_strategy([2, 4, 2]);
    let p = behavior_from_strategy(&s).unwrap();
    assert!(p.raw().iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));
    assert_eq!(bell_score(&p).total, 0.0);
}

#[test]
fn product_basis_state_gives_hand_computed_behavior() {
    // |0000> with computational-basis measurements everywhere: a = +1, c = +1, b = 00.
    let mut s = uniform_strategy([2, 4, 2]);
    s.state = basis_state(vec![2, 4, 2], 0);
    s.alice = vec![vec![proj(2, 0), proj(2, 1)]; NX];
    s.charlie = vec![vec![proj(2, 0), proj(2, 1)]; NZ];
    s.bob = (0..4).map(|i| proj(4, i)).collect();
    let p = behavior_from_strategy(&s).unwrap();
    assert_eq!(p, deterministic_behavior([0; NX], 0, [0; NZ]));
    // b = 00: every coefficient of B_00 summed, which is 2 + 0 + 2 - 0 + 2 - 0 = 6.
    let r = bell_score(&p);
    let k = coefficients();
    let expected: f64 = k[0].iter().flatten().sum();
    assert_eq!(r.total, expected);
    assert_eq!(r.total, 6.0);
}

#[test]
fn deterministic_scores_never_exceed_twelve() {
    for b in 0..NB {
        for am in 0..8usize {
            for cm in 0..64usize {
                let a = [am & 1, am >> 1 & 1, am >> 2 & 1];
                let c = [0, 1, 2, 3, 4, 5].map(|z| cm >> z & 1);
                let t = bell_score(&deterministic_behavior(a, b, c)).total;
                assert!(t <= 12.0);
                assert!(t <= deterministic_max(b));
            }
        }
    }
}

#[test]
fn complex_seesaw_finds_optimum() {
    let t = std::time::Instant::now();
    let (best, _) = best_of_seeds(Field::Complex, [2, 4, 2], 0..50, 500);
    assert!((best.report.total - complex_optimum()).abs() < 1e-6, "{}", best.report.total);
    assert!(t.elapsed().as_secs_f64() < 60.0);
    let p = behavior_from_strategy(&best.strategy).unwrap();
    assert!(ns_check(p.raw()).is_empty());
    for b in 0..NB {
        let pb = p.bob_marginal(b);
        for t in best.report.chsh_terms(b) {
            assert!(t <= 2.0 * 2f64.sqrt() * pb + 1e-9);
        }
        for row in &best.report.correlators[b] {
            for s in row {
                assert!(s.abs() <= pb + 1e-12);
            }
        }
    }
}

#[test]
fn real_seesaw_with_joint_state_finds_optimum() {
    let (best, _) = best_of_seeds(Field::Real, [4, 4, 4], 0..50, 500);
    assert_eq!(best.strategy.state.field(), Field::Real);
    assert!((best.report.total - complex_optimum()).abs() < 1e-6, "{}", best.report.total);
}

#[test]
fn trivial_dimensions_reduce_to_deterministic_strategies() {
    let (best, _) = best_of_seeds(Field::Complex, [1, 1, 1], 0..8, 50);
    assert!(best.report.total <= 6.0 + 1e-12);
}

#[test]
fn json_roundtrips() {
    let s = build_optimal_complex_strategy();
    let back = rqlab_core::bellnet::Strategy::from_json(&s.to_json()).unwrap();
    assert!(back.state.op().max_abs_diff(s.state.op()) < 1e-15);
    let p = behavior_from_strategy(&s).unwrap();
    let q = Behavior::from_json(&p.to_json()).unwrap();
    assert_eq!(p, q);
}

fn random_behavior(w: Vec<f64>, mix: f64) -> Behavior {
    // Convex combination of deterministic local behaviors is always valid.
    let mut acc = Behavior::uniform().mix(&Behavior::uniform(), 1.0);
    for (i, wi) in w.iter().enumerate() {
        let a = [i % 2, i / 2 % 2, i / 4 % 2];
        let c = [i % 2, 0, i / 3 % 2, 1, i / 5 % 2, i % 3 % 2];
        let d = deterministic_behavior(a, i % 4, c);
        acc = acc.mix(&d, 1.0 - wi * mix);
    }
    acc
}

proptest! {
    #[test]
    fn score_is_linear(w in prop::collection::vec(0.0f64..1.0, 1..6), l in 0.0f64..1.0) {
        let p = random_behavior(w.clone(), 0.5);
        let q = build_optimal_complex_strategy();
        let q = behavior_from_strategy(&q).unwrap();
        let m = p.mix(&q, l);
        let lhs = bell_score(&m).total;
        let rhs = l * bell_score(&p).total + (1.0 - l) * bell_score(&q).total;
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(ns_check(m.raw()).is_empty());
    }

    #[test]
    fn relabeling_alice_flips_correlators(x in 0usize..3, w in prop::collection::vec(0.0f64..1.0, 1..4)) {
        let q = behavior_from_strategy(&build_optimal_complex_strategy()).unwrap();
        let p = random_behavior(w, 0.7).mix(&q, 0.5);
        let r = bell_score(&p);
        let s = bell_score(&p.relabel_alice(x));
        for b in 0..NB {
            for xx in 0..NX {
                for z in 0..NZ {
                    let f = if xx == x { -1.0 } else { 1.0 };
                    prop_assert!((s.correlators[b][xx][z] - f * r.correlators[b][xx][z]).abs() < 1e-15);
                }
            }
        }
        let k = coefficients();
        let expect: f64 = (0..NB)
            .map(|b| (0..NX).flat_map(|xx| (0..NZ).map(move |z| (xx, z)))
                .map(|(xx, z)| k[b][xx][z] * s.correlators[b][xx][z]).sum::<f64>())
            .sum();
        prop_assert!((s.total - expect).abs() < 1e-12);
    }
}
