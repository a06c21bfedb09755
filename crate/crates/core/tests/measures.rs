use proptest::prelude::*;
use rqlab_core::measures::*;
use rqlab_core::qmat::consts::*;
use rqlab_core::qmat::random::{real_state, seeded};
use rqlab_core::qmat::{DensityMatrix, Operator, RealMatrix};
use rqlab_sdp::sdpa::{read_sdpa, write_sdpa};
use rqlab_sdp::solve_interior_point;

fn rho_bar() -> DensityMatrix {
    let m = (phi_minus().op().as_real().unwrap() + psi_plus().op().as_real().unwrap()) * 0.5;
    DensityMatrix::real(vec![2, 2], m).unwrap()
}

fn real_pure(v: [f64; 4]) -> DensityMatrix {
    DensityMatrix::pure_real(vec![2, 2], &nalgebra::DVector::from_row_slice(&v)).unwrap()
}

/// Convex combination of `k` random real product states.
fn separable(rng: &mut impl rand::Rng, k: usize) -> DensityMatrix {
    let mut m = RealMatrix::zeros(4, 4);
    for _ in 0..k {
        let a = real_state(&[2], rng);
        let b = real_state(&[2], rng);
        m += a.tensor(&b).op().as_real().unwrap();
    }
    DensityMatrix::real(vec![2, 2], m / k as f64).unwrap()
}

#[test]
fn bell_states_all_at_half() {
    for s in [phi_plus(), phi_minus(), psi_plus(), psi_minus()] {
        let r = dsep_two_rebit(&s).unwrap();
        assert!((r.distance - 0.5).abs() < 1e-6, "{}", r.distance);
    }
}

#[test]
fn dind_bracket_for_self_tested_state() {
    let t = std::time::Instant::now();
    let b = dind_bounds(&rho_bar()).unwrap();
    assert!((b.lower - 0.5).abs() < 1e-5);
    assert!((b.upper - 0.5).abs() < 1e-5);
    assert!(t.elapsed().as_secs_f64() < 5.0);
    // For a pure maximally entangled input the product search settles at a
    // basis product state, 1/sqrt 2 away; I/4 is at 3/4.
    let b = dind_bounds(&phi_plus()).unwrap();
    assert!((b.lower - 0.5).abs() < 1e-5);
    assert!((b.upper - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5, "{}", b.upper);
}

#[test]
fn dind_for_product_state_is_zero() {
    let mut rng = seeded(11);
    let rho = real_state(&[2], &mut rng).tensor(&real_state(&[2], &mut rng));
    let b = dind_bounds(&rho).unwrap();
    assert!(b.lower.abs() < 1e-6);
    assert!(b.upper <= 1e-6, "{}", b.upper);
}

#[test]
fn pure_state_distances() {
    let r = pure_state_sep_distance(&phi_plus()).unwrap();
    assert!((r.value - 0.5).abs() < 1e-12 && r.exact);
    assert!(pure_state_sep_distance(&basis_state(vec![2, 2], 0)).unwrap().value.abs() < 1e-12);
    let t = std::f64::consts::PI / 8.0;
    let psi = real_pure([t.cos(), 0.0, 0.0, t.sin()]);
    let r = pure_state_sep_distance(&psi).unwrap();
    assert!((r.value - 2f64.sqrt() / 4.0).abs() < 1e-12);
    let d = dsep_two_rebit(&psi).unwrap().distance;
    assert!((r.value - d).abs() < 1e-5, "{} vs {d}", r.value);
    // Larger systems only give the bound.
    let big = DensityMatrix::pure_real(vec![3, 3], &nalgebra::DVector::from_fn(9, |i, _| if i % 4 == 0 { 1.0 / 3f64.sqrt() } else { 0.0 })).unwrap();
    let r = pure_state_sep_distance(&big).unwrap();
    assert!(!r.exact && (r.value - 1.0 / 3.0).abs() < 1e-12);
    assert!(pure_state_sep_distance(&rho_bar()).is_err());
}

#[test]
fn linear_bound_examples() {
    let e = |b: f64| linear_bound_epsilon(LinearBoundInputs::for_score(b)).unwrap();
    assert!((e(8.06) - 0.0236).abs() < 5e-5);
    assert_eq!(percent_one_decimal(e(8.06)), 2.4);
    assert_eq!(e(7.66), 0.0);
    assert!((e(8.09) - 0.0253).abs() < 5e-5);
    let bad = LinearBoundInputs {
        score: 1.0,
        set_sup: 1.0,
        all_sup: 1.0,
        all_inf: 1.0,
    };
    assert!(matches!(linear_bound_epsilon(bad), Err(MeasuresError::ZeroDenominator)));
}

#[test]
fn random_states_respect_range_and_ordering() {
    let mut rng = seeded(5);
    for k in 0..500 {
        let rho = if k % 5 == 0 { separable(&mut rng, 1 + k % 3) } else { real_state(&[2, 2], &mut rng) };
        let d = dsep_two_rebit(&rho).unwrap();
        assert!(d.distance <= 0.5 + 1e-6 && d.distance >= 0.0);
        assert!((d.witness.trace_distance(&rho) - d.distance).abs() < 1e-6);
        if k % 25 == 0 {
            let s = DindSettings {
                starts: 8,
                ..Default::default()
            };
            let (u, _, _) = dind_upper(&rho, &s).unwrap();
            assert!(d.distance <= u + 1e-6);
        }
    }
}

#[test]
fn ef_and_dsep_vanish_together() {
    let mut rng = seeded(6);
    for k in 0..200 {
        let rho = if k % 2 == 0 { separable(&mut rng, 1 + k % 4) } else { real_state(&[2, 2], &mut rng) };
        let ef = ef_two_rebit(&rho).unwrap();
        let d = dsep_two_rebit(&rho).unwrap().distance;
        // Both are functions of c = |tr rho (Y (x) Y)|: dsep = c / 2 and
        // ef = H((1 + sqrt(1 - c^2)) / 2), so they vanish together.
        let c = (rho.op().as_real().unwrap() * yy()).trace().abs();
        assert!((d - c / 2.0).abs() < 1e-6, "state {k}: dsep {d}, c {c}");
        let from_d = binary_entropy((1.0 + (1.0 - 4.0 * d * d).max(0.0).sqrt()) / 2.0);
        assert!((ef - from_d).abs() < 1e-5, "state {k}: ef {ef}, via dsep {from_d}");
        if k % 2 == 0 {
            assert!(ef < 1e-12 && d < 1e-6);
        } else {
            assert!(ef > 0.0 && d > 1e-6);
        }
    }
    let diag = DensityMatrix::real(vec![2, 2], RealMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[0.5, 0.0, 0.0, 0.5]))).unwrap();
    assert!(ef_two_rebit(&diag).unwrap().abs() < 1e-12);
}

#[test]
fn dsep_monotone_under_local_channels() {
    let r = monotonicity_harness(Measure::Dsep, FreeOp::LocalChannels, 200, 0).unwrap();
    assert_eq!(r.violations, 0, "{r:?}");
    let r = monotonicity_harness(Measure::Dsep, FreeOp::TraceAndReplace, 50, 1).unwrap();
    assert_eq!(r.violations, 0, "{r:?}");
}

#[test]
fn global_orthogonal_control_does_increase_dsep() {
    let r = monotonicity_harness(Measure::Dsep, FreeOp::GlobalOrthogonal, 200, 0).unwrap();
    assert!(r.violations > 0);
}

#[test]
fn dind_upper_after_trace_and_replace_is_zero() {
    let r = monotonicity_harness(Measure::DindUpper { starts: 4 }, FreeOp::TraceAndReplace, 20, 2).unwrap();
    assert_eq!(r.violations, 0, "{r:?}");
}

#[test]
fn trace_distance_data_processing() {
    let r = trace_distance_dpi(500, 3).unwrap();
    assert_eq!(r.violations, 0, "{r:?}");
}

#[test]
fn dsep_problem_survives_sdpa_roundtrip() {
    let p = dsep_problem(&rho_bar()).unwrap();
    let q = read_sdpa(&write_sdpa(&p).unwrap()).unwrap();
    let s = solve_interior_point(&q, 1e-9).unwrap();
    assert!((s.objective - 0.5).abs() < 1e-6, "{}", s.objective);
    let s = solve_interior_point(&dsep_problem(&basis_state(vec![2, 2], 0)).unwrap(), 1e-9).unwrap();
    assert!(s.objective.abs() < 1e-7);
}

#[test]
fn rejects_wrong_inputs() {
    let c = Operator::Complex(rqlab_core::qmat::ComplexMatrix::identity(4).scale(0.25));
    let rho = DensityMatrix::new(vec![2, 2], c).unwrap();
    assert!(ef_two_rebit(&rho).is_err());
    assert!(dsep_two_rebit(&DensityMatrix::maximally_mixed(vec![4], rqlab_core::qmat::Field::Real)).is_err());
}

proptest! {
    #[test]
    fn linear_bound_is_monotone(a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let e = |s| linear_bound_epsilon(LinearBoundInputs::for_score(s)).unwrap();
        prop_assert!(e(lo) <= e(hi));
    }

    #[test]
    fn ef_in_unit_interval(seed in 0u64..1000) {
        let mut rng = seeded(seed);
        let v = ef_two_rebit(&real_state(&[2, 2], &mut rng)).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }
}
