mod common;

use common::{infeasible_toy, random_feasible, trace_toy};
use rqlab_sdp::{
    solve_interior_point, solve_splitting, solve_splitting_with, BlockKind, Constraint, SdpError,
    SdpProblem, Sense, SplittingSettings, Status,
};

#[test]
fn trace_toy_both_solvers() {
    let ipm = solve_interior_point(&trace_toy(), 1e-8).unwrap();
    assert_eq!(ipm.status, Status::Optimal);
    assert!((ipm.objective - 3.0).abs() < 1e-7);
    assert!(ipm.residuals.max() <= 1e-8);
    let spl = solve_splitting(&trace_toy(), 1e-5).unwrap();
    assert_eq!(spl.status, Status::Optimal);
    assert!((spl.objective - ipm.objective).abs() < 1e-3);
}

#[test]
fn infeasible_toy_both_solvers() {
    assert_eq!(
        solve_interior_point(&infeasible_toy(), 1e-8).unwrap().status,
        Status::Infeasible
    );
    assert_eq!(
        solve_splitting(&infeasible_toy(), 1e-4).unwrap().status,
        Status::Infeasible
    );
}

#[test]
fn unbounded_is_reported() {
    // min -t s.t. t = x, x >= 0
    let mut p = SdpProblem::new(Sense::Min);
    let t = p.add_block("t", 1, BlockKind::Free);
    let x = p.add_block("x", 1, BlockKind::Diagonal);
    p.add_objective(t, 0, 0, -1.0);
    p.add_constraint(Constraint::eq(0.0).with(t, 0, 0, 1.0).with(x, 0, 0, -1.0));
    assert_eq!(solve_interior_point(&p, 1e-8).unwrap().status, Status::Unbounded);
    assert_eq!(solve_splitting(&p, 1e-4).unwrap().status, Status::Unbounded);
}

#[test]
fn inequality_rows_get_slacks() {
    // max X11 s.t. tr X <= 2 -> 2
    let mut p = SdpProblem::new(Sense::Max);
    let x = p.add_block("X", 3, BlockKind::Psd);
    p.add_objective(x, 0, 0, 1.0);
    p.add_constraint(
        Constraint::le(2.0)
            .with(x, 0, 0, 1.0)
            .with(x, 1, 1, 1.0)
            .with(x, 2, 2, 1.0),
    );
    let sol = solve_interior_point(&p, 1e-8).unwrap();
    assert!((sol.objective - 2.0).abs() < 1e-7);
    assert_eq!(sol.primal.len(), 1);
    assert!((sol.dual[0] - 1.0).abs() < 1e-6);
}

#[test]
fn iteration_limit_yields_inaccurate() {
    let sol = solve_splitting_with(
        &random_feasible(7),
        &SplittingSettings {
            tol: 1e-12,
            max_iters: 5,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(sol.status, Status::Inaccurate);
    assert_eq!(sol.iterations, 5);
}

#[test]
fn divergence_window_reports_diagnostics() {
    // A window of one iteration trips on the first residual increase.
    let res = solve_splitting_with(
        &random_feasible(3),
        &SplittingSettings {
            tol: 1e-14,
            max_iters: 20_000,
            divergence_window: 1,
            ..Default::default()
        },
    );
    match res {
        Err(SdpError::Diverged { diagnostics, .. }) => assert!(diagnostics.contains("residual")),
        other => panic!("expected divergence error, got {other:?}"),
    }
}

#[test]
fn random_instances_agree_and_satisfy_weak_duality() {
    for seed in 0..50u64 {
        let p = random_feasible(seed);
        let ipm = solve_interior_point(&p, 1e-8).unwrap();
        assert_eq!(ipm.status, Status::Optimal, "seed {seed}");
        assert!(ipm.residuals.max() <= 1e-8, "seed {seed}");
        let spl = solve_splitting(&p, 1e-6).unwrap();
        assert!(
            (ipm.objective - spl.objective).abs() <= 1e-3,
            "seed {seed}: ipm {} splitting {} ({:?})",
            ipm.objective,
            spl.objective,
            spl.status
        );
        for sol in [&ipm, &spl] {
            let (primal, dual) = match p.sense {
                Sense::Min => (sol.objective, sol.dual_objective),
                Sense::Max => (-sol.objective, -sol.dual_objective),
            };
            assert!(
                primal >= dual - 10.0 * sol.tol * (1.0 + primal.abs()),
                "seed {seed}: primal {primal} dual {dual} status {:?} res {:?}",
                sol.status,
                sol.residuals
            );
        }
        // The returned primal point satisfies the constraints.
        for k in 0..p.constraints.len() {
            let lhs = p.constraint_lhs(k, &ipm.primal);
            assert!((lhs - p.constraints[k].rhs).abs() < 1e-6, "seed {seed} row {k}");
        }
    }
}
