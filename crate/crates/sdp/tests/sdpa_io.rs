mod common;

use proptest::prelude::*;
use rqlab_sdp::sdpa::{read_sdpa, read_sdpa_file, write_sdpa, write_sdpa_file};
use rqlab_sdp::{solve_interior_point, BlockKind, Constraint, SdpProblem, Sense};

fn golden_toy() -> SdpProblem {
    let mut p = SdpProblem::new(Sense::Min);
    let x = p.add_block("X", 2, BlockKind::Psd);
    p.add_objective(x, 0, 0, 1.0);
    p.add_objective(x, 1, 1, 1.0);
    p.add_objective(x, 0, 1, 0.25);
    p.add_constraint(Constraint::eq(1.5).with(x, 1, 1, 1.0).with(x, 0, 0, 1.0));
    p
}

#[test]
fn golden_file_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.dat-s");
    write_sdpa_file(&golden_toy(), &path).unwrap();
    let written = std::fs::read(&path).unwrap();
    let golden = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/toy.dat-s")).unwrap();
    assert_eq!(written, golden);
}

#[test]
fn golden_file_reimports_and_solves() {
    let p = read_sdpa_file(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/toy.dat-s")).unwrap();
    let mut expect = golden_toy();
    expect.canonicalize();
    assert_eq!(p, expect);
    // min tr X + X12/2 with tr X = 1.5: X12 as negative as possible, -3/4.
    let sol = solve_interior_point(&p, 1e-9).unwrap();
    assert!((sol.objective - (1.5 - 0.5 * 0.75)).abs() < 1e-7);
}

#[test]
fn random_feasible_round_trip_preserves_optimum() {
    for seed in 0..5 {
        let p = common::random_feasible(seed);
        let q = read_sdpa(&write_sdpa(&p).unwrap()).unwrap();
        let a = solve_interior_point(&p, 1e-9).unwrap();
        let b = solve_interior_point(&q, 1e-9).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-8);
    }
}

fn block_strategy() -> impl Strategy<Value = (usize, BlockKind)> {
    prop_oneof![
        (1usize..5).prop_map(|n| (n, BlockKind::Psd)),
        (1usize..4).prop_map(|n| (n, BlockKind::Diagonal)),
        (1usize..3).prop_map(|n| (n, BlockKind::Free)),
    ]
}

fn problem_strategy() -> impl Strategy<Value = SdpProblem> {
    (
        prop::collection::vec(block_strategy(), 1..4),
        any::<bool>(),
        1usize..5,
        prop::collection::vec((any::<u32>(), -1e3f64..1e3), 1..40),
    )
        .prop_map(|(blocks, max, m, raw)| {
            let mut p = SdpProblem::new(if max { Sense::Max } else { Sense::Min });
            for (k, (n, kind)) in blocks.iter().enumerate() {
                p.add_block(format!("b{k}"), *n, *kind);
            }
            let mut cons: Vec<Constraint> = (0..m).map(|i| Constraint::eq(i as f64 - 1.5)).collect();
            for (bits, v) in raw {
                let b = bits as usize % blocks.len();
                let (n, kind) = blocks[b];
                let i = (bits as usize >> 4) % n;
                let j = if kind == BlockKind::Psd { (bits as usize >> 8) % n } else { i };
                let row = (bits as usize >> 12) % (m + 1);
                if row == m {
                    p.add_objective(b, i, j, v);
                } else {
                    cons[row].add(b, i, j, v);
                }
            }
            for c in cons {
                p.add_constraint(c);
            }
            p
        })
}

proptest! {
    #[test]
    fn export_import_is_identity_up_to_ordering(p in problem_strategy()) {
        let text = write_sdpa(&p).unwrap();
        let q = read_sdpa(&text).unwrap();
        let mut expect = p.clone();
        expect.canonicalize();
        prop_assert_eq!(q, expect);
        // Writing again is deterministic.
        prop_assert_eq!(write_sdpa(&read_sdpa(&text).unwrap()).unwrap(), text);
    }
}
