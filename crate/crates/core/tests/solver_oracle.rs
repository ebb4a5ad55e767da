mod common;

use common::{dense_solve, random_lp, rel_diff, OracleStatus};
use ldesval::lp::{export_mps, import_mps, MpsFormat};
use ldesval::solver::{solve, verify_certificate};
use ldesval::{LpBuilder, RowSense, SolveOptions, SolveStatus};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

#[test]
fn oracle_on_a_textbook_lp() {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
    let mut b = LpBuilder::new();
    let x = b.add_column("x", -3.0, 0.0, INF);
    let y = b.add_column("y", -5.0, 0.0, INF);
    b.add_row("a", RowSense::Le, 4.0, &[(x, 1.0)]);
    b.add_row("b", RowSense::Le, 12.0, &[(y, 2.0)]);
    b.add_row("c", RowSense::Le, 18.0, &[(x, 3.0), (y, 2.0)]);
    let r = dense_solve(&b.finish().unwrap());
    assert_eq!(r.status, OracleStatus::Optimal);
    assert!((r.objective + 36.0).abs() < 1e-12);
    assert!((r.x[0] - 2.0).abs() < 1e-12 && (r.x[1] - 6.0).abs() < 1e-12);
}

#[test]
fn oracle_handles_free_and_upper_bounded_columns() {
    // min x - y s.t. x + y = 1, x free, y <= 3 -> y = 3, x = -2, obj -5.
    let mut b = LpBuilder::new();
    let x = b.add_column("x", 1.0, f64::NEG_INFINITY, INF);
    let y = b.add_column("y", -1.0, f64::NEG_INFINITY, 3.0);
    b.add_row("sum", RowSense::Eq, 1.0, &[(x, 1.0), (y, 1.0)]);
    let r = dense_solve(&b.finish().unwrap());
    assert_eq!(r.status, OracleStatus::Optimal);
    assert!((r.objective + 5.0).abs() < 1e-12, "{}", r.objective);
}

#[test]
fn oracle_and_solver_agree_on_status() {
    let mut b = LpBuilder::new();
    let x = b.add_column("x", 1.0, 0.0, 1.0);
    b.add_row("r", RowSense::Ge, 2.0, &[(x, 1.0)]);
    let lp = b.finish().unwrap();
    assert_eq!(dense_solve(&lp).status, OracleStatus::Infeasible);
    assert_eq!(solve(&lp, &SolveOptions::default()).unwrap().status, SolveStatus::Infeasible);

    let mut b = LpBuilder::new();
    let x = b.add_column("x", -1.0, 0.0, INF);
    let y = b.add_column("y", 0.0, 0.0, INF);
    b.add_row("r", RowSense::Ge, 1.0, &[(x, 1.0), (y, -1.0)]);
    let lp = b.finish().unwrap();
    assert_eq!(dense_solve(&lp).status, OracleStatus::Unbounded);
    assert_eq!(solve(&lp, &SolveOptions::default()).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn random_lps_match_the_oracle() {
    for seed in 0..20 {
        let lp = random_lp(1000 + seed, 20, 30);
        let oracle = dense_solve(&lp);
        assert_eq!(oracle.status, OracleStatus::Optimal, "seed {seed}");
        let s = solve(&lp, &SolveOptions::default()).unwrap();
        assert!(s.is_optimal(), "seed {seed}: {:?}", s.status);
        assert!(
            rel_diff(s.objective, oracle.objective) < 1e-7,
            "seed {seed}: {} vs {}",
            s.objective,
            oracle.objective
        );
        let report = verify_certificate(&lp, &s, 1e-6);
        assert!(report.passed, "seed {seed}: {report}");
    }
}

#[test]
fn mps_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let lp = random_lp(77, 15, 25);
    for (name, format) in [("a.mps", MpsFormat::Fixed), ("b.mps", MpsFormat::Free)] {
        let path = dir.path().join(name);
        export_mps(&lp, &path, format).unwrap();
        let back = import_mps(&path).unwrap();
        assert_eq!(back.nnz(), lp.nnz());
        assert_eq!(back.senses, lp.senses);
        assert_eq!(back.rhs, lp.rhs);
        assert_eq!(back.lower, lp.lower);
        assert_eq!(back.upper, lp.upper);
        assert_eq!(back.objective, lp.objective);
        assert_eq!(back.col_names, lp.col_names);
        for i in 0..lp.n_rows() {
            assert_eq!(back.row(i), lp.row(i));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_objective_matches_oracle(seed in any::<u64>(), m in 3usize..15, n in 3usize..20) {
        let lp = random_lp(seed, m, n);
        let oracle = dense_solve(&lp);
        prop_assert_eq!(oracle.status, OracleStatus::Optimal);
        let s = solve(&lp, &SolveOptions::default()).unwrap();
        prop_assert!(s.is_optimal());
        prop_assert!(rel_diff(s.objective, oracle.objective) < 1e-7,
            "{} vs {}", s.objective, oracle.objective);
    }
}
