use std::fmt;

use super::Solution;
use crate::lp::{LinearProgram, RowSense};

/// Residuals of the optimality conditions for a primal/dual pair.
///
/// Primal residuals are relative to `1 + |rhs|` (or `1 + |bound|`), dual
/// residuals to `1 + max|c|`, complementarity and gap to `1 + |c'x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
    /// Row (or `bound:<column>`) with the largest primal residual.
    pub worst_primal: Option<String>,
    /// Row or column with the largest dual residual.
    pub worst_dual: Option<String>,
    /// Columns strictly inside their bounds plus inequality rows with slack.
    pub basic_count: usize,
    /// Rows that can bind.
    pub active_rows: usize,
    /// Fewer basic-like entries than rows: the dual may not be unique.
    pub degenerate: bool,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "primal {:.2e} ({}), dual {:.2e} ({}), complementarity {:.2e}, gap {:.2e}, basic {}/{}{}",
            self.primal_residual,
            self.worst_primal.as_deref().unwrap_or("-"),
            self.dual_residual,
            self.worst_dual.as_deref().unwrap_or("-"),
            self.complementarity,
            self.duality_gap,
            self.basic_count,
            self.active_rows,
            if self.degenerate { ", degenerate" } else { "" }
        )
    }
}

struct Worst {
    value: f64,
    name: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: 0.0,
            name: None,
        }
    }

    fn update(&mut self, value: f64, name: impl FnOnce() -> String) {
        if value > self.value || value.is_nan() {
            self.value = if value.is_nan() { f64::INFINITY } else { value };
            self.name = Some(name());
        }
    }
}

pub fn verify_certificate(lp: &LinearProgram, solution: &Solution, tol: f64) -> CertificateReport {
    let x = &solution.primal;
    let y = &solution.duals;
    let d = &solution.reduced_costs;
    let activity = lp.row_activity(x);
    let cost_scale = 1.0 + lp.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let primal_obj = lp.objective_value(x);
    let obj_scale = 1.0 + primal_obj.abs();

    let mut primal = Worst::new();
    let mut dual = Worst::new();
    let mut comp: f64 = 0.0;
    let mut dual_obj = 0.0;
    let mut basic = 0usize;
    let mut active_rows = 0usize;

    for i in 0..lp.n_rows() {
        if lp.is_free_row(i) {
            dual.update(y[i].abs() / cost_scale, || lp.row_names[i].clone());
            continue;
        }
        active_rows += 1;
        let b = lp.rhs[i];
        let slack = match lp.senses[i] {
            RowSense::Le => b - activity[i],
            RowSense::Ge => activity[i] - b,
            RowSense::Eq => 0.0,
        };
        let violation = match lp.senses[i] {
            RowSense::Eq => (activity[i] - b).abs(),
            _ => (-slack).max(0.0),
        };
        primal.update(violation / (1.0 + b.abs()), || lp.row_names[i].clone());
        let sign_violation = match lp.senses[i] {
            RowSense::Le => y[i].max(0.0),
            RowSense::Ge => (-y[i]).max(0.0),
            RowSense::Eq => 0.0,
        };
        dual.update(sign_violation / cost_scale, || lp.row_names[i].clone());
        if lp.senses[i] != RowSense::Eq {
            comp = comp.max(y[i].abs() * slack.max(0.0) / obj_scale);
            if slack > y[i].abs() {
                basic += 1;
            }
        }
        dual_obj += b * y[i];
    }

    for j in 0..lp.n_cols() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let bound_name = || format!("bound:{}", lp.col_names[j]);
        primal.update((l - x[j]).max(0.0) / (1.0 + l.abs().min(f64::MAX)), bound_name);
        primal.update((x[j] - u).max(0.0) / (1.0 + u.abs().min(f64::MAX)), bound_name);
        let (pos, neg) = (d[j].max(0.0), (-d[j]).max(0.0));
        if l.is_finite() {
            comp = comp.max(pos * (x[j] - l).max(0.0) / obj_scale);
            dual_obj += pos * l;
        } else {
            dual.update(pos / cost_scale, || lp.col_names[j].clone());
        }
        if u.is_finite() {
            comp = comp.max(neg * (u - x[j]).max(0.0) / obj_scale);
            dual_obj -= neg * u;
        } else {
            dual.update(neg / cost_scale, || lp.col_names[j].clone());
        }
        if l != u {
            let gap = (x[j] - l).min(u - x[j]);
            if gap > d[j].abs() {
                basic += 1;
            }
        }
    }

    let duality_gap = (primal_obj - dual_obj).abs() / obj_scale;
    let passed = primal.value <= tol && dual.value <= tol && comp <= tol && duality_gap <= tol;
    CertificateReport {
        primal_residual: primal.value,
        dual_residual: dual.value,
        complementarity: comp,
        duality_gap,
        worst_primal: primal.name,
        worst_dual: dual.name,
        basic_count: basic,
        active_rows,
        degenerate: basic < active_rows,
        tolerance: tol,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpBuilder;
    use crate::solver::{solve, SolveOptions, SolveStatus};

    /// max 3x + 2y  s.t. x + y <= 4, x + 3y <= 7, x <= 3, as a minimization.
    /// Optimum x = 3, y = 1; duals (d obj / d b) = (-2, 0) on the two rows and
    /// reduced cost -1 on x.
    fn hand_lp() -> LinearProgram {
        let mut b = LpBuilder::new();
        let x = b.add_column("x", -3.0, 0.0, 3.0);
        let y = b.add_column("y", -2.0, 0.0, f64::INFINITY);
        b.add_row("r1", RowSense::Le, 4.0, &[(x, 1.0), (y, 1.0)]);
        b.add_row("r2", RowSense::Le, 7.0, &[(x, 1.0), (y, 3.0)]);
        b.finish().unwrap()
    }

    fn hand_solution() -> Solution {
        Solution {
            status: SolveStatus::Optimal,
            primal: vec![3.0, 1.0],
            duals: vec![-2.0, 0.0],
            reduced_costs: vec![-1.0, 0.0],
            objective: -11.0,
            iterations: 0,
        }
    }

    #[test]
    fn hand_pair_passes() {
        let report = verify_certificate(&hand_lp(), &hand_solution(), 1e-12);
        assert!(report.passed, "{report}");
        assert_eq!(report.duality_gap, 0.0);
        assert!(!report.degenerate);
    }

    #[test]
    fn perturbed_primal_fails_with_named_row() {
        let mut s = hand_solution();
        s.primal[1] += 1e-2;
        let report = verify_certificate(&hand_lp(), &s, 1e-6);
        assert!(!report.passed);
        assert_eq!(report.worst_primal.as_deref(), Some("r1"));
    }

    #[test]
    fn wrong_dual_sign_fails() {
        let mut s = hand_solution();
        s.duals[0] = 2.0;
        let report = verify_certificate(&hand_lp(), &s, 1e-6);
        assert!(!report.passed);
        assert_eq!(report.worst_dual.as_deref(), Some("r1"));
    }

    #[test]
    fn solver_output_passes() {
        let lp = hand_lp();
        let s = solve(&lp, &SolveOptions::default()).unwrap();
        let report = verify_certificate(&lp, &s, 1e-6);
        assert!(report.passed, "{report}");
        assert!((s.duals[0] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_vertex_is_flagged() {
        // Three rows meet at the optimum (1, 1) in two dimensions.
        let mut b = LpBuilder::new();
        let x = b.add_column("x", -1.0, 0.0, f64::INFINITY);
        let y = b.add_column("y", -1.0, 0.0, f64::INFINITY);
        b.add_row("a", RowSense::Le, 1.0, &[(x, 1.0)]);
        b.add_row("b", RowSense::Le, 1.0, &[(y, 1.0)]);
        b.add_row("c", RowSense::Le, 2.0, &[(x, 1.0), (y, 1.0)]);
        let lp = b.finish().unwrap();
        let s = solve(&lp, &SolveOptions::default()).unwrap();
        let report = verify_certificate(&lp, &s, 1e-6);
        assert!(report.passed, "{report}");
        assert!(report.degenerate, "{report}");
    }
}
