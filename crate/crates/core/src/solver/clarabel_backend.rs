use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};

use super::{verify_certificate, LpBackend, Solution, SolveOptions, SolveStatus, SolverError};
use crate::lp::{LinearProgram, RowSense};

/// Interior-point backend built on Clarabel.
///
/// Rows and finite bounds are stacked into `A x + s = b` with `s` in the zero
/// cone (equalities and fixed columns) or the nonnegative cone (everything
/// else, with `>=` rows negated).
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

/// Where each conic row came from.
#[derive(Clone, Copy)]
enum Origin {
    /// LP row, with the sign applied to put it in `<=` form.
    Row(usize, f64),
    Bound,
}

struct Stacked {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    origin: Vec<Origin>,
}

fn stack(lp: &LinearProgram) -> Stacked {
    let n = lp.n_cols();
    // (conic row, column, value) grouped by cone: zero rows first.
    let mut zero: Vec<(Origin, Vec<(usize, f64)>, f64)> = Vec::new();
    let mut nonneg: Vec<(Origin, Vec<(usize, f64)>, f64)> = Vec::new();
    for i in 0..lp.n_rows() {
        if lp.is_free_row(i) {
            continue;
        }
        let (cols, vals) = lp.row(i);
        let terms = |sign: f64| cols.iter().zip(vals).map(|(&j, &v)| (j, sign * v)).collect();
        match lp.senses[i] {
            RowSense::Eq => zero.push((Origin::Row(i, 1.0), terms(1.0), lp.rhs[i])),
            RowSense::Le => nonneg.push((Origin::Row(i, 1.0), terms(1.0), lp.rhs[i])),
            RowSense::Ge => nonneg.push((Origin::Row(i, -1.0), terms(-1.0), -lp.rhs[i])),
        }
    }
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l == u {
            zero.push((Origin::Bound, vec![(j, 1.0)], l));
            continue;
        }
        if u.is_finite() {
            nonneg.push((Origin::Bound, vec![(j, 1.0)], u));
        }
        if l.is_finite() {
            nonneg.push((Origin::Bound, vec![(j, -1.0)], -l));
        }
    }
    let n_zero = zero.len();
    let n_nonneg = nonneg.len();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::with_capacity(n_zero + n_nonneg);
    let mut origin = Vec::with_capacity(n_zero + n_nonneg);
    for (k, (o, terms, rhs)) in zero.into_iter().chain(nonneg).enumerate() {
        for (j, v) in terms {
            rows.push(k);
            cols.push(j);
            vals.push(v);
        }
        b.push(rhs);
        origin.push(o);
    }
    let mut cones = Vec::new();
    if n_zero > 0 {
        cones.push(ZeroConeT(n_zero));
    }
    if n_nonneg > 0 {
        cones.push(NonnegativeConeT(n_nonneg));
    }
    Stacked {
        a: CscMatrix::new_from_triplets(n_zero + n_nonneg, n, rows, cols, vals),
        b,
        cones,
        origin,
    }
}

/// Outcome of one backend run on an objective divided by `cost_scale`.
enum Run {
    Point(SolveStatus, SolverStatus, Vec<f64>, Vec<f64>, u32),
    NoPoint(SolveStatus, u32),
}

fn run(lp: &LinearProgram, stacked: &Stacked, options: &SolveOptions, cost_scale: f64) -> Result<Run, SolverError> {
    let n = lp.n_cols();
    let p = CscMatrix::<f64>::zeros((n, n));
    let tol = options.tolerance;
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(options.max_iterations)
        .tol_feas(tol)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_ktratio(tol.sqrt().min(1e-6))
        .equilibrate_enable(options.scaling)
        .presolve_enable(false)
        .max_threads(1)
        .build()
        .map_err(|e| SolverError::NumericalFailure(format!("settings: {e:?}")))?;
    let q: Vec<f64> = lp.objective.iter().map(|c| c / cost_scale).collect();
    let mut solver = DefaultSolver::new(&p, &q, &stacked.a, &stacked.b, &stacked.cones, settings)
        .map_err(|e| SolverError::NumericalFailure(format!("setup: {e:?}")))?;
    solver.solve();
    let raw = &solver.solution;
    let iterations = raw.iterations;
    let at_cap = iterations >= options.max_iterations;
    let status = match raw.status {
        // A reduced-accuracy certificate found only because the iteration
        // budget ran out is not evidence of infeasibility.
        SolverStatus::AlmostPrimalInfeasible | SolverStatus::AlmostDualInfeasible if at_cap => {
            return Ok(Run::NoPoint(SolveStatus::IterationLimit, iterations))
        }
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Ok(Run::NoPoint(SolveStatus::Infeasible, iterations))
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Ok(Run::NoPoint(SolveStatus::Unbounded, iterations))
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => {
            return Ok(Run::NoPoint(SolveStatus::IterationLimit, iterations))
        }
        other => {
            return Err(SolverError::NumericalFailure(format!(
                "backend stopped with {other:?} after {iterations} iterations"
            )))
        }
    };
    let z = raw.z.iter().map(|z| z * cost_scale).collect();
    Ok(Run::Point(status, raw.status, raw.x.clone(), z, iterations))
}

impl LpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, lp: &LinearProgram, options: &SolveOptions) -> Result<Solution, SolverError> {
        let stacked = stack(lp);
        let mut outcome = run(lp, &stacked, options, 1.0)?;
        if let Run::NoPoint(SolveStatus::Infeasible | SolveStatus::Unbounded, _) = outcome {
            // Large weighted costs (lost load at 1e7 $/MW per timestep) can
            // trigger a spurious certificate; confirm on a normalized objective.
            let scale = lp.objective.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if scale > 1.0 {
                outcome = run(lp, &stacked, options, scale)?;
            }
        }
        let (status, raw_status, primal, z, iterations) = match outcome {
            Run::NoPoint(status, iterations) => return Ok(Solution::without_point(status, iterations)),
            Run::Point(status, raw_status, x, z, iterations) => (status, raw_status, x, z, iterations),
        };

        let mut duals = vec![0.0; lp.n_rows()];
        for (k, o) in stacked.origin.iter().enumerate() {
            if let Origin::Row(i, sign) = *o {
                // Clarabel's z satisfies c + A'z = 0 with z >= 0 on `<=`
                // rows, so d(obj)/d(b) = -z in the stacked orientation.
                duals[i] = -sign * z[k];
            }
        }
        let aty = lp.transpose_product(&duals);
        let reduced_costs = lp.objective.iter().zip(&aty).map(|(c, a)| c - a).collect();
        let objective = lp.objective_value(&primal);
        let solution = Solution {
            status,
            primal,
            duals,
            reduced_costs,
            objective,
            iterations,
        };
        if raw_status == SolverStatus::AlmostSolved {
            let report = verify_certificate(lp, &solution, 1e-6);
            if !report.passed {
                return Err(SolverError::NumericalFailure(format!(
                    "reduced-accuracy termination failed the certificate: {report}"
                )));
            }
        }
        Ok(solution)
    }
}
