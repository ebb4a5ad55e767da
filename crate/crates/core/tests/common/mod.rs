//! Test-only dense two-phase tableau simplex and random LP generator.
//!
//! The oracle shares nothing with the library solver: it rewrites the LP in
//! standard form, runs Bland's rule on a dense tableau and reports the
//! objective in the original variables.

#![allow(dead_code)]

use ldesval::{LinearProgram, LpBuilder, RowSense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub status: OracleStatus,
    pub objective: f64,
    pub x: Vec<f64>,
}

/// `x_j = offset + sum(coef * z_k)` over standard-form variables `z >= 0`.
struct ColumnMap {
    offset: f64,
    terms: Vec<(usize, f64)>,
}

struct Tableau {
    /// `m` constraint rows then the objective row; the last column is the RHS.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    m: usize,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[r][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row with Bland's rule over `allowed` columns.
    /// Returns false when unbounded.
    fn run(&mut self, allowed: &[bool]) -> bool {
        loop {
            let obj = self.m;
            let entering = (0..self.width).find(|&c| allowed[c] && self.t[obj][c] < -EPS);
            let Some(c) = entering else { return true };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..self.m {
                let a = self.t[r][c];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    let better = match best {
                        None => true,
                        Some((b, _, var)) => {
                            ratio < b - EPS || (ratio <= b + EPS && self.basis[r] < var)
                        }
                    };
                    if better {
                        best = Some((ratio, r, self.basis[r]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    /// Sets the objective row to `cost` and prices out the basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let obj = self.m;
        self.t[obj] = vec![0.0; self.width + 1];
        self.t[obj][..cost.len()].copy_from_slice(cost);
        for r in 0..self.m {
            let b = self.basis[r];
            let f = self.t[obj][b];
            if f != 0.0 {
                for c in 0..=self.width {
                    self.t[obj][c] -= f * self.t[r][c];
                }
            }
        }
    }
}

/// Solves `lp` exactly enough for comparison at 1e-7.
pub fn dense_solve(lp: &LinearProgram) -> OracleResult {
    // Column substitution.
    let mut n_z = 0;
    let mut maps = Vec::with_capacity(lp.n_cols());
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..lp.n_cols() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let map = if l.is_finite() {
            if u.is_finite() {
                upper_rows.push((n_z, u - l));
            }
            ColumnMap {
                offset: l,
                terms: vec![(n_z, 1.0)],
            }
        } else if u.is_finite() {
            ColumnMap {
                offset: u,
                terms: vec![(n_z, -1.0)],
            }
        } else {
            n_z += 1;
            ColumnMap {
                offset: 0.0,
                terms: vec![(n_z - 1, 1.0), (n_z, -1.0)],
            }
        };
        n_z += 1;
        maps.push(map);
    }

    // Constraint rows over z plus one slack per inequality.
    let mut rows: Vec<(Vec<(usize, f64)>, f64, i8)> = Vec::new();
    for i in 0..lp.n_rows() {
        if !lp.rhs[i].is_finite() {
            continue;
        }
        let (cols, vals) = lp.row(i);
        let mut terms = Vec::new();
        let mut b = lp.rhs[i];
        for (&j, &a) in cols.iter().zip(vals) {
            b -= a * maps[j].offset;
            for &(k, coef) in &maps[j].terms {
                terms.push((k, a * coef));
            }
        }
        let slack = match lp.senses[i] {
            RowSense::Le => 1,
            RowSense::Ge => -1,
            RowSense::Eq => 0,
        };
        rows.push((terms, b, slack));
    }
    for &(k, u) in &upper_rows {
        rows.push((vec![(k, 1.0)], u, 1));
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.2 != 0).count();
    let n_real = n_z + n_slack;
    let width = n_real + m;
    let mut t = vec![vec![0.0; width + 1]; m + 1];
    let mut s = n_z;
    for (r, (terms, b, slack)) in rows.iter().enumerate() {
        for &(k, v) in terms {
            t[r][k] += v;
        }
        if *slack != 0 {
            t[r][s] = *slack as f64;
            s += 1;
        }
        t[r][width] = *b;
        if *b < 0.0 {
            for v in t[r].iter_mut() {
                *v = -*v;
            }
        }
        t[r][n_real + r] = 1.0;
    }
    let mut tab = Tableau {
        t,
        basis: (n_real..width).collect(),
        m,
        width,
    };

    // Phase one: minimize the sum of artificials.
    let mut phase_one = vec![0.0; width];
    for c in phase_one.iter_mut().skip(n_real) {
        *c = 1.0;
    }
    tab.set_objective(&phase_one);
    tab.run(&vec![true; width]);
    let infeasibility = -tab.rhs(m);
    let scale = rows.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
    if infeasibility > 1e-7 * scale {
        return OracleResult {
            status: OracleStatus::Infeasible,
            objective: f64::NAN,
            x: Vec::new(),
        };
    }
    // Drive zero-level artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= n_real {
            if let Some(c) = (0..n_real).find(|&c| tab.t[r][c].abs() > EPS) {
                tab.pivot(r, c);
            }
        }
    }

    // Phase two on the real columns.
    let mut cost = vec![0.0; width];
    let mut constant = 0.0;
    for (j, map) in maps.iter().enumerate() {
        constant += lp.objective[j] * map.offset;
        for &(k, coef) in &map.terms {
            cost[k] += lp.objective[j] * coef;
        }
    }
    tab.set_objective(&cost);
    let allowed: Vec<bool> = (0..width).map(|c| c < n_real).collect();
    if !tab.run(&allowed) {
        return OracleResult {
            status: OracleStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            x: Vec::new(),
        };
    }
    let mut z = vec![0.0; width];
    for r in 0..m {
        z[tab.basis[r]] = tab.rhs(r);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| map.offset + map.terms.iter().map(|&(k, c)| c * z[k]).sum::<f64>())
        .collect();
    OracleResult {
        status: OracleStatus::Optimal,
        objective: constant - tab.rhs(m),
        x,
    }
}

/// Random feasible, bounded LP with `m` rows and `n` columns.
///
/// Rows are built around an interior reference point so the LP is feasible;
/// every column that is unbounded in some direction is priced so the
/// objective pushes it back toward its finite bound.
pub fn random_lp(seed: u64, m: usize, n: usize) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = LpBuilder::new();
    let mut x0 = Vec::with_capacity(n);
    for j in 0..n {
        let (cost, lower, upper) = match rng.gen_range(0..10) {
            0..=4 => (rng.gen_range(-2.0..2.0), 0.0, rng.gen_range(1.0..10.0)),
            5 | 6 => (rng.gen_range(-2.0..2.0), -rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)),
            7 => (rng.gen_range(-2.0..2.0), 1.0, 1.0),
            8 => (rng.gen_range(0.1..2.0), rng.gen_range(-2.0..2.0), f64::INFINITY),
            _ => (-rng.gen_range(0.1..2.0), f64::NEG_INFINITY, rng.gen_range(-2.0..2.0)),
        };
        let lo = if lower.is_finite() { lower } else { upper - 3.0 };
        let hi = if upper.is_finite() { upper } else { lower + 3.0 };
        x0.push(lo + (hi - lo) * rng.gen_range(0.0..1.0));
        b.add_column(format!("x{j}"), cost, lower, upper);
    }
    for i in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.25) {
                terms.push((j, rng.gen_range(-1.0..1.0)));
            }
        }
        if terms.is_empty() {
            terms.push((rng.gen_range(0..n), 1.0));
        }
        let activity: f64 = terms.iter().map(|&(j, a)| a * x0[j]).sum();
        let (sense, rhs) = match rng.gen_range(0..10) {
            0..=5 => (RowSense::Le, activity + rng.gen_range(0.0..2.0)),
            6..=8 => (RowSense::Ge, activity - rng.gen_range(0.0..2.0)),
            _ => (RowSense::Eq, activity),
        };
        b.add_row(format!("r{i}"), sense, rhs, &terms);
    }
    b.finish().expect("consistent random LP")
}

/// Relative difference with a floor of 1 on the scale.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
