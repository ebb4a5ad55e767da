//! Sparse linear programs: a builder, an immutable container with row- and
//! column-major views, and MPS interchange.

mod mps;

use thiserror::Error;

pub use mps::{export_mps, import_mps, MpsError, MpsFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl RowSense {
    pub fn as_str(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("non-finite coefficient {value} at row '{row}', column '{column}'")]
    NonFiniteCoefficient {
        row: String,
        column: String,
        value: f64,
    },
    #[error("non-finite objective coefficient on column '{0}'")]
    NonFiniteCost(String),
    #[error("invalid bounds [{lower}, {upper}] on column '{column}'")]
    InvalidBounds {
        column: String,
        lower: f64,
        upper: f64,
    },
    #[error("invalid right-hand side {rhs} on {sense} row '{row}'")]
    InvalidRhs {
        row: String,
        sense: &'static str,
        rhs: f64,
    },
    #[error("index {index} out of range ({len})")]
    OutOfRange { index: usize, len: usize },
}

/// Compressed sparse storage. `starts` has one more entry than the major
/// dimension; `index[starts[k]..starts[k+1]]` lists minor indices in
/// increasing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    pub starts: Vec<usize>,
    pub index: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    fn from_sorted(major: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut starts = vec![0; major + 1];
        for &(m, _, _) in entries {
            starts[m + 1] += 1;
        }
        for k in 0..major {
            starts[k + 1] += starts[k];
        }
        SparseMatrix {
            starts,
            index: entries.iter().map(|e| e.1).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn lane(&self, k: usize) -> (&[usize], &[f64]) {
        let r = self.starts[k]..self.starts[k + 1];
        (&self.index[r.clone()], &self.values[r])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// An LP in the form
///
/// ```text
/// minimize    c'x
/// subject to  a_i'x (<=|=|>=) b_i   for each row i
///             l <= x <= u
/// ```
///
/// Rows may carry an infinite right-hand side in the non-binding direction
/// (`<= +inf`, `>= -inf`); such rows are kept for naming and dual reporting
/// and always have a zero dual.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
    csr: SparseMatrix,
    csc: SparseMatrix,
}

impl LinearProgram {
    pub fn n_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn n_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    /// Row-major view.
    pub fn csr(&self) -> &SparseMatrix {
        &self.csr
    }

    /// Column-major view.
    pub fn csc(&self) -> &SparseMatrix {
        &self.csc
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.csr.lane(i)
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        self.csc.lane(j)
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// `A x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, a)| a * x[j]).sum()
            })
            .collect()
    }

    /// `A' y`.
    pub fn transpose_product(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n_cols())
            .map(|j| {
                let (rows, vals) = self.column(j);
                rows.iter().zip(vals).map(|(&i, a)| a * y[i]).sum()
            })
            .collect()
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.row_names.iter().position(|n| n == name)
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.col_names.iter().position(|n| n == name)
    }

    pub fn set_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] = value;
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.lower[col] = lower;
        self.upper[col] = upper;
    }

    /// Rows whose right-hand side can never bind.
    pub fn is_free_row(&self, i: usize) -> bool {
        match self.senses[i] {
            RowSense::Le => self.rhs[i] == f64::INFINITY,
            RowSense::Ge => self.rhs[i] == f64::NEG_INFINITY,
            RowSense::Eq => false,
        }
    }

    /// Copy with the objective multiplied by `factor`.
    pub fn scaled_objective(&self, factor: f64) -> LinearProgram {
        let mut out = self.clone();
        out.objective.iter_mut().for_each(|c| *c *= factor);
        out
    }
}

/// Incremental LP assembly. Entries may be added in any order; duplicates are
/// summed and exact zeros dropped by [`LpBuilder::finish`].
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    col_names: Vec<String>,
    senses: Vec<RowSense>,
    rhs: Vec<f64>,
    row_names: Vec<String>,
    entries: Vec<(usize, usize, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn add_column(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.col_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: RowSense,
        rhs: f64,
        terms: &[(usize, f64)],
    ) -> usize {
        let row = self.senses.len();
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        self.entries.extend(terms.iter().map(|&(j, v)| (row, j, v)));
        row
    }

    /// Adds `value` to the coefficient at (`row`, `col`).
    pub fn add_term(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn add_cost(&mut self, col: usize, value: f64) {
        self.objective[col] += value;
    }

    pub fn set_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] = value;
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.lower[col] = lower;
        self.upper[col] = upper;
    }

    pub fn bounds(&self, col: usize) -> (f64, f64) {
        (self.lower[col], self.upper[col])
    }

    pub fn cost(&self, col: usize) -> f64 {
        self.objective[col]
    }

    pub fn finish(self) -> Result<LinearProgram, LpError> {
        let (m, n) = (self.senses.len(), self.objective.len());
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::NonFiniteCost(self.col_names[j].clone()));
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds {
                    column: self.col_names[j].clone(),
                    lower: l,
                    upper: u,
                });
            }
        }
        for i in 0..m {
            let (s, b) = (self.senses[i], self.rhs[i]);
            let ok = match s {
                RowSense::Eq => b.is_finite(),
                RowSense::Le => !b.is_nan() && b != f64::NEG_INFINITY,
                RowSense::Ge => !b.is_nan() && b != f64::INFINITY,
            };
            if !ok {
                return Err(LpError::InvalidRhs {
                    row: self.row_names[i].clone(),
                    sense: s.as_str(),
                    rhs: b,
                });
            }
        }
        let mut entries = self.entries;
        for &(i, j, v) in &entries {
            if i >= m {
                return Err(LpError::OutOfRange { index: i, len: m });
            }
            if j >= n {
                return Err(LpError::OutOfRange { index: j, len: n });
            }
            if !v.is_finite() {
                return Err(LpError::NonFiniteCoefficient {
                    row: self.row_names[i].clone(),
                    column: self.col_names[j].clone(),
                    value: v,
                });
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        let csr = SparseMatrix::from_sorted(m, &merged);
        let mut by_col: Vec<(usize, usize, f64)> = merged.iter().map(|&(i, j, v)| (j, i, v)).collect();
        by_col.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let csc = SparseMatrix::from_sorted(n, &by_col);
        Ok(LinearProgram {
            objective: self.objective,
            senses: self.senses,
            rhs: self.rhs,
            lower: self.lower,
            upper: self.upper,
            col_names: self.col_names,
            row_names: self.row_names,
            csr,
            csc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_are_coalesced_and_zeros_dropped() {
        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 0.0, f64::INFINITY);
        let y = b.add_column("y", 1.0, 0.0, f64::INFINITY);
        let r = b.add_row("r", RowSense::Ge, 1.0, &[(x, 1.0), (y, 2.0)]);
        b.add_term(r, x, 0.5);
        b.add_term(r, y, -2.0);
        let lp = b.finish().unwrap();
        assert_eq!(lp.nnz(), 1);
        assert_eq!(lp.coefficient(0, 0), 1.5);
        assert_eq!(lp.coefficient(0, 1), 0.0);
        assert_eq!(lp.column(1).0.len(), 0);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 0.0, 1.0);
        b.add_row("r", RowSense::Le, 1.0, &[(x, f64::NAN)]);
        assert!(matches!(b.finish(), Err(LpError::NonFiniteCoefficient { .. })));

        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 2.0, 1.0);
        b.add_row("r", RowSense::Le, 1.0, &[(x, 1.0)]);
        assert!(matches!(b.finish(), Err(LpError::InvalidBounds { .. })));

        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 0.0, 1.0);
        b.add_row("r", RowSense::Eq, f64::INFINITY, &[(x, 1.0)]);
        assert!(matches!(b.finish(), Err(LpError::InvalidRhs { .. })));

        let mut b = LpBuilder::new();
        let x = b.add_column("x", 1.0, 0.0, 1.0);
        b.add_row("cap", RowSense::Le, f64::INFINITY, &[(x, 1.0)]);
        assert!(b.finish().unwrap().is_free_row(0));
    }

    proptest! {
        #[test]
        fn row_and_column_views_agree(
            entries in proptest::collection::vec((0usize..6, 0usize..5, -3i32..4), 0..40)
        ) {
            let mut b = LpBuilder::new();
            for j in 0..5 {
                b.add_column(format!("c{j}"), 0.0, 0.0, 1.0);
            }
            for i in 0..6 {
                b.add_row(format!("r{i}"), RowSense::Le, 1.0, &[]);
            }
            let mut dense = [[0.0f64; 5]; 6];
            for &(i, j, v) in &entries {
                b.add_term(i, j, v as f64);
                dense[i][j] += v as f64;
            }
            let lp = b.finish().unwrap();
            let expected_nnz = dense.iter().flatten().filter(|v| **v != 0.0).count();
            prop_assert_eq!(lp.nnz(), expected_nnz);
            for (i, row) in dense.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    prop_assert_eq!(lp.coefficient(i, j), v);
                    let (rows, vals) = lp.column(j);
                    let from_col = rows.iter().position(|&r| r == i).map_or(0.0, |k| vals[k]);
                    prop_assert_eq!(from_col, v);
                }
            }
        }
    }
}
