use std::collections::BTreeMap;

use super::point::SweepRow;
use super::HarnessError;

/// Relative error of one row against its group's highest-resolution row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Non-temporal axis values shared by the group.
    pub group: String,
    pub point: usize,
    pub hours: usize,
    /// LDES total value, or the objective when no capacity was forced.
    pub metric: f64,
    pub reference: f64,
    pub rel_error: f64,
    pub within_band: bool,
    /// First row from which every higher resolution stays within the band.
    pub converged: bool,
}

impl ConvergenceRow {
    pub const HEADER: &'static str =
        "group,point,hours,metric,reference,rel_error,within_band,converged";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.group,
            self.point,
            self.hours,
            self.metric,
            self.reference,
            self.rel_error,
            self.within_band,
            self.converged
        )
    }
}

/// First index from which every error is within `band`.
pub fn convergence_index(errors: &[f64], band: f64) -> Option<usize> {
    let tail = errors.iter().rev().take_while(|e| e.abs() <= band).count();
    (tail > 0).then(|| errors.len() - tail)
}

fn metric(row: &SweepRow) -> Option<f64> {
    if !row.is_optimal() {
        return None;
    }
    row.total_value().or(row.objective)
}

fn relative(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Relative errors of `rows` against `rows[reference]`, in order of
/// increasing operational hours. Rows without a metric are skipped.
pub fn convergence_report(
    rows: &[SweepRow],
    reference: usize,
    band: f64,
) -> Result<Vec<ConvergenceRow>, HarnessError> {
    let reference_value = rows
        .get(reference)
        .and_then(metric)
        .ok_or_else(|| HarnessError::MissingReference(format!("row {reference}")))?;
    let mut ordered: Vec<(&SweepRow, f64)> = rows.iter().filter_map(|r| Some((r, metric(r)?))).collect();
    ordered.sort_by_key(|(r, _)| (r.hours, r.point));
    let errors: Vec<f64> = ordered.iter().map(|(_, v)| relative(*v, reference_value)).collect();
    let first = convergence_index(&errors, band);
    Ok(ordered
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, ((row, value), &err))| ConvergenceRow {
            group: String::new(),
            point: row.point,
            hours: row.hours,
            metric: *value,
            reference: reference_value,
            rel_error: err,
            within_band: err <= band,
            converged: first == Some(i),
        })
        .collect())
}

fn group_key(row: &SweepRow) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "base".to_string(), |x| x.to_string());
    format!(
        "{}|linking={}|virtual={}|{}|duration={}|capacity={}|rte={}|{}",
        row.zone_grouping,
        row.ldes_linking,
        row.virtual_discharge,
        row.cost_case,
        opt(row.duration),
        opt(row.capacity),
        opt(row.rte),
        row.emissions
    )
}

/// Convergence of every group of rows that differ only in temporal
/// resolution, each against its own highest-resolution optimal row.
pub fn convergence_by_group(rows: &[SweepRow], band: f64) -> Vec<ConvergenceRow> {
    let mut groups: BTreeMap<String, Vec<SweepRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(group_key(row)).or_default().push(row.clone());
    }
    let mut out = Vec::new();
    for (key, members) in groups {
        let reference = members
            .iter()
            .enumerate()
            .filter(|(_, r)| metric(r).is_some())
            .max_by_key(|(_, r)| (r.hours, std::cmp::Reverse(r.point)))
            .map(|(i, _)| i);
        let Some(reference) = reference else { continue };
        if let Ok(report) = convergence_report(&members, reference, band) {
            out.extend(report.into_iter().map(|mut c| {
                c.group = key.clone();
                c
            }));
        }
    }
    out
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    cov / (vx * vy).sqrt()
}
