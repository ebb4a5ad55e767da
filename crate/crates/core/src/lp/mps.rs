//! MPS reader and writer.
//!
//! Fixed format places fields at the classic column positions and replaces
//! every name with an 8-character code (`C0000012`, `R0000003`); the original
//! names go to a `<file>.names` sidecar that the reader picks up when present.
//! Free format keeps full names. Numbers are written in shortest round-trip
//! form, so a numeric field may run past its nominal width; the reader splits
//! on whitespace and accepts both layouts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{LinearProgram, LpBuilder, RowSense};

const OBJECTIVE_ROW: &str = "COST";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpsFormat {
    Fixed,
    Free,
}

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed MPS at line {line}: {message}")]
    MalformedMps { line: usize, message: String },
    #[error("{0} names do not fit the fixed-format code space")]
    TooLarge(usize),
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".names");
    PathBuf::from(s)
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        return "inf".into();
    }
    if v == f64::NEG_INFINITY {
        return "-inf".into();
    }
    let plain = format!("{v}");
    let exp = format!("{v:e}");
    if plain.len() <= exp.len() {
        plain
    } else {
        exp
    }
}

fn code(prefix: char, k: usize) -> Result<String, MpsError> {
    if k >= 10_000_000 {
        return Err(MpsError::TooLarge(k + 1));
    }
    Ok(format!("{prefix}{k:07}"))
}

struct Layout {
    fixed: bool,
    out: String,
}

impl Layout {
    /// One data line: indicator, then name/value fields.
    fn line(&mut self, indicator: &str, fields: &[&str]) {
        if self.fixed {
            // Columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
            let mut line = format!(" {indicator:<2} ");
            let starts = [4usize, 14, 24, 39, 49];
            for (f, &start) in fields.iter().zip(&starts) {
                while line.len() < start {
                    line.push(' ');
                }
                if !line.ends_with(' ') {
                    line.push(' ');
                }
                line.push_str(f);
            }
            self.out.push_str(line.trim_end());
        } else {
            self.out.push(' ');
            if !indicator.is_empty() {
                self.out.push_str(indicator);
                self.out.push(' ');
            }
            self.out.push_str(&fields.join(" "));
        }
        self.out.push('\n');
    }
}

/// Writes `lp` to `path`. Fixed format also writes the name sidecar.
pub fn export_mps(lp: &LinearProgram, path: &Path, format: MpsFormat) -> Result<(), MpsError> {
    let fixed = format == MpsFormat::Fixed;
    let (col_names, row_names): (Vec<String>, Vec<String>) = if fixed {
        (
            (0..lp.n_cols()).map(|j| code('C', j)).collect::<Result<_, _>>()?,
            (0..lp.n_rows()).map(|i| code('R', i)).collect::<Result<_, _>>()?,
        )
    } else {
        (lp.col_names.clone(), lp.row_names.clone())
    };
    let mut w = Layout {
        fixed,
        out: String::new(),
    };
    w.out.push_str("NAME          LP\nROWS\n");
    w.line("N", &[OBJECTIVE_ROW]);
    for (i, s) in lp.senses.iter().enumerate() {
        let ind = match s {
            RowSense::Le => "L",
            RowSense::Eq => "E",
            RowSense::Ge => "G",
        };
        w.line(ind, &[&row_names[i]]);
    }
    w.out.push_str("COLUMNS\n");
    for j in 0..lp.n_cols() {
        // The objective entry is always written so empty columns survive.
        w.line("", &[&col_names[j], OBJECTIVE_ROW, &num(lp.objective[j])]);
        let (rows, vals) = lp.column(j);
        for (&i, &v) in rows.iter().zip(vals) {
            w.line("", &[&col_names[j], &row_names[i], &num(v)]);
        }
    }
    w.out.push_str("RHS\n");
    for i in 0..lp.n_rows() {
        if lp.rhs[i] != 0.0 {
            w.line("", &["RHS", &row_names[i], &num(lp.rhs[i])]);
        }
    }
    w.out.push_str("BOUNDS\n");
    for j in 0..lp.n_cols() {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let name = col_names[j].as_str();
        if l == u {
            w.line("FX", &["BND", name, &num(l)]);
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            w.line("FR", &["BND", name]);
            continue;
        }
        if l == f64::NEG_INFINITY {
            w.line("MI", &["BND", name]);
        } else if l != 0.0 {
            w.line("LO", &["BND", name, &num(l)]);
        }
        if u != f64::INFINITY {
            w.line("UP", &["BND", name, &num(u)]);
        }
    }
    w.out.push_str("ENDATA\n");
    write(path, w.out.as_bytes())?;

    if fixed {
        let mut map = String::new();
        for (short, long) in col_names.iter().zip(&lp.col_names) {
            let _ = writeln!(map, "{short} {long}");
        }
        for (short, long) in row_names.iter().zip(&lp.row_names) {
            let _ = writeln!(map, "{short} {long}");
        }
        write(&sidecar_path(path), map.as_bytes())?;
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), MpsError> {
    fs::write(path, bytes).map_err(|source| MpsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Head,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

/// Reads an MPS file in either layout. Names are restored from a sidecar if
/// one sits next to the file.
pub fn import_mps(path: &Path) -> Result<LinearProgram, MpsError> {
    let text = fs::read_to_string(path).map_err(|source| MpsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, message: String| MpsError::MalformedMps { line, message };

    let mut b = LpBuilder::new();
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut objective_name: Option<String> = None;
    let mut bounded: Vec<bool> = Vec::new();
    let mut section = Section::Head;
    let mut ended = false;
    let mut last_line = 0;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        last_line = line_no;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => Section::Head,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(bad(line_no, format!("unknown section '{other}'"))),
            };
            continue;
        }
        let parse = |s: &str| -> Result<f64, MpsError> {
            s.parse::<f64>()
                .map_err(|_| bad(line_no, format!("'{s}' is not a number")))
        };
        match section {
            Section::Head => return Err(bad(line_no, "data before ROWS".into())),
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(bad(line_no, "ROWS entry needs a type and a name".into()));
                }
                let sense = match tokens[0] {
                    "N" => {
                        if objective_name.is_none() {
                            objective_name = Some(tokens[1].to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "E" => RowSense::Eq,
                    "G" => RowSense::Ge,
                    t => return Err(bad(line_no, format!("unknown row type '{t}'"))),
                };
                let i = b.add_row(tokens[1], sense, 0.0, &[]);
                if rows.insert(tokens[1].to_string(), i).is_some() {
                    return Err(bad(line_no, format!("duplicate row '{}'", tokens[1])));
                }
            }
            Section::Columns => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(bad(line_no, "COLUMNS entry needs 3 or 5 fields".into()));
                }
                let j = match cols.get(tokens[0]) {
                    Some(&j) => j,
                    None => {
                        let j = b.add_column(tokens[0], 0.0, 0.0, f64::INFINITY);
                        cols.insert(tokens[0].to_string(), j);
                        bounded.push(false);
                        j
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let v = parse(pair[1])?;
                    if Some(pair[0]) == objective_name.as_deref() {
                        b.add_cost(j, v);
                    } else {
                        let &i = rows
                            .get(pair[0])
                            .ok_or_else(|| bad(line_no, format!("unknown row '{}'", pair[0])))?;
                        b.add_term(i, j, v);
                    }
                }
            }
            Section::Rhs => {
                let fields = if tokens.len() % 2 == 1 { &tokens[1..] } else { &tokens[..] };
                for pair in fields.chunks(2) {
                    if pair.len() != 2 {
                        return Err(bad(line_no, "RHS entry needs name/value pairs".into()));
                    }
                    let v = parse(pair[1])?;
                    if Some(pair[0]) == objective_name.as_deref() {
                        continue;
                    }
                    let &i = rows
                        .get(pair[0])
                        .ok_or_else(|| bad(line_no, format!("unknown row '{}'", pair[0])))?;
                    b.set_rhs(i, v);
                }
            }
            Section::Ranges => return Err(bad(line_no, "RANGES are not supported".into())),
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(bad(line_no, "BOUNDS entry too short".into()));
                }
                let &j = cols
                    .get(tokens[2])
                    .ok_or_else(|| bad(line_no, format!("unknown column '{}'", tokens[2])))?;
                let value = || -> Result<f64, MpsError> {
                    tokens
                        .get(3)
                        .ok_or_else(|| bad(line_no, "bound value missing".into()))
                        .and_then(|s| parse(s))
                };
                let (l, u) = b.bounds(j);
                let (l, u) = match tokens[0] {
                    "UP" => (l, value()?),
                    "LO" => (value()?, u),
                    "FX" => {
                        let v = value()?;
                        (v, v)
                    }
                    "FR" => (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => (f64::NEG_INFINITY, u),
                    "PL" => (l, f64::INFINITY),
                    t => return Err(bad(line_no, format!("unsupported bound type '{t}'"))),
                };
                b.set_bounds(j, l, u);
                bounded[j] = true;
            }
        }
    }
    if !ended {
        return Err(bad(last_line + 1, "missing ENDATA".into()));
    }
    let mut lp = b.finish().map_err(|e| bad(last_line, e.to_string()))?;

    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let map_text = fs::read_to_string(&sidecar).map_err(|source| MpsError::Io {
            path: sidecar.clone(),
            source,
        })?;
        let map: HashMap<&str, &str> = map_text
            .lines()
            .filter_map(|l| l.split_once(' '))
            .collect();
        for name in lp.col_names.iter_mut().chain(lp.row_names.iter_mut()) {
            if let Some(long) = map.get(name.as_str()) {
                *name = long.to_string();
            }
        }
    }
    Ok(lp)
}
