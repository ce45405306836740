//! Sample and dataset loaders, result writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! exported value reads back bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dual::{PrimalSolution, SolveReport};
use crate::error::{Result, SfpError};
use crate::fda::{FunctionalSample, RobustClassifier};
use crate::quadrature::QuadratureScheme;
use crate::spectral::ComponentEstimate;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SfpError::io(path, e))
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SfpError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| SfpError::io(path, e))
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> SfpError {
    SfpError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_number(path: &Path, line: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("not a number: `{}`", cell.trim())))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("non-finite value `{}`", cell.trim())));
    }
    Ok(v)
}

/// Two-column `t,y` CSV; a first line that is not numeric is a header.
pub fn load_samples_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_samples_csv(path, &read(path)?)
}

fn parse_samples_csv(path: &Path, text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 columns, found {}", cells.len())));
        }
        if line == 1 && cells.iter().all(|c| c.trim().parse::<f64>().is_err()) {
            continue;
        }
        times.push(parse_number(path, line, cells[0])?);
        values.push(parse_number(path, line, cells[1])?);
    }
    if times.is_empty() {
        return Err(parse_error(path, 1, "no samples"));
    }
    Ok((times, values))
}

/// Writes `t,y` with a header line.
pub fn write_samples_csv(path: &Path, times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(SfpError::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let mut out = String::from("t,y\n");
    for (t, y) in times.iter().zip(values) {
        let _ = writeln!(out, "{t},{y}");
    }
    write_text(path, &out)
}

/// UCR layout: one series per row, label first, tab or whitespace separated.
/// Labels `−1`/`0` map to 0 and `1` to 1; values sit on uniform knots over `[0, 1]`.
pub fn load_ucr_tsv(path: &Path) -> Result<Vec<FunctionalSample>> {
    let text = read(path)?;
    let mut out = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let cells: Vec<&str> = raw.split(|c: char| c == '\t' || c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        if cells.is_empty() {
            continue;
        }
        let label = parse_number(path, line, cells[0])?;
        let label = match label {
            l if l == 1.0 => 1,
            l if l == 0.0 || l == -1.0 => 0,
            l => return Err(parse_error(path, line, format!("label must be -1, 0 or 1, got {l}"))),
        };
        let values = cells[1..]
            .iter()
            .map(|c| parse_number(path, line, c))
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_error(
                    path,
                    line,
                    format!("row {} has {} values, expected {w}", out.len(), values.len()),
                ))
            }
            _ => {}
        }
        out.push(FunctionalSample::uniform(values, label).map_err(|e| parse_error(path, line, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no series"));
    }
    Ok(out)
}

/// Writes series in the UCR layout, labels as `−1`/`1`.
pub fn write_ucr_tsv(path: &Path, samples: &[FunctionalSample]) -> Result<()> {
    let mut out = String::new();
    for s in samples {
        let _ = write!(out, "{}", if s.label == 1 { 1 } else { -1 });
        for v in s.values() {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// `beta,x` on `grid_points` uniform points, then a `#` footer with the
/// support intervals, `P` and `l0`.
pub fn write_solution_csv(path: &Path, sol: &PrimalSolution, grid_points: usize) -> Result<()> {
    let n = grid_points.max(2);
    let lo = sol.domain().lower()[0];
    let hi = sol.domain().upper()[0];
    let h = (hi - lo) / (n - 1) as f64;
    let mut out = String::from("beta,x\n");
    for i in 0..n {
        let b = if i + 1 == n { hi } else { lo + h * i as f64 };
        let _ = writeln!(out, "{b},{}", sol.evaluate(b));
    }
    for iv in &sol.support {
        let _ = writeln!(out, "# support,{},{}", iv.lo, iv.hi);
    }
    let _ = writeln!(out, "# objective,{}", sol.objective_value);
    let _ = writeln!(out, "# l0,{}", sol.l0);
    write_text(path, &out)
}

/// Contents of a solution CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub grid: Vec<(f64, f64)>,
    pub support: Vec<(f64, f64)>,
    pub objective: f64,
    pub l0: f64,
}

pub fn read_solution_csv(path: &Path) -> Result<SolutionFile> {
    let text = read(path)?;
    let mut file = SolutionFile {
        grid: Vec::new(),
        support: Vec::new(),
        objective: f64::NAN,
        l0: f64::NAN,
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if line == 1 || raw.trim().is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix("# ") {
            let cells: Vec<&str> = rest.split(',').collect();
            match (cells[0], cells.len()) {
                ("support", 3) => file
                    .support
                    .push((parse_number(path, line, cells[1])?, parse_number(path, line, cells[2])?)),
                ("objective", 2) => file.objective = parse_number(path, line, cells[1])?,
                ("l0", 2) => file.l0 = parse_number(path, line, cells[1])?,
                _ => return Err(parse_error(path, line, format!("unknown footer `{rest}`"))),
            }
            continue;
        }
        let cells: Vec<&str> = raw.split(',').collect();
        if cells.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 columns, found {}", cells.len())));
        }
        // NaN marks a failed pointwise solve and is kept as such.
        let x = if cells[1].trim() == "NaN" {
            f64::NAN
        } else {
            parse_number(path, line, cells[1])?
        };
        file.grid.push((parse_number(path, line, cells[0])?, x));
    }
    Ok(file)
}

/// Columns `t, d_t, eta_t, support_measure, gap_estimate`.
pub fn write_trace_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut out = String::from("t,d_t,eta_t,support_measure,gap_estimate\n");
    for t in 0..report.dual_trace.len() {
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            report.dual_trace[t], report.eta_trace[t], report.support_trace[t], report.gap_trace[t]
        );
    }
    write_text(path, &out)
}

/// Columns `f_hat, a_hat, lo, hi, mass`.
pub fn write_components_csv(path: &Path, components: &[ComponentEstimate]) -> Result<()> {
    let mut out = String::from("f_hat,a_hat,lo,hi,mass\n");
    for c in components {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.f_hat, c.a_hat, c.bump_interval.lo, c.bump_interval.hi, c.mass
        );
    }
    write_text(path, &out)
}

/// `beta,w` at the scheme's nodes, then `# b`, `# r`, `# lambda` and the support.
pub fn write_classifier_csv(path: &Path, clf: &RobustClassifier, scheme: &QuadratureScheme) -> Result<()> {
    let mut out = String::from("beta,w\n");
    for (b, w) in scheme.nodes().zip(clf.weights_on(scheme)) {
        let _ = writeln!(out, "{},{w}", b[0]);
    }
    for iv in &clf.support {
        let _ = writeln!(out, "# support,{},{}", iv.lo, iv.hi);
    }
    let _ = writeln!(out, "# b,{}", clf.b);
    let _ = writeln!(out, "# r,{}", clf.r);
    let _ = writeln!(out, "# lambda,{}", clf.lambda);
    write_text(path, &out)
}

/// Writes a header and rows of floats.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}
