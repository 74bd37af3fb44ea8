use std::path::Path;

use super::{Decay, PotentialSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, Mat2};

/// Load a tabulated potential from CSV. Each row holds `x` followed by the
/// real and imaginary parts of `V11, V12, V21, V22`. Rows must be sorted by
/// `x`; values are linearly interpolated and vanish outside the table. A
/// non-numeric first line is treated as a header.
pub fn load_tabulated(path: &Path) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_tabulated(&text, &path.display().to_string())
}

pub(crate) fn parse_tabulated(text: &str, name: &str) -> Result<PotentialSpec> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if xs.is_empty() && vs.is_empty() && lineno == 0 => continue,
            Err(e) => return Err(Error::Config(format!("{name}:{}: {e}", lineno + 1))),
        };
        if row.len() != 9 {
            return Err(Error::Config(format!("{name}:{}: expected 9 columns, got {}", lineno + 1, row.len())));
        }
        if let Some(&last) = xs.last() {
            if row[0] <= last {
                return Err(Error::Config(format!("{name}:{}: x values must increase", lineno + 1)));
            }
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{name}:{}: non-finite value", lineno + 1)));
        }
        xs.push(row[0]);
        vs.push(Mat2::new(c(row[1], row[2]), c(row[3], row[4]), c(row[5], row[6]), c(row[7], row[8])));
    }
    if xs.len() < 2 {
        return Err(Error::Config(format!("{name}: need at least two rows")));
    }
    let hermitian = vs.iter().all(|v| (v - v.adjoint()).norm() == 0.0);
    let radius = xs[0].abs().max(xs[xs.len() - 1].abs());
    let breakpoints = xs.clone();
    let eval = move |x: f64| {
        if x < xs[0] || x > xs[xs.len() - 1] {
            return Mat2::zeros();
        }
        let k = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[k - 1], xs[k]);
        let t = (x - x0) / (x1 - x0);
        vs[k - 1] * c(1.0 - t, 0.0) + vs[k] * c(t, 0.0)
    };
    Ok(PotentialSpec::new(
        format!("tabulated({name})"),
        eval,
        hermitian,
        Decay::Compact { radius },
        Some(2),
        breakpoints,
        radius,
    ))
}
