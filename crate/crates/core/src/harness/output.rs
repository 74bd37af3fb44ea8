use std::fmt::Write as _;
use std::path::Path;

use super::SweepReport;
use crate::error::Result;

pub const CSV_COLUMNS: [&str; 10] =
    ["eps", "z_bs_re", "z_bs_im", "z_grid_re", "z_grid_im", "z_minmax", "pred2", "pred3", "resid2", "resid3"];

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// The fixed-column CSV; complex predictions contribute their real part.
pub fn csv_string(report: &SweepReport) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in &report.rows {
        let bs = r.z("bs");
        let grid = r.z("grid");
        let fields = [
            Some(r.eps),
            bs.map(|z| z.re),
            bs.map(|z| z.im),
            grid.map(|z| z.re),
            grid.map(|z| z.im),
            r.z("minmax").map(|z| z.re),
            r.pred2.map(|z| z.re),
            r.pred3.map(|z| z.re),
            r.resid2,
            r.resid3,
        ];
        let line: Vec<String> = fields.into_iter().map(num).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    out
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn write_csv(report: &SweepReport, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, csv_string(report))?;
    Ok(())
}

pub fn write_json(report: &SweepReport, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}
