//! Convergence tables: observed orders, CSV and markdown output.

use std::fmt::Write as _;
use std::path::Path;

use cosserat_core::assembly::{Formulation, SchemeName};

use crate::config::EllCase;
use crate::runner::{FieldErrors, LevelResult};
use crate::StudyError;

pub const CSV_HEADER: [&str; 18] = [
    "scheme",
    "formulation",
    "dim",
    "ell",
    "level",
    "h",
    "err_sigma",
    "ord_sigma",
    "err_omega",
    "ord_omega",
    "err_u",
    "ord_u",
    "err_r",
    "ord_r",
    "dof_full",
    "dof_schur",
    "iters",
    "seconds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub scheme: SchemeName,
    pub formulation: Formulation,
    pub dim: usize,
    pub ell: EllCase,
    pub rows: Vec<LevelResult>,
}

/// Observed orders `log(e_i/e_{i+1}) / log(h_i/h_{i+1})`; `None` for the
/// first row and wherever an error vanishes.
pub fn compute_orders(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for i in 1..errors.len() {
        let (e0, e1) = (errors[i - 1], errors[i]);
        if e0 > 0.0 && e1 > 0.0 && hs[i - 1] != hs[i] {
            out[i] = Some((e0 / e1).ln() / (hs[i - 1] / hs[i]).ln());
        }
    }
    out
}

impl ConvergenceReport {
    pub fn new(scheme: SchemeName, formulation: Formulation, dim: usize, ell: EllCase) -> Self {
        ConvergenceReport {
            scheme,
            formulation,
            dim,
            ell,
            rows: Vec::new(),
        }
    }

    pub fn hs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    /// Error sequence of one field.
    pub fn errors(&self, field: impl Fn(&FieldErrors) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| field(&r.errors)).collect()
    }

    pub fn orders(&self, field: impl Fn(&FieldErrors) -> f64) -> Vec<Option<f64>> {
        compute_orders(&self.errors(field), &self.hs())
    }
}

fn fmt_order(o: Option<f64>) -> String {
    o.map(|v| format!("{v:.2}")).unwrap_or_default()
}

const FIELDS: [fn(&FieldErrors) -> f64; 4] = [|e| e.sigma, |e| e.omega, |e| e.u, |e| e.r];

/// One CSV record per row of every report.
pub fn write_csv<W: std::io::Write>(reports: &[ConvergenceReport], out: W) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rep in reports {
        let orders: Vec<Vec<Option<f64>>> = FIELDS.iter().map(|f| rep.orders(f)).collect();
        for (i, row) in rep.rows.iter().enumerate() {
            let mut rec = vec![
                rep.scheme.to_string(),
                rep.formulation.to_string(),
                rep.dim.to_string(),
                rep.ell.as_str().to_string(),
                row.n.map_or(row.level, |n| n).to_string(),
                format!("{:.6e}", row.h),
            ];
            for (k, f) in FIELDS.iter().enumerate() {
                rec.push(format!("{:.6e}", f(&row.errors)));
                rec.push(fmt_order(orders[k][i]));
            }
            rec.push(row.dof_full.to_string());
            rec.push(row.dof_schur.to_string());
            rec.push(row.solver.iterations.to_string());
            rec.push(format!("{:.3}", row.solver.seconds));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One table per report, with error and order columns per field.
pub fn to_markdown(reports: &[ConvergenceReport]) -> String {
    let mut s = String::new();
    for rep in reports {
        let _ = writeln!(
            s,
            "## {} {} (d = {}, ell = {})\n",
            rep.scheme,
            rep.formulation,
            rep.dim,
            rep.ell.as_str()
        );
        s.push_str("| h | Error(σ) | Order | Error(ω) | Order | Error(u) | Order | Error(r) | Order | DoF | Schur DoF | Iter |\n");
        s.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
        let orders: Vec<Vec<Option<f64>>> = FIELDS.iter().map(|f| rep.orders(f)).collect();
        for (i, row) in rep.rows.iter().enumerate() {
            let _ = write!(s, "| {:.2e} |", row.h);
            for (k, f) in FIELDS.iter().enumerate() {
                let o = orders[k][i].map_or("-".to_string(), |v| format!("{v:.2}"));
                let _ = write!(s, " {:.2e} | {} |", f(&row.errors), o);
            }
            let _ = writeln!(s, " {} | {} | {} |", row.dof_full, row.dof_schur, row.solver.iterations);
        }
        s.push('\n');
    }
    s
}

/// Writes the reports to `path` in the given format.
pub fn emit_report(reports: &[ConvergenceReport], format: ReportFormat, path: &Path) -> Result<(), StudyError> {
    let io = |e| StudyError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    match format {
        ReportFormat::Csv => write_csv(reports, file),
        ReportFormat::Markdown => {
            use std::io::Write;
            let mut file = file;
            file.write_all(to_markdown(reports).as_bytes()).map_err(io)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_simple_sequences() {
        let o = compute_orders(&[4e-2, 1e-2], &[0.2, 0.1]);
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 2.0).abs() < 1e-12);
        let o = compute_orders(&[2e-2, 1e-2], &[0.2, 0.1]);
        assert!((o[1].unwrap() - 1.0).abs() < 1e-12);
        let o = compute_orders(&[1e-2, 1e-2], &[0.2, 0.1]);
        assert_eq!(o[1], Some(0.0));
        assert_eq!(compute_orders(&[1e-2, 0.0], &[0.2, 0.1])[1], None);
    }
}
