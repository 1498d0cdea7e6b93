//! Plain-text rendering. Tables round for display only; JSON output always
//! carries full precision.

use std::fmt::Write;

use pcr_core::montecarlo::{RowKind, SimulationResult, TheoryReport};

/// Rounds to `digits` significant figures and drops trailing zeros,
/// e.g. `0.0301 → "0.03"`, `-0.00501 → "-0.005"`, `12345 → "12000"`.
pub fn sig_figs(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1) as i32;
    let mag = x.abs().log10().floor() as i32;
    let decimals = digits - 1 - mag;
    let mut s = if decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let unit = 10f64.powi(-decimals);
        format!("{:.0}", (x / unit).round() * unit)
    };
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        return "0".into();
    }
    s
}

/// Values this small relative to their column are shown as `0`.
const DISPLAY_ZERO: f64 = 1e-9;

fn column_scale(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn shown(x: f64, scale: f64, digits: usize) -> String {
    if x.abs() <= DISPLAY_ZERO * scale {
        "0".into()
    } else {
        sig_figs(x, digits)
    }
}

/// One coefficient column: estimates, standard errors and optional
/// "larger than OLS" flags.
pub struct CoefColumn<'a> {
    pub title: String,
    pub beta: &'a [f64],
    pub se: &'a [f64],
    pub flags: Option<&'a [bool]>,
}

pub const FLAG_MARK: &str = "*";

pub fn coefficient_table(names: &[String], columns: &[CoefColumn<'_>], digits: usize) -> String {
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(names.len() + 1);
    let mut header = vec![String::new()];
    header.extend(columns.iter().map(|c| c.title.clone()));
    cells.push(header);
    for (j, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        for c in columns {
            let (bs, ss) = (column_scale(c.beta), column_scale(c.se));
            let mut cell = format!(
                "{} ({})",
                shown(c.beta[j], bs, digits),
                shown(c.se[j], ss, digits)
            );
            if c.flags.is_some_and(|f| f[j]) {
                cell.push(' ');
                cell.push_str(FLAG_MARK);
            }
            row.push(cell);
        }
        cells.push(row);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| {
            cells
                .iter()
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    out
}

/// Significant figures in the usual range, scientific notation outside it.
pub fn compact(x: f64, digits: usize) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&a) {
        sig_figs(x, digits)
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x)
    }
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "-".into(), |v| compact(v, digits))
}

pub fn simulation_table(res: &SimulationResult, report: &TheoryReport, alert_z: f64) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "Monte Carlo: n = {}, p = {}, d = {}, replicates = {}, seed = {}",
        res.n, res.p, res.d, res.replicates, res.seed
    )
    .unwrap();
    writeln!(out, "generator: {}", res.generator).unwrap();
    writeln!(
        out,
        "sigma2 = {}, omitted signal omega = {}",
        compact(res.sigma2_true, 6),
        compact(res.omitted_signal, 6)
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "{:<6} {:<5} {:>13} {:>13} {:>11} {:>9}  claim",
        "kind", "alert", "predicted", "observed", "mcse", "z|relF"
    )
    .unwrap();
    for row in &report.rows {
        let kind = match row.kind {
            RowKind::Check => "check",
            RowKind::Alternative => "alt",
        };
        let stat = match row.rel_frobenius {
            Some(r) => compact(r, 3),
            None => opt(row.z, 3),
        };
        writeln!(
            out,
            "{:<6} {:<5} {:>13} {:>13} {:>11} {:>9}  {}",
            kind,
            if row.alerts(alert_z) { "!" } else { "" },
            compact(row.predicted, 6),
            compact(row.observed, 6),
            opt(row.mcse, 3),
            stat,
            row.claim
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    for a in &report.adjudication {
        writeln!(
            out,
            "{}: closer prediction = {} (trace z = {}, reduced-dof z = {})",
            a.quantity,
            a.closer,
            opt(a.trace_z, 3),
            opt(a.reduced_dof_z, 3)
        )
        .unwrap();
    }
    out
}
