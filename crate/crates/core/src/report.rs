//! Text and CSV rendering of solutions and comparisons.

use std::fmt::Write;

use crate::problem::SolutionGrid;
use crate::refdata::ComparisonReport;

/// Round-trip CSV number format (17 significant digits).
pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// `%g`-style formatting with `digits` significant figures.
pub fn sig_figs(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `t,y` rows with a header.
pub fn solution_csv(sol: &SolutionGrid) -> String {
    let mut out = String::from("t,y\n");
    for (t, y) in sol.eval_points.iter().zip(&sol.y) {
        let _ = writeln!(out, "{},{}", csv_number(*t), csv_number(*y));
    }
    out
}

/// Human-readable table rounded to six significant figures.
pub fn solution_table(sol: &SolutionGrid, show_residual: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# method={} J={} iterations={}",
        sol.method,
        sol.config.level(),
        sol.iterations
    );
    let _ = writeln!(out, "{:>8}  {:>12}", "t", "y(t)");
    for (t, y) in sol.eval_points.iter().zip(&sol.y) {
        let _ = writeln!(out, "{:>8}  {:>12}", sig_figs(*t, 6), sig_figs(*y, 6));
    }
    if show_residual {
        match sol.residual_sup {
            Some(r) => {
                let _ = writeln!(out, "R_inf = {}", sig_figs(r, 6));
            }
            None => {
                let _ = writeln!(out, "R_inf = unavailable");
            }
        }
    }
    out
}

pub fn comparison_block(report: &ComparisonReport, label: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# comparison against {label}");
    let _ = writeln!(
        out,
        "{:>8}  {:>12}  {:>12}  {:>12}",
        "t", "computed", "reference", "|diff|"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:>8}  {:>12}  {:>12}  {:>12}",
            sig_figs(r.t, 6),
            sig_figs(r.computed, 6),
            sig_figs(r.reference, 6),
            sig_figs(r.abs_diff, 3)
        );
    }
    let _ = writeln!(
        out,
        "max |diff| = {} (atol {}) -> {}",
        sig_figs(report.max_diff, 3),
        sig_figs(report.atol, 3),
        if report.pass { "PASS" } else { "FAIL" }
    );
    out
}
