//! CSV output of experiment rows.

use std::io::{self, Write};

use super::SummaryRow;

pub const CSV_HEADER: &str =
    "scenario,estimator,n,K,reps,failures,q05,q25,q50,q75,q95,mean,variance,kurtosis,asym_var,sample_var,seed";

/// Format like C's `%.6g`: six significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e6)`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // rounding to six digits first fixes the exponent
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        strip_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa.to_string()), exp.abs())
    }
}

fn strip_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn cell(x: Option<f64>) -> String {
    x.map(format_g6).unwrap_or_default()
}

pub fn csv_line(row: &SummaryRow) -> String {
    let s = row.summary.as_ref();
    [
        row.scenario.clone(),
        row.estimator.clone(),
        row.n.to_string(),
        row.k.map(|k| k.to_string()).unwrap_or_default(),
        row.reps.to_string(),
        row.failures.to_string(),
        cell(s.map(|s| s.q05)),
        cell(s.map(|s| s.q25)),
        cell(s.map(|s| s.q50)),
        cell(s.map(|s| s.q75)),
        cell(s.map(|s| s.q95)),
        cell(s.map(|s| s.mean)),
        cell(s.map(|s| s.variance)),
        cell(s.and_then(|s| s.kurtosis)),
        cell(row.asym_var),
        cell(row.sample_var),
        row.seed.to_string(),
    ]
    .join(",")
}

pub fn write_csv(out: &mut impl Write, rows: &[SummaryRow]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}
