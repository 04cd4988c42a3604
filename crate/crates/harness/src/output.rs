//! CSV writers. Floats carry 10 significant digits.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::runner::{ExperimentOutcome, PolicyOutcome};

pub const POLICY_HEADER: &str =
    "k,mean_trace,oracle_trace,cum_regret,stderr_regret,n_sub_mean,classical_regret_mean";
pub const SUMMARY_HEADER: &str =
    "policy,epsilon,theta_c_hat,T,runs,regret_T,stderr_T,n_sub_T,diverged_runs,scaling_class";

/// Format with 10 significant digits. Plain notation for exponents in
/// `-5..10`, scientific otherwise; trailing zeros are dropped.
pub fn fmt_sig10(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig10).unwrap_or_default()
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Write `lines` (header first) to `path`.
pub fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut w = create(path)?;
    for line in lines {
        writeln!(w, "{}", line.as_ref()).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn policy_file_name(ordinal: usize, outcome: &PolicyOutcome) -> String {
    format!("policy_{ordinal:02}_{}.csv", outcome.spec.kind().label())
}

pub fn policy_rows(outcome: &PolicyOutcome, oracle: &[f64]) -> Vec<String> {
    let r = &outcome.report;
    let mut rows = Vec::with_capacity(r.mean_trace.len() + 1);
    rows.push(POLICY_HEADER.to_string());
    for k in 0..r.mean_trace.len() {
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            k + 1,
            fmt_sig10(r.mean_trace[k]),
            fmt_sig10(oracle[k]),
            fmt_sig10(r.cum_regret[k]),
            fmt_sig10(r.stderr_regret[k]),
            fmt_sig10(r.n_sub[k]),
            fmt_sig10(r.classical_regret[k]),
        ));
    }
    rows
}

pub fn summary_row(outcome: &PolicyOutcome) -> String {
    let r = &outcome.report;
    let spec = &outcome.spec;
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        spec.kind().label(),
        opt(spec.epsilon()),
        opt(spec.theta_c_hat()),
        r.horizon(),
        r.runs,
        fmt_sig10(r.final_regret()),
        fmt_sig10(r.final_stderr()),
        fmt_sig10(*r.n_sub.last().expect("horizon >= 1")),
        r.diverged_runs,
        outcome.scaling.class.label(),
    )
}

/// Write one file per policy plus `summary.csv` into `dir`; returns the
/// paths written.
pub fn write_experiment(dir: &Path, outcome: &ExperimentOutcome) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::with_capacity(outcome.policies.len() + 1);
    for (i, p) in outcome.policies.iter().enumerate() {
        let path = dir.join(policy_file_name(i, p));
        write_lines(&path, policy_rows(p, &p.report.oracle_trace))?;
        written.push(path);
    }
    let summary = dir.join("summary.csv");
    let rows = std::iter::once(SUMMARY_HEADER.to_string())
        .chain(outcome.policies.iter().map(summary_row));
    write_lines(&summary, rows)?;
    written.push(summary);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(fmt_sig10(0.0), "0");
        assert_eq!(fmt_sig10(1.0), "1");
        assert_eq!(fmt_sig10(143.0), "143");
        assert_eq!(fmt_sig10(1.0 / 3.0), "0.3333333333");
        assert_eq!(fmt_sig10(2.0 / 3.0 * 1000.0), "666.6666667");
        assert_eq!(fmt_sig10(-0.714461559338), "-0.7144615593");
        assert_eq!(fmt_sig10(1e12), "1e12");
        assert_eq!(fmt_sig10(123456789.04), "123456789");
        assert_eq!(fmt_sig10(9999999999.6), "1e10");
        assert_eq!(fmt_sig10(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig10(0.00012345678912), "0.0001234567891");
        assert_eq!(fmt_sig10(f64::NAN), "nan");
    }

    #[test]
    fn sig10_round_trips_to_ten_digits() {
        for &x in &[std::f64::consts::PI, 1e-9 / 7.0, 7.0e15 / 3.0, -2.5e-3, 42.125] {
            let back: f64 = fmt_sig10(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 6e-10, "{x} -> {back}");
        }
    }
}
