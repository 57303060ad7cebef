//! File output: CSV tables and `key = value` summaries.
//!
//! Every number is printed with [`fmt_g`] (12 significant digits), queue
//! lengths count from 0, and phase labels count from 1. Output is a pure
//! function of the input scenario, so repeated runs are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mmq_core::heuristics::ComparisonRow;
use mmq_core::nhpp::NhppPolicy;
use mmq_core::solver::{Policy, ValueFunction};
use mmq_core::structure::MonotonicityReport;

use crate::fail::Failure;

/// 12 significant digits, scientific: enough that re-parsing a gain or a
/// rate perturbs it by well under the documented round-trip slack.
pub fn fmt_g(x: f64) -> String {
    format!("{x:.11e}")
}

/// `n,s,mu` rows over the whole lattice, phases 1-based.
pub fn write_policy_csv(path: &Path, policy: &Policy) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "s", "mu"])?;
    for n in 0..policy.num_levels() {
        for s in 0..policy.num_phases() {
            w.write_record([n.to_string(), (s + 1).to_string(), fmt_g(policy.rate(n, s))])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `n,s,v` rows: the value function (discounted) or relative values
/// (average).
pub fn write_value_csv(path: &Path, value: &ValueFunction) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "s", "v"])?;
    for n in 0..value.values().rows() {
        for s in 0..value.values().cols() {
            w.write_record([n.to_string(), (s + 1).to_string(), fmt_g(value.get(n, s))])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `n,z,mu` rows, `z` the clock at the left edge of each slot.
pub fn write_nhpp_policy_csv(path: &Path, policy: &NhppPolicy) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "z", "mu"])?;
    for n in 0..policy.num_levels() {
        for z in 0..policy.slots() {
            w.write_record([
                n.to_string(),
                fmt_g(z as f64 * policy.delta_t()),
                fmt_g(policy.rate(n, z)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One gain-comparison table row: the case and fluctuation labels plus the
/// optimal/heuristic gains.
pub struct TableRow {
    pub case_label: String,
    pub c_label: String,
    pub row: ComparisonRow,
}

/// `case,c,optimal,arm,arm_pct,prm,prm_pct,fixed,fixed_pct`.
pub fn write_comparison_csv(path: &Path, rows: &[TableRow]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "case", "c", "optimal", "arm", "arm_pct", "prm", "prm_pct", "fixed", "fixed_pct",
    ])?;
    for r in rows {
        w.write_record([
            r.case_label.clone(),
            r.c_label.clone(),
            fmt_g(r.row.optimal_gain),
            fmt_g(r.row.arm.gain),
            fmt_g(r.row.arm.pct_suboptimal),
            fmt_g(r.row.prm.gain),
            fmt_g(r.row.prm.pct_suboptimal),
            fmt_g(r.row.fixed.gain),
            fmt_g(r.row.fixed.pct_suboptimal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `T,optimal,approx,pct`: one row per period length.
pub fn write_nhpp_table_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["T", "optimal", "approx", "pct"])?;
    for &(t, optimal, approx) in rows {
        let pct = 100.0 * (approx - optimal) / optimal;
        w.write_record([fmt_g(t), fmt_g(optimal), fmt_g(approx), fmt_g(pct)])?;
    }
    w.flush()?;
    Ok(())
}

/// `key = value` lines in the given order.
pub fn write_summary(path: &Path, entries: &[(&str, String)]) -> Result<(), Failure> {
    let mut f = BufWriter::new(File::create(path)?);
    for (key, value) in entries {
        writeln!(f, "{key} = {value}")?;
    }
    f.flush()?;
    Ok(())
}

/// A monotonicity report as a violation CSV block (`n,s,mu_low,mu_high`,
/// phases 1-based) followed by a `#`-prefixed summary line.
pub fn render_report(name: &str, report: &MonotonicityReport) -> String {
    let mut out = String::from("n,s,mu_low,mu_high\n");
    for v in &report.violations {
        out.push_str(&format!(
            "{},{},{},{}\n",
            v.n,
            v.s + 1,
            fmt_g(v.value_low),
            fmt_g(v.value_high)
        ));
    }
    out.push_str(&format!(
        "# {name}: {}, {} violation(s)\n",
        if report.monotone { "monotone" } else { "violated" },
        report.violations.len()
    ));
    out
}
