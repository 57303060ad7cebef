//! Built-in parameter sets regenerating the benchmark tables.
//!
//! Tables 2 and 3 compare the optimal policy against the three heuristics
//! on 8-phase chains: three arrival-rate ladders (cases I–III) crossed
//! with four fluctuation rates c, under exponential service cost, linear
//! holding, ū = 15, and truncation 50. Table 2 modulates with a symmetric
//! birth-death chain (η_{i,i±1} = c), Table 3 with a unidirectional cycle
//! (η_{i,i+1} = c, wrapping).
//!
//! Tables 4 and 5 quantify the MMPP approximation of periodic arrivals:
//! Table 4 sweeps the period of a five-step piecewise-constant rate
//! (0.1, 2, 4, 2, 0.1 on equal fifths, exponential cost, ū = 10, 5
//! partitions), Table 5 a sinusoid 5·sin(2πt/T) + 6 (quadratic service
//! cost μ²/2 − 1, holding (n − 20)⁺, ū = 15, Δt = T/200, 6 partitions).

use std::f64::consts::PI;
use std::path::Path;

use mmq_core::heuristics;
use mmq_core::linalg::Mat;
use mmq_core::model::{CostModel, HoldingCost, PhaseProcess, Scenario, ServiceCost};
use mmq_core::nhpp::{self, NhppScenario, RateFamily, RateFunction};

use crate::fail::Failure;
use crate::io::{self, TableRow};
use crate::pipeline;

const FLUCTUATIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Case label and the common step of its arrival-rate ladder.
const CASES: [(&str, f64); 3] = [("I", 0.25), ("II", 0.5), ("III", 0.75)];

const TRUNCATION: usize = 50;

/// Eight arrival rates starting at 0.1 with the given common step.
fn rate_ladder(step: f64) -> Vec<f64> {
    (0..8).map(|i| 0.1 + step * i as f64).collect()
}

/// Symmetric birth-death generator on 8 phases with fluctuation rate `c`.
fn bd_generator(c: f64) -> Mat {
    let l = 8;
    let mut rows = vec![vec![0.0; l]; l];
    for i in 0..l {
        if i > 0 {
            rows[i][i - 1] = c;
        }
        if i + 1 < l {
            rows[i][i + 1] = c;
        }
        rows[i][i] = -rows[i].iter().sum::<f64>();
    }
    Mat::from_rows(&rows).expect("well-formed by construction")
}

/// Unidirectional cycle on 8 phases with fluctuation rate `c`.
fn cyclic_generator(c: f64) -> Mat {
    let l = 8;
    let mut rows = vec![vec![0.0; l]; l];
    for i in 0..l {
        rows[i][(i + 1) % l] = c;
        rows[i][i] = -c;
    }
    Mat::from_rows(&rows).expect("well-formed by construction")
}

pub fn run(table: u8, out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out)?;
    match table {
        2 => comparison_table(2, &out.join("table2.csv"), bd_generator),
        3 => comparison_table(3, &out.join("table3.csv"), cyclic_generator),
        4 => table4(&out.join("table4.csv")),
        5 => table5(&out.join("table5.csv")),
        _ => Err(Failure::Config(format!(
            "no table {table}; choose 2, 3, 4, or 5"
        ))),
    }
}

fn comparison_table(
    table: u8,
    path: &Path,
    generator: fn(f64) -> Mat,
) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for (label, step) in CASES {
        for c in FLUCTUATIONS {
            let phase = PhaseProcess::new(generator(c), rate_ladder(step))?;
            let cost = CostModel::new(ServiceCost::Exponential, HoldingCost::Linear, 15.0)?;
            let scenario = Scenario::new(phase, cost, TRUNCATION, 0.0, 1e-8)?;
            let row = heuristics::compare_heuristics(&scenario)?;
            eprintln!(
                "table {table}: case {label} c = {c}: optimal {:.4}, arm {:.4}, prm {:.4}, fixed {:.4}",
                row.optimal_gain, row.arm.gain, row.prm.gain, row.fixed.gain
            );
            rows.push(TableRow {
                case_label: label.to_string(),
                c_label: io::fmt_g(c),
                row,
            });
        }
    }
    io::write_comparison_csv(path, &rows)
}

/// One period length of a Table 4/5 row: optimal periodic solve next to
/// the lifted-MMPP evaluation, both under the same discretization.
fn nhpp_row(
    table: u8,
    rate: RateFunction,
    cost: CostModel,
    delta_t: f64,
    partitions: usize,
) -> Result<(f64, f64, f64), Failure> {
    let period = rate.period();
    let sc = NhppScenario::new(rate, cost, TRUNCATION, delta_t, 1e-6)?;
    let optimal = nhpp::solve_nhpp_average(&sc)?.gain;
    let approx = pipeline::approximate(&sc, partitions)?.gain;
    eprintln!("table {table}: T = {period:.4}: optimal {optimal:.4}, approx {approx:.4}");
    Ok((period, optimal, approx))
}

fn table4(path: &Path) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for t in [4.0, 5.0, 6.0, 7.0] {
        let rate = RateFunction::new(
            RateFamily::PiecewiseConstant {
                breakpoints: (0..=5).map(|i| t * i as f64 / 5.0).collect(),
                rates: vec![0.1, 2.0, 4.0, 2.0, 0.1],
            },
            t,
        )?;
        let cost = CostModel::new(ServiceCost::Exponential, HoldingCost::Linear, 10.0)?;
        rows.push(nhpp_row(4, rate, cost, 0.05, 5)?);
    }
    io::write_nhpp_table_csv(path, &rows)
}

fn table5(path: &Path) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for t in [0.5 * PI, PI, 1.5 * PI, 2.0 * PI] {
        let rate = RateFunction::new(
            RateFamily::Sinusoid {
                amplitude: 5.0,
                offset: 6.0,
            },
            t,
        )?;
        let cost = CostModel::new(
            ServiceCost::Quadratic { offset: -1.0 },
            HoldingCost::ShiftedLinear { k: 20 },
            15.0,
        )?;
        rows.push(nhpp_row(5, rate, cost, t / 200.0, 6)?);
    }
    io::write_nhpp_table_csv(path, &rows)
}
