//! Shared fixtures: the two worked 3-phase examples, the 8-phase
//! birth-death and cyclic benchmark chains, and scenario builders.

#![allow(dead_code)]

use mmq_core::linalg::Mat;
use mmq_core::model::{CostModel, HoldingCost, PhaseProcess, Scenario, ServiceCost};

/// 3-phase birth-death generator with unit rates.
pub fn ex31_phase() -> PhaseProcess {
    let q = Mat::from_rows(&[
        vec![-1.0, 1.0, 0.0],
        vec![1.0, -2.0, 1.0],
        vec![0.0, 1.0, -1.0],
    ])
    .unwrap();
    PhaseProcess::new(q, vec![0.5, 1.0, 1.25]).unwrap()
}

/// 3-phase unidirectional cycle with unit rates.
pub fn ex32_phase() -> PhaseProcess {
    let q = Mat::from_rows(&[
        vec![-1.0, 1.0, 0.0],
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
    ])
    .unwrap();
    PhaseProcess::new(q, vec![0.5, 1.0, 1.25]).unwrap()
}

pub fn exp_cost(u_max: f64) -> CostModel {
    CostModel::new(ServiceCost::Exponential, HoldingCost::Linear, u_max).unwrap()
}

/// Exponential service cost, linear holding, `ū = 5`, `N = 50`: the setup
/// both 3-phase examples are solved under.
pub fn ex3_scenario(phase: PhaseProcess, alpha: f64) -> Scenario {
    Scenario::new(phase, exp_cost(5.0), 50, alpha, 1e-8).unwrap()
}

/// Benchmark arrival-rate ladders: 8 evenly spaced rates per case.
pub fn case_rates(case: usize) -> Vec<f64> {
    let (start, step) = match case {
        1 => (0.1, 0.25),
        2 => (0.1, 0.5),
        3 => (0.1, 0.75),
        _ => panic!("case must be 1..=3"),
    };
    (0..8).map(|i| start + step * i as f64).collect()
}

/// Symmetric birth-death generator on 8 phases with fluctuation rate `c`.
pub fn bd_generator(c: f64) -> Mat {
    let l = 8;
    let mut rows = vec![vec![0.0; l]; l];
    for i in 0..l {
        if i > 0 {
            rows[i][i - 1] = c;
        }
        if i + 1 < l {
            rows[i][i + 1] = c;
        }
        rows[i][i] = -(rows[i].iter().sum::<f64>());
    }
    Mat::from_rows(&rows).unwrap()
}

/// Unidirectional cycle on 8 phases with fluctuation rate `c`.
pub fn cyclic_generator(c: f64) -> Mat {
    let l = 8;
    let mut rows = vec![vec![0.0; l]; l];
    for i in 0..l {
        rows[i][(i + 1) % l] = c;
        rows[i][i] = -c;
    }
    Mat::from_rows(&rows).unwrap()
}

/// One benchmark scenario: case 1..=3 picks the rate ladder, `cyclic`
/// picks the generator family, `c` its fluctuation rate. Costs are
/// exponential with linear holding, `ū = 15`, `N = 50`.
pub fn benchmark_scenario(case: usize, cyclic: bool, c: f64) -> Scenario {
    // The rate ladders are already sorted, so construction never permutes
    // the generator.
    let q = if cyclic { cyclic_generator(c) } else { bd_generator(c) };
    let phase = PhaseProcess::new(q, case_rates(case)).unwrap();
    Scenario::new(phase, exp_cost(15.0), 50, 0.0, 1e-8).unwrap()
}

/// Single-phase scenario with arrival rate `lambda`.
pub fn single_phase_scenario(lambda: f64, u_max: f64, truncation_n: usize) -> Scenario {
    let phase = PhaseProcess::new(Mat::zeros(1, 1), vec![lambda]).unwrap();
    Scenario::new(phase, exp_cost(u_max), truncation_n, 0.0, 1e-8).unwrap()
}

pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} (tol {tol})"
    );
}

pub fn assert_within_pct(actual: f64, expected: f64, pct: f64, what: &str) {
    let rel = 100.0 * (actual - expected).abs() / expected.abs();
    assert!(
        rel <= pct,
        "{what}: got {actual}, expected {expected} within {pct}% (off by {rel:.3}%)"
    );
}
