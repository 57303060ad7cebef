//! Solver contract tests: closed-form oracles, published benchmark gains,
//! structural properties of solved values and policies, and the
//! grid-action oracle.

mod common;

use common::*;
use mmq_core::linalg::Mat;
use mmq_core::model::{PhaseProcess, Scenario};
use mmq_core::solver::{evaluate_policy, solve_average, solve_discounted, Policy, ValueMode};
use mmq_core::structure::{verify_monotone_in_n, verify_monotone_in_s};

#[test]
fn mm1_constant_rate_matches_closed_form() {
    // M/M/1 with λ = 0.5, μ = 1 served only while busy: E[N] = ρ/(1−ρ) = 1
    // and the effort cost accrues with probability ρ = 1/2, so
    // g = 1 + 0.5·(e − 1).
    let sc = single_phase_scenario(0.5, 5.0, 50);
    let policy = Policy::constant_when_busy(1, 50, 1.0);
    let gain = evaluate_policy(&sc, &policy).unwrap();
    assert_close(gain, 1.0 + 0.5 * (1f64.exp() - 1.0), 1e-3, "M/M/1 closed form");
}

#[test]
fn empty_system_has_zero_gain() {
    let sc = single_phase_scenario(0.0, 1.0, 5);
    let res = solve_average(&sc).unwrap();
    // The gain is read off the midpoint of the relative-iteration span, so
    // its error bound is tolerance/2.
    assert!(res.gain.unwrap().abs() < sc.tolerance(), "gain {:?}", res.gain);
}

#[test]
fn benchmark_case1_birth_death_gain() {
    let res = solve_average(&benchmark_scenario(1, false, 0.25)).unwrap();
    assert_within_pct(res.gain.unwrap(), 4.3651, 1.0, "case I birth-death c=0.25 gain");
    assert!(res.residual <= 1e-8);
}

#[test]
fn benchmark_case3_cyclic_gain() {
    let res = solve_average(&benchmark_scenario(3, true, 1.0)).unwrap();
    assert_within_pct(res.gain.unwrap(), 26.3445, 1.0, "case III cyclic c=1.00 gain");
}

#[test]
fn average_solve_is_self_consistent() {
    let sc = ex3_scenario(ex31_phase(), 0.0);
    let res = solve_average(&sc).unwrap();
    let eval = evaluate_policy(&sc, &res.policy).unwrap();
    assert_close(eval, res.gain.unwrap(), 10.0 * sc.tolerance(), "evaluate(optimal policy)");
}

#[test]
fn solved_policies_idle_on_empty_queue() {
    let res = solve_average(&ex3_scenario(ex31_phase(), 0.0)).unwrap();
    for s in 0..3 {
        assert_eq!(res.policy.rate(0, s), 0.0);
    }
    let res = solve_discounted(&ex3_scenario(ex31_phase(), 0.05)).unwrap();
    for s in 0..3 {
        assert_eq!(res.policy.rate(0, s), 0.0);
    }
}

#[test]
fn relative_value_is_zero_at_reference() {
    let res = solve_average(&ex3_scenario(ex32_phase(), 0.0)).unwrap();
    match res.value.mode() {
        ValueMode::Relative { reference_state: (n, s) } => {
            assert_eq!(n, 0);
            assert_eq!(res.value.get(n, s), 0.0);
        }
        other => panic!("expected relative mode, got {other:?}"),
    }
}

#[test]
fn monotone_structure_of_worked_examples() {
    // Birth-death modulation: policies are monotone in both n and s, under
    // both criteria. Cyclic modulation keeps monotonicity in n but breaks
    // it in s, at queue length 4.
    for alpha in [0.0, 0.05] {
        let sc = ex3_scenario(ex31_phase(), alpha);
        let res = if alpha > 0.0 { solve_discounted(&sc) } else { solve_average(&sc) }.unwrap();
        assert!(verify_monotone_in_n(&res.policy).monotone, "ex3.1 alpha={alpha} in n");
        assert!(verify_monotone_in_s(&res.policy).monotone, "ex3.1 alpha={alpha} in s");

        let sc = ex3_scenario(ex32_phase(), alpha);
        let res = if alpha > 0.0 { solve_discounted(&sc) } else { solve_average(&sc) }.unwrap();
        assert!(verify_monotone_in_n(&res.policy).monotone, "ex3.2 alpha={alpha} in n");
        let report = verify_monotone_in_s(&res.policy);
        assert!(!report.monotone, "ex3.2 alpha={alpha} should break monotonicity in s");
        assert!(
            report.violations.iter().any(|v| v.n == 4),
            "ex3.2 alpha={alpha}: expected a violation at n=4, got {:?}",
            report.violations
        );
    }
}

#[test]
fn solved_values_are_nondecreasing_and_convex_in_n() {
    for (sc, discounted) in [
        (ex3_scenario(ex31_phase(), 0.0), false),
        (ex3_scenario(ex32_phase(), 0.0), false),
        (ex3_scenario(ex31_phase(), 0.05), true),
        (benchmark_scenario(1, false, 0.25), false),
    ] {
        let res = if discounted { solve_discounted(&sc) } else { solve_average(&sc) }.unwrap();
        let y = res.value.first_difference();
        for s in 0..y.cols() {
            for n in 1..y.rows() {
                assert!(y[(n, s)] >= -1e-9, "value decreasing at ({n},{s})");
                if n + 1 < y.rows() {
                    assert!(
                        y[(n + 1, s)] >= y[(n, s)] - 1e-9,
                        "value not convex at ({n},{s}): y(n)={}, y(n+1)={}",
                        y[(n, s)],
                        y[(n + 1, s)]
                    );
                }
            }
        }
        assert!(verify_monotone_in_n(&res.policy).monotone);
    }
}

#[test]
fn first_difference_of_simple_tables() {
    let constant = ValueFunctionFixture::constant(4, 3, 7.5);
    let y = constant.first_difference();
    assert!(y.as_slice().iter().all(|&v| v == 0.0));

    let linear = ValueFunctionFixture::linear_in_n(4, 3);
    let y = linear.first_difference();
    for s in 0..3 {
        assert_eq!(y[(0, s)], 0.0);
        for n in 1..=4 {
            assert_eq!(y[(n, s)], 1.0);
        }
    }
}

/// Builds ad-hoc value tables for the first-difference arithmetic checks.
struct ValueFunctionFixture;

impl ValueFunctionFixture {
    fn constant(top_n: usize, l: usize, value: f64) -> mmq_core::solver::ValueFunction {
        let mut m = Mat::zeros(top_n + 1, l);
        for n in 0..=top_n {
            for s in 0..l {
                m[(n, s)] = value;
            }
        }
        mmq_core::solver::ValueFunction::new(m, ValueMode::Discounted { alpha: 1.0 })
    }

    fn linear_in_n(top_n: usize, l: usize) -> mmq_core::solver::ValueFunction {
        let mut m = Mat::zeros(top_n + 1, l);
        for n in 0..=top_n {
            for s in 0..l {
                m[(n, s)] = n as f64;
            }
        }
        mmq_core::solver::ValueFunction::new(m, ValueMode::Discounted { alpha: 1.0 })
    }
}

#[test]
fn discounted_empty_system_fixed_point() {
    // No arrivals, linear holding: the queue never fills from 0, so the
    // value at the empty state is exactly 0 and rates grow with n.
    let phase = PhaseProcess::new(Mat::zeros(1, 1), vec![0.0]).unwrap();
    let sc = Scenario::new(phase, exp_cost(5.0), 10, 0.5, 1e-8).unwrap();
    let res = solve_discounted(&sc).unwrap();
    assert!(res.value.get(0, 0).abs() < 1e-6, "v(0) = {}", res.value.get(0, 0));
    assert!(verify_monotone_in_n(&res.policy).monotone);
}

#[test]
fn discounted_fixed_point_residual_is_small() {
    // Plugging the returned window back into the optimality operator must
    // reproduce it. Row N's own equation lives on the padded lattice (its
    // upward neighbor is not part of the reported window), so the residual
    // check covers rows 0..N−1.
    let sc = ex3_scenario(ex31_phase(), 0.05);
    let res = solve_discounted(&sc).unwrap();
    let um = sc.uniformize();
    let pair = mmq_core::conjugate::ConjugatePair::new(sc.cost());
    let v = res.value.values();
    let (nu, eta) = (um.nu(), um.eta_bar());
    for n in 0..sc.truncation_n() {
        for s in 0..3 {
            let y = if n == 0 { 0.0 } else { v[(n, s)] - v[(n - 1, s)] };
            let lam = sc.phase().lambdas()[s];
            let mut acc = sc.cost().h(n) - pair.phi(y)
                + lam * v[(n + 1, s)]
                + (nu - eta - lam) * v[(n, s)];
            for s2 in 0..3 {
                acc += um.q_bar()[(s, s2)] * v[(n, s2)];
            }
            let residual = (acc / (sc.alpha() + nu) - v[(n, s)]).abs();
            assert!(residual <= 10.0 * sc.tolerance(), "residual {residual} at ({n},{s})");
        }
    }
}

#[test]
fn vanishing_discount_approaches_average_gain() {
    // α·v_α(0, s̄) tends to the average-cost gain as α ↓ 0. The value
    // magnitudes scale like 1/α, so the sweep tolerance is relaxed
    // accordingly; 2% agreement needs far less than 1e-5 anyway.
    let avg = solve_average(&ex3_scenario(ex31_phase(), 0.0)).unwrap();
    let gain = avg.gain.unwrap();
    let mut last = f64::NAN;
    for alpha in [0.05, 0.01, 0.002] {
        let sc = Scenario::new(ex31_phase(), exp_cost(5.0), 50, alpha, 1e-5).unwrap();
        let res = solve_discounted(&sc).unwrap();
        let v00: f64 = (0..3).map(|s| res.value.get(0, s)).fold(f64::INFINITY, f64::min);
        last = alpha * v00;
    }
    assert_within_pct(last, gain, 2.0, "alpha*v_alpha(0) at alpha=0.002");
}

#[test]
fn gain_is_invariant_to_uniformization_slack() {
    for sc0 in [
        ex3_scenario(ex31_phase(), 0.0),
        ex3_scenario(ex32_phase(), 0.0),
        single_phase_scenario(0.5, 5.0, 30),
    ] {
        let tol = sc0.tolerance();
        let g0 = solve_average(&sc0.clone().with_slack(0.0).unwrap()).unwrap().gain.unwrap();
        let g5 = solve_average(&sc0.with_slack(5.0).unwrap()).unwrap().gain.unwrap();
        assert_close(g5, g0, 10.0 * tol, "slack 0 vs slack 5 gain");
    }
}

#[test]
fn constant_policies_never_beat_the_solved_gain() {
    let sc = ex3_scenario(ex31_phase(), 0.0);
    let optimal = solve_average(&sc).unwrap().gain.unwrap();
    for mu in [1.0, 1.5, 2.0, 3.0, 5.0] {
        let gain = evaluate_policy(&sc, &Policy::constant(3, 50, mu)).unwrap();
        assert!(
            gain >= optimal - 10.0 * sc.tolerance(),
            "constant mu={mu} evaluated to {gain}, below optimal {optimal}"
        );
    }
}

#[test]
fn matches_grid_action_value_iteration() {
    // Tiny instance, discounted: replace the conjugate closed form with an
    // explicit minimization over 1001 equally spaced rates and compare.
    let q = Mat::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let phase = PhaseProcess::new(q, vec![0.5, 1.0]).unwrap();
    let sc = Scenario::new(phase, exp_cost(2.0), 5, 1.0, 1e-8).unwrap();
    let res = solve_discounted(&sc).unwrap();

    let um = sc.uniformize();
    let (nu, eta) = (um.nu(), um.eta_bar());
    let l = 2;
    let rows = res.solved_rows;
    let grid: Vec<f64> = (0..=1000).map(|i| 2.0 * i as f64 / 1000.0).collect();
    let costs: Vec<f64> = grid.iter().map(|&mu| sc.cost().c(mu)).collect();
    let mut v = vec![0.0; rows * l];
    let mut tv = vec![0.0; rows * l];
    let beta = nu / (sc.alpha() + nu);
    let stop = sc.tolerance() * (1.0 - beta) / (2.0 * beta);
    loop {
        let mut delta = 0.0f64;
        for n in 0..rows {
            for s in 0..l {
                let up = v[(n + 1).min(rows - 1) * l + s];
                let here = v[n * l + s];
                let mut best = if n == 0 {
                    // No service decision on an empty queue.
                    0.0
                } else {
                    let down = v[(n - 1) * l + s];
                    let mut m = f64::INFINITY;
                    for (i, &mu) in grid.iter().enumerate() {
                        let val = costs[i] + mu * (down - here);
                        if val < m {
                            m = val;
                        }
                    }
                    m
                };
                best += sc.cost().h(n)
                    + sc.phase().lambdas()[s] * up
                    + (nu - eta - sc.phase().lambdas()[s]) * here
                    + um.q_bar().row(s).iter().zip(&v[n * l..n * l + l]).map(|(a, b)| a * b).sum::<f64>();
                let t = best / (sc.alpha() + nu);
                delta = delta.max((t - here).abs());
                tv[n * l + s] = t;
            }
        }
        std::mem::swap(&mut v, &mut tv);
        if delta < stop {
            break;
        }
    }

    // Values agree on the reported window; policies agree within one grid
    // step.
    for n in 0..=5 {
        for s in 0..l {
            assert!(
                (res.value.get(n, s) - v[n * l + s]).abs() <= 1e-3,
                "value mismatch at ({n},{s}): {} vs {}",
                res.value.get(n, s),
                v[n * l + s]
            );
            let grid_mu = if n == 0 {
                0.0
            } else {
                let (down, here) = (v[(n - 1) * l + s], v[n * l + s]);
                let mut best = (f64::INFINITY, 0.0);
                for (i, &mu) in grid.iter().enumerate() {
                    let val = costs[i] + mu * (down - here);
                    if val < best.0 {
                        best = (val, mu);
                    }
                }
                best.1
            };
            assert!(
                (res.policy.rate(n, s) - grid_mu).abs() <= 2.0 / 1000.0 + 1e-12,
                "policy mismatch at ({n},{s}): {} vs grid {}",
                res.policy.rate(n, s),
                grid_mu
            );
        }
    }
}

#[test]
fn evaluate_rejects_mismatched_shapes() {
    let sc = ex3_scenario(ex31_phase(), 0.0);
    let narrow = Policy::constant(2, 50, 1.0);
    assert!(evaluate_policy(&sc, &narrow).is_err());
}
