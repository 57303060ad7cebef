//! Structural diagnostics: stochastic monotonicity of the phase generator
//! and monotonicity of rate tables in queue length and phase.

use alloc::vec::Vec;

use crate::model::PhaseProcess;
use crate::solver::Policy;

/// Slack on the off-diagonal sign test for generators.
const GENERATOR_TOL: f64 = 1e-12;

/// Slack on policy comparisons, absorbing solver round-off.
const POLICY_TOL: f64 = 1e-9;

/// One ordered pair that breaks monotonicity: the rate at the lower
/// coordinate exceeds the rate at the next higher one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    pub n: usize,
    pub s: usize,
    pub value_low: f64,
    pub value_high: f64,
}

/// Result of a policy monotonicity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub monotone: bool,
    pub violations: Vec<MonotonicityViolation>,
}

impl MonotonicityReport {
    fn from_violations(violations: Vec<MonotonicityViolation>) -> Self {
        MonotonicityReport {
            monotone: violations.is_empty(),
            violations,
        }
    }
}

/// Tests whether the phase CTMC is stochastically monotone.
///
/// With `T` the lower-triangular all-ones matrix, the chain is monotone iff
/// `M = T⁻¹QT` has non-negative off-diagonal entries. `QT` is a row-wise
/// suffix sum (`(QT)_{im} = Σ_{k≥m} Q_{ik}`) and `T⁻¹` has `1` on the
/// diagonal and `−1` on the first subdiagonal, so `M` needs no linear
/// solve.
pub fn check_generator_monotone(phase: &PhaseProcess) -> bool {
    let q = phase.q();
    let l = phase.num_phases();
    let mut qt = alloc::vec![0.0; l * l];
    for i in 0..l {
        let mut suffix = 0.0;
        for m in (0..l).rev() {
            suffix += q[(i, m)];
            qt[i * l + m] = suffix;
        }
    }
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            let m_ij = if i == 0 {
                qt[j]
            } else {
                qt[i * l + j] - qt[(i - 1) * l + j]
            };
            if m_ij < -GENERATOR_TOL {
                return false;
            }
        }
    }
    true
}

/// Scans a rate table for decreases in the queue-length direction:
/// violations are every `(n,s)` with `μ(n+1,s) < μ(n,s) − 1e-9`.
pub fn verify_monotone_in_n(policy: &Policy) -> MonotonicityReport {
    let mut violations = Vec::new();
    for s in 0..policy.num_phases() {
        for n in 0..policy.num_levels() - 1 {
            let low = policy.rate(n, s);
            let high = policy.rate(n + 1, s);
            if high < low - POLICY_TOL {
                violations.push(MonotonicityViolation {
                    n,
                    s,
                    value_low: low,
                    value_high: high,
                });
            }
        }
    }
    MonotonicityReport::from_violations(violations)
}

/// Scans a rate table for decreases in the phase direction: violations are
/// every `(n,s)` with `μ(n,s+1) < μ(n,s) − 1e-9`.
pub fn verify_monotone_in_s(policy: &Policy) -> MonotonicityReport {
    let mut violations = Vec::new();
    for n in 0..policy.num_levels() {
        for s in 0..policy.num_phases() - 1 {
            let low = policy.rate(n, s);
            let high = policy.rate(n, s + 1);
            if high < low - POLICY_TOL {
                violations.push(MonotonicityViolation {
                    n,
                    s,
                    value_low: low,
                    value_high: high,
                });
            }
        }
    }
    MonotonicityReport::from_violations(violations)
}
