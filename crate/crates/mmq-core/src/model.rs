//! Problem data for MMPP/M/1 service-rate control: the modulating phase
//! process, the cost structure, scenario plumbing, and uniformization.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{LuFactor, Mat};
use crate::math;

/// Row-sum slack accepted when validating a generator matrix.
const GENERATOR_ROW_SUM_TOL: f64 = 1e-12;

/// Modulating CTMC with generator `Q` and one Poisson arrival rate per
/// phase.
///
/// Construction canonicalizes the phase order so that the arrival rates are
/// non-decreasing, permuting `Q` accordingly and recording the permutation.
/// The cyclic MMPP built by [`crate::nhpp`] depends on its time ordering, so
/// [`PhaseProcess::new_unsorted`] keeps the caller's order instead.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProcess {
    q: Mat,
    lambdas: Vec<f64>,
    permutation: Vec<usize>,
}

impl PhaseProcess {
    /// Validates the generator and arrival rates, then sorts phases by
    /// arrival rate (stably, so equal rates keep their relative order).
    pub fn new(q: Mat, lambdas: Vec<f64>) -> Result<Self> {
        Self::build(q, lambdas, true)
    }

    /// Like [`PhaseProcess::new`] but preserves the given phase order even
    /// when the arrival rates are not sorted. Needed when the generator's
    /// structure is tied to the ordering, as with the cyclic chains that
    /// approximate a periodic arrival-rate function.
    pub fn new_unsorted(q: Mat, lambdas: Vec<f64>) -> Result<Self> {
        Self::build(q, lambdas, false)
    }

    fn build(q: Mat, lambdas: Vec<f64>, sort: bool) -> Result<Self> {
        let l = lambdas.len();
        if l == 0 {
            return Err(Error::InvalidModel("need at least one phase".into()));
        }
        if q.rows() != l || q.cols() != l {
            return Err(Error::InvalidModel(format!(
                "generator is {}x{} but there are {} arrival rates",
                q.rows(),
                q.cols(),
                l
            )));
        }
        for (s, &lam) in lambdas.iter().enumerate() {
            if !lam.is_finite() || lam < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "arrival rate for phase {s} must be finite and non-negative, got {lam}"
                )));
            }
        }
        validate_generator(&q)?;
        if !strongly_connected(&q) {
            return Err(Error::ReducibleChain);
        }

        let mut permutation: Vec<usize> = (0..l).collect();
        if sort {
            permutation.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]));
        }
        let already_identity = permutation.iter().enumerate().all(|(i, &p)| i == p);
        if already_identity {
            return Ok(PhaseProcess { q, lambdas, permutation });
        }

        let mut qp = Mat::zeros(l, l);
        let mut lp = Vec::with_capacity(l);
        for i in 0..l {
            lp.push(lambdas[permutation[i]]);
            for j in 0..l {
                qp[(i, j)] = q[(permutation[i], permutation[j])];
            }
        }
        Ok(PhaseProcess {
            q: qp,
            lambdas: lp,
            permutation,
        })
    }

    pub fn num_phases(&self) -> usize {
        self.lambdas.len()
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Largest per-phase arrival rate (the last entry once sorted).
    pub fn lambda_max(&self) -> f64 {
        self.lambdas.iter().fold(0.0, |m, &v| if v > m { v } else { m })
    }

    /// `permutation[i]` is the caller-supplied index of stored phase `i`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Stationary distribution of the phase chain: the unique `p` with
    /// `pQ = 0` and `Σ p_s = 1`, found by swapping one balance equation for
    /// the normalization constraint and solving the dense system.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let l = self.num_phases();
        // pQ = 0 transposes to Qᵀ pᵀ = 0; one equation is redundant.
        let mut a = self.q.transpose();
        for j in 0..l {
            a[(l - 1, j)] = 1.0;
        }
        let mut p: Vec<f64> = core::iter::repeat(0.0).take(l - 1).chain([1.0]).collect();
        LuFactor::new(a)?.solve(&mut p);

        let mut residual = 0.0f64;
        for j in 0..l {
            let mut bal = 0.0;
            for s in 0..l {
                bal += p[s] * self.q[(s, j)];
            }
            residual = residual.max(math::abs(bal));
        }
        if residual > 1e-10 || p.iter().any(|&x| !(x > 0.0)) {
            // An irreducible generator yields a strictly positive solution
            // with tiny residual; anything else means the solve degenerated.
            return Err(Error::SingularSystem);
        }
        Ok(p)
    }

    /// Long-run arrival rate `Σ_s p_s λ_s` under the stationary phase law.
    pub fn mean_arrival_rate(&self) -> Result<f64> {
        let p = self.stationary_distribution()?;
        Ok(p.iter().zip(&self.lambdas).map(|(a, b)| a * b).sum())
    }
}

fn validate_generator(q: &Mat) -> Result<()> {
    let l = q.rows();
    for i in 0..l {
        let mut sum = 0.0;
        for j in 0..l {
            let v = q[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "generator entry ({i},{j}) is not finite"
                )));
            }
            if i == j && v > 0.0 {
                return Err(Error::InvalidModel(format!(
                    "generator diagonal entry ({i},{i}) = {v} must be non-positive"
                )));
            }
            if i != j && v < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "generator off-diagonal entry ({i},{j}) = {v} must be non-negative"
                )));
            }
            sum += v;
        }
        if math::abs(sum) > GENERATOR_ROW_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "generator row {i} sums to {sum:e}, not 0"
            )));
        }
    }
    Ok(())
}

/// Strong connectivity of the directed graph of positive off-diagonal
/// entries: every state reaches and is reached from state 0.
fn strongly_connected(q: &Mat) -> bool {
    let l = q.rows();
    let reaches_all = |transpose: bool| {
        let mut seen = alloc::vec![false; l];
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..l {
                let v = if transpose { q[(j, i)] } else { q[(i, j)] };
                if i != j && v > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&b| b)
    };
    reaches_all(false) && reaches_all(true)
}

/// Service-effort cost family `c(μ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceCost {
    /// `c(μ) = e^μ − 1`
    Exponential,
    /// `c(μ) = μ²/2 + offset`
    Quadratic { offset: f64 },
    /// `c(μ) = Σ_i a_i μ^i` with non-negative coefficients `a_i`.
    PowerSeries { coefficients: Vec<f64> },
}

/// Holding cost family `h(n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum HoldingCost {
    /// `h(n) = n`
    Linear,
    /// `h(n) = max(n − k, 0)`
    ShiftedLinear { k: u32 },
    /// `h(n) = coefficient · n^exponent`
    Power { coefficient: f64, exponent: u32 },
}

/// Cost structure: service-effort cost, holding cost, and the action bound
/// `ū` defining the rate set `A = [0, ū]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    service: ServiceCost,
    holding: HoldingCost,
    u_max: f64,
}

impl CostModel {
    /// Validates the action bound, the family parameters, and strict
    /// convexity of `c` (by checking that `c′` strictly increases on a grid
    /// over `[0, ū]`).
    pub fn new(service: ServiceCost, holding: HoldingCost, u_max: f64) -> Result<Self> {
        if !u_max.is_finite() || u_max <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "u_max must be finite and positive, got {u_max}"
            )));
        }
        match &service {
            ServiceCost::Exponential => {}
            ServiceCost::Quadratic { offset } => {
                if !offset.is_finite() {
                    return Err(Error::InvalidModel("quadratic offset must be finite".into()));
                }
            }
            ServiceCost::PowerSeries { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::InvalidModel(
                        "power series needs at least one coefficient".into(),
                    ));
                }
                for (i, &a) in coefficients.iter().enumerate() {
                    if !a.is_finite() || a < 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "power series coefficient {i} must be finite and non-negative, got {a}"
                        )));
                    }
                }
            }
        }
        if let HoldingCost::Power { coefficient, exponent } = &holding {
            if !coefficient.is_finite() || *coefficient < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "holding coefficient must be finite and non-negative, got {coefficient}"
                )));
            }
            if *exponent == 0 {
                return Err(Error::InvalidModel(
                    "holding exponent must be a positive integer".into(),
                ));
            }
        }
        let model = CostModel { service, holding, u_max };
        let grid = 64;
        let mut prev = model.c_prime(0.0);
        for i in 1..=grid {
            let mu = u_max * i as f64 / grid as f64;
            let cur = model.c_prime(mu);
            if cur <= prev {
                return Err(Error::InvalidModel(
                    "service cost is not strictly convex on [0, u_max]".into(),
                ));
            }
            prev = cur;
        }
        Ok(model)
    }

    pub fn service(&self) -> &ServiceCost {
        &self.service
    }

    pub fn holding(&self) -> &HoldingCost {
        &self.holding
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Service-effort cost `c(μ)`.
    pub fn c(&self, mu: f64) -> f64 {
        match &self.service {
            ServiceCost::Exponential => math::exp_m1(mu),
            ServiceCost::Quadratic { offset } => 0.5 * mu * mu + offset,
            ServiceCost::PowerSeries { coefficients } => {
                // Horner evaluation of Σ a_i μ^i.
                coefficients.iter().rev().fold(0.0, |acc, &a| acc * mu + a)
            }
        }
    }

    /// Marginal cost `c′(μ)`.
    pub fn c_prime(&self, mu: f64) -> f64 {
        match &self.service {
            ServiceCost::Exponential => math::exp(mu),
            ServiceCost::Quadratic { .. } => mu,
            ServiceCost::PowerSeries { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &a)| acc * mu + i as f64 * a),
        }
    }

    /// Holding cost `h(n)`.
    pub fn h(&self, n: usize) -> f64 {
        match &self.holding {
            HoldingCost::Linear => n as f64,
            HoldingCost::ShiftedLinear { k } => n.saturating_sub(*k as usize) as f64,
            HoldingCost::Power { coefficient, exponent } => {
                coefficient * math::powi(n as f64, *exponent)
            }
        }
    }
}

/// A complete solvable problem instance: phase process, costs, queue-length
/// truncation, discount rate (`0` selects the average-cost criterion),
/// solver tolerance, and uniformization slack.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    phase: PhaseProcess,
    cost: CostModel,
    truncation_n: usize,
    alpha: f64,
    tolerance: f64,
    uniformization_slack: f64,
}

/// Outcome of the stability predicate `ū > Σ_s p_s λ_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    pub mean_rate: f64,
    pub u_max: f64,
}

impl Scenario {
    /// Default uniformization slack; strictly positive so every uniformized
    /// state keeps a self-loop, which makes relative value iteration
    /// aperiodic. Long-run average gains are invariant to this constant.
    pub const DEFAULT_SLACK: f64 = 1.0;

    pub fn new(
        phase: PhaseProcess,
        cost: CostModel,
        truncation_n: usize,
        alpha: f64,
        tolerance: f64,
    ) -> Result<Self> {
        if truncation_n < 2 {
            return Err(Error::InvalidModel(format!(
                "truncation_N must be at least 2, got {truncation_n}"
            )));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidModel(format!(
                "alpha must be finite and non-negative, got {alpha}"
            )));
        }
        if !tolerance.is_finite() || tolerance <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "tolerance must be finite and positive, got {tolerance}"
            )));
        }
        // The holding family must be non-decreasing and convex over the
        // solved lattice, with h(0) = 0.
        if cost.h(0) != 0.0 {
            return Err(Error::InvalidModel("holding cost must satisfy h(0) = 0".into()));
        }
        let mut prev_diff = 0.0;
        for n in 0..truncation_n {
            let diff = cost.h(n + 1) - cost.h(n);
            if diff < 0.0 || diff < prev_diff {
                return Err(Error::InvalidModel(
                    "holding cost must be non-decreasing and convex".into(),
                ));
            }
            prev_diff = diff;
        }
        Ok(Scenario {
            phase,
            cost,
            truncation_n,
            alpha,
            tolerance,
            uniformization_slack: Self::DEFAULT_SLACK,
        })
    }

    /// Replaces the uniformization slack (default [`Scenario::DEFAULT_SLACK`]).
    pub fn with_slack(mut self, slack: f64) -> Result<Self> {
        if !slack.is_finite() || slack < 0.0 {
            return Err(Error::InvalidModel(format!(
                "uniformization slack must be finite and non-negative, got {slack}"
            )));
        }
        self.uniformization_slack = slack;
        Ok(self)
    }

    pub fn phase(&self) -> &PhaseProcess {
        &self.phase
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn truncation_n(&self) -> usize {
        self.truncation_n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn uniformization_slack(&self) -> f64 {
        self.uniformization_slack
    }

    /// Stability predicate: the maximum service rate must strictly exceed
    /// the stationary mean arrival rate.
    pub fn stability_check(&self) -> Result<StabilityReport> {
        let mean_rate = self.phase.mean_arrival_rate()?;
        Ok(StabilityReport {
            stable: self.cost.u_max() > mean_rate,
            mean_rate,
            u_max: self.cost.u_max(),
        })
    }

    /// Uniformizes the scenario: `η̄ = max_s(−Q_ss)`,
    /// `ν = λ_max + η̄ + ū + slack`, `Q̄ = η̄I + Q`.
    pub fn uniformize(&self) -> UniformizedModel {
        let l = self.phase.num_phases();
        let q = self.phase.q();
        let mut eta_bar = 0.0f64;
        for s in 0..l {
            eta_bar = eta_bar.max(-q[(s, s)]);
        }
        let nu = self.phase.lambda_max() + eta_bar + self.cost.u_max() + self.uniformization_slack;
        let mut q_bar = q.clone();
        for s in 0..l {
            q_bar[(s, s)] += eta_bar;
        }
        UniformizedModel {
            phase: self.phase.clone(),
            cost: self.cost.clone(),
            eta_bar,
            slack: self.uniformization_slack,
            nu,
            q_bar,
        }
    }
}

/// Discrete-time embedding of a scenario at the common event rate `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedModel {
    phase: PhaseProcess,
    cost: CostModel,
    eta_bar: f64,
    slack: f64,
    nu: f64,
    q_bar: Mat,
}

impl UniformizedModel {
    pub fn phase(&self) -> &PhaseProcess {
        &self.phase
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn eta_bar(&self) -> f64 {
        self.eta_bar
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `Q̄ = η̄I + Q`, elementwise non-negative with rows summing to `η̄`.
    pub fn q_bar(&self) -> &Mat {
        &self.q_bar
    }
}
