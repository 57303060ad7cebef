//! Value-iteration solvers on the truncated lattice and exact stationary
//! evaluation of arbitrary stationary policies.
//!
//! # Internal truncation
//!
//! The queue-length cap `N` of a [`Scenario`] defines the *reported* window
//! `{0..N}×{1..L}`, not the lattice the solvers run on. A hard wall at `N`
//! distorts both the value function near the boundary and the long-run
//! average cost whenever the boundary carries visible probability mass, so
//! every solve and every policy evaluation runs on an enlarged lattice
//! `{0..N+P}` and reports only the first `N+1` rows. The padding `P` starts
//! at `max(128, N)` and doubles (at most [`MAX_DOUBLINGS`] times) until the
//! quantity of interest (the gain for average-cost solves and evaluations,
//! the windowed value function for discounted solves) is stable to a
//! relative `1e-4`. Policies evaluated on the enlarged lattice are extended
//! by repeating their last row; arrivals at the enlarged top level are
//! blocked (self-loop).

use alloc::vec;
use alloc::vec::Vec;

use crate::conjugate::ConjugatePair;
use crate::error::{Error, Result};
use crate::linalg::{LuFactor, Mat};
use crate::math;
use crate::model::{Scenario, UniformizedModel};

/// Sweep cap for each value-iteration run.
pub const MAX_SWEEPS: u64 = 1_000_000;

/// Relative stabilization tolerance for the lattice-doubling rule.
const PAD_REL_TOL: f64 = 1e-4;

/// Maximum number of padding doublings before giving up.
const MAX_DOUBLINGS: usize = 5;

fn base_pad(truncation_n: usize) -> usize {
    truncation_n.max(128)
}

/// Which fixed-point equation a [`ValueFunction`] solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueMode {
    /// Discounted values `v_α(n,s)` at discount rate `alpha`.
    Discounted { alpha: f64 },
    /// Relative values normalized to `v(reference_state) = 0`; the
    /// reference is `(0, s̄)` with `s̄` chosen on the first sweep.
    Relative { reference_state: (usize, usize) },
}

/// Value table `v(n,s)` over the reported window, `(N+1)×L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    values: Mat,
    mode: ValueMode,
}

impl ValueFunction {
    pub fn new(values: Mat, mode: ValueMode) -> Self {
        ValueFunction { values, mode }
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn mode(&self) -> ValueMode {
        self.mode
    }

    pub fn get(&self, n: usize, s: usize) -> f64 {
        self.values[(n, s)]
    }

    /// First differences in queue length: `y(n,s) = v(n,s) − v(n−1,s)` for
    /// `n ≥ 1` and `y(0,s) = 0`.
    pub fn first_difference(&self) -> Mat {
        let (rows, cols) = (self.values.rows(), self.values.cols());
        let mut y = Mat::zeros(rows, cols);
        for n in 1..rows {
            for s in 0..cols {
                y[(n, s)] = self.values[(n, s)] - self.values[(n - 1, s)];
            }
        }
        y
    }
}

/// Stationary policy: rate table `μ(n,s)` over the reported window, each
/// entry in `[0, ū]`.
///
/// Policies extracted by the solvers always have `μ(0,s) = 0` (the server
/// idles when the queue is empty, and there is nothing to gain otherwise).
/// Constructed policies may carry a nonzero rate at `n = 0`: the fixed-rate
/// heuristic keeps the server running, and paying, at a constant rate
/// regardless of queue length. Rates at `n = 0` never enter the dynamics
/// (there is no customer to depart), only the cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    rates: Mat,
}

impl Policy {
    /// Validates that every rate is finite and within `[0, ū]` (with a hair
    /// of slack for rates that round-tripped through text).
    pub fn from_rates(rates: Mat, u_max: f64) -> Result<Self> {
        let slack = 1e-9 * (1.0 + u_max);
        for n in 0..rates.rows() {
            for s in 0..rates.cols() {
                let r = rates[(n, s)];
                if !r.is_finite() || r < 0.0 || r > u_max + slack {
                    return Err(Error::InvalidModel(alloc::format!(
                        "policy rate at (n={n}, s={s}) is {r}, outside [0, {u_max}]"
                    )));
                }
            }
        }
        Ok(Policy { rates })
    }

    /// Constant rate everywhere, including at `n = 0` (the truly-constant
    /// convention used by the fixed-rate heuristic).
    pub fn constant(num_phases: usize, truncation_n: usize, mu: f64) -> Self {
        let mut rates = Mat::zeros(truncation_n + 1, num_phases);
        for n in 0..=truncation_n {
            for s in 0..num_phases {
                rates[(n, s)] = mu;
            }
        }
        Policy { rates }
    }

    /// Constant rate while the queue is non-empty, idle at `n = 0`.
    pub fn constant_when_busy(num_phases: usize, truncation_n: usize, mu: f64) -> Self {
        let mut p = Self::constant(num_phases, truncation_n, mu);
        for s in 0..num_phases {
            p.rates[(0, s)] = 0.0;
        }
        p
    }

    pub fn rates(&self) -> &Mat {
        &self.rates
    }

    pub fn rate(&self, n: usize, s: usize) -> f64 {
        self.rates[(n, s)]
    }

    pub fn num_levels(&self) -> usize {
        self.rates.rows()
    }

    pub fn num_phases(&self) -> usize {
        self.rates.cols()
    }
}

/// Output of [`solve_discounted`] / [`solve_average`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub value: ValueFunction,
    pub policy: Policy,
    /// Long-run average cost per unit time; `None` for discounted solves.
    pub gain: Option<f64>,
    /// Total sweeps across all internal lattice sizes.
    pub iterations: u64,
    /// Terminal convergence measure of the final solve: the sup-norm value
    /// change for discounted solves, the width of the gain bounds
    /// `ν·(M_k − m_k)` for average solves. At most the scenario tolerance.
    pub residual: f64,
    /// Rows of the internal lattice the accepted solve ran on.
    pub solved_rows: usize,
    /// Set when the scenario fails the stability predicate (possible only
    /// for discounted solves, where it is not fatal).
    pub stability_warning: bool,
}

struct Engine<'a> {
    um: UniformizedModel,
    pair: ConjugatePair<'a>,
    scenario: &'a Scenario,
}

struct SweepOutput {
    v: Vec<f64>,
    gain: f64,
    iterations: u64,
    residual: f64,
    ref_s: usize,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        Engine {
            um: scenario.uniformize(),
            pair: ConjugatePair::new(scenario.cost()),
            scenario,
        }
    }

    fn num_phases(&self) -> usize {
        self.scenario.phase().num_phases()
    }

    fn holding(&self, rows: usize) -> Vec<f64> {
        (0..rows).map(|n| self.scenario.cost().h(n)).collect()
    }

    /// One Jacobi sweep of the simplified optimality operator
    /// `(Tv)(n,s) = (1/(α+ν))[h(n) − φ(y(n,s)) + λ_s v(n⁺,s)
    ///              + Σ_{s′} Q̄_{ss′} v(n,s′) + (ν − η̄ − λ_s) v(n,s)]`
    /// with `y(0,s) = 0` pinned and `n⁺ = min(n+1, top)`. Returns the
    /// extreme per-state changes `(min d, max d)`, `d = Tv − v`.
    fn sweep(&self, alpha: f64, h: &[f64], v: &[f64], tv: &mut [f64]) -> (f64, f64) {
        let l = self.num_phases();
        let rows = h.len();
        let lam = self.scenario.phase().lambdas();
        let qbar = self.um.q_bar();
        let nu = self.um.nu();
        let eta = self.um.eta_bar();
        let inv_denom = 1.0 / (alpha + nu);
        let mut dmin = f64::INFINITY;
        let mut dmax = f64::NEG_INFINITY;
        for n in 0..rows {
            let base = n * l;
            let up_base = if n + 1 < rows { base + l } else { base };
            let vrow = &v[base..base + l];
            for s in 0..l {
                let vhere = vrow[s];
                let y = if n == 0 { 0.0 } else { vhere - v[base - l + s] };
                let mut acc = h[n] - self.pair.phi(y)
                    + lam[s] * v[up_base + s]
                    + (nu - eta - lam[s]) * vhere;
                let qrow = qbar.row(s);
                for s2 in 0..l {
                    acc += qrow[s2] * vrow[s2];
                }
                let t = acc * inv_denom;
                let d = t - vhere;
                tv[base + s] = t;
                if d < dmin {
                    dmin = d;
                }
                if d > dmax {
                    dmax = d;
                }
            }
        }
        (dmin, dmax)
    }

    /// Relative value iteration at `α = 0`: subtract the reference-state
    /// value after each sweep (reference `(0, argmin_s Tv(0,s))`, frozen
    /// after the first sweep) and stop once the span of the gain bounds
    /// `M_k − m_k` drops below `tolerance/ν`.
    fn run_average(&self, rows: usize) -> Result<SweepOutput> {
        let l = self.num_phases();
        let nu = self.um.nu();
        let h = self.holding(rows);
        let mut v = vec![0.0; rows * l];
        let mut tv = vec![0.0; rows * l];
        let stop = self.scenario.tolerance() / nu;
        let mut ref_idx = usize::MAX;
        for k in 1..=MAX_SWEEPS {
            let (dmin, dmax) = self.sweep(0.0, &h, &v, &mut tv);
            if ref_idx == usize::MAX {
                let mut best = 0;
                for s in 1..l {
                    if tv[s] < tv[best] {
                        best = s;
                    }
                }
                ref_idx = best;
            }
            let shift = tv[ref_idx];
            for x in tv.iter_mut() {
                *x -= shift;
            }
            core::mem::swap(&mut v, &mut tv);
            if dmax - dmin < stop {
                return Ok(SweepOutput {
                    v,
                    gain: nu * 0.5 * (dmin + dmax),
                    iterations: k,
                    residual: nu * (dmax - dmin),
                    ref_s: ref_idx,
                });
            }
        }
        Err(Error::NonConvergence { iterations: MAX_SWEEPS })
    }

    /// Plain value iteration at `α > 0`; stops when the sup-norm change
    /// falls below `tolerance·(1−β)/(2β)` with `β = ν/(α+ν)`, so the final
    /// iterate is within the tolerance of the fixed point.
    fn run_discounted(&self, rows: usize) -> Result<SweepOutput> {
        let l = self.num_phases();
        let alpha = self.scenario.alpha();
        let nu = self.um.nu();
        let h = self.holding(rows);
        let mut v = vec![0.0; rows * l];
        let mut tv = vec![0.0; rows * l];
        let beta = nu / (alpha + nu);
        let stop = self.scenario.tolerance() * (1.0 - beta) / (2.0 * beta);
        for k in 1..=MAX_SWEEPS {
            let (dmin, dmax) = self.sweep(alpha, &h, &v, &mut tv);
            core::mem::swap(&mut v, &mut tv);
            let delta = math::abs(dmin).max(math::abs(dmax));
            if delta < stop {
                return Ok(SweepOutput {
                    v,
                    gain: 0.0,
                    iterations: k,
                    residual: delta,
                    ref_s: 0,
                });
            }
        }
        Err(Error::NonConvergence { iterations: MAX_SWEEPS })
    }

    /// Windows an internal lattice iterate to the reported `(N+1)×L` table.
    fn window(&self, v: &[f64]) -> Mat {
        let l = self.num_phases();
        let n = self.scenario.truncation_n();
        let mut out = Mat::zeros(n + 1, l);
        for row in 0..=n {
            for s in 0..l {
                out[(row, s)] = v[row * l + s];
            }
        }
        out
    }

    /// Extracts `μ(n,s) = ψ(v(n,s) − v(n−1,s))` from a windowed value
    /// table, with `μ(0,s) = 0`.
    fn extract_policy(&self, values: &Mat) -> Policy {
        let mut rates = Mat::zeros(values.rows(), values.cols());
        for n in 1..values.rows() {
            for s in 0..values.cols() {
                rates[(n, s)] = self.pair.psi(values[(n, s)] - values[(n - 1, s)]);
            }
        }
        Policy { rates }
    }
}

/// Solves the discounted-cost problem (`α > 0`) by value iteration on the
/// simplified optimality equations. Instability is reported as a warning on
/// the result, not an error: discounted values stay finite on the truncated
/// lattice.
pub fn solve_discounted(scenario: &Scenario) -> Result<SolveResult> {
    if scenario.alpha() <= 0.0 {
        return Err(Error::InvalidModel(
            "discounted solve requires alpha > 0; use solve_average for alpha = 0".into(),
        ));
    }
    let stability_warning = !scenario.stability_check()?.stable;
    let engine = Engine::new(scenario);
    let n = scenario.truncation_n();
    let pad = base_pad(n);
    let mut total_iterations = 0u64;
    let mut prev_window: Option<Mat> = None;
    for k in 0..=MAX_DOUBLINGS {
        let rows = n + pad * (1 << k) + 1;
        let out = engine.run_discounted(rows)?;
        total_iterations += out.iterations;
        let win = engine.window(&out.v);
        if let Some(pwin) = prev_window {
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..win.as_slice().len() {
                diff = diff.max(math::abs(win.as_slice()[i] - pwin.as_slice()[i]));
                scale = scale.max(math::abs(win.as_slice()[i]));
            }
            if diff <= PAD_REL_TOL * (1.0 + scale) {
                let policy = engine.extract_policy(&win);
                return Ok(SolveResult {
                    value: ValueFunction::new(win, ValueMode::Discounted { alpha: scenario.alpha() }),
                    policy,
                    gain: None,
                    iterations: total_iterations,
                    residual: out.residual,
                    solved_rows: rows,
                    stability_warning,
                });
            }
        }
        prev_window = Some(win);
    }
    Err(Error::NonConvergence { iterations: total_iterations })
}

/// Solves the long-run average-cost problem by relative value iteration.
/// Requires a stable scenario.
pub fn solve_average(scenario: &Scenario) -> Result<SolveResult> {
    let stab = scenario.stability_check()?;
    if !stab.stable {
        return Err(Error::Unstable {
            mean_rate: stab.mean_rate,
            u_max: stab.u_max,
            phase: None,
        });
    }
    let engine = Engine::new(scenario);
    let n = scenario.truncation_n();
    let pad = base_pad(n);
    let mut total_iterations = 0u64;
    let mut prev_gain: Option<f64> = None;
    for k in 0..=MAX_DOUBLINGS {
        let rows = n + pad * (1 << k) + 1;
        let out = engine.run_average(rows)?;
        total_iterations += out.iterations;
        if let Some(pg) = prev_gain {
            if math::abs(out.gain - pg) <= PAD_REL_TOL * (1.0 + math::abs(out.gain)) {
                let win = engine.window(&out.v);
                let policy = engine.extract_policy(&win);
                return Ok(SolveResult {
                    value: ValueFunction::new(
                        win,
                        ValueMode::Relative { reference_state: (0, out.ref_s) },
                    ),
                    policy,
                    gain: Some(out.gain),
                    iterations: total_iterations,
                    residual: out.residual,
                    solved_rows: rows,
                    stability_warning: false,
                });
            }
        }
        prev_gain = Some(out.gain);
    }
    Err(Error::NonConvergence { iterations: total_iterations })
}

/// Long-run average cost of a stationary policy, computed exactly from the
/// stationary distribution of the induced continuous-time chain:
/// `g = Σ_{n,s} π(n,s)·(h(n) + c(μ(n,s)))`.
///
/// The chain runs on the same padded lattice as the solvers (the policy is
/// extended beyond row `N` by repeating its last row) so that evaluated
/// gains are directly comparable with solved ones. Rates at `n = 0` are
/// charged but never generate departures.
pub fn evaluate_policy(scenario: &Scenario, policy: &Policy) -> Result<f64> {
    let l = scenario.phase().num_phases();
    let n = scenario.truncation_n();
    if policy.num_phases() != l || policy.num_levels() != n + 1 {
        return Err(Error::InvalidModel(alloc::format!(
            "policy shape {}x{} does not match scenario ({}x{})",
            policy.num_levels(),
            policy.num_phases(),
            n + 1,
            l
        )));
    }
    if scenario.phase().lambda_max() == 0.0 {
        // No arrivals ever: the queue stays empty and only the phase moves.
        let p = scenario.phase().stationary_distribution()?;
        let cost = scenario.cost();
        return Ok((0..l)
            .map(|s| p[s] * (cost.h(0) + cost.c(policy.rate(0, s))))
            .sum());
    }
    let pad = base_pad(n);
    let mut prev_gain: Option<f64> = None;
    for k in 0..=MAX_DOUBLINGS {
        let top = n + pad * (1 << k);
        let gain = evaluate_on_lattice(scenario, policy, top)?;
        if let Some(pg) = prev_gain {
            if math::abs(gain - pg) <= PAD_REL_TOL * (1.0 + math::abs(gain)) {
                return Ok(gain);
            }
        }
        prev_gain = Some(gain);
    }
    Err(Error::NonConvergence { iterations: (MAX_DOUBLINGS + 1) as u64 })
}

/// Stationary distribution and gain on one fixed lattice `{0..top}×{1..L}`
/// via block-tridiagonal level reduction.
///
/// Censoring the chain to levels `≤ m` gives generators
/// `S_top = Q − diag(μ_top)` and
/// `S_m = Q − diag(λ) − 1{m≥1}diag(μ_m) + diag(λ)(−S_{m+1})⁻¹diag(μ_{m+1})`;
/// the level-0 stationary vector solves `π_0 S_0 = 0`, and levels propagate
/// by `π_{m+1} = π_m · diag(λ) · (−S_{m+1})⁻¹`.
fn evaluate_on_lattice(scenario: &Scenario, policy: &Policy, top: usize) -> Result<f64> {
    let phase = scenario.phase();
    let cost = scenario.cost();
    let l = phase.num_phases();
    let n = scenario.truncation_n();
    let q = phase.q();
    let lam = phase.lambdas();
    let rate = |m: usize, s: usize| policy.rate(m.min(n), s);

    // Downward pass: factor −S_m for m = top..1, keeping the factors for
    // the upward propagation.
    let mut factors: Vec<LuFactor> = Vec::with_capacity(top);
    let mut s_cur = {
        let mut m = q.clone();
        for s in 0..l {
            m[(s, s)] -= rate(top, s);
        }
        m
    };
    for m in (1..=top).rev() {
        let mut neg = Mat::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                neg[(i, j)] = -s_cur[(i, j)];
            }
        }
        let factor = LuFactor::new(neg)?;
        let mut s_prev = q.clone();
        for s in 0..l {
            s_prev[(s, s)] -= lam[s];
            if m - 1 >= 1 {
                s_prev[(s, s)] -= rate(m - 1, s);
            }
        }
        let mut col = vec![0.0; l];
        for j in 0..l {
            let mu_j = rate(m, j);
            if mu_j == 0.0 {
                continue;
            }
            col.iter_mut().for_each(|x| *x = 0.0);
            col[j] = mu_j;
            factor.solve(&mut col);
            for i in 0..l {
                s_prev[(i, j)] += lam[i] * col[i];
            }
        }
        factors.push(factor);
        s_cur = s_prev;
    }
    factors.reverse(); // factors[m-1] now factors −S_m

    // π_0: left null vector of the level-0 censored generator, one balance
    // equation swapped for a (temporary) normalization.
    let mut a = s_cur.transpose();
    for j in 0..l {
        a[(l - 1, j)] = 1.0;
    }
    let mut pi: Vec<f64> = core::iter::repeat(0.0).take(l - 1).chain([1.0]).collect();
    LuFactor::new(a)?.solve(&mut pi);
    if pi.iter().any(|&x| x < -1e-9) {
        return Err(Error::ReducibleChain);
    }

    let mut mass: f64 = pi.iter().sum();
    let mut num: f64 = (0..l)
        .map(|s| pi[s] * (cost.h(0) + cost.c(rate(0, s))))
        .sum();
    let mut cur = pi;
    for m in 1..=top {
        for (x, &lam_s) in cur.iter_mut().zip(lam) {
            *x *= lam_s;
        }
        factors[m - 1].solve_transposed(&mut cur);
        let h_m = cost.h(m);
        for s in 0..l {
            mass += cur[s];
            num += cur[s] * (h_m + cost.c(rate(m, s)));
        }
    }
    if !(mass > 0.0) || !num.is_finite() {
        return Err(Error::SingularSystem);
    }
    Ok(num / mass)
}
