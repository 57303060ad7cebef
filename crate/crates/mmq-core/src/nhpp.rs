//! Periodic non-homogeneous Poisson arrival control.
//!
//! The controller sees the queue length and the clock position `z` inside
//! one period of the arrival-rate function `λ(t)`. The optimality
//! inequalities are discretized on an equispaced time grid and solved by
//! damped relative value iteration; separately, a cyclic MMPP whose phases
//! average `λ` over a partition of the period approximates the problem, and
//! its (stationary, phase-indexed) optimal policy is lifted back onto the
//! clock for head-to-head evaluation.
//!
//! Unlike [`crate::solver`], the time-grid solver runs on the literal
//! truncated lattice `{0..N}`: the truncation is part of the discretized
//! model here, not an internal artifact, and evaluated policies only exist
//! on those rows.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::conjugate::ConjugatePair;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math;
use crate::model::{CostModel, PhaseProcess};
use crate::solver::{Policy, MAX_SWEEPS};

/// Damping factor for relative value iteration on the periodic clock chain
/// (the undamped iteration need not converge there).
const DAMPING: f64 = 0.5;

/// Periodic arrival-rate function `λ(t)` with period `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    family: RateFamily,
    period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateFamily {
    /// Constant on `[breakpoints[i], breakpoints[i+1])`; the breakpoints
    /// start at `0`, end at the period, and cover it exactly.
    PiecewiseConstant { breakpoints: Vec<f64>, rates: Vec<f64> },
    /// `λ(t) = amplitude·sin(2πt/T) + offset`, with
    /// `offset ≥ amplitude ≥ 0` keeping the rate non-negative.
    Sinusoid { amplitude: f64, offset: f64 },
}

impl RateFunction {
    pub fn new(family: RateFamily, period: f64) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "period must be finite and positive, got {period}"
            )));
        }
        match &family {
            RateFamily::PiecewiseConstant { breakpoints, rates } => {
                if breakpoints.len() != rates.len() + 1 {
                    return Err(Error::InvalidModel(
                        "need exactly one more breakpoint than rates".into(),
                    ));
                }
                if breakpoints[0] != 0.0 {
                    return Err(Error::InvalidModel("first breakpoint must be 0".into()));
                }
                let last = *breakpoints.last().expect("nonempty");
                if math::abs(last - period) > 1e-9 * period {
                    return Err(Error::InvalidModel(
                        "last breakpoint must equal the period".into(),
                    ));
                }
                for w in breakpoints.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::InvalidModel(
                            "breakpoints must be strictly increasing".into(),
                        ));
                    }
                }
                for &r in rates {
                    if !r.is_finite() || r < 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "piecewise rate must be finite and non-negative, got {r}"
                        )));
                    }
                }
            }
            RateFamily::Sinusoid { amplitude, offset } => {
                if !amplitude.is_finite() || !offset.is_finite() || *amplitude < 0.0 {
                    return Err(Error::InvalidModel(
                        "sinusoid parameters must be finite with amplitude >= 0".into(),
                    ));
                }
                if offset < amplitude {
                    return Err(Error::InvalidModel(
                        "sinusoid needs offset >= amplitude so the rate stays non-negative".into(),
                    ));
                }
            }
        }
        Ok(RateFunction { family, period })
    }

    pub fn family(&self) -> &RateFamily {
        &self.family
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `λ(t)`, with `t` wrapped into `[0, T)`.
    pub fn rate_at(&self, t: f64) -> f64 {
        let mut z = t - self.period * math::floor(t / self.period);
        if z >= self.period {
            z = 0.0; // guard against round-up at the wrap
        }
        match &self.family {
            RateFamily::PiecewiseConstant { breakpoints, rates } => {
                let idx = breakpoints.partition_point(|&c| c <= z) - 1;
                rates[idx.min(rates.len() - 1)]
            }
            RateFamily::Sinusoid { amplitude, offset } => {
                offset + amplitude * math::sin(2.0 * core::f64::consts::PI * z / self.period)
            }
        }
    }

    /// Exact average of `λ` over `[t0, t1] ⊆ [0, T]` (closed form for both
    /// families).
    pub fn average_on(&self, t0: f64, t1: f64) -> f64 {
        assert!(
            t0 >= 0.0 && t1 <= self.period * (1.0 + 1e-12) && t1 > t0,
            "need 0 <= t0 < t1 <= T"
        );
        match &self.family {
            RateFamily::PiecewiseConstant { breakpoints, rates } => {
                let mut integral = 0.0;
                for (i, &r) in rates.iter().enumerate() {
                    let overlap = (t1.min(breakpoints[i + 1]) - t0.max(breakpoints[i])).max(0.0);
                    integral += r * overlap;
                }
                integral / (t1 - t0)
            }
            RateFamily::Sinusoid { amplitude, offset } => {
                let w = 2.0 * core::f64::consts::PI / self.period;
                let integral = offset * (t1 - t0)
                    + amplitude / w * (math::cos(w * t0) - math::cos(w * t1));
                integral / (t1 - t0)
            }
        }
    }

    /// `max_t λ(t)` over one period.
    pub fn max_rate(&self) -> f64 {
        match &self.family {
            RateFamily::PiecewiseConstant { rates, .. } => {
                rates.iter().fold(0.0, |m, &r| if r > m { r } else { m })
            }
            RateFamily::Sinusoid { amplitude, offset } => offset + amplitude,
        }
    }

    /// Time-averaged rate `(1/T)∫₀ᵀ λ`.
    pub fn mean_rate(&self) -> f64 {
        self.average_on(0.0, self.period)
    }
}

/// A discretized periodic-arrival control instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NhppScenario {
    rate: RateFunction,
    cost: CostModel,
    truncation_n: usize,
    delta_t: f64,
    slots: usize,
    nu: f64,
    tolerance: f64,
}

impl NhppScenario {
    /// Validates that the slot width divides the period, that the
    /// uniformization rate `ν = max λ + ū` keeps `ν·Δt < 5` (so the event
    /// probabilities stay well-conditioned), and that the holding cost is
    /// convex non-decreasing with `h(0) = 0` over the lattice.
    pub fn new(
        rate: RateFunction,
        cost: CostModel,
        truncation_n: usize,
        delta_t: f64,
        tolerance: f64,
    ) -> Result<Self> {
        if truncation_n == 0 {
            return Err(Error::InvalidModel("truncation_N must be positive".into()));
        }
        if !delta_t.is_finite() || delta_t <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "delta_t must be finite and positive, got {delta_t}"
            )));
        }
        if !tolerance.is_finite() || tolerance <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "tolerance must be finite and positive, got {tolerance}"
            )));
        }
        let ratio = rate.period() / delta_t;
        let slots = math::round_to_usize(ratio);
        if slots == 0 || math::abs(slots as f64 * delta_t - rate.period()) > 1e-9 * rate.period() {
            return Err(Error::InvalidModel(format!(
                "delta_t must divide the period into whole slots (period/delta_t = {ratio})"
            )));
        }
        let nu = rate.max_rate() + cost.u_max();
        if nu * delta_t >= 5.0 {
            return Err(Error::InvalidModel(format!(
                "nu*delta_t = {} is too coarse; need nu*delta_t < 5",
                nu * delta_t
            )));
        }
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
        Ok(NhppScenario {
            rate,
            cost,
            truncation_n,
            delta_t,
            slots,
            nu,
            tolerance,
        })
    }

    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn truncation_n(&self) -> usize {
        self.truncation_n
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Number of slots per period, `T/Δt`.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Uniformization rate `ν = max_t λ(t) + ū`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Clock position of slot `j`: `z_j = j·Δt`.
    pub fn slot_time(&self, j: usize) -> f64 {
        j as f64 * self.delta_t
    }
}

/// Rate table `μ̂(n,z)` over `{0..N} × {0, Δt, …, T−Δt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NhppPolicy {
    rates: Mat,
    delta_t: f64,
}

impl NhppPolicy {
    /// Validates shape-free invariants: entries in `[0, ū]` and an idle
    /// first row.
    pub fn from_rates(rates: Mat, u_max: f64, delta_t: f64) -> Result<Self> {
        let slack = 1e-9 * (1.0 + u_max);
        for n in 0..rates.rows() {
            for z in 0..rates.cols() {
                let r = rates[(n, z)];
                if !r.is_finite() || r < 0.0 || r > u_max + slack {
                    return Err(Error::InvalidModel(format!(
                        "rate at (n={n}, z={z}) is {r}, outside [0, {u_max}]"
                    )));
                }
                if n == 0 && r != 0.0 {
                    return Err(Error::InvalidModel(
                        "the server must idle at queue length 0".into(),
                    ));
                }
            }
        }
        Ok(NhppPolicy { rates, delta_t })
    }

    pub fn rates(&self) -> &Mat {
        &self.rates
    }

    pub fn rate(&self, n: usize, slot: usize) -> f64 {
        self.rates[(n, slot)]
    }

    pub fn num_levels(&self) -> usize {
        self.rates.rows()
    }

    pub fn slots(&self) -> usize {
        self.rates.cols()
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }
}

/// Output of [`solve_nhpp_average`].
#[derive(Debug, Clone)]
pub struct NhppSolveResult {
    pub policy: NhppPolicy,
    /// Long-run average cost per unit time.
    pub gain: f64,
    /// Width of the terminal gain bounds, at most the scenario tolerance.
    pub residual: f64,
    pub iterations: u64,
}

enum SweepMode<'p> {
    Optimize,
    Evaluate(&'p NhppPolicy),
}

struct ClockChain<'a> {
    sc: &'a NhppScenario,
    pair: ConjugatePair<'a>,
    /// λ at the left endpoint of each slot.
    lam: Vec<f64>,
    h: Vec<f64>,
    p_event: f64,
    p_none: f64,
    /// `(1 − e^{−νΔt})/(νΔt)`, the factor turning a value difference into
    /// the effective price `y` seen by one slot.
    y_scale: f64,
}

impl<'a> ClockChain<'a> {
    fn new(sc: &'a NhppScenario) -> Self {
        let nd = sc.nu() * sc.delta_t();
        ClockChain {
            sc,
            pair: ConjugatePair::new(sc.cost()),
            lam: (0..sc.slots()).map(|j| sc.rate().rate_at(sc.slot_time(j))).collect(),
            h: (0..=sc.truncation_n()).map(|n| sc.cost().h(n)).collect(),
            p_event: -math::exp_m1(-nd),
            p_none: math::exp(-nd),
            y_scale: -math::exp_m1(-nd) / nd,
        }
    }

    /// Damped relative value iteration on the `(n,z)` lattice. Per state,
    /// with `z′ = z ⊕ Δt`:
    /// `(Tv)(n,z) = (h(n) + 1{n>0}c(x))Δt
    ///    + (1−e^{−νΔt})[(λ(z)/ν)v(n⁺,z′) + 1{n>0}(x/ν)v(n−1,z′)
    ///                   + (1−λ(z)/ν−1{n>0}x/ν)v(n,z′)]
    ///    + e^{−νΔt}v(n,z′)`,
    /// where `x = ψ(y_eff)` in optimize mode (the closed-form inner
    /// minimizer) or the given policy's rate in evaluate mode, and arrivals
    /// at `n = N` self-loop. The iterate is `v ← v + τ(Tv − v)` with
    /// `τ = 1/2`, re-centered at state `(0,0)` each sweep; the span of
    /// `Tv − v` brackets `gain·Δt`.
    fn run(&self, mode: SweepMode) -> Result<(Vec<f64>, f64, f64, u64)> {
        let slots = self.sc.slots();
        let rows = self.sc.truncation_n() + 1;
        let nu = self.sc.nu();
        let dt = self.sc.delta_t();
        let cost = self.sc.cost();
        let mut v = vec![0.0; rows * slots];
        let mut tv = vec![0.0; rows * slots];
        let stop = self.sc.tolerance() * dt;
        for k in 1..=MAX_SWEEPS {
            let mut dmin = f64::INFINITY;
            let mut dmax = f64::NEG_INFINITY;
            for n in 0..rows {
                let base = n * slots;
                for z in 0..slots {
                    let zp = if z + 1 < slots { z + 1 } else { 0 };
                    let v_same = v[base + zp];
                    let v_up = if n + 1 < rows { v[base + slots + zp] } else { v_same };
                    let (x, stage) = if n == 0 {
                        (0.0, 0.0)
                    } else {
                        let v_down = v[base - slots + zp];
                        let x = match &mode {
                            SweepMode::Optimize => {
                                self.pair.psi(self.y_scale * (v_same - v_down))
                            }
                            SweepMode::Evaluate(p) => p.rate(n, z),
                        };
                        (x, (self.h[n] + cost.c(x)) * dt)
                    };
                    let lam_frac = self.lam[z] / nu;
                    let x_frac = x / nu;
                    let v_down = if n > 0 { v[base - slots + zp] } else { 0.0 };
                    let mixed = lam_frac * v_up
                        + x_frac * v_down
                        + (1.0 - lam_frac - x_frac) * v_same;
                    let t_full = stage + self.p_event * mixed + self.p_none * v_same;
                    let d = t_full - v[base + z];
                    tv[base + z] = v[base + z] + DAMPING * d;
                    if d < dmin {
                        dmin = d;
                    }
                    if d > dmax {
                        dmax = d;
                    }
                }
            }
            let shift = tv[0];
            for x in tv.iter_mut() {
                *x -= shift;
            }
            core::mem::swap(&mut v, &mut tv);
            if dmax - dmin < stop {
                let gain = 0.5 * (dmin + dmax) / dt;
                let residual = (dmax - dmin) / dt;
                return Ok((v, gain, residual, k));
            }
        }
        Err(Error::NonConvergence { iterations: MAX_SWEEPS })
    }

    fn extract_policy(&self, v: &[f64]) -> NhppPolicy {
        let slots = self.sc.slots();
        let rows = self.sc.truncation_n() + 1;
        let mut rates = Mat::zeros(rows, slots);
        for n in 1..rows {
            for z in 0..slots {
                let zp = if z + 1 < slots { z + 1 } else { 0 };
                let y = self.y_scale * (v[n * slots + zp] - v[(n - 1) * slots + zp]);
                rates[(n, z)] = self.pair.psi(y);
            }
        }
        NhppPolicy {
            rates,
            delta_t: self.sc.delta_t(),
        }
    }
}

/// Solves the discretized periodic-arrival average-cost problem. Requires
/// the time-averaged arrival rate to sit strictly below `ū`.
pub fn solve_nhpp_average(sc: &NhppScenario) -> Result<NhppSolveResult> {
    let mean = sc.rate().mean_rate();
    if sc.cost().u_max() <= mean {
        return Err(Error::Unstable {
            mean_rate: mean,
            u_max: sc.cost().u_max(),
            phase: None,
        });
    }
    let chain = ClockChain::new(sc);
    let (v, gain, residual, iterations) = chain.run(SweepMode::Optimize)?;
    Ok(NhppSolveResult {
        policy: chain.extract_policy(&v),
        gain,
        residual,
        iterations,
    })
}

/// Long-run average cost per unit time of a fixed clock-indexed policy,
/// computed by the same damped iteration without the inner minimization.
///
/// Positive recurrence is pre-checked through the time-averaged drift: the
/// mean arrival rate over the slots must sit below the mean service rate
/// the policy offers at the top level (where the chain would otherwise
/// pile up).
pub fn evaluate_nhpp_policy(sc: &NhppScenario, policy: &NhppPolicy) -> Result<f64> {
    let slots = sc.slots();
    let rows = sc.truncation_n() + 1;
    if policy.slots() != slots || policy.num_levels() != rows {
        return Err(Error::InvalidModel(format!(
            "policy shape {}x{} does not match scenario ({}x{})",
            policy.num_levels(),
            policy.slots(),
            rows,
            slots
        )));
    }
    let mean_arrival = (0..slots).map(|j| sc.rate().rate_at(sc.slot_time(j))).sum::<f64>()
        / slots as f64;
    let mean_top_service =
        (0..slots).map(|z| policy.rate(rows - 1, z)).sum::<f64>() / slots as f64;
    if mean_top_service <= mean_arrival {
        return Err(Error::Unstable {
            mean_rate: mean_arrival,
            u_max: mean_top_service,
            phase: None,
        });
    }
    let chain = ClockChain::new(sc);
    let (_, gain, _, _) = chain.run(SweepMode::Evaluate(policy))?;
    Ok(gain)
}

/// Equal-width partition boundaries `0 = t_0 < … < t_l = T`.
pub fn equal_cut_points(period: f64, partitions: usize) -> Vec<f64> {
    (0..=partitions)
        .map(|i| period * i as f64 / partitions as f64)
        .collect()
}

/// Builds the cyclic MMPP that approximates a periodic rate function:
/// phase `s` carries the exact average of `λ` over partition `s`, and the
/// generator cycles `s → s+1` at rate `1/width_s` (so the mean phase
/// sojourn matches the partition width).
///
/// The returned process keeps its phases in time order (the cyclic
/// generator is meaningless under re-sorting), so downstream solves consume
/// it with λ-sorting disabled.
pub fn build_mmpp_approximation(
    rate: &RateFunction,
    partitions: usize,
    cut_points: Option<&[f64]>,
) -> Result<PhaseProcess> {
    if partitions == 0 {
        return Err(Error::InvalidModel("need at least one partition".into()));
    }
    let cuts: Vec<f64> = match cut_points {
        Some(c) => {
            if c.len() != partitions + 1 {
                return Err(Error::InvalidModel(format!(
                    "need {} cut points for {} partitions, got {}",
                    partitions + 1,
                    partitions,
                    c.len()
                )));
            }
            if c[0] != 0.0 || math::abs(c[partitions] - rate.period()) > 1e-9 * rate.period() {
                return Err(Error::InvalidModel(
                    "cut points must start at 0 and end at the period".into(),
                ));
            }
            c.to_vec()
        }
        None => equal_cut_points(rate.period(), partitions),
    };
    for (i, w) in cuts.windows(2).enumerate() {
        if !(w[1] - w[0] > 0.0) {
            return Err(Error::DegeneratePartition { index: i });
        }
    }
    let lambdas: Vec<f64> = (0..partitions)
        .map(|s| rate.average_on(cuts[s], cuts[s + 1]))
        .collect();
    let mut q = Mat::zeros(partitions, partitions);
    if partitions > 1 {
        for s in 0..partitions {
            let eta = 1.0 / (cuts[s + 1] - cuts[s]);
            q[(s, s)] = -eta;
            q[(s, (s + 1) % partitions)] = eta;
        }
    }
    PhaseProcess::new_unsorted(q, lambdas)
}

/// Lifts a phase-indexed MMPP policy onto the clock grid:
/// `μ̂(n, z) = μ(n, s)` for the unique partition with `t_{s−1} ≤ z < t_s`
/// (half-open, so a slot exactly on a boundary takes the next partition's
/// rate).
pub fn lift_policy(
    mmpp_policy: &Policy,
    cut_points: &[f64],
    sc: &NhppScenario,
) -> Result<NhppPolicy> {
    let l = cut_points.len().saturating_sub(1);
    if l == 0 || mmpp_policy.num_phases() != l {
        return Err(Error::InvalidModel(format!(
            "policy has {} phases but the partition has {}",
            mmpp_policy.num_phases(),
            l
        )));
    }
    let rows = sc.truncation_n() + 1;
    if mmpp_policy.num_levels() != rows {
        return Err(Error::InvalidModel(format!(
            "policy has {} levels but the scenario lattice has {}",
            mmpp_policy.num_levels(),
            rows
        )));
    }
    let interior = &cut_points[1..l];
    let mut rates = Mat::zeros(rows, sc.slots());
    for z in 0..sc.slots() {
        let t = sc.slot_time(z);
        let s = interior.partition_point(|&c| c <= t);
        for n in 0..rows {
            rates[(n, z)] = mmpp_policy.rate(n, s);
        }
    }
    Ok(NhppPolicy {
        rates,
        delta_t: sc.delta_t(),
    })
}
