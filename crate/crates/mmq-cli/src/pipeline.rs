//! The periodic-arrival approximation pipeline shared by `nhpp` and
//! `reproduce`: build the cyclic MMPP whose phases average the rate
//! function over an equal partition of the period, solve it for the
//! long-run-average criterion, lift the phase policy back onto the clock
//! grid, and evaluate the lift under the exact periodic dynamics.

use mmq_core::model::Scenario;
use mmq_core::nhpp::{self, NhppPolicy, NhppScenario};
use mmq_core::solver::{self, Policy};

use crate::fail::Failure;

pub struct ApproxOutcome {
    pub mmpp_policy: Policy,
    pub lifted: NhppPolicy,
    /// Gain of the lifted policy under the periodic arrival process.
    pub gain: f64,
}

pub fn approximate(sc: &NhppScenario, partitions: usize) -> Result<ApproxOutcome, Failure> {
    let phase = nhpp::build_mmpp_approximation(sc.rate(), partitions, None)?;
    let mmpp_scenario = Scenario::new(
        phase,
        sc.cost().clone(),
        sc.truncation_n(),
        0.0,
        sc.tolerance(),
    )?;
    let solved = solver::solve_average(&mmpp_scenario)?;
    let cuts = nhpp::equal_cut_points(sc.rate().period(), partitions);
    let lifted = nhpp::lift_policy(&solved.policy, &cuts, sc)?;
    let gain = nhpp::evaluate_nhpp_policy(sc, &lifted)?;
    Ok(ApproxOutcome {
        mmpp_policy: solved.policy,
        lifted,
        gain,
    })
}
