//! Scenario configuration files.
//!
//! A config is a TOML document with sections `[phase]` (modulating chain),
//! `[cost]` (service and holding families plus the action bound), `[solver]`
//! (discount, truncation, tolerances), and optionally `[nhpp]` (a periodic
//! arrival-rate function and its discretization). The whole document is
//! schema-checked before any computation: unknown keys are errors, and so
//! are parameters that do not belong to the selected family.
//!
//! Family selectors are plain strings with the parameters alongside them
//! (`service = { family = "quadratic", offset = -1.0 }`) rather than tagged
//! enums, so that a misspelled or extraneous key is always reported instead
//! of silently ignored.

use std::path::Path;

use serde::Deserialize;

use mmq_core::linalg::Mat;
use mmq_core::model::{CostModel, HoldingCost, PhaseProcess, Scenario, ServiceCost};
use mmq_core::nhpp::{NhppScenario, RateFamily, RateFunction};

use crate::fail::Failure;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub phase: Option<PhaseSection>,
    pub cost: CostSection,
    pub solver: SolverSection,
    pub nhpp: Option<NhppSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    /// Generator rows, row-major.
    pub q: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub service: ServiceSpec,
    pub holding: HoldingSpec,
    pub u_max: f64,
}

/// Service-cost family plus its parameters: `exponential` (none),
/// `quadratic` (`offset`, default 0), `power_series` (`coefficients`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub family: String,
    pub offset: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
}

/// Holding-cost family plus its parameters: `linear` (none),
/// `shifted_linear` (`k`), `power` (`coefficient`, `exponent`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldingSpec {
    pub family: String,
    pub k: Option<u32>,
    pub coefficient: Option<f64>,
    pub exponent: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub alpha: f64,
    #[serde(rename = "truncation_N")]
    pub truncation_n: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub uniformization_slack: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NhppSection {
    pub rate: RateSpec,
    #[serde(rename = "period_T")]
    pub period_t: f64,
    pub delta_t: f64,
    pub partitions: usize,
}

/// Arrival-rate family plus its parameters: `piecewise_constant`
/// (`breakpoints`, `rates`), `sinusoid` (`amplitude`, `offset`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub family: String,
    pub breakpoints: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub offset: Option<f64>,
}

fn default_tolerance() -> f64 {
    1e-8
}

fn require<T: Clone>(opt: &Option<T>, key: &str, family: &str) -> Result<T, Failure> {
    opt.clone()
        .ok_or_else(|| Failure::Config(format!("the `{family}` family needs `{key}`")))
}

fn forbid<T>(opt: &Option<T>, key: &str, family: &str) -> Result<(), Failure> {
    match opt {
        Some(_) => Err(Failure::Config(format!(
            "`{key}` does not apply to the `{family}` family"
        ))),
        None => Ok(()),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(format!("config error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn cost_model(&self) -> Result<CostModel, Failure> {
        let spec = &self.cost.service;
        let service = match spec.family.as_str() {
            "exponential" => {
                forbid(&spec.offset, "offset", "exponential")?;
                forbid(&spec.coefficients, "coefficients", "exponential")?;
                ServiceCost::Exponential
            }
            "quadratic" => {
                forbid(&spec.coefficients, "coefficients", "quadratic")?;
                ServiceCost::Quadratic {
                    offset: spec.offset.unwrap_or(0.0),
                }
            }
            "power_series" => {
                forbid(&spec.offset, "offset", "power_series")?;
                ServiceCost::PowerSeries {
                    coefficients: require(&spec.coefficients, "coefficients", "power_series")?,
                }
            }
            other => {
                return Err(Failure::Config(format!(
                    "unknown service family `{other}` (expected exponential, quadratic, or power_series)"
                )))
            }
        };
        let spec = &self.cost.holding;
        let holding = match spec.family.as_str() {
            "linear" => {
                forbid(&spec.k, "k", "linear")?;
                forbid(&spec.coefficient, "coefficient", "linear")?;
                forbid(&spec.exponent, "exponent", "linear")?;
                HoldingCost::Linear
            }
            "shifted_linear" => {
                forbid(&spec.coefficient, "coefficient", "shifted_linear")?;
                forbid(&spec.exponent, "exponent", "shifted_linear")?;
                HoldingCost::ShiftedLinear {
                    k: require(&spec.k, "k", "shifted_linear")?,
                }
            }
            "power" => {
                forbid(&spec.k, "k", "power")?;
                HoldingCost::Power {
                    coefficient: require(&spec.coefficient, "coefficient", "power")?,
                    exponent: require(&spec.exponent, "exponent", "power")?,
                }
            }
            other => {
                return Err(Failure::Config(format!(
                    "unknown holding family `{other}` (expected linear, shifted_linear, or power)"
                )))
            }
        };
        Ok(CostModel::new(service, holding, self.cost.u_max)?)
    }

    /// The modulated-queue scenario described by `[phase]`, `[cost]`, and
    /// `[solver]`.
    pub fn scenario(&self) -> Result<Scenario, Failure> {
        let section = self
            .phase
            .as_ref()
            .ok_or_else(|| Failure::Config("config has no [phase] section".into()))?;
        let q = Mat::from_rows(&section.q)?;
        let phase = PhaseProcess::new(q, section.lambdas.clone())?;
        let scenario = Scenario::new(
            phase,
            self.cost_model()?,
            self.solver.truncation_n,
            self.solver.alpha,
            self.solver.tolerance,
        )?;
        Ok(match self.solver.uniformization_slack {
            Some(slack) => scenario.with_slack(slack)?,
            None => scenario,
        })
    }

    pub fn rate_function(&self) -> Result<RateFunction, Failure> {
        let section = self.nhpp_section()?;
        let spec = &section.rate;
        let family = match spec.family.as_str() {
            "piecewise_constant" => {
                forbid(&spec.amplitude, "amplitude", "piecewise_constant")?;
                forbid(&spec.offset, "offset", "piecewise_constant")?;
                RateFamily::PiecewiseConstant {
                    breakpoints: require(&spec.breakpoints, "breakpoints", "piecewise_constant")?,
                    rates: require(&spec.rates, "rates", "piecewise_constant")?,
                }
            }
            "sinusoid" => {
                forbid(&spec.breakpoints, "breakpoints", "sinusoid")?;
                forbid(&spec.rates, "rates", "sinusoid")?;
                RateFamily::Sinusoid {
                    amplitude: require(&spec.amplitude, "amplitude", "sinusoid")?,
                    offset: require(&spec.offset, "offset", "sinusoid")?,
                }
            }
            other => {
                return Err(Failure::Config(format!(
                    "unknown rate family `{other}` (expected piecewise_constant or sinusoid)"
                )))
            }
        };
        Ok(RateFunction::new(family, section.period_t)?)
    }

    /// The periodic-arrival scenario described by `[nhpp]`, `[cost]`, and
    /// `[solver]` (truncation and tolerance; the discount is not used).
    pub fn nhpp_scenario(&self) -> Result<NhppScenario, Failure> {
        let section = self.nhpp_section()?;
        Ok(NhppScenario::new(
            self.rate_function()?,
            self.cost_model()?,
            self.solver.truncation_n,
            section.delta_t,
            self.solver.tolerance,
        )?)
    }

    pub fn nhpp_partitions(&self) -> Result<usize, Failure> {
        Ok(self.nhpp_section()?.partitions)
    }

    fn nhpp_section(&self) -> Result<&NhppSection, Failure> {
        self.nhpp
            .as_ref()
            .ok_or_else(|| Failure::Config("config has no [nhpp] section".into()))
    }
}
