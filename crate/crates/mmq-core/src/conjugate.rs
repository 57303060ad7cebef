//! Convex conjugate of the service-cost function.
//!
//! For `y = v(n,s) − v(n−1,s)` the per-state rate optimization
//! `min_μ {c(μ) − μy}` is solved in closed form by the conjugate
//! `φ(y) = max_{μ∈[0,ū]} {μy − c(μ)}` and its maximizer `ψ(y)`. Both are
//! evaluated directly from the marginal cost `c′`; no search over rates ever
//! happens inside the solvers.

use crate::error::{Error, Result};
use crate::math;
use crate::model::{CostModel, ServiceCost};

/// Absolute tolerance on the maximizer for the bisection fallback.
const BISECTION_MU_TOL: f64 = 1e-12;

/// How `(c′)⁻¹` is evaluated on `(c′(0), c′(ū))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMode {
    /// Closed form: `ln y` for the exponential family, `y` for the
    /// quadratic family.
    Analytic,
    /// Bisection on `c′(μ) = y` over `[0, ū]`.
    Numeric,
}

/// Evaluators for `ψ(y)` and `φ(y)` tied to one cost model.
#[derive(Debug, Clone)]
pub struct ConjugatePair<'a> {
    cost: &'a CostModel,
    c_prime_at_0: f64,
    c_prime_at_umax: f64,
    mode: InverseMode,
}

impl<'a> ConjugatePair<'a> {
    /// Picks the analytic inverse when the family has one, bisection
    /// otherwise.
    pub fn new(cost: &'a CostModel) -> Self {
        let mode = match cost.service() {
            ServiceCost::Exponential | ServiceCost::Quadratic { .. } => InverseMode::Analytic,
            ServiceCost::PowerSeries { .. } => InverseMode::Numeric,
        };
        ConjugatePair {
            cost,
            c_prime_at_0: cost.c_prime(0.0),
            c_prime_at_umax: cost.c_prime(cost.u_max()),
            mode,
        }
    }

    /// Forces a specific inverse mode; the analytic mode is only available
    /// for the exponential and quadratic families.
    pub fn with_mode(cost: &'a CostModel, mode: InverseMode) -> Result<Self> {
        if mode == InverseMode::Analytic {
            if let ServiceCost::PowerSeries { .. } = cost.service() {
                return Err(Error::InvalidModel(
                    "power series cost has no analytic marginal inverse".into(),
                ));
            }
        }
        Ok(ConjugatePair {
            cost,
            c_prime_at_0: cost.c_prime(0.0),
            c_prime_at_umax: cost.c_prime(cost.u_max()),
            mode,
        })
    }

    pub fn cost(&self) -> &CostModel {
        self.cost
    }

    pub fn c_prime_at_0(&self) -> f64 {
        self.c_prime_at_0
    }

    pub fn c_prime_at_umax(&self) -> f64 {
        self.c_prime_at_umax
    }

    /// Maximizer `ψ(y)`: `0` for `y ≤ c′(0)`, `(c′)⁻¹(y)` in between, `ū`
    /// for `y ≥ c′(ū)`.
    pub fn psi(&self, y: f64) -> f64 {
        if y <= self.c_prime_at_0 {
            return 0.0;
        }
        if y >= self.c_prime_at_umax {
            return self.cost.u_max();
        }
        match self.mode {
            InverseMode::Analytic => match self.cost.service() {
                ServiceCost::Exponential => math::ln(y),
                ServiceCost::Quadratic { .. } => y,
                ServiceCost::PowerSeries { .. } => unreachable!("rejected in with_mode"),
            },
            InverseMode::Numeric => {
                let mut lo = 0.0;
                let mut hi = self.cost.u_max();
                while hi - lo > BISECTION_MU_TOL {
                    let mid = 0.5 * (lo + hi);
                    if self.cost.c_prime(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Conjugate `φ(y)`: `0` for `y < 0`, otherwise
    /// `ψ(y)·y − c(ψ(y))`. Closed-form branches avoid recomputing `ψ` for
    /// the analytic families, which matters inside solver sweeps.
    pub fn phi(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match self.cost.service() {
            ServiceCost::Exponential if self.mode == InverseMode::Analytic => {
                // ψ interior is ln y, where c(ψ) = y − 1.
                if y <= self.c_prime_at_0 {
                    0.0
                } else if y >= self.c_prime_at_umax {
                    let u = self.cost.u_max();
                    u * y - self.cost.c(u)
                } else {
                    y * math::ln(y) - y + 1.0
                }
            }
            ServiceCost::Quadratic { offset } if self.mode == InverseMode::Analytic => {
                // ψ interior is y itself, so φ = y²/2 − offset there.
                if y >= self.c_prime_at_umax {
                    let u = self.cost.u_max();
                    u * y - (0.5 * u * u + offset)
                } else {
                    0.5 * y * y - offset
                }
            }
            _ => {
                let mu = self.psi(y);
                mu * y - self.cost.c(mu)
            }
        }
    }
}
