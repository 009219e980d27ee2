//! Feedback strategies, the pursuer's speed estimator, and the evader's
//! truthful and deceptive speed policies.
//!
//! The estimator consumes the evader's observed speed. The measurement model
//! is a supremum over the evader's realised actions; it is not a function of
//! the pursuer's own turn rate.

mod estimator;
mod policy;

use std::sync::Arc;

use thiserror::Error;

use crate::game::{GameParams, RelState};
use crate::solution::{Geometry, SolutionError};

pub use estimator::{estimator_update, SpeedEstimate};
pub use policy::{
    deceptive_policy, DeceptiveEvader, EstimatingPursuer, EvaderPlan, EvaderPolicy, HeadingRule,
    InformedPursuer, PolicyRegistry, PolicySpec, PursuerPolicy, StepContext, SwitchTrigger,
    TruthfulEvader,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("observed speed {0} outside [0, 1)")]
    Observation(f64),
    #[error("unknown {role} policy '{name}' (known: {known})")]
    UnknownPolicy {
        role: &'static str,
        name: String,
        known: String,
    },
    #[error("policy '{0}' needs a switch time")]
    MissingSwitchTime(String),
    #[error("speed ordering requires mu_low <= mu_high, got {low} > {high}")]
    SpeedOrder { low: f64, high: f64 },
    #[error("geometry: {0}")]
    Geometry(#[from] SolutionError),
}

/// Pursuer turn rate at `s`: +1 in primary and tributary regions, −1 in the
/// secondary region, 0 on the universal lines, negated for `x < 0`.
pub fn pursuer_feedback(g: &Geometry, s: RelState) -> f64 {
    g.equilibrium(s).u
}

/// Evader relative heading at `s`.
pub fn evader_feedback(g: &Geometry, s: RelState) -> f64 {
    g.equilibrium(s).psi
}

/// Which of the two cached solutions a policy is using.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Truth,
    Low,
}

/// Solutions for the true speed bound and the slow decoy speed.
#[derive(Debug, Clone)]
pub struct GeometrySet {
    pub truth: Arc<Geometry>,
    pub low: Arc<Geometry>,
}

impl GeometrySet {
    pub fn build(truth: &GameParams, low: &GameParams) -> Result<Self, SolutionError> {
        let t = Arc::new(Geometry::build(truth)?);
        let lo = if low == truth {
            Arc::clone(&t)
        } else {
            Arc::new(Geometry::build(low)?)
        };
        Ok(Self { truth: t, low: lo })
    }

    pub fn get(&self, w: Which) -> &Geometry {
        match w {
            Which::Truth => &self.truth,
            Which::Low => &self.low,
        }
    }

    /// Solution whose speed bound is closest to `mu`; ties go to the truth.
    pub fn nearest(&self, mu: f64) -> Which {
        let dt = (self.truth.params().mu() - mu).abs();
        let dl = (self.low.params().mu() - mu).abs();
        if dl < dt {
            Which::Low
        } else {
            Which::Truth
        }
    }
}
