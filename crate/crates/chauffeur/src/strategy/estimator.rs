use super::StrategyError;

/// Running supremum of the evader speeds the pursuer has observed.
///
/// The pursuer never sees the evader's speed bound directly; it only sees how
/// fast the evader has actually moved, so its estimate is the largest speed
/// observed so far. Before any observation the estimate is the first
/// observation itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedEstimate {
    pub mu_hat: f64,
    pub history_max: f64,
}

impl SpeedEstimate {
    pub fn from_first(observed: f64) -> Result<Self, StrategyError> {
        check_observation(observed)?;
        Ok(Self {
            mu_hat: observed,
            history_max: observed,
        })
    }
}

fn check_observation(observed: f64) -> Result<(), StrategyError> {
    if (0.0..1.0).contains(&observed) {
        Ok(())
    } else {
        Err(StrategyError::Observation(observed))
    }
}

pub fn estimator_update(e: SpeedEstimate, observed: f64) -> Result<SpeedEstimate, StrategyError> {
    check_observation(observed)?;
    let m = e.history_max.max(observed);
    Ok(SpeedEstimate {
        mu_hat: m,
        history_max: m,
    })
}
