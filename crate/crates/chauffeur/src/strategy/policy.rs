//! Pursuer and evader policies behind trait objects, looked up by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::game::{Controls, RelState};
use crate::sim::step;

use super::{estimator_update, GeometrySet, SpeedEstimate, StrategyError, Which};

/// Shared inputs for building a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    pub mu_high: f64,
    pub mu_low: f64,
    pub switch_time: Option<f64>,
}

pub trait PursuerPolicy: Send {
    fn name(&self) -> &'static str;
    /// Called once with the evader's commanded speed at `t = 0`.
    fn start(&mut self, first_observed: f64) -> Result<(), StrategyError>;
    /// Called at each sample boundary after the first.
    fn observe(&mut self, observed: f64) -> Result<(), StrategyError>;
    fn mu_hat(&self) -> f64;
}

/// Knows the true speed bound from the start.
#[derive(Debug, Clone)]
pub struct InformedPursuer {
    mu: f64,
}

impl InformedPursuer {
    pub fn new(mu: f64) -> Self {
        Self { mu }
    }
}

impl PursuerPolicy for InformedPursuer {
    fn name(&self) -> &'static str {
        "informed"
    }
    fn start(&mut self, _: f64) -> Result<(), StrategyError> {
        Ok(())
    }
    fn observe(&mut self, _: f64) -> Result<(), StrategyError> {
        Ok(())
    }
    fn mu_hat(&self) -> f64 {
        self.mu
    }
}

/// Plays the solution for its running estimate of the speed bound.
#[derive(Debug, Clone, Default)]
pub struct EstimatingPursuer {
    estimate: Option<SpeedEstimate>,
}

impl EstimatingPursuer {
    pub fn new() -> Self {
        Self::default()
    }
}

impl PursuerPolicy for EstimatingPursuer {
    fn name(&self) -> &'static str {
        "estimating"
    }
    fn start(&mut self, first_observed: f64) -> Result<(), StrategyError> {
        self.estimate = Some(SpeedEstimate::from_first(first_observed)?);
        Ok(())
    }
    fn observe(&mut self, observed: f64) -> Result<(), StrategyError> {
        self.estimate = Some(match self.estimate {
            Some(e) => estimator_update(e, observed)?,
            None => SpeedEstimate::from_first(observed)?,
        });
        Ok(())
    }
    fn mu_hat(&self) -> f64 {
        self.estimate.map_or(0.0, |e| e.mu_hat)
    }
}

/// How the evader picks its relative heading during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadingRule {
    /// Equilibrium heading of the given solution, re-evaluated along the step.
    Equilibrium(Which),
    /// Slide along the true-speed barrier from its secondary side.
    BarrierHold,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaderPlan {
    pub mu_cmd: f64,
    pub heading: HeadingRule,
    /// Speed and heading taken over from the point where the state reaches
    /// the true-speed barrier within this step.
    pub handoff: Option<(f64, HeadingRule)>,
}

impl EvaderPlan {
    pub fn new(mu_cmd: f64, heading: HeadingRule) -> Self {
        Self {
            mu_cmd,
            heading,
            handoff: None,
        }
    }
}

/// What an evader sees at a sample boundary.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub t: f64,
    pub dt: f64,
    pub state: RelState,
    /// Pursuer turn rate chosen for this step.
    pub pursuer_u: f64,
    pub geometries: &'a GeometrySet,
}

pub trait EvaderPolicy: Send {
    fn name(&self) -> &'static str;
    fn plan(&mut self, ctx: &StepContext<'_>) -> EvaderPlan;
    /// Time and place of the low-to-high speed switch, if it happened.
    fn switch_record(&self) -> Option<(f64, RelState)> {
        None
    }
}

/// Always moves at the true bound with the true equilibrium heading.
#[derive(Debug, Clone)]
pub struct TruthfulEvader {
    mu: f64,
}

impl TruthfulEvader {
    pub fn new(mu: f64) -> Self {
        Self { mu }
    }
}

impl EvaderPolicy for TruthfulEvader {
    fn name(&self) -> &'static str {
        "truthful"
    }
    fn plan(&mut self, _: &StepContext<'_>) -> EvaderPlan {
        EvaderPlan::new(self.mu, HeadingRule::Equilibrium(Which::Truth))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchTrigger {
    /// Switch where the slow path first reaches the true-speed barrier.
    Barrier,
    Time(f64),
}

/// Distance from the barrier within which a switched evader holds it.
const HOLD_DISTANCE: f64 = 1e-3;

/// Plays the slow solution at the slow speed, then switches once to the
/// true speed and the true solution.
///
/// With the barrier trigger, the step whose slow path would reach the
/// barrier carries a handoff, so the switch lands on the barrier itself
/// rather than on a step boundary.
#[derive(Debug, Clone)]
pub struct DeceptiveEvader {
    mu_high: f64,
    mu_low: f64,
    trigger: SwitchTrigger,
    switched: Option<(f64, RelState)>,
}

impl DeceptiveEvader {
    pub fn new(mu_high: f64, mu_low: f64, trigger: SwitchTrigger) -> Result<Self, StrategyError> {
        if mu_low > mu_high {
            return Err(StrategyError::SpeedOrder {
                low: mu_low,
                high: mu_high,
            });
        }
        Ok(Self {
            mu_high,
            mu_low,
            trigger,
            switched: None,
        })
    }

    pub fn is_switched(&self) -> bool {
        self.switched.is_some()
    }

    fn triggered(&self, ctx: &StepContext<'_>) -> bool {
        match self.trigger {
            SwitchTrigger::Time(t_bar) => ctx.t >= t_bar,
            SwitchTrigger::Barrier => {
                let low = &ctx.geometries.low;
                let psi = low.equilibrium(ctx.state).psi;
                let c = Controls::new(ctx.pursuer_u, psi, self.mu_low);
                let next = step(ctx.state, &c, ctx.dt);
                ctx.geometries
                    .truth
                    .barrier_reached(ctx.state, next)
                    .is_some()
            }
        }
    }
}

impl EvaderPolicy for DeceptiveEvader {
    fn name(&self) -> &'static str {
        match self.trigger {
            SwitchTrigger::Barrier => "deceptive",
            SwitchTrigger::Time(_) => "deceptive-timed",
        }
    }

    fn plan(&mut self, ctx: &StepContext<'_>) -> EvaderPlan {
        let truth = &ctx.geometries.truth;
        // While the pursuer still plays the slow solution next to the
        // barrier, hold the barrier rather than let the state cross it.
        let lagging = (ctx.pursuer_u - truth.equilibrium(ctx.state).u).abs() > 1e-9;
        let fast = if lagging
            && truth.near_barrier(ctx.state, HOLD_DISTANCE)
            && truth.barrier_side(ctx.state) <= 0
        {
            HeadingRule::BarrierHold
        } else {
            HeadingRule::Equilibrium(Which::Truth)
        };
        let slow = HeadingRule::Equilibrium(Which::Low);
        if self.mu_high == self.mu_low {
            return EvaderPlan::new(self.mu_high, HeadingRule::Equilibrium(Which::Truth));
        }
        if self.switched.is_some() {
            return EvaderPlan::new(self.mu_high, fast);
        }
        if !self.triggered(ctx) {
            return EvaderPlan::new(self.mu_low, slow);
        }
        self.switched = Some((ctx.t, ctx.state));
        match self.trigger {
            SwitchTrigger::Time(_) => {
                EvaderPlan::new(self.mu_high, HeadingRule::Equilibrium(Which::Truth))
            }
            SwitchTrigger::Barrier => {
                let on_arrival = if lagging {
                    HeadingRule::BarrierHold
                } else {
                    HeadingRule::Equilibrium(Which::Truth)
                };
                EvaderPlan {
                    mu_cmd: self.mu_low,
                    heading: slow,
                    handoff: Some((self.mu_high, on_arrival)),
                }
            }
        }
    }

    /// Step start at which the switch was decided; the exact point inside
    /// the step is reported by the simulation.
    fn switch_record(&self) -> Option<(f64, RelState)> {
        self.switched
    }
}

/// One decision of the deceptive policy: heading, commanded speed and
/// whether the switch has happened. A pending in-step handoff counts as
/// switched.
pub fn deceptive_policy(policy: &mut DeceptiveEvader, ctx: &StepContext<'_>) -> (f64, f64, bool) {
    let plan = policy.plan(ctx);
    let (mu, heading) = plan.handoff.unwrap_or((plan.mu_cmd, plan.heading));
    let psi = match heading {
        HeadingRule::Equilibrium(w) => ctx.geometries.get(w).equilibrium(ctx.state).psi,
        HeadingRule::BarrierHold => ctx.geometries.truth.barrier_hold_heading(ctx.state),
        HeadingRule::Fixed(p) => p,
    };
    (psi, mu, policy.is_switched())
}

type PursuerFactory =
    Arc<dyn Fn(&PolicySpec) -> Result<Box<dyn PursuerPolicy>, StrategyError> + Send + Sync>;
type EvaderFactory =
    Arc<dyn Fn(&PolicySpec) -> Result<Box<dyn EvaderPolicy>, StrategyError> + Send + Sync>;

/// Named constructors for pursuer and evader policies.
#[derive(Clone)]
pub struct PolicyRegistry {
    pursuers: BTreeMap<String, PursuerFactory>,
    evaders: BTreeMap<String, EvaderFactory>,
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        Self {
            pursuers: BTreeMap::new(),
            evaders: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register_pursuer("informed", |s| {
            Ok(Box::new(InformedPursuer::new(s.mu_high)))
        });
        r.register_pursuer("estimating", |_| Ok(Box::new(EstimatingPursuer::new())));
        r.register_evader("truthful", |s| Ok(Box::new(TruthfulEvader::new(s.mu_high))));
        r.register_evader("deceptive", |s| {
            Ok(Box::new(DeceptiveEvader::new(
                s.mu_high,
                s.mu_low,
                SwitchTrigger::Barrier,
            )?))
        });
        r.register_evader("deceptive-timed", |s| {
            let t = s
                .switch_time
                .ok_or_else(|| StrategyError::MissingSwitchTime("deceptive-timed".into()))?;
            Ok(Box::new(DeceptiveEvader::new(
                s.mu_high,
                s.mu_low,
                SwitchTrigger::Time(t),
            )?))
        });
        r
    }

    pub fn register_pursuer<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&PolicySpec) -> Result<Box<dyn PursuerPolicy>, StrategyError> + Send + Sync + 'static,
    {
        self.pursuers.insert(name.to_string(), Arc::new(f));
    }

    pub fn register_evader<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&PolicySpec) -> Result<Box<dyn EvaderPolicy>, StrategyError> + Send + Sync + 'static,
    {
        self.evaders.insert(name.to_string(), Arc::new(f));
    }

    pub fn pursuer_names(&self) -> Vec<&str> {
        self.pursuers.keys().map(String::as_str).collect()
    }

    pub fn evader_names(&self) -> Vec<&str> {
        self.evaders.keys().map(String::as_str).collect()
    }

    pub fn pursuer(
        &self,
        name: &str,
        spec: &PolicySpec,
    ) -> Result<Box<dyn PursuerPolicy>, StrategyError> {
        let f = self
            .pursuers
            .get(name)
            .ok_or_else(|| StrategyError::UnknownPolicy {
                role: "pursuer",
                name: name.to_string(),
                known: self.pursuer_names().join(", "),
            })?;
        f(spec)
    }

    pub fn evader(
        &self,
        name: &str,
        spec: &PolicySpec,
    ) -> Result<Box<dyn EvaderPolicy>, StrategyError> {
        let f = self
            .evaders
            .get(name)
            .ok_or_else(|| StrategyError::UnknownPolicy {
                role: "evader",
                name: name.to_string(),
                known: self.evader_names().join(", "),
            })?;
        f(spec)
    }
}
