//! Fixed-step closed-loop play with event detection.
//!
//! Each step runs: estimator update, pursuer feedback for its current
//! estimate, evader policy, then an RK4 step. Within a step the controls are
//! re-evaluated only where the state crosses into a region with a different
//! control law; that crossing is located by bisection on the sub-step length
//! so the integrator never straddles a discontinuity.

use thiserror::Error;

use crate::game::{rel_velocity, to_global, Controls, GameParams, Pose, RelState};
use crate::ode::{bisect_first, rk4};
use crate::solution::{Geometry, Region, RegionTag};
use crate::strategy::{
    EvaderPolicy, GeometrySet, HeadingRule, PolicyRegistry, PolicySpec, PursuerPolicy, StepContext,
    StrategyError, Which,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// One closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params_truth: GameParams,
    pub params_low: GameParams,
    pub initial_rel: RelState,
    pub pursuer: String,
    pub evader: String,
    pub switch_time: Option<f64>,
    pub dt: f64,
    pub t_max: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::Scenario(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(SimError::Scenario(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.params_truth.l() != self.params_low.l() {
            return Err(SimError::Scenario(
                "both parameter sets must share l".into(),
            ));
        }
        if self.params_low.mu() > self.params_truth.mu() {
            return Err(SimError::Scenario("mu2 must not exceed mu1".into()));
        }
        if !self.initial_rel.is_finite() || self.initial_rel.norm() <= self.params_truth.l() {
            return Err(SimError::Scenario(
                "initial point must lie outside the capture circle".into(),
            ));
        }
        Ok(())
    }

    pub fn policy_spec(&self) -> PolicySpec {
        PolicySpec {
            mu_high: self.params_truth.mu(),
            mu_low: self.params_low.mu(),
            switch_time: self.switch_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: RelState,
    pub controls: Controls,
    pub mu_hat: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Capture,
    BarrierCross,
    Switch,
    AxisCross,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Capture => "capture",
            EventKind::BarrierCross => "barrier_cross",
            EventKind::Switch => "switch",
            EventKind::AxisCross => "axis_cross",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub location: RelState,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub capture_time: Option<f64>,
    pub capture_point: Option<RelState>,
    pub switch_point: Option<RelState>,
    /// Pursuer pose at the last sample.
    pub final_pose: Pose,
    /// State at capture or at `t_max`.
    pub final_state: RelState,
    pub steps: usize,
}

impl Trajectory {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Recording options for [`run_closed_loop_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Keep every sample; events are always kept.
    pub record_samples: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_samples: true,
        }
    }
}

/// One RK4 step with the controls held for `dt`.
///
/// Holding is done in the world frame: the evader keeps its world heading,
/// so the relative heading drifts as `psi - u t` while the pursuer turns.
/// In the tributary, primary and secondary regions this is exactly the
/// equilibrium heading along the step.
pub fn step(s: RelState, c: &Controls, dt: f64) -> RelState {
    rk4(
        |t, p| rel_velocity(p, c.u, c.psi - c.u * t, c.mu_cmd),
        0.0,
        s,
        dt,
    )
}

/// Events between two consecutive samples, located by linear interpolation.
pub fn detect_events(
    prev: (f64, RelState),
    next: (f64, RelState),
    l: f64,
    barrier: &Geometry,
) -> Vec<Event> {
    let (t0, a) = prev;
    let (t1, b) = next;
    let mut out = Vec::new();
    let at = |f: f64| (t0 + (t1 - t0) * f, a.lerp(b, f));
    if a.x * b.x < 0.0 {
        let f = a.x / (a.x - b.x);
        let (t, p) = at(f);
        out.push(Event {
            t,
            kind: EventKind::AxisCross,
            location: RelState::new(0.0, p.y),
        });
    }
    if let Some(f) = barrier.barrier_reached(a, b) {
        let (t, p) = at(f);
        out.push(Event {
            t,
            kind: EventKind::BarrierCross,
            location: p,
        });
    }
    let (ra, rb) = (a.norm(), b.norm());
    if ra > l && rb <= l {
        let f = (ra - l) / (ra - rb);
        let (t, p) = at(f);
        out.push(Event {
            t,
            kind: EventKind::Capture,
            location: p,
        });
    }
    out.sort_by(|x, y| x.t.total_cmp(&y.t));
    out
}

pub fn run_closed_loop(sc: &Scenario, geoms: &GeometrySet) -> Result<Trajectory, SimError> {
    run_closed_loop_with(
        sc,
        geoms,
        &PolicyRegistry::with_builtins(),
        RunOptions::default(),
    )
}

/// Law key used to detect control discontinuities inside a step; capture is
/// never a law change because the run ends there.
fn law_key(g: &Geometry, s: RelState) -> Option<Region> {
    let r = g.classify(s);
    (r.tag != RegionTag::Captured).then_some(r)
}

struct Players<'a> {
    geoms: &'a GeometrySet,
    pursuer: Which,
    heading: HeadingRule,
    mu_cmd: f64,
    handoff: Option<(f64, HeadingRule)>,
}

/// Result of one integrator step.
struct Advance {
    end: RelState,
    pose: Pose,
    /// Sub-step boundaries as (time offset, state), ending with `(dt, end)`.
    nodes: Vec<(f64, RelState)>,
    /// Where the evader's handoff took effect.
    handoff_at: Option<(f64, RelState)>,
}

type LawKey = (Option<Region>, Option<Region>, i8);

impl Players<'_> {
    fn controls(&self, s: RelState) -> Controls {
        let u = self.geoms.get(self.pursuer).equilibrium(s).u;
        let psi = match self.heading {
            HeadingRule::Equilibrium(w) => {
                let g = self.geoms.get(w);
                let e = g.equilibrium(s);
                if e.region.tag == RegionTag::Equivocal {
                    g.departing_heading(s)
                } else {
                    e.psi
                }
            }
            HeadingRule::BarrierHold => self.geoms.truth.barrier_hold_heading(s),
            HeadingRule::Fixed(p) => p,
        };
        Controls::new(u, psi, self.mu_cmd)
    }

    /// Barrier side, tracked only while a handoff is pending.
    fn side(&self, s: RelState) -> i8 {
        if self.handoff.is_some() {
            self.geoms.truth.barrier_side(s)
        } else {
            0
        }
    }

    fn key(&self, s: RelState) -> LawKey {
        let p = law_key(self.geoms.get(self.pursuer), s);
        let e = match self.heading {
            HeadingRule::Equilibrium(w) if w != self.pursuer => law_key(self.geoms.get(w), s),
            _ => p,
        };
        (p, e, self.side(s))
    }

    fn same_law(&self, a: LawKey, b: LawKey) -> bool {
        let eq = |x: Option<Region>, y: Option<Region>| x.is_none() || y.is_none() || x == y;
        eq(a.0, b.0) && eq(a.1, b.1) && a.2 == b.2
    }

    fn take_handoff(&mut self) {
        if let Some((mu, heading)) = self.handoff.take() {
            self.mu_cmd = mu;
            self.heading = heading;
        }
    }

    /// Integrates over `dt`, splitting where the control law changes.
    fn advance(mut self, s: RelState, pose: Pose, dt: f64) -> Advance {
        const MAX_SPLITS: usize = 8;
        let mut cur = s;
        let mut pose = pose;
        let mut done = 0.0;
        let mut nodes = Vec::new();
        let mut handoff_at = None;
        let start_side = self.side(cur);
        if self.handoff.is_some() && start_side == 0 {
            self.take_handoff();
            handoff_at = Some((0.0, cur));
        }
        let mut c = self.controls(cur);
        for split in 0..=MAX_SPLITS {
            let rem = dt - done;
            let end = step(cur, &c, rem);
            let k0 = self.key(cur);
            let h = if split == MAX_SPLITS || self.same_law(k0, self.key(end)) {
                rem
            } else {
                bisect_first(rem, 64, |h| !self.same_law(k0, self.key(step(cur, &c, h))))
            };
            if h >= rem {
                nodes.push((dt, end));
                return Advance {
                    end,
                    pose: pose.advance(c.u, rem),
                    nodes,
                    handoff_at,
                };
            }
            cur = step(cur, &c, h);
            pose = pose.advance(c.u, h);
            done += h;
            nodes.push((done, cur));
            if self.handoff.is_some() && self.side(cur) != start_side {
                self.take_handoff();
                handoff_at = Some((done, cur));
            }
            c = self.controls(cur);
        }
        unreachable!("loop returns on its last iteration")
    }
}

pub fn run_closed_loop_with(
    sc: &Scenario,
    geoms: &GeometrySet,
    registry: &PolicyRegistry,
    opts: RunOptions,
) -> Result<Trajectory, SimError> {
    sc.validate()?;
    let spec = sc.policy_spec();
    let mut pursuer: Box<dyn PursuerPolicy> = registry.pursuer(&sc.pursuer, &spec)?;
    let mut evader: Box<dyn EvaderPolicy> = registry.evader(&sc.evader, &spec)?;
    let l = sc.params_truth.l();
    let dt = sc.dt;
    let n_max = (sc.t_max / dt).ceil() as usize;

    let mut traj = Trajectory::default();
    let mut s = sc.initial_rel;
    let mut pose = Pose::default();
    let mut evader_world = to_global(s, &pose);
    let mut switch_seen = false;

    for k in 0..n_max {
        let t = k as f64 * dt;
        let prev_world = evader_world;
        // The first decision needs a provisional pursuer control; the
        // estimator's first observation is the evader's opening speed.
        let which = if k == 0 {
            let probe = StepContext {
                t,
                dt,
                state: s,
                pursuer_u: geoms.truth.equilibrium(s).u,
                geometries: geoms,
            };
            let mut scratch = registry.evader(&sc.evader, &spec)?;
            let opening = scratch.plan(&probe).mu_cmd;
            pursuer.start(opening)?;
            geoms.nearest(pursuer.mu_hat())
        } else {
            geoms.nearest(pursuer.mu_hat())
        };
        let peq = geoms.get(which).equilibrium(s);
        let ctx = StepContext {
            t,
            dt,
            state: s,
            pursuer_u: peq.u,
            geometries: geoms,
        };
        let plan = evader.plan(&ctx);
        let players = Players {
            geoms,
            pursuer: which,
            heading: plan.heading,
            mu_cmd: plan.mu_cmd,
            handoff: plan.handoff,
        };
        let c = players.controls(s);
        if opts.record_samples {
            traj.samples.push(Sample {
                t,
                state: s,
                controls: c,
                mu_hat: pursuer.mu_hat(),
                region: peq.region,
            });
        }
        let planned_handoff = plan.handoff.is_some();
        let adv = players.advance(s, pose, dt);
        let mut events = Vec::new();
        if !switch_seen {
            let at = match (adv.handoff_at, evader.switch_record()) {
                (Some((h, p)), _) => Some((t + h, p)),
                // A handoff that never met the barrier takes effect next step.
                (None, Some(_)) if planned_handoff => Some(((k + 1) as f64 * dt, adv.end)),
                (None, rec) => rec,
            };
            if let Some((ts, ps)) = at {
                switch_seen = true;
                traj.switch_point = Some(ps);
                events.push(Event {
                    t: ts,
                    kind: EventKind::Switch,
                    location: ps,
                });
            }
        }
        let mut prev = (t, s);
        for &(h, p) in &adv.nodes {
            let node = (t + h, p);
            events.extend(detect_events(prev, node, l, &geoms.truth));
            prev = node;
        }
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        let next = adv.end;
        let next_pose = adv.pose;
        let captured = events
            .iter()
            .find(|e| e.kind == EventKind::Capture)
            .copied();
        traj.events.extend(events);
        traj.steps = k + 1;
        pose = next_pose;
        s = next;
        evader_world = to_global(s, &pose);
        if let Some(cap) = captured {
            traj.capture_time = Some(cap.t);
            traj.capture_point = Some(cap.location);
            // Keep the capture event last.
            traj.events.retain(|e| e.t <= cap.t);
            if let Some(pos) = traj
                .events
                .iter()
                .position(|e| e.kind == EventKind::Capture)
            {
                let e = traj.events.remove(pos);
                traj.events.push(e);
            }
            break;
        }
        let dx = evader_world.0 - prev_world.0;
        let dy = evader_world.1 - prev_world.1;
        pursuer.observe((dx.hypot(dy) / dt).min(1.0 - 1e-12))?;
    }
    traj.final_pose = pose;
    traj.final_state = s;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_drive_reduces_y_by_dt() {
        let c = Controls::new(0.0, 0.0, 0.0);
        let s = step(RelState::new(0.3, 2.0), &c, 1e-3);
        assert_eq!(s.x, 0.3);
        assert!((s.y - (2.0 - 1e-3)).abs() < 1e-15);
    }

    #[test]
    fn capture_interpolation() {
        let p = GameParams::new(0.3, 0.5).unwrap();
        let g = Geometry::build(&p).unwrap();
        let ev = detect_events(
            (0.0, RelState::new(0.0, 0.5004)),
            (1e-3, RelState::new(0.0, 0.4994)),
            0.5,
            &g,
        );
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, EventKind::Capture);
        assert!((ev[0].location.norm() - 0.5).abs() < 1e-6);
        assert!((ev[0].t - 4e-4).abs() < 1e-12);
        let none = detect_events(
            (0.0, RelState::new(3.0, 3.0)),
            (1e-3, RelState::new(3.0, 2.999)),
            0.5,
            &g,
        );
        assert!(none.is_empty());
    }
}
