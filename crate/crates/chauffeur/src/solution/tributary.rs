use std::f64::consts::PI;

use thiserror::Error;

use crate::game::{rel_velocity, to_relative, GameParams, GlobalState, Pose, RelState};
use crate::ode::rk4;

use super::barrier::check_step;
use super::{Characteristic, CharacteristicField, Family, SolutionError, TerminalLabel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TributaryError {
    #[error(
        "target lies inside the pursuer's right turning circle (distance {0:.9} from its centre)"
    )]
    InsideTurnCircle(f64),
    #[error("capture would occur during the turn (separation {separation:.9} below l={l})")]
    CaptureDuringTurn { separation: f64, l: f64 },
}

/// Duration of the right-turn arc after which the pursuer's heading ray
/// passes through the relative point `s` (pursuer at the origin, facing +Y).
pub fn cs_turn_time_rel(s: RelState) -> Result<f64, TributaryError> {
    let q = RelState::new(s.x - 1.0, s.y);
    let r = q.norm();
    if r < 1.0 {
        return Err(TributaryError::InsideTurnCircle(r));
    }
    let beta = q.y.atan2(q.x);
    let gamma = (1.0 / r).min(1.0).acos();
    let t = (PI - beta - gamma).rem_euclid(2.0 * PI);
    Ok(if t > 2.0 * PI - 1e-12 { 0.0 } else { t })
}

/// C-segment duration of the right-turning CS path from `pose` to `target`.
pub fn dubins_cs_turn_time(pose: &Pose, target: (f64, f64)) -> Result<f64, TributaryError> {
    let s = to_relative(&GlobalState {
        pursuer: *pose,
        evader: target,
    });
    cs_turn_time_rel(s)
}

/// Equilibrium capture time from a tributary point.
///
/// The pursuer turns for `t_UL`, then chases along the aligned line; the
/// separation at alignment is the straight-segment length plus the evader's
/// run `μ t_UL`, and the chase closes it down to `l` at rate `1 − μ`.
pub fn tributary_value(p: &GameParams, s: RelState) -> Result<f64, TributaryError> {
    let s = RelState::new(s.x.abs(), s.y);
    let t = cs_turn_time_rel(s)?;
    let d = straight_length(s);
    let separation = d + p.mu() * t;
    if separation < p.l() {
        return Err(TributaryError::CaptureDuringTurn {
            separation,
            l: p.l(),
        });
    }
    Ok((t + d - p.l()) / (1.0 - p.mu()))
}

fn straight_length(s: RelState) -> f64 {
    let q = RelState::new(s.x - 1.0, s.y);
    (q.norm_sq() - 1.0).max(0.0).sqrt()
}

/// Value without region checks, for `x ≥ 0`; NaN inside the turning circle.
pub(crate) fn tributary_value_raw(mu: f64, l: f64, s: RelState) -> f64 {
    match cs_turn_time_rel(s) {
        Ok(t) => (t + straight_length(s) - l) / (1.0 - mu),
        Err(_) => f64::NAN,
    }
}

/// Gradient of the tributary value for `x ≥ 0`, outside the turning circle.
pub fn tributary_gradient(mu: f64, s: RelState) -> RelState {
    let q = RelState::new(s.x - 1.0, s.y);
    let r2 = q.norm_sq();
    let r = r2.sqrt();
    let d = (r2 - 1.0).max(1e-300).sqrt();
    let grad_beta = RelState::new(-q.y, q.x) * (1.0 / r2);
    let grad_gamma = q * (1.0 / (r * d));
    let grad_d = q * (1.0 / d);
    (grad_d - grad_beta - grad_gamma) * (1.0 / (1.0 - mu))
}

/// Tributary characteristics traced back from points `(0, y0)` on the
/// positive universal line, `y0` evenly spaced in `(l, y_max]`.
pub fn compute_tributary_fan(
    p: &GameParams,
    n: usize,
    y_max: f64,
    d_tau: f64,
    tau_max: f64,
) -> Result<CharacteristicField, SolutionError> {
    check_step(d_tau)?;
    if n < 2 || !(y_max > p.l()) {
        return Err(SolutionError::Grid(format!(
            "tributary fan needs n >= 2 and y_max > l, got n={n}, y_max={y_max}"
        )));
    }
    let (mu, l) = (p.mu(), p.l());
    let steps = (tau_max / d_tau).ceil() as usize;
    let trajectories = (1..=n)
        .map(|i| {
            let y0 = l + (y_max - l) * i as f64 / n as f64;
            let f = move |tau: f64, s: RelState| rel_velocity(s, 1.0, tau, mu) * -1.0;
            let mut s = RelState::new(0.0, y0);
            let mut points = vec![s];
            for k in 0..steps {
                s = rk4(f, k as f64 * d_tau, s, d_tau);
                points.push(s);
            }
            Characteristic {
                points,
                psi0: 0.0,
                value0: (y0 - l) / (1.0 - mu),
                terminal: TerminalLabel::PositiveUniversal,
                anchor: Some(RelState::new(0.0, y0)),
            }
        })
        .collect();
    Ok(CharacteristicField {
        family: Family::Tributary,
        d_tau,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dead_ahead_needs_no_turn() {
        assert_eq!(cs_turn_time_rel(RelState::new(0.0, 5.0)).unwrap(), 0.0);
    }

    #[test]
    fn point_abeam_right() {
        let t = cs_turn_time_rel(RelState::new(3.0, 0.0)).unwrap();
        assert!((t - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn inside_circle_is_reported() {
        assert!(matches!(
            cs_turn_time_rel(RelState::new(1.2, 0.1)),
            Err(TributaryError::InsideTurnCircle(_))
        ));
    }

    #[test]
    fn tail_chase_value() {
        let p = GameParams::new(0.5, 0.5).unwrap();
        let v = tributary_value(&p, RelState::new(0.0, 2.0)).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }
}
