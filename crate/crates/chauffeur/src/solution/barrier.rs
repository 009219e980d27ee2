use crate::game::{rel_velocity, GameParams, RelState};
use crate::ode::{bisect_first, rk4};

use super::{
    Characteristic, CharacteristicField, CurveKind, Family, SampledCurve, SolutionError,
    TerminalLabel,
};

pub(crate) fn check_step(d_tau: f64) -> Result<(), SolutionError> {
    if d_tau > 0.0 && d_tau < 0.01 {
        Ok(())
    } else {
        Err(SolutionError::StepSize(d_tau))
    }
}

/// Retrograde field of a primary characteristic: `u = 1`, `ψ = φ + τ`.
fn primary_retro(mu: f64, phi: f64) -> impl Fn(f64, RelState) -> RelState {
    move |tau, s| rel_velocity(s, 1.0, phi + tau, mu) * -1.0
}

/// Barrier traced retrograde from the boundary of the usable part.
///
/// Integration stops at `tau_max` or where the curve's distance from the
/// pursuer stops growing. At that point the evader's barrier heading is pure
/// pursuit of the pursuer and the curve bends back toward the capture circle.
pub fn compute_barrier(
    p: &GameParams,
    d_tau: f64,
    tau_max: f64,
) -> Result<SampledCurve, SolutionError> {
    check_step(d_tau)?;
    if !(tau_max > 0.0) {
        return Err(SolutionError::Grid(format!(
            "tau_max must be positive, got {tau_max}"
        )));
    }
    let phi = p.bup_angle();
    let f = primary_retro(p.mu(), phi);
    let radial = |tau: f64, s: RelState| s.dot(f(tau, s));

    let mut points = vec![p.bup_point()];
    let mut tau = vec![0.0];
    let mut s = points[0];
    let mut t = 0.0;
    let mut grew = false;
    while t < tau_max {
        let h = d_tau.min(tau_max - t);
        let next = rk4(&f, t, s, h);
        let g = radial(t + h, next);
        if grew && g <= 0.0 {
            let hs = bisect_first(h, 80, |hh| radial(t + hh, rk4(&f, t, s, hh)) <= 0.0);
            if hs > 1e-12 * d_tau {
                points.push(rk4(&f, t, s, hs));
                tau.push(t + hs);
            }
            break;
        }
        grew |= g > 0.0;
        s = next;
        t += h;
        points.push(s);
        tau.push(t);
    }
    Ok(SampledCurve {
        kind: CurveKind::Barrier,
        points,
        tau,
    })
}

/// Primary characteristics from `φ ∈ [0, acos μ]` on the usable part.
///
/// All of them meet at `τ = l/μ`, which closes the primary region; the time
/// grid is stretched slightly so that instant is sampled exactly.
pub fn compute_primary_fan(
    p: &GameParams,
    n_phi: usize,
    d_tau: f64,
) -> Result<CharacteristicField, SolutionError> {
    check_step(d_tau)?;
    if n_phi < 2 {
        return Err(SolutionError::Grid(format!(
            "n_phi must be at least 2, got {n_phi}"
        )));
    }
    let (mu, l) = (p.mu(), p.l());
    let tau_end = l / mu;
    let steps = (tau_end / d_tau).ceil() as usize;
    let h = tau_end / steps as f64;
    let phi_bar = p.bup_angle();
    let trajectories = (0..n_phi)
        .map(|i| {
            let phi = phi_bar * i as f64 / (n_phi - 1) as f64;
            let f = primary_retro(mu, phi);
            let mut s = RelState::new(l * phi.sin(), l * phi.cos());
            let mut points = Vec::with_capacity(steps + 1);
            points.push(s);
            for k in 0..steps {
                s = rk4(&f, k as f64 * h, s, h);
                points.push(s);
            }
            Characteristic {
                points,
                psi0: phi,
                value0: 0.0,
                terminal: TerminalLabel::UsablePart,
                anchor: None,
            }
        })
        .collect();
    Ok(CharacteristicField {
        family: Family::Primary,
        d_tau: h,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_step() {
        let p = GameParams::new(0.3, 0.5).unwrap();
        assert!(matches!(
            compute_barrier(&p, 0.01, 1.0),
            Err(SolutionError::StepSize(_))
        ));
        assert!(matches!(
            compute_barrier(&p, 0.0, 1.0),
            Err(SolutionError::StepSize(_))
        ));
    }

    #[test]
    fn starts_at_bup_and_tau_increases() {
        let p = GameParams::new(0.3, 0.5).unwrap();
        let b = compute_barrier(&p, 1e-3, 100.0).unwrap();
        assert_eq!(b.first(), p.bup_point());
        assert!(b.tau.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn primary_fan_rejects_single_ray() {
        let p = GameParams::new(0.3, 0.5).unwrap();
        assert!(compute_primary_fan(&p, 1, 1e-3).is_err());
    }
}
