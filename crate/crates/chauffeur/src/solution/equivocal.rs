use std::f64::consts::PI;

use crate::game::{pure_pursuit_heading, rel_velocity, GameParams, RelState};
use crate::ode::{bisect_first, rk4};

use super::barrier::check_step;
use super::spatial::{PolygonIndex, SegmentIndex};
use super::tributary::tributary_value_raw;
use super::{
    Characteristic, CharacteristicField, CurveKind, Family, SampledCurve, SolutionError,
    TerminalLabel,
};

/// Equivocal curve with the pursuer control that holds the state on it.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivocalCurve {
    pub curve: SampledCurve,
    pub controls: Vec<f64>,
}

impl EquivocalCurve {
    /// Contact point with the negative y-axis.
    pub fn axis_contact(&self) -> RelState {
        self.curve.last()
    }

    /// Value at the axis contact.
    pub fn axis_value(&self) -> f64 {
        *self.curve.tau.last().expect("non-empty curve")
    }
}

/// Sampling of the secondary fan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryGrid {
    pub d_tau: f64,
    /// Every `e_stride`-th equivocal sample launches a characteristic.
    pub e_stride: usize,
    /// Number of launch points on the negative universal line.
    pub n_u_minus: usize,
    /// Longest retrograde time per characteristic.
    pub tau_cap: f64,
}

impl Default for SecondaryGrid {
    fn default() -> Self {
        Self {
            d_tau: 1e-3,
            e_stride: 10,
            n_u_minus: 160,
            tau_cap: 30.0,
        }
    }
}

fn stay_step(mu: f64, e: RelState, u: f64, h: f64) -> RelState {
    rk4(
        |_, s| rel_velocity(s, u, pure_pursuit_heading(s), mu) * -1.0,
        0.0,
        e,
        h,
    )
}

/// Traces the equivocal curve backwards from the barrier endpoint.
///
/// The evader holds pure pursuit; at each step the pursuer control is found
/// by bisection so that the time-to-go gained along the curve equals the
/// tributary value gained, i.e. staying on the curve and departing along a
/// tributary path cost the same. Tracing ends on the negative y-axis.
pub fn trace_equivocal(
    p: &GameParams,
    start: RelState,
    d_tau: f64,
) -> Result<EquivocalCurve, SolutionError> {
    check_step(d_tau)?;
    let (mu, l) = (p.mu(), p.l());
    let value = |s: RelState| tributary_value_raw(mu, l, s);
    let v0 = value(start);
    if !v0.is_finite() {
        return Err(SolutionError::EquivocalSearch {
            tau: 0.0,
            x: start.x,
            y: start.y,
            res_lo: f64::NAN,
            res_hi: f64::NAN,
        });
    }
    let mut points = vec![start];
    let mut tau = vec![v0];
    let mut controls = Vec::new();
    let mut e = start;
    let mut ve = v0;
    let max_steps = (200.0 / d_tau) as usize;
    for _ in 0..max_steps {
        let h = d_tau;
        let residual = |u: f64| value(stay_step(mu, e, u, h)) - ve - h;
        let (r_lo, r_hi) = (residual(-1.0), residual(1.0));
        if !(r_lo * r_hi <= 0.0) {
            return Err(SolutionError::EquivocalSearch {
                tau: ve,
                x: e.x,
                y: e.y,
                res_lo: r_lo,
                res_hi: r_hi,
            });
        }
        let (mut lo, mut hi) = (-1.0, 1.0);
        let lo_negative = r_lo < 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            let r = residual(mid);
            if r == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (r < 0.0) == lo_negative {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        controls.push(u);
        let next = stay_step(mu, e, u, h);
        if next.x <= 0.0 {
            let hx = bisect_first(h, 80, |hh| stay_step(mu, e, u, hh).x <= 0.0);
            let end = RelState::new(0.0, stay_step(mu, e, u, hx).y);
            if end.y >= -l {
                return Err(SolutionError::Grid(format!(
                    "equivocal curve meets the axis at y={:.6}, inside the capture circle",
                    end.y
                )));
            }
            points.push(end);
            tau.push(ve + hx);
            controls.push(u);
            return Ok(EquivocalCurve {
                curve: SampledCurve {
                    kind: CurveKind::Equivocal,
                    points,
                    tau,
                },
                controls,
            });
        }
        let vn = value(next);
        if !vn.is_finite() {
            return Err(SolutionError::EquivocalSearch {
                tau: ve,
                x: next.x,
                y: next.y,
                res_lo: r_lo,
                res_hi: r_hi,
            });
        }
        e = next;
        ve = vn;
        points.push(e);
        tau.push(ve);
    }
    Err(SolutionError::Grid(
        "equivocal curve did not reach the y-axis".into(),
    ))
}

/// Boundary of the secondary region for `x ≥ 0`: barrier, equivocal curve,
/// the negative axis up to the capture circle, then the circle back to the
/// barrier's start.
pub(crate) fn secondary_polygon(
    p: &GameParams,
    barrier: &SampledCurve,
    eq: &EquivocalCurve,
) -> Vec<RelState> {
    let mut verts = barrier.points.clone();
    verts.extend_from_slice(&eq.curve.points[1..]);
    let phi_bar = p.bup_angle();
    let n_arc = 400;
    for k in 0..n_arc {
        let phi = PI - (PI - phi_bar) * k as f64 / n_arc as f64;
        verts.push(RelState::new(p.l() * phi.sin(), p.l() * phi.cos()));
    }
    verts
}

/// Builds the equivocal curve from the barrier endpoint and the secondary
/// characteristics that feed it and the negative universal line.
pub fn compute_secondary_fan_and_equivocal(
    p: &GameParams,
    barrier: &SampledCurve,
    grid: &SecondaryGrid,
) -> Result<(CharacteristicField, EquivocalCurve), SolutionError> {
    check_step(grid.d_tau)?;
    if grid.e_stride == 0 || grid.n_u_minus < 2 {
        return Err(SolutionError::Grid(
            "secondary grid needs e_stride >= 1 and n_u_minus >= 2".into(),
        ));
    }
    let eq = trace_equivocal(p, barrier.last(), grid.d_tau)?;
    let poly = PolygonIndex::new(secondary_polygon(p, barrier, &eq));
    let (mu, l) = (p.mu(), p.l());
    let y_bar = eq.axis_contact().y;
    let v_axis = eq.axis_value();

    let mut launches: Vec<(RelState, f64, f64, TerminalLabel)> = Vec::new();
    let n_e = eq.curve.len();
    let mut idx: Vec<usize> = (0..n_e).step_by(grid.e_stride).collect();
    if *idx.last().unwrap() != n_e - 1 {
        idx.push(n_e - 1);
    }
    for k in idx {
        let j = eq.curve.points[k];
        launches.push((
            j,
            pure_pursuit_heading(j),
            eq.curve.tau[k],
            TerminalLabel::Equivocal,
        ));
    }
    for k in 1..grid.n_u_minus {
        let y0 = y_bar + (-l - y_bar) * k as f64 / grid.n_u_minus as f64;
        let v0 = v_axis + (y0 - y_bar) / (1.0 - mu);
        launches.push((
            RelState::new(0.0, y0),
            0.0,
            v0,
            TerminalLabel::NegativeUniversal,
        ));
    }

    const OVERSHOOT: f64 = 0.02;
    const MAX_OVERSHOOT_STEPS: usize = 200;
    let barrier_index = SegmentIndex::new(barrier.points.clone(), 0.05);
    let h = grid.d_tau;
    let steps = (grid.tau_cap / h).ceil() as usize;
    let trajectories = launches
        .into_iter()
        .map(|(j, psi0, value0, terminal)| {
            let f = move |tau: f64, s: RelState| rel_velocity(s, -1.0, psi0 - tau, mu) * -1.0;
            let mut s = j;
            let mut points = vec![s];
            let mut outside = 0;
            for k in 0..steps {
                let next = rk4(f, k as f64 * h, s, h);
                if next.norm() < l {
                    break;
                }
                // Run a little past the barrier so the quads between
                // neighbours reach it.
                if !poly.contains(next) {
                    outside += 1;
                    let far = barrier_index.nearest(next).distance > OVERSHOOT;
                    if outside > MAX_OVERSHOOT_STEPS || far {
                        break;
                    }
                }
                s = next;
                points.push(s);
            }
            Characteristic {
                points,
                psi0,
                value0,
                terminal,
                anchor: (terminal == TerminalLabel::Equivocal).then_some(j),
            }
        })
        .collect();
    Ok((
        CharacteristicField {
            family: Family::Secondary,
            d_tau: h,
            trajectories,
        },
        eq,
    ))
}
