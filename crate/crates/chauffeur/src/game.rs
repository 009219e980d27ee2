//! Game parameters, frames and the reduced relative dynamics.
//!
//! Headings are measured clockwise from the +Y axis, so a heading `θ` has
//! world direction `(sin θ, cos θ)`. The pursuer-fixed frame puts the pursuer
//! at the origin with +Y along its heading and +X to its right:
//!
//! ```text
//! x = (E - P) · (cos θ, -sin θ)
//! y = (E - P) · (sin θ,  cos θ)
//! ```
//!
//! A pursuer turn rate `u = +1` is a right (clockwise) turn about the
//! relative point `(1, 0)`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("speed ratio mu must lie in (0, 1), got {0}")]
    SpeedRatio(f64),
    #[error("capture radius l must be positive, got {0}")]
    CaptureRadius(f64),
    #[error("classical case requires mu^2 + l^2 < 1, got {0}")]
    NotClassical(f64),
}

/// Evader/pursuer speed ratio and capture radius, in pursuer turn-radius units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    mu: f64,
    l: f64,
}

impl GameParams {
    pub fn new(mu: f64, l: f64) -> Result<Self, ParamError> {
        validate_params(mu, l)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Polar angle of the boundary of the usable part, `acos(mu)`.
    pub fn bup_angle(&self) -> f64 {
        self.mu.acos()
    }

    /// Right-hand boundary point of the usable part.
    pub fn bup_point(&self) -> RelState {
        let phi = self.bup_angle();
        RelState::new(self.l * phi.sin(), self.l * phi.cos())
    }
}

pub fn validate_params(mu: f64, l: f64) -> Result<GameParams, ParamError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(ParamError::SpeedRatio(mu));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(ParamError::CaptureRadius(l));
    }
    let q = mu * mu + l * l;
    if q >= 1.0 {
        return Err(ParamError::NotClassical(q));
    }
    Ok(GameParams { mu, l })
}

/// `acos(mu)` for a validated parameter set.
pub fn bup_angle(p: &GameParams) -> f64 {
    p.bup_angle()
}

/// Evader position in the pursuer frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelState {
    pub x: f64,
    pub y: f64,
}

impl RelState {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, o: RelState) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: RelState) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn mirrored(self) -> Self {
        Self::new(-self.x, self.y)
    }

    pub fn lerp(self, o: RelState, t: f64) -> Self {
        Self::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Polar angle measured clockwise from +Y, in `(-π, π]`.
    pub fn polar_angle(self) -> f64 {
        self.x.atan2(self.y)
    }
}

impl Add for RelState {
    type Output = RelState;
    fn add(self, o: RelState) -> RelState {
        RelState::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for RelState {
    type Output = RelState;
    fn sub(self, o: RelState) -> RelState {
        RelState::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for RelState {
    type Output = RelState;
    fn mul(self, k: f64) -> RelState {
        RelState::new(self.x * k, self.y * k)
    }
}

/// Pursuer turn rate, evader relative heading and commanded evader speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub u: f64,
    pub psi: f64,
    pub mu_cmd: f64,
}

impl Controls {
    pub fn new(u: f64, psi: f64, mu_cmd: f64) -> Self {
        Self {
            u: u.clamp(-1.0, 1.0),
            psi: wrap_angle(psi),
            mu_cmd,
        }
    }
}

/// Planar pursuer pose; heading clockwise from +Y.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    /// Exact pose after holding turn rate `u` for time `h` at unit speed.
    pub fn advance(self, u: f64, h: f64) -> Pose {
        let th0 = self.heading;
        let th1 = th0 + u * h;
        let (dx, dy) = if u.abs() < 1e-12 {
            (h * th0.sin(), h * th0.cos())
        } else {
            ((th0.cos() - th1.cos()) / u, (th1.sin() - th0.sin()) / u)
        };
        Pose::new(self.x + dx, self.y + dy, th1)
    }
}

/// Pursuer pose plus evader world position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalState {
    pub pursuer: Pose,
    pub evader: (f64, f64),
}

/// Wraps an angle into `[-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI && a > 0.0 {
        PI
    } else {
        w
    }
}

pub fn to_relative(g: &GlobalState) -> RelState {
    let (s, c) = g.pursuer.heading.sin_cos();
    let dx = g.evader.0 - g.pursuer.x;
    let dy = g.evader.1 - g.pursuer.y;
    RelState::new(dx * c - dy * s, dx * s + dy * c)
}

pub fn to_global(s: RelState, pose: &Pose) -> (f64, f64) {
    let (sn, c) = pose.heading.sin_cos();
    (pose.x + s.x * c + s.y * sn, pose.y - s.x * sn + s.y * c)
}

/// `(ẋ, ẏ) = (−y u + μ sin ψ, x u − 1 + μ cos ψ)` with `μ = c.mu_cmd`.
pub fn rel_dynamics(s: RelState, c: &Controls) -> RelState {
    rel_velocity(s, c.u, c.psi, c.mu_cmd)
}

#[inline]
pub fn rel_velocity(s: RelState, u: f64, psi: f64, mu: f64) -> RelState {
    let (sp, cp) = psi.sin_cos();
    RelState::new(-s.y * u + mu * sp, s.x * u - 1.0 + mu * cp)
}

/// Relative heading that points the evader straight at the pursuer.
pub fn pure_pursuit_heading(s: RelState) -> f64 {
    (-s.x).atan2(-s.y)
}
