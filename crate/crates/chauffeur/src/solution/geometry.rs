use crate::game::{pure_pursuit_heading, wrap_angle, GameParams, RelState};

use super::equivocal::secondary_polygon;
use super::spatial::{FanHit, FanIndex, PolygonIndex, SegmentIndex};
use super::tributary::{cs_turn_time_rel, tributary_value_raw};
use super::{
    compute_barrier, compute_primary_fan, compute_secondary_fan_and_equivocal, CharacteristicField,
    EquivocalCurve, Region, RegionTag, SampledCurve, SecondaryGrid, SolutionError,
};

/// Sampling and tolerance knobs for [`Geometry::build_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub d_tau: f64,
    pub n_phi: usize,
    pub secondary: SecondaryGrid,
    /// Dead-band for on-curve and on-axis tests.
    pub band: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            d_tau: 1e-3,
            n_phi: 200,
            secondary: SecondaryGrid::default(),
            band: 1e-6,
        }
    }
}

/// Equilibrium controls and value at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub region: Region,
    pub u: f64,
    pub psi: f64,
    pub value: f64,
    /// False when a fan lookup had to extrapolate across a sampling gap.
    pub exact: bool,
}

/// Full solution for one parameter set. Immutable once built.
#[derive(Debug, Clone)]
pub struct Geometry {
    params: GameParams,
    config: GeometryConfig,
    pub barrier: SampledCurve,
    pub primary: CharacteristicField,
    pub equivocal: EquivocalCurve,
    pub secondary: CharacteristicField,
    lens: PolygonIndex,
    secondary_region: PolygonIndex,
    barrier_index: SegmentIndex,
    equivocal_index: SegmentIndex,
    primary_index: FanIndex,
    secondary_index: FanIndex,
}

impl Geometry {
    pub fn build(p: &GameParams) -> Result<Self, SolutionError> {
        Self::build_with(p, &GeometryConfig::default())
    }

    pub fn build_with(p: &GameParams, cfg: &GeometryConfig) -> Result<Self, SolutionError> {
        let barrier = compute_barrier(p, cfg.d_tau, 1e3)?;
        let primary = compute_primary_fan(p, cfg.n_phi, cfg.d_tau)?;
        let grid = SecondaryGrid {
            d_tau: cfg.d_tau,
            ..cfg.secondary
        };
        let (secondary, equivocal) = compute_secondary_fan_and_equivocal(p, &barrier, &grid)?;

        let first = &primary.trajectories[0].points;
        let last = &primary.trajectories[primary.trajectories.len() - 1].points;
        let mut lens_verts: Vec<RelState> = first.clone();
        lens_verts.extend(last.iter().rev().skip(1));
        lens_verts.extend(
            primary.trajectories[1..primary.trajectories.len() - 1]
                .iter()
                .rev()
                .map(|c| c.points[0]),
        );
        let lens = PolygonIndex::new(lens_verts);
        let secondary_region = PolygonIndex::new(secondary_polygon(p, &barrier, &equivocal));
        let barrier_index = SegmentIndex::new(barrier.points.clone(), 0.05);
        let equivocal_index = SegmentIndex::new(equivocal.curve.points.clone(), 0.05);
        let primary_index = FanIndex::new(&primary.trajectories, 0.02);
        let secondary_index = FanIndex::new(&secondary.trajectories, 0.02);
        Ok(Self {
            params: *p,
            config: *cfg,
            barrier,
            primary,
            equivocal,
            secondary,
            lens,
            secondary_region,
            barrier_index,
            equivocal_index,
            primary_index,
            secondary_index,
        })
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.config
    }

    /// `y` of the equivocal curve's contact with the negative axis.
    pub fn axis_y(&self) -> f64 {
        self.equivocal.axis_contact().y
    }

    pub fn axis_value(&self) -> f64 {
        self.equivocal.axis_value()
    }

    pub fn lens_polygon(&self) -> &[RelState] {
        self.lens.vertices()
    }

    pub fn secondary_polygon(&self) -> &[RelState] {
        self.secondary_region.vertices()
    }

    pub fn classify(&self, s: RelState) -> Region {
        let mirrored = s.x < 0.0;
        let q = RelState::new(s.x.abs(), s.y);
        let l = self.params.l();
        let band = self.config.band;
        let tag = if q.norm_sq() <= l * l {
            RegionTag::Captured
        } else if q.x <= band {
            if q.y > 0.0 {
                RegionTag::UniversalPositive
            } else if q.y > self.axis_y() {
                RegionTag::UniversalNegative
            } else {
                RegionTag::Dispersal
            }
        } else if self.equivocal_index.nearest_within(q, band).is_some() {
            RegionTag::Equivocal
        } else if self.secondary_region.contains(q)
            || self.barrier_index.nearest_within(q, band).is_some()
        {
            RegionTag::Secondary
        } else if self.lens.contains(q) {
            RegionTag::Primary
        } else {
            RegionTag::Tributary
        };
        Region {
            tag,
            mirrored: mirrored && tag != RegionTag::Dispersal,
        }
    }

    pub fn value(&self, s: RelState) -> f64 {
        self.equilibrium(s).value
    }

    /// Region, feedback controls and value, with mirroring applied.
    pub fn equilibrium(&self, s: RelState) -> Equilibrium {
        let region = self.classify(s);
        let q = RelState::new(s.x.abs(), s.y);
        let (mu, l) = (self.params.mu(), self.params.l());
        let (u, psi, value, exact) = match region.tag {
            RegionTag::Captured => (0.0, q.polar_angle(), 0.0, true),
            RegionTag::UniversalPositive => (0.0, 0.0, (q.y - l) / (1.0 - mu), true),
            RegionTag::UniversalNegative => (
                0.0,
                0.0,
                self.axis_value() + (q.y - self.axis_y()) / (1.0 - mu),
                true,
            ),
            RegionTag::Tributary | RegionTag::Dispersal => {
                let q = RelState::new(q.x.max(0.0), q.y);
                let t = cs_turn_time_rel(q).unwrap_or(f64::NAN);
                (1.0, t, tributary_value_raw(mu, l, q), true)
            }
            RegionTag::Primary => match self.primary_index.locate(&self.primary.trajectories, q) {
                Some(h) => {
                    let (psi0, _, tau) = self.fan_values(&self.primary, &h);
                    (1.0, psi0 + tau, tau, h.exact)
                }
                None => (1.0, q.polar_angle(), f64::NAN, false),
            },
            RegionTag::Secondary => {
                match self.secondary_index.locate(&self.secondary.trajectories, q) {
                    // Off the fan (next to the capture circle) the evader flees
                    // radially; the clamped value is kept as an estimate.
                    Some(h) if h.exact => {
                        let (psi0, v0, tau) = self.fan_values(&self.secondary, &h);
                        (-1.0, psi0 - tau, v0 + tau, true)
                    }
                    Some(h) => {
                        let (_, v0, tau) = self.fan_values(&self.secondary, &h);
                        (-1.0, q.polar_angle(), v0 + tau, false)
                    }
                    None => (-1.0, q.polar_angle(), f64::NAN, false),
                }
            }
            RegionTag::Equivocal => {
                let hit = self.equivocal_index.nearest(q);
                let c = &self.equivocal.controls;
                let k = hit.segment;
                let u = c[k] + (c[k + 1] - c[k]) * hit.t;
                (
                    u,
                    pure_pursuit_heading(q),
                    tributary_value_raw(mu, l, q),
                    true,
                )
            }
        };
        let (u, psi) = if region.mirrored {
            (-u, -psi)
        } else {
            (u, psi)
        };
        Equilibrium {
            region,
            u,
            psi: wrap_angle(psi),
            value,
            exact,
        }
    }

    /// Evader heading that leaves the equivocal curve along the tributary
    /// path; staying and leaving cost the same there.
    pub fn departing_heading(&self, s: RelState) -> f64 {
        let t = cs_turn_time_rel(RelState::new(s.x.abs(), s.y)).unwrap_or(0.0);
        wrap_angle(if s.x < 0.0 { -t } else { t })
    }

    fn fan_values(&self, field: &CharacteristicField, h: &FanHit) -> (f64, f64, f64) {
        let c0 = &field.trajectories[h.branch];
        let c1 = &field.trajectories[h.branch + 1];
        let dpsi = wrap_angle(c1.psi0 - c0.psi0);
        let psi0 = c0.psi0 + dpsi * h.a;
        let v0 = c0.value0 + (c1.value0 - c0.value0) * h.a;
        (psi0, v0, h.tau_index * field.d_tau)
    }

    /// First crossing of chord `a -> b` with the barrier or its mirror image,
    /// as a fraction of the chord.
    pub fn barrier_crossing(&self, a: RelState, b: RelState) -> Option<f64> {
        let right = self.barrier_index.chord_intersection(a, b).map(|(t, _)| t);
        let left = self
            .barrier_index
            .chord_intersection(a.mirrored(), b.mirrored())
            .map(|(t, _)| t);
        match (right, left) {
            (Some(r), Some(l)) => Some(r.min(l)),
            (r, l) => r.or(l),
        }
    }

    /// Whether `s` lies within the dead-band of the barrier or its mirror.
    pub fn on_barrier(&self, s: RelState) -> bool {
        self.near_barrier(s, self.config.band)
    }

    /// Whether `s` lies within `dist` of the barrier or its mirror.
    pub fn near_barrier(&self, s: RelState, dist: f64) -> bool {
        let q = RelState::new(s.x.abs(), s.y);
        self.barrier_index.nearest_within(q, dist).is_some()
    }

    /// Which side of the barrier `s` is on: -1 strictly inside the secondary
    /// region, 0 on the barrier, +1 elsewhere.
    pub fn barrier_side(&self, s: RelState) -> i8 {
        if self.on_barrier(s) {
            0
        } else if self
            .secondary_region
            .contains(RelState::new(s.x.abs(), s.y))
        {
            -1
        } else {
            1
        }
    }

    /// Fraction of the chord `a -> b` at which it crosses the barrier, or
    /// `1` when the chord ends on the barrier coming from the secondary side.
    pub fn barrier_reached(&self, a: RelState, b: RelState) -> Option<f64> {
        if let Some(f) = self.barrier_crossing(a, b) {
            return Some(f);
        }
        (self.on_barrier(b) && self.barrier_side(a) == -1).then_some(1.0)
    }

    /// Evader heading along the barrier normal into the secondary region;
    /// with the pursuer turning `u = +1` the state then slides along the
    /// barrier instead of crossing it.
    pub fn barrier_hold_heading(&self, s: RelState) -> f64 {
        let n = self.barrier_normal(s);
        wrap_angle((-n.x).atan2(-n.y))
    }

    /// Distance to the barrier (or its mirror), positive on the pursuer's side.
    pub fn barrier_signed_distance(&self, s: RelState) -> f64 {
        let q = RelState::new(s.x.abs(), s.y);
        let hit = self.barrier_index.nearest(q);
        let inside = self.secondary_region.contains(q);
        if inside {
            -hit.distance
        } else {
            hit.distance
        }
    }

    /// Outward unit normal of the barrier nearest to `s`, pointing from the
    /// secondary side to the pursuer's side, for `x ≥ 0`.
    pub fn barrier_normal(&self, s: RelState) -> RelState {
        let q = RelState::new(s.x.abs(), s.y);
        let hit = self.barrier_index.nearest(q);
        let pts = self.barrier_index.points();
        let d = pts[hit.segment + 1] - pts[hit.segment];
        // The barrier winds clockwise about the turn centre, so the
        // secondary region lies to the right of its direction of travel.
        let n = RelState::new(-d.y, d.x) * (1.0 / d.norm());
        if s.x < 0.0 {
            n.mirrored()
        } else {
            n
        }
    }
}
