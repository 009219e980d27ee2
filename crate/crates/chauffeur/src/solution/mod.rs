//! Solution geometry of the classical game: barrier, characteristic fans,
//! equivocal curve, region classification and the equilibrium value.
//!
//! Everything is built by retrograde integration from the terminal
//! manifolds. The only analytic piece is the tributary value, which follows
//! from the Dubins CS path of the pursuer.

mod barrier;
mod equivocal;
mod geometry;
pub mod spatial;
mod tributary;

use std::fmt;

use thiserror::Error;

use crate::game::RelState;

pub use barrier::{compute_barrier, compute_primary_fan};
pub use equivocal::{
    compute_secondary_fan_and_equivocal, trace_equivocal, EquivocalCurve, SecondaryGrid,
};
pub use geometry::{Equilibrium, Geometry, GeometryConfig};
pub use tributary::{
    compute_tributary_fan, cs_turn_time_rel, dubins_cs_turn_time, tributary_gradient,
    tributary_value, TributaryError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolutionError {
    #[error("curve step d_tau must lie in (0, 0.01), got {0}")]
    StepSize(f64),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(
        "failure to locate equal-cost locus at tau={tau:.6}, point ({x:.6}, {y:.6}): \
         bracketing residuals r(u=-1)={res_lo:.3e}, r(u=+1)={res_hi:.3e}"
    )]
    EquivocalSearch {
        tau: f64,
        x: f64,
        y: f64,
        res_lo: f64,
        res_hi: f64,
    },
    #[error("tributary value unavailable: {0}")]
    Tributary(#[from] TributaryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Barrier,
    Equivocal,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Barrier => "barrier",
            CurveKind::Equivocal => "equivocal",
        }
    }
}

/// A polyline with the time-to-go at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub kind: CurveKind,
    pub points: Vec<RelState>,
    pub tau: Vec<f64>,
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> RelState {
        self.points[0]
    }

    pub fn last(&self) -> RelState {
        *self.points.last().expect("non-empty curve")
    }

    /// Largest distance between consecutive samples.
    pub fn resolution(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Primary,
    Tributary,
    Secondary,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Primary => "primary",
            Family::Tributary => "tributary",
            Family::Secondary => "secondary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalLabel {
    UsablePart,
    PositiveUniversal,
    Equivocal,
    NegativeUniversal,
}

/// One retrograde characteristic sampled at `tau = k * d_tau`.
///
/// Along it the evader heading is `psi0 ± tau` (sign fixed by the family) and
/// the value is `value0 + tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub points: Vec<RelState>,
    pub psi0: f64,
    pub value0: f64,
    pub terminal: TerminalLabel,
    pub anchor: Option<RelState>,
}

impl AsRef<[RelState]> for Characteristic {
    fn as_ref(&self) -> &[RelState] {
        &self.points
    }
}

impl Characteristic {
    pub fn tau_at(&self, k: usize, d_tau: f64) -> f64 {
        k as f64 * d_tau
    }
}

/// A family of characteristics sharing one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicField {
    pub family: Family,
    pub d_tau: f64,
    pub trajectories: Vec<Characteristic>,
}

impl CharacteristicField {
    /// Samples of characteristic `i` as `(state, tau)` pairs.
    pub fn samples(&self, i: usize) -> impl Iterator<Item = (RelState, f64)> + '_ {
        let d = self.d_tau;
        self.trajectories[i]
            .points
            .iter()
            .enumerate()
            .map(move |(k, p)| (*p, k as f64 * d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Primary,
    Tributary,
    Secondary,
    UniversalPositive,
    UniversalNegative,
    Equivocal,
    Dispersal,
    Captured,
}

impl RegionTag {
    pub const ALL: [RegionTag; 8] = [
        RegionTag::Primary,
        RegionTag::Tributary,
        RegionTag::Secondary,
        RegionTag::UniversalPositive,
        RegionTag::UniversalNegative,
        RegionTag::Equivocal,
        RegionTag::Dispersal,
        RegionTag::Captured,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::Primary => "Primary",
            RegionTag::Tributary => "Tributary",
            RegionTag::Secondary => "Secondary",
            RegionTag::UniversalPositive => "UniversalPositive",
            RegionTag::UniversalNegative => "UniversalNegative",
            RegionTag::Equivocal => "Equivocal",
            RegionTag::Dispersal => "Dispersal",
            RegionTag::Captured => "Captured",
        }
    }

    /// Short letter used in superposition labels such as `S/T`.
    pub fn letter(self) -> &'static str {
        match self {
            RegionTag::Primary => "P",
            RegionTag::Tributary => "T",
            RegionTag::Secondary => "S",
            RegionTag::UniversalPositive => "U+",
            RegionTag::UniversalNegative => "U-",
            RegionTag::Equivocal => "E",
            RegionTag::Dispersal => "D",
            RegionTag::Captured => "C",
        }
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown region tag '{s}'"))
    }
}

/// Classification of a relative point; `mirrored` is set for `x < 0` queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub tag: RegionTag,
    pub mirrored: bool,
}
