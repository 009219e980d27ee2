//! Truthful versus deceptive capture times and lattice sweeps of the gain.

use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameParams, ParamError, RelState};
use crate::sim::{run_closed_loop_with, RunOptions, Scenario, SimError};
use crate::solution::{Region, RegionTag, SolutionError};
use crate::strategy::{GeometrySet, PolicyRegistry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeceptionError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("deception needs mu1 >= mu2, got mu1={mu1}, mu2={mu2}")]
    Order { mu1: f64, mu2: f64 },
    #[error("sweep spacing must be positive, got {0}")]
    Spacing(f64),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Integration settings shared by both runs of a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub dt: f64,
    pub t_max: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeceptionReport {
    pub initial_rel: RelState,
    /// Informed pursuer against the truthful evader.
    pub t_truthful: Option<f64>,
    /// Estimating pursuer against the deceptive evader.
    pub t_deceptive: Option<f64>,
    /// Estimating pursuer against the truthful evader.
    pub t_truthful_estimating: Option<f64>,
    pub gain: Option<f64>,
    pub region_mu1: Region,
    pub region_mu2: Region,
    pub switch_point: Option<RelState>,
}

impl DeceptionReport {
    /// Both runs ended in capture.
    pub fn is_complete(&self) -> bool {
        self.gain.is_some()
    }

    /// Superposition label such as `S/T`.
    pub fn superposition(&self) -> String {
        format!(
            "{}/{}",
            self.region_mu1.tag.letter(),
            self.region_mu2.tag.letter()
        )
    }
}

pub fn geometries(mu1: f64, mu2: f64, l: f64) -> Result<GeometrySet, DeceptionError> {
    if mu1 < mu2 {
        return Err(DeceptionError::Order { mu1, mu2 });
    }
    let p1 = GameParams::new(mu1, l)?;
    let p2 = GameParams::new(mu2, l)?;
    Ok(GeometrySet::build(&p1, &p2)?)
}

/// Builds both solutions and compares the two cases from `s0`.
pub fn deception_gain(
    mu1: f64,
    mu2: f64,
    l: f64,
    s0: RelState,
) -> Result<DeceptionReport, DeceptionError> {
    let g = geometries(mu1, mu2, l)?;
    Ok(deception_gain_with(&g, s0, RunSettings::default())?)
}

pub fn deception_gain_with(
    geoms: &GeometrySet,
    s0: RelState,
    run: RunSettings,
) -> Result<DeceptionReport, SimError> {
    let registry = PolicyRegistry::with_builtins();
    let base = Scenario {
        params_truth: *geoms.truth.params(),
        params_low: *geoms.low.params(),
        initial_rel: s0,
        pursuer: "informed".into(),
        evader: "truthful".into(),
        switch_time: None,
        dt: run.dt,
        t_max: run.t_max,
    };
    let opts = RunOptions {
        record_samples: false,
    };
    let truthful = run_closed_loop_with(&base, geoms, &registry, opts)?;
    let deceptive_sc = Scenario {
        pursuer: "estimating".into(),
        evader: "deceptive".into(),
        ..base.clone()
    };
    let deceptive = run_closed_loop_with(&deceptive_sc, geoms, &registry, opts)?;
    let alt_sc = Scenario {
        pursuer: "estimating".into(),
        ..base
    };
    let alternative = run_closed_loop_with(&alt_sc, geoms, &registry, opts)?;
    let gain = match (truthful.capture_time, deceptive.capture_time) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    Ok(DeceptionReport {
        initial_rel: s0,
        t_truthful: truthful.capture_time,
        t_deceptive: deceptive.capture_time,
        t_truthful_estimating: alternative.capture_time,
        gain,
        region_mu1: geoms.truth.classify(s0),
        region_mu2: geoms.low.classify(s0),
        switch_point: deceptive.switch_point,
    })
}

/// Axis-aligned rectangle of initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    /// Bounding box of both barriers and their mirror images, padded by one
    /// turn radius.
    pub fn around_barriers(geoms: &GeometrySet) -> Self {
        let mut w = Window {
            x_min: 0.0,
            x_max: 0.0,
            y_min: 0.0,
            y_max: 0.0,
        };
        for g in [&geoms.truth, &geoms.low] {
            for p in &g.barrier.points {
                w.x_max = w.x_max.max(p.x.abs());
                w.y_min = w.y_min.min(p.y);
                w.y_max = w.y_max.max(p.y);
            }
        }
        Window {
            x_min: -w.x_max - 1.0,
            x_max: w.x_max + 1.0,
            y_min: w.y_min - 1.0,
            y_max: w.y_max + 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub window: Window,
    pub spacing: f64,
    pub run: RunSettings,
    /// Worker threads; `None` uses every hardware thread.
    pub workers: Option<usize>,
    /// Only evaluate cells with these region tags under (mu1, mu2).
    pub only: Option<(RegionTag, RegionTag)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
    pub point: RelState,
    pub report: Result<DeceptionReport, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageMap {
    pub window: Window,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<Cell>,
}

impl AdvantageMap {
    pub fn reports(&self) -> impl Iterator<Item = &DeceptionReport> {
        self.cells.iter().filter_map(|c| c.report.as_ref().ok())
    }

    pub fn max_gain(&self) -> Option<f64> {
        self.reports().filter_map(|r| r.gain).reduce(f64::max)
    }

    /// Cells where deception bought at least `threshold` time units.
    pub fn advantageous(&self, threshold: f64) -> usize {
        self.reports()
            .filter(|r| r.gain.is_some_and(|g| g > threshold))
            .count()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.report.is_err()).count()
    }

    pub fn incomplete(&self) -> usize {
        self.reports().filter(|r| !r.is_complete()).count()
    }
}

/// Evaluates the deception gain over a lattice, in parallel.
///
/// Cells inside the capture circle are skipped. Results are ordered by
/// lattice index regardless of completion order.
pub fn sweep(geoms: &GeometrySet, spec: &SweepSpec) -> Result<AdvantageMap, DeceptionError> {
    if !(spec.spacing > 0.0) {
        return Err(DeceptionError::Spacing(spec.spacing));
    }
    let w = spec.window;
    let n_of = |lo: f64, hi: f64| ((hi - lo) / spec.spacing + 1e-9).floor().max(0.0) as usize + 1;
    let (nx, ny) = (n_of(w.x_min, w.x_max), n_of(w.y_min, w.y_max));
    let l = geoms.truth.params().l();
    let points: Vec<(usize, usize, RelState)> = (0..ny)
        .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
        .map(|(ix, iy)| {
            let p = RelState::new(
                w.x_min + ix as f64 * spec.spacing,
                w.y_min + iy as f64 * spec.spacing,
            );
            (ix, iy, p)
        })
        .filter(|(_, _, p)| p.norm() > l)
        .filter(|(_, _, p)| match spec.only {
            None => true,
            Some((a, b)) => geoms.truth.classify(*p).tag == a && geoms.low.classify(*p).tag == b,
        })
        .collect();
    let eval = || -> Vec<Cell> {
        points
            .par_iter()
            .map(|&(ix, iy, p)| Cell {
                ix,
                iy,
                point: p,
                report: deception_gain_with(geoms, p, spec.run).map_err(|e| e.to_string()),
            })
            .collect()
    };
    let cells = match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| DeceptionError::Pool(e.to_string()))?
            .install(eval),
        None => eval(),
    };
    Ok(AdvantageMap {
        window: w,
        spacing: spec.spacing,
        nx,
        ny,
        cells,
    })
}
