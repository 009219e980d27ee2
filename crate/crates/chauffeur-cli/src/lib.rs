//! Config parsing and command execution for the `chauffeur` binary.
//!
//! A run is described by a TOML document:
//!
//! ```toml
//! command = "simulate"        # optional when given on the command line
//!
//! [game]
//! mu1 = 0.3                   # true evader speed bound
//! mu2 = 0.2                   # slow (deceptive) speed
//! l = 0.5
//! pursuer = "estimating"      # default "informed"
//! evader = "deceptive"        # default "truthful"
//!
//! [initial]
//! x0 = 2.152
//! y0 = -0.214
//!
//! [integrator]                # optional
//! dt = 1e-3
//! t_max = 100.0
//!
//! [sweep]                     # sweep only; window defaults to the barriers
//! spacing = 0.25
//!
//! [output]
//! path = "out"                # directory for CSV files
//! ```

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use chauffeur::deception::{geometries, sweep, DeceptionError, RunSettings, SweepSpec, Window};
use chauffeur::export::{sig9, write_advantage_map, write_geometry, write_trajectory};
use chauffeur::game::{validate_params, RelState};
use chauffeur::sim::{run_closed_loop, EventKind, Scenario};
use chauffeur::solution::RegionTag;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that overrides the sweep worker count.
pub const WORKERS_ENV: &str = "CHAUFFEUR_WORKERS";

/// Gain above which a sweep cell counts as advantageous for the evader.
pub const ADVANTAGE_THRESHOLD: f64 = 5e-3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no capture: {0}")]
    NoCapture(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::NoCapture(_) => 4,
        }
    }
}

impl From<DeceptionError> for CliError {
    fn from(e: DeceptionError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Geometry,
    Classify,
    Simulate,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub game: GameSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub mu1: f64,
    pub mu2: f64,
    pub l: f64,
    #[serde(default = "default_pursuer")]
    pub pursuer: String,
    #[serde(default = "default_evader")]
    pub evader: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_time: Option<f64>,
}

fn default_pursuer() -> String {
    "informed".into()
}

fn default_evader() -> String {
    "truthful".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_max() -> f64 {
    100.0
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_max: default_t_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Restrict to cells with these region names under (mu1, mu2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: PathBuf,
    /// Keep every `stride`-th sample of each characteristic in geometry files.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    10
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

impl RunConfig {
    /// Checks every invariant that does not depend on the command.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.game;
        for (name, mu) in [("mu1", g.mu1), ("mu2", g.mu2)] {
            validate_params(mu, g.l).map_err(|e| CliError::Config(format!("game.{name}: {e}")))?;
        }
        if g.mu1 < g.mu2 {
            return Err(CliError::Config(format!(
                "game.mu1 must be at least game.mu2 (got mu1={}, mu2={})",
                g.mu1, g.mu2
            )));
        }
        if let Some(t) = g.switch_time {
            if !(t >= 0.0) {
                return Err(CliError::Config(format!(
                    "game.switch_time must be non-negative, got {t}"
                )));
            }
        }
        let i = &self.integrator;
        if !(i.dt > 0.0) {
            return Err(CliError::Config(format!(
                "integrator.dt must be positive, got {}",
                i.dt
            )));
        }
        if !(i.t_max > i.dt) {
            return Err(CliError::Config(format!(
                "integrator.t_max must exceed integrator.dt, got {}",
                i.t_max
            )));
        }
        if let Some(s) = &self.sweep {
            if !(s.spacing > 0.0) {
                return Err(CliError::Config(format!(
                    "sweep.spacing must be positive, got {}",
                    s.spacing
                )));
            }
            for (lo, hi, axis) in [(s.x_min, s.x_max, "x"), (s.y_min, s.y_max, "y")] {
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    if !(lo < hi) {
                        return Err(CliError::Config(format!(
                            "sweep.{axis}_min must be below sweep.{axis}_max"
                        )));
                    }
                }
            }
            if s.workers == Some(0) {
                return Err(CliError::Config("sweep.workers must be at least 1".into()));
            }
            if let Some(only) = &s.only {
                for name in only {
                    name.parse::<RegionTag>()
                        .map_err(|e| CliError::Config(format!("sweep.only: {e}")))?;
                }
            }
        }
        Ok(())
    }

    fn initial(&self) -> Result<RelState, CliError> {
        let i = self
            .initial
            .ok_or_else(|| CliError::Config("missing [initial] section (x0, y0)".into()))?;
        Ok(RelState::new(i.x0, i.y0))
    }

    fn output_dir(&self) -> Result<&Path, CliError> {
        self.output
            .as_ref()
            .map(|o| o.path.as_path())
            .ok_or_else(|| CliError::Config("missing [output] section (path)".into()))
    }
}

/// Runs `cmd`, writing CSV files under the output directory and a summary
/// to `out`.
pub fn execute(cfg: &RunConfig, cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |e: io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cmd {
        Command::Classify => {
            let s = cfg.initial()?;
            let g = geometries(cfg.game.mu1, cfg.game.mu2, cfg.game.l)?;
            writeln!(out, "{}", g.truth.classify(s).tag).map_err(stdout_err)?;
            writeln!(out, "{}", g.low.classify(s).tag).map_err(stdout_err)?;
        }
        Command::Geometry => {
            let dir = cfg.output_dir()?;
            let stride = cfg.output.as_ref().map_or(default_stride(), |o| o.stride);
            let g = geometries(cfg.game.mu1, cfg.game.mu2, cfg.game.l)?;
            create_dir(dir)?;
            for (name, geo) in [("geometry_mu1.csv", &g.truth), ("geometry_mu2.csv", &g.low)] {
                let path = dir.join(name);
                write_file(&path, |w| write_geometry(w, geo, stride))?;
                writeln!(out, "wrote {}", path.display()).map_err(stdout_err)?;
            }
        }
        Command::Simulate => {
            let dir = cfg.output_dir()?;
            let s = cfg.initial()?;
            let g = geometries(cfg.game.mu1, cfg.game.mu2, cfg.game.l)?;
            let sc = Scenario {
                params_truth: *g.truth.params(),
                params_low: *g.low.params(),
                initial_rel: s,
                pursuer: cfg.game.pursuer.clone(),
                evader: cfg.game.evader.clone(),
                switch_time: cfg.game.switch_time,
                dt: cfg.integrator.dt,
                t_max: cfg.integrator.t_max,
            };
            let tr = run_closed_loop(&sc, &g).map_err(|e| CliError::Numerical(e.to_string()))?;
            create_dir(dir)?;
            let path = dir.join("trajectory.csv");
            write_file(&path, |w| write_trajectory(w, &tr))?;
            let count = |k| tr.events_of(k).count();
            writeln!(
                out,
                "capture_time={} switch={} barrier_cross={} axis_cross={} steps={} output={}",
                tr.capture_time.map_or("none".into(), sig9),
                count(EventKind::Switch),
                count(EventKind::BarrierCross),
                count(EventKind::AxisCross),
                tr.steps,
                path.display()
            )
            .map_err(stdout_err)?;
            if tr.capture_time.is_none() {
                return Err(CliError::NoCapture(format!(
                    "t_max={} reached",
                    sig9(cfg.integrator.t_max)
                )));
            }
        }
        Command::Sweep => {
            let dir = cfg.output_dir()?;
            let sw = cfg
                .sweep
                .as_ref()
                .ok_or_else(|| CliError::Config("missing [sweep] section (spacing)".into()))?;
            let g = geometries(cfg.game.mu1, cfg.game.mu2, cfg.game.l)?;
            let d = Window::around_barriers(&g);
            let window = Window {
                x_min: sw.x_min.unwrap_or(d.x_min),
                x_max: sw.x_max.unwrap_or(d.x_max),
                y_min: sw.y_min.unwrap_or(d.y_min),
                y_max: sw.y_max.unwrap_or(d.y_max),
            };
            let only = sw
                .only
                .as_ref()
                .map(|[a, b]| (a.parse().expect("validated"), b.parse().expect("validated")));
            let spec = SweepSpec {
                window,
                spacing: sw.spacing,
                run: RunSettings {
                    dt: cfg.integrator.dt,
                    t_max: cfg.integrator.t_max,
                },
                workers: workers(sw.workers)?,
                only,
            };
            let map = sweep(&g, &spec)?;
            create_dir(dir)?;
            let path = dir.join("advantage.csv");
            write_file(&path, |w| write_advantage_map(w, &map))?;
            writeln!(
                out,
                "cells={} max_gain={} advantageous={} failures={} incomplete={} output={}",
                map.cells.len(),
                map.max_gain().map_or("none".into(), sig9),
                map.advantageous(ADVANTAGE_THRESHOLD),
                map.failures(),
                map.incomplete(),
                path.display()
            )
            .map_err(stdout_err)?;
            if map.failures() > 0 {
                return Err(CliError::Numerical(format!(
                    "{} sweep cells failed",
                    map.failures()
                )));
            }
            if map.incomplete() > 0 {
                return Err(CliError::NoCapture(format!(
                    "{} sweep cells without capture",
                    map.incomplete()
                )));
            }
        }
    }
    Ok(())
}

/// Worker count: the environment variable wins over the config key.
fn workers(from_config: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(from_config),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let io_err = |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    f(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROP: &str = r#"
[game]
mu1 = 0.3
mu2 = 0.2
l = 0.5
[initial]
x0 = 2.152
y0 = -0.214
"#;

    #[test]
    fn defaults_fill_optional_keys() {
        let cfg = parse_config(PROP).unwrap();
        assert_eq!(cfg.game.pursuer, "informed");
        assert_eq!(cfg.integrator, IntegratorSection::default());
        assert_eq!(cfg.command, None);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
        assert_eq!(CliError::NoCapture(String::new()).exit_code(), 4);
    }
}
