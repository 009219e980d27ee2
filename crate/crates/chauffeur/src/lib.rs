//! Homicidal chauffeur game: solution geometry, closed-loop play and
//! speed-deception analysis.
//!
//! Units are normalised so the pursuer's speed and minimum turn radius are
//! both 1. States live in the pursuer-fixed frame (see [`game`]).

pub mod deception;
pub mod export;
pub mod game;
pub mod ode;
pub mod sim;
pub mod solution;
pub mod strategy;
