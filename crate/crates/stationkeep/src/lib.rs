//! Station-keeping simulation for a 3-DOF surface vessel under sinusoidal
//! disturbances with unknown frequencies.
//!
//! The crate provides:
//! - a small dense linear-algebra and fixed-step ODE core ([`numeric`]),
//! - the vessel / disturbance-generator / error-model plant ([`plant`]),
//! - internal-model construction and the known-frequency regulator
//!   ([`regulator`]),
//! - the realizable adaptive controller with saturated estimate and high-gain
//!   extended observer ([`adaptive`]),
//! - numerical stability certificates ([`certificates`]),
//! - scenario configuration, the closed-loop runner and metric extraction
//!   ([`scenario`], [`runner`]),
//! - CSV / JSON exporters for run logs and summaries ([`export`]).

#![allow(clippy::needless_range_loop)] // indexed loops run over several arrays at once

pub mod adaptive;
pub mod certificates;
pub mod export;
pub mod numeric;
pub mod plant;
pub mod regulator;
pub mod runner;
pub mod scenario;
