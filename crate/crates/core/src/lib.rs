//! Sleep monitoring from a wrist-worn photoplethysmograph.
//!
//! The wearable stage turns raw PPG and acceleration into beat-to-beat
//! intervals and a motion indicator ([`pipeline::device_stage`]). The server
//! stage cleans the intervals and estimates heart rate and breathing rate
//! ([`pipeline::server_stage`]). [`eval`] scores estimates against reference
//! recordings and [`synth`] produces signals with known ground truth.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beat;
pub mod cardio;
pub mod codec;
pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod hrv;
pub mod io;
pub mod motion;
pub mod pipeline;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
pub use series::{BbiSeries, BeatSeries, Quality, TimedSeries, UniformSeries};
