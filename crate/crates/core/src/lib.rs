//! Text-image alignment evaluation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`prompt`] instantiates every prompt a template can produce and counts
//!    them in closed form.
//! 2. [`ingest`] loads detector output (labels, confidences, RLE masks and the
//!    sRGB colors under each mask), filters by confidence and drops
//!    cross-label near-duplicate masks.
//! 3. [`scoring`] applies the strict all-or-nothing criterion per image,
//!    using [`color`] to decide whether a mask carries the requested color.
//! 4. [`analytics`] and [`embedding`] aggregate the per-image outcomes into
//!    the metric and its breakdowns.
//!
//! The [`cli`] module hosts the `tiam` command-line front end.

pub mod analytics;
pub mod cli;
pub mod color;
pub mod config;
pub mod embedding;
pub mod error;
pub mod ingest;
mod io_util;
pub mod prompt;
pub mod scoring;

pub use error::{Error, Result};
