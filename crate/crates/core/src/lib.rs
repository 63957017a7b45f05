//! Synthetic-data curation toolkit.
//!
//! A translator stand-in produces labelled synthetic examples from a
//! desk-scale prototype dataset; samplers then decide which of them are
//! worth adding to the real training set:
//!
//! - `random`: uniform sub-sampling, the baseline augmentation.
//! - `cl`: per-category top-K by the class-conditional probability a
//!   classifier trained on real data assigns to the target label.
//! - `cr`: per-category top-K by a real-vs-fake discriminator's realism score.
//! - `rl`: an actor-critic keep/discard policy rewarded by a child network's
//!   validation accuracy against a sliding-window threshold.
//!
//! The [`harness`] module runs the full grid (sampler × ratio × seed),
//! retrains classifiers from scratch and reports per-category, macro and
//! micro accuracies.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod models;
pub mod numkit;
pub mod samplers;
pub mod seeds;

pub use error::{Error, Result};
