//! Sample-efficient online Elo and multidimensional Elo evaluation.
//!
//! Matches are scheduled by a dueling-bandit policy that keeps a UCB
//! candidate set of possibly-best players and plays the most uncertain pair
//! inside it, while ratings are learned with projected mini-batch SGD. The
//! crate also ships baseline schedulers, ranking metrics and a seeded
//! simulation harness.

pub mod design;
pub mod error;
pub mod game;
pub mod harness;
pub mod metrics;
pub mod rating;
pub mod rng;
pub mod scheduler;

pub use error::{Error, Result};
