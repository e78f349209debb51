//! Desk-scale bite-acquisition toolkit.
//!
//! The crate covers the full decision pipeline for skewering food items off a
//! plate, end to end and fully synthetic:
//!
//! - [`tensor`] — a minimal reverse-mode autodiff engine (conv, batchnorm,
//!   pooling, linear, smooth-L1) sized for the success-rate regressor.
//! - [`spanet`] — the regressor itself: a 288x288 crop plus an environment
//!   one-hot goes in, axis endpoints and six action success rates come out.
//! - [`perception`] — classical RGBD plate perception: Hough plate detection,
//!   table-plane fitting, height maps, color segmentation, environment
//!   classification, and skewering-axis extraction.
//! - [`scene`] — a deterministic synthetic plate-scene generator with exact
//!   ground truth, plus the Bernoulli trial oracle that stands in for a
//!   physical robot.
//! - [`stats`] — trial ingestion, empirical success tables, Fisher exact
//!   tests with Bonferroni correction, and evaluation metrics.
//! - [`sim`] — the argmax acquisition policy and full-plate feeding
//!   simulation.
//! - [`cli`] — the `forkcast` command-line front end used by the runnable
//!   examples and for reproducible experiment runs.
//!
//! Every seeded entry point is deterministic: the same seed produces
//! byte-identical artifacts on a given platform.

pub mod cli;
pub mod domain;
pub mod perception;
pub mod scene;
pub mod seeds;
pub mod sim;
pub mod spanet;
pub mod stats;
pub mod tensor;

pub use domain::{ActionId, EnvClass, FoodCategory, ForkRoll, MacroAction, Outcome};
