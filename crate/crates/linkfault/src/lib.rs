//! Passive-measurement link-fault identification and localization.
//!
//! The crate models a network as a capacitated topology, simulates
//! steady-state traffic over it to produce per-pair rate/delay/loss
//! measurements, and trains a three-stage machine-learning pipeline that
//! turns one such measurement vector into a diagnosis: whether a link
//! fault happened, which link disconnected, and — when traffic was
//! rerouted onto a new link — which link was reconnected. An active-probing
//! baseline and evaluation metrics support head-to-head comparisons.
//!
//! Module map:
//! - [`topology`]: graphs, file formats, fault mutations, scenario spaces.
//! - [`flowsim`]: shortest-path flow simulation and the measurement model.
//! - [`dataset`]: labeled dataset generation, splits, CSV, preprocessing.
//! - [`learners`]: from-scratch random forest, MLP, and linear SVM.
//! - [`pipeline`]: the three-stage diagnoser.
//! - [`baseline`]: ping-style active probing for comparison.
//! - [`metrics`]: classification/regression scores and timing summaries.
//! - [`linalg`], [`rng`]: small shared numeric foundations.

pub mod baseline;
pub mod dataset;
pub mod flowsim;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod topology;
