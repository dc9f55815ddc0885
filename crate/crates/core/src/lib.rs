//! obsim: a system-level simulator for two-tier cellular networks with
//! third-party femtocell offload, an embedded net-utility user
//! association optimizer, and a drop-based experiment harness.
//!
//! The crate is organized along the pipeline of one drop:
//! [`scenario`] lays out cells and mobiles, [`channel`] turns geometry
//! into link gains and an interference operator, [`assoc`] assembles and
//! approximately solves the association program via separable
//! augmented-Lagrangian dual decomposition, [`economics`] scores
//! solutions, and [`experiments`] orchestrates drops, sweeps and CSV
//! outputs. [`config`] holds the file-based run configuration shared
//! with the CLI.

pub mod assoc;
pub mod channel;
pub mod config;
pub mod economics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
