//! Geometry-aware trained encoding (GATE).
//!
//! Latent feature vectors live on the surface of triangle meshes, placed on a
//! mesh-colors lattice per triangle and interpolated barycentrically. The
//! features are trained online together with a small MLP. The crate ships the
//! neural ambient occlusion application, a multi-resolution hash-grid baseline
//! and everything needed to compare the two.
//!
//! Module map:
//!
//! - [`geometry`]: meshes, OBJ loading, adjacency, surface sampling, BVH.
//! - [`mesh_colors`]: lattice classification, adaptive resolution, feature layouts.
//! - [`encoders`]: GATE encoding and its backward pass, hash grid, one-blob.
//! - [`neural`]: MLP, L2 loss, dense and sparse Adam.
//! - [`training`]: prioritized sample selection, step counters, online training.
//! - [`nao`]: AO oracle, cameras, reference/inference/Voronoi renders, metrics.
//! - [`pipeline`]: the `train`/`render`/`compare`/`viz`/`stats` workflows.

pub mod checkpoint;
pub mod config;
pub mod encoders;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod mesh_colors;
pub mod model;
pub mod nao;
pub mod neural;
mod par;
pub mod pipeline;
pub mod real;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use real::Real;
