//! Deterministic sparse-voxel scene toolkit.
//!
//! The crate is organized around [`voxel::SparseVoxelGrid`], a canonically
//! ordered sparse occupancy grid with optional per-voxel features. On top of
//! it sit resolution transforms and sparse pixel-shuffle upsampling
//! ([`pss`]), multi-view feature aggregation ([`aggregate`]), geodetic and
//! camera utilities ([`geo`]), flow-matching samplers with coarse-to-fine
//! orchestration ([`flow`]), stochastic structure augmentations
//! ([`augment`]), dataset curation helpers ([`dataset`]), and a decoder from
//! raw parameter vectors to 2D Gaussian splats ([`gsplat`]).
//!
//! Everything seeded is reproducible: the same seed yields bit-identical
//! results regardless of thread count.

pub mod aggregate;
pub mod augment;
pub mod dataset;
pub mod error;
pub mod flow;
pub mod geo;
pub mod gsplat;
pub mod pss;
pub mod rng;
pub mod voxel;

pub use error::{Error, Result};
pub use voxel::{Coord3, SparseVoxelGrid};
