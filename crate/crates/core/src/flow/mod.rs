//! Flow-matching sampling and coarse-to-fine scene generation.
//!
//! Samplers follow the rectified-flow convention: time runs from 1 (pure
//! noise) down to 0 (data), the state interpolates as
//! `x_t = (1 - t) * x_0 + t * noise`, and a velocity field predicts
//! `noise - x_0`. Integration is plain Euler over a shift-warped time grid.
//!
//! The neural fields themselves are out of scope here; anything that
//! implements [`VelocityField`] can drive the samplers, and the built-in
//! oracle fields make the machinery testable end to end: they admit exact
//! closed-form solutions, so the sampler output can be checked against
//! ground truth.

mod fields;
mod generate;
mod sampler;
mod schedule;
mod window;

pub use fields::{
    dense_class_targets, ConstantOracleField, SeededRandomField, ShapeOracleField, VelocityField,
};
pub use generate::{generate_scene, GenerateDiagnostics, GenerateParams};
pub use sampler::{cfg_combine, gaussian_noise, sample, sample_with};
pub use schedule::{shifted_timesteps, DEFAULT_CFG_SCALE, DEFAULT_SHIFT, DEFAULT_STEPS};
pub use window::{sliding_window_generate, tile_starts, TileFrame, TileReport, WindowParams};

/// Ratio between structure resolution and the latent grid resolution.
pub const LATENT_DOWNSCALE: u32 = 8;
