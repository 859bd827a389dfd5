//! Coarse-to-fine scene generation.
//!
//! Stage one samples a dense occupancy score over the coarse grid (one
//! cell per `LATENT_DOWNSCALE` structure voxels) and thresholds it into a
//! sparse structure. The structure is roughened — dilate then block-snap —
//! to absorb boundary error before stage two samples a latent row per
//! surviving voxel. Rows whose magnitudes say "empty" are zeroed and
//! dropped, which is also how the two stages reconcile: stage two can veto
//! voxels stage one proposed.

use crate::augment::roughen;
use crate::error::{Error, Result};
use crate::flow::fields::VelocityField;
use crate::flow::sampler::{gaussian_noise, sample};
use crate::flow::schedule::{
    shifted_timesteps, DEFAULT_CFG_SCALE, DEFAULT_SHIFT, DEFAULT_STEPS,
};
use crate::flow::LATENT_DOWNSCALE;
use crate::pss::{
    coarse_threshold, latent_magnitude_filter, retain_valid, zero_invalid_features,
    LATENT_KEEP_FRACTION, LATENT_MAGNITUDE_TAU,
};
use crate::rng::SeededRng;
use crate::voxel::SparseVoxelGrid;

/// Knobs for [`generate_scene`]. `resolution` is the structure-level grid
/// edge and must be a positive multiple of [`LATENT_DOWNSCALE`];
/// `voxel_size` is the structure-level edge length in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateParams {
    pub resolution: u32,
    pub voxel_size: f32,
    pub steps: usize,
    pub shift: f64,
    pub cfg_scale: f64,
    pub latent_channels: usize,
    pub roughen_dilate: u32,
    pub roughen_simplify: u32,
    pub tau: f32,
    pub keep_fraction: f32,
    pub seed: u64,
}

impl Default for GenerateParams {
    fn default() -> Self {
        Self {
            resolution: 256,
            voxel_size: 1.0,
            steps: DEFAULT_STEPS,
            shift: DEFAULT_SHIFT,
            cfg_scale: DEFAULT_CFG_SCALE,
            latent_channels: 32,
            roughen_dilate: 3,
            roughen_simplify: 2,
            tau: LATENT_MAGNITUDE_TAU,
            keep_fraction: LATENT_KEEP_FRACTION,
            seed: 0,
        }
    }
}

/// Voxel counts at each stage of one generation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateDiagnostics {
    /// Voxels after thresholding the dense occupancy sample.
    pub coarse_voxels: usize,
    /// Voxels after roughening; the latent stage runs over these.
    pub roughened_voxels: usize,
    /// Voxels whose latent rows passed the magnitude filter.
    pub latent_kept: usize,
    /// Voxels the latent stage vetoed.
    pub latent_dropped: usize,
    /// True when the run produced no voxels at either stage.
    pub empty: bool,
}

/// Runs the two-stage pipeline and returns the latent grid (coarse
/// coordinates, `latent_channels` features) plus stage diagnostics.
///
/// `class_field` scores the dense coarse raster; `latent_factory` builds
/// the latent-stage field once the structure it must condition on is
/// known. Both stages share one seeded noise stream, so a seed pins the
/// whole run. An empty outcome is reported, not an error.
pub fn generate_scene(
    class_field: &dyn VelocityField,
    latent_factory: impl FnOnce(&SparseVoxelGrid) -> Result<Box<dyn VelocityField>>,
    params: &GenerateParams,
) -> Result<(SparseVoxelGrid, GenerateDiagnostics)> {
    if params.resolution == 0 || params.resolution % LATENT_DOWNSCALE != 0 {
        return Err(Error::InvalidParam(format!(
            "resolution {} is not a positive multiple of {LATENT_DOWNSCALE}",
            params.resolution
        )));
    }
    if params.latent_channels == 0 {
        return Err(Error::InvalidParam("latent channels must be positive".into()));
    }
    let coarse_res = params.resolution / LATENT_DOWNSCALE;
    let coarse_size = params.voxel_size * LATENT_DOWNSCALE as f32;
    let timesteps = shifted_timesteps(params.steps, params.shift)?;
    let mut rng = SeededRng::new(params.seed);

    let dense_len = (coarse_res as usize).pow(3);
    let noise = gaussian_noise(dense_len, &mut rng);
    let scores = sample(class_field, &noise, &timesteps, params.cfg_scale)?;
    let coarse = coarse_threshold(&scores, coarse_res, coarse_size)?;
    if coarse.is_empty() {
        let diag = GenerateDiagnostics {
            coarse_voxels: 0,
            roughened_voxels: 0,
            latent_kept: 0,
            latent_dropped: 0,
            empty: true,
        };
        return Ok((SparseVoxelGrid::empty(coarse_res, coarse_size), diag));
    }

    let structure = roughen(&coarse, params.roughen_dilate, params.roughen_simplify)?;
    let latent_field = latent_factory(&structure)?;
    let latent_noise = gaussian_noise(structure.len() * params.latent_channels, &mut rng);
    let latent = sample(
        latent_field.as_ref(),
        &latent_noise,
        &timesteps,
        params.cfg_scale,
    )?;
    let latent_grid = structure
        .without_features()
        .with_features(params.latent_channels, latent)?;

    let valid = latent_magnitude_filter(&latent_grid, params.tau, params.keep_fraction)?;
    let zeroed = zero_invalid_features(&latent_grid, &valid)?;
    let kept = retain_valid(&zeroed, &valid)?;

    let diag = GenerateDiagnostics {
        coarse_voxels: coarse.len(),
        roughened_voxels: structure.len(),
        latent_kept: kept.len(),
        latent_dropped: structure.len() - kept.len(),
        empty: kept.is_empty(),
    };
    Ok((kept, diag))
}
