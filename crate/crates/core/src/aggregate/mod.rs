//! Multi-view feature aggregation.
//!
//! Rendered views carry per-pixel features that must be pooled back onto
//! the scene elements (voxels, points) they came from. Each pixel votes for
//! its element with a weight that favors close, head-on observations:
//!
//! ```text
//! d  = clamp(depth, 0, z_far)
//! D  = clamp(1 - d / z_far, 0, 1)          proximity score
//! S  = |dot(normalize(origin - position), normal)|   alignment score
//! w  = D^tau_depth * S^tau_surface
//! ```
//!
//! Element features are the weight-sum of pixel features divided by the
//! total weight plus a small epsilon, so unobserved elements stay zero.
//!
//! Accumulation runs in f64. Views are processed independently (in
//! parallel) and their partial sums are folded in manifest order, so the
//! result is bit-identical no matter how many threads run.

mod io;

pub use io::{read_view_manifest, ViewRecord};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_Z_FAR: f64 = 2.0;
pub const DEFAULT_TAU_DEPTH: f64 = 3.0;
pub const DEFAULT_TAU_SURFACE: f64 = 3.0;
pub const WEIGHT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct AggregateParams {
    pub z_far: f64,
    pub tau_depth: f64,
    pub tau_surface: f64,
    pub epsilon: f64,
}

impl Default for AggregateParams {
    fn default() -> Self {
        Self {
            z_far: DEFAULT_Z_FAR,
            tau_depth: DEFAULT_TAU_DEPTH,
            tau_surface: DEFAULT_TAU_SURFACE,
            epsilon: WEIGHT_EPSILON,
        }
    }
}

/// One rendered view. All rasters are row-major, `height * width` pixels;
/// `normal` and `position` carry 3 components per pixel (world space),
/// `feature` carries `channels` components. `element` maps each pixel to
/// the scene element it observed; negative means background.
#[derive(Debug, Clone)]
pub struct ViewSample {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f32>,
    pub normal: Vec<f32>,
    pub position: Vec<f32>,
    pub element: Vec<i64>,
    pub feature: Vec<f32>,
    pub channels: usize,
    pub origin: [f64; 3],
}

impl ViewSample {
    fn validate(&self) -> Result<()> {
        let pixels = self.width * self.height;
        let checks: [(&'static str, usize, usize); 5] = [
            ("depth raster", pixels, self.depth.len()),
            ("normal raster", pixels * 3, self.normal.len()),
            ("position raster", pixels * 3, self.position.len()),
            ("element raster", pixels, self.element.len()),
            ("feature raster", pixels * self.channels, self.feature.len()),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(Error::LengthMismatch {
                    what,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }
}

/// Per-pixel aggregation weights for one view.
pub fn pixel_weights(view: &ViewSample, params: &AggregateParams) -> Result<Vec<f64>> {
    view.validate()?;
    let pixels = view.width * view.height;
    let mut weights = Vec::with_capacity(pixels);
    for p in 0..pixels {
        weights.push(weight_at(view, p, params));
    }
    Ok(weights)
}

fn weight_at(view: &ViewSample, p: usize, params: &AggregateParams) -> f64 {
    let depth = view.depth[p] as f64;
    if !depth.is_finite() {
        return 0.0;
    }
    let d = depth.clamp(0.0, params.z_far);
    let proximity = (1.0 - d / params.z_far).clamp(0.0, 1.0);

    let dir = [
        view.origin[0] - view.position[3 * p] as f64,
        view.origin[1] - view.position[3 * p + 1] as f64,
        view.origin[2] - view.position[3 * p + 2] as f64,
    ];
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return 0.0;
    }
    let n = [
        view.normal[3 * p] as f64,
        view.normal[3 * p + 1] as f64,
        view.normal[3 * p + 2] as f64,
    ];
    let alignment = ((dir[0] * n[0] + dir[1] * n[1] + dir[2] * n[2]) / norm).abs();

    proximity.powf(params.tau_depth) * alignment.powf(params.tau_surface)
}

struct Partial {
    acc: Vec<f64>,
    weight: Vec<f64>,
}

fn view_partial(
    view: &ViewSample,
    element_count: usize,
    channels: usize,
    params: &AggregateParams,
) -> Result<Partial> {
    view.validate()?;
    if view.channels != channels {
        return Err(Error::ChannelMismatch {
            expected: channels,
            actual: view.channels,
        });
    }
    let mut acc = vec![0.0f64; element_count * channels];
    let mut weight = vec![0.0f64; element_count];
    for p in 0..view.width * view.height {
        let e = view.element[p];
        if e < 0 {
            continue;
        }
        let e = e as usize;
        if e >= element_count {
            return Err(Error::IndexOutOfRange {
                index: e as i64,
                count: element_count,
            });
        }
        let w = weight_at(view, p, params);
        weight[e] += w;
        let row = &mut acc[e * channels..(e + 1) * channels];
        let feat = &view.feature[p * channels..(p + 1) * channels];
        for (a, &f) in row.iter_mut().zip(feat) {
            *a += w * f as f64;
        }
    }
    Ok(Partial { acc, weight })
}

/// Pools pixel features from all views onto `element_count` elements.
/// Returns a row-major `element_count x channels` f32 matrix.
pub fn scatter_aggregate(
    views: &[ViewSample],
    element_count: usize,
    channels: usize,
    params: &AggregateParams,
) -> Result<Vec<f32>> {
    let partials: Vec<Partial> = views
        .par_iter()
        .map(|v| view_partial(v, element_count, channels, params))
        .collect::<Result<_>>()?;

    let mut acc = vec![0.0f64; element_count * channels];
    let mut weight = vec![0.0f64; element_count];
    for partial in &partials {
        for (a, &p) in acc.iter_mut().zip(&partial.acc) {
            *a += p;
        }
        for (w, &p) in weight.iter_mut().zip(&partial.weight) {
            *w += p;
        }
    }

    let mut out = Vec::with_capacity(element_count * channels);
    for e in 0..element_count {
        let denom = weight[e] + params.epsilon;
        for c in 0..channels {
            out.push((acc[e * channels + c] / denom) as f32);
        }
    }
    Ok(out)
}
