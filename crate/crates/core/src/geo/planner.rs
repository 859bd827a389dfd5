//! Deterministic aerial viewpoint plans.
//!
//! Three capture patterns cover the common scene types: a two-square
//! top-down plan for full scenes, stacked rings for scenes with tall
//! structure, and a descending spiral for a single building. All plans are
//! pure functions of their parameters, so repeated calls are identical.

use nalgebra::Vector3;

use crate::error::Result;
use crate::geo::camera::{look_at, CameraPose};

/// The eight positions on a square's perimeter used by the square-based
/// plans: corners and edge midpoints, counterclockwise from `(+h, +h)`.
const SQUARE_OFFSETS: [(f64, f64); 8] = [
    (1.0, 1.0),
    (0.0, 1.0),
    (-1.0, 1.0),
    (-1.0, 0.0),
    (-1.0, -1.0),
    (0.0, -1.0),
    (1.0, -1.0),
    (1.0, 0.0),
];

/// Aims a camera, preferring world +z as the up reference and falling back
/// to +y for straight-vertical views.
fn aim(eye: Vector3<f64>, target: Vector3<f64>) -> Result<CameraPose> {
    look_at(eye, target, Vector3::z()).or_else(|_| look_at(eye, target, Vector3::y()))
}

#[derive(Debug, Clone, Copy)]
pub struct TopPoseParams {
    /// Side length of the outer square, meters.
    pub outer_extent: f64,
    /// Side length of the inner square, meters.
    pub inner_extent: f64,
    /// Flight altitude, meters.
    pub altitude: f64,
}

impl Default for TopPoseParams {
    fn default() -> Self {
        Self {
            outer_extent: 600.0,
            inner_extent: 100.0,
            altitude: 500.0,
        }
    }
}

/// Sixteen oblique top poses around the scene origin.
///
/// Eight cameras sit on the outer square and look at the scene center;
/// eight sit on the inner square and look at the nearest midpoint of an
/// outer square edge (at ground level), spreading coverage outward. When a
/// corner camera is equidistant to two midpoints, the one on the x axis
/// wins. Outer poses come first, both rings in counterclockwise offset
/// order.
pub fn top_pose_plan(params: &TopPoseParams) -> Result<Vec<CameraPose>> {
    let outer_half = params.outer_extent / 2.0;
    let inner_half = params.inner_extent / 2.0;
    let mut poses = Vec::with_capacity(16);

    for (ox, oy) in SQUARE_OFFSETS {
        let eye = Vector3::new(ox * outer_half, oy * outer_half, params.altitude);
        poses.push(aim(eye, Vector3::zeros())?);
    }

    let midpoints = [
        Vector3::new(outer_half, 0.0, 0.0),
        Vector3::new(-outer_half, 0.0, 0.0),
        Vector3::new(0.0, outer_half, 0.0),
        Vector3::new(0.0, -outer_half, 0.0),
    ];
    for (ox, oy) in SQUARE_OFFSETS {
        let eye = Vector3::new(ox * inner_half, oy * inner_half, params.altitude);
        // Nearest outer-edge midpoint; x-axis midpoints listed first so
        // they win exact ties.
        let target = midpoints
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - eye).norm().partial_cmp(&(b - eye).norm()).expect("finite distances")
            })
            .expect("four midpoints");
        poses.push(aim(eye, target)?);
    }
    Ok(poses)
}

#[derive(Debug, Clone, Copy)]
pub struct AdaLevelParams {
    /// Altitude of the lowest ring, meters.
    pub base_altitude: f64,
    /// Vertical spacing between rings, meters.
    pub step: f64,
    /// Clearance added above the tallest structure, meters.
    pub top_margin: f64,
    /// Ring radius at the lowest ring, meters.
    pub radius_low: f64,
    /// Ring radius at the highest ring, meters.
    pub radius_high: f64,
    /// Cameras per ring.
    pub poses_per_ring: usize,
}

impl Default for AdaLevelParams {
    fn default() -> Self {
        Self {
            base_altitude: 75.0,
            step: 75.0,
            top_margin: 225.0,
            radius_low: 300.0,
            radius_high: 50.0,
            poses_per_ring: 6,
        }
    }
}

/// Altitude-adaptive rings around the scene origin.
///
/// Rings start at `base_altitude` and climb in `step` increments while they
/// stay at or below `max_height + top_margin`. The ring radius shrinks
/// linearly from `radius_low` at the bottom to `radius_high` at the top
/// ring; every camera looks at the scene center. `accessible`, when given,
/// drops any camera whose position it rejects (for example, positions
/// inside obstacles).
pub fn ada_level_plan(
    max_height: f64,
    params: &AdaLevelParams,
    accessible: Option<&dyn Fn(&[f64; 3]) -> bool>,
) -> Result<Vec<CameraPose>> {
    let ceiling = max_height + params.top_margin;
    let mut altitudes = Vec::new();
    let mut h = params.base_altitude;
    while h <= ceiling + 1e-9 {
        altitudes.push(h);
        h += params.step;
    }
    let top = *altitudes.last().unwrap_or(&params.base_altitude);
    let span = (top - params.base_altitude).max(f64::EPSILON);

    let mut poses = Vec::new();
    for &alt in &altitudes {
        let t = (alt - params.base_altitude) / span;
        let radius = params.radius_low + t * (params.radius_high - params.radius_low);
        for k in 0..params.poses_per_ring {
            let theta = std::f64::consts::TAU * k as f64 / params.poses_per_ring as f64;
            let eye = Vector3::new(radius * theta.cos(), radius * theta.sin(), alt);
            if let Some(f) = accessible {
                if !f(&[eye.x, eye.y, eye.z]) {
                    continue;
                }
            }
            poses.push(aim(eye, Vector3::zeros())?);
        }
    }
    Ok(poses)
}

#[derive(Debug, Clone, Copy)]
pub struct SpiralParams {
    /// Horizontal distance from the building axis, meters.
    pub radius: f64,
    /// Total turns around the building over the descent.
    pub turns: f64,
    /// Number of cameras along the spiral.
    pub points: usize,
    /// Clearance above the rooftop at the start, meters.
    pub top_margin: f64,
    /// Altitude of the final camera, meters.
    pub min_altitude: f64,
}

impl Default for SpiralParams {
    fn default() -> Self {
        Self {
            radius: 80.0,
            turns: 3.0,
            points: 24,
            top_margin: 50.0,
            min_altitude: 30.0,
        }
    }
}

/// Descending spiral around a building centered on the origin.
///
/// Camera `i` of `n` sits at azimuth `i * turns * 360 / n` degrees and an
/// altitude interpolated from `building_height + top_margin` down to
/// `min_altitude`. Each camera looks at the building axis at its own
/// altitude, clamped to the rooftop, so high cameras frame the roof and low
/// cameras frame the facade.
pub fn building_spiral_plan(
    building_height: f64,
    params: &SpiralParams,
) -> Result<Vec<CameraPose>> {
    let start = building_height + params.top_margin;
    let n = params.points;
    let mut poses = Vec::with_capacity(n);
    for i in 0..n {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let azimuth = (params.turns * 360.0 * i as f64 / n as f64).to_radians();
        let alt = start + t * (params.min_altitude - start);
        let eye = Vector3::new(
            params.radius * azimuth.cos(),
            params.radius * azimuth.sin(),
            alt,
        );
        let target = Vector3::new(0.0, 0.0, alt.min(building_height));
        poses.push(aim(eye, target)?);
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn forward_error(pose: &CameraPose, target: Vector3<f64>) -> f64 {
        let want = (target - pose.position).normalize();
        (pose.forward() - want).norm()
    }

    #[test]
    fn top_pose_counts_and_geometry() {
        let params = TopPoseParams::default();
        let poses = top_pose_plan(&params).unwrap();
        assert_eq!(poses.len(), 16);
        for pose in &poses {
            assert_abs_diff_eq!(pose.position.z, 500.0);
            let r = pose.rotation;
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        }
        for pose in &poses[..8] {
            assert_abs_diff_eq!(
                pose.position.x.abs().max(pose.position.y.abs()),
                300.0
            );
            assert_abs_diff_eq!(forward_error(pose, Vector3::zeros()), 0.0, epsilon = 1e-12);
        }
        for pose in &poses[8..] {
            assert_abs_diff_eq!(pose.position.x.abs().max(pose.position.y.abs()), 50.0);
        }
    }

    #[test]
    fn inner_poses_aim_at_nearest_midpoint_with_x_axis_ties() {
        let params = TopPoseParams::default();
        let poses = top_pose_plan(&params).unwrap();
        // Inner ring order follows SQUARE_OFFSETS; first entry is the
        // (+50, +50) corner, equidistant to (300, 0) and (0, 300): the
        // x-axis midpoint must win.
        let corner = &poses[8];
        assert_abs_diff_eq!(
            forward_error(corner, Vector3::new(300.0, 0.0, 0.0)),
            0.0,
            epsilon = 1e-12
        );
        // The (0, +50) edge camera is strictly closer to (0, 300).
        let edge = &poses[9];
        assert_abs_diff_eq!(
            forward_error(edge, Vector3::new(0.0, 300.0, 0.0)),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ada_level_rings_cover_the_height_range() {
        let params = AdaLevelParams::default();
        // max 150: ceiling 375 covers rings at 75, 150, 225, 300, 375.
        let poses = ada_level_plan(150.0, &params, None).unwrap();
        assert_eq!(poses.len(), 5 * 6);
        let first_ring = &poses[..6];
        for p in first_ring {
            assert_abs_diff_eq!(p.position.z, 75.0);
            assert_abs_diff_eq!(p.position.xy().norm(), 300.0, epsilon = 1e-9);
        }
        let last_ring = &poses[24..];
        for p in last_ring {
            assert_abs_diff_eq!(p.position.z, 375.0);
            assert_abs_diff_eq!(p.position.xy().norm(), 50.0, epsilon = 1e-9);
            assert_abs_diff_eq!(forward_error(p, Vector3::zeros()), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ada_level_accessibility_filters_positions() {
        let params = AdaLevelParams::default();
        let all = ada_level_plan(0.0, &params, None).unwrap();
        let east_only = ada_level_plan(0.0, &params, Some(&|p: &[f64; 3]| p[0] > 0.0)).unwrap();
        assert!(east_only.len() < all.len());
        assert!(east_only.iter().all(|p| p.position.x > 0.0));
    }

    #[test]
    fn spiral_descends_and_wraps() {
        let params = SpiralParams::default();
        let poses = building_spiral_plan(100.0, &params).unwrap();
        assert_eq!(poses.len(), 24);
        assert_abs_diff_eq!(poses[0].position.z, 150.0);
        assert_abs_diff_eq!(poses[23].position.z, 30.0);
        for w in poses.windows(2) {
            assert!(w[1].position.z < w[0].position.z);
        }
        for p in &poses {
            assert_abs_diff_eq!(p.position.xy().norm(), 80.0, epsilon = 1e-9);
        }
        // Azimuth advances by turns * 360 / points = 45 degrees per step.
        let a0 = poses[0].position.y.atan2(poses[0].position.x);
        let a1 = poses[1].position.y.atan2(poses[1].position.x);
        assert_abs_diff_eq!(a1 - a0, 45f64.to_radians(), epsilon = 1e-9);
        // Below the rooftop the camera looks at its own altitude.
        let low = &poses[23];
        assert_abs_diff_eq!(
            forward_error(low, Vector3::new(0.0, 0.0, 30.0)),
            0.0,
            epsilon = 1e-12
        );
        // Above the rooftop it is clamped to the roof.
        let high = &poses[0];
        assert_abs_diff_eq!(
            forward_error(high, Vector3::new(0.0, 0.0, 100.0)),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn plans_are_deterministic() {
        let a = top_pose_plan(&TopPoseParams::default()).unwrap();
        let b = top_pose_plan(&TopPoseParams::default()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.position, y.position);
            assert_eq!(x.rotation, y.rotation);
        }
    }
}
