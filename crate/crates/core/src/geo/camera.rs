//! Camera poses, pinhole intrinsics, and pose JSON interchange.
//!
//! Poses are world-from-camera with the camera looking down its local `-z`
//! axis, `+y` up, `+x` right. `rotation` columns are the camera axes
//! expressed in world coordinates.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl CameraPose {
    /// Unit vector the camera looks along (world space).
    pub fn forward(&self) -> Vector3<f64> {
        -self.rotation.column(2)
    }

    pub fn right(&self) -> Vector3<f64> {
        self.rotation.column(0).into()
    }

    pub fn up(&self) -> Vector3<f64> {
        self.rotation.column(1).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

/// Pose with the camera at `eye` looking at `target`.
///
/// `up` is a reference direction; the true camera up is re-orthogonalized.
/// Fails when `target` coincides with `eye` or the view direction is
/// parallel to `up`.
pub fn look_at(
    eye: Vector3<f64>,
    target: Vector3<f64>,
    up: Vector3<f64>,
) -> Result<CameraPose> {
    let forward = target - eye;
    let norm = forward.norm();
    if norm < 1e-12 {
        return Err(Error::DegenerateFrame("look_at target coincides with eye".into()));
    }
    let f = forward / norm;
    let side = f.cross(&up);
    let side_norm = side.norm();
    if side_norm < 1e-9 {
        return Err(Error::DegenerateFrame(
            "look_at view direction is parallel to up".into(),
        ));
    }
    let s = side / side_norm;
    let u = s.cross(&f);
    Ok(CameraPose {
        position: eye,
        rotation: Matrix3::from_columns(&[s, u, -f]),
    })
}

/// Lifts pixel `(u, v)` at `depth` meters into world space:
/// `p_cam = ((u - cx)/fx * d, (v - cy)/fy * d, -d)`, then the pose maps it
/// to the world. The pixel must lie inside the image.
pub fn unproject(
    pose: &CameraPose,
    intrinsics: &Intrinsics,
    u: f64,
    v: f64,
    depth: f64,
) -> Result<Vector3<f64>> {
    if u < 0.0 || v < 0.0 || u >= intrinsics.width as f64 || v >= intrinsics.height as f64 {
        return Err(Error::PixelOutOfRange {
            u: u.floor() as i64,
            v: v.floor() as i64,
            width: intrinsics.width as usize,
            height: intrinsics.height as usize,
        });
    }
    let p_cam = Vector3::new(
        (u - intrinsics.cx) / intrinsics.fx * depth,
        (v - intrinsics.cy) / intrinsics.fy * depth,
        -depth,
    );
    Ok(pose.rotation * p_cam + pose.position)
}

/// JSON record for one camera: pose plus intrinsics, rotation in row-major
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub position: [f64; 3],
    pub rotation: [f64; 9],
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraRecord {
    pub fn from_pose(pose: &CameraPose, intrinsics: &Intrinsics) -> Self {
        let r = &pose.rotation;
        Self {
            position: [pose.position.x, pose.position.y, pose.position.z],
            rotation: [
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
            ],
            fx: intrinsics.fx,
            fy: intrinsics.fy,
            cx: intrinsics.cx,
            cy: intrinsics.cy,
            width: intrinsics.width,
            height: intrinsics.height,
        }
    }

    /// Splits the record back into pose and intrinsics, validating that the
    /// stored matrix is a proper rotation.
    pub fn to_pose(&self) -> Result<(CameraPose, Intrinsics)> {
        let r = &self.rotation;
        let rotation = Matrix3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]);
        let err = (rotation * rotation.transpose() - Matrix3::identity()).norm();
        if err > 1e-6 || (rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::DegenerateFrame(format!(
                "stored matrix is not a rotation (orthonormality error {err:.2e})"
            )));
        }
        Ok((
            CameraPose {
                position: Vector3::new(self.position[0], self.position[1], self.position[2]),
                rotation,
            },
            Intrinsics {
                fx: self.fx,
                fy: self.fy,
                cx: self.cx,
                cy: self.cy,
                width: self.width,
                height: self.height,
            },
        ))
    }
}

/// Writes camera records as a pretty-printed JSON array, whole buffer at
/// once.
pub fn write_camera_json(records: &[CameraRecord], path: impl AsRef<Path>) -> Result<()> {
    let body = serde_json::to_string_pretty(records)
        .map_err(|e| Error::Format(format!("camera serialization: {e}")))?;
    std::fs::write(path, body)?;
    Ok(())
}

pub fn read_camera_json(path: impl AsRef<Path>) -> Result<Vec<CameraRecord>> {
    let body = std::fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(|e| Error::Format(format!("camera parse: {e}")))
}
