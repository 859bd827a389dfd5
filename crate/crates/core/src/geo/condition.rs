//! Projection of observations into condition voxel grids.
//!
//! Generation can be conditioned on partial geometry (voxels lifted from a
//! depth map) or on a semantic ground plan (class ids lifted to a single
//! dummy height, then replicated across the latent z range).

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geo::camera::{unproject, CameraPose, Intrinsics};
use crate::voxel::{Coord3, SparseVoxelGrid};

/// Voxelizes a depth map: every pixel with finite positive depth is lifted
/// to world space (sampling at pixel centers) and binned by flooring each
/// coordinate over `voxel_size`. The result is unbounded with a nominal
/// `resolution`.
pub fn depth_to_condition_voxels(
    depth: &[f32],
    intrinsics: &Intrinsics,
    pose: &CameraPose,
    voxel_size: f32,
    resolution: u32,
) -> Result<SparseVoxelGrid> {
    let (w, h) = (intrinsics.width as usize, intrinsics.height as usize);
    if depth.len() != w * h {
        return Err(Error::LengthMismatch {
            what: "depth map",
            expected: w * h,
            actual: depth.len(),
        });
    }
    if !(voxel_size > 0.0) {
        return Err(Error::InvalidParam("voxel size must be positive".into()));
    }
    let vs = voxel_size as f64;
    let mut coords = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let d = depth[v * w + u];
            if !d.is_finite() || d <= 0.0 {
                continue;
            }
            let p = unproject(
                pose,
                intrinsics,
                u as f64 + 0.5,
                v as f64 + 0.5,
                d as f64,
            )?;
            coords.push(Coord3::new(
                (p.x / vs).floor() as i32,
                (p.y / vs).floor() as i32,
                (p.z / vs).floor() as i32,
            ));
        }
    }
    SparseVoxelGrid::canonicalize(coords, None, resolution, voxel_size, true)
}

/// Lifts an `L x L` semantic map onto the plane `z = L / 2`. Pixel
/// `(row, col)` becomes voxel `(col, row, L/2)` carrying its class id as a
/// single feature channel; id 0 (unlabeled) is skipped.
pub fn lift_semantic_plane(
    ids: &[u8],
    resolution: u32,
    voxel_size: f32,
) -> Result<SparseVoxelGrid> {
    let l = resolution as usize;
    if ids.len() != l * l {
        return Err(Error::LengthMismatch {
            what: "semantic map",
            expected: l * l,
            actual: ids.len(),
        });
    }
    let z = (resolution / 2) as i32;
    let mut coords = Vec::new();
    let mut feats = Vec::new();
    for row in 0..l {
        for col in 0..l {
            let id = ids[row * l + col];
            if id == 0 {
                continue;
            }
            coords.push(Coord3::new(col as i32, row as i32, z));
            feats.push(id as f32);
        }
    }
    SparseVoxelGrid::canonicalize(coords, Some((1, feats)), resolution, voxel_size, false)
}

/// Replicates every voxel of a condition plane across z layers `0..layers`,
/// carrying its feature row into every copy. Voxels sharing an `(x, y)`
/// column collapse to the first one's features.
pub fn expand_condition_plane(plane: &SparseVoxelGrid, layers: u32) -> Result<SparseVoxelGrid> {
    if layers == 0 {
        return Err(Error::InvalidParam("layer count must be positive".into()));
    }
    let channels = plane.channels();
    let mut coords = Vec::with_capacity(plane.len() * layers as usize);
    let mut feats = (channels > 0).then(|| Vec::with_capacity(coords.capacity() * channels));
    for (i, c) in plane.coords().iter().enumerate() {
        for z in 0..layers as i32 {
            coords.push(Coord3::new(c.x, c.y, z));
            if let Some(data) = feats.as_mut() {
                data.extend_from_slice(plane.feature_row(i).expect("channels > 0"));
            }
        }
    }
    SparseVoxelGrid::canonicalize(
        coords,
        feats.map(|data| (channels, data)),
        plane.resolution(),
        plane.voxel_size(),
        plane.is_unbounded(),
    )
}

/// Convenience for straight-down depth captures in tests and tools.
pub fn nadir_pose(x: f64, y: f64, altitude: f64) -> CameraPose {
    crate::geo::camera::look_at(
        Vector3::new(x, y, altitude),
        Vector3::new(x, y, 0.0),
        Vector3::y(),
    )
    .expect("nadir frame is never degenerate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_intrinsics() -> Intrinsics {
        Intrinsics {
            fx: 2.0,
            fy: 2.0,
            cx: 1.0,
            cy: 1.0,
            width: 2,
            height: 2,
        }
    }

    #[test]
    fn depth_pixels_land_in_expected_voxels() {
        let intr = unit_intrinsics();
        let pose = nadir_pose(0.0, 0.0, 10.0);
        // Pixel centers are at +-0.5 around the principal point; with
        // fx = 2 and depth 4 each offsets the ray by 1 m in camera x/y.
        let depth = vec![4.0f32, 4.0, -1.0, f32::NAN];
        let grid = depth_to_condition_voxels(&depth, &intr, &pose, 1.0, 64).unwrap();
        assert!(grid.is_unbounded());
        assert_eq!(grid.len(), 2);
        // This nadir frame has identity rotation, so world = camera + eye.
        // Pixels (0,0) and (0,1) offset by (-1,-1) and (+1,-1) at z = 6.
        assert!(grid.contains(Coord3::new(-1, -1, 6)));
        assert!(grid.contains(Coord3::new(1, -1, 6)));

        let err = depth_to_condition_voxels(&depth[..3], &intr, &pose, 1.0, 64);
        assert!(err.is_err());
    }

    #[test]
    fn depth_voxelization_floors_per_axis() {
        let intr = Intrinsics {
            fx: 1.0,
            fy: 1.0,
            cx: 0.5,
            cy: 0.5,
            width: 1,
            height: 1,
        };
        let pose = nadir_pose(0.3, 0.3, 1.0);
        let grid = depth_to_condition_voxels(&[0.25], &intr, &pose, 0.5, 16).unwrap();
        // Surface point is (0.3, 0.3, 0.75): floor over 0.5 gives (0,0,1).
        assert_eq!(grid.coords(), &[Coord3::new(0, 0, 1)]);
    }

    #[test]
    fn semantic_plane_sits_at_half_height() {
        let l = 4u32;
        let mut ids = vec![0u8; 16];
        ids[0] = 3; // row 0, col 0
        ids[2 * 4 + 1] = 25; // row 2, col 1
        let plane = lift_semantic_plane(&ids, l, 0.56).unwrap();
        assert_eq!(plane.len(), 2);
        assert_eq!(plane.channels(), 1);
        let i = plane.position_of(Coord3::new(0, 0, 2)).unwrap();
        assert_abs_diff_eq!(plane.feature_row(i).unwrap()[0], 3.0);
        let i = plane.position_of(Coord3::new(1, 2, 2)).unwrap();
        assert_abs_diff_eq!(plane.feature_row(i).unwrap()[0], 25.0);
        assert!(lift_semantic_plane(&ids[..15], l, 0.56).is_err());
    }

    #[test]
    fn expansion_replicates_columns() {
        let plane = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 2), Coord3::new(3, 1, 2)],
            Some((1, vec![7.0, 9.0])),
            8,
            1.0,
            false,
        )
        .unwrap();
        let full = expand_condition_plane(&plane, 4).unwrap();
        assert_eq!(full.len(), 8);
        for z in 0..4 {
            let i = full.position_of(Coord3::new(0, 0, z)).unwrap();
            assert_eq!(full.feature_row(i).unwrap(), &[7.0]);
            let i = full.position_of(Coord3::new(3, 1, z)).unwrap();
            assert_eq!(full.feature_row(i).unwrap(), &[9.0]);
        }
        assert!(expand_condition_plane(&plane, 0).is_err());
    }

    #[test]
    fn expansion_collapses_shared_columns_to_first() {
        let plane = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(1, 1, 0), Coord3::new(1, 1, 5)],
            Some((1, vec![2.0, 4.0])),
            8,
            1.0,
            false,
        )
        .unwrap();
        let full = expand_condition_plane(&plane, 2).unwrap();
        assert_eq!(full.len(), 2);
        let i = full.position_of(Coord3::new(1, 1, 0)).unwrap();
        assert_eq!(full.feature_row(i).unwrap(), &[2.0]);
    }
}
