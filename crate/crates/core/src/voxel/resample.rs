//! Resolution transforms between grid levels.
//!
//! All three transforms are coordinate-level: features do not survive a
//! resolution change here (feature-aware upsampling lives in the pixel
//! shuffle module).

use crate::error::{Error, Result};
use crate::voxel::{Coord3, SparseVoxelGrid};

fn check_factor(factor: u32) -> Result<()> {
    if factor == 0 {
        return Err(Error::InvalidParam("resample factor must be positive".into()));
    }
    Ok(())
}

/// Maps every coordinate to its parent cell (floor division by `factor`,
/// toward negative infinity) and deduplicates. The result resolution is
/// `ceil(resolution / factor)`.
pub fn downsample_coords(grid: &SparseVoxelGrid, factor: u32) -> Result<SparseVoxelGrid> {
    check_factor(factor)?;
    let coords: Vec<Coord3> = grid.coords().iter().map(|c| c.parent(factor)).collect();
    SparseVoxelGrid::canonicalize(
        coords,
        None,
        grid.resolution().div_ceil(factor),
        grid.voxel_size() * factor as f32,
        grid.is_unbounded(),
    )
}

/// Replaces every coordinate with its full `factor`^3 block of children at
/// `factor * c + offset`. The result resolution is `resolution * factor`.
pub fn upsample_coords(grid: &SparseVoxelGrid, factor: u32) -> Result<SparseVoxelGrid> {
    check_factor(factor)?;
    let f = factor as i32;
    let mut coords = Vec::with_capacity(grid.len() * (factor as usize).pow(3));
    for c in grid.coords() {
        for dx in 0..f {
            for dy in 0..f {
                for dz in 0..f {
                    coords.push(Coord3::new(c.x * f + dx, c.y * f + dy, c.z * f + dz));
                }
            }
        }
    }
    SparseVoxelGrid::canonicalize(
        coords,
        None,
        grid.resolution()
            .checked_mul(factor)
            .ok_or_else(|| Error::InvalidParam("upsampled resolution overflows".into()))?,
        grid.voxel_size() / factor as f32,
        grid.is_unbounded(),
    )
}

/// Downsample then upsample by the same factor: snaps occupancy to blocks
/// of `factor`^3. The result resolution is `ceil(resolution / factor) *
/// factor`, the smallest multiple of `factor` covering the input range.
pub fn simplify(grid: &SparseVoxelGrid, factor: u32) -> Result<SparseVoxelGrid> {
    upsample_coords(&downsample_coords(grid, factor)?, factor)
}
