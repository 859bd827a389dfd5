//! Binary morphology with a cubic structuring element.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::voxel::{Coord3, SparseVoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphMode {
    Dilate,
    Erode,
}

/// Dilates or erodes the occupancy set with a full `kernel`^3 cube.
///
/// `kernel` must be odd. Dilation is the Minkowski sum with the cube;
/// erosion keeps a voxel only when its whole cube neighborhood is occupied,
/// treating cells outside the set (including cells beyond a bounded grid's
/// range) as empty. On bounded grids dilation output is clipped back to
/// `[0, resolution)`. Features are dropped: this is an occupancy transform.
pub fn morph(grid: &SparseVoxelGrid, kernel: u32, mode: MorphMode) -> Result<SparseVoxelGrid> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::InvalidParam(format!(
            "morphology kernel must be odd, got {kernel}"
        )));
    }
    let r = (kernel / 2) as i32;

    let out = match mode {
        MorphMode::Dilate => {
            let mut set = HashSet::with_capacity(grid.len() * kernel.pow(3) as usize);
            for &c in grid.coords() {
                for dx in -r..=r {
                    for dy in -r..=r {
                        for dz in -r..=r {
                            set.insert(Coord3::new(c.x + dx, c.y + dy, c.z + dz));
                        }
                    }
                }
            }
            let mut coords: Vec<Coord3> = if grid.is_unbounded() {
                set.into_iter().collect()
            } else {
                let limit = grid.resolution() as i32;
                set.into_iter()
                    .filter(|c| {
                        [c.x, c.y, c.z].iter().all(|&v| v >= 0 && v < limit)
                    })
                    .collect()
            };
            coords.sort_unstable();
            coords
        }
        MorphMode::Erode => {
            let set: HashSet<Coord3> = grid.coords().iter().copied().collect();
            grid.coords()
                .iter()
                .copied()
                .filter(|c| {
                    for dx in -r..=r {
                        for dy in -r..=r {
                            for dz in -r..=r {
                                if !set.contains(&Coord3::new(c.x + dx, c.y + dy, c.z + dz)) {
                                    return false;
                                }
                            }
                        }
                    }
                    true
                })
                .collect()
        }
    };

    SparseVoxelGrid::canonicalize(
        out,
        None,
        grid.resolution(),
        grid.voxel_size(),
        grid.is_unbounded(),
    )
}
