//! Stochastic structure augmentations.
//!
//! These mimic the defects of reconstructed scenes (jitter, blockiness,
//! missing facades) and the bookkeeping edits (flips, crops) that must keep
//! camera poses consistent with the voxels. Every random choice draws from
//! a caller-supplied [`SeededRng`] in a documented order, so a seed pins
//! the output exactly.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geo::CameraPose;
use crate::rng::SeededRng;
use crate::voxel::{morph, simplify, Coord3, MorphMode, SparseVoxelGrid};

/// Offset range for [`jagged_perturb`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JaggedMode {
    /// Offsets drawn uniformly from `{-1, 0, 1}` per axis.
    Symmetric,
    /// Offsets drawn uniformly from `{-1, 0}` per axis.
    NonPositive,
}

/// Jitters every voxel by an independent per-axis offset.
///
/// Draws happen in canonical voxel order, axes x then y then z. Collisions
/// keep the first-moved voxel's feature row; on bounded grids, voxels
/// pushed outside `[0, resolution)` are dropped. Every surviving voxel is
/// within Chebyshev distance 1 of its source.
pub fn jagged_perturb(
    grid: &SparseVoxelGrid,
    mode: JaggedMode,
    rng: &mut SeededRng,
) -> Result<SparseVoxelGrid> {
    let hi = match mode {
        JaggedMode::Symmetric => 1,
        JaggedMode::NonPositive => 0,
    };
    let limit = grid.resolution() as i32;
    let channels = grid.channels();
    let mut coords = Vec::with_capacity(grid.len());
    let mut feats = (channels > 0).then(|| Vec::with_capacity(grid.len() * channels));
    for (i, c) in grid.coords().iter().enumerate() {
        let moved = Coord3::new(
            c.x + rng.range_i32(-1, hi),
            c.y + rng.range_i32(-1, hi),
            c.z + rng.range_i32(-1, hi),
        );
        if !grid.is_unbounded() {
            let inside = [moved.x, moved.y, moved.z].iter().all(|&v| v >= 0 && v < limit);
            if !inside {
                continue;
            }
        }
        coords.push(moved);
        if let Some(data) = feats.as_mut() {
            data.extend_from_slice(grid.feature_row(i).expect("channels > 0"));
        }
    }
    SparseVoxelGrid::canonicalize(
        coords,
        feats.map(|data| (channels, data)),
        grid.resolution(),
        grid.voxel_size(),
        grid.is_unbounded(),
    )
}

/// Coarsens structure: dilate with a `dilate_kernel` cube, then snap
/// occupancy to `simplify_factor` blocks.
///
/// Voxels already in the input keep their feature rows; voxels the
/// roughening adds get zero rows. Bounded inputs are clipped back to
/// `[0, resolution)` and keep their resolution.
pub fn roughen(
    grid: &SparseVoxelGrid,
    dilate_kernel: u32,
    simplify_factor: u32,
) -> Result<SparseVoxelGrid> {
    let blocky = simplify(&morph(grid, dilate_kernel, MorphMode::Dilate)?, simplify_factor)?;
    let limit = grid.resolution() as i32;
    let coords: Vec<Coord3> = if grid.is_unbounded() {
        blocky.coords().to_vec()
    } else {
        blocky
            .coords()
            .iter()
            .copied()
            .filter(|c| [c.x, c.y, c.z].iter().all(|&v| v >= 0 && v < limit))
            .collect()
    };

    let channels = grid.channels();
    let features = (channels > 0).then(|| {
        let mut data = Vec::with_capacity(coords.len() * channels);
        for c in &coords {
            match grid.position_of(*c) {
                Some(row) => data.extend_from_slice(grid.feature_row(row).expect("channels > 0")),
                None => data.extend(std::iter::repeat_n(0.0, channels)),
            }
        }
        (channels, data)
    });
    SparseVoxelGrid::canonicalize(
        coords,
        features,
        grid.resolution(),
        grid.voxel_size(),
        grid.is_unbounded(),
    )
}

/// Symmetric 2x2 eigenvectors of the uncentered scatter of the normals'
/// horizontal components: the two dominant facade directions.
fn horizontal_axes(normals: &[f32]) -> ([f64; 2], [f64; 2]) {
    let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
    for n in normals.chunks_exact(3) {
        let (x, y) = (n[0] as f64, n[1] as f64);
        a += x * x;
        b += x * y;
        c += y * y;
    }
    if b.abs() < 1e-12 {
        return ([1.0, 0.0], [0.0, 1.0]);
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    ([co, s], [-s, co])
}

/// Simulates a dropped facade.
///
/// One of the two dominant horizontal directions of the per-voxel normals
/// is picked uniformly and perturbed by up to +-5 degrees. Voxels whose
/// unit normal has `|cosine|` strictly above `sigma` against that
/// direction are marked, the marked set is morphologically closed
/// (`close_kernel` cube), and the closure is removed from the grid.
///
/// Removal only ever applies to voxels facade-like enough that *some*
/// horizontal direction could have marked them (horizontal normal
/// component strictly above `sigma`). Closing can therefore sweep in
/// differently-oriented wall voxels that fill gaps, but voxels with
/// vertical or near-vertical normals (roofs, ground) always survive, even
/// when they sit inside a closed gap. Normals must be nonzero, three per
/// voxel.
pub fn normal_drop(
    grid: &SparseVoxelGrid,
    normals: &[f32],
    sigma: f32,
    close_kernel: u32,
    rng: &mut SeededRng,
) -> Result<SparseVoxelGrid> {
    if normals.len() != grid.len() * 3 {
        return Err(Error::LengthMismatch {
            what: "normals",
            expected: grid.len() * 3,
            actual: normals.len(),
        });
    }

    let (ax0, ax1) = horizontal_axes(normals);
    let base = if rng.index(2) == 0 { ax0 } else { ax1 };
    let jitter = rng.range_f64(-5.0, 5.0).to_radians();
    let (s, c) = jitter.sin_cos();
    let dir = [base[0] * c - base[1] * s, base[0] * s + base[1] * c];

    let mut marked = Vec::new();
    let mut eligible = vec![false; grid.len()];
    for (i, n) in normals.chunks_exact(3).enumerate() {
        let norm = (0..3).map(|k| (n[k] as f64).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParam(format!("normal {i} has zero or invalid norm")));
        }
        // The best |cosine| any horizontal direction can reach is the
        // normal's horizontal fraction; below sigma the voxel is
        // facade-proof and must never be removed.
        let horizontal = (n[0] as f64).hypot(n[1] as f64) / norm;
        eligible[i] = horizontal > sigma as f64;
        let cos = (n[0] as f64 * dir[0] + n[1] as f64 * dir[1]) / norm;
        if cos.abs() > sigma as f64 {
            marked.push(grid.coords()[i]);
        }
    }
    let marked = SparseVoxelGrid::canonicalize(
        marked,
        None,
        grid.resolution(),
        grid.voxel_size(),
        grid.is_unbounded(),
    )?;
    let closed = morph(&morph(&marked, close_kernel, MorphMode::Dilate)?, close_kernel, MorphMode::Erode)?;

    let keep: Vec<usize> = (0..grid.len())
        .filter(|&i| !eligible[i] || !closed.contains(grid.coords()[i]))
        .collect();
    Ok(grid.select_rows(&keep))
}

/// Horizontal mirror axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipAxis {
    X,
    Y,
}

/// Mirrors a bounded grid and its camera poses about the grid's central
/// plane on `axis`.
///
/// Voxels map as `c -> resolution - 1 - c` on the flipped axis (features
/// follow). World positions map through the mirror
/// `p -> F p + resolution * voxel_size * e_axis` with `F` the axis
/// reflection; rotations become `F R diag(-1, 1, 1)`, which stays a proper
/// rotation by also flipping the camera's x axis (the image mirrors
/// horizontally).
pub fn flip_with_pose(
    grid: &SparseVoxelGrid,
    poses: &[CameraPose],
    axis: FlipAxis,
) -> Result<(SparseVoxelGrid, Vec<CameraPose>)> {
    if grid.is_unbounded() {
        return Err(Error::UnboundedGrid("flip_with_pose"));
    }
    let l = grid.resolution() as i32;
    let coords: Vec<Coord3> = grid
        .coords()
        .iter()
        .map(|c| match axis {
            FlipAxis::X => Coord3::new(l - 1 - c.x, c.y, c.z),
            FlipAxis::Y => Coord3::new(c.x, l - 1 - c.y, c.z),
        })
        .collect();
    let channels = grid.channels();
    let flipped = SparseVoxelGrid::canonicalize(
        coords,
        grid.features().map(|f| (channels, f.to_vec())),
        grid.resolution(),
        grid.voxel_size(),
        false,
    )?;

    let extent = grid.resolution() as f64 * grid.voxel_size() as f64;
    let (f_diag, offset) = match axis {
        FlipAxis::X => (Vector3::new(-1.0, 1.0, 1.0), Vector3::new(extent, 0.0, 0.0)),
        FlipAxis::Y => (Vector3::new(1.0, -1.0, 1.0), Vector3::new(0.0, extent, 0.0)),
    };
    let f = Matrix3::from_diagonal(&f_diag);
    let cam_fix = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
    let new_poses = poses
        .iter()
        .map(|p| CameraPose {
            position: f * p.position + offset,
            rotation: f * p.rotation * cam_fix,
        })
        .collect();
    Ok((flipped, new_poses))
}

/// Crops `[min, max)` out of the grid and re-origins it, translating the
/// poses to match.
///
/// Kept voxels shift by `-min`; pose positions shift by
/// `-min * voxel_size`. The result resolution is the largest box side. On
/// bounded grids the box must lie inside `[0, resolution)`.
pub fn crop_with_pose(
    grid: &SparseVoxelGrid,
    box_min: Coord3,
    box_max: Coord3,
    poses: &[CameraPose],
) -> Result<(SparseVoxelGrid, Vec<CameraPose>)> {
    let sides = [
        box_max.x - box_min.x,
        box_max.y - box_min.y,
        box_max.z - box_min.z,
    ];
    if sides.iter().any(|&s| s <= 0) {
        return Err(Error::InvalidParam(format!(
            "empty crop box {box_min:?}..{box_max:?}"
        )));
    }
    if !grid.is_unbounded() {
        let l = grid.resolution() as i32;
        let min_ok = [box_min.x, box_min.y, box_min.z].iter().all(|&v| v >= 0);
        let max_ok = [box_max.x, box_max.y, box_max.z].iter().all(|&v| v <= l);
        if !min_ok || !max_ok {
            return Err(Error::OutOfBounds {
                x: box_min.x.min(box_max.x - l),
                y: box_min.y.min(box_max.y - l),
                z: box_min.z.min(box_max.z - l),
                resolution: grid.resolution(),
            });
        }
    }

    let inside = |c: &Coord3| {
        c.x >= box_min.x
            && c.x < box_max.x
            && c.y >= box_min.y
            && c.y < box_max.y
            && c.z >= box_min.z
            && c.z < box_max.z
    };
    let indices: Vec<usize> = (0..grid.len())
        .filter(|&i| inside(&grid.coords()[i]))
        .collect();
    let kept = grid.select_rows(&indices);
    let coords: Vec<Coord3> = kept
        .coords()
        .iter()
        .map(|c| Coord3::new(c.x - box_min.x, c.y - box_min.y, c.z - box_min.z))
        .collect();
    let channels = kept.channels();
    let cropped = SparseVoxelGrid::canonicalize(
        coords,
        kept.features().map(|f| (channels, f.to_vec())),
        sides.iter().copied().max().expect("three sides") as u32,
        grid.voxel_size(),
        false,
    )?;

    let vs = grid.voxel_size() as f64;
    let shift = Vector3::new(
        box_min.x as f64 * vs,
        box_min.y as f64 * vs,
        box_min.z as f64 * vs,
    );
    let new_poses = poses
        .iter()
        .map(|p| CameraPose {
            position: p.position - shift,
            rotation: p.rotation,
        })
        .collect();
    Ok((cropped, new_poses))
}

/// Zeros the feature rows of `count` voxels chosen without replacement
/// (all of them when `count` exceeds the grid). The grid must carry
/// features.
pub fn random_zero_condition(
    grid: &SparseVoxelGrid,
    count: usize,
    rng: &mut SeededRng,
) -> Result<SparseVoxelGrid> {
    let channels = grid.channels();
    if channels == 0 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let picked = rng.sample_indices(grid.len(), count.min(grid.len()));
    let mut data = grid.features().expect("channels > 0").to_vec();
    for i in picked {
        data[i * channels..(i + 1) * channels].fill(0.0);
    }
    grid.clone().with_features(channels, data)
}
