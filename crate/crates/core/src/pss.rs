//! Sparse pixel-shuffle upsampling and structure prediction helpers.
//!
//! Coarse-to-fine structure growth works on candidate children: every
//! occupied parent proposes its full block of children (a pseudo sparse
//! grid), a predictor scores each candidate, and pruning keeps the
//! candidates whose score clears a threshold. Feature volume moves across
//! resolutions with a sparse pixel shuffle: a parent's channel vector is
//! split into one block per child, so channel count trades against spatial
//! resolution without losing values.

use crate::error::{Error, Result};
use crate::voxel::{Coord3, SparseVoxelGrid};

/// Candidate magnitude threshold for the latent validity filter.
pub const LATENT_MAGNITUDE_TAU: f32 = 0.3;
/// Fraction of channels that must clear the magnitude threshold.
pub const LATENT_KEEP_FRACTION: f32 = 0.5;

/// Rearranges channels into space: each child at offset `(dx, dy, dz)` of a
/// parent takes the parent's channel block `dx*r*r + dy*r + dz`, where `r`
/// is the factor. Channel count must divide evenly into `r^3` blocks.
pub fn sparse_pixel_shuffle(grid: &SparseVoxelGrid, factor: u32) -> Result<SparseVoxelGrid> {
    if factor == 0 {
        return Err(Error::InvalidParam("shuffle factor must be positive".into()));
    }
    let r = factor as usize;
    let blocks = r * r * r;
    let channels = grid.channels();
    if channels == 0 || channels % blocks != 0 {
        return Err(Error::ChannelMismatch {
            expected: blocks,
            actual: channels,
        });
    }
    let child_channels = channels / blocks;

    let f = factor as i32;
    let mut coords = Vec::with_capacity(grid.len() * blocks);
    let mut data = Vec::with_capacity(grid.len() * channels);
    for (i, c) in grid.coords().iter().enumerate() {
        let row = grid.feature_row(i).expect("channels checked above");
        for dx in 0..f {
            for dy in 0..f {
                for dz in 0..f {
                    coords.push(Coord3::new(c.x * f + dx, c.y * f + dy, c.z * f + dz));
                    let block = (dx * f * f + dy * f + dz) as usize;
                    data.extend_from_slice(
                        &row[block * child_channels..(block + 1) * child_channels],
                    );
                }
            }
        }
    }

    SparseVoxelGrid::canonicalize(
        coords,
        Some((child_channels, data)),
        grid.resolution()
            .checked_mul(factor)
            .ok_or_else(|| Error::InvalidParam("shuffled resolution overflows".into()))?,
        grid.voxel_size() / factor as f32,
        grid.is_unbounded(),
    )
}

/// Candidate children proposed by a parent grid: all `factor`^3 offsets of
/// every parent, in canonical order, each remembering which parent row it
/// came from.
#[derive(Debug, Clone)]
pub struct PseudoSparseGrid {
    candidates: SparseVoxelGrid,
    parent_index: Vec<usize>,
    factor: u32,
}

impl PseudoSparseGrid {
    pub fn candidates(&self) -> &SparseVoxelGrid {
        &self.candidates
    }

    /// Parent row (in the source grid's canonical order) of each candidate.
    pub fn parent_index(&self) -> &[usize] {
        &self.parent_index
    }

    pub fn factor(&self) -> u32 {
        self.factor
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Expands every parent into its `factor`^3 candidate children.
pub fn make_pseudo_grid(parents: &SparseVoxelGrid, factor: u32) -> Result<PseudoSparseGrid> {
    if factor == 0 {
        return Err(Error::InvalidParam("pseudo grid factor must be positive".into()));
    }
    let f = factor as i32;
    let blocks = (factor as usize).pow(3);
    let mut coords = Vec::with_capacity(parents.len() * blocks);
    let mut parent_index = Vec::with_capacity(parents.len() * blocks);
    // Parents are canonical, and distinct parents own disjoint, ordered
    // child ranges, so emitting offsets lexicographically keeps the
    // candidate list canonical without a sort.
    for (i, c) in parents.coords().iter().enumerate() {
        for dx in 0..f {
            for dy in 0..f {
                for dz in 0..f {
                    coords.push(Coord3::new(c.x * f + dx, c.y * f + dy, c.z * f + dz));
                    parent_index.push(i);
                }
            }
        }
    }
    let candidates = SparseVoxelGrid::canonicalize(
        coords,
        None,
        parents
            .resolution()
            .checked_mul(factor)
            .ok_or_else(|| Error::InvalidParam("candidate resolution overflows".into()))?,
        parents.voxel_size() / factor as f32,
        parents.is_unbounded(),
    )?;
    debug_assert_eq!(candidates.len(), parent_index.len());
    Ok(PseudoSparseGrid {
        candidates,
        parent_index,
        factor,
    })
}

/// Membership of each candidate in `target`: 1 when the target occupies
/// that cell, 0 otherwise. This is the supervision signal for a structure
/// predictor.
pub fn pseudo_labels(pseudo: &PseudoSparseGrid, target: &SparseVoxelGrid) -> Vec<u8> {
    pseudo
        .candidates
        .coords()
        .iter()
        .map(|&c| u8::from(target.contains(c)))
        .collect()
}

/// Keeps candidates whose logit is strictly above `threshold`.
pub fn prune_candidates(
    pseudo: &PseudoSparseGrid,
    logits: &[f32],
    threshold: f32,
) -> Result<SparseVoxelGrid> {
    if logits.len() != pseudo.len() {
        return Err(Error::LengthMismatch {
            what: "candidate logits",
            expected: pseudo.len(),
            actual: logits.len(),
        });
    }
    let coords: Vec<Coord3> = pseudo
        .candidates
        .coords()
        .iter()
        .zip(logits)
        .filter(|(_, &l)| l > threshold)
        .map(|(&c, _)| c)
        .collect();
    SparseVoxelGrid::canonicalize(
        coords,
        None,
        pseudo.candidates.resolution(),
        pseudo.candidates.voxel_size(),
        pseudo.candidates.is_unbounded(),
    )
}

/// Converts a dense occupancy raster into a sparse grid, keeping cells with
/// strictly positive values. `values` is a `resolution`^3 raster in
/// x-major, z-fastest order: `index = (x * L + y) * L + z`. Zeros and
/// negatives are both treated as empty.
pub fn coarse_threshold(
    values: &[f32],
    resolution: u32,
    voxel_size: f32,
) -> Result<SparseVoxelGrid> {
    let l = resolution as usize;
    let expected = l * l * l;
    if values.len() != expected {
        return Err(Error::LengthMismatch {
            what: "dense raster",
            expected,
            actual: values.len(),
        });
    }
    let mut coords = Vec::new();
    let mut idx = 0;
    for x in 0..l {
        for y in 0..l {
            for z in 0..l {
                if values[idx] > 0.0 {
                    coords.push(Coord3::new(x as i32, y as i32, z as i32));
                }
                idx += 1;
            }
        }
    }
    SparseVoxelGrid::canonicalize(coords, None, resolution, voxel_size, false)
}

/// Validity mask over latent rows: a voxel passes when strictly more than
/// `min_fraction` of its channels have magnitude strictly above `tau`.
///
/// With the default `tau = 0.3` and `min_fraction = 0.5`, a 32-channel row
/// needs at least 17 channels above threshold to survive.
pub fn latent_magnitude_filter(
    grid: &SparseVoxelGrid,
    tau: f32,
    min_fraction: f32,
) -> Result<Vec<bool>> {
    let channels = grid.channels();
    if channels == 0 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let required = min_fraction as f64 * channels as f64;
    Ok((0..grid.len())
        .map(|i| {
            let row = grid.feature_row(i).expect("channels checked above");
            let hot = row.iter().filter(|v| v.abs() > tau).count();
            hot as f64 > required
        })
        .collect())
}

/// Zeros the feature rows of voxels marked invalid; occupancy and valid
/// rows are untouched.
pub fn zero_invalid_features(grid: &SparseVoxelGrid, valid: &[bool]) -> Result<SparseVoxelGrid> {
    if valid.len() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "validity mask",
            expected: grid.len(),
            actual: valid.len(),
        });
    }
    let channels = grid.channels();
    if channels == 0 {
        return Ok(grid.clone());
    }
    let mut data = grid.features().expect("channels checked above").to_vec();
    for (i, &ok) in valid.iter().enumerate() {
        if !ok {
            data[i * channels..(i + 1) * channels].fill(0.0);
        }
    }
    grid.clone().with_features(channels, data)
}

/// Keeps only the voxels marked valid, carrying their feature rows along.
pub fn retain_valid(grid: &SparseVoxelGrid, valid: &[bool]) -> Result<SparseVoxelGrid> {
    if valid.len() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "validity mask",
            expected: grid.len(),
            actual: valid.len(),
        });
    }
    let indices: Vec<usize> = (0..grid.len()).filter(|&i| valid[i]).collect();
    Ok(grid.select_rows(&indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::voxel::downsample_coords;

    #[test]
    fn shuffle_maps_channel_blocks_to_offsets() {
        // One parent with 8 channels, factor 2: child (dx,dy,dz) takes the
        // single channel 4*dx + 2*dy + dz.
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(1, 0, 1)],
            Some((8, (0..8).map(|v| v as f32).collect())),
            4,
            1.0,
            false,
        )
        .unwrap();
        let up = sparse_pixel_shuffle(&grid, 2).unwrap();
        assert_eq!(up.len(), 8);
        assert_eq!(up.channels(), 1);
        assert_eq!(up.resolution(), 8);
        for dx in 0..2 {
            for dy in 0..2 {
                for dz in 0..2 {
                    let child = Coord3::new(2 + dx, dy, 2 + dz);
                    let row = up.position_of(child).unwrap();
                    let want = (4 * dx + 2 * dy + dz) as f32;
                    assert_eq!(up.feature_row(row).unwrap(), &[want]);
                }
            }
        }
    }

    #[test]
    fn shuffle_keeps_multi_channel_blocks_contiguous() {
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 0)],
            Some((16, (0..16).map(|v| v as f32).collect())),
            2,
            1.0,
            false,
        )
        .unwrap();
        let up = sparse_pixel_shuffle(&grid, 2).unwrap();
        assert_eq!(up.channels(), 2);
        let row = up.position_of(Coord3::new(1, 0, 1)).unwrap(); // block 5
        assert_eq!(up.feature_row(row).unwrap(), &[10.0, 11.0]);
    }

    #[test]
    fn shuffle_rejects_odd_channel_counts() {
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 0)],
            Some((6, vec![0.0; 6])),
            2,
            1.0,
            false,
        )
        .unwrap();
        assert!(matches!(
            sparse_pixel_shuffle(&grid, 2),
            Err(Error::ChannelMismatch { .. })
        ));
        let featureless = SparseVoxelGrid::from_coords(vec![Coord3::new(0, 0, 0)], 2, 1.0).unwrap();
        assert!(sparse_pixel_shuffle(&featureless, 2).is_err());
    }

    #[test]
    fn pseudo_grid_expands_every_parent() {
        let parents = SparseVoxelGrid::from_coords(
            vec![Coord3::new(0, 0, 0), Coord3::new(1, 1, 1)],
            4,
            1.0,
        )
        .unwrap();
        let pseudo = make_pseudo_grid(&parents, 2).unwrap();
        assert_eq!(pseudo.len(), 16);
        assert_eq!(pseudo.candidates().resolution(), 8);
        // Candidates are canonical and each knows its parent row.
        for (i, &c) in pseudo.candidates().coords().iter().enumerate() {
            let parent = c.parent(2);
            assert_eq!(parents.coords()[pseudo.parent_index()[i]], parent);
            if i > 0 {
                assert!(pseudo.candidates().coords()[i - 1] < c);
            }
        }
    }

    #[test]
    fn labels_mark_target_membership() {
        let parents = SparseVoxelGrid::from_coords(vec![Coord3::new(0, 0, 0)], 2, 1.0).unwrap();
        let pseudo = make_pseudo_grid(&parents, 2).unwrap();
        let target = SparseVoxelGrid::from_coords(
            vec![Coord3::new(0, 0, 0), Coord3::new(1, 1, 0)],
            4,
            0.5,
        )
        .unwrap();
        let labels = pseudo_labels(&pseudo, &target);
        let want: Vec<u8> = pseudo
            .candidates()
            .coords()
            .iter()
            .map(|&c| u8::from(c == Coord3::new(0, 0, 0) || c == Coord3::new(1, 1, 0)))
            .collect();
        assert_eq!(labels, want);
        assert_eq!(labels.iter().map(|&v| v as usize).sum::<usize>(), 2);
    }

    #[test]
    fn prune_is_strictly_greater_than() {
        let parents = SparseVoxelGrid::from_coords(vec![Coord3::new(0, 0, 0)], 2, 1.0).unwrap();
        let pseudo = make_pseudo_grid(&parents, 2).unwrap();
        let logits = [0.0, 0.5, -0.1, 0.0, 1.0, 0.0, 0.0, f32::EPSILON];
        let kept = prune_candidates(&pseudo, &logits, 0.0).unwrap();
        assert_eq!(kept.len(), 3); // 0.5, 1.0, epsilon; exact zeros dropped
        assert!(prune_candidates(&pseudo, &logits[..3], 0.0).is_err());
    }

    #[test]
    fn labels_plus_prune_reconstruct_target_exactly() {
        let mut rng = SeededRng::new(11);
        for _ in 0..20 {
            let n = 1 + rng.index(60);
            let coords: Vec<Coord3> = (0..n)
                .map(|_| Coord3::new(rng.range_i32(0, 15), rng.range_i32(0, 15), rng.range_i32(0, 15)))
                .collect();
            let target = SparseVoxelGrid::from_coords(coords, 16, 1.0).unwrap();
            let parents = downsample_coords(&target, 2).unwrap();
            let pseudo = make_pseudo_grid(&parents, 2).unwrap();
            let logits: Vec<f32> = pseudo_labels(&pseudo, &target)
                .iter()
                .map(|&l| if l == 1 { 1.0 } else { -1.0 })
                .collect();
            let rebuilt = prune_candidates(&pseudo, &logits, 0.0).unwrap();
            assert_eq!(rebuilt.coords(), target.coords());
        }
    }

    #[test]
    fn coarse_threshold_uses_z_fastest_layout() {
        let l = 3u32;
        let mut values = vec![0.0f32; 27];
        values[(2 * 3 + 1) * 3 + 0] = 0.7; // (2, 1, 0)
        values[(0 * 3 + 0) * 3 + 2] = 1.0; // (0, 0, 2)
        values[(1 * 3 + 1) * 3 + 1] = -3.0; // negative: stays empty
        values[(1 * 3 + 2) * 3 + 2] = 0.0; // exact zero: stays empty
        let grid = coarse_threshold(&values, l, 1.0).unwrap();
        assert_eq!(grid.coords(), &[Coord3::new(0, 0, 2), Coord3::new(2, 1, 0)]);
        assert!(coarse_threshold(&values[..26], l, 1.0).is_err());
    }

    #[test]
    fn magnitude_filter_needs_a_strict_channel_majority() {
        // 32 channels: exactly 16 hot fails, 17 passes. Sign must not matter.
        for hot in 0..=32usize {
            let mut row = vec![0.0f32; 32];
            for (i, v) in row.iter_mut().enumerate().take(hot) {
                *v = if i % 2 == 0 { 0.31 } else { -0.31 };
            }
            let grid = SparseVoxelGrid::canonicalize(
                vec![Coord3::new(0, 0, 0)],
                Some((32, row)),
                2,
                1.0,
                false,
            )
            .unwrap();
            let mask =
                latent_magnitude_filter(&grid, LATENT_MAGNITUDE_TAU, LATENT_KEEP_FRACTION).unwrap();
            assert_eq!(mask[0], hot > 16, "hot = {hot}");
        }
    }

    #[test]
    fn magnitude_filter_threshold_is_strict() {
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 0)],
            Some((2, vec![0.3, 0.3])),
            2,
            1.0,
            false,
        )
        .unwrap();
        // |0.3| is not strictly above tau = 0.3, so zero channels are hot.
        let mask = latent_magnitude_filter(&grid, 0.3, 0.5).unwrap();
        assert!(!mask[0]);
    }

    #[test]
    fn zero_invalid_and_retain_valid() {
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 0), Coord3::new(1, 0, 0)],
            Some((2, vec![1.0, 2.0, 3.0, 4.0])),
            4,
            1.0,
            false,
        )
        .unwrap();
        let zeroed = zero_invalid_features(&grid, &[false, true]).unwrap();
        assert_eq!(zeroed.features().unwrap(), &[0.0, 0.0, 3.0, 4.0]);
        assert_eq!(zeroed.coords(), grid.coords());

        let kept = retain_valid(&grid, &[false, true]).unwrap();
        assert_eq!(kept.coords(), &[Coord3::new(1, 0, 0)]);
        assert_eq!(kept.features().unwrap(), &[3.0, 4.0]);

        assert!(zero_invalid_features(&grid, &[true]).is_err());
        assert!(retain_valid(&grid, &[true]).is_err());
    }
}
