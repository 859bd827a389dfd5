//! Sparse voxel grids in canonical form.
//!
//! A grid is a set of integer coordinates, optionally carrying one f32
//! feature row per voxel. Canonical form means coordinates are strictly
//! ascending in lexicographic `(x, y, z)` order with no duplicates; every
//! constructor and operation in this crate preserves it, so grids compare
//! and merge cheaply.
//!
//! Bounded grids keep every coordinate inside `[0, resolution)` on each
//! axis. Unbounded grids (for example, voxelized sensor returns before any
//! scene framing) may hold arbitrary integer coordinates while retaining a
//! nominal resolution and voxel edge length in meters.

mod morph;
mod resample;
mod svox;

pub use morph::{morph, MorphMode};
pub use resample::{downsample_coords, simplify, upsample_coords};
pub use svox::{read_svox, svox_from_bytes, svox_to_bytes, write_svox};

use crate::error::{Error, Result};

/// Integer voxel coordinate. The derived ordering is the canonical
/// lexicographic `(x, y, z)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord3 {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Coord3 {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    /// Coordinate of the containing cell after dividing by `factor`,
    /// rounding toward negative infinity on every axis.
    pub fn parent(self, factor: u32) -> Self {
        let f = factor as i32;
        Self::new(self.x.div_euclid(f), self.y.div_euclid(f), self.z.div_euclid(f))
    }

    pub const fn as_array(self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[i32; 3]> for Coord3 {
    fn from(a: [i32; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FeatureMatrix {
    channels: usize,
    data: Vec<f32>,
}

/// Canonically ordered sparse voxel grid with optional per-voxel features.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVoxelGrid {
    coords: Vec<Coord3>,
    features: Option<FeatureMatrix>,
    resolution: u32,
    voxel_size: f32,
    unbounded: bool,
}

impl SparseVoxelGrid {
    /// Empty bounded grid.
    pub fn empty(resolution: u32, voxel_size: f32) -> Self {
        Self {
            coords: Vec::new(),
            features: None,
            resolution,
            voxel_size,
            unbounded: false,
        }
    }

    /// Builds a canonical grid from raw coordinates and optional features.
    ///
    /// Coordinates are deduplicated (first occurrence wins, along with its
    /// feature row) and sorted ascending. `features`, when present, is a
    /// row-major `coords.len() x channels` matrix. Bounded grids reject
    /// coordinates outside `[0, resolution)`.
    pub fn canonicalize(
        coords: Vec<Coord3>,
        features: Option<(usize, Vec<f32>)>,
        resolution: u32,
        voxel_size: f32,
        unbounded: bool,
    ) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidParam("resolution must be positive".into()));
        }
        if !(voxel_size > 0.0) {
            return Err(Error::InvalidParam("voxel size must be positive".into()));
        }
        if !unbounded {
            let limit = resolution as i64;
            for c in &coords {
                let inside = [c.x, c.y, c.z]
                    .iter()
                    .all(|&v| (v as i64) >= 0 && (v as i64) < limit);
                if !inside {
                    return Err(Error::OutOfBounds {
                        x: c.x,
                        y: c.y,
                        z: c.z,
                        resolution,
                    });
                }
            }
        }

        let feat = match features {
            None => None,
            Some((channels, data)) => {
                if channels == 0 {
                    return Err(Error::InvalidParam("feature channels must be positive".into()));
                }
                if data.len() % channels != 0 || data.len() / channels != coords.len() {
                    return Err(Error::FeatureMismatch {
                        rows: data.len() / channels.max(1),
                        coords: coords.len(),
                    });
                }
                Some(FeatureMatrix { channels, data })
            }
        };

        // Stable sort keeps the first occurrence of each duplicate in front.
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by_key(|&i| coords[i]);

        let mut out_coords = Vec::with_capacity(coords.len());
        let mut out_rows: Vec<usize> = Vec::with_capacity(coords.len());
        for &i in &order {
            if out_coords.last() != Some(&coords[i]) {
                out_coords.push(coords[i]);
                out_rows.push(i);
            }
        }

        let features = feat.map(|f| {
            let mut data = Vec::with_capacity(out_rows.len() * f.channels);
            for &i in &out_rows {
                data.extend_from_slice(&f.data[i * f.channels..(i + 1) * f.channels]);
            }
            FeatureMatrix {
                channels: f.channels,
                data,
            }
        });

        Ok(Self {
            coords: out_coords,
            features,
            resolution,
            voxel_size,
            unbounded,
        })
    }

    /// Canonical featureless bounded grid.
    pub fn from_coords(coords: Vec<Coord3>, resolution: u32, voxel_size: f32) -> Result<Self> {
        Self::canonicalize(coords, None, resolution, voxel_size, false)
    }

    /// Canonical featureless grid without bounds checks.
    pub fn from_coords_unbounded(
        coords: Vec<Coord3>,
        resolution: u32,
        voxel_size: f32,
    ) -> Result<Self> {
        Self::canonicalize(coords, None, resolution, voxel_size, true)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Coord3] {
        &self.coords
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn voxel_size(&self) -> f32 {
        self.voxel_size
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    /// Feature channels per voxel; 0 when the grid carries no features.
    pub fn channels(&self) -> usize {
        self.features.as_ref().map_or(0, |f| f.channels)
    }

    /// Row-major `len() x channels()` feature matrix, if present.
    pub fn features(&self) -> Option<&[f32]> {
        self.features.as_ref().map(|f| f.data.as_slice())
    }

    pub fn feature_row(&self, index: usize) -> Option<&[f32]> {
        let f = self.features.as_ref()?;
        Some(&f.data[index * f.channels..(index + 1) * f.channels])
    }

    /// Index of `coord` in canonical order, if occupied.
    pub fn position_of(&self, coord: Coord3) -> Option<usize> {
        self.coords.binary_search(&coord).ok()
    }

    pub fn contains(&self, coord: Coord3) -> bool {
        self.position_of(coord).is_some()
    }

    /// World-space center of a voxel, in meters.
    pub fn voxel_center(&self, coord: Coord3) -> [f64; 3] {
        let vs = self.voxel_size as f64;
        [
            (coord.x as f64 + 0.5) * vs,
            (coord.y as f64 + 0.5) * vs,
            (coord.z as f64 + 0.5) * vs,
        ]
    }

    /// Returns the same grid with `features` attached (row i belongs to
    /// coordinate i in canonical order).
    pub fn with_features(mut self, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidParam("feature channels must be positive".into()));
        }
        if data.len() % channels != 0 || data.len() / channels != self.coords.len() {
            return Err(Error::FeatureMismatch {
                rows: data.len() / channels,
                coords: self.coords.len(),
            });
        }
        self.features = Some(FeatureMatrix { channels, data });
        Ok(self)
    }

    /// Copy of the grid without features.
    pub fn without_features(&self) -> Self {
        Self {
            coords: self.coords.clone(),
            features: None,
            resolution: self.resolution,
            voxel_size: self.voxel_size,
            unbounded: self.unbounded,
        }
    }

    /// Keeps the voxels at `indices` (ascending, within range), carrying
    /// feature rows along.
    pub(crate) fn select_rows(&self, indices: &[usize]) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let coords = indices.iter().map(|&i| self.coords[i]).collect();
        let features = self.features.as_ref().map(|f| {
            let mut data = Vec::with_capacity(indices.len() * f.channels);
            for &i in indices {
                data.extend_from_slice(&f.data[i * f.channels..(i + 1) * f.channels]);
            }
            FeatureMatrix {
                channels: f.channels,
                data,
            }
        });
        Self {
            coords,
            features,
            resolution: self.resolution,
            voxel_size: self.voxel_size,
            unbounded: self.unbounded,
        }
    }
}

/// Occupancy-level set operation. Features are dropped; the result keeps
/// `a`'s voxel size, spans the larger of the two resolutions, and is
/// bounded only when both inputs are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersection,
    Difference,
}

pub fn set_op(a: &SparseVoxelGrid, b: &SparseVoxelGrid, op: SetOp) -> SparseVoxelGrid {
    let (mut i, mut j) = (0, 0);
    let (ac, bc) = (a.coords(), b.coords());
    let mut out = Vec::new();
    while i < ac.len() && j < bc.len() {
        match ac[i].cmp(&bc[j]) {
            std::cmp::Ordering::Less => {
                if matches!(op, SetOp::Union | SetOp::Difference) {
                    out.push(ac[i]);
                }
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                if matches!(op, SetOp::Union) {
                    out.push(bc[j]);
                }
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                if matches!(op, SetOp::Union | SetOp::Intersection) {
                    out.push(ac[i]);
                }
                i += 1;
                j += 1;
            }
        }
    }
    if matches!(op, SetOp::Union | SetOp::Difference) {
        out.extend_from_slice(&ac[i..]);
    }
    if matches!(op, SetOp::Union) {
        out.extend_from_slice(&bc[j..]);
    }
    SparseVoxelGrid {
        coords: out,
        features: None,
        resolution: a.resolution.max(b.resolution),
        voxel_size: a.voxel_size,
        unbounded: a.unbounded || b.unbounded,
    }
}

/// Intersection-over-union of two occupancy sets. Two empty grids count as
/// identical (1.0).
pub fn iou(a: &SparseVoxelGrid, b: &SparseVoxelGrid) -> f64 {
    let inter = set_op(a, b, SetOp::Intersection).len();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Fraction of positions where two occupancy label lists agree.
pub fn occupancy_accuracy(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "occupancy labels",
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(1.0);
    }
    let equal = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(equal as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn g(coords: &[[i32; 3]]) -> SparseVoxelGrid {
        SparseVoxelGrid::from_coords(coords.iter().map(|&c| c.into()).collect(), 64, 1.0).unwrap()
    }

    #[test]
    fn canonicalize_sorts_and_dedupes_keeping_first_feature_row() {
        let coords = vec![
            Coord3::new(2, 0, 0),
            Coord3::new(0, 1, 0),
            Coord3::new(2, 0, 0),
            Coord3::new(0, 0, 9),
        ];
        let feats = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let grid =
            SparseVoxelGrid::canonicalize(coords, Some((2, feats)), 16, 0.5, false).unwrap();
        assert_eq!(
            grid.coords(),
            &[Coord3::new(0, 0, 9), Coord3::new(0, 1, 0), Coord3::new(2, 0, 0)]
        );
        // Duplicate (2,0,0) keeps its first row [1,2]; later [5,6] is dropped.
        assert_eq!(grid.features().unwrap(), &[7.0, 8.0, 3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let grid = g(&[[5, 5, 5], [0, 0, 0], [5, 5, 5], [1, 2, 3]]);
        let again = SparseVoxelGrid::canonicalize(
            grid.coords().to_vec(),
            None,
            grid.resolution(),
            grid.voxel_size(),
            false,
        )
        .unwrap();
        assert_eq!(grid, again);
    }

    #[test]
    fn canonicalize_rejects_feature_length_mismatch() {
        let err = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 0)],
            Some((3, vec![1.0, 2.0])),
            8,
            1.0,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::FeatureMismatch { .. }));
    }

    #[test]
    fn bounded_grid_rejects_out_of_range_coords() {
        let err = SparseVoxelGrid::from_coords(vec![Coord3::new(0, -1, 0)], 8, 1.0).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
        let err = SparseVoxelGrid::from_coords(vec![Coord3::new(8, 0, 0)], 8, 1.0).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
        assert!(
            SparseVoxelGrid::from_coords_unbounded(vec![Coord3::new(-4, 99, 0)], 8, 1.0).is_ok()
        );
    }

    #[test]
    fn set_ops_match_btreeset_oracle() {
        let a = g(&[[0, 0, 0], [1, 1, 1], [2, 2, 2], [3, 0, 1]]);
        let b = g(&[[1, 1, 1], [4, 4, 4], [3, 0, 1]]);
        let sa: BTreeSet<Coord3> = a.coords().iter().copied().collect();
        let sb: BTreeSet<Coord3> = b.coords().iter().copied().collect();

        let union: Vec<Coord3> = sa.union(&sb).copied().collect();
        let inter: Vec<Coord3> = sa.intersection(&sb).copied().collect();
        let diff: Vec<Coord3> = sa.difference(&sb).copied().collect();

        assert_eq!(set_op(&a, &b, SetOp::Union).coords(), union.as_slice());
        assert_eq!(set_op(&a, &b, SetOp::Intersection).coords(), inter.as_slice());
        assert_eq!(set_op(&a, &b, SetOp::Difference).coords(), diff.as_slice());
    }

    #[test]
    fn iou_basics() {
        let a = g(&[[0, 0, 0], [1, 0, 0]]);
        let b = g(&[[1, 0, 0], [2, 0, 0], [3, 0, 0]]);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b), 0.25);
        assert_eq!(iou(&g(&[]), &g(&[])), 1.0);
        assert_eq!(iou(&g(&[]), &a), 0.0);
    }

    #[test]
    fn occupancy_accuracy_counts_matches() {
        assert_eq!(occupancy_accuracy(&[1, 0, 1, 1], &[1, 1, 1, 0]).unwrap(), 0.5);
        assert!(occupancy_accuracy(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn select_rows_carries_features() {
        let grid = g(&[[0, 0, 0], [1, 0, 0], [2, 0, 0]])
            .with_features(2, vec![0.0, 1.0, 10.0, 11.0, 20.0, 21.0])
            .unwrap();
        let picked = grid.select_rows(&[0, 2]);
        assert_eq!(picked.coords(), &[Coord3::new(0, 0, 0), Coord3::new(2, 0, 0)]);
        assert_eq!(picked.features().unwrap(), &[0.0, 1.0, 20.0, 21.0]);
    }

    #[test]
    fn coord_order_is_lexicographic() {
        assert!(Coord3::new(0, 9, 9) < Coord3::new(1, 0, 0));
        assert!(Coord3::new(1, 0, 9) < Coord3::new(1, 1, 0));
        assert!(Coord3::new(1, 1, 0) < Coord3::new(1, 1, 1));
    }

    #[test]
    fn parent_floors_toward_negative_infinity() {
        assert_eq!(Coord3::new(-1, -4, 3).parent(4), Coord3::new(-1, -1, 0));
        assert_eq!(Coord3::new(7, 8, -9).parent(4), Coord3::new(1, 2, -3));
    }
}
