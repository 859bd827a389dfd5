//! SVOX: a little-endian binary container for sparse voxel grids.
//!
//! Layout, all little-endian:
//!
//! | field      | type        | notes                                |
//! |------------|-------------|--------------------------------------|
//! | magic      | `[u8; 4]`   | `"SVX1"`                             |
//! | version    | `u32`       | currently 1                          |
//! | resolution | `u32`       | voxels per side                      |
//! | voxel_size | `f32`       | meters per voxel                     |
//! | count      | `u32`       | number of voxels                     |
//! | channels   | `u16`       | feature channels, 0 when featureless |
//! | reserved   | `u16`       | must be 0                            |
//! | coords     | `count*3` `i32` | strictly ascending lexicographic |
//! | features   | `count*channels` `f32` | row-major              |
//!
//! Readers reject non-canonical coordinate order, so a file is valid only
//! if it was produced from a canonical grid. Boundedness is not stored: a
//! grid whose coordinates all fit in `[0, resolution)` reads back bounded.

use std::path::Path;

use crate::error::{Error, Result};
use crate::voxel::{Coord3, FeatureMatrix, SparseVoxelGrid};

const MAGIC: [u8; 4] = *b"SVX1";
const VERSION: u32 = 1;

/// Serializes a grid to SVOX bytes.
pub fn svox_to_bytes(grid: &SparseVoxelGrid) -> Vec<u8> {
    let channels = grid.channels();
    let mut out = Vec::with_capacity(24 + grid.len() * (12 + 4 * channels));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&grid.resolution().to_le_bytes());
    out.extend_from_slice(&grid.voxel_size().to_le_bytes());
    out.extend_from_slice(&(grid.len() as u32).to_le_bytes());
    out.extend_from_slice(&(channels as u16).to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    for c in grid.coords() {
        out.extend_from_slice(&c.x.to_le_bytes());
        out.extend_from_slice(&c.y.to_le_bytes());
        out.extend_from_slice(&c.z.to_le_bytes());
    }
    if let Some(features) = grid.features() {
        for v in features {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.at + N;
        if end > self.bytes.len() {
            return Err(Error::Format("truncated SVOX data".into()));
        }
        let mut buf = [0u8; N];
        buf.copy_from_slice(&self.bytes[self.at..end]);
        self.at = end;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take()?))
    }
}

/// Parses SVOX bytes. Rejects bad magic, unknown versions, non-canonical
/// coordinate order (including duplicates), nonzero reserved bits, and
/// trailing data.
pub fn svox_from_bytes(bytes: &[u8]) -> Result<SparseVoxelGrid> {
    let mut cur = Cursor { bytes, at: 0 };
    let magic: [u8; 4] = cur.take()?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let resolution = cur.u32()?;
    if resolution == 0 {
        return Err(Error::Format("resolution must be positive".into()));
    }
    let voxel_size = cur.f32()?;
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::Format(format!("invalid voxel size {voxel_size}")));
    }
    let count = cur.u32()? as usize;
    let channels = cur.u16()? as usize;
    let reserved = cur.u16()?;
    if reserved != 0 {
        return Err(Error::Format(format!("reserved field must be 0, got {reserved}")));
    }

    let mut coords = Vec::with_capacity(count);
    let limit = resolution as i64;
    let mut bounded = true;
    for row in 0..count {
        let c = Coord3::new(cur.i32()?, cur.i32()?, cur.i32()?);
        if let Some(&prev) = coords.last() {
            if prev >= c {
                return Err(Error::NonCanonical(row));
            }
        }
        if [c.x, c.y, c.z].iter().any(|&v| (v as i64) < 0 || (v as i64) >= limit) {
            bounded = false;
        }
        coords.push(c);
    }

    let features = if channels > 0 {
        let mut data = Vec::with_capacity(count * channels);
        for _ in 0..count * channels {
            data.push(cur.f32()?);
        }
        Some(FeatureMatrix { channels, data })
    } else {
        None
    };

    if cur.at != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after SVOX payload",
            bytes.len() - cur.at
        )));
    }

    Ok(SparseVoxelGrid {
        coords,
        features,
        resolution,
        voxel_size,
        unbounded: !bounded,
    })
}

/// Writes a grid to `path`, building the whole buffer first so a failed
/// write never leaves a truncated file behind mid-stream.
pub fn write_svox(grid: &SparseVoxelGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, svox_to_bytes(grid))?;
    Ok(())
}

pub fn read_svox(path: impl AsRef<Path>) -> Result<SparseVoxelGrid> {
    svox_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> SparseVoxelGrid {
        SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 1), Coord3::new(0, 2, 0), Coord3::new(3, 1, 2)],
            Some((2, vec![1.0, -2.5, 0.0, 4.25, 1e-8, 3.75])),
            4,
            0.56,
            false,
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let grid = sample_grid();
        let bytes = svox_to_bytes(&grid);
        let back = svox_from_bytes(&bytes).unwrap();
        assert_eq!(back, grid);
        assert_eq!(svox_to_bytes(&back), bytes);
    }

    #[test]
    fn roundtrip_featureless_and_empty() {
        for grid in [
            SparseVoxelGrid::empty(16, 1.0),
            SparseVoxelGrid::from_coords(vec![Coord3::new(5, 5, 5)], 16, 1.0).unwrap(),
        ] {
            let back = svox_from_bytes(&svox_to_bytes(&grid)).unwrap();
            assert_eq!(back, grid);
        }
    }

    #[test]
    fn out_of_range_coords_read_back_unbounded() {
        let grid =
            SparseVoxelGrid::from_coords_unbounded(vec![Coord3::new(-3, 0, 99)], 4, 1.0).unwrap();
        let back = svox_from_bytes(&svox_to_bytes(&grid)).unwrap();
        assert!(back.is_unbounded());
        assert_eq!(back.coords(), grid.coords());
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = svox_to_bytes(&sample_grid());
        bytes[0] = b'X';
        assert!(matches!(svox_from_bytes(&bytes), Err(Error::BadMagic(_))));

        let mut bytes = svox_to_bytes(&sample_grid());
        bytes[4] = 9;
        assert!(matches!(svox_from_bytes(&bytes), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn rejects_non_canonical_order() {
        let grid = sample_grid();
        let mut bytes = svox_to_bytes(&grid);
        // Swap the first two coordinate records (12 bytes each, after the
        // 24-byte header).
        let (head, tail) = bytes.split_at_mut(24 + 12);
        head[24..36].swap_with_slice(&mut tail[..12]);
        assert!(matches!(svox_from_bytes(&bytes), Err(Error::NonCanonical(1))));
    }

    #[test]
    fn rejects_duplicate_coordinates() {
        let grid = sample_grid();
        let mut bytes = svox_to_bytes(&grid);
        let dup: Vec<u8> = bytes[24..36].to_vec();
        bytes[36..48].copy_from_slice(&dup);
        assert!(matches!(svox_from_bytes(&bytes), Err(Error::NonCanonical(1))));
    }

    #[test]
    fn rejects_truncated_and_trailing_data() {
        let bytes = svox_to_bytes(&sample_grid());
        assert!(matches!(
            svox_from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut extended = bytes.clone();
        extended.push(0);
        assert!(matches!(svox_from_bytes(&extended), Err(Error::Format(_))));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.svx");
        let grid = sample_grid();
        write_svox(&grid, &path).unwrap();
        assert_eq!(read_svox(&path).unwrap(), grid);
    }
}
