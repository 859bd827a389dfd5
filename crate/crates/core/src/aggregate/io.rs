//! View manifest loading.
//!
//! A view manifest is JSON Lines: one object per view, referencing raw
//! little-endian rasters on disk (row-major, origin at the top-left pixel).
//!
//! ```json
//! {"width": 640, "height": 480, "channels": 3,
//!  "origin": [1.0, -2.0, 5.5],
//!  "depth": "v0_depth.f32", "normal": "v0_normal.f32",
//!  "position": "v0_position.f32", "element": "v0_element.i64",
//!  "feature": "v0_feature.f32"}
//! ```
//!
//! `depth`, `normal`, `position`, `feature` are f32 rasters with 1, 3, 3,
//! and `channels` components per pixel; `element` is an i64 raster.
//! Relative paths resolve against the manifest's directory.

use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::aggregate::ViewSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct ViewRecord {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub origin: [f64; 3],
    pub depth: String,
    pub normal: String,
    pub position: String,
    pub element: String,
    pub feature: String,
}

fn read_f32_raster(path: &Path, expected: usize) -> Result<Vec<f32>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() != expected * 4 {
        return Err(Error::LengthMismatch {
            what: "f32 raster bytes",
            expected: expected * 4,
            actual: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

fn read_i64_raster(path: &Path, expected: usize) -> Result<Vec<i64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() != expected * 8 {
        return Err(Error::LengthMismatch {
            what: "i64 raster bytes",
            expected: expected * 8,
            actual: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|b| i64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
        .collect())
}

/// Loads every view listed in a JSONL manifest. Blank lines are skipped.
pub fn read_view_manifest(path: impl AsRef<Path>) -> Result<Vec<ViewSample>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let file = std::fs::File::open(path)?;
    let mut views = Vec::new();
    for (line_no, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ViewRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("manifest line {}: {e}", line_no + 1)))?;
        let pixels = record.width * record.height;
        views.push(ViewSample {
            width: record.width,
            height: record.height,
            depth: read_f32_raster(&base.join(&record.depth), pixels)?,
            normal: read_f32_raster(&base.join(&record.normal), pixels * 3)?,
            position: read_f32_raster(&base.join(&record.position), pixels * 3)?,
            element: read_i64_raster(&base.join(&record.element), pixels)?,
            feature: read_f32_raster(&base.join(&record.feature), pixels * record.channels)?,
            channels: record.channels,
            origin: record.origin,
        });
    }
    Ok(views)
}
