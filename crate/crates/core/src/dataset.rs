//! Dataset curation: height-stratified splits, altitude-aware sampling
//! weights, terrain filters, the semantic class palette, and heightfield
//! interchange.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Number of equal-width strata used by [`height_split`].
pub const HEIGHT_SPLIT_BINS: usize = 20;

/// Height at which [`sample_weights`] saturates, in meters.
pub const WEIGHT_HEIGHT_CAP_M: f64 = 200.0;

/// Splits scene indices into a held-out set and a remainder, stratified by
/// scene height.
///
/// Heights are bucketed into [`HEIGHT_SPLIT_BINS`] equal-width bins over
/// their range; from a bin holding `s` scenes,
/// `min(max(round(ratio * s), min(min_per_bin, s)), s)` are drawn without
/// replacement. Both returned index lists are ascending; together they
/// partition `0..heights.len()`.
pub fn height_split(
    heights: &[f32],
    ratio: f64,
    min_per_bin: usize,
    rng: &mut SeededRng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if heights.is_empty() {
        return Err(Error::EmptyInput("height_split"));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidParam(format!("split ratio {ratio} outside [0, 1]")));
    }
    if heights.iter().any(|h| !h.is_finite()) {
        return Err(Error::InvalidParam("non-finite scene height".into()));
    }
    let lo = heights.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = heights.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = (hi - lo) as f64;

    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); HEIGHT_SPLIT_BINS];
    for (i, &h) in heights.iter().enumerate() {
        let b = if span == 0.0 {
            0
        } else {
            (((h - lo) as f64 / span * HEIGHT_SPLIT_BINS as f64) as usize)
                .min(HEIGHT_SPLIT_BINS - 1)
        };
        bins[b].push(i);
    }

    let mut held = Vec::new();
    for members in &bins {
        let s = members.len();
        if s == 0 {
            continue;
        }
        let k = ((ratio * s as f64).round() as usize)
            .max(min_per_bin.min(s))
            .min(s);
        for pick in rng.sample_indices(s, k) {
            held.push(members[pick]);
        }
    }
    held.sort_unstable();
    let mut in_held = vec![false; heights.len()];
    for &i in &held {
        in_held[i] = true;
    }
    let rest = (0..heights.len()).filter(|&i| !in_held[i]).collect();
    Ok((held, rest))
}

/// Sampling weight per scene, favoring tall scenes:
/// `w_i = (min(h_i, 200) / 10)^alpha`, normalized to sum to one.
///
/// Heights must be finite and non-negative; at least one must be positive.
pub fn sample_weights(heights: &[f32], alpha: f64) -> Result<Vec<f64>> {
    if heights.is_empty() {
        return Err(Error::EmptyInput("sample_weights"));
    }
    let mut weights = Vec::with_capacity(heights.len());
    for &h in heights {
        if !h.is_finite() || h < 0.0 {
            return Err(Error::InvalidParam(format!("invalid scene height {h}")));
        }
        weights.push(((h as f64).min(WEIGHT_HEIGHT_CAP_M) / 10.0).powf(alpha));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParam(
            "all scene heights are zero; weights cannot normalize".into(),
        ));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Row-major single-channel elevation raster, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl HeightField {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("heightfield dimensions must be positive".into()));
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                what: "heightfield raster",
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    /// Highest elevation in the raster.
    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Mean gradient magnitude: per pixel, `hypot(dh/dcol, dh/drow)` with
    /// central differences inside and one-sided differences at borders,
    /// averaged in f64 over all pixels.
    pub fn mean_gradient(&self) -> f64 {
        let (w, h) = (self.width, self.height);
        let mut total = 0.0f64;
        for r in 0..h {
            for c in 0..w {
                let dx = if w == 1 {
                    0.0
                } else if c == 0 {
                    (self.get(r, 1) - self.get(r, 0)) as f64
                } else if c == w - 1 {
                    (self.get(r, w - 1) - self.get(r, w - 2)) as f64
                } else {
                    (self.get(r, c + 1) - self.get(r, c - 1)) as f64 / 2.0
                };
                let dy = if h == 1 {
                    0.0
                } else if r == 0 {
                    (self.get(1, c) - self.get(0, c)) as f64
                } else if r == h - 1 {
                    (self.get(h - 1, c) - self.get(h - 2, c)) as f64
                } else {
                    (self.get(r + 1, c) - self.get(r - 1, c)) as f64 / 2.0
                };
                total += dx.hypot(dy);
            }
        }
        total / (w * h) as f64
    }
}

/// Indices of fields whose peak stays at or below `max_height` meters.
pub fn filter_by_height(fields: &[HeightField], max_height: f32) -> Vec<usize> {
    (0..fields.len())
        .filter(|&i| fields[i].max() <= max_height)
        .collect()
}

/// Indices of fields with mean gradient magnitude at or above
/// `min_gradient` (flat scenes fall below and are rejected).
pub fn filter_by_gradient(fields: &[HeightField], min_gradient: f64) -> Vec<usize> {
    (0..fields.len())
        .filter(|&i| fields[i].mean_gradient() >= min_gradient)
        .collect()
}

#[derive(Serialize, Deserialize)]
struct HeightFieldHeader {
    width: u32,
    height: u32,
    raster: String,
}

/// Writes a heightfield as a JSON header at `path` plus a sibling raw
/// little-endian f32 raster named after the header's file stem.
pub fn write_heightfield(field: &HeightField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Format(format!("heightfield path {} has no stem", path.display())))?;
    let raster_name = format!("{stem}.f32");
    let header = HeightFieldHeader {
        width: field.width as u32,
        height: field.height as u32,
        raster: raster_name.clone(),
    };
    let body = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::Format(format!("heightfield header: {e}")))?;

    let mut raster = Vec::with_capacity(field.data.len() * 4);
    for v in &field.data {
        raster.extend_from_slice(&v.to_le_bytes());
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    std::fs::write(dir.join(&raster_name), raster)?;
    std::fs::write(path, body)?;
    Ok(())
}

/// Reads a heightfield written by [`write_heightfield`]; the raster path
/// in the header resolves relative to the header's directory.
pub fn read_heightfield(path: impl AsRef<Path>) -> Result<HeightField> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path)?;
    let header: HeightFieldHeader =
        serde_json::from_str(&body).map_err(|e| Error::Format(format!("heightfield header: {e}")))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let bytes = std::fs::read(dir.join(&header.raster))?;
    let expected = header.width as usize * header.height as usize * 4;
    if bytes.len() != expected {
        return Err(Error::LengthMismatch {
            what: "heightfield raster bytes",
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    HeightField::new(header.width as usize, header.height as usize, data)
}

/// One entry of the semantic palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemanticClass {
    pub id: u32,
    pub name: &'static str,
    pub color: [u8; 3],
}

/// The 25 semantic classes with their label ids and RGB palette colors.
/// Id 0 is reserved for unlabeled/background and is not part of the
/// palette.
pub const SEMANTIC_CLASSES: [SemanticClass; 25] = [
    SemanticClass { id: 1, name: "Agriculture Field", color: [60, 76, 231] },
    SemanticClass { id: 2, name: "Woodland", color: [219, 152, 52] },
    SemanticClass { id: 3, name: "Grassland", color: [113, 204, 46] },
    SemanticClass { id: 4, name: "Building", color: [182, 89, 155] },
    SemanticClass { id: 5, name: "Road", color: [15, 196, 241] },
    SemanticClass { id: 6, name: "Excavated Land", color: [34, 126, 230] },
    SemanticClass { id: 7, name: "Bare Land", color: [156, 188, 26] },
    SemanticClass { id: 8, name: "Water", color: [160, 76, 231] },
    SemanticClass { id: 9, name: "Pavement", color: [94, 73, 52] },
    SemanticClass { id: 10, name: "Ship", color: [133, 160, 22] },
    SemanticClass { id: 11, name: "Storage Tank", color: [43, 57, 192] },
    SemanticClass { id: 12, name: "Baseball Diamond", color: [185, 128, 41] },
    SemanticClass { id: 13, name: "Tennis Court", color: [96, 174, 39] },
    SemanticClass { id: 14, name: "Basketball Court", color: [173, 68, 142] },
    SemanticClass { id: 15, name: "Ground Track Field", color: [18, 156, 243] },
    SemanticClass { id: 16, name: "Bridge", color: [0, 84, 211] },
    SemanticClass { id: 17, name: "Vehicle", color: [141, 140, 127] },
    SemanticClass { id: 18, name: "Helicopter", color: [137, 122, 108] },
    SemanticClass { id: 19, name: "Swimming Pool", color: [89, 140, 163] },
    SemanticClass { id: 20, name: "Roundabout", color: [182, 159, 97] },
    SemanticClass { id: 21, name: "Soccer Ball Field", color: [206, 143, 187] },
    SemanticClass { id: 22, name: "Plane", color: [43, 147, 240] },
    SemanticClass { id: 23, name: "Harbor", color: [124, 175, 77] },
    SemanticClass { id: 24, name: "Greenhouse", color: [46, 58, 176] },
    SemanticClass { id: 25, name: "Solar Panel", color: [226, 173, 93] },
];

/// Palette entry for a label id.
pub fn semantic_class(id: u32) -> Result<&'static SemanticClass> {
    SEMANTIC_CLASSES
        .iter()
        .find(|c| c.id == id)
        .ok_or(Error::UnknownSemanticId(id))
}

/// Label id for a palette color (exact match).
pub fn semantic_id_from_color(color: [u8; 3]) -> Result<u32> {
    SEMANTIC_CLASSES
        .iter()
        .find(|c| c.color == color)
        .map(|c| c.id)
        .ok_or(Error::UnknownSemanticColor(color[0], color[1], color[2]))
}
