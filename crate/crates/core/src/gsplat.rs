//! Decoding latent voxel features into 2D Gaussian-splat primitives and
//! PLY interchange.
//!
//! Each voxel carries 16 primitives of 23 raw parameters each. Raw
//! parameters live in unconstrained space and decode as:
//! offsets through `tanh` (primitives stay inside their voxel), scales
//! through `exp` with clamping, opacity through the logistic function, and
//! rotations through quaternion normalization.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::voxel::SparseVoxelGrid;

/// Gaussian primitives decoded per voxel.
pub const PRIMITIVES_PER_VOXEL: usize = 16;

/// Raw parameters per primitive: 3 offset, 3 log-scale, 1 opacity logit,
/// 4 quaternion, 3 base color harmonics, 9 higher harmonics.
pub const PRIMITIVE_CHANNELS: usize = 23;

/// Feature channels a splat-bearing voxel grid must carry.
pub const VOXEL_SPLAT_CHANNELS: usize = PRIMITIVES_PER_VOXEL * PRIMITIVE_CHANNELS;

/// Scale clamp floor, in meters.
pub const MIN_SCALE_M: f32 = 1e-6;

/// Scale clamp ceiling, in voxel edge lengths.
pub const MAX_SCALE_VOXELS: f32 = 4.0;

/// One decoded 2D Gaussian primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat {
    /// World-space center, in meters.
    pub position: [f32; 3],
    /// Per-axis extent, in meters, clamped to
    /// `[MIN_SCALE_M, MAX_SCALE_VOXELS * voxel_size]`.
    pub scale: [f32; 3],
    /// Blend weight in (0, 1).
    pub opacity: f32,
    /// Unit quaternion `(w, x, y, z)`; an all-zero raw quaternion decodes
    /// to the identity.
    pub rotation: [f32; 4],
    /// Base color spherical harmonics.
    pub sh_dc: [f32; 3],
    /// Higher-order spherical harmonics.
    pub sh_rest: [f32; 9],
}

fn decode_primitive(center: [f64; 3], voxel_size: f32, raw: &[f32]) -> Splat {
    debug_assert_eq!(raw.len(), PRIMITIVE_CHANNELS);
    let half = voxel_size * 0.5;
    let position = [
        center[0] as f32 + raw[0].tanh() * half,
        center[1] as f32 + raw[1].tanh() * half,
        center[2] as f32 + raw[2].tanh() * half,
    ];
    let max_scale = MAX_SCALE_VOXELS * voxel_size;
    let scale = [
        raw[3].exp().clamp(MIN_SCALE_M, max_scale),
        raw[4].exp().clamp(MIN_SCALE_M, max_scale),
        raw[5].exp().clamp(MIN_SCALE_M, max_scale),
    ];
    let opacity = 1.0 / (1.0 + (-raw[6]).exp());
    let q = [raw[7], raw[8], raw[9], raw[10]];
    let norm = q.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
    let rotation = if norm == 0.0 {
        [1.0, 0.0, 0.0, 0.0]
    } else {
        let inv = (1.0 / norm) as f32;
        [q[0] * inv, q[1] * inv, q[2] * inv, q[3] * inv]
    };
    let mut sh_dc = [0.0f32; 3];
    sh_dc.copy_from_slice(&raw[11..14]);
    let mut sh_rest = [0.0f32; 9];
    sh_rest.copy_from_slice(&raw[14..23]);
    Splat {
        position,
        scale,
        opacity,
        rotation,
        sh_dc,
        sh_rest,
    }
}

/// Decodes every voxel's feature row into [`PRIMITIVES_PER_VOXEL`]
/// primitives, in canonical voxel order. The grid must carry exactly
/// [`VOXEL_SPLAT_CHANNELS`] channels.
pub fn decode_splats(grid: &SparseVoxelGrid) -> Result<Vec<Splat>> {
    if grid.channels() != VOXEL_SPLAT_CHANNELS {
        return Err(Error::ChannelMismatch {
            expected: VOXEL_SPLAT_CHANNELS,
            actual: grid.channels(),
        });
    }
    let mut splats = Vec::with_capacity(grid.len() * PRIMITIVES_PER_VOXEL);
    for (i, &coord) in grid.coords().iter().enumerate() {
        let center = grid.voxel_center(coord);
        let row = grid.feature_row(i).expect("channels checked above");
        for p in 0..PRIMITIVES_PER_VOXEL {
            let raw = &row[p * PRIMITIVE_CHANNELS..(p + 1) * PRIMITIVE_CHANNELS];
            splats.push(decode_primitive(center, grid.voxel_size(), raw));
        }
    }
    Ok(splats)
}

const PLY_PROPERTIES: [&str; 23] = [
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "opacity", "rot_0", "rot_1", "rot_2",
    "rot_3", "f_dc_0", "f_dc_1", "f_dc_2", "f_rest_0", "f_rest_1", "f_rest_2", "f_rest_3",
    "f_rest_4", "f_rest_5", "f_rest_6", "f_rest_7", "f_rest_8",
];

fn splat_values(s: &Splat) -> [f32; 23] {
    [
        s.position[0], s.position[1], s.position[2],
        s.scale[0], s.scale[1], s.scale[2],
        s.opacity,
        s.rotation[0], s.rotation[1], s.rotation[2], s.rotation[3],
        s.sh_dc[0], s.sh_dc[1], s.sh_dc[2],
        s.sh_rest[0], s.sh_rest[1], s.sh_rest[2], s.sh_rest[3], s.sh_rest[4],
        s.sh_rest[5], s.sh_rest[6], s.sh_rest[7], s.sh_rest[8],
    ]
}

fn splat_from_values(v: &[f32; 23]) -> Splat {
    Splat {
        position: [v[0], v[1], v[2]],
        scale: [v[3], v[4], v[5]],
        opacity: v[6],
        rotation: [v[7], v[8], v[9], v[10]],
        sh_dc: [v[11], v[12], v[13]],
        sh_rest: [v[14], v[15], v[16], v[17], v[18], v[19], v[20], v[21], v[22]],
    }
}

/// Serializes splats as ASCII PLY. Values print in Rust's shortest
/// round-trip decimal form, so parse-then-serialize reproduces the bytes.
pub fn splats_to_ply(splats: &[Splat]) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", splats.len());
    for name in PLY_PROPERTIES {
        let _ = writeln!(out, "property float {name}");
    }
    out.push_str("end_header\n");
    for s in splats {
        let values = splat_values(s);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

type PlyLines<'a> = std::iter::Enumerate<std::str::Lines<'a>>;

fn expect_line(lines: &mut PlyLines, want: &str) -> Result<()> {
    match lines.next() {
        Some((_, line)) if line.trim_end() == want => Ok(()),
        Some((n, line)) => Err(Error::Format(format!(
            "ply line {}: expected `{want}`, found `{line}`",
            n + 1
        ))),
        None => Err(Error::Format(format!("ply ended before `{want}`"))),
    }
}

/// Parses the ASCII PLY dialect written by [`splats_to_ply`]: exactly the
/// expected float properties in order, then one row per vertex, nothing
/// trailing.
pub fn splats_from_ply(text: &str) -> Result<Vec<Splat>> {
    let mut lines = text.lines().enumerate();
    expect_line(&mut lines, "ply")?;
    expect_line(&mut lines, "format ascii 1.0")?;
    let count: usize = match lines.next() {
        Some((n, line)) => line
            .trim_end()
            .strip_prefix("element vertex ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::Format(format!("ply line {}: bad element line `{line}`", n + 1)))?,
        None => return Err(Error::Format("ply ended before element line".into())),
    };
    for name in PLY_PROPERTIES {
        expect_line(&mut lines, &format!("property float {name}"))?;
    }
    expect_line(&mut lines, "end_header")?;

    let mut splats = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::Format(format!("ply ended after {} of {count} rows", splats.len())))?;
        let mut values = [0.0f32; 23];
        let mut fields = line.split_whitespace();
        for (k, slot) in values.iter_mut().enumerate() {
            let field = fields.next().ok_or_else(|| {
                Error::Format(format!("ply line {}: row has {k} of 23 values", n + 1))
            })?;
            *slot = field
                .parse()
                .map_err(|_| Error::Format(format!("ply line {}: bad float `{field}`", n + 1)))?;
        }
        if fields.next().is_some() {
            return Err(Error::Format(format!(
                "ply line {}: row has more than 23 values",
                n + 1
            )));
        }
        splats.push(splat_from_values(&values));
    }
    for (n, line) in lines {
        if !line.trim().is_empty() {
            return Err(Error::Format(format!(
                "ply line {}: trailing content `{line}`",
                n + 1
            )));
        }
    }
    Ok(splats)
}

/// Whole-buffer PLY file writer.
pub fn write_ply(splats: &[Splat], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, splats_to_ply(splats))?;
    Ok(())
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<Vec<Splat>> {
    let text = std::fs::read_to_string(path)?;
    splats_from_ply(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::voxel::Coord3;
    use approx::assert_abs_diff_eq;

    fn splat_grid(coords: &[[i32; 3]], voxel_size: f32, rng: &mut SeededRng) -> SparseVoxelGrid {
        let n = coords.len();
        let data: Vec<f32> = (0..n * VOXEL_SPLAT_CHANNELS)
            .map(|_| rng.range_f64(-3.0, 3.0) as f32)
            .collect();
        SparseVoxelGrid::canonicalize(
            coords.iter().map(|&c| c.into()).collect(),
            Some((VOXEL_SPLAT_CHANNELS, data)),
            16,
            voxel_size,
            false,
        )
        .unwrap()
    }

    #[test]
    fn channel_count_is_sixteen_times_twenty_three() {
        assert_eq!(VOXEL_SPLAT_CHANNELS, 368);
    }

    #[test]
    fn zero_parameters_decode_to_neutral_primitive() {
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(2, 3, 4)],
            Some((VOXEL_SPLAT_CHANNELS, vec![0.0; VOXEL_SPLAT_CHANNELS])),
            16,
            0.5,
            false,
        )
        .unwrap();
        let splats = decode_splats(&grid).unwrap();
        assert_eq!(splats.len(), PRIMITIVES_PER_VOXEL);
        let s = &splats[0];
        // tanh(0) = 0 leaves the primitive at the voxel center.
        assert_eq!(s.position, [1.25, 1.75, 2.25]);
        // exp(0) = 1 m sits inside the [1e-6, 2] clamp for 0.5 m voxels.
        assert_eq!(s.scale, [1.0, 1.0, 1.0]);
        assert_eq!(s.opacity, 0.5);
        assert_eq!(s.rotation, [1.0, 0.0, 0.0, 0.0]);
        assert!(s.sh_dc.iter().chain(&s.sh_rest).all(|&v| v == 0.0));
    }

    #[test]
    fn decoded_primitives_satisfy_range_constraints() {
        let mut rng = SeededRng::new(31);
        let grid = splat_grid(&[[0, 0, 0], [5, 9, 2], [15, 15, 15]], 2.0, &mut rng);
        let splats = decode_splats(&grid).unwrap();
        assert_eq!(splats.len(), 3 * PRIMITIVES_PER_VOXEL);

        for (i, s) in splats.iter().enumerate() {
            let coord = grid.coords()[i / PRIMITIVES_PER_VOXEL];
            let center = grid.voxel_center(coord);
            for a in 0..3 {
                // Offsets never leave the voxel.
                assert!((s.position[a] as f64 - center[a]).abs() <= 1.0 + 1e-6);
                assert!(s.scale[a] >= MIN_SCALE_M && s.scale[a] <= 8.0);
            }
            assert!(s.opacity > 0.0 && s.opacity < 1.0);
            let norm: f64 = s.rotation.iter().map(|v| (*v as f64).powi(2)).sum();
            assert_abs_diff_eq!(norm.sqrt(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn scale_clamps_both_ends() {
        let mut raw = vec![0.0f32; VOXEL_SPLAT_CHANNELS];
        raw[3] = 50.0; // exp -> huge
        raw[4] = -50.0; // exp -> tiny
        let grid = SparseVoxelGrid::canonicalize(
            vec![Coord3::new(0, 0, 0)],
            Some((VOXEL_SPLAT_CHANNELS, raw)),
            16,
            1.0,
            false,
        )
        .unwrap();
        let s = decode_splats(&grid).unwrap()[0];
        assert_eq!(s.scale[0], 4.0);
        assert_eq!(s.scale[1], MIN_SCALE_M);
        assert_eq!(s.scale[2], 1.0);
    }

    #[test]
    fn wrong_channel_count_is_rejected() {
        let grid = SparseVoxelGrid::from_coords(vec![Coord3::new(0, 0, 0)], 8, 1.0).unwrap();
        assert!(matches!(
            decode_splats(&grid),
            Err(Error::ChannelMismatch { expected: 368, actual: 0 })
        ));
        let grid = grid.with_features(2, vec![1.0, 2.0]).unwrap();
        assert!(decode_splats(&grid).is_err());
    }

    #[test]
    fn ply_roundtrip_is_exact_and_idempotent() {
        let mut rng = SeededRng::new(8);
        let grid = splat_grid(&[[1, 2, 3], [4, 5, 6]], 0.25, &mut rng);
        let splats = decode_splats(&grid).unwrap();

        let text = splats_to_ply(&splats);
        let parsed = splats_from_ply(&text).unwrap();
        assert_eq!(parsed, splats);
        // Serialize -> parse -> serialize reproduces the bytes.
        assert_eq!(splats_to_ply(&parsed), text);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.ply");
        write_ply(&splats, &path).unwrap();
        assert_eq!(read_ply(&path).unwrap(), splats);

        // Empty export still roundtrips.
        let empty = splats_to_ply(&[]);
        assert!(splats_from_ply(&empty).unwrap().is_empty());
    }

    #[test]
    fn ply_parser_rejects_malformed_input() {
        let splats = vec![Splat {
            position: [0.0; 3],
            scale: [1.0; 3],
            opacity: 0.5,
            rotation: [1.0, 0.0, 0.0, 0.0],
            sh_dc: [0.0; 3],
            sh_rest: [0.0; 9],
        }];
        let good = splats_to_ply(&splats);

        assert!(splats_from_ply(&good.replace("ply\n", "plz\n")).is_err());
        assert!(splats_from_ply(&good.replace("format ascii 1.0", "format binary 1.0")).is_err());
        assert!(splats_from_ply(&good.replace("element vertex 1", "element vertex x")).is_err());
        assert!(splats_from_ply(&good.replace("property float rot_0", "property float rot_9")).is_err());
        // Truncated row, extra value, bad float, trailing junk.
        let body_at = good.find("end_header\n").unwrap() + "end_header\n".len();
        let (head, row) = good.split_at(body_at);
        let row = row.trim_end();
        let short = format!("{head}{}\n", row.rsplit_once(' ').unwrap().0);
        assert!(splats_from_ply(&short).is_err());
        assert!(splats_from_ply(&format!("{head}{row} 9\n")).is_err());
        assert!(splats_from_ply(&format!("{head}{}oops\n", &row[..row.len() - 1])).is_err());
        assert!(splats_from_ply(&format!("{good}surprise\n")).is_err());
        // Missing rows.
        assert!(splats_from_ply(&good.replace("element vertex 1", "element vertex 2")).is_err());
    }
}
