//! Sliding-window extension of the two-stage pipeline to scenes wider
//! than one sampling window.
//!
//! The scene tiles into overlapping windows along x and y (z always spans
//! the full window height). Tiles are visited in x-major order, and the
//! already-covered part of each tile is *frozen*: after every Euler step
//! at time `t`, states over committed cells are reset to
//! `(1 - t) * known + t * noise` with the tile's own initial noise, so at
//! `t = 0` they land exactly on the committed values. Stage one freezes
//! occupancy scores to +-1 from the merged coarse structure; stage two
//! freezes latent rows to the merged rows, or to zero rows for voxels the
//! earlier tiles rejected — zero rows fail the magnitude filter, so the
//! rejection is reproduced. Coverage is therefore monotone: once a column
//! is committed, later tiles can neither change nor extend it, and seams
//! stay consistent by construction.

use std::collections::{BTreeMap, BTreeSet};

use crate::augment::roughen;
use crate::error::{Error, Result};
use crate::flow::fields::VelocityField;
use crate::flow::generate::{GenerateDiagnostics, GenerateParams};
use crate::flow::sampler::{gaussian_noise, sample_with};
use crate::flow::schedule::shifted_timesteps;
use crate::flow::LATENT_DOWNSCALE;
use crate::pss::{
    coarse_threshold, latent_magnitude_filter, retain_valid, zero_invalid_features,
};
use crate::rng::SeededRng;
use crate::voxel::{Coord3, SparseVoxelGrid};

/// Scene tiling, in structure-level voxels. All three lengths must be
/// multiples of [`LATENT_DOWNSCALE`], with `overlap < window <= scene`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowParams {
    pub scene: u32,
    pub window: u32,
    pub overlap: u32,
}

/// Placement of one tile inside the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileFrame {
    /// Visit order (x-major over the start grid).
    pub index: usize,
    /// Structure-level offsets of the tile's low corner.
    pub start_x: u32,
    pub start_y: u32,
    /// The same offsets on the coarse grid.
    pub coarse_start_x: u32,
    pub coarse_start_y: u32,
}

/// Per-tile outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileReport {
    pub frame: TileFrame,
    pub diagnostics: GenerateDiagnostics,
    /// Dense raster cells frozen during stage one.
    pub frozen_class_cells: usize,
    /// Latent rows frozen during stage two.
    pub frozen_latent_rows: usize,
}

/// Window start offsets along one axis.
///
/// Starts advance by `window - overlap` while a full window fits. A
/// leftover tail shorter than a stride adds a final window flush with the
/// scene end; when the previous-but-one window already reaches that final
/// start (tail <= overlap), it replaces the last start instead of joining
/// it, keeping the tiling minimal. A scene of 648 with window 256 and
/// overlap 64 yields `[0, 192, 392]`.
pub fn tile_starts(scene: u32, window: u32, overlap: u32) -> Result<Vec<u32>> {
    for (name, v) in [("scene", scene), ("window", window), ("overlap", overlap)] {
        if v % LATENT_DOWNSCALE != 0 {
            return Err(Error::InvalidParam(format!(
                "{name} {v} is not a multiple of {LATENT_DOWNSCALE}"
            )));
        }
    }
    if window == 0 || overlap >= window {
        return Err(Error::InvalidParam(format!(
            "overlap {overlap} must be smaller than window {window}"
        )));
    }
    if window > scene {
        return Err(Error::InvalidParam(format!(
            "window {window} exceeds scene {scene}"
        )));
    }
    let stride = (window - overlap) as u64;
    let (scene64, window64) = (scene as u64, window as u64);
    let mut starts = vec![0u32];
    while *starts.last().unwrap() as u64 + stride + window64 <= scene64 {
        starts.push(starts.last().unwrap() + stride as u32);
    }
    let last = *starts.last().unwrap() as u64;
    if last + window64 < scene64 {
        let fin = scene - window;
        let n = starts.len();
        if n >= 2 && starts[n - 2] as u64 + window64 >= fin as u64 {
            starts[n - 1] = fin;
        } else {
            starts.push(fin);
        }
    }
    Ok(starts)
}

fn column_covered(rects: &[[u32; 4]], gx: i32, gy: i32) -> bool {
    rects.iter().any(|r| {
        gx >= r[0] as i32 && gx < r[2] as i32 && gy >= r[1] as i32 && gy < r[3] as i32
    })
}

/// Generates a scene wider than one window by tiling it.
///
/// `class_factory` builds the stage-one field for a tile placement;
/// `latent_factory` builds the stage-two field once the tile's roughened
/// structure is known. `gen.resolution` must equal `params.window` (each
/// tile is one ordinary generation), and all tiles draw noise from one
/// seeded stream in visit order. Returns the merged latent grid on the
/// coarse scene grid plus one report per tile.
pub fn sliding_window_generate(
    mut class_factory: impl FnMut(&TileFrame) -> Result<Box<dyn VelocityField>>,
    mut latent_factory: impl FnMut(&TileFrame, &SparseVoxelGrid) -> Result<Box<dyn VelocityField>>,
    params: &WindowParams,
    gen: &GenerateParams,
) -> Result<(SparseVoxelGrid, Vec<TileReport>)> {
    if gen.resolution != params.window {
        return Err(Error::InvalidParam(format!(
            "per-tile resolution {} must equal the window size {}",
            gen.resolution, params.window
        )));
    }
    if gen.latent_channels == 0 {
        return Err(Error::InvalidParam("latent channels must be positive".into()));
    }
    let starts = tile_starts(params.scene, params.window, params.overlap)?;
    let w = params.window / LATENT_DOWNSCALE;
    let scene_res = params.scene / LATENT_DOWNSCALE;
    let coarse_size = gen.voxel_size * LATENT_DOWNSCALE as f32;
    let timesteps = shifted_timesteps(gen.steps, gen.shift)?;
    let mut rng = SeededRng::new(gen.seed);
    let dense_len = (w as usize).pow(3);
    let channels = gen.latent_channels;

    let mut coarse_merged: BTreeSet<Coord3> = BTreeSet::new();
    let mut latent_merged: BTreeMap<Coord3, Vec<f32>> = BTreeMap::new();
    let mut covered: Vec<[u32; 4]> = Vec::new();
    let mut reports = Vec::new();

    let mut index = 0;
    for &sx in &starts {
        for &sy in &starts {
            let frame = TileFrame {
                index,
                start_x: sx,
                start_y: sy,
                coarse_start_x: sx / LATENT_DOWNSCALE,
                coarse_start_y: sy / LATENT_DOWNSCALE,
            };
            index += 1;
            let (cx, cy) = (frame.coarse_start_x as i32, frame.coarse_start_y as i32);

            // Stage one: occupancy scores over the tile raster, with
            // committed columns frozen to +-1.
            let mut frozen_cells: Vec<(usize, f64)> = Vec::new();
            for lx in 0..w as i32 {
                for ly in 0..w as i32 {
                    if !column_covered(&covered, cx + lx, cy + ly) {
                        continue;
                    }
                    for lz in 0..w as i32 {
                        let occupied =
                            coarse_merged.contains(&Coord3::new(cx + lx, cy + ly, lz));
                        let cell = ((lx * w as i32 + ly) * w as i32 + lz) as usize;
                        frozen_cells.push((cell, if occupied { 1.0 } else { -1.0 }));
                    }
                }
            }
            let class_field = class_factory(&frame)?;
            let eps = gaussian_noise(dense_len, &mut rng);
            let scores = sample_with(
                class_field.as_ref(),
                &eps,
                &timesteps,
                gen.cfg_scale,
                |state, t| {
                    for &(i, known) in &frozen_cells {
                        state[i] = (1.0 - t) * known + t * eps[i] as f64;
                    }
                    Ok(())
                },
            )?;
            let coarse_tile = coarse_threshold(&scores, w, coarse_size)?;
            for &c in coarse_tile.coords() {
                coarse_merged.insert(Coord3::new(c.x + cx, c.y + cy, c.z));
            }

            if coarse_tile.is_empty() {
                reports.push(TileReport {
                    frame,
                    diagnostics: GenerateDiagnostics {
                        coarse_voxels: 0,
                        roughened_voxels: 0,
                        latent_kept: 0,
                        latent_dropped: 0,
                        empty: true,
                    },
                    frozen_class_cells: frozen_cells.len(),
                    frozen_latent_rows: 0,
                });
                covered.push([frame.coarse_start_x, frame.coarse_start_y,
                    frame.coarse_start_x + w, frame.coarse_start_y + w]);
                continue;
            }

            // Stage two: latent rows over the roughened structure, with
            // rows in committed columns frozen to their merged values (or
            // zero rows, which the magnitude filter rejects again).
            let structure = roughen(&coarse_tile, gen.roughen_dilate, gen.roughen_simplify)?;
            let mut frozen_rows: Vec<(usize, Vec<f32>)> = Vec::new();
            for (i, c) in structure.coords().iter().enumerate() {
                if !column_covered(&covered, c.x + cx, c.y + cy) {
                    continue;
                }
                let global = Coord3::new(c.x + cx, c.y + cy, c.z);
                let row = latent_merged
                    .get(&global)
                    .cloned()
                    .unwrap_or_else(|| vec![0.0; channels]);
                frozen_rows.push((i, row));
            }
            let latent_field = latent_factory(&frame, &structure)?;
            let eps2 = gaussian_noise(structure.len() * channels, &mut rng);
            let latent = sample_with(
                latent_field.as_ref(),
                &eps2,
                &timesteps,
                gen.cfg_scale,
                |state, t| {
                    for (r, row) in &frozen_rows {
                        for (k, &known) in row.iter().enumerate() {
                            let i = r * channels + k;
                            state[i] = (1.0 - t) * known as f64 + t * eps2[i] as f64;
                        }
                    }
                    Ok(())
                },
            )?;
            let latent_grid = structure.without_features().with_features(channels, latent)?;
            let valid = latent_magnitude_filter(&latent_grid, gen.tau, gen.keep_fraction)?;
            let zeroed = zero_invalid_features(&latent_grid, &valid)?;
            let kept = retain_valid(&zeroed, &valid)?;

            for (i, c) in kept.coords().iter().enumerate() {
                let global = Coord3::new(c.x + cx, c.y + cy, c.z);
                latent_merged
                    .entry(global)
                    .or_insert_with(|| kept.feature_row(i).expect("latent rows").to_vec());
            }

            reports.push(TileReport {
                frame,
                diagnostics: GenerateDiagnostics {
                    coarse_voxels: coarse_tile.len(),
                    roughened_voxels: structure.len(),
                    latent_kept: kept.len(),
                    latent_dropped: structure.len() - kept.len(),
                    empty: kept.is_empty(),
                },
                frozen_class_cells: frozen_cells.len(),
                frozen_latent_rows: frozen_rows.len(),
            });
            covered.push([frame.coarse_start_x, frame.coarse_start_y,
                frame.coarse_start_x + w, frame.coarse_start_y + w]);
        }
    }

    let mut coords = Vec::with_capacity(latent_merged.len());
    let mut data = Vec::with_capacity(latent_merged.len() * channels);
    for (c, row) in &latent_merged {
        coords.push(*c);
        data.extend_from_slice(row);
    }
    let merged = SparseVoxelGrid::canonicalize(
        coords,
        Some((channels, data)),
        scene_res,
        coarse_size,
        false,
    )?;
    Ok((merged, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::fields::{SeededRandomField, ShapeOracleField};

    #[test]
    fn starts_match_documented_tilings() {
        assert_eq!(tile_starts(648, 256, 64).unwrap(), vec![0, 192, 392]);
        assert_eq!(tile_starts(640, 256, 64).unwrap(), vec![0, 192, 384]);
        assert_eq!(tile_starts(256, 256, 64).unwrap(), vec![0]);
        // Tail shorter than a stride but no window to replace: append.
        assert_eq!(tile_starts(264, 256, 64).unwrap(), vec![0, 8]);
        assert_eq!(tile_starts(192, 128, 64).unwrap(), vec![0, 64]);
    }

    #[test]
    fn starts_always_cover_and_stay_inside() {
        for scene in (256..1024).step_by(8) {
            let starts = tile_starts(scene, 256, 64).unwrap();
            assert_eq!(starts[0], 0);
            for w in starts.windows(2) {
                assert!(w[0] < w[1], "starts must increase");
                assert!(w[1] <= w[0] + 256, "gap between consecutive windows");
            }
            assert!(starts.last().unwrap() + 256 <= scene);
            assert!(starts.iter().any(|&s| s + 256 == scene) || scene == 256,
                "scene end uncovered for {scene}");
            assert!(starts.iter().all(|&s| s % 8 == 0));
        }
    }

    #[test]
    fn starts_reject_bad_params() {
        assert!(tile_starts(650, 256, 64).is_err()); // scene not /8
        assert!(tile_starts(648, 250, 64).is_err()); // window not /8
        assert!(tile_starts(648, 256, 60).is_err()); // overlap not /8
        assert!(tile_starts(648, 256, 256).is_err()); // overlap == window
        assert!(tile_starts(128, 256, 64).is_err()); // window > scene
    }

    fn oracle_target() -> SparseVoxelGrid {
        // Boxes crossing both tile seams of the 648/256/64 tiling, plus a
        // far-corner box, all below the window height (z < 32).
        let mut coords = Vec::new();
        let mut push_box = |x: std::ops::Range<i32>, y: std::ops::Range<i32>, z: std::ops::Range<i32>| {
            for xx in x {
                for yy in y.clone() {
                    for zz in z.clone() {
                        coords.push(Coord3::new(xx, yy, zz));
                    }
                }
            }
        };
        push_box(20..30, 10..18, 0..6);
        push_box(40..46, 20..30, 2..8);
        push_box(70..78, 70..78, 0..4);
        SparseVoxelGrid::from_coords(coords, 81, 8.0).unwrap()
    }

    #[test]
    fn oracle_scene_reassembles_exactly_across_seams() {
        let target = oracle_target();
        let params = WindowParams {
            scene: 648,
            window: 256,
            overlap: 64,
        };
        let gen = GenerateParams {
            resolution: 256,
            voxel_size: 1.0,
            latent_channels: 4,
            seed: 5,
            ..GenerateParams::default()
        };
        let (merged, reports) = sliding_window_generate(
            |f| {
                Ok(Box::new(ShapeOracleField::dense_class(
                    &target,
                    f.coarse_start_x as i32,
                    f.coarse_start_y as i32,
                    32,
                )) as Box<dyn VelocityField>)
            },
            |f, structure| {
                // Shift the global target into the tile frame.
                let local: Vec<Coord3> = target
                    .coords()
                    .iter()
                    .filter_map(|c| {
                        let (lx, ly) = (
                            c.x - f.coarse_start_x as i32,
                            c.y - f.coarse_start_y as i32,
                        );
                        ((0..32).contains(&lx) && (0..32).contains(&ly))
                            .then(|| Coord3::new(lx, ly, c.z))
                    })
                    .collect();
                let local_target = SparseVoxelGrid::from_coords(local, 32, 8.0)?;
                Ok(Box::new(ShapeOracleField::latent_on(structure, &local_target, 4))
                    as Box<dyn VelocityField>)
            },
            &params,
            &gen,
        )
        .unwrap();

        assert_eq!(reports.len(), 9);
        assert_eq!(merged.resolution(), 81);
        assert_eq!(merged.voxel_size(), 8.0);
        // Occupancy reassembles the target exactly, across both seams.
        assert_eq!(merged.coords(), target.coords());
        // Latent rows are the oracle's 1.0 rows (frozen rows exactly,
        // sampled rows to integration tolerance).
        assert!(merged.features().unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-4));
        // The first tile freezes nothing; later overlapping tiles do.
        assert_eq!(reports[0].frozen_class_cells, 0);
        assert!(reports.iter().skip(1).all(|r| r.frozen_class_cells > 0));
        // Visit order is x-major over the start grid.
        assert_eq!(reports[1].frame.start_x, 0);
        assert_eq!(reports[1].frame.start_y, 192);
        assert_eq!(reports[3].frame.start_x, 192);
        assert_eq!(reports[3].frame.start_y, 0);
    }

    #[test]
    fn covered_region_is_committed_verbatim() {
        // With a structureless random field, only freezing keeps seams
        // consistent: the first tile's output must reappear bit-for-bit
        // in the full run, and later tiles must add nothing inside it.
        let gen = GenerateParams {
            resolution: 128,
            voxel_size: 1.0,
            latent_channels: 8,
            seed: 42,
            ..GenerateParams::default()
        };
        let class = |_: &TileFrame| {
            Ok(Box::new(SeededRandomField::new(999)) as Box<dyn VelocityField>)
        };
        let latent = |_: &TileFrame, _: &SparseVoxelGrid| {
            Ok(Box::new(SeededRandomField::new(777)) as Box<dyn VelocityField>)
        };

        let solo = WindowParams { scene: 128, window: 128, overlap: 64 };
        let (small, small_reports) = sliding_window_generate(class, latent, &solo, &gen).unwrap();
        assert_eq!(small_reports.len(), 1);
        assert!(!small.is_empty(), "random field should produce structure");

        let wide = WindowParams { scene: 192, window: 128, overlap: 64 };
        let (big, big_reports) = sliding_window_generate(class, latent, &wide, &gen).unwrap();
        assert_eq!(big_reports.len(), 4);

        // Every voxel of the solo run appears in the wide run with an
        // identical latent row...
        for (i, c) in small.coords().iter().enumerate() {
            let j = big.position_of(*c).expect("committed voxel missing from wide run");
            assert_eq!(big.feature_row(j).unwrap(), small.feature_row(i).unwrap());
        }
        // ...and the wide run has nothing else inside the first tile's
        // columns.
        let inside_first = big
            .coords()
            .iter()
            .filter(|c| c.x < 16 && c.y < 16)
            .count();
        assert_eq!(inside_first, small.len());
    }

    #[test]
    fn window_runs_are_seed_deterministic() {
        let gen = GenerateParams {
            resolution: 128,
            voxel_size: 0.5,
            latent_channels: 8,
            seed: 17,
            ..GenerateParams::default()
        };
        let params = WindowParams { scene: 192, window: 128, overlap: 64 };
        let run = || {
            sliding_window_generate(
                |_| Ok(Box::new(SeededRandomField::new(1)) as Box<dyn VelocityField>),
                |_, _| Ok(Box::new(SeededRandomField::new(2)) as Box<dyn VelocityField>),
                &params,
                &gen,
            )
            .unwrap()
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn window_validates_resolution_against_tiling() {
        let gen = GenerateParams {
            resolution: 256,
            ..GenerateParams::default()
        };
        let params = WindowParams { scene: 384, window: 128, overlap: 64 };
        let err = sliding_window_generate(
            |_| Ok(Box::new(SeededRandomField::new(1)) as Box<dyn VelocityField>),
            |_, _| Ok(Box::new(SeededRandomField::new(2)) as Box<dyn VelocityField>),
            &params,
            &gen,
        );
        assert!(err.is_err());
    }
}
