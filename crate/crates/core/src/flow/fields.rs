//! Velocity fields: the pluggable predictor interface and built-in fields.

use crate::error::{Error, Result};
use crate::voxel::{Coord3, SparseVoxelGrid};

/// A velocity predictor for flow-matching integration.
///
/// `state` is the flattened sample (dense raster or per-voxel feature rows)
/// at time `t` in `(0, 1]`; the prediction must have the same length.
/// `conditioned` selects the conditional branch for classifier-free
/// guidance; fields without a condition input may ignore it.
pub trait VelocityField {
    fn velocity(&self, state: &[f32], t: f64, conditioned: bool) -> Result<Vec<f32>>;
}

fn check_len(expected: usize, state: &[f32]) -> Result<()> {
    if state.len() != expected {
        return Err(Error::LengthMismatch {
            what: "field state",
            expected,
            actual: state.len(),
        });
    }
    Ok(())
}

/// Field with the constant velocity `noise - x0`, the exact rectified-flow
/// velocity for the straight path between `x0` and `noise`. Euler
/// integration from `noise` at `t = 1` recovers `x0` at `t = 0` regardless
/// of the step count, which pins the sampler's step math.
#[derive(Debug, Clone)]
pub struct ConstantOracleField {
    x0: Vec<f32>,
    noise: Vec<f32>,
}

impl ConstantOracleField {
    pub fn new(x0: Vec<f32>, noise: Vec<f32>) -> Result<Self> {
        if x0.len() != noise.len() {
            return Err(Error::LengthMismatch {
                what: "oracle noise",
                expected: x0.len(),
                actual: noise.len(),
            });
        }
        Ok(Self { x0, noise })
    }

    pub fn noise(&self) -> &[f32] {
        &self.noise
    }

    pub fn target(&self) -> &[f32] {
        &self.x0
    }
}

impl VelocityField for ConstantOracleField {
    fn velocity(&self, state: &[f32], _t: f64, _conditioned: bool) -> Result<Vec<f32>> {
        check_len(self.x0.len(), state)?;
        Ok(self
            .noise
            .iter()
            .zip(&self.x0)
            .map(|(n, x)| n - x)
            .collect())
    }
}

/// Field whose flow contracts every state onto a fixed target:
/// `v = (x - x0) / t`. One Euler step from `(x, t)` lands on
/// `x0 + (x - x0) * t' / t`, so the error factor telescopes to exactly
/// `t_final / t_start = 0` at the end of any schedule, from any starting
/// state. This makes full pipelines reproduce a chosen shape exactly.
#[derive(Debug, Clone)]
pub struct ShapeOracleField {
    x0: Vec<f32>,
}

impl ShapeOracleField {
    pub fn new(x0: Vec<f32>) -> Self {
        Self { x0 }
    }

    /// Class-mode oracle over a dense `window`^3 raster: +1 where `target`
    /// occupies the cell (looked up at `origin + local` in x/y), -1
    /// elsewhere.
    pub fn dense_class(
        target: &SparseVoxelGrid,
        origin_x: i32,
        origin_y: i32,
        window: u32,
    ) -> Self {
        Self::new(dense_class_targets(target, origin_x, origin_y, window))
    }

    /// Latent-mode oracle over the rows of `domain`: rows of 1.0 where the
    /// voxel belongs to `target`, rows of 0.0 elsewhere. Ones pass the
    /// latent magnitude filter, zeros fail it, so filtering reproduces
    /// `target` within the domain.
    pub fn latent_on(domain: &SparseVoxelGrid, target: &SparseVoxelGrid, channels: usize) -> Self {
        let mut x0 = Vec::with_capacity(domain.len() * channels);
        for &c in domain.coords() {
            let v = if target.contains(c) { 1.0 } else { 0.0 };
            x0.extend(std::iter::repeat_n(v, channels));
        }
        Self::new(x0)
    }
}

impl VelocityField for ShapeOracleField {
    fn velocity(&self, state: &[f32], t: f64, _conditioned: bool) -> Result<Vec<f32>> {
        check_len(self.x0.len(), state)?;
        if !(t > 0.0) {
            return Err(Error::InvalidParam(format!(
                "shape oracle queried at non-positive time {t}"
            )));
        }
        let inv_t = (1.0 / t) as f32;
        Ok(state
            .iter()
            .zip(&self.x0)
            .map(|(x, x0)| (x - x0) * inv_t)
            .collect())
    }
}

/// `window`^3 class targets for a bounded target grid: +1 on occupied
/// cells, -1 elsewhere, x-major z-fastest, with x/y shifted by an origin so
/// a window can sit anywhere over a larger scene.
pub fn dense_class_targets(
    target: &SparseVoxelGrid,
    origin_x: i32,
    origin_y: i32,
    window: u32,
) -> Vec<f32> {
    let w = window as i32;
    let mut x0 = Vec::with_capacity((window as usize).pow(3));
    for x in 0..w {
        for y in 0..w {
            for z in 0..w {
                let occupied = target.contains(Coord3::new(origin_x + x, origin_y + y, z));
                x0.push(if occupied { 1.0 } else { -1.0 });
            }
        }
    }
    x0
}

/// Stateless pseudo-random field: each velocity entry is a hash of
/// `(seed, index, t, conditioned)` mapped to `[-1, 1)`. Deterministic
/// across runs and thread counts, with no usable structure; it exercises
/// samplers and pipelines when no oracle applies.
#[derive(Debug, Clone)]
pub struct SeededRandomField {
    seed: u64,
}

impl SeededRandomField {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl VelocityField for SeededRandomField {
    fn velocity(&self, state: &[f32], t: f64, conditioned: bool) -> Result<Vec<f32>> {
        let base = splitmix64(self.seed ^ t.to_bits()).wrapping_add(u64::from(conditioned));
        Ok((0..state.len())
            .map(|i| {
                let h = splitmix64(base ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
                (unit * 2.0 - 1.0) as f32
            })
            .collect())
    }
}
