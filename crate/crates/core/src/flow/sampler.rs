//! Euler integration with classifier-free guidance.

use crate::error::{Error, Result};
use crate::flow::fields::VelocityField;
use crate::rng::SeededRng;

/// Classifier-free guidance: `v = uncond + scale * (cond - uncond)`.
/// `scale = 1` returns the conditional branch; equal branches collapse to
/// themselves for every scale.
pub fn cfg_combine(uncond: &[f32], cond: &[f32], scale: f64) -> Result<Vec<f32>> {
    if uncond.len() != cond.len() {
        return Err(Error::LengthMismatch {
            what: "guidance branches",
            expected: uncond.len(),
            actual: cond.len(),
        });
    }
    let s = scale as f32;
    Ok(uncond
        .iter()
        .zip(cond)
        .map(|(u, c)| u + s * (c - u))
        .collect())
}

/// Standard-normal noise vector drawn from the seeded stream.
pub fn gaussian_noise(len: usize, rng: &mut SeededRng) -> Vec<f32> {
    (0..len).map(|_| rng.normal_f32()).collect()
}

/// Euler-integrates `field` from `init` over `timesteps`, calling
/// `after_step` with the f64 working state and the new time after every
/// step. The state accumulates in f64 so integration error stays near f32
/// rounding of the result.
///
/// `timesteps` must be strictly decreasing with at least two entries (the
/// usual grid runs from 1 to 0).
pub fn sample_with(
    field: &dyn VelocityField,
    init: &[f32],
    timesteps: &[f64],
    cfg_scale: f64,
    mut after_step: impl FnMut(&mut [f64], f64) -> Result<()>,
) -> Result<Vec<f32>> {
    if timesteps.len() < 2 {
        return Err(Error::InvalidParam(
            "need at least two timesteps to integrate".into(),
        ));
    }
    if timesteps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParam(
            "timesteps must be strictly decreasing".into(),
        ));
    }

    let mut state: Vec<f64> = init.iter().map(|&v| v as f64).collect();
    let mut state_f32: Vec<f32> = init.to_vec();
    for k in 0..timesteps.len() - 1 {
        let t = timesteps[k];
        let dt = timesteps[k + 1] - t;
        let uncond = field.velocity(&state_f32, t, false)?;
        let cond = field.velocity(&state_f32, t, true)?;
        let v = cfg_combine(&uncond, &cond, cfg_scale)?;
        if v.len() != state.len() {
            return Err(Error::LengthMismatch {
                what: "predicted velocity",
                expected: state.len(),
                actual: v.len(),
            });
        }
        for (x, &vi) in state.iter_mut().zip(&v) {
            *x += dt * vi as f64;
        }
        after_step(&mut state, timesteps[k + 1])?;
        for (dst, &src) in state_f32.iter_mut().zip(&state) {
            *dst = src as f32;
        }
    }
    Ok(state_f32)
}

/// [`sample_with`] without a per-step hook.
pub fn sample(
    field: &dyn VelocityField,
    init: &[f32],
    timesteps: &[f64],
    cfg_scale: f64,
) -> Result<Vec<f32>> {
    sample_with(field, init, timesteps, cfg_scale, |_, _| Ok(()))
}
