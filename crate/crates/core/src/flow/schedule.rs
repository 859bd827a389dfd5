//! Shift-warped sampling schedules.

use crate::error::{Error, Result};

pub const DEFAULT_STEPS: usize = 25;
pub const DEFAULT_SHIFT: f64 = 3.0;
pub const DEFAULT_CFG_SCALE: f64 = 3.0;

/// `steps + 1` timesteps from 1 down to 0.
///
/// A uniform grid `u_k = 1 - k / steps` is warped through
/// `t = shift * u / (1 + (shift - 1) * u)`, which spends more steps near
/// the data end for `shift > 1`. The endpoints stay exactly 1 and 0, the
/// sequence is strictly decreasing, and `shift = 1` degenerates to the
/// uniform grid bit for bit.
pub fn shifted_timesteps(steps: usize, shift: f64) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidParam("step count must be positive".into()));
    }
    if !(shift > 0.0) || !shift.is_finite() {
        return Err(Error::InvalidParam(format!("shift must be positive, got {shift}")));
    }
    Ok((0..=steps)
        .map(|k| {
            // The warp fixes u = 1 and u = 0 for every shift, but the
            // division only lands on them bit-exactly when `shift - 1` is
            // exact in binary; pin the endpoints instead.
            if k == 0 {
                1.0
            } else if k == steps {
                0.0
            } else {
                let u = 1.0 - k as f64 / steps as f64;
                shift * u / (1.0 + (shift - 1.0) * u)
            }
        })
        .collect())
}
