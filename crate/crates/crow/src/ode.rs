//! Fixed-step fourth-order Runge-Kutta over a flat complex amplitude vector.
//!
//! Every backend packs its state into one `Vec<Complex64>` (field amplitudes
//! followed by the atomic amplitude) so the stepping and divergence checks
//! live in one place. Explicit time dependence is handled by evaluating the
//! right-hand side at `t`, `t + dt/2`, and `t + dt`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reusable stage buffers for [`rk4_step`].
pub struct Rk4Scratch {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
}

impl Rk4Scratch {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![Complex64::ZERO; len],
            k2: vec![Complex64::ZERO; len],
            k3: vec![Complex64::ZERO; len],
            k4: vec![Complex64::ZERO; len],
            stage: vec![Complex64::ZERO; len],
        }
    }

    pub fn len(&self) -> usize {
        self.k1.len()
    }
}

fn fill_stage(stage: &mut [Complex64], base: &[Complex64], k: &[Complex64], h: f64) {
    for ((s, b), kk) in stage.iter_mut().zip(base).zip(k) {
        *s = b + kk * h;
    }
}

/// Advance `amp` from `t` to `t + dt` with classical RK4.
///
/// `rhs(amp, t, out)` must write the full time derivative into `out`.
/// Returns a divergence error when any amplitude goes non-finite.
pub fn rk4_step<F>(
    rhs: &mut F,
    amp: &mut [Complex64],
    t: f64,
    dt: f64,
    scratch: &mut Rk4Scratch,
) -> Result<()>
where
    F: FnMut(&[Complex64], f64, &mut [Complex64]),
{
    debug_assert_eq!(amp.len(), scratch.len());
    let half = dt / 2.0;

    rhs(amp, t, &mut scratch.k1);
    fill_stage(&mut scratch.stage, amp, &scratch.k1, half);
    rhs(&scratch.stage, t + half, &mut scratch.k2);
    fill_stage(&mut scratch.stage, amp, &scratch.k2, half);
    rhs(&scratch.stage, t + half, &mut scratch.k3);
    fill_stage(&mut scratch.stage, amp, &scratch.k3, dt);
    rhs(&scratch.stage, t + dt, &mut scratch.k4);

    let w = dt / 6.0;
    let mut max_abs = 0.0f64;
    let mut finite = true;
    for (i, a) in amp.iter_mut().enumerate() {
        *a += (scratch.k1[i] + (scratch.k2[i] + scratch.k3[i]) * 2.0 + scratch.k4[i]) * w;
        let mag = a.norm_sqr();
        finite &= mag.is_finite();
        if mag > max_abs {
            max_abs = mag;
        }
    }
    if !finite {
        return Err(Error::Divergence {
            t: t + dt,
            max_abs: max_abs.sqrt(),
        });
    }
    Ok(())
}
