//! Classical fixed-step fourth-order Runge–Kutta.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size must be positive and finite, got {dt}")]
    BadStep { dt: f64 },
    #[error("non-finite derivative at t = {t}: component {index}")]
    NonFiniteDerivative { t: f64, index: usize },
}

/// Reusable stage buffers so the integration loop allocates nothing.
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        Rk4Scratch {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advance `y` from `t` to `t + dt` in place. The derivative is evaluated
    /// at all four stage points; a non-finite stage derivative aborts with
    /// the offending component index.
    pub fn step<F>(&mut self, f: &mut F, t: f64, dt: f64, y: &mut [f64]) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(OdeError::BadStep { dt });
        }
        let n = y.len();
        debug_assert_eq!(self.k1.len(), n);

        f(t, y, &mut self.k1);
        check_finite(t, &self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k1[i];
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k2);
        check_finite(t + 0.5 * dt, &self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k2[i];
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k3);
        check_finite(t + 0.5 * dt, &self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4);
        check_finite(t + dt, &self.k4)?;
        for i in 0..n {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

fn check_finite(t: f64, k: &[f64]) -> Result<(), OdeError> {
    for (index, v) in k.iter().enumerate() {
        if !v.is_finite() {
            return Err(OdeError::NonFiniteDerivative { t, index });
        }
    }
    Ok(())
}

/// One Runge–Kutta step returning the new state.
pub fn rk4_step<F>(mut f: F, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = y.to_vec();
    let mut scratch = Rk4Scratch::new(y.len());
    scratch.step(&mut f, t, dt, &mut out)?;
    Ok(out)
}

/// Convenience wrapper: step `y` into `out` without consuming the scratch.
pub fn rk4_step_into<F>(
    scratch: &mut Rk4Scratch,
    f: &mut F,
    t: f64,
    dt: f64,
    y: &mut [f64],
) -> Result<(), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    scratch.step(f, t, dt, y)
}
