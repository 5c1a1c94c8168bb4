//! Classical fourth-order Runge-Kutta step.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;

/// Scratch space for [`Rk4::step`], sized for one state dimension.
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Rk4 {
        Rk4 { k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]], tmp: vec![0.0; n] }
    }

    /// Advances `y` from `t` to `t + h` for `y' = f(t, y)`.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [f64], h: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        f(t, y, &mut self.k[0])?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k[0][i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k[1])?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k[1][i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k[2])?;
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k[2][i];
        }
        f(t + h, &self.tmp, &mut self.k[3])?;
        for i in 0..n {
            y[i] += h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        Ok(())
    }
}
