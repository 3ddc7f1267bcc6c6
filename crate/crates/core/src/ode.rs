//! Classic fixed-step fourth-order Runge–Kutta for complex state vectors.

use crate::grid::C64;

/// Scratch buffers for [`Rk4::step`], sized once per trajectory.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `y` from `t` to `t + dt` for y' = f(t, y).
    pub fn step<F>(&mut self, y: &mut [C64], t: f64, dt: f64, mut f: F)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let h2 = 0.5 * dt;
        f(t, y, &mut self.k1);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = yi + k * h2;
        }
        f(t + h2, &self.tmp, &mut self.k2);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = yi + k * h2;
        }
        f(t + h2, &self.tmp, &mut self.k3);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = yi + k * dt;
        }
        f(t + dt, &self.tmp, &mut self.k4);
        let w = dt / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]) * w;
        }
    }
}

/// Number of uniform steps covering [0, t_final] with step ≤ `dt`, and the
/// step actually used.
pub fn uniform_steps(t_final: f64, dt: f64) -> (usize, f64) {
    if t_final <= 0.0 {
        return (0, dt);
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    (steps, t_final / steps as f64)
}
