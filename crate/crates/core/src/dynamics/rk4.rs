use crate::operator::{C64, ZERO};

/// Classical fourth-order Runge–Kutta with reusable stage buffers.
pub(crate) struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![ZERO; len],
            k2: vec![ZERO; len],
            k3: vec![ZERO; len],
            k4: vec![ZERO; len],
            tmp: vec![ZERO; len],
        }
    }

    pub fn step<F>(&mut self, f: &mut F, t: f64, dt: f64, y: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = y + k * half;
        }
        f(t + half, &self.tmp, &mut self.k2);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = y + k * half;
        }
        f(t + half, &self.tmp, &mut self.k3);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = y + k * dt;
        }
        f(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }

    /// Advances `y` by two half steps and returns the Frobenius norm of the
    /// difference from a single full step (the step-doubling estimate).
    pub fn double_step<F>(&mut self, f: &mut F, t: f64, dt: f64, y: &mut [C64]) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let mut full = y.to_vec();
        self.step(f, t, dt, &mut full);
        self.step(f, t, 0.5 * dt, y);
        self.step(f, t + 0.5 * dt, 0.5 * dt, y);
        full.iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}
