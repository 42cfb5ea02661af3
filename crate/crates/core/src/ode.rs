//! Classical fixed-step Runge-Kutta integration over flat state vectors.

pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `y` from `t` to `t + dt` in place. `f(t, y, dy)` writes the
    /// time derivative of `y` into `dy`.
    pub(crate) fn step<F>(&mut self, mut f: F, t: f64, y: &mut [f64], dt: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        debug_assert_eq!(n, self.k1.len());
        let half = 0.5 * dt;

        f(t, y, &mut self.k1);
        for ((m, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *m = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k2);
        for ((m, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *m = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k3);
        for ((m, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *m = yi + dt * k;
        }
        f(t + dt, &self.tmp, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}
