//! Classical fourth-order Runge-Kutta on real state vectors.

use alloc::vec;
use alloc::vec::Vec;

/// Reusable RK4 stepper for a fixed state length.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    /// Advance `y` from `t` to `t + h`. `rhs(t, y, dy)` writes the derivative.
    pub fn step<F>(&mut self, rhs: &mut F, t: f64, h: f64, y: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        rhs(t, y, &mut self.k1);
        for ((m, &yi), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *m = yi + 0.5 * h * k;
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        for ((m, &yi), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *m = yi + 0.5 * h * k;
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
        for ((m, &yi), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *m = yi + h * k;
        }
        rhs(t + h, &self.tmp, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrate `steps` equal steps of size `h`, calling `observe(k, t, y)` at
/// the start and after every step.
pub fn integrate<F, O>(mut rhs: F, t0: f64, y: &mut [f64], h: f64, steps: usize, mut observe: O)
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(usize, f64, &[f64]),
{
    let mut rk = Rk4::new(y.len());
    observe(0, t0, y);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        rk.step(&mut rhs, t, h, y);
        observe(k + 1, t0 + (k + 1) as f64 * h, y);
    }
}

/// Integrate from `t0` to `t1` in the fewest equal steps no longer than
/// `h_max`, calling `observe(t, y)` after every step.
pub fn integrate_span<F, O>(rhs: &mut F, y: &mut [f64], t0: f64, t1: f64, h_max: f64, mut observe: O)
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    if !(t1 > t0) {
        return;
    }
    let steps = libm::ceil((t1 - t0) / h_max - 1e-9).max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        rk.step(rhs, t0 + k as f64 * h, h, y);
        observe(t0 + (k + 1) as f64 * h, y);
    }
}
