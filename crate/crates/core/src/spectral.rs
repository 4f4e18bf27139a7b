//! 2D FFT on square periodic grids and the matching wavenumber tables.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized 2D transforms on an `n × n` row-major grid (`idx = j·n + i`,
/// `i` along x). `inverse(forward(u)) = n² · u`.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "grid size mismatch");
        plan.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = data[j * n + i];
            }
            plan.process(&mut col);
            for j in 0..n {
                data[j * n + i] = col[j];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Inverse transform scaled by `1/n²`; returns the real part and the
    /// largest discarded imaginary magnitude.
    pub fn inverse_real(&self, mut coeffs: Vec<Complex64>) -> (Vec<f64>, f64) {
        self.inverse(&mut coeffs);
        let scale = 1.0 / (self.n * self.n) as f64;
        let mut residue: f64 = 0.0;
        let values = coeffs
            .iter()
            .map(|c| {
                residue = residue.max((c.im * scale).abs());
                c.re * scale
            })
            .collect();
        (values, residue)
    }
}

/// Signed integer frequency for FFT index `idx` on `n` points, in `[-n/2, n/2)`.
pub fn freq(idx: usize, n: usize) -> i64 {
    if idx < n / 2 || (idx == n / 2 && n % 2 == 1) {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

pub fn is_nyquist(idx: usize, n: usize) -> bool {
    n % 2 == 0 && idx == n / 2
}
