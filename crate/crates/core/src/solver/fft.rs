use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Two-dimensional FFT on a row-major `rows × cols` grid.
pub struct Fft2 {
    cols: usize,
    rows: usize,
    fwd_c: Arc<dyn Fft<f64>>,
    inv_c: Arc<dyn Fft<f64>>,
    fwd_r: Arc<dyn Fft<f64>>,
    inv_r: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(cols: usize, rows: usize) -> Fft2 {
        let mut p = FftPlanner::new();
        Fft2 {
            cols,
            rows,
            fwd_c: p.plan_fft_forward(cols),
            inv_c: p.plan_fft_inverse(cols),
            fwd_r: p.plan_fft_forward(rows),
            inv_r: p.plan_fft_inverse(rows),
        }
    }

    fn transpose(src: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); w * h];
        out.par_chunks_mut(h).enumerate().for_each(|(c, col)| {
            for (r, v) in col.iter_mut().enumerate() {
                *v = src[r * w + c];
            }
        });
        out
    }

    fn pass(data: &mut [Complex64], len: usize, plan: &Arc<dyn Fft<f64>>) {
        data.par_chunks_mut(len).for_each_init(
            || vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
            |scratch, chunk| plan.process_with_scratch(chunk, scratch),
        );
    }

    pub fn forward(&self, data: &mut Vec<Complex64>) {
        Self::pass(data, self.cols, &self.fwd_c);
        let mut t = Self::transpose(data, self.cols, self.rows);
        Self::pass(&mut t, self.rows, &self.fwd_r);
        *data = Self::transpose(&t, self.rows, self.cols);
    }

    /// Inverse transform including the `1/(rows·cols)` normalization.
    pub fn inverse(&self, data: &mut Vec<Complex64>) {
        Self::pass(data, self.cols, &self.inv_c);
        let mut t = Self::transpose(data, self.cols, self.rows);
        Self::pass(&mut t, self.rows, &self.inv_r);
        *data = Self::transpose(&t, self.rows, self.cols);
        let s = 1.0 / (self.cols * self.rows) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
}

/// Signed frequency index of FFT bin `k` of an `n`-point transform.
pub fn freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
