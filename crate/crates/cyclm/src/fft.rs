//! Shared FFT plan cache (rustfft) plus the complex buffer alias used by the
//! circulant sampler and the periodogram.

use once_cell::sync::Lazy;
use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub use rustfft::num_complex::Complex64 as C64;

static FORWARD_PLANS: Lazy<Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    let mut plans = FORWARD_PLANS.lock().unwrap();
    plans
        .entry(n)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(n))
        .clone()
}

/// In-place forward FFT (unnormalized, e^{-2πi jk/n} convention).
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    forward_plan(buf.len()).process(buf);
}

/// Next power of two ≥ `n` (n ≥ 1).
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}
