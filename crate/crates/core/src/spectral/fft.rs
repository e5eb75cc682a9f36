//! Multi-dimensional complex FFT on row-major arrays, built on `rustfft`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = plans.lock().unwrap();
    let key = (len, direction == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return Arc::clone(p);
    }
    let p = guard.0.plan_fft(len, direction);
    guard.1.insert(key, Arc::clone(&p));
    p
}

/// Unnormalized in-place transform of every axis of `data` (shape `sizes`,
/// last axis contiguous).
pub(crate) fn fft_nd(data: &mut [Complex64], sizes: &[usize], direction: FftDirection) {
    debug_assert_eq!(data.len(), sizes.iter().product::<usize>());
    let total = data.len();
    let mut line_buf: Vec<Complex64> = Vec::new();
    for axis in 0..sizes.len() {
        let n = sizes[axis];
        if n == 1 {
            continue;
        }
        let fft = plan(n, direction);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let stride: usize = sizes[axis + 1..].iter().product();
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        // Gather strided lines of one outer block into contiguous rows,
        // transform them together, scatter back.
        let block = n * stride;
        line_buf.resize(block, Complex64::new(0.0, 0.0));
        for outer in (0..total).step_by(block) {
            let src = &data[outer..outer + block];
            for j in 0..stride {
                for i in 0..n {
                    line_buf[j * n + i] = src[i * stride + j];
                }
            }
            fft.process_with_scratch(&mut line_buf, &mut scratch);
            let dst = &mut data[outer..outer + block];
            for j in 0..stride {
                for i in 0..n {
                    dst[i * stride + j] = line_buf[j * n + i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Direct O(n^2) DFT for a 2-D array.
    fn dft2(data: &[Complex64], n0: usize, n1: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n0 * n1];
        for k0 in 0..n0 {
            for k1 in 0..n1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..n0 {
                    for j1 in 0..n1 {
                        let ph = -2.0 * PI * ((k0 * j0) as f64 / n0 as f64 + (k1 * j1) as f64 / n1 as f64);
                        acc += data[j0 * n1 + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[k0 * n1 + k1] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_direct_dft_on_rectangular_array() {
        let (n0, n1) = (8, 16);
        let data: Vec<Complex64> = (0..n0 * n1)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &[n0, n1], FftDirection::Forward);
        let slow = dft2(&data, n0, n1);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}
