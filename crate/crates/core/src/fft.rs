//! Centered 2-D FFT on square row-major buffers.
//!
//! Rows are transformed in parallel; each row's arithmetic is independent of
//! the thread that runs it, so output is bit-identical across pool sizes.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    planner.plan_fft(n, direction)
}

fn transform_rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

pub(crate) fn transpose(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Swap quadrants so that index n/2 moves to 0 (and back; self-inverse for even n).
pub(crate) fn swap_quadrants<T>(data: &mut [T], n: usize) {
    let h = n / 2;
    for i in 0..h {
        let (top, bottom) = data.split_at_mut((i + h) * n);
        let a = &mut top[i * n..i * n + n];
        let b = &mut bottom[..n];
        a[..h].swap_with_slice(&mut b[h..]);
        a[h..].swap_with_slice(&mut b[..h]);
    }
}

/// Unnormalized centered DFT: the sample at index n/2 is the origin in both domains.
pub(crate) fn centered_fft2(data: &mut [Complex64], n: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n * n);
    let fft = plan(n, direction);
    swap_quadrants(data, n);
    transform_rows(data, n, &fft);
    transpose(data, n);
    transform_rows(data, n, &fft);
    transpose(data, n);
    swap_quadrants(data, n);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_is_involution() {
        let n = 70;
        let orig: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let mut d = orig.clone();
        transpose(&mut d, n);
        assert_eq!(d[n + 2], orig[2 * n + 1]);
        transpose(&mut d, n);
        assert_eq!(d, orig);
    }

    #[test]
    fn delta_at_center_is_flat() {
        let n = 16;
        let mut d = vec![Complex64::default(); n * n];
        d[(n / 2) * n + n / 2] = Complex64::new(1.0, 0.0);
        centered_fft2(&mut d, n, FftDirection::Forward);
        for v in &d {
            assert!((v.re - 1.0).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }
}
