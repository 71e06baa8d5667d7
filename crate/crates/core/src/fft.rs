//! Periodic 2-D correlations through `rustfft`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// In-place 2-D DFT of a row-major `height x width` buffer.
pub(crate) fn fft2(data: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    debug_assert_eq!(data.len(), width * height);
    let mut planner = FftPlanner::<f64>::new();
    let row = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for chunk in data.chunks_exact_mut(width) {
        row.process(chunk);
    }
    let col = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut column = vec![Complex::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
    if inverse {
        let scale = 1.0 / (width * height) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

pub(crate) fn forward(values: &[f64], width: usize, height: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut buf, width, height, false);
    buf
}

/// Periodic cross-correlation `c(t) = sum_z a(z) b(z + t)`.
pub(crate) fn cross_correlate(a: &[f64], b: &[f64], width: usize, height: usize) -> Vec<f64> {
    let fa = forward(a, width, height);
    let fb = forward(b, width, height);
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    fft2(&mut prod, width, height, true);
    prod.into_iter().map(|c| c.re).collect()
}

/// Periodic convolution `c(x) = sum_y a(y) b(x - y)`.
pub(crate) fn convolve(a: &[f64], b: &[f64], width: usize, height: usize) -> Vec<f64> {
    let fa = forward(a, width, height);
    let fb = forward(b, width, height);
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    fft2(&mut prod, width, height, true);
    prod.into_iter().map(|c| c.re).collect()
}
