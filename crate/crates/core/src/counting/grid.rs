//! Tensor grids and separable FFTs over them.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalized FFT of a row-major array along every axis.
pub(super) fn fftn(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len());
    let mut stride = total;
    for &len in shape {
        stride /= len;
        if len == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let block = len * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// Signed frequency of FFT bin `i` on an axis of length `len`.
pub(super) fn signed_freq(i: usize, len: usize) -> i64 {
    if 2 * i < len {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

/// Multi-index of flat position `idx` (row-major).
pub(super) fn unflatten(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for (o, &len) in out.iter_mut().zip(shape).rev() {
        *o = idx % len;
        idx /= len;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_two_dimensional() {
        let shape = [4, 3];
        let data: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut out = data.clone();
        fftn(&mut out, &shape, false);
        for k0 in 0..4 {
            for k1 in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..4 {
                    for j1 in 0..3 {
                        let ph = -std::f64::consts::TAU
                            * ((k0 * j0) as f64 / 4.0 + (k1 * j1) as f64 / 3.0);
                        acc += data[j0 * 3 + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - out[k0 * 3 + k1]).norm() < 1e-9);
            }
        }
        fftn(&mut out, &shape, true);
        for (a, b) in out.iter().zip(&data) {
            assert!((a / 12.0 - b).norm() < 1e-9);
        }
    }
}
