//! FFT-based differentiation of uniformly sampled periodic series.
//!
//! Exact (to rounding) for trigonometric polynomials of degree < N/2,
//! which is what makes discrete action gradients sharp.

use num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::vec3::Vec3;

/// Derivative of a real T-periodic series sampled at N uniform nodes.
///
/// Requires N even. The Nyquist mode is dropped (its derivative has no
/// real representation on the grid).
pub fn derivative(samples: &[f64], period: f64) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 2 && n.is_multiple_of(2), "need an even number of samples");
    assert!(period > 0.0);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex<f64>> =
        samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
    fft.process(&mut buf);

    let omega = 2.0 * PI / period;
    for (k, value) in buf.iter_mut().enumerate() {
        let freq = if k < n / 2 {
            k as f64
        } else if k == n / 2 {
            0.0 // Nyquist
        } else {
            k as f64 - n as f64
        };
        *value *= Complex::new(0.0, freq * omega);
    }

    ifft.process(&mut buf);
    buf.iter().map(|v| v.re / n as f64).collect()
}

/// Component-wise spectral derivative of a periodic series of 3-vectors.
pub fn derivative_vec3(samples: &[Vec3], period: f64) -> Vec<Vec3> {
    let xs: Vec<f64> = samples.iter().map(|v| v.x).collect();
    let ys: Vec<f64> = samples.iter().map(|v| v.y).collect();
    let zs: Vec<f64> = samples.iter().map(|v| v.z).collect();
    let dx = derivative(&xs, period);
    let dy = derivative(&ys, period);
    let dz = derivative(&zs, period);
    (0..samples.len())
        .map(|k| Vec3::new(dx[k], dy[k], dz[k]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_constant_is_zero() {
        let d = derivative(&[3.5; 16], 2.0);
        assert!(d.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn pure_harmonics_are_exact() {
        // every frequency below Nyquist reproduces the analytic derivative
        let n = 32;
        let t_period = 3.0;
        let omega = 2.0 * PI / t_period;
        for j in 1..n / 2 {
            let f: Vec<f64> = (0..n)
                .map(|k| (j as f64 * omega * k as f64 * t_period / n as f64).sin())
                .collect();
            let d = derivative(&f, t_period);
            for (k, dk) in d.iter().enumerate() {
                let exact =
                    j as f64 * omega * (j as f64 * omega * k as f64 * t_period / n as f64).cos();
                assert!(
                    (dk - exact).abs() < 1e-10 * (1.0 + exact.abs()),
                    "freq {j}, node {k}: {dk} vs {exact}"
                );
            }
        }
    }
}
