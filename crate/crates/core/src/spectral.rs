//! FFT helpers on uniform periodic grids.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Angular wavenumbers of an `n`-point grid on a domain of `length`, in
/// FFT order with the Nyquist mode negative.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * PI / length;
    (0..n)
        .map(|j| {
            let j = j as i64;
            let signed = if j >= (n as i64 + 1) / 2 { j - n as i64 } else { j };
            if n % 2 == 0 && signed == -(n as i64) / 2 {
                -(n as f64) / 2.0 * base
            } else {
                signed as f64 * base
            }
        })
        .collect()
}

pub struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    xi: Vec<f64>,
}

impl Spectral {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), xi: wavenumbers(n, length) }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` normalisation.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / buf.len() as f64;
        for z in buf {
            *z *= s;
        }
    }

    /// Spectral first derivative; the unpaired Nyquist mode is dropped.
    pub fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = values.len();
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (j, (z, &k)) in buf.iter_mut().zip(&self.xi).enumerate() {
            if n % 2 == 0 && j == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, k);
            }
        }
        self.inverse(&mut buf);
        buf
    }
}
