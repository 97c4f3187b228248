//! Radix-2 complex FFT with precomputed twiddle factors.
//!
//! Grid sizes are powers of two by construction (see
//! [`crate::spectral::FourierGrid`]), so a plain iterative Cooley-Tukey
//! transform suffices. The plan owns the bit-reversal table and twiddles so
//! repeated transforms on the same grid do no re-computation.
//!
//! Normalization convention: `forward` produces Fourier *coefficients*,
//! `u_hat[k] = (1/n) * sum_m u[m] e^{-i xi_k x_m}`, so that `u_hat[k]` is the
//! coefficient of `e^{i xi_k x}`; `inverse` is the unscaled synthesis sum.
//! Frequencies sit in FFT order: index `k` carries `xi = k` for `k <= n/2`
//! and `xi = k - n` otherwise.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

/// Precomputed transform plan for one power-of-two size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    /// e^{-2 pi i k / n} for k < n/2 (forward); conjugated for inverse.
    twiddles: Vec<Complex64>,
    bit_rev: Vec<u32>,
}

impl FftPlan {
    /// Build a plan for size `n` (must be a power of two, n >= 2).
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "FFT size must be a power of two >= 2");
        let mut twiddles = Vec::with_capacity(n / 2);
        for k in 0..n / 2 {
            let angle = -2.0 * core::f64::consts::PI * (k as f64) / (n as f64);
            twiddles.push(Complex64::new(Float::cos(angle), Float::sin(angle)));
        }
        let log2n = n.trailing_zeros();
        let mut bit_rev = Vec::with_capacity(n);
        for i in 0..n {
            bit_rev.push((i as u32).reverse_bits() >> (32 - log2n));
        }
        FftPlan { n, twiddles, bit_rev }
    }

    /// Transform size.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Whether the plan is for the degenerate size 0 (never true).
    pub fn is_empty(&self) -> bool {
        false
    }

    fn butterfly(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bit_rev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2usize;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len *= 2;
        }
    }

    /// In-place forward transform producing Fourier coefficients (1/n scaled).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.butterfly(data, false);
        let scale = 1.0 / (self.n as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// In-place inverse transform (unscaled synthesis).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.butterfly(data, true);
    }
}
