//! Radix-2 FFT for power-of-two lengths, plus a packed real-input transform.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// In-place iterative radix-2 complex FFT of a fixed size.
#[derive(Debug, Clone)]
pub struct ComplexFft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl ComplexFft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(invalid("FFT length must be a non-zero power of two"));
        }
        let twiddles = (0..n / 2)
            .map(|j| {
                let a = -2.0 * PI * j as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Ok(Self {
            n,
            twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform, no scaling.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.n {
            let half = size / 2;
            let stride = self.n / size;
            for start in (0..self.n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    /// Inverse transform scaled by `1/n`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for c in buf.iter_mut() {
            *c = c.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c = c.conj() * scale;
        }
    }
}

/// Real-input FFT of even power-of-two length `n`, producing `n/2 + 1` bins.
#[derive(Debug, Clone)]
pub struct RealFft {
    n: usize,
    inner: ComplexFft,
    // e^{-2 pi i k / n} for k in 0..=n/2
    post: Vec<Complex64>,
    scratch_len: usize,
}

impl RealFft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid("real FFT length must be a power of two >= 2"));
        }
        let half = n / 2;
        let post = (0..=half)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Ok(Self {
            n,
            inner: ComplexFft::new(half)?,
            post,
            scratch_len: half,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn make_scratch(&self) -> Vec<Complex64> {
        alloc::vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    /// `input.len() == n`, `output.len() == n/2 + 1`.
    pub fn forward(&self, input: &[f64], output: &mut [Complex64], scratch: &mut [Complex64]) {
        let half = self.n / 2;
        debug_assert_eq!(input.len(), self.n);
        debug_assert_eq!(output.len(), half + 1);
        for (z, pair) in scratch.iter_mut().zip(input.chunks_exact(2)) {
            *z = Complex64::new(pair[0], pair[1]);
        }
        self.inner.forward(scratch);
        for k in 0..=half {
            let zk = scratch[k % half];
            let zc = scratch[(half - k) % half].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            output[k] = even + self.post[k] * odd;
        }
    }

    /// Inverse of [`RealFft::forward`] including the `1/n` factor. Imaginary parts of the DC
    /// and Nyquist bins are ignored.
    pub fn inverse(&self, input: &[Complex64], output: &mut [f64], scratch: &mut [Complex64]) {
        let half = self.n / 2;
        debug_assert_eq!(input.len(), half + 1);
        debug_assert_eq!(output.len(), self.n);
        for k in 0..half {
            let xk = input[k];
            let xc = input[half - k].conj();
            let even = (xk + xc) * 0.5;
            let odd = (xk - xc) * self.post[k].conj() * 0.5;
            scratch[k] = even + Complex64::new(-odd.im, odd.re);
        }
        self.inner.inverse(scratch);
        for (pair, z) in output.chunks_exact_mut(2).zip(scratch.iter()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (i, &v)| {
                    let a = -2.0 * PI * (k * i) as f64 / n as f64;
                    acc + Complex64::new(libm::cos(a), libm::sin(a)) * v
                })
            })
            .collect()
    }

    #[test]
    fn real_fft_matches_naive_dft() {
        for &n in &[2usize, 4, 8, 64, 256] {
            let x: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 * 0.37) + (i % 5) as f64 * 0.1).collect();
            let plan = RealFft::new(n).unwrap();
            let mut out = alloc::vec![Complex64::new(0.0, 0.0); plan.bins()];
            let mut scratch = plan.make_scratch();
            plan.forward(&x, &mut out, &mut scratch);
            for (a, b) in out.iter().zip(naive_dft(&x)) {
                assert!((a - b).norm() < 1e-9, "n={n}: {a} vs {b}");
            }
            let mut back = alloc::vec![0.0; n];
            plan.inverse(&out, &mut back, &mut scratch);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(RealFft::new(6).is_err());
        assert!(ComplexFft::new(0).is_err());
    }
}
