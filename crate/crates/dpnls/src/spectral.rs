//! FFT-backed transforms: line-grid Fourier pairs, spectral differentiation,
//! and the half-sample sine transform used by the radial d = 3 propagator.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::LineGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Unnormalized forward DFT.
pub fn fft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    plan_forward(values.len()).process(&mut buf);
    buf
}

/// Inverse DFT normalized by 1/N, so `ifft(fft(x)) == x` to roundoff.
pub fn ifft(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    plan_inverse(coeffs.len()).process(&mut buf);
    let scale = 1.0 / coeffs.len() as f64;
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Spectral derivative on the periodic line: multiply by `i k` in Fourier
/// space, zeroing the Nyquist bin.
pub fn spectral_derivative(grid: &LineGrid, values: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    debug_assert_eq!(values.len(), n);
    let mut coeffs = fft(values);
    for (j, c) in coeffs.iter_mut().enumerate() {
        if j == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, grid.wavenumber(j));
        }
    }
    ifft(&coeffs)
}

/// Half-sample sine transform (DST-II) on nodes `r_i = (i + 1/2) R / N`,
/// realized through a length-4N complex FFT of the odd extension.
///
/// Basis functions are `sin(k pi r / R)` for `k = 1..=N`; they vanish at both
/// `r = 0` and `r = R`, matching the Dirichlet reduction `v = r u` of the
/// radial Laplacian in d = 3.
pub struct HalfSampleSine {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl HalfSampleSine {
    pub fn new(n: usize) -> Self {
        Self { n, fwd: plan_forward(4 * n), inv: plan_inverse(4 * n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Apply a diagonal multiplier in sine space: mode `k` (1-based, so the
    /// wavenumber is `k pi / R`) is scaled by `multiplier(k)`. The map is
    /// unitary whenever `|multiplier| == 1`.
    pub fn apply_multiplier(&self, values: &mut [Complex64], multiplier: impl Fn(usize) -> Complex64) {
        let n = self.n;
        debug_assert_eq!(values.len(), n);
        let mut z = vec![Complex64::new(0.0, 0.0); 4 * n];
        for i in 0..n {
            z[2 * i + 1] = values[i];
            z[4 * n - 2 * i - 1] = -values[i];
        }
        self.fwd.process(&mut z);
        // Bin j of the extended transform carries sine mode k = min(j mod 2N,
        // 2N - j mod 2N); bins with k == 0 or k == 2N hold no signal.
        for (j, c) in z.iter_mut().enumerate() {
            let m = j % (2 * n);
            let k = m.min(2 * n - m);
            if k == 0 || k > n {
                continue;
            }
            *c *= multiplier(k);
        }
        self.inv.process(&mut z);
        let scale = 1.0 / (4 * n) as f64;
        for i in 0..n {
            values[i] = z[2 * i + 1] * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fft_roundtrip() {
        let g = LineGrid::new(128, 10.0).unwrap();
        let vals: Vec<Complex64> = (0..g.n())
            .map(|j| Complex64::new((g.node(j) * 0.7).sin(), (g.node(j) * 1.3).cos()))
            .collect();
        let back = ifft(&fft(&vals));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = LineGrid::new(256, 20.0).unwrap();
        let k = g.wavenumber(5);
        let vals: Vec<Complex64> =
            (0..g.n()).map(|j| Complex64::new(0.0, k * g.node(j)).exp()).collect();
        let d = spectral_derivative(&g, &vals);
        for (j, dj) in d.iter().enumerate() {
            let exact = Complex64::new(0.0, k) * vals[j];
            assert!((dj - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn sine_identity_multiplier_is_identity() {
        let n = 300;
        let t = HalfSampleSine::new(n);
        let mut vals: Vec<Complex64> =
            (0..n).map(|i| Complex64::new((i as f64 * 0.01).sin(), (i as f64 * 0.02).cos())).collect();
        let orig = vals.clone();
        t.apply_multiplier(&mut vals, |_| Complex64::new(1.0, 0.0));
        for (a, b) in orig.iter().zip(&vals) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sine_mode_is_eigenvector() {
        // values v_i = sin(k pi r_i / R) should be scaled exactly by mu(k).
        let n = 128;
        let r_max = 7.0;
        let t = HalfSampleSine::new(n);
        for k in [1usize, 2, 17, n] {
            let mut vals: Vec<Complex64> = (0..n)
                .map(|i| {
                    let r = (i as f64 + 0.5) * r_max / n as f64;
                    Complex64::new((k as f64 * std::f64::consts::PI * r / r_max).sin(), 0.0)
                })
                .collect();
            let orig = vals.clone();
            let mu = Complex64::new(0.3, -0.8);
            t.apply_multiplier(&mut vals, |m| if m == k { mu } else { Complex64::new(1.0, 0.0) });
            for (a, b) in orig.iter().zip(&vals) {
                assert!((a * mu - b).norm() < 1e-10, "mode {k} not an eigenvector");
            }
        }
    }

    #[test]
    fn sine_matches_naive_transform_roundtrip() {
        // Compare against a direct O(N^2) DST-II / DST-III pipeline.
        let n = 48;
        let t = HalfSampleSine::new(n);
        let xs: Vec<Complex64> =
            (0..n).map(|i| Complex64::new((0.3 * i as f64).cos(), 0.1 * i as f64)).collect();

        // naive coefficients for modes k = 1..=N
        let coeff = |k: usize| -> Complex64 {
            (0..n)
                .map(|i| {
                    xs[i] * ((k as f64) * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin()
                })
                .sum()
        };
        let mu = |k: usize| Complex64::new(0.0, -(k as f64) * 0.01).exp();
        let mut fast = xs.clone();
        t.apply_multiplier(&mut fast, mu);

        // naive reconstruction: x_i = (2/N) sum_k' c_k mu_k sin(...) with the
        // top mode halved
        for i in 0..n {
            let mut v = Complex64::new(0.0, 0.0);
            for k in 1..=n {
                let w = if k == n { 0.5 } else { 1.0 };
                v += coeff(k)
                    * mu(k)
                    * ((k as f64) * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin()
                    * w;
            }
            v *= 2.0 / n as f64;
            assert!((v - fast[i]).norm() < 1e-10, "mismatch at {i}");
        }
    }

    #[test]
    fn parseval_on_line() {
        let g = LineGrid::new(512, 30.0).unwrap();
        let vals: Vec<Complex64> = (0..g.n())
            .map(|j| Complex64::new((-g.node(j).powi(2) / 2.0).exp(), 0.3 * (g.node(j)).cos()))
            .collect();
        let coeffs = fft(&vals);
        let direct: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
        let spectral: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / g.n() as f64;
        assert_relative_eq!(direct, spectral, max_relative = 1e-12);
    }
}
