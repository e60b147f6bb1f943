//! Complex discretized fields with quadrature, differentiation, and binary
//! snapshot I/O.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{DpnlsError, Result};
use crate::grid::{pairwise_sum, Grid, LineGrid, RadialGrid};
use crate::spectral;

const SNAPSHOT_MAGIC: &[u8; 8] = b"DPNLSF1\0";

/// A sampled complex function on one of the two grid types.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(DpnlsError::InvalidField(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        let f = Self { grid, values };
        f.check_finite()?;
        Ok(f)
    }

    pub fn zero(grid: Grid) -> Self {
        let n = grid.n();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_line_fn(grid: LineGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Self { grid: Grid::Line(grid), values }
    }

    pub fn from_radial_fn(grid: RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|i| f(grid.node(i))).collect();
        Self { grid: Grid::Radial(grid), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn is_line(&self) -> bool {
        matches!(self.grid, Grid::Line(_))
    }

    pub fn line_grid(&self) -> Result<LineGrid> {
        match self.grid {
            Grid::Line(g) => Ok(g),
            Grid::Radial(_) => Err(DpnlsError::InvalidField("expected a line field".into())),
        }
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        match self.grid {
            Grid::Radial(g) => Ok(g),
            Grid::Line(_) => Err(DpnlsError::InvalidField("expected a radial field".into())),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(DpnlsError::InvalidField("non-finite sample".into()));
        }
        Ok(())
    }

    /// Quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match &self.grid {
            Grid::Line(g) => {
                let _ = i;
                g.spacing()
            }
            Grid::Radial(g) => g.weight(i),
        }
    }

    /// Integrate a real-valued pointwise map of the samples.
    pub fn integrate(&self, integrand: impl Fn(Complex64) -> f64) -> f64 {
        let terms: Vec<f64> =
            (0..self.values.len()).map(|i| integrand(self.values[i]) * self.weight(i)).collect();
        pairwise_sum(&terms)
    }

    /// Integrate a complex-valued pointwise map of the samples.
    pub fn integrate_complex(&self, integrand: impl Fn(Complex64) -> Complex64) -> Complex64 {
        let re: Vec<f64> =
            (0..self.values.len()).map(|i| integrand(self.values[i]).re * self.weight(i)).collect();
        let im: Vec<f64> =
            (0..self.values.len()).map(|i| integrand(self.values[i]).im * self.weight(i)).collect();
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    }

    /// `∫ |u|^2`.
    pub fn mass(&self) -> f64 {
        self.integrate(|v| v.norm_sqr())
    }

    /// `∫ |u|^q` for `q >= 1`.
    pub fn lp_norm_pow(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(DpnlsError::InvalidParams(format!("lp exponent must be >= 1, got {q}")));
        }
        Ok(self.integrate(|v| v.norm().powf(q)))
    }

    /// First derivative samples: spectral on the line, second-order centered
    /// differences on radial grids (even extension through the origin,
    /// homogeneous Dirichlet past `R`).
    pub fn derivative(&self) -> Vec<Complex64> {
        match &self.grid {
            Grid::Line(g) => spectral::spectral_derivative(g, &self.values),
            Grid::Radial(g) => {
                let n = g.n();
                let inv2dr = 1.0 / (2.0 * g.dr());
                (0..n)
                    .map(|i| {
                        let left = if i == 0 { self.values[0] } else { self.values[i - 1] };
                        let right =
                            if i + 1 < n { self.values[i + 1] } else { Complex64::new(0.0, 0.0) };
                        (right - left) * inv2dr
                    })
                    .collect()
            }
        }
    }

    /// `∫ |∇u|^2`.
    pub fn gradient_sq_norm(&self) -> f64 {
        let d = self.derivative();
        let terms: Vec<f64> = (0..d.len()).map(|i| d[i].norm_sqr() * self.weight(i)).collect();
        pairwise_sum(&terms)
    }

    /// Forward Fourier coefficients; line fields only.
    pub fn fourier_coeffs(&self) -> Result<Vec<Complex64>> {
        self.line_grid()?;
        Ok(spectral::fft(&self.values))
    }

    /// Rebuild a line field from Fourier coefficients.
    pub fn from_fourier_coeffs(grid: LineGrid, coeffs: &[Complex64]) -> Result<Self> {
        Field::new(Grid::Line(grid), spectral::ifft(coeffs))
    }

    /// Fraction of the mass in the outer 10% of the domain.
    pub fn tail_mass_fraction(&self) -> f64 {
        let n = self.values.len();
        let total = self.mass();
        if total <= 0.0 {
            return 0.0;
        }
        let tail: f64 = match &self.grid {
            Grid::Line(g) => {
                // outer 10% means |x| > 0.45 L on the centered line
                let cut = 0.45 * g.length();
                let terms: Vec<f64> = (0..n)
                    .filter(|&j| g.node(j).abs() > cut)
                    .map(|j| self.values[j].norm_sqr() * g.spacing())
                    .collect();
                pairwise_sum(&terms)
            }
            Grid::Radial(g) => {
                let cut = 0.9 * g.r_max();
                let terms: Vec<f64> = (0..n)
                    .filter(|&i| g.node(i) > cut)
                    .map(|i| self.values[i].norm_sqr() * g.weight(i))
                    .collect();
                pairwise_sum(&terms)
            }
        };
        tail / total
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Write the binary snapshot format:
    /// magic `DPNLSF1\0`, u64 kind (0 line, 1 radial), u64 N, geometry as
    /// little-endian f64 (L for line; R then d for radial), then N (re, im)
    /// f64 pairs.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::with_capacity(48 + 16 * self.values.len());
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        match &self.grid {
            Grid::Line(g) => {
                buf.extend_from_slice(&0u64.to_le_bytes());
                buf.extend_from_slice(&(g.n() as u64).to_le_bytes());
                buf.extend_from_slice(&g.length().to_le_bytes());
            }
            Grid::Radial(g) => {
                buf.extend_from_slice(&1u64.to_le_bytes());
                buf.extend_from_slice(&(g.n() as u64).to_le_bytes());
                buf.extend_from_slice(&g.r_max().to_le_bytes());
                buf.extend_from_slice(&(g.d() as f64).to_le_bytes());
            }
        }
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut off = 0usize;
        let take = |off: &mut usize, k: usize| -> Result<&[u8]> {
            if *off + k > bytes.len() {
                return Err(DpnlsError::Format("snapshot truncated".into()));
            }
            let s = &bytes[*off..*off + k];
            *off += k;
            Ok(s)
        };
        if take(&mut off, 8)? != SNAPSHOT_MAGIC {
            return Err(DpnlsError::Format("bad snapshot magic".into()));
        }
        let read_u64 = |s: &[u8]| u64::from_le_bytes(s.try_into().unwrap());
        let read_f64 = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let kind = read_u64(take(&mut off, 8)?);
        let n = read_u64(take(&mut off, 8)?) as usize;
        let grid = match kind {
            0 => {
                let length = read_f64(take(&mut off, 8)?);
                Grid::Line(LineGrid::new(n, length)?)
            }
            1 => {
                let r_max = read_f64(take(&mut off, 8)?);
                let d = read_f64(take(&mut off, 8)?);
                if d < 1.0 || d.fract() != 0.0 {
                    return Err(DpnlsError::Format(format!("bad radial dimension {d}")));
                }
                Grid::Radial(RadialGrid::new(d as u32, n, r_max)?)
            }
            k => return Err(DpnlsError::Format(format!("unknown snapshot kind {k}"))),
        };
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let re = read_f64(take(&mut off, 8)?);
            let im = read_f64(take(&mut off, 8)?);
            values.push(Complex64::new(re, im));
        }
        Field::new(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian_line(n: usize, length: f64) -> Field {
        let g = LineGrid::new(n, length).unwrap();
        Field::from_line_fn(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0))
    }

    #[test]
    fn gaussian_mass_line() {
        let f = gaussian_line(4096, 40.0);
        assert_relative_eq!(f.mass(), PI.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn gaussian_mass_radial_d3() {
        let g = RadialGrid::new(3, 8192, 20.0).unwrap();
        let f = Field::from_radial_fn(g, |r| Complex64::new((-r * r / 2.0).exp(), 0.0));
        assert_relative_eq!(f.mass(), PI.powf(1.5), max_relative = 1e-6);
    }

    #[test]
    fn zero_field_mass() {
        let f = Field::zero(Grid::Line(LineGrid::new(64, 10.0).unwrap()));
        assert_eq!(f.mass(), 0.0);
        assert_eq!(f.lp_norm_pow(5.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_gradient_line() {
        let f = gaussian_line(4096, 40.0);
        assert_relative_eq!(f.gradient_sq_norm(), PI.sqrt() / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn constant_field_gradient_zero() {
        let g = LineGrid::new(256, 10.0).unwrap();
        let f = Field::from_line_fn(g, |_| Complex64::new(3.5, -1.0));
        assert!(f.gradient_sq_norm() < 1e-18);
    }

    #[test]
    fn gaussian_gradient_radial_d3() {
        // |∇u|^2 integral for u = exp(-r^2/2): 4 pi ∫ r^4 e^{-r^2} dr = (3/2) pi^{3/2}
        let g = RadialGrid::new(3, 8192, 20.0).unwrap();
        let f = Field::from_radial_fn(g, |r| Complex64::new((-r * r / 2.0).exp(), 0.0));
        assert_relative_eq!(f.gradient_sq_norm(), 1.5 * PI.powf(1.5), max_relative = 1e-5);
    }

    #[test]
    fn gaussian_lp_norms() {
        let f = gaussian_line(4096, 40.0);
        assert_relative_eq!(f.lp_norm_pow(8.0).unwrap(), (PI / 4.0).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(
            f.lp_norm_pow(7.0).unwrap(),
            (2.0 * PI / 7.0).sqrt(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn quadrature_superconvergence_and_fd_order() {
        // Midpoint quadrature on smooth even integrands converges fast; the
        // radial FD gradient is second order (error ratio >= 3.9 per halving).
        let exact = 1.5 * PI.powf(1.5);
        let err = |n: usize| {
            let g = RadialGrid::new(3, n, 16.0).unwrap();
            let f = Field::from_radial_fn(g, |r| Complex64::new((-r * r / 2.0).exp(), 0.0));
            (f.gradient_sq_norm() - exact).abs()
        };
        let e1 = err(256);
        let e2 = err(512);
        let e3 = err(1024);
        assert!(e1 / e2 >= 3.9, "ratio {}", e1 / e2);
        assert!(e2 / e3 >= 3.9, "ratio {}", e2 / e3);
    }

    #[test]
    fn fourier_gaussian_spectrum_width() {
        // FT of e^{-x^2/2} is sqrt(2 pi) e^{-k^2/2}; DFT bins approximate the
        // continuous transform up to the 1/h sampling factor.
        let g = LineGrid::new(4096, 40.0).unwrap();
        let f = Field::from_line_fn(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let coeffs = f.fourier_coeffs().unwrap();
        for j in [1usize, 5, 17, 40] {
            let k = g.wavenumber(j);
            let expect = (2.0 * PI).sqrt() * (-k * k / 2.0).exp() / g.spacing();
            // sampled grid is offset from x=0 by half a cell pattern; compare magnitudes
            assert_relative_eq!(coeffs[j].norm(), expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn single_mode_spectrum() {
        let g = LineGrid::new(64, 8.0).unwrap();
        let k = g.wavenumber(3);
        let f = Field::from_line_fn(g, |x| Complex64::new(0.0, k * x).exp());
        let coeffs = f.fourier_coeffs().unwrap();
        for (j, c) in coeffs.iter().enumerate() {
            if j == 3 {
                assert_relative_eq!(c.norm(), 64.0, max_relative = 1e-12);
            } else {
                assert!(c.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn radial_field_rejects_fourier() {
        let g = RadialGrid::new(3, 64, 10.0).unwrap();
        let f = Field::from_radial_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!(f.fourier_coeffs().is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = LineGrid::new(16, 4.0).unwrap();
        let mut vals = vec![Complex64::new(0.0, 0.0); 16];
        vals[3] = Complex64::new(f64::NAN, 0.0);
        assert!(Field::new(Grid::Line(g), vals).is_err());
    }

    #[test]
    fn snapshot_roundtrip_both_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let line = gaussian_line(64, 12.0);
        let p = dir.path().join("line.fld");
        line.write_snapshot(&p).unwrap();
        assert_eq!(Field::read_snapshot(&p).unwrap(), line);

        let g = RadialGrid::new(3, 32, 9.0).unwrap();
        let rad = Field::from_radial_fn(g, |r| Complex64::new((-r).exp(), r * 0.1));
        let p = dir.path().join("rad.fld");
        rad.write_snapshot(&p).unwrap();
        assert_eq!(Field::read_snapshot(&p).unwrap(), rad);
    }

    #[test]
    fn integrate_linear_in_integrand() {
        let f = gaussian_line(256, 20.0);
        let a = f.integrate(|v| v.norm_sqr());
        let b = f.integrate(|v| v.norm());
        let c = f.integrate(|v| 2.0 * v.norm_sqr() + 3.0 * v.norm());
        assert_relative_eq!(c, 2.0 * a + 3.0 * b, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn snapshot_roundtrip_random_line(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = LineGrid::new(32, 6.0).unwrap();
            let vals: Vec<Complex64> = (0..32)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = Field::new(Grid::Line(g), vals).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("f.fld");
            f.write_snapshot(&p).unwrap();
            prop_assert_eq!(Field::read_snapshot(&p).unwrap(), f);
        }

        #[test]
        fn gradient_phase_invariant(alpha in 0.0f64..6.28) {
            let g = LineGrid::new(128, 14.0).unwrap();
            let f = Field::from_line_fn(g, |x| Complex64::new((-x*x/2.0).exp(), 0.0));
            let rotated = Field::from_line_fn(g, |x| {
                Complex64::new((-x*x/2.0).exp(), 0.0) * Complex64::new(0.0, alpha).exp()
            });
            prop_assert!((f.gradient_sq_norm() - rotated.gradient_sq_norm()).abs() < 1e-12);
        }
    }
}
