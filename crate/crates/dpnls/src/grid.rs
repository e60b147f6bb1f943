//! Discretization grids: a periodic 1D line and cell-centered radial shells.

use serde::{Deserialize, Serialize};

use crate::error::{DpnlsError, Result};

/// Uniform periodic grid on `[-L/2, L/2)` with `N` a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    n: usize,
    length: f64,
}

impl LineGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(DpnlsError::InvalidParams(format!(
                "line grid size must be a power of two >= 16, got {n}"
            )));
        }
        if !(length > 0.0) {
            return Err(DpnlsError::InvalidParams("line grid length must be positive".into()));
        }
        Ok(Self { n, length })
    }

    /// Desk-scale default: N = 4096, L = 40.
    pub fn default_desk() -> Self {
        Self { n: 4096, length: 40.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    /// Wavenumber of FFT bin `j` with the usual signed aliasing.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = if j <= self.n / 2 { j as i64 } else { j as i64 - self.n as i64 };
        2.0 * std::f64::consts::PI * m as f64 / self.length
    }
}

/// Surface measure of the unit sphere in dimension `d` (i.e. area of S^{d-1}).
pub fn unit_sphere_area(d: u32) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        // 2 pi^{d/2} / Gamma(d/2), even/odd split
        _ => {
            let half = d as f64 / 2.0;
            2.0 * PI.powf(half) / gamma_half_integer(d)
        }
    }
}

/// Gamma(d/2) for integer d >= 1.
fn gamma_half_integer(d: u32) -> f64 {
    use std::f64::consts::PI;
    if d % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = d / 2;
        (1..k).map(|i| i as f64).product::<f64>().max(1.0)
    } else {
        // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
        let k = (d / 2) as u64;
        let mut v = PI.sqrt();
        for i in 1..=k {
            v *= (2 * i - 1) as f64 / 2.0;
        }
        v
    }
}

/// Cell-centered radial grid on `(0, R)` in dimension `d`.
///
/// Nodes sit at `r_i = (i + 1/2) dr`, so no sample lies on the coordinate
/// singularity at the origin. Quadrature weight of cell `i` is
/// `sigma_{d-1} r_i^{d-1} dr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    d: u32,
    n: usize,
    r_max: f64,
}

impl RadialGrid {
    pub fn new(d: u32, n: usize, r_max: f64) -> Result<Self> {
        if d < 1 {
            return Err(DpnlsError::InvalidParams("radial grid needs d >= 1".into()));
        }
        if n < 16 {
            return Err(DpnlsError::InvalidParams("radial grid needs at least 16 cells".into()));
        }
        if !(r_max > 0.0) {
            return Err(DpnlsError::InvalidParams("radial extent must be positive".into()));
        }
        Ok(Self { d, n, r_max })
    }

    /// Desk-scale default: N = 8192, R = 40.
    pub fn default_desk(d: u32) -> Self {
        Self { d, n: 8192, r_max: 40.0 }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    pub fn weight(&self, i: usize) -> f64 {
        unit_sphere_area(self.d) * self.node(i).powi(self.d as i32 - 1) * self.dr()
    }
}

/// Either grid, tagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Line(LineGrid),
    Radial(RadialGrid),
}

impl Grid {
    pub fn n(&self) -> usize {
        match self {
            Grid::Line(g) => g.n(),
            Grid::Radial(g) => g.n(),
        }
    }
}

/// Sum with pairwise recursion; keeps rounding error at O(log n) scale.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}
