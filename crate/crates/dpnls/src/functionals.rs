//! Conserved quantities, the virial functional, rescalings, Galilean boosts,
//! and the algebraic identities relating them.
//!
//! Sign conventions, fixed once for the whole crate:
//! - momentum `P = Im ∫ ū ∇u`, so boosting by `e^{i x ξ}` shifts `P` by
//!   `+ ξ M` and the energy by `ξ^2 M + 2 ξ P` (the residual sign `σ` of the
//!   boost identity is `+1`);
//! - energy `E = ∫|∇u|^2 - (2/(p1+2))∫|u|^{p1+2} + (2/(p0+2))∫|u|^{p0+2}`;
//! - virial `Φ = ∫|∇u|^2 - c1 ∫|u|^{p1+2} + c0 ∫|u|^{p0+2}` with the
//!   Pohozaev coefficients `c_j = d p_j / (2 (p_j + 2))`.

use num_complex::Complex64;

use crate::error::{DpnlsError, Result};
use crate::field::Field;
use crate::grid::{pairwise_sum, Grid};
use crate::model::{derive_constants, ModelParams};

/// Everything the functional layer knows about one field.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    /// `Im ∫ ū ∇u`; identically zero on radial fields.
    pub momentum: f64,
    pub phi: f64,
    /// Gagliardo-Nirenberg quotient; `None` when a factor underflows.
    pub gn_quotient: Option<f64>,
    /// Virial momentum `W = Im ∫ x·∇u ū`.
    pub virial_momentum: f64,
    /// Variance `V = ∫ |x|^2 |u|^2`.
    pub variance: f64,
    /// `∫ |∇u|^2`.
    pub kinetic: f64,
    /// `∫ |u|^{p0+2}`.
    pub j0: f64,
    /// `∫ |u|^{p1+2}`.
    pub j1: f64,
}

fn coordinate(f: &Field, i: usize) -> f64 {
    match f.grid() {
        Grid::Line(g) => g.node(i),
        Grid::Radial(g) => g.node(i),
    }
}

/// Evaluate every functional of `f` at the given exponents.
pub fn report(f: &Field, params: &ModelParams) -> FunctionalReport {
    let d = match f.grid() {
        Grid::Line(_) => 1.0,
        Grid::Radial(g) => g.d() as f64,
    };
    let (p0, p1) = (params.p0, params.p1);
    let c0 = d * p0 / (2.0 * (p0 + 2.0));
    let c1 = d * p1 / (2.0 * (p1 + 2.0));

    let mass = f.mass();
    let kinetic = f.gradient_sq_norm();
    let j0 = f.integrate(|v| v.norm().powf(p0 + 2.0));
    let j1 = f.integrate(|v| v.norm().powf(p1 + 2.0));
    let energy = kinetic - 2.0 / (p1 + 2.0) * j1 + 2.0 / (p0 + 2.0) * j0;
    let phi = kinetic - c1 * j1 + c0 * j0;

    let deriv = f.derivative();
    let n = f.values().len();
    let momentum = if f.is_line() {
        let terms: Vec<f64> =
            (0..n).map(|i| (f.values()[i].conj() * deriv[i]).im * f.weight(i)).collect();
        pairwise_sum(&terms)
    } else {
        0.0
    };
    let w_terms: Vec<f64> = (0..n)
        .map(|i| coordinate(f, i) * (deriv[i] * f.values()[i].conj()).im * f.weight(i))
        .collect();
    let virial_momentum = pairwise_sum(&w_terms);
    let v_terms: Vec<f64> =
        (0..n).map(|i| coordinate(f, i).powi(2) * f.values()[i].norm_sqr() * f.weight(i)).collect();
    let variance = pairwise_sum(&v_terms);

    // quotient of the interpolation inequality bounding ∫|u|^{p1+2}
    let theta = (p1 - 4.0 / d) / (p0 - 4.0 / d);
    let denom =
        mass.powf((p1 - theta * p0) / 2.0) * kinetic.powf(1.0 - theta) * j0.powf(theta);
    let gn_quotient = if mass < 1e-300 || kinetic < 1e-300 || j0 < 1e-300 || denom < 1e-300 {
        None
    } else {
        Some(j1 / denom)
    };

    FunctionalReport {
        mass,
        energy,
        momentum,
        phi,
        gn_quotient,
        virial_momentum,
        variance,
        kinetic,
        j0,
        j1,
    }
}

/// Tail-mass fraction above which a resampling is considered to have pushed
/// significant mass off the grid.
const RESCALE_TAIL_LIMIT: f64 = 1e-8;

/// Evaluate the trigonometric interpolant of periodic samples at fractional
/// index `t` (in units of the grid spacing, relative to sample 0).
fn trig_interp(coeffs: &[Complex64], t: f64) -> Complex64 {
    let n = coeffs.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, c) in coeffs.iter().enumerate() {
        if j == n / 2 {
            // split the Nyquist bin into a pure cosine to stay real on real data
            acc += c * (std::f64::consts::PI * t).cos();
        } else {
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            acc += c * Complex64::new(0.0, 2.0 * std::f64::consts::PI * m * t / n as f64).exp();
        }
    }
    acc / n as f64
}

/// Cubic (4-point Lagrange) interpolation of radial samples at radius `r`,
/// with even extension through the origin and zero beyond the outer edge.
fn radial_cubic_interp(f: &Field, r: f64) -> Complex64 {
    let g = match f.grid() {
        Grid::Radial(g) => *g,
        Grid::Line(_) => unreachable!(),
    };
    let sample = |i: i64| -> Complex64 {
        if i >= 0 && (i as usize) < g.n() {
            f.values()[i as usize]
        } else if i < 0 {
            // even reflection: node -1-i mirrors node i across r = 0
            let j = -1 - i;
            if (j as usize) < g.n() {
                f.values()[j as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let t = r / g.dr() - 0.5; // fractional node index
    let i0 = t.floor() as i64;
    let frac = t - i0 as f64;
    // Lagrange weights on nodes i0-1 .. i0+2
    let w = [
        -frac * (frac - 1.0) * (frac - 2.0) / 6.0,
        (frac + 1.0) * (frac - 1.0) * (frac - 2.0) / 2.0,
        -(frac + 1.0) * frac * (frac - 2.0) / 2.0,
        (frac + 1.0) * frac * (frac - 1.0) / 6.0,
    ];
    (0..4).map(|k| sample(i0 - 1 + k as i64) * w[k as usize]).sum()
}

/// `u_{a,b}(x) = a u(b x)`, resampled on the original grid.
///
/// Line fields use band-limited (trigonometric) interpolation, radial fields
/// cubic interpolation. Rescalings that move significant mass into the outer
/// tenth of the domain are rejected.
pub fn rescale_ab(f: &Field, a: f64, b: f64) -> Result<Field> {
    if !(a > 0.0 && b > 0.0) {
        return Err(DpnlsError::InvalidParams("rescale factors must be positive".into()));
    }
    if a == 1.0 && b == 1.0 {
        return Ok(f.clone());
    }
    let out = match f.grid() {
        Grid::Line(g) => {
            let coeffs = f.fourier_coeffs()?;
            let vals: Vec<Complex64> = (0..g.n())
                .map(|j| {
                    let x = b * g.node(j);
                    // targets outside the domain read zero, not the periodic
                    // wrap-around image
                    if x.abs() > 0.5 * g.length() {
                        return Complex64::new(0.0, 0.0);
                    }
                    let t = (x + 0.5 * g.length()) / g.spacing();
                    trig_interp(&coeffs, t) * a
                })
                .collect();
            Field::new(Grid::Line(*g), vals)?
        }
        Grid::Radial(g) => {
            let vals: Vec<Complex64> =
                (0..g.n()).map(|i| radial_cubic_interp(f, b * g.node(i)) * a).collect();
            Field::new(Grid::Radial(*g), vals)?
        }
    };
    if out.tail_mass_fraction() > RESCALE_TAIL_LIMIT
        && f.tail_mass_fraction() <= RESCALE_TAIL_LIMIT
    {
        return Err(DpnlsError::Numerical(format!(
            "rescale (a = {a}, b = {b}) pushes mass outside the grid"
        )));
    }
    Ok(out)
}

/// Mass-preserving dilation `u^λ(x) = λ^{d/2} u(λ x)`.
pub fn scale_lambda(f: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0) {
        return Err(DpnlsError::InvalidParams("lambda must be positive".into()));
    }
    let d = match f.grid() {
        Grid::Line(_) => 1.0,
        Grid::Radial(g) => g.d() as f64,
    };
    rescale_ab(f, lambda.powf(d / 2.0), lambda)
}

/// The rescaled functional `E_{a,b}`; at `(a0, b0)` it coincides with `Φ`.
pub fn e_ab(f: &Field, a: f64, b: f64, params: &ModelParams) -> f64 {
    let rep = report(f, params);
    let (p0, p1) = (params.p0, params.p1);
    rep.kinetic - 2.0 / (p1 + 2.0) * a.powf(p1) * b.powi(-2) * rep.j1
        + 2.0 / (p0 + 2.0) * a.powf(p0) * b.powi(-2) * rep.j0
}

/// Residual of the dilation identity `Φ(u^λ) = (λ/2) dE(u^λ)/dλ`, with the
/// derivative taken by 4th-order central differences in `λ`.
pub fn scaling_derivative_check(f: &Field, lambda: f64, params: &ModelParams) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(DpnlsError::InvalidParams("lambda must be positive".into()));
    }
    if f.peak() == 0.0 {
        return Ok(0.0);
    }
    let h = 1e-2 * lambda;
    let e_at = |l: f64| -> Result<f64> { Ok(report(&scale_lambda(f, l)?, params).energy) };
    let de = (-e_at(lambda + 2.0 * h)? + 8.0 * e_at(lambda + h)? - 8.0 * e_at(lambda - h)?
        + e_at(lambda - 2.0 * h)?)
        / (12.0 * h);
    let phi = report(&scale_lambda(f, lambda)?, params).phi;
    Ok((phi - 0.5 * lambda * de).abs())
}

/// Galilean boost `u ↦ e^{i x ξ} u` on the line.
pub fn boost(f: &Field, xi: f64) -> Result<Field> {
    let g = f.line_grid()?;
    let vals: Vec<Complex64> = (0..g.n())
        .map(|j| f.values()[j] * Complex64::new(0.0, xi * g.node(j)).exp())
        .collect();
    Field::new(Grid::Line(g), vals)
}

/// Boost that minimizes the energy: removes the whole momentum, dropping the
/// energy by `|P|^2 / M`. Found by a quadratic fit in `ξ`, which makes the
/// result independent of the momentum sign convention.
pub fn optimal_boost(f: &Field, params: &ModelParams) -> Result<(f64, Field)> {
    let m = f.mass();
    if m <= 0.0 {
        return Err(DpnlsError::InvalidField("optimal boost needs positive mass".into()));
    }
    let h = 0.5;
    let e_at = |xi: f64| -> Result<f64> { Ok(report(&boost(f, xi)?, params).energy) };
    let e0 = e_at(0.0)?;
    let ep = e_at(h)?;
    let em = e_at(-h)?;
    let curv = (ep + em - 2.0 * e0) / (h * h); // = 2 M on the continuum
    let slope = (ep - em) / (2.0 * h);
    if curv <= 0.0 {
        return Err(DpnlsError::Numerical("boost energy not convex".into()));
    }
    let xi_star = -slope / curv;
    Ok((xi_star, boost(f, xi_star)?))
}

/// `∫|∇u|^2 + c1 α1 ∫|u|^{p1+2} + c0 α0 ∫|u|^{p0+2}`; vanishes on decaying
/// solutions of the stationary equation with those nonlinearity signs.
pub fn pohozaev_residual(f: &Field, alpha0: f64, alpha1: f64, params: &ModelParams) -> f64 {
    let d = match f.grid() {
        Grid::Line(_) => 1.0,
        Grid::Radial(g) => g.d() as f64,
    };
    let (p0, p1) = (params.p0, params.p1);
    let c0 = d * p0 / (2.0 * (p0 + 2.0));
    let c1 = d * p1 / (2.0 * (p1 + 2.0));
    let rep = report(f, params);
    rep.kinetic + c1 * alpha1 * rep.j1 + c0 * alpha0 * rep.j0
}

/// Convenience: the virial gap `Φ(u) - |P(u)|^2 / M(u)` used by the region
/// diagnostics.
pub fn virial_gap(f: &Field, params: &ModelParams) -> Result<f64> {
    let rep = report(f, params);
    if rep.mass <= 0.0 {
        return Err(DpnlsError::InvalidField("virial gap needs positive mass".into()));
    }
    Ok(rep.phi - rep.momentum * rep.momentum / rep.mass)
}

/// Closed-form `Φ(u^λ)` given the three integrals of `u` (dilation identity).
pub fn phi_of_dilated(kinetic: f64, j0: f64, j1: f64, lambda: f64, params: &ModelParams) -> f64 {
    let d = params.d as f64;
    let (p0, p1) = (params.p0, params.p1);
    let c0 = d * p0 / (2.0 * (p0 + 2.0));
    let c1 = d * p1 / (2.0 * (p1 + 2.0));
    lambda.powi(2) * kinetic - c1 * lambda.powf(d * p1 / 2.0) * j1
        + c0 * lambda.powf(d * p0 / 2.0) * j0
}

/// Closed-form `E(u^λ)` given the three integrals of `u`.
pub fn energy_of_dilated(kinetic: f64, j0: f64, j1: f64, lambda: f64, params: &ModelParams) -> f64 {
    let d = params.d as f64;
    let (p0, p1) = (params.p0, params.p1);
    lambda.powi(2) * kinetic - 2.0 / (p1 + 2.0) * lambda.powf(d * p1 / 2.0) * j1
        + 2.0 / (p0 + 2.0) * lambda.powf(d * p0 / 2.0) * j0
}

/// Check `E_{a0,b0} ≡ Φ` for the derived rescaling amplitudes.
pub fn e_ab_matches_phi(f: &Field, params: &ModelParams) -> Result<f64> {
    let c = derive_constants(params)?;
    let rep = report(f, params);
    let lhs = e_ab(f, c.a0, c.b0, params);
    Ok((lhs - rep.phi).abs() / (1.0 + rep.phi.abs()))
}
