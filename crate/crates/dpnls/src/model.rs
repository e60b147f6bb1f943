//! Nonlinearity parameters and the closed-form constants derived from them.
//!
//! The equation under study is `i u_t + Δu = |u|^{p0} u - |u|^{p1} u` with
//! `4/d < p1 < p0`. Everything that follows from `(d, p0, p1)` alone lives
//! here: the critical Sobolev exponent, interpolation exponent, Pohozaev
//! coefficients, the virial rescaling amplitudes and the ratio of the two
//! critical masses.

use serde::{Deserialize, Serialize};

use crate::error::{DpnlsError, Result};

/// Spatial dimension and the two nonlinearity exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: u32,
    pub p0: f64,
    pub p1: f64,
}

impl ModelParams {
    pub fn new(d: u32, p0: f64, p1: f64) -> Result<Self> {
        let p = Self { d, p0, p1 };
        p.validate()?;
        Ok(p)
    }

    /// Basic well-formedness: `d >= 1`, `0 < p1 < p0`, both finite.
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(DpnlsError::InvalidParams("d must be >= 1".into()));
        }
        if !(self.p1 > 0.0 && self.p0.is_finite() && self.p1.is_finite()) {
            return Err(DpnlsError::InvalidParams("exponents must be finite and positive".into()));
        }
        if self.p1 >= self.p0 {
            return Err(DpnlsError::InvalidParams(format!(
                "need p1 < p0, got p1 = {}, p0 = {}",
                self.p1, self.p0
            )));
        }
        Ok(())
    }

    /// The variational theory requires the lower exponent to be
    /// mass-supercritical: `p1 > 4/d`.
    pub fn is_admissible(&self) -> bool {
        self.p1 > 4.0 / self.d as f64
    }

    pub(crate) fn require_admissible(&self) -> Result<()> {
        self.validate()?;
        if !self.is_admissible() {
            return Err(DpnlsError::InvalidParams(format!(
                "p1 = {} must exceed 4/d = {}",
                self.p1,
                4.0 / self.d as f64
            )));
        }
        Ok(())
    }
}

/// Position of `p0` relative to the energy-critical exponent `4/(d-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    EnergySubcritical,
    EnergyCritical,
    EnergySupercritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::EnergySubcritical => "energy-subcritical",
            Regime::EnergyCritical => "energy-critical",
            Regime::EnergySupercritical => "energy-supercritical",
        };
        write!(f, "{s}")
    }
}

/// All closed-form constants computed from `(d, p0, p1)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Critical Sobolev exponent `d/2 - 2/p0`.
    pub s0: f64,
    /// Interpolation exponent `(p1 - 4/d)/(p0 - 4/d)`.
    pub theta: f64,
    /// Pohozaev coefficient `d p0 / (2 (p0 + 2))`.
    pub c0: f64,
    /// Pohozaev coefficient `d p1 / (2 (p1 + 2))`.
    pub c1: f64,
    /// Rescaling amplitude `(p0/p1)^{1/(p0-p1)}`.
    pub a0: f64,
    /// Rescaling dilation, `b0^2 = (4/(d p1)) (p0/p1)^{p1/(p0-p1)}`.
    pub b0: f64,
    /// Mass-scaling factor `a0^2 b0^{-d}`.
    pub rho: f64,
    /// Critical-mass ratio `m_tilde_c / m_c = 1/rho`.
    pub tilde_ratio: f64,
    /// Largest frequency for which the stationary equation has a ground state.
    pub omega_star: f64,
    pub regime: Regime,
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
/// Returns `(x_max, f_max)`.
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol * (a.abs() + b.abs() + 1e-300) {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// The nonlinear-potential profile `g(s) = (2/s^2)(s^{p1+2}/(p1+2) - s^{p0+2}/(p0+2))`.
///
/// The stationary equation admits a decaying positive solution at frequency
/// `omega` exactly when `g` exceeds `omega` somewhere, so `omega_star = max g`.
pub fn potential_profile(params: &ModelParams, s: f64) -> f64 {
    2.0 * s.powf(params.p1) / (params.p1 + 2.0) - 2.0 * s.powf(params.p0) / (params.p0 + 2.0)
}

/// Amplitude at which `g` returns to zero; `g > 0` on `(0, s_zero)`.
pub fn potential_zero_amplitude(params: &ModelParams) -> f64 {
    ((params.p0 + 2.0) / (params.p1 + 2.0)).powf(1.0 / (params.p0 - params.p1))
}

/// Maximal ground-state frequency, located by golden-section search in `log s`.
pub fn omega_star(params: &ModelParams) -> Result<f64> {
    params.require_admissible()?;
    let s_zero = potential_zero_amplitude(params);
    let g = |ln_s: f64| potential_profile(params, ln_s.exp());
    let (_, w) = golden_section_max(g, (1e-8f64).ln(), s_zero.ln(), 1e-12);
    Ok(w)
}

/// Label the higher exponent against the energy-critical threshold.
pub fn classify_regime(params: &ModelParams) -> Regime {
    if params.d <= 2 {
        return Regime::EnergySubcritical;
    }
    let crit = 4.0 / (params.d as f64 - 2.0);
    if params.p0 < crit {
        Regime::EnergySubcritical
    } else if params.p0 == crit {
        Regime::EnergyCritical
    } else {
        Regime::EnergySupercritical
    }
}

/// Compute every derived constant, cross-checking the two closed forms of
/// the critical-mass ratio against each other.
pub fn derive_constants(params: &ModelParams) -> Result<DerivedConstants> {
    params.require_admissible()?;
    let d = params.d as f64;
    let (p0, p1) = (params.p0, params.p1);

    let s0 = d / 2.0 - 2.0 / p0;
    let theta = (p1 - 4.0 / d) / (p0 - 4.0 / d);
    let c0 = d * p0 / (2.0 * (p0 + 2.0));
    let c1 = d * p1 / (2.0 * (p1 + 2.0));
    let a0 = (p0 / p1).powf(1.0 / (p0 - p1));
    let b0 = ((4.0 / (d * p1)) * (p0 / p1).powf(p1 / (p0 - p1))).sqrt();
    let rho = a0 * a0 * b0.powf(-d);
    let tilde_ratio = 1.0 / rho;

    // Direct closed form of the ratio; both routes must agree.
    let tilde_direct =
        (p0 / p1).powf((p1 * d - 4.0) / (2.0 * (p0 - p1))) * (4.0 / (d * p1)).powf(d / 2.0);
    let rel = (tilde_ratio - tilde_direct).abs() / tilde_direct.abs();
    if rel > 1e-13 {
        return Err(DpnlsError::Numerical(format!(
            "critical-mass ratio closed forms disagree: {tilde_ratio} vs {tilde_direct}"
        )));
    }

    Ok(DerivedConstants {
        s0,
        theta,
        c0,
        c1,
        a0,
        b0,
        rho,
        tilde_ratio,
        omega_star: omega_star(params)?,
        regime: classify_regime(params),
    })
}
