//! Ground-state profiles by shooting on the radial stationary equation
//!
//! ```text
//! Q'' + ((d-1)/r) Q' = Q^{p0+1} - Q^{p1+1} + ω Q,   Q(0) = s,  Q'(0) = 0,
//! ```
//!
//! plus the mass curve ω ↦ M(Q_ω), its minimizer (ω_c, m_c), and the
//! zero-frequency uniqueness probe.
//!
//! The separatrix between trajectories that cross zero and trajectories that
//! turn back is only trackable to a finite depth in binary64: any amplitude
//! error grows like `e^{√ω r}`. Once a trajectory reaches `Q = 1e-4·s` with
//! the exact linear decay rate `-√ω - (d-1)/(2r)`, it is declared converged
//! and continued by the closed-form linear tail `A r^{-(d-1)/2} e^{-√ω r}`
//! (an exact solution of the far-field equation for d = 1 and d = 3). The
//! bisection is driven to near machine precision first, which keeps the
//! profile mismatch at the graft radius around `1e-11·s`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DpnlsError, Result};
use crate::field::Field;
use crate::functionals::{report, FunctionalReport};
use crate::grid::{Grid, RadialGrid};
use crate::model::{
    derive_constants, golden_section_max, omega_star, potential_profile,
    potential_zero_amplitude, ModelParams,
};

/// Classification of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotLabel {
    /// Crossed zero: amplitude above the separatrix.
    Undershoot,
    /// Turned back up while still of substantial size: amplitude below.
    Overshoot,
    /// Settled onto the decaying branch.
    Converged,
    /// Reached the integration horizon without triggering any event.
    Indeterminate,
}

impl std::fmt::Display for ShotLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ShotLabel::Undershoot => "undershoot",
            ShotLabel::Overshoot => "overshoot",
            ShotLabel::Converged => "converged",
            ShotLabel::Indeterminate => "indeterminate",
        };
        write!(f, "{s}")
    }
}

/// Result of a single shot: label, the trajectory sampled on the radial grid
/// (zero past the stopping radius for non-converged shots), and the radius of
/// the zero crossing when there is one.
#[derive(Debug, Clone)]
pub struct ShotOutcome {
    pub label: ShotLabel,
    pub profile: Field,
    pub crossing_radius: Option<f64>,
    pub final_radius: f64,
}

/// A converged ground state.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub omega: f64,
    pub profile: Field,
    pub mass: f64,
    pub report: FunctionalReport,
    pub shooting_amplitude: f64,
}

// ---------------------------------------------------------------------------
// ODE right-hand side and the Dormand-Prince 5(4) stepper
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Ode {
    d: f64,
    p0: f64,
    p1: f64,
    alpha0: f64,
    alpha1: f64,
    omega: f64,
}

impl Ode {
    fn nonlin(&self, q: f64) -> f64 {
        self.alpha0 * q.abs().powf(self.p0) * q + self.alpha1 * q.abs().powf(self.p1) * q
            + self.omega * q
    }

    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], -((self.d - 1.0) / r) * y[1] + self.nonlin(y[0])]
    }
}

const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 4th-order weights of the embedded pair
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One accepted integration step: endpoint state and derivative, for Hermite
/// dense output.
#[derive(Debug, Clone, Copy)]
struct Knot {
    r: f64,
    y: [f64; 2],
    dy: [f64; 2],
}

struct Stepper<'a> {
    ode: &'a Ode,
    rtol: f64,
    atol: f64,
    r: f64,
    y: [f64; 2],
    dy: [f64; 2],
    h: f64,
    h_max: f64,
}

impl<'a> Stepper<'a> {
    fn new(ode: &'a Ode, r0: f64, y0: [f64; 2], rtol: f64, atol: f64, h_max: f64) -> Self {
        let dy = ode.rhs(r0, y0);
        Self { ode, rtol, atol, r: r0, y: y0, dy, h: 1e-3_f64.min(h_max), h_max }
    }

    /// Advance by one accepted step (FSAL); error if the step size underflows.
    fn step(&mut self) -> Result<()> {
        loop {
            if self.h < 1e-14 {
                return Err(DpnlsError::Numerical(format!(
                    "shooting step size underflow at r = {:.6e}",
                    self.r
                )));
            }
            let h = self.h;
            let mut k = [[0.0f64; 2]; 7];
            k[0] = self.dy;
            for i in 0..6 {
                let mut yi = self.y;
                for (j, kj) in k.iter().enumerate().take(i + 1) {
                    yi[0] += h * DP_A[i][j] * kj[0];
                    yi[1] += h * DP_A[i][j] * kj[1];
                }
                k[i + 1] = self.ode.rhs(self.r + DP_C[i] * h, yi);
            }
            // 5th-order solution is the i = 5 stage combination (b == a[5])
            let mut y5 = self.y;
            for (j, kj) in k.iter().enumerate().take(6) {
                y5[0] += h * DP_A[5][j] * kj[0];
                y5[1] += h * DP_A[5][j] * kj[1];
            }
            let mut y4 = self.y;
            for (j, kj) in k.iter().enumerate() {
                y4[0] += h * DP_B4[j] * kj[0];
                y4[1] += h * DP_B4[j] * kj[1];
            }
            let mut err: f64 = 0.0;
            for c in 0..2 {
                let sc = self.atol + self.rtol * self.y[c].abs().max(y5[c].abs());
                err = err.max((y5[c] - y4[c]).abs() / sc);
            }
            if err <= 1.0 {
                self.r += h;
                self.y = y5;
                self.dy = k[6];
                self.h = (h * (0.9 * (1.0 / err.max(1e-10)).powf(0.2)).clamp(0.2, 5.0))
                    .min(self.h_max);
                return Ok(());
            }
            self.h = h * (0.9 * (1.0 / err).powf(0.2)).clamp(0.1, 0.9);
        }
    }
}

/// Cubic Hermite evaluation of component `c` between two knots.
fn hermite(a: &Knot, b: &Knot, c: usize, r: f64) -> f64 {
    let h = b.r - a.r;
    let t = (r - a.r) / h;
    let (t2, t3) = (t * t, t * t * t);
    a.y[c] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + h * a.dy[c] * (t3 - 2.0 * t2 + t)
        + b.y[c] * (-2.0 * t3 + 3.0 * t2)
        + h * b.dy[c] * (t3 - t2)
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

const R_SEED: f64 = 1e-6;
/// Fraction of `s` at which a rate-checked trajectory is grafted onto the
/// analytic linear tail.
const GRAFT_FRAC: f64 = 1e-4;
const UNDERSHOOT_FRAC: f64 = -1e-14;
const OVERSHOOT_FRAC: f64 = 1e-6;
const CONVERGED_FRAC: f64 = 1e-12;

struct RawShot {
    label: ShotLabel,
    knots: Vec<Knot>,
    crossing_radius: Option<f64>,
    final_radius: f64,
    /// Tail amplitude `A` when grafted.
    tail_amp: Option<f64>,
    graft_radius: Option<f64>,
}

/// Integrate one trajectory, classifying it by the event thresholds.
///
/// `rate_tol` is the relative tolerance on the logarithmic slope used to
/// accept a graft; shots that fail it keep integrating until a hard event.
fn shoot_raw(ode: &Ode, s: f64, r_horizon: f64, rate_tol: f64, h_max: f64) -> Result<RawShot> {
    // Taylor seed: Q = s + f(s) r^2 / (2d), Q' = f(s) r / d.
    let fs = ode.nonlin(s);
    let y0 = [s + fs * R_SEED * R_SEED / (2.0 * ode.d), fs * R_SEED / ode.d];
    let mut st = Stepper::new(ode, R_SEED, y0, 1e-13, 1e-16 * s, h_max);
    let mut knots = vec![Knot { r: st.r, y: st.y, dy: st.dy }];
    let sqrt_w = ode.omega.max(0.0).sqrt();

    loop {
        st.step()?;
        knots.push(Knot { r: st.r, y: st.y, dy: st.dy });
        let [q, qp] = st.y;
        if q < UNDERSHOOT_FRAC * s {
            // locate the crossing inside the last step
            let (a, b) = (knots[knots.len() - 2], knots[knots.len() - 1]);
            let (mut lo, mut hi) = (a.r, b.r);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(&a, &b, 0, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(RawShot {
                label: ShotLabel::Undershoot,
                knots,
                crossing_radius: Some(0.5 * (lo + hi)),
                final_radius: st.r,
                tail_amp: None,
                graft_radius: None,
            });
        }
        if qp > 0.0 && q > OVERSHOOT_FRAC * s {
            return Ok(RawShot {
                label: ShotLabel::Overshoot,
                knots,
                crossing_radius: None,
                final_radius: st.r,
                tail_amp: None,
                graft_radius: None,
            });
        }
        if ode.omega > 0.0 && q > 0.0 && q < GRAFT_FRAC * s && qp < 0.0 {
            let expected = -sqrt_w - (ode.d - 1.0) / (2.0 * st.r);
            let slope = qp / q;
            if (slope - expected).abs() < rate_tol * expected.abs() {
                let amp = q * st.r.powf((ode.d - 1.0) / 2.0) * (sqrt_w * st.r).exp();
                return Ok(RawShot {
                    label: ShotLabel::Converged,
                    knots,
                    crossing_radius: None,
                    final_radius: st.r,
                    tail_amp: Some(amp),
                    graft_radius: Some(st.r),
                });
            }
        }
        if q.abs() < CONVERGED_FRAC * s && qp < 0.0 {
            return Ok(RawShot {
                label: ShotLabel::Converged,
                knots,
                crossing_radius: None,
                final_radius: st.r,
                tail_amp: None,
                graft_radius: None,
            });
        }
        if st.r >= r_horizon {
            return Ok(RawShot {
                label: ShotLabel::Indeterminate,
                knots,
                crossing_radius: None,
                final_radius: st.r,
                tail_amp: None,
                graft_radius: None,
            });
        }
    }
}

/// Sample a raw trajectory onto the grid: Hermite dense output on the
/// integrated range, the analytic tail past a graft, zero otherwise.
fn sample_profile(raw: &RawShot, ode: &Ode, grid: RadialGrid) -> Result<Field> {
    let sqrt_w = ode.omega.max(0.0).sqrt();
    let mut vals = vec![Complex64::new(0.0, 0.0); grid.n()];
    let mut seg = 0usize;
    for (i, v) in vals.iter_mut().enumerate() {
        let r = grid.node(i);
        if r <= raw.final_radius {
            while seg + 1 < raw.knots.len() && raw.knots[seg + 1].r < r {
                seg += 1;
            }
            if seg + 1 < raw.knots.len() {
                *v = Complex64::new(hermite(&raw.knots[seg], &raw.knots[seg + 1], 0, r), 0.0);
            } else if let Some(last) = raw.knots.last() {
                *v = Complex64::new(last.y[0], 0.0);
            }
        } else if let (Some(amp), Some(_)) = (raw.tail_amp, raw.graft_radius) {
            *v = Complex64::new(
                amp * r.powf(-(ode.d - 1.0) / 2.0) * (-sqrt_w * r).exp(),
                0.0,
            );
        }
    }
    Field::new(Grid::Radial(grid), vals)
}

fn ode_for(params: &ModelParams, alpha0: f64, alpha1: f64, omega: f64) -> Ode {
    Ode { d: params.d as f64, p0: params.p0, p1: params.p1, alpha0, alpha1, omega }
}

/// Shoot with arbitrary nonlinearity signs `α0 |Q|^{p0} Q + α1 |Q|^{p1} Q`.
pub fn shoot_general(
    params: &ModelParams,
    alpha0: f64,
    alpha1: f64,
    omega: f64,
    s: f64,
    grid: RadialGrid,
) -> Result<ShotOutcome> {
    params.validate()?;
    if !(s > 0.0) || !(omega >= 0.0) {
        return Err(DpnlsError::InvalidParams("shoot needs s > 0 and omega >= 0".into()));
    }
    let ode = ode_for(params, alpha0, alpha1, omega);
    // step cap keeps the dense output smooth at the grid scale
    let raw = shoot_raw(&ode, s, grid.r_max(), 1e-4, grid.dr() / 4.0)?;
    let profile = sample_profile(&raw, &ode, grid)?;
    Ok(ShotOutcome {
        label: raw.label,
        profile,
        crossing_radius: raw.crossing_radius,
        final_radius: raw.final_radius,
    })
}

/// Shoot the double-power stationary equation with the model's signs.
pub fn shoot(params: &ModelParams, omega: f64, s: f64, grid: RadialGrid) -> Result<ShotOutcome> {
    shoot_general(params, 1.0, -1.0, omega, s, grid)
}

/// First positive root of `g(s) = ω`: below it the mechanical energy is too
/// low for the trajectory to reach zero.
pub fn potential_positive_root(params: &ModelParams, omega: f64) -> Result<f64> {
    let w_star = omega_star(params)?;
    if !(omega > 0.0 && omega < w_star) {
        return Err(DpnlsError::NoSolution(format!(
            "frequency {omega} outside the admissible window (0, {w_star})"
        )));
    }
    let s_zero = potential_zero_amplitude(params);
    let g = |ln_s: f64| potential_profile(params, ln_s.exp());
    let (ln_peak, _) = golden_section_max(g, (1e-8f64).ln(), s_zero.ln(), 1e-12);
    // bisect g - omega on (0, s_peak], where g is increasing
    let (mut lo, mut hi) = (1e-12f64, ln_peak.exp());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if potential_profile(params, mid) < omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest positive equilibrium of the shooting ODE: the top root of
/// `s^{p0} - s^{p1} + ω = 0`. Trajectories released from rest just below it
/// linger, then cross zero with almost no friction loss, so for `d ≥ 2` the
/// separatrix hides in a narrow band beneath this amplitude.
pub fn largest_equilibrium(params: &ModelParams, omega: f64) -> Result<f64> {
    let h = |s: f64| s.powf(params.p0) - s.powf(params.p1) + omega;
    // h is minimal at (p1/p0)^{1/(p0-p1)} and increasing beyond
    let s_min = (params.p1 / params.p0).powf(1.0 / (params.p0 - params.p1));
    if h(s_min) >= 0.0 {
        return Err(DpnlsError::NoSolution(format!(
            "no positive equilibrium at omega = {omega}"
        )));
    }
    let (mut lo, mut hi) = (s_min, 2.0 * s_min.max(1.0));
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Radial grid sized for the tail at this frequency: the span grows like
/// `30/√ω` while the cell size stays at the desk default.
pub fn default_grid_for(params: &ModelParams, omega: f64) -> Result<RadialGrid> {
    let desk = RadialGrid::default_desk(params.d);
    let r_max = desk.r_max().max(30.0 / omega.max(1e-12).sqrt());
    let n = ((r_max / desk.dr()).ceil() as usize).max(desk.n());
    RadialGrid::new(params.d, n, r_max)
}

/// Full solve: bracket scan on the shooting amplitude, bisection to `tol·s`,
/// graft, and invariant-ready profile on `grid`.
pub fn solve_ground_state_on(
    params: &ModelParams,
    omega: f64,
    tol: f64,
    grid: RadialGrid,
) -> Result<GroundState> {
    params.require_admissible()?;
    let w_star = omega_star(params)?;
    if !(omega > 0.0 && omega < w_star) {
        return Err(DpnlsError::NoSolution(format!(
            "no ground state for omega = {omega} outside (0, {w_star:.6e})"
        )));
    }
    let s_pot = potential_positive_root(params, omega)?;
    let s_eq = largest_equilibrium(params, omega)?;
    let ode = ode_for(params, 1.0, -1.0, omega);
    let horizon = grid.r_max();
    // accept a graft during bisection only at a very tight rate match
    let strict = 1e-7;
    let label_of = |s: f64| -> Result<RawShot> { shoot_raw(&ode, s, horizon, strict, f64::INFINITY) };

    // Crossing amplitudes live in (separatrix, s_eq). First a geometric scan
    // from below the potential root (for d = 1 the separatrix sits exactly on
    // it); if the window hugs s_eq too tightly for that, rescan with
    // log-spaced gaps below s_eq.
    let mut found_converged: Option<(f64, RawShot)> = None;
    let mut bracket: Option<(f64, f64)> = None;
    let coarse: Vec<f64> = {
        let (s_min, s_max) = (0.5 * s_pot, s_eq * (1.0 - 1e-12));
        (0..64)
            .map(|k| s_min * (s_max / s_min).powf(k as f64 / 63.0))
            .collect()
    };
    let fine: Vec<f64> = (0..64)
        .map(|k| s_eq - (s_eq - s_pot) * 10f64.powf(-13.0 * k as f64 / 63.0))
        .collect();
    'scan: for grid_s in [coarse, fine] {
        let mut prev: Option<(f64, ShotLabel)> = None;
        for s in grid_s {
            let raw = label_of(s)?;
            if raw.label == ShotLabel::Converged {
                found_converged = Some((s, raw));
                break 'scan;
            }
            if let Some((sp, lp)) = prev {
                if lp == ShotLabel::Overshoot && raw.label == ShotLabel::Undershoot {
                    bracket = Some((sp, s));
                    break 'scan;
                }
            }
            prev = Some((s, raw.label));
        }
    }
    if let Some((s, _)) = found_converged {
        let capped = shoot_raw(&ode, s, horizon, 1e-4, grid.dr() / 4.0)?;
        let profile = sample_profile(&capped, &ode, grid)?;
        return finish_ground_state(params, omega, s, profile);
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        DpnlsError::NoSolution(format!(
            "no shooting bracket for omega = {omega} below s_eq = {s_eq:.6e}"
        ))
    })?;

    let tol = tol.max(1e-16);
    let mut converged: Option<RawShot> = None;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        let raw = label_of(mid)?;
        match raw.label {
            ShotLabel::Undershoot => hi = mid,
            ShotLabel::Overshoot => lo = mid,
            ShotLabel::Converged => {
                converged = Some(raw);
                lo = mid;
                break;
            }
            ShotLabel::Indeterminate => {
                return Err(DpnlsError::Numerical(format!(
                    "shot at s = {mid:.16e} exhausted the horizon {horizon}"
                )))
            }
        }
    }
    let s_star = if converged.is_some() { lo } else { 0.5 * (lo + hi) };
    // re-integrate with the step cap for a grid-smooth profile
    let raw = shoot_raw(&ode, s_star, horizon, 1e-4, grid.dr() / 4.0)?;
    if raw.label != ShotLabel::Converged {
        return Err(DpnlsError::Numerical(format!(
            "bisection limit reached at s = {s_star:.16e} without convergence ({})",
            raw.label
        )));
    }
    let profile = sample_profile(&raw, &ode, grid)?;
    finish_ground_state(params, omega, s_star, profile)
}

fn finish_ground_state(
    params: &ModelParams,
    omega: f64,
    s_star: f64,
    profile: Field,
) -> Result<GroundState> {
    let rep = report(&profile, params);
    Ok(GroundState {
        omega,
        mass: rep.mass,
        report: rep,
        profile,
        shooting_amplitude: s_star,
    })
}

/// Solve on the frequency-adapted default grid.
pub fn solve_ground_state(params: &ModelParams, omega: f64, tol: f64) -> Result<GroundState> {
    solve_ground_state_on(params, omega, tol, default_grid_for(params, omega)?)
}

/// Max-norm residual of the discrete stationary equation over interior cells,
/// relative to `max |Q|^{p1+1}`. Uses 4th-order differences with even ghost
/// cells across the origin.
pub fn ell_residual(profile: &Field, alpha0: f64, alpha1: f64, omega: f64, params: &ModelParams) -> Result<f64> {
    let grid = profile.radial_grid()?;
    let n = grid.n();
    let q: Vec<f64> = profile.values().iter().map(|v| v.re).collect();
    let at = |i: i64| -> f64 {
        if i >= 0 && (i as usize) < n {
            q[i as usize]
        } else if i < 0 {
            let j = (-1 - i) as usize;
            if j < n {
                q[j]
            } else {
                0.0
            }
        } else {
            0.0
        }
    };
    let h = grid.dr();
    let ode = ode_for(params, alpha0, alpha1, omega);
    let scale = q
        .iter()
        .map(|v| v.abs().powf(params.p1 + 1.0))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut worst = 0.0f64;
    for i in 2..(n as i64 - 2) {
        let r = grid.node(i as usize);
        let d1 = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
        let d2 = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1)
            - at(i + 2))
            / (12.0 * h * h);
        let res = d2 + (ode.d - 1.0) / r * d1 - ode.nonlin(at(i));
        worst = worst.max(res.abs());
    }
    Ok(worst / scale)
}

/// One row of the mass curve.
#[derive(Debug, Clone)]
pub struct MassSample {
    pub omega: f64,
    pub mass: f64,
    pub phi_residual: f64,
    pub status: std::result::Result<(), String>,
}

/// One ground state per frequency; failures are recorded per-sample.
pub fn mass_curve(params: &ModelParams, omegas: &[f64]) -> Vec<MassSample> {
    omegas
        .par_iter()
        .map(|&w| match solve_ground_state(params, w, 1e-15) {
            Ok(gs) => MassSample {
                omega: w,
                mass: gs.mass,
                phi_residual: gs.report.phi.abs() / gs.report.kinetic.max(1e-300),
                status: Ok(()),
            },
            Err(e) => MassSample {
                omega: w,
                mass: f64::NAN,
                phi_residual: f64::NAN,
                status: Err(e.to_string()),
            },
        })
        .collect()
}

/// The critical mass `m_c` — the mass at which the ground-state branch
/// crosses zero energy, which is where `I(m)` first turns negative — plus the
/// companion critical mass `m̃_c = tilde_ratio · m_c`.
///
/// The family identity `dE/dω = -ω dM/dω` makes `E(Q_ω)` peak exactly at the
/// mass-curve minimum and decrease monotonically beyond it, so the zero
/// crossing sits on the increasing-mass side of the branch and is found by
/// bisection after the mass minimum is located.
#[derive(Debug, Clone, Copy)]
pub struct MinimalMass {
    pub omega_c: f64,
    pub m_c: f64,
    pub m_tilde_c: f64,
}

/// Locates the mass-curve minimum by golden section, then bisects
/// `E(Q_ω) = 0` on the increasing-mass side of the branch.
pub fn minimal_mass(params: &ModelParams) -> Result<MinimalMass> {
    let w_star = omega_star(params)?;
    let mass_at = |w: f64| -> Result<f64> { Ok(solve_ground_state(params, w, 1e-15)?.mass) };

    let coarse = |lo: f64, hi: f64, n: usize| -> Result<Vec<(f64, f64)>> {
        let ws: Vec<f64> =
            (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect();
        let ms: Vec<MassSample> = mass_curve(params, &ws);
        Ok(ms
            .into_iter()
            .filter(|m| m.status.is_ok())
            .map(|m| (m.omega, m.mass))
            .collect())
    };

    let (mut lo, mut hi) = (0.02 * w_star, 0.95 * w_star);
    let mut pts = coarse(lo, hi, 17)?;
    for _ in 0..3 {
        if pts.len() < 3 {
            return Err(DpnlsError::Numerical("mass curve scan failed almost everywhere".into()));
        }
        let k = pts
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .unwrap();
        if k > 0 && k + 1 < pts.len() {
            lo = pts[k - 1].0;
            hi = pts[k + 1].0;
            break;
        }
        // minimum at the edge: push the window outward and rescan
        if k == 0 {
            lo = (lo * 0.2).max(1e-4 * w_star);
        } else {
            hi = 0.5 * (hi + w_star);
        }
        pts = coarse(lo, hi, 17)?;
    }

    let (w_min, m_neg) = golden_section_max(
        |w| match mass_at(w) {
            Ok(m) => -m,
            Err(_) => f64::NEG_INFINITY,
        },
        lo,
        hi,
        1e-8,
    );
    if !m_neg.is_finite() {
        return Err(DpnlsError::Numerical("mass minimization hit solver failures".into()));
    }

    // E(Q_ω) is maximal at the mass minimum and strictly decreasing above it;
    // bracket and bisect its zero crossing
    let energy_at = |w: f64| -> Result<f64> {
        let gs = solve_ground_state(params, w, 1e-15)?;
        Ok(crate::functionals::report(&gs.profile, params).energy)
    };
    let e_min = energy_at(w_min)?;
    if e_min <= 0.0 {
        return Err(DpnlsError::Numerical(
            "ground-state branch already nonpositive at the mass minimum".into(),
        ));
    }
    let mut w_lo = w_min;
    let mut w_hi = w_min;
    loop {
        let next = (w_hi * 1.3).min(0.999 * w_star);
        if next <= w_hi {
            return Err(DpnlsError::Numerical(
                "no negative-energy ground state below omega_*".into(),
            ));
        }
        w_hi = next;
        match energy_at(w_hi) {
            Ok(e) if e < 0.0 => break,
            Ok(_) => w_lo = w_hi,
            Err(_) => {
                return Err(DpnlsError::Numerical(
                    "ground-state solve failed while bracketing the energy zero".into(),
                ))
            }
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (w_lo + w_hi);
        if energy_at(mid)? > 0.0 {
            w_lo = mid;
        } else {
            w_hi = mid;
        }
    }
    let w_c = 0.5 * (w_lo + w_hi);
    let m_c = mass_at(w_c)?;
    let consts = derive_constants(params)?;
    Ok(MinimalMass { omega_c: w_c, m_c, m_tilde_c: consts.tilde_ratio * m_c })
}

/// Label histogram of a zero-frequency amplitude scan.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFreqReport {
    pub undershoot: usize,
    pub overshoot: usize,
    pub converged: usize,
    pub indeterminate: usize,
}

/// Shoot `ΔQ = α0|Q|^{p0}Q + α1|Q|^{p1}Q` (ω = 0) from each amplitude and
/// tally the labels; no shot should settle onto a positive decaying branch.
pub fn zero_frequency_scan(
    params: &ModelParams,
    alpha0: f64,
    alpha1: f64,
    s_grid: &[f64],
) -> Result<ZeroFreqReport> {
    if !(1..=4).contains(&params.d) {
        return Err(DpnlsError::InvalidParams("zero-frequency probe needs d in 1..=4".into()));
    }
    let ode = ode_for(params, alpha0, alpha1, 0.0);
    let labels: Vec<Result<ShotLabel>> = s_grid
        .par_iter()
        .map(|&s| Ok(shoot_raw(&ode, s, 40.0, 1e-4, f64::INFINITY)?.label))
        .collect();
    let mut rep = ZeroFreqReport::default();
    for l in labels {
        match l? {
            ShotLabel::Undershoot => rep.undershoot += 1,
            ShotLabel::Overshoot => rep.overshoot += 1,
            ShotLabel::Converged => rep.converged += 1,
            ShotLabel::Indeterminate => rep.indeterminate += 1,
        }
    }
    Ok(rep)
}

/// Least-squares slope of `log Q` against `r` over the outer quarter of the
/// profile (restricted to positive, representable values).
pub fn tail_log_slope(profile: &Field) -> Result<f64> {
    let grid = profile.radial_grid()?;
    let n = grid.n();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in (3 * n / 4)..n {
        let q = profile.values()[i].re;
        if q > 1e-250 {
            xs.push(grid.node(i));
            ys.push(q.ln());
        }
    }
    if xs.len() < 8 {
        return Err(DpnlsError::Numerical("tail too short for a slope fit".into()));
    }
    let nn = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    Ok((nn * sxy - sx * sy) / (nn * sxx - sx * sx))
}
