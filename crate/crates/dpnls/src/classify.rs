//! Region-ℛ membership testing and long-time behavior classification of
//! propagation runs.
//!
//! The region `ℛ = { 0 < M(φ) < m_c, E(φ) < 𝖾(M(φ)) }` is probed against the
//! sampled threshold curves; propagation runs are sorted into scattering-like,
//! soliton-like, focusing-like, or undecided by conservative finite-time
//! proxies with an explicit evidence table.

use serde::Serialize;

use crate::error::{DpnlsError, Result};
use crate::evolve::{AbortReason, TimeSeries};
use crate::field::Field;
use crate::functionals::report;
use crate::grid::Grid;
use crate::model::{derive_constants, ModelParams};
use crate::varflow::{SampleStatus, ThresholdCurves};

pub use crate::functionals::virial_gap;

/// The region ℛ_η: mass below `m_c - η` and energy below `𝖾(m) - η`.
#[derive(Debug)]
pub struct RegionSpec {
    pub curves: ThresholdCurves,
    /// Margin η ≥ 0.
    pub eta: f64,
    /// Trusted critical mass (from the ground-state mass curve).
    pub m_c: f64,
    /// Branch cut of the `𝖾` interpolant, placed at `tilde_ratio · m_c` from
    /// the model constants rather than at the sampled crossing.
    pub tilde_m_c: f64,
}

impl RegionSpec {
    pub fn new(params: &ModelParams, curves: ThresholdCurves, m_c: f64, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(DpnlsError::InvalidParams(format!("margin must be >= 0, got {eta}")));
        }
        let c = derive_constants(params)?;
        Ok(Self { curves, eta, m_c, tilde_m_c: c.tilde_ratio * m_c })
    }

    /// `𝖾(m)` by linear interpolation of the finite samples, `+∞` below the
    /// branch cut; `None` when `m` is outside the sampled coverage.
    pub fn e_threshold(&self, m: f64) -> Option<f64> {
        if m < self.tilde_m_c {
            return Some(f64::INFINITY);
        }
        let finite: Vec<(f64, f64)> = self
            .curves
            .e_samples
            .iter()
            .filter(|s| s.status == SampleStatus::Attained && s.value.is_finite())
            .map(|s| (s.m, s.value))
            .collect();
        let first = finite.first()?;
        let last = finite.last()?;
        if m < first.0 || m > last.0 {
            return None;
        }
        for pair in finite.windows(2) {
            let (m0, v0) = pair[0];
            let (m1, v1) = pair[1];
            if m >= m0 && m <= m1 {
                let t = if m1 > m0 { (m - m0) / (m1 - m0) } else { 0.0 };
                return Some(v0 + t * (v1 - v0));
            }
        }
        Some(last.1)
    }
}

/// The outcome of one membership query.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    pub mass: f64,
    pub energy: f64,
    /// `𝖾(M(f))`; `+∞` below the branch cut, `NaN` when coverage failed.
    pub e_threshold: f64,
    /// `m_c - η - M(f)`; membership needs this positive (and mass positive).
    pub mass_gap: f64,
    /// `𝖾(M(f)) - η - E(f)`; membership needs this positive.
    pub energy_gap: f64,
    /// Set when the query could not be decided from the sampled curves.
    pub diagnostic: Option<String>,
}

/// Test `f ∈ ℛ_η`.
pub fn in_region(f: &Field, spec: &RegionSpec, params: &ModelParams) -> MembershipReport {
    let rep = report(f, params);
    let mass_gap = spec.m_c - spec.eta - rep.mass;
    let base = MembershipReport {
        member: false,
        mass: rep.mass,
        energy: rep.energy,
        e_threshold: f64::NAN,
        mass_gap,
        energy_gap: f64::NAN,
        diagnostic: None,
    };
    if !(rep.mass > 0.0) || mass_gap <= 0.0 {
        return base;
    }
    match spec.e_threshold(rep.mass) {
        None => MembershipReport {
            diagnostic: Some(format!(
                "mass {:.6e} outside the sampled coverage of the e-curve",
                rep.mass
            )),
            ..base
        },
        Some(e_thr) => {
            let energy_gap = e_thr - spec.eta - rep.energy;
            MembershipReport {
                member: energy_gap > 0.0,
                e_threshold: e_thr,
                energy_gap,
                ..base
            }
        }
    }
}

/// Decision thresholds for [`classify_run`]; all are artifact choices with an
/// undecided escape hatch.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyThresholds {
    /// Scattering: `peak(t)·t^{d/2}` must stay within this factor over the
    /// last half of the run.
    pub decay_factor: f64,
    /// Scattering: `∫|u|^{p1+2}` must have dropped by at least this factor
    /// from its maximum.
    pub potential_drop: f64,
    /// Soliton: relative drift of peak, variance, and `∫|u|^{p1+2}` stays
    /// below this.
    pub drift_tol: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self { decay_factor: 2.0, potential_drop: 10.0, drift_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictLabel {
    #[serde(rename = "scattering-like")]
    ScatteringLike,
    #[serde(rename = "soliton-like")]
    SolitonLike,
    #[serde(rename = "focusing-like")]
    FocusingLike,
    #[serde(rename = "undecided")]
    Undecided,
}

impl std::fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictLabel::ScatteringLike => "scattering-like",
            VerdictLabel::SolitonLike => "soliton-like",
            VerdictLabel::FocusingLike => "focusing-like",
            VerdictLabel::Undecided => "undecided",
        };
        write!(f, "{s}")
    }
}

/// One row of the evidence table.
#[derive(Debug, Clone, Serialize)]
pub struct Evidence {
    pub criterion: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// The classification with the evidence it is a pure function of.
#[derive(Debug, Serialize)]
pub struct RunVerdict {
    pub label: VerdictLabel,
    pub evidence: Vec<Evidence>,
}

fn dimension_of(series: &TimeSeries) -> f64 {
    match series.final_field.grid() {
        Grid::Line(_) => 1.0,
        Grid::Radial(g) => g.d() as f64,
    }
}

/// Sort a completed (or aborted) run into one of the four labels.
pub fn classify_run(
    series: &TimeSeries,
    _params: &ModelParams,
    thresholds: &ClassifyThresholds,
) -> RunVerdict {
    let rows = &series.rows;
    let d = dimension_of(series);
    let mut evidence = Vec::new();
    let mut push = |criterion: &str, value: f64, threshold: f64, pass: bool| {
        evidence.push(Evidence { criterion: criterion.to_string(), value, threshold, pass });
    };

    // focusing evidence: blow-up flag, or persistently negative Phi over the
    // final quarter (V'' = 4 Phi < 0 trend)
    let blowup = series.abort == Some(AbortReason::Blowup);
    push("blowup flag", if blowup { 1.0 } else { 0.0 }, 0.5, blowup);
    let quarter = &rows[rows.len() - rows.len() / 4..];
    let phi_final_max = quarter.iter().map(|r| r.phi).fold(f64::NEG_INFINITY, f64::max);
    let phi_negative = !quarter.is_empty() && phi_final_max < 0.0;
    push("final-quarter max Phi", phi_final_max, 0.0, phi_negative);

    // scattering evidence over the last half of the run
    let half = &rows[rows.len() / 2..];
    let decays: Vec<f64> =
        half.iter().filter(|r| r.t > 0.0).map(|r| r.peak * r.t.powf(d / 2.0)).collect();
    let decay_ratio = match (
        decays.iter().cloned().fold(f64::INFINITY, f64::min),
        decays.iter().cloned().fold(0.0f64, f64::max),
    ) {
        (lo, hi) if lo > 0.0 && hi.is_finite() => hi / lo,
        _ => f64::INFINITY,
    };
    let decay_ok = decay_ratio <= thresholds.decay_factor;
    push("peak decay-fit spread", decay_ratio, thresholds.decay_factor, decay_ok);
    let phi_min = rows.iter().map(|r| r.phi).fold(f64::INFINITY, f64::min);
    let phi_positive = phi_min > 0.0;
    push("min Phi over run", phi_min, 0.0, phi_positive);
    let j1_max = rows.iter().map(|r| r.j1).fold(0.0f64, f64::max);
    let j1_last = rows.last().map(|r| r.j1).unwrap_or(0.0);
    let j1_drop = if j1_last > 0.0 { j1_max / j1_last } else { f64::INFINITY };
    let j1_ok = j1_drop >= thresholds.potential_drop;
    push("potential-energy drop factor", j1_drop, thresholds.potential_drop, j1_ok);

    // soliton evidence: scalar profile proxies stay put
    let rel_drift = |pick: fn(&crate::evolve::ObservableRow) -> f64| -> f64 {
        let v0 = pick(&rows[0]);
        if v0 == 0.0 {
            return f64::INFINITY;
        }
        rows.iter().map(|r| ((pick(r) - v0) / v0).abs()).fold(0.0, f64::max)
    };
    let drift = rel_drift(|r| r.peak)
        .max(rel_drift(|r| r.variance))
        .max(rel_drift(|r| r.j1));
    let drift_ok = drift < thresholds.drift_tol;
    push("profile drift", drift, thresholds.drift_tol, drift_ok);

    let label = if blowup || phi_negative {
        VerdictLabel::FocusingLike
    } else if decay_ok && phi_positive && j1_ok {
        VerdictLabel::ScatteringLike
    } else if drift_ok {
        VerdictLabel::SolitonLike
    } else {
        VerdictLabel::Undecided
    };
    RunVerdict { label, evidence }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{propagate, EvolveConfig, ObservableRow};
    use crate::grid::LineGrid;
    use crate::varflow::CurveSample;
    use num_complex::Complex64;

    fn params_line() -> ModelParams {
        ModelParams::new(1, 6.0, 5.0).unwrap()
    }

    fn sample(m: f64, value: f64) -> CurveSample {
        CurveSample { m, value, status: SampleStatus::Attained, minimizer: None }
    }

    fn synthetic_spec() -> RegionSpec {
        // m_c = 10, tilde_m_c = computed ratio * 10; e sampled on [8, 10]
        let curves = ThresholdCurves {
            i_samples: vec![],
            tilde_i_samples: vec![],
            e_samples: vec![sample(8.0, 4.0), sample(9.0, 2.0), sample(10.0, 1.0)],
            m_c_estimate: Some(10.0),
            tilde_m_c_estimate: None,
        };
        RegionSpec::new(&params_line(), curves, 10.0, 0.0).unwrap()
    }

    fn line_field(mass_target: f64) -> Field {
        let g = LineGrid::new(256, 60.0).unwrap();
        let f = Field::from_line_fn(g, |x| Complex64::new((-x * x / 8.0).exp(), 0.0));
        let scale = (mass_target / f.mass()).sqrt();
        let vals = f.values().iter().map(|v| v * scale).collect();
        Field::new(Grid::Line(g), vals).unwrap()
    }

    #[test]
    fn membership_uses_infinity_branch_below_tilde_mc() {
        let spec = synthetic_spec();
        // tilde_ratio(1,6,5) * 10 is the branch cut; below it e = inf
        assert!(spec.tilde_m_c < 10.0);
        let f = line_field(0.5 * spec.tilde_m_c);
        let rep = in_region(&f, &spec, &params_line());
        assert!(rep.e_threshold.is_infinite());
        assert!(rep.member, "moderate-energy field below tilde_m_c: {rep:?}");
    }

    #[test]
    fn membership_rejects_mass_at_or_above_mc() {
        let spec = synthetic_spec();
        let f = line_field(10.0);
        let rep = in_region(&f, &spec, &params_line());
        assert!(!rep.member);
        let zero = Field::zero(Grid::Line(LineGrid::new(64, 10.0).unwrap()));
        assert!(!in_region(&zero, &spec, &params_line()).member);
    }

    #[test]
    fn membership_interpolates_and_flags_coverage_gaps() {
        // samples starting above the branch cut leave a coverage gap
        let curves = ThresholdCurves {
            i_samples: vec![],
            tilde_i_samples: vec![],
            e_samples: vec![sample(9.9, 4.0), sample(10.0, 2.0)],
            m_c_estimate: Some(10.0),
            tilde_m_c_estimate: None,
        };
        let spec = RegionSpec::new(&params_line(), curves, 10.0, 0.0).unwrap();
        assert!(spec.tilde_m_c < 9.9);
        let f = line_field(0.5 * (spec.tilde_m_c + 9.9));
        let rep = in_region(&f, &spec, &params_line());
        assert!(!rep.member);
        assert!(rep.diagnostic.is_some(), "expected coverage diagnostic: {rep:?}");
        // inside the sampled range the threshold interpolates linearly
        assert!((spec.e_threshold(9.95).unwrap() - 3.0).abs() < 1e-12);
        // above the branch cut of the wider spec, interpolation applies
        let spec2 = synthetic_spec();
        assert!(spec2.tilde_m_c < 9.9);
        assert!((spec2.e_threshold(9.9).unwrap() - 1.1).abs() < 1e-12);
    }

    fn synthetic_series(rows: Vec<ObservableRow>, abort: Option<AbortReason>) -> TimeSeries {
        let g = LineGrid::new(64, 10.0).unwrap();
        TimeSeries {
            rows,
            snapshots: vec![],
            abort,
            final_field: Field::zero(Grid::Line(g)),
        }
    }

    fn row(t: f64, peak: f64, phi: f64, j1: f64) -> ObservableRow {
        ObservableRow {
            t,
            mass: 1.0,
            energy: 1.0,
            momentum: 0.0,
            phi,
            virial_momentum: 0.0,
            variance: 1.0,
            peak,
            tail_mass: 0.0,
            j1,
        }
    }

    #[test]
    fn synthetic_series_hit_each_label() {
        let th = ClassifyThresholds::default();
        let p = params_line();

        // dispersive: peak ~ t^{-1/2}, phi positive, j1 collapsing
        let disp: Vec<ObservableRow> = (0..40)
            .map(|k| {
                let t = 0.5 + 0.5 * k as f64;
                row(t, t.powf(-0.5), 1.0, 10.0 / (1.0 + t * t))
            })
            .collect();
        let v = classify_run(&synthetic_series(disp, None), &p, &th);
        assert_eq!(v.label, VerdictLabel::ScatteringLike);

        // stationary: everything constant
        let sol: Vec<ObservableRow> = (0..40).map(|k| row(k as f64, 1.0, 0.1, 5.0)).collect();
        let v = classify_run(&synthetic_series(sol, None), &p, &th);
        assert_eq!(v.label, VerdictLabel::SolitonLike);

        // focusing: phi persistently negative at the end
        let foc: Vec<ObservableRow> =
            (0..40).map(|k| row(k as f64, 1.0 + 0.1 * k as f64, -0.5, 5.0)).collect();
        let v = classify_run(&synthetic_series(foc, None), &p, &th);
        assert_eq!(v.label, VerdictLabel::FocusingLike);

        // blow-up flag alone forces focusing
        let flat: Vec<ObservableRow> = (0..40).map(|k| row(k as f64, 1.0, 0.1, 5.0)).collect();
        let v = classify_run(&synthetic_series(flat, Some(AbortReason::Blowup)), &p, &th);
        assert_eq!(v.label, VerdictLabel::FocusingLike);

        // drifting but not dispersing: undecided
        let und: Vec<ObservableRow> =
            (0..40).map(|k| row(k as f64, 1.0 + 0.05 * k as f64, 0.1, 5.0)).collect();
        let v = classify_run(&synthetic_series(und, None), &p, &th);
        assert_eq!(v.label, VerdictLabel::Undecided);
    }

    #[test]
    fn small_mass_dispersive_run_scatters() {
        // d = 1 run well below the critical mass spreads and is classified
        // scattering-like
        let p = params_line();
        let g = LineGrid::new(2048, 400.0).unwrap();
        let f0 = Field::from_line_fn(g, |x| Complex64::new(0.5 * (-x * x / 2.0).exp(), 0.0));
        let cfg = EvolveConfig { dt: 2e-3, t_final: 20.0, observe_every: 250, snapshot_every: 0 };
        let series = propagate(&f0, &cfg, &p).unwrap();
        assert!(series.abort.is_none(), "abort: {:?}", series.abort);
        let v = classify_run(&series, &p, &ClassifyThresholds::default());
        assert_eq!(v.label, VerdictLabel::ScatteringLike, "evidence: {:#?}", v.evidence);
    }
}
