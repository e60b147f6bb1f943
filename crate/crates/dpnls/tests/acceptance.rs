//! End-to-end acceptance suite. Each test prints exactly one PASS/FAIL line
//! for its criterion.

use dpnls::classify::{classify_run, in_region, ClassifyThresholds, RegionSpec, VerdictLabel};
use dpnls::evolve::{propagate, step_strang, virial_check, EvolveConfig};
use dpnls::functionals::{
    e_ab_matches_phi, optimal_boost, report, scaling_derivative_check, virial_gap,
};
use dpnls::groundstate::{
    ell_residual, minimal_mass, shoot, shoot_general, solve_ground_state, solve_ground_state_on,
    zero_frequency_scan, ShotLabel,
};
use dpnls::varflow::{
    dual_mc_estimates, e_curve, e_of_m, i_curve, phi_positivity_sample, region_energy_bound,
    FlowConfig, SampleStatus, ThresholdCurves,
};
use dpnls::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!("{}: {criterion} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

fn random_admissible(rng: &mut ChaCha8Rng) -> ModelParams {
    loop {
        let d = rng.gen_range(1..=4u32);
        let p1 = 4.0 / d as f64 + rng.gen_range(0.01..4.0);
        let p0 = p1 + rng.gen_range(0.01..4.0);
        if let Ok(p) = ModelParams::new(d, p0, p1) {
            return p;
        }
    }
}

#[test]
fn criterion_01_critical_mass_ratio() {
    let c = derive_constants(&ModelParams::new(3, 4.0, 2.0).unwrap()).unwrap();
    let headline = (c.tilde_ratio - 4.0 / (3.0 * 3f64.sqrt())).abs();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let p = random_admissible(&mut rng);
        let c = derive_constants(&p).unwrap();
        let d = p.d as f64;
        // closed form of the mass ratio straight from the dilation exponents
        let direct = (p.p0 / p.p1).powf((p.p1 * d - 4.0) / (2.0 * (p.p0 - p.p1)))
            * (4.0 / (d * p.p1)).powf(d / 2.0);
        worst = worst.max((c.tilde_ratio - direct).abs() / direct);
    }
    verdict(
        "criterion 1 (critical-mass ratio)",
        headline < 1e-12 && worst < 1e-12,
        &format!("headline gap {headline:.2e}, worst closed-form gap {worst:.2e} over 10000 triples"),
    );
}

#[test]
fn criterion_02_tilde_mc_below_mc() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let p = random_admissible(&mut rng);
        worst = worst.max(derive_constants(&p).unwrap().tilde_ratio);
    }
    verdict(
        "criterion 2 (m~_c < m_c)",
        worst < 1.0,
        &format!("max ratio {worst:.12} over 10000 triples"),
    );
}

#[test]
fn criterion_03_ground_state_fidelity() {
    // single-power mode: the 1D sech soliton in closed form
    let params = ModelParams::new(1, 6.0, 5.0).unwrap();
    let (p, w) = (5.0f64, 0.5f64);
    let grid = RadialGrid::new(1, 8192, 40.0).unwrap();
    let s_exact = ((p + 2.0) * w / 2.0).powf(1.0 / p);
    let (mut lo, mut hi) = (0.9 * s_exact, 1.1 * s_exact);
    assert_eq!(
        shoot_general(&params, 0.0, -1.0, w, lo, grid).unwrap().label,
        ShotLabel::Undershoot
    );
    assert_eq!(
        shoot_general(&params, 0.0, -1.0, w, hi, grid).unwrap().label,
        ShotLabel::Overshoot
    );
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match shoot_general(&params, 0.0, -1.0, w, mid, grid).unwrap().label {
            ShotLabel::Overshoot => hi = mid,
            _ => lo = mid,
        }
    }
    let profile = shoot_general(&params, 0.0, -1.0, w, 0.5 * (lo + hi), grid).unwrap().profile;
    let mut sech_err = 0.0f64;
    for (i, v) in profile.values().iter().enumerate() {
        let x = grid.node(i);
        let exact = s_exact * (1.0 / (p * w.sqrt() * x / 2.0).cosh()).powf(2.0 / p);
        sech_err = sech_err.max((v.re - exact).abs());
    }

    // double-power ground states: elliptic residual and Pohozaev
    let mut worst_ell = 0.0f64;
    let mut worst_phi = 0.0f64;
    for (d, p0, p1) in [(3u32, 4.0, 2.0), (1, 6.0, 5.0), (3, 3.0, 2.0)] {
        let params = ModelParams::new(d, p0, p1).unwrap();
        let w_star = omega_star(&params).unwrap();
        for frac in [0.3, 0.5, 0.7] {
            let gs = solve_ground_state(&params, frac * w_star, 1e-13).unwrap();
            worst_ell = worst_ell
                .max(ell_residual(&gs.profile, 1.0, -1.0, gs.omega, &params).unwrap());
            worst_phi = worst_phi.max(gs.report.phi.abs() / gs.report.kinetic);
        }
    }

    // no solution at or above omega_*: a 64-point amplitude scan never
    // converges
    let params = ModelParams::new(3, 4.0, 2.0).unwrap();
    let w_star = omega_star(&params).unwrap();
    let grid = RadialGrid::new(3, 4096, 40.0).unwrap();
    let mut converged = 0usize;
    for w in [w_star, 1.1 * w_star] {
        for k in 0..64 {
            let s = 0.05 * 400f64.powf(k as f64 / 63.0);
            if let Ok(out) = shoot(&params, w, s, grid) {
                if out.label == ShotLabel::Converged {
                    converged += 1;
                }
            }
        }
    }

    verdict(
        "criterion 3 (ground-state fidelity)",
        sech_err < 1e-6 && worst_ell < 1e-8 && worst_phi < 1e-6 && converged == 0,
        &format!(
            "sech sup-error {sech_err:.2e}, worst elliptic residual {worst_ell:.2e}, \
             worst |Phi|/K {worst_phi:.2e}, converged shots at omega >= omega_*: {converged}"
        ),
    );
}

fn acceptance_flow_cfg(d: u32) -> FlowConfig {
    FlowConfig {
        grid: RadialGrid::new(d, 2048, 60.0).unwrap(),
        max_iters: 30_000,
        tol: 1e-10,
        tol_neg: 2e-4,
    }
}

#[test]
fn criterion_04_dual_mc_estimates() {
    let mut detail = String::new();
    let mut pass = true;
    for (d, p0, p1) in [(1u32, 6.0, 5.0), (3, 4.0, 2.0), (3, 3.0, 2.0)] {
        let params = ModelParams::new(d, p0, p1).unwrap();
        let (m_c_gs, m_c_var) = dual_mc_estimates(&params, &acceptance_flow_cfg(d)).unwrap();
        let rel = (m_c_var - m_c_gs).abs() / m_c_gs;
        pass &= rel < 0.01;
        detail.push_str(&format!("({d},{p0},{p1}): gs {m_c_gs:.4} vs flow {m_c_var:.4} ({rel:.2e}); "));
    }
    verdict("criterion 4 (dual m_c estimates)", pass, &detail);
}

#[test]
fn criterion_05_threshold_trichotomy() {
    let params = ModelParams::new(3, 4.0, 2.0).unwrap();
    let cfg = acceptance_flow_cfg(3);
    let mm = minimal_mass(&params).unwrap();

    let low = e_of_m(&params, 0.5 * mm.m_tilde_c, &cfg).unwrap();
    let infeasible_ok = low.status == SampleStatus::Infeasible && low.value.is_infinite();

    let mid = e_of_m(&params, 0.5 * (mm.m_tilde_c + mm.m_c), &cfg).unwrap();
    let mid_ok = mid.value.is_finite() && mid.value > 0.0;

    let m_hi = 1.5 * mm.m_c;
    let hi = e_of_m(&params, m_hi, &cfg).unwrap();
    let i_hi = i_curve(&params, &[m_hi], &cfg).unwrap().samples[0].value;
    let agree = (hi.value - i_hi).abs() / i_hi.abs();
    let hi_ok = agree < 0.02;

    // sampled e nonincreasing on [m~_c, m_c]
    let m_grid: Vec<f64> = (0..5)
        .map(|k| mm.m_tilde_c + (mm.m_c - mm.m_tilde_c) * (0.05 + 0.9 * k as f64 / 4.0))
        .collect();
    let es = e_curve(&params, &m_grid, &cfg).unwrap();
    let mut monotone = true;
    for w in es.windows(2) {
        if w[1].value > w[0].value + 1e-6 {
            monotone = false;
        }
    }

    verdict(
        "criterion 5 (threshold trichotomy)",
        infeasible_ok && mid_ok && hi_ok && monotone,
        &format!(
            "below m~_c {:?}/{}, middle {:.4}, e vs I at 1.5 m_c gap {agree:.2e}, monotone {monotone}",
            low.status, low.value, mid.value
        ),
    );
}

#[test]
fn criterion_06_coercivity_sampling() {
    let params = ModelParams::new(3, 4.0, 2.0).unwrap();
    let cfg = acceptance_flow_cfg(3);
    let mm = minimal_mass(&params).unwrap();
    let mut pass = true;
    let mut min_phi_ratio = f64::INFINITY;
    for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let rep = phi_positivity_sample(&params, frac * mm.m_tilde_c, 2000, &cfg).unwrap();
        pass &= rep.all_positive;
        min_phi_ratio = min_phi_ratio.min(rep.min_ratio);
    }
    let mut min_delta = f64::INFINITY;
    let mut floor_ok = true;
    for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let rep = region_energy_bound(&params, frac * mm.m_c, mm.m_c, 2000, &cfg).unwrap();
        min_delta = min_delta.min(rep.empirical_delta);
        floor_ok &= rep.empirical_delta > 0.0 && rep.empirical_delta >= rep.analytic_floor - 1e-9;
    }
    verdict(
        "criterion 6 (coercivity sampling)",
        pass && floor_ok,
        &format!(
            "min Phi/K {min_phi_ratio:.4} below m~_c (all positive {pass}), \
             min E/K {min_delta:.4} below m_c respecting the analytic floor {floor_ok}"
        ),
    );
}

#[test]
fn criterion_07_identity_suite() {
    let params = ModelParams::new(3, 4.0, 2.0).unwrap();
    let grid = RadialGrid::new(3, 2048, 60.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_eab = 0.0f64;
    let mut worst_scaling = 0.0f64;
    for _ in 0..100 {
        let a: f64 = rng.gen_range(0.2..2.0);
        let s: f64 = rng.gen_range(1.0..8.0);
        let b: f64 = rng.gen_range(0.5..1.5);
        let f = Field::from_radial_fn(grid, |r| {
            Complex64::new(a * (-r * r / (2.0 * s * s)).exp() * (1.0 + b * (-r).exp()), 0.0)
        });
        worst_eab = worst_eab.max(e_ab_matches_phi(&f, &params).unwrap());
        worst_scaling =
            worst_scaling.max(scaling_derivative_check(&f, 1.2, &params).unwrap());
    }

    let lp = ModelParams::new(1, 6.0, 5.0).unwrap();
    let lg = LineGrid::new(2048, 80.0).unwrap();
    let lf = Field::from_line_fn(lg, |x| {
        Complex64::new(0.8 * (-x * x / 8.0).exp(), 0.0) * Complex64::new(0.0, 0.4 * x).exp()
    });
    let rep = report(&lf, &lp);
    let (_, deboosted) = optimal_boost(&lf, &lp).unwrap();
    let drop = rep.energy - report(&deboosted, &lp).energy;
    let boost_gap = (drop - rep.momentum * rep.momentum / rep.mass).abs();

    let gs = solve_ground_state(&params, 0.5 * omega_star(&params).unwrap(), 1e-13).unwrap();
    let poho = gs.report.phi.abs() / gs.report.kinetic;

    verdict(
        "criterion 7 (identity suite)",
        worst_eab < 1e-12 && worst_scaling < 1e-6 && boost_gap < 1e-10 && poho < 1e-6,
        &format!(
            "E_ab vs Phi {worst_eab:.2e}, scaling derivative {worst_scaling:.2e}, \
             boost drop gap {boost_gap:.2e}, Pohozaev {poho:.2e}"
        ),
    );
}

#[test]
fn criterion_08_dynamics_suite() {
    let lp = ModelParams::new(1, 6.0, 5.0).unwrap();
    let g = LineGrid::new(1024, 80.0).unwrap();
    let f0 = Field::from_line_fn(g, |x| Complex64::new(0.8 * (-x * x / 4.0).exp(), 0.0));

    // conservation over T = 10
    let drift = |dt: f64| {
        let cfg = EvolveConfig { dt, t_final: 10.0, observe_every: 500, snapshot_every: 0 };
        let s = propagate(&f0, &cfg, &lp).unwrap();
        let (a, b) = (&s.rows[0], s.rows.last().unwrap());
        (((b.mass - a.mass) / a.mass).abs(), (b.energy - a.energy).abs())
    };
    let (dm, de2) = drift(2e-3);
    let (_, de1) = drift(1e-3);
    let refine = de2 / de1;

    // virial residual on linear, soliton, and dispersive runs
    let lin = Field::from_line_fn(LineGrid::new(1024, 160.0).unwrap(), |x| {
        Complex64::new(1e-8 * (-x * x / 4.0).exp(), 0.0)
    });
    let cfg = EvolveConfig { dt: 1e-3, t_final: 2.0, observe_every: 20, snapshot_every: 0 };
    let v_lin = virial_check(&propagate(&lin, &cfg, &lp).unwrap()).unwrap();
    let disp = Field::from_line_fn(LineGrid::new(1024, 160.0).unwrap(), |x| {
        Complex64::new(0.6 * (-x * x / 4.0).exp(), 0.0)
    });
    let v_disp = virial_check(&propagate(&disp, &cfg, &lp).unwrap()).unwrap();
    let rp = ModelParams::new(3, 4.0, 2.0).unwrap();
    let gs = solve_ground_state_on(
        &rp,
        0.5 * omega_star(&rp).unwrap(),
        1e-13,
        RadialGrid::new(3, 4096, 120.0).unwrap(),
    )
    .unwrap();
    let scfg = EvolveConfig { dt: 1e-3, t_final: 2.0, observe_every: 20, snapshot_every: 0 };
    let v_sol = virial_check(&propagate(&gs.profile, &scfg, &rp).unwrap()).unwrap();

    // time reversal
    let fwd = propagate(
        &f0,
        &EvolveConfig { dt: 1e-3, t_final: 2.0, observe_every: 2000, snapshot_every: 0 },
        &lp,
    )
    .unwrap();
    let mut back = fwd.final_field;
    for _ in 0..2000 {
        back = step_strang(&back, -1e-3, &lp).unwrap();
    }
    let num: f64 = (0..back.values().len())
        .map(|i| (back.values()[i] - f0.values()[i]).norm_sqr() * f0.weight(i))
        .sum();
    let reversal = (num / f0.mass()).sqrt();

    // plane wave closed form
    let pg = LineGrid::new(256, 40.0).unwrap();
    let a = 0.8f64;
    let k = pg.wavenumber(3);
    let mut pw = Field::from_line_fn(pg, |x| Complex64::new(0.0, k * x).exp() * a);
    for _ in 0..1000 {
        pw = step_strang(&pw, 1e-3, &lp).unwrap();
    }
    let freq = k * k + a.powf(lp.p0) - a.powf(lp.p1);
    let mut pw_err = 0.0f64;
    for (j, v) in pw.values().iter().enumerate() {
        let exact = Complex64::new(0.0, k * pg.node(j) - freq).exp() * a;
        pw_err = pw_err.max((v - exact).norm());
    }

    verdict(
        "criterion 8 (dynamics suite)",
        dm < 1e-10
            && refine >= 3.5
            && v_lin < 1e-4
            && v_disp < 1e-4
            && v_sol < 1e-4
            && reversal < 1e-6
            && pw_err < 1e-8,
        &format!(
            "mass drift {dm:.2e}, energy refinement {refine:.2}, virial residuals \
             lin {v_lin:.2e} / disp {v_disp:.2e} / soliton {v_sol:.2e}, \
             reversal {reversal:.2e}, plane wave {pw_err:.2e}"
        ),
    );
}

#[test]
fn criterion_09_soliton_vs_region_scattering() {
    // soliton-like over T = 20 / omega
    let rp = ModelParams::new(3, 4.0, 2.0).unwrap();
    let omega = 0.5 * omega_star(&rp).unwrap();
    let gs = solve_ground_state_on(&rp, omega, 1e-13, RadialGrid::new(3, 4096, 120.0).unwrap())
        .unwrap();
    let cfg = EvolveConfig {
        dt: 5e-3,
        t_final: 20.0 / omega,
        observe_every: 500,
        snapshot_every: 0,
    };
    let series = propagate(&gs.profile, &cfg, &rp).unwrap();
    let mut drift = 0.0f64;
    for (i, v) in series.final_field.values().iter().enumerate() {
        drift = drift.max((v.norm() - gs.profile.values()[i].norm()).abs());
    }
    drift /= gs.profile.peak();
    let sol_verdict = classify_run(&series, &rp, &ClassifyThresholds::default());
    let soliton_ok = drift < 1e-3 && sol_verdict.label == VerdictLabel::SolitonLike;

    // ten region members on the line all scatter with Phi > 0
    let lp = ModelParams::new(1, 6.0, 5.0).unwrap();
    let mm = minimal_mass(&lp).unwrap();
    let eta = 0.05 * mm.m_c;
    let spec = RegionSpec::new(
        &lp,
        ThresholdCurves {
            i_samples: vec![],
            tilde_i_samples: vec![],
            e_samples: vec![],
            m_c_estimate: Some(mm.m_c),
            tilde_m_c_estimate: None,
        },
        mm.m_c,
        eta,
    )
    .unwrap();
    let g = LineGrid::new(4096, 400.0).unwrap();
    let mut members_ok = true;
    let mut scatter_ok = true;
    let mut phi_ok = true;
    for k in 0..10 {
        // masses spanning (0, m~_c), where membership follows from the
        // infinity branch
        let m = (0.05 + 0.9 * k as f64 / 9.0) * spec.tilde_m_c;
        let base = Field::from_line_fn(g, |x| Complex64::new((-x * x / 18.0).exp(), 0.0));
        let scale = (m / base.mass()).sqrt();
        let vals = base.values().iter().map(|v| v * scale).collect();
        let f0 = Field::new(Grid::Line(g), vals).unwrap();
        members_ok &= in_region(&f0, &spec, &lp).member;
        let cfg = EvolveConfig { dt: 2e-3, t_final: 20.0, observe_every: 250, snapshot_every: 0 };
        let series = propagate(&f0, &cfg, &lp).unwrap();
        phi_ok &= series.rows.iter().all(|r| r.phi > 0.0);
        let v = classify_run(&series, &lp, &ClassifyThresholds::default());
        scatter_ok &= v.label == VerdictLabel::ScatteringLike;
    }

    // 200 random members have positive virial gap
    let grid = RadialGrid::new(1, 2048, 60.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut gap_ok = true;
    let mut min_gap = f64::INFINITY;
    for t in 0..200 {
        let m = (0.05 + 0.9 * (t % 10) as f64 / 9.0) * spec.tilde_m_c;
        let parts = rng.gen_range(1..=3);
        let mut vals = vec![Complex64::new(0.0, 0.0); grid.n()];
        for _ in 0..parts {
            let amp: f64 = rng.gen_range(0.1..1.0);
            let width = 0.1 * 1000f64.powf(rng.gen::<f64>());
            for (i, v) in vals.iter_mut().enumerate() {
                let r = grid.node(i);
                *v += Complex64::new(amp * (-r * r / (2.0 * width * width)).exp(), 0.0);
            }
        }
        let f = Field::new(Grid::Radial(grid), vals).unwrap();
        let scale = (m / f.mass()).sqrt();
        let vals = f.values().iter().map(|v| v * scale).collect();
        let f = Field::new(Grid::Radial(grid), vals).unwrap();
        let gap = virial_gap(&f, &lp).unwrap();
        min_gap = min_gap.min(gap);
        gap_ok &= gap > 0.0;
    }

    verdict(
        "criterion 9 (soliton vs region scattering)",
        soliton_ok && members_ok && scatter_ok && phi_ok && gap_ok,
        &format!(
            "soliton drift {drift:.2e} ({}), members {members_ok}, all scatter {scatter_ok}, \
             Phi positive {phi_ok}, min virial gap {min_gap:.3e} over 200 members",
            sol_verdict.label
        ),
    );
}

#[test]
fn criterion_10_zero_frequency_probe() {
    let s_grid: Vec<f64> = (0..64).map(|k| 0.1 * 1000f64.powf(k as f64 / 63.0)).collect();
    let mut pass = true;
    let mut detail = String::new();
    for (d, p0, p1) in [(3u32, 4.0, 2.0), (1, 6.0, 5.0)] {
        let params = ModelParams::new(d, p0, p1).unwrap();
        let rep = zero_frequency_scan(&params, 1.0, -1.0, &s_grid).unwrap();
        pass &= rep.converged == 0;
        detail.push_str(&format!("({d},{p0},{p1}): {} converged; ", rep.converged));
    }
    verdict("criterion 10 (zero-frequency uniqueness probe)", pass, &detail);
}

#[test]
fn criterion_11_reproducibility() {
    let bin = env!("CARGO_BIN_EXE_dpnls");
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, jobs: &str, args: &[&str]| -> Vec<u8> {
        let out = tmp.path().join(dir);
        let status = std::process::Command::new(bin)
            .args(args)
            .args(["--output", out.to_str().unwrap(), "--jobs", jobs])
            .env_remove("DPNLS_JOBS")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let mut bytes = Vec::new();
        for entry in std::fs::read_dir(&out).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().map(|e| e == "csv").unwrap_or(false) {
                bytes.extend(std::fs::read(&p).unwrap());
            }
        }
        bytes
    };

    let evolve_args = [
        "evolve",
        "--set", "d=1", "--set", "p0=6", "--set", "p1=5",
        "--set", "grid.n=512", "--set", "grid.extent=80",
        "--set", "evolve.dt=0.01", "--set", "evolve.t=1", "--set", "evolve.observe_every=10",
        "--set", "seed=42",
    ];
    let a = run("e1", "2", &evolve_args);
    let b = run("e2", "2", &evolve_args);

    let gs_args = [
        "groundstate",
        "--set", "d=3", "--set", "p0=4", "--set", "p1=2", "--set", "seed=42",
        "--mass-curve", "8",
    ];
    let c = run("g1", "1", &gs_args);
    let d = run("g2", "8", &gs_args);

    verdict(
        "criterion 11 (reproducibility)",
        a == b && c == d,
        &format!(
            "evolve reruns identical: {}; mass curve identical across --jobs 1 vs 8: {}",
            a == b,
            c == d
        ),
    );
}
