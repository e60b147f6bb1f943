//! Empirical coercivity below the critical masses: Phi > 0 below m~_c, and
//! E >= delta(m) |grad u|^2 below m_c with the beta-scaling analytic floor.

use dpnls::groundstate::minimal_mass;
use dpnls::varflow::{phi_positivity_sample, region_energy_bound, FlowConfig};
use dpnls::*;

fn main() -> Result<()> {
    let params = ModelParams::new(3, 4.0, 2.0)?;
    let mm = minimal_mass(&params)?;
    let cfg = FlowConfig {
        grid: RadialGrid::new(3, 2048, 60.0)?,
        max_iters: 10_000,
        tol: 1e-10,
        tol_neg: 2e-4,
    };

    println!("m / m~_c   min Phi/K   all positive");
    for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let rep = phi_positivity_sample(&params, frac * mm.m_tilde_c, 500, &cfg)?;
        println!("{:<10.2} {:<11.5} {}", frac, rep.min_ratio, rep.all_positive);
    }

    println!();
    println!("m / m_c    empirical delta   analytic floor 1 - beta^2");
    for frac in [0.25, 0.5, 0.75, 0.9] {
        let rep = region_energy_bound(&params, frac * mm.m_c, mm.m_c, 500, &cfg)?;
        println!("{:<10.2} {:<17.5} {:.5}", frac, rep.empirical_delta, rep.analytic_floor);
    }
    Ok(())
}
