//! Sample the threshold landscape I(m), tilde-I(m), e(m) on a coarse grid
//! around the critical masses.

use dpnls::groundstate::minimal_mass;
use dpnls::varflow::{threshold_curves, FlowConfig};
use dpnls::*;

fn main() -> Result<()> {
    let params = ModelParams::new(3, 4.0, 2.0)?;
    let mm = minimal_mass(&params)?;
    println!("ground-state route: m_c = {:.4}, m~_c = {:.4}", mm.m_c, mm.m_tilde_c);

    let cfg = FlowConfig {
        grid: RadialGrid::new(3, 2048, 60.0)?,
        max_iters: 30_000,
        tol: 1e-10,
        tol_neg: 2e-4,
    };
    let m_grid: Vec<f64> = (0..7)
        .map(|k| 0.5 * mm.m_tilde_c + k as f64 / 6.0 * (1.5 * mm.m_c - 0.5 * mm.m_tilde_c))
        .collect();
    let curves = threshold_curves(&params, &m_grid, &cfg)?;

    println!();
    println!("m            I(m)          ~I direct     ~I identity   e(m)");
    for k in 0..m_grid.len() {
        let i = &curves.i_samples[k];
        let t = &curves.tilde_i_samples[k];
        let e = &curves.e_samples[k];
        println!(
            "{:<12.4} {:<13.6} {:<13.6} {:<13.6} {}",
            i.m,
            i.value,
            t.direct.value,
            t.identity_value,
            if e.value.is_finite() { format!("{:.6}", e.value) } else { "inf".into() }
        );
    }
    println!();
    println!("I-curve m_c estimate      : {:?}", curves.m_c_estimate);
    println!("direct ~I crossing        : {:?}", curves.tilde_m_c_estimate);
    Ok(())
}
