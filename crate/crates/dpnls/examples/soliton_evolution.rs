//! Propagate a ground state: e^{i omega t} Q is stationary in modulus, and
//! mass/energy are conserved by the splitting.

use dpnls::evolve::{propagate, virial_check, EvolveConfig};
use dpnls::groundstate::solve_ground_state_on;
use dpnls::*;

fn main() -> Result<()> {
    let params = ModelParams::new(3, 4.0, 2.0)?;
    let omega = 0.5 * omega_star(&params)?;
    let grid = RadialGrid::new(3, 4096, 120.0)?;
    let gs = solve_ground_state_on(&params, omega, 1e-13, grid)?;

    let cfg = EvolveConfig { dt: 5e-3, t_final: 10.0, observe_every: 100, snapshot_every: 0 };
    let series = propagate(&gs.profile, &cfg, &params)?;
    let first = &series.rows[0];
    let last = series.rows.last().unwrap();

    println!("steps              : {}", (cfg.t_final / cfg.dt) as usize);
    println!("mass drift         : {:+.3e}", (last.mass - first.mass) / first.mass);
    println!("energy drift       : {:+.3e}", last.energy - first.energy);
    let mut drift = 0.0f64;
    for (i, v) in series.final_field.values().iter().enumerate() {
        drift = drift.max((v.norm() - gs.profile.values()[i].norm()).abs());
    }
    println!("|u| profile drift  : {:.3e} (relative to peak)", drift / gs.profile.peak());
    println!("virial residual    : {:.3e}", virial_check(&series)?);
    println!("abort              : {:?}", series.abort);
    Ok(())
}
