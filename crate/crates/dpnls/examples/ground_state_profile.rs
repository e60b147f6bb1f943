//! Solve one ground state by shooting and inspect its invariants.

use dpnls::groundstate::{ell_residual, solve_ground_state, tail_log_slope};
use dpnls::functionals::pohozaev_residual;
use dpnls::*;

fn main() -> Result<()> {
    let params = ModelParams::new(3, 4.0, 2.0)?;
    let omega = 0.5 * omega_star(&params)?;
    let gs = solve_ground_state(&params, omega, 1e-13)?;

    println!("omega               = {:.8}", gs.omega);
    println!("shooting amplitude  = {:.12}", gs.shooting_amplitude);
    println!("mass                = {:.8}", gs.mass);
    println!("energy              = {:.8}", gs.report.energy);
    println!("kinetic             = {:.8}", gs.report.kinetic);
    println!("Phi (Pohozaev)      = {:+.3e}", gs.report.phi);
    println!(
        "Pohozaev residual   = {:.3e}",
        pohozaev_residual(&gs.profile, 1.0, -1.0, &params)
    );
    println!(
        "elliptic residual   = {:.3e}",
        ell_residual(&gs.profile, 1.0, -1.0, gs.omega, &params)?
    );
    println!(
        "tail log-slope      = {:.6}  (expected ~ -sqrt(omega) = {:.6})",
        tail_log_slope(&gs.profile)?,
        -omega.sqrt()
    );
    Ok(())
}
