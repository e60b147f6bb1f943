//! Sample the ground-state mass curve and locate the minimal mass m_c.

use dpnls::groundstate::{mass_curve, minimal_mass};
use dpnls::*;

fn main() -> Result<()> {
    let params = ModelParams::new(3, 4.0, 2.0)?;
    let w_star = omega_star(&params)?;
    let omegas: Vec<f64> = (0..24)
        .map(|k| 0.02 * w_star * (0.95 / 0.02f64).powf(k as f64 / 23.0))
        .collect();
    println!("omega        mass          status");
    for s in mass_curve(&params, &omegas) {
        match &s.status {
            Ok(()) => println!("{:<12.6} {:<13.4} ok", s.omega, s.mass),
            Err(e) => println!("{:<12.6} {:<13} {e}", s.omega, "-"),
        }
    }
    let mm = minimal_mass(&params)?;
    println!();
    println!("omega_c   = {:.8}", mm.omega_c);
    println!("m_c       = {:.8}", mm.m_c);
    println!("m~_c      = {:.8}", mm.m_tilde_c);
    Ok(())
}
