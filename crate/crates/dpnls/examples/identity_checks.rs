//! The algebraic identities tying the functionals together: rescaling,
//! scaling derivative, Galilean boost, Pohozaev.

use dpnls::functionals::{
    boost, e_ab_matches_phi, optimal_boost, report, scaling_derivative_check,
};
use dpnls::groundstate::solve_ground_state;
use dpnls::*;
use num_complex::Complex64;

fn main() -> Result<()> {
    let params = ModelParams::new(3, 4.0, 2.0)?;
    let grid = RadialGrid::new(3, 2048, 40.0)?;
    let f = Field::from_radial_fn(grid, |r| Complex64::new(0.9 * (-r * r / 6.0).exp(), 0.0));

    println!("E_{{a0,b0}}(u) vs Phi(u) relative gap : {:.3e}", e_ab_matches_phi(&f, &params)?);
    println!(
        "d/dlambda E(u^lambda) residual       : {:.3e}",
        scaling_derivative_check(&f, 1.3, &params)?
    );

    // boost algebra on the line: E(e^{i xi x} u) = E(u) + xi^2 M + 2 xi Im...
    let lp = ModelParams::new(1, 6.0, 5.0)?;
    let lg = LineGrid::new(2048, 80.0)?;
    let lf = Field::from_line_fn(lg, |x| {
        Complex64::new(0.8 * (-x * x / 8.0).exp(), 0.0) * Complex64::new(0.0, 0.4 * x).exp()
    });
    let rep = report(&lf, &lp);
    let (xi_opt, deboosted) = optimal_boost(&lf, &lp)?;
    let drop = rep.energy - report(&deboosted, &lp).energy;
    println!("optimal de-boost xi                  : {xi_opt:+.6}");
    println!(
        "energy drop - |P|^2/M                : {:+.3e}",
        drop - rep.momentum * rep.momentum / rep.mass
    );
    let re_boosted = boost(&deboosted, -xi_opt)?;
    println!(
        "mass unchanged by boost              : {:+.3e}",
        report(&re_boosted, &lp).mass - rep.mass
    );

    // Pohozaev: Phi vanishes exactly on a ground state
    let gs = solve_ground_state(&params, 0.5 * omega_star(&params)?, 1e-13)?;
    println!(
        "Phi(Q)/kinetic on a ground state     : {:+.3e}",
        gs.report.phi / gs.report.kinetic
    );
    Ok(())
}
