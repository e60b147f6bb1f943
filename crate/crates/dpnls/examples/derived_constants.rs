//! Derived model constants for the three headline parameter sets.

use dpnls::*;

fn main() -> Result<()> {
    for (d, p0, p1) in [(3u32, 4.0, 2.0), (1, 6.0, 5.0), (3, 3.0, 2.0)] {
        let params = ModelParams::new(d, p0, p1)?;
        let c = derive_constants(&params)?;
        let w_star = omega_star(&params)?;
        println!("(d, p0, p1) = ({d}, {p0}, {p1})   regime: {:?}", classify_regime(&params));
        println!("  s0          = {:+.6}", c.s0);
        println!("  theta       = {:.6}", c.theta);
        println!("  (c0, c1)    = ({:.6}, {:.6})", c.c0, c.c1);
        println!("  (a0, b0)    = ({:.6}, {:.6})", c.a0, c.b0);
        println!("  rho         = {:.6}", c.rho);
        println!("  m~_c / m_c  = {:.10}", c.tilde_ratio);
        println!("  omega_*     = {:.10}", w_star);
        println!();
    }
    // the paper's headline ratio for (3, 4, 2) is 4 / (3 sqrt(3))
    let c = derive_constants(&ModelParams::new(3, 4.0, 2.0)?)?;
    println!(
        "check: tilde_ratio(3,4,2) - 4/(3 sqrt 3) = {:+.3e}",
        c.tilde_ratio - 4.0 / (3.0 * 3f64.sqrt())
    );
    Ok(())
}
