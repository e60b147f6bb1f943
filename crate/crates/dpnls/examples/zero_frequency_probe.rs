//! At omega = 0 with signs (1, -1) no positive decaying profile exists: a
//! 64-amplitude shooting scan finds no converged shot.

use dpnls::groundstate::zero_frequency_scan;
use dpnls::*;

fn main() -> Result<()> {
    for (d, p0, p1) in [(3u32, 4.0, 2.0), (1, 6.0, 5.0)] {
        let params = ModelParams::new(d, p0, p1)?;
        let s_grid: Vec<f64> = (0..64).map(|k| 0.1 * 1000f64.powf(k as f64 / 63.0)).collect();
        let rep = zero_frequency_scan(&params, 1.0, -1.0, &s_grid)?;
        println!(
            "(d, p0, p1) = ({d}, {p0}, {p1}): {} undershoot, {} overshoot, {} converged, {} indeterminate",
            rep.undershoot, rep.overshoot, rep.converged, rep.indeterminate
        );
    }
    Ok(())
}
