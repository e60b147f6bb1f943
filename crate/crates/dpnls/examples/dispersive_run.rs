//! A small-mass line run disperses; the classifier reports scattering-like
//! with its evidence table.

use dpnls::classify::{classify_run, ClassifyThresholds};
use dpnls::evolve::{propagate, EvolveConfig};
use dpnls::*;
use num_complex::Complex64;

fn main() -> Result<()> {
    let params = ModelParams::new(1, 6.0, 5.0)?;
    let g = LineGrid::new(4096, 400.0)?;
    let f0 = Field::from_line_fn(g, |x| Complex64::new(0.5 * (-x * x / 2.0).exp(), 0.0));
    let cfg = EvolveConfig { dt: 2e-3, t_final: 20.0, observe_every: 250, snapshot_every: 0 };
    let series = propagate(&f0, &cfg, &params)?;

    println!("t       peak      peak*sqrt(t)  Phi        J1");
    for row in series.rows.iter().step_by(4) {
        println!(
            "{:<7.2} {:<9.5} {:<13.5} {:<10.5} {:.5}",
            row.t,
            row.peak,
            row.peak * row.t.sqrt(),
            row.phi,
            row.j1
        );
    }
    let verdict = classify_run(&series, &params, &ClassifyThresholds::default());
    println!();
    println!("verdict: {}", verdict.label);
    for e in &verdict.evidence {
        println!(
            "  [{}] {:<28} value {:.4e}  threshold {:.4e}",
            if e.pass { "pass" } else { " -  " },
            e.criterion,
            e.value,
            e.threshold
        );
    }
    Ok(())
}
