//! Sweep the incumbent's decision over group sizes and print the thresholds.
//!
//! ```bash
//! cargo run --example model_sweep
//! ```

use powersharing::model::{decide, interior_grid, sweep_delta, thresholds, ModelParams};

fn main() -> powersharing::Result<()> {
    let params = ModelParams::new(0.5, 0.1, 1.0)?;
    let t = thresholds(&params)?;
    println!("delta* = {:.6}  delta_bar = {:.6}  gamma* = {:.6}", t.delta_star, t.delta_bar, t.gamma_star);

    let rows = sweep_delta(&params, &interior_grid(19))?;
    println!("{:>6} {:>10} {:>8}", "delta", "f", "access");
    for r in &rows {
        println!("{:>6.2} {:>10.5} {:>8}", r.delta, r.f, if r.grants_access { "shared" } else { "limited" });
    }

    // Below gamma* the incumbent never limits a minority.
    let closed = params.with_gamma(0.5)?;
    let d = decide(0.95, &closed)?;
    println!("gamma = 0.5, delta = 0.95: h = {:.4}, grants access: {}", d.h_value, d.grants_access);
    Ok(())
}
