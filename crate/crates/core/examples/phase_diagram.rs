//! Decision regions over (size, gamma), written as CSV and SVG.
//!
//! ```bash
//! cargo run --example phase_diagram -- /tmp/phase
//! ```

use std::fs::{self, File};

use powersharing::model::{gamma_star, interior_grid, phase_grid, write_phase_csv, ModelParams};
use powersharing::plot::phase_svg;

fn main() -> powersharing::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "phase_out".into());
    fs::create_dir_all(&dir)?;
    let params = ModelParams::new(0.5, 0.1, 1.0)?;
    let gammas: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    let cells = phase_grid(&params, &interior_grid(99), &gammas)?;
    write_phase_csv(File::create(format!("{dir}/phase.csv"))?, &cells)?;
    let gs = gamma_star(&params);
    fs::write(format!("{dir}/phase.svg"), phase_svg(&cells, Some(gs)))?;

    // Largest size still granted access at each gamma.
    for &g in gammas.iter().step_by(8) {
        let edge = cells.iter().filter(|c| c.gamma == g && c.grants_access).map(|c| c.delta).fold(0.0, f64::max);
        println!("gamma {g:.2}: access up to delta {edge:.2}");
    }
    println!("gamma* = {gs:.4}; wrote {dir}/phase.csv and {dir}/phase.svg");
    Ok(())
}
