//! The five-column fixed-effects ladder on a model-mode panel.
//!
//! ```bash
//! cargo run --release --example fixed_effects_ladder
//! ```

use powersharing::econometrics::{replicate_suite, SuiteData, SuiteMenu};
use powersharing::synth::{generate, SynthConfig};

fn main() -> powersharing::Result<()> {
    let synth = generate(&SynthConfig { seed: 5, ..SynthConfig::default() })?;
    let results = replicate_suite(SuiteData::new(&synth.panel), &SuiteMenu::baseline_ladder());
    println!("col  beta1      beta2      peak    n     absorbed");
    for cell in &results.cells {
        match cell.fit() {
            Some(f) => println!(
                "({})  {:>8.3}  {:>8.3}  {:>6}  {:>5} {:>6}",
                cell.column,
                f.beta1(),
                f.beta2(),
                f.peak.map_or("-".into(), |p| format!("{:.3}", p.peak)),
                f.n_obs,
                f.n_absorbed
            ),
            None => println!("({})  failed: {}", cell.column, cell.outcome.as_ref().unwrap_err()),
        }
    }
    results.write_csv(std::io::stdout().lock())?;
    Ok(())
}
