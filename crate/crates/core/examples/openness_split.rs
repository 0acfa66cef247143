//! Institutional heterogeneity: the size-access curve in open versus closed
//! regimes of a model-mode panel.
//!
//! ```bash
//! cargo run --release --example openness_split
//! ```

use powersharing::econometrics::{replicate_suite, SplitKind, SuiteData, SuiteMenu, Variant};
use powersharing::synth::{generate, Range, SynthConfig};

fn main() -> powersharing::Result<()> {
    let mut cfg = SynthConfig { n_countries: 400, seed: 2, ..SynthConfig::default() };
    // Half the countries fall below gamma* (about 0.955 here).
    cfg.params_prior.gamma = Range::new(0.85, 1.0);
    let panel = generate(&cfg)?.panel;

    let menu = SuiteMenu {
        variants: vec![Variant::Contemporaneous],
        columns: vec![],
        splits: vec![SplitKind::Openness],
        split_columns: vec![3, 4],
        ..SuiteMenu::baseline_ladder()
    };
    let results = replicate_suite(SuiteData::new(&panel), &menu);
    for cell in &results.cells {
        let f = cell.fit().expect("fit");
        println!(
            "{:<16} ({}) beta1 {:>7.3} (t {:>6.2})  beta2 {:>7.3} (t {:>6.2})  n {}",
            cell.split.as_deref().unwrap_or("-"),
            cell.column,
            f.beta1(),
            f.t1(),
            f.beta2(),
            f.t2(),
            f.n_obs
        );
    }
    Ok(())
}
