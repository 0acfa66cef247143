//! Lagged and instrumented size terms with first-stage diagnostics.
//!
//! ```bash
//! cargo run --release --example iv_lagged
//! ```

use powersharing::econometrics::{fit, LagMode, RegressionSpec};
use powersharing::synth::{generate, DgpMode, QuadraticDgp, SynthConfig};

fn main() -> powersharing::Result<()> {
    let cfg = SynthConfig { seed: 8, mode: DgpMode::Quadratic(QuadraticDgp::default()), ..SynthConfig::default() };
    let panel = generate(&cfg)?.panel;
    for mode in [LagMode::Contemporaneous, LagMode::Lagged, LagMode::IvLagged] {
        let spec = RegressionSpec::ladder(3).unwrap().with_lag_mode(mode);
        let f = fit(&panel, &spec)?;
        println!("{mode:?}: {} beta1 {:.3} beta2 {:.3} n {}", f.estimator, f.beta1(), f.beta2(), f.n_obs);
        for fs in &f.first_stage {
            println!("    first stage {}: F {:.1}, partial R2 {:.3}", fs.endogenous, fs.f_statistic, fs.partial_r2);
        }
    }
    Ok(())
}
