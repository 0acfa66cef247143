//! Generate a quadratic-mode panel with a known peak and recover it.
//!
//! ```bash
//! cargo run --release --example synth_recovery
//! ```

use powersharing::econometrics::{fit_ols, RegressionSpec};
use powersharing::synth::{generate, truth_report, DgpMode, QuadraticDgp, SynthConfig};

fn main() -> powersharing::Result<()> {
    let cfg = SynthConfig {
        n_countries: 220,
        mode: DgpMode::Quadratic(QuadraticDgp::default()),
        seed: 11,
        ..SynthConfig::default()
    };
    let synth = generate(&cfg)?;
    let truth = truth_report(&synth)?;
    println!("{} rows, {} groups, true peak {:?}", truth.n_rows, truth.n_groups, truth.true_peak);

    let fit = fit_ols(&synth.panel, &RegressionSpec::ladder(4).unwrap())?;
    let peak = fit.peak.expect("negative curvature");
    let wald = fit.wald_joint.expect("joint test");
    println!("beta1 {:.3} ({:.3})  beta2 {:.3} ({:.3})", fit.beta1(), fit.se1(), fit.beta2(), fit.se2());
    println!("peak {:.3} +/- {:.3}, percentile {:.1}", peak.peak, 1.96 * peak.std_error, peak.percentile);
    println!("joint Wald {:.1}, p = {:.2e}", wald.statistic, wald.p_value);
    Ok(())
}
