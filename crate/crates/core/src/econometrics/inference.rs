//! Joint Wald tests and peak location inference.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use super::fit::FitResult;
use super::spec::Reference;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// `"chi2"` or `"F"`.
    pub reference: &'static str,
}

/// `b' V^{-1} b` for the restriction `b = 0`.
///
/// With [`Reference::SmallSample`] the statistic is divided by `q` and
/// referred to `F(q, denom_df)`.
pub fn wald_quadratic_form(b: &[f64], v: &DMatrix<f64>, reference: Reference, denom_df: usize) -> Result<WaldTest> {
    let q = b.len();
    assert_eq!((v.nrows(), v.ncols()), (q, q));
    let chol = v.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let bv = nalgebra::DVector::from_column_slice(b);
    let solved = chol.solve(&bv);
    let stat = bv.dot(&solved);
    if !stat.is_finite() {
        return Err(Error::SingularCovariance);
    }
    let (statistic, p_value, reference) = match reference {
        Reference::Asymptotic => {
            let chi = ChiSquared::new(q as f64).expect("positive df");
            (stat, chi.sf(stat), "chi2")
        }
        Reference::SmallSample => {
            let f = stat / q as f64;
            let dist = FisherSnedecor::new(q as f64, denom_df.max(1) as f64).expect("positive df");
            (f, dist.sf(f), "F")
        }
    };
    Ok(WaldTest { statistic, df: q, p_value: p_value.clamp(0.0, 1.0), reference })
}

/// Wald test that the named coefficient positions are jointly zero.
pub fn wald(fit: &FitResult, positions: &[usize]) -> Result<WaldTest> {
    let b: Vec<f64> = positions.iter().map(|&i| fit.beta[i]).collect();
    let v = DMatrix::from_fn(positions.len(), positions.len(), |a, c| fit.vcov[(positions[a], positions[c])]);
    wald_quadratic_form(&b, &v, fit.reference, fit.n_clusters.saturating_sub(1))
}

/// Joint test of `beta1 = beta2 = 0` on the size terms.
pub fn wald_joint(fit: &FitResult) -> Result<WaldTest> {
    wald(fit, &fit.focal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakEstimate {
    /// `-beta1 / (2 beta2)`.
    pub peak: f64,
    /// Delta-method standard error.
    pub std_error: f64,
    /// Percent of sample sizes at or below the peak.
    pub percentile: f64,
}

pub fn peak_from(beta1: f64, beta2: f64, v11: f64, v12: f64, v22: f64) -> Result<(f64, f64)> {
    if !(beta2 < 0.0) {
        return Err(Error::WrongCurvature(beta2));
    }
    let peak = -beta1 / (2.0 * beta2);
    let g1 = -1.0 / (2.0 * beta2);
    let g2 = beta1 / (2.0 * beta2 * beta2);
    let var = g1 * g1 * v11 + 2.0 * g1 * g2 * v12 + g2 * g2 * v22;
    Ok((peak, var.max(0.0).sqrt()))
}

/// Empirical percentile (0-100) of `value` within `sample`.
pub fn percentile_of(value: f64, sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return f64::NAN;
    }
    let below = sample.iter().filter(|&&s| s <= value).count();
    100.0 * below as f64 / sample.len() as f64
}

/// Peak of the fitted quadratic and its position within `sizes`.
pub fn peak_inference(fit: &FitResult, sizes: &[f64]) -> Result<PeakEstimate> {
    let [i, j] = fit.focal;
    let (peak, std_error) = peak_from(fit.beta[i], fit.beta[j], fit.vcov[(i, i)], fit.vcov[(i, j)], fit.vcov[(j, j)])?;
    Ok(PeakEstimate { peak, std_error, percentile: percentile_of(peak, sizes) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_give_zero_statistic() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        let w = wald_quadratic_form(&[0.0, 0.0], &v, Reference::Asymptotic, 10).unwrap();
        assert_eq!(w.statistic, 0.0);
        assert!((w.p_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_restriction_is_squared_t() {
        let v = DMatrix::from_row_slice(1, 1, &[0.04]);
        let w = wald_quadratic_form(&[0.5], &v, Reference::Asymptotic, 10).unwrap();
        let t = 0.5 / 0.2;
        assert!((w.statistic - t * t).abs() < 1e-10);
    }

    #[test]
    fn hand_computed_form() {
        // V = [[2, 1], [1, 2]], V^{-1} = [[2, -1], [-1, 2]] / 3, b = (1, 2):
        // b' V^{-1} b = (2 - 4 + 8) / 3 = 2.
        let v = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let w = wald_quadratic_form(&[1.0, 2.0], &v, Reference::Asymptotic, 10).unwrap();
        assert!((w.statistic - 2.0).abs() < 1e-12);
        assert!((w.p_value - (-1.0f64).exp()).abs() < 1e-12);
        let f = wald_quadratic_form(&[1.0, 2.0], &v, Reference::SmallSample, 10).unwrap();
        assert!((f.statistic - 1.0).abs() < 1e-12);
        assert_eq!(f.reference, "F");
    }

    #[test]
    fn singular_restriction_covariance() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(wald_quadratic_form(&[1.0, 1.0], &v, Reference::Asymptotic, 5), Err(Error::SingularCovariance)));
    }

    #[test]
    fn peak_arithmetic_and_curvature() {
        let (p, _) = peak_from(2.0, -2.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(p, 0.5);
        assert!(matches!(peak_from(2.0, 0.0, 1.0, 0.0, 1.0), Err(Error::WrongCurvature(_))));
        assert!(matches!(peak_from(2.0, 0.3, 1.0, 0.0, 1.0), Err(Error::WrongCurvature(_))));
    }

    #[test]
    fn delta_method_matches_finite_difference_gradient() {
        let (b1, b2) = (1.3, -1.7);
        let vm = [[0.04, -0.03], [-0.03, 0.05]];
        let (_, se) = peak_from(b1, b2, vm[0][0], vm[0][1], vm[1][1]).unwrap();
        let peak = |a: f64, b: f64| -a / (2.0 * b);
        let h = 1e-6;
        let g = [
            (peak(b1 + h, b2) - peak(b1 - h, b2)) / (2.0 * h),
            (peak(b1, b2 + h) - peak(b1, b2 - h)) / (2.0 * h),
        ];
        let var = g[0] * g[0] * vm[0][0] + 2.0 * g[0] * g[1] * vm[0][1] + g[1] * g[1] * vm[1][1];
        assert!((se - var.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn percentile_is_empirical_cdf() {
        let s: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(percentile_of(0.47, &s), 47.0);
        assert_eq!(percentile_of(0.0, &s), 0.0);
        assert_eq!(percentile_of(2.0, &s), 100.0);
    }
}
