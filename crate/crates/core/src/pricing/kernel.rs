use crate::error::{domain, Result};
use crate::model::{a_coefficient, ModelParams};
use crate::scalar::Scalar;

/// One-step density of the return `x` under the martingale measure:
/// Gaussian with standard deviation `sigma a(i)` and mean
/// `gamma - (sigma a(i))^2 / 2`, where `gamma = ln(1 + r) - mu`.
pub fn martingale_kernel<S: Scalar>(x: S, sigma: S, i_state: u64, params: &ModelParams<S>) -> Result<S> {
    if !(sigma > S::zero()) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let sd = sigma * a_coefficient(i_state, params.d)?;
    let mean = params.gamma() - sd * sd / S::lit(2.0);
    Ok(((x - mean) / sd).norm_pdf() / sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real_line;

    #[test]
    fn normalized_and_martingale() {
        let p = ModelParams::new(0.225, 0.001, 4.0, 0.01, 21, 0.0004, 0.0001).unwrap();
        for (sigma, i) in [(0.01, 1u64), (0.02, 7), (0.005, 300)] {
            let mass = integrate_real_line(|x| martingale_kernel(x, sigma, i, &p).unwrap(), 0.0, 1e-13).value;
            assert!((mass - 1.0).abs() < 1e-10);
            let growth =
                integrate_real_line(|x| (p.mu + x).exp() * martingale_kernel(x, sigma, i, &p).unwrap(), 0.0, 1e-13)
                    .value;
            assert!((growth / (1.0 + p.r) - 1.0).abs() < 1e-10);
        }
        assert!(martingale_kernel(0.0, 0.0, 1, &p).is_err());
        assert!(martingale_kernel(0.0, 0.01, 0, &p).is_err());
    }

    #[test]
    fn riskless_drift_centres_the_kernel() {
        let r = 0.0002f64;
        let p = ModelParams::new(0.3, 0.01, 4.0, 0.01, 5, r.ln_1p(), r).unwrap();
        let (sigma, i) = (0.015, 4);
        let sd = sigma * a_coefficient(i, p.d).unwrap();
        let mean = -sd * sd / 2.0;
        // The density is symmetric about -sd^2/2.
        let lo = martingale_kernel(mean - 0.01, sigma, i, &p).unwrap();
        let hi = martingale_kernel(mean + 0.01, sigma, i, &p).unwrap();
        assert!((lo / hi - 1.0).abs() < 1e-12);
    }
}
