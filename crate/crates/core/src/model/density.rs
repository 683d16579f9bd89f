use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// `a(u)^2 = u^{2D} - (u-1)^{2D}` for real `u >= 1`.
///
/// Written as `u^{2D} * (1 - (1 - 1/u)^{2D})` so the difference keeps full
/// relative precision for large `u`.
#[inline]
pub fn a_squared<S: Scalar>(u: S, d: S) -> S {
    let one = S::one();
    if u <= one {
        return one;
    }
    if d == S::lit(0.5) {
        return one;
    }
    let two_d = d + d;
    u.powf(two_d) * -(two_d * (-(one / u)).ln_1p()).exp_m1()
}

/// Modulation coefficient `a_i = sqrt(i^{2D} - (i-1)^{2D})`.
///
/// `a_1 = 1` for every `D`, and `a_i = 1` for all `i` when `D = 1/2`.
pub fn a_coefficient<S: Scalar>(i: u64, d: S) -> Result<S> {
    if i < 1 {
        return domain("restart state must be at least 1");
    }
    if !(d > S::zero()) {
        return domain(format!("D must be positive, got {d}"));
    }
    Ok(a_squared(S::from_u64(i).expect("state fits scalar"), d).sqrt())
}

/// Sum of `a_i^2` over a state string.
pub fn sum_a_squared<S: Scalar>(states: &[u64], d: S) -> S {
    states
        .iter()
        .map(|&i| a_squared(S::from_u64(i).expect("state fits scalar"), d))
        .fold(S::zero(), |acc, x| acc + x)
}

/// Initial law of the restart chain, `pi(i) = nu (1 - nu)^{i-1}`.
pub fn restart_initial_law<S: Scalar>(i: u64, nu: S) -> S {
    if i < 1 {
        return S::zero();
    }
    if i == 1 {
        return nu;
    }
    let k = S::from_u64(i - 1).expect("state fits scalar");
    nu * (S::one() - nu).powf(k)
}

/// Transition `W(i, j) = P[I_{t+1} = i | I_t = j]`.
pub fn restart_transition<S: Scalar>(i: u64, j: u64, nu: S) -> S {
    if i == 1 {
        nu
    } else if i == j + 1 {
        S::one() - nu
    } else {
        S::zero()
    }
}

/// Log of the joint density `phi_t(y_1..y_t)` of `t` returns sharing one
/// inverse-Gamma distributed volatility. For `t = 0` this is `0`.
pub fn ln_phi_density<S: Scalar>(y: &[S], alpha: S, beta: S) -> S {
    let t = S::from_usize(y.len()).expect("length fits scalar");
    let two = S::lit(2.0);
    let ss = y.iter().fold(beta * beta, |acc, &v| acc + v * v);
    alpha * beta.ln() + ((alpha + t) / two).ln_gamma()
        - t / two * S::PI().ln()
        - (alpha / two).ln_gamma()
        - (alpha + t) / two * ss.ln()
}

/// `phi_t(y_1..y_t) = beta^alpha Gamma((alpha+t)/2) / (pi^{t/2} Gamma(alpha/2))
///   * [beta^2 + sum y^2]^{-(alpha+t)/2}`.
pub fn phi_density<S: Scalar>(y: &[S], alpha: S, beta: S) -> Result<S> {
    if y.is_empty() {
        return domain("phi density needs at least one argument");
    }
    Ok(ln_phi_density(y, alpha, beta).exp())
}

/// Log density of `Y_t = y` given the lags in `lags` (any number of them).
pub fn ln_predictive_density<S: Scalar>(y: S, lags: &[S], alpha: S, beta: S) -> S {
    let k = S::from_usize(lags.len()).expect("length fits scalar");
    let two = S::lit(2.0);
    let s2 = lags.iter().fold(beta * beta, |acc, &v| acc + v * v);
    let shape = alpha + k;
    ((shape + S::one()) / two).ln_gamma() - (shape / two).ln_gamma() - S::PI().ln() / two
        + shape / two * s2.ln()
        - (shape + S::one()) / two * (s2 + y * y).ln()
}

/// Density of `Y_t = y` given an arbitrary number of preceding values.
pub fn predictive_density<S: Scalar>(y: S, lags: &[S], alpha: S, beta: S) -> S {
    ln_predictive_density(y, lags, alpha, beta).exp()
}

/// Conditional density of `Y_t` given exactly `m` preceding values.
pub fn conditional_y_density<S: Scalar>(y: S, lags: &[S], alpha: S, beta: S, m: usize) -> Result<S> {
    if lags.len() != m {
        return domain(format!("expected {m} conditioning values, got {}", lags.len()));
    }
    Ok(predictive_density(y, lags, alpha, beta))
}

/// Density in `sigma` of the inverse-Gamma volatility law
/// `rho_{shape,scale}(sigma) = 2^{1-shape/2} / Gamma(shape/2)
///   * scale^shape / sigma^{shape+1} * exp(-scale^2 / (2 sigma^2))`.
pub fn inverse_gamma_sigma_density<S: Scalar>(sigma: S, shape: S, scale: S) -> Result<S> {
    if !(sigma > S::zero()) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let two = S::lit(2.0);
    let ln = (S::one() - shape / two) * two.ln() - (shape / two).ln_gamma() + shape * scale.ln()
        - (shape + S::one()) * sigma.ln()
        - scale * scale / (two * sigma * sigma);
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_real_line, integrate_to_infinity};

    #[test]
    fn a_coefficient_examples() {
        assert_eq!(a_coefficient(1, 0.225).unwrap(), 1.0);
        for i in [1u64, 2, 7, 1000] {
            assert_eq!(a_coefficient(i, 0.5).unwrap(), 1.0);
        }
        let a2 = a_coefficient(2, 0.25).unwrap();
        assert!((a2 - (2f64.sqrt() - 1.0).sqrt()).abs() < 1e-15);
        assert!((a2 - 0.643594).abs() < 1e-6);
        assert!(a_coefficient(0, 0.3).is_err());
        assert!(a_coefficient(3, 0.0).is_err());
        assert!(a_coefficient(3, -0.1).is_err());
    }

    #[test]
    fn a_coefficient_is_decreasing_below_half() {
        let mut prev = f64::INFINITY;
        for i in 1..2000 {
            let a = a_coefficient(i, 0.225).unwrap();
            assert!(a < prev, "a({i}) = {a} not below {prev}");
            prev = a;
        }
    }

    #[test]
    fn a_squared_matches_direct_difference_for_moderate_states() {
        for &i in &[2.0f64, 5.0, 40.0] {
            let direct = i.powf(0.45) - (i - 1.0).powf(0.45);
            assert!((a_squared(i, 0.225) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn restart_laws() {
        assert_eq!(restart_initial_law(1, 1.0), 1.0);
        assert_eq!(restart_initial_law(3, 0.5), 0.125);
        let total: f64 = (1..=200).map(|i| restart_initial_law(i, 0.2)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(restart_transition(1, 7, 0.0002), 0.0002);
        assert!((restart_transition(8, 7, 0.0002f64) - 0.9998).abs() < 1e-15);
        assert_eq!(restart_transition(5, 7, 0.3), 0.0);
        // Columns of W sum to one.
        for j in 1..10 {
            let col: f64 = (1..=12).map(|i| restart_transition(i, j, 0.37)).sum();
            assert!((col - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_single_point_matches_quadrature_of_the_mixture() {
        // phi_1(0) = Gamma(2.5) / (sqrt(pi) * 0.1) = 7.5 for alpha = 4, beta = 0.1.
        let closed = phi_density(&[0.0], 4.0, 0.1).unwrap();
        let mixture = integrate_to_infinity(
            |s| {
                let prior = inverse_gamma_sigma_density(s, 4.0, 0.1).unwrap();
                prior / ((2.0 * std::f64::consts::PI).sqrt() * s)
            },
            0.0,
            1e-14,
            1e-13,
        )
        .value;
        assert!((closed - 7.5f64).abs() < 1e-12);
        assert!((closed - mixture).abs() / closed < 1e-10);
    }

    #[test]
    fn phi_is_normalized_and_symmetric() {
        let total = integrate_real_line(|y| phi_density(&[y], 4.0, 0.1).unwrap(), 1e-14, 1e-12).value;
        assert!((total - 1.0).abs() < 1e-10);
        let a = phi_density(&[0.01, -0.03], 5.0, 0.02).unwrap();
        let b = phi_density(&[-0.03, 0.01], 5.0, 0.02).unwrap();
        let c = phi_density(&[0.03, -0.01], 5.0, 0.02).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn conditional_density_example_and_normalization() {
        // Zero lags, alpha = 4, beta = 0.1, M = 1: Gamma(3) / (sqrt(pi) Gamma(2.5) beta).
        let v = conditional_y_density(0.0, &[0.0], 4.0, 0.1, 1).unwrap();
        let expected = 2.0 / (std::f64::consts::PI.sqrt() * 0.75 * std::f64::consts::PI.sqrt() * 0.1);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 8.48826).abs() < 1e-5);
        let lags = [0.012, -0.004, 0.03];
        let total = integrate_real_line(
            |y| conditional_y_density(y, &lags, 4.5, 0.01, 3).unwrap(),
            1e-14,
            1e-12,
        )
        .value;
        assert!((total - 1.0).abs() < 1e-10);
        assert!(conditional_y_density(0.0, &lags, 4.5, 0.01, 2).is_err());
    }

    #[test]
    fn conditional_density_is_ratio_of_phis() {
        let lags = [0.01, -0.02, 0.005];
        let y = -0.017;
        let mut all = lags.to_vec();
        all.push(y);
        let ratio = (ln_phi_density(&all, 3.5f64, 0.015) - ln_phi_density(&lags, 3.5f64, 0.015)).exp();
        let cond = conditional_y_density(y, &lags, 3.5, 0.015, 3).unwrap();
        assert!((ratio - cond).abs() / cond < 1e-12);
    }

    #[test]
    fn f32_instantiation_agrees_with_f64() {
        let v32 = phi_density(&[0.01f32, 0.02], 4.0, 0.1).unwrap();
        let v64 = phi_density(&[0.01f64, 0.02], 4.0, 0.1).unwrap();
        assert!(((v32 as f64) - v64).abs() / v64 < 1e-5);
        assert_eq!(a_coefficient(1, 0.3f32).unwrap(), 1.0f32);
    }
}
