//! Fixed quadrature rules and Chebyshev interpolation.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix with
/// diagonal `diag` and off-diagonal `off`; weights are normalized to the
/// total mass `mass`.
fn golub_welsch(diag: &[f64], off: &[f64], mass: f64) -> Rule {
    let n = diag.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = diag[i];
        if i + 1 < n {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&diag, &off, 2.0)
}

/// n-point generalized Gauss–Laguerre rule for the Gamma(`shape`, 1)
/// probability measure: `E[f(G)] ~ sum w_k f(x_k)`, weights summing to one.
pub fn gamma_rule(n: usize, shape: f64) -> Rule {
    let lambda = shape - 1.0;
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + lambda + 1.0).collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            (k * (k + lambda)).sqrt()
        })
        .collect();
    golub_welsch(&diag, &off, 1.0)
}

/// Rule for the Gamma(`shape`, 1) probability measure built from the
/// trapezoid rule in `z = ln G`, with step `h_factor * min(0.2, 0.55 / sqrt(shape))`.
///
/// In `z` the density `exp(shape z - e^z) / Gamma(shape)` is smooth and
/// decays exponentially on both sides, so the trapezoid rule converges
/// geometrically even for integrands singular at `G = 0` such as `1/G`,
/// where a Gauss–Laguerre rule in `G` converges slowly. The range keeps
/// `e^{-45}` relative accuracy for integrands growing up to `1/G` at the
/// left end.
pub fn log_gamma_rule(shape: f64, h_factor: f64) -> Rule {
    assert!(shape > 0.0 && h_factor > 0.0, "log-gamma rule needs a positive shape and step");
    let peak = shape.ln();
    let rel = |z: f64| shape * (z - peak) - (z.exp() - shape);
    let cut = -45.0;
    let left_rate = (shape - 1.0).clamp(0.25_f64.min(shape), shape);
    let mut lo = peak - 1.0;
    while left_rate * (lo - peak) + shape > cut {
        lo -= 0.5;
    }
    let mut hi = peak + 0.5;
    while rel(hi) > cut {
        hi += 0.25;
    }
    let h_target = h_factor * (0.55 / shape.sqrt()).min(0.2);
    let n = ((hi - lo) / h_target).ceil() as usize + 1;
    let h = (hi - lo) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|k| lo + h * k as f64).collect();
    let raw: Vec<f64> = nodes.iter().map(|&z| rel(z).exp()).collect();
    let total: f64 = raw.iter().sum();
    Rule { nodes: nodes.iter().map(|z| z.exp()).collect(), weights: raw.iter().map(|w| w / total).collect() }
}

/// `n`-point Gauss rule for a discrete measure with atoms `points` and
/// non-negative `weights`, from the recurrence coefficients of its
/// orthonormal polynomials (Stieltjes procedure on the standardized atoms).
/// Matches the first `2n` moments; weights keep the total mass. Returns the
/// measure itself when it has at most `n` atoms.
pub fn discrete_gauss(points: &[f64], weights: &[f64], n: usize) -> Rule {
    assert_eq!(points.len(), weights.len());
    let mass: f64 = weights.iter().sum();
    if points.len() <= n || n == 0 || !(mass > 0.0) {
        return Rule { nodes: points.to_vec(), weights: weights.to_vec() };
    }
    let mean = points.iter().zip(weights).map(|(x, w)| w * x).sum::<f64>() / mass;
    let var = points.iter().zip(weights).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / mass;
    if !(var > 0.0) {
        return Rule { nodes: vec![mean], weights: vec![mass] };
    }
    let sd = var.sqrt();
    let t: Vec<f64> = points.iter().map(|x| (x - mean) / sd).collect();
    let w: Vec<f64> = weights.iter().map(|v| v / mass).collect();
    let mut prev = vec![0.0; t.len()];
    let mut cur = vec![1.0; t.len()];
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    let mut b_prev = 0.0;
    for j in 0..n {
        let a: f64 = t.iter().zip(&w).zip(&cur).map(|((x, w), q)| w * x * q * q).sum();
        diag.push(a);
        if j + 1 == n {
            break;
        }
        let mut next: Vec<f64> = (0..t.len()).map(|k| (t[k] - a) * cur[k] - b_prev * prev[k]).collect();
        let b = next.iter().zip(&w).map(|(q, w)| w * q * q).sum::<f64>().sqrt();
        if !(b > 1e-12) {
            break;
        }
        next.iter_mut().for_each(|q| *q /= b);
        off.push(b);
        b_prev = b;
        prev = std::mem::replace(&mut cur, next);
    }
    let rule = golub_welsch(&diag, &off, mass);
    Rule { nodes: rule.nodes.iter().map(|z| mean + sd * z).collect(), weights: rule.weights }
}

/// Barycentric interpolant through Chebyshev points of the first kind.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    points: Vec<f64>,
    bary: Vec<f64>,
}

impl Chebyshev {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        let points = (0..n)
            .map(|j| {
                let c = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * c
            })
            .collect();
        let bary = (0..n)
            .map(|j| {
                let s = (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * n) as f64).sin();
                if j % 2 == 0 { s } else { -s }
            })
            .collect();
        Chebyshev { lo, hi, points, bary }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Evaluate the interpolant of `values` (sampled at `points()`) at `x`.
    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        self.basis(x).iter().map(|&(j, w)| w * values[j]).sum()
    }

    /// Cardinal weights at `x`: the interpolant is `sum_j w_j values[j]`.
    pub fn basis(&self, x: f64) -> Vec<(usize, f64)> {
        if let Some(j) = self.points.iter().position(|&p| p == x) {
            return vec![(j, 1.0)];
        }
        let raw: Vec<f64> = self.points.iter().zip(&self.bary).map(|(&p, &w)| w / (x - p)).collect();
        let den: f64 = raw.iter().sum();
        raw.into_iter().enumerate().map(|(j, c)| (j, c / den)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn legendre_integrates_degree_2n_minus_1() {
        let rule = gauss_legendre(8);
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_rule_reproduces_moments() {
        let shape = 12.5;
        let rule = gamma_rule(24, shape);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x).sum();
        assert!((mean - shape).abs() < 1e-10);
        // E[1/G] = 1/(shape - 1)
        let inv: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w / x).sum();
        assert!((inv - 1.0 / (shape - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn log_gamma_rule_handles_inverse_moments() {
        for shape in [1.5f64, 2.5, 4.5, 13.0, 60.0] {
            let rule = log_gamma_rule(shape, 1.0);
            let mean: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x).sum();
            assert!((mean / shape - 1.0).abs() < 1e-12, "{shape}");
            let inv: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w / x).sum();
            assert!((inv * (shape - 1.0) - 1.0).abs() < 1e-12, "{shape}: {inv}");
            let inv_sqrt: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w / x.sqrt()).sum();
            let want = (Scalar::ln_gamma(shape - 0.5) - Scalar::ln_gamma(shape)).exp();
            assert!((inv_sqrt / want - 1.0).abs() < 1e-12, "{shape}");
            if shape > 10.0 {
                assert!(rule.nodes.len() < 80, "{}", rule.nodes.len());
            }
        }
    }

    #[test]
    fn discrete_gauss_matches_moments() {
        // Atoms of a log-normal-like cloud; the 8-point rule must match the
        // first 16 moments of the standardized measure.
        let pts: Vec<f64> = (0..3000).map(|k| ((k as f64 * 0.7).sin() * 2.0 + (k as f64 * 0.013).cos()) * 0.3 - 4.0).collect();
        let wts: Vec<f64> = (0..3000).map(|k| 1.0 + (k % 7) as f64).collect();
        let rule = discrete_gauss(&pts, &wts, 8);
        assert_eq!(rule.nodes.len(), 8);
        let mass: f64 = wts.iter().sum();
        for p in 0..16 {
            let exact: f64 = pts.iter().zip(&wts).map(|(x, w)| w * (x + 4.0).powi(p)).sum::<f64>() / mass;
            let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * (x + 4.0).powi(p)).sum::<f64>() / mass;
            assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1e-3), "moment {p}: {got} vs {exact}");
        }
        let small = discrete_gauss(&[1.0, 2.0], &[0.5, 0.5], 4);
        assert_eq!(small.nodes, vec![1.0, 2.0]);
    }

    #[test]
    fn chebyshev_interpolates_smooth_function() {
        let cheb = Chebyshev::new(-1.0, 2.0, 32);
        let vals: Vec<f64> = cheb.points().iter().map(|x| (x * 1.3).sin().exp()).collect();
        for i in 0..50 {
            let x = -1.0 + 3.0 * i as f64 / 49.0;
            assert!((cheb.eval(&vals, x) - (x * 1.3).sin().exp()).abs() < 1e-9);
        }
    }
}
