//! Orthonormal Hermite polynomials for the standard Gaussian measure.

mod estimate;
mod multi_index;
mod series;
pub mod tensor;

pub use estimate::{
    estimate_coefficient, noise_stability, project_low_degree, project_low_degree_split,
    LowDegreeEstimate, LowDegreeOptions,
};
pub use multi_index::{MultiIndex, MultiIndexTree};
pub use series::HermiteSeries;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Highest univariate degree with a cached monomial table.
pub const MAX_DEGREE: usize = 16;

/// Orthonormal `H_j(x)`.
pub fn hermite_1d(j: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for i in 0..j {
        let next = (x * cur - (i as f64).sqrt() * prev) / ((i + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[j] = H_j(x)` for `j < out.len()`.
pub fn hermite_1d_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for i in 1..out.len().saturating_sub(1) {
        out[i + 1] = (x * out[i] - (i as f64).sqrt() * out[i - 1]) / ((i + 1) as f64).sqrt();
    }
}

/// Probabilists' `He_j(x)` for `j < out.len()`.
pub fn probabilist_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for i in 1..out.len().saturating_sub(1) {
        out[i + 1] = x * out[i] - i as f64 * out[i - 1];
    }
}

/// Monomial coefficients of the orthonormal `H_j`, lowest power first.
pub fn hermite_monomial_coeffs(j: usize) -> Vec<f64> {
    let mut prev = vec![0.0; j + 1];
    let mut cur = vec![0.0; j + 1];
    cur[0] = 1.0;
    for i in 0..j {
        let mut next = vec![0.0; j + 1];
        let a = ((i + 1) as f64).sqrt();
        let b = (i as f64).sqrt();
        for p in 0..j {
            next[p + 1] += cur[p] / a;
        }
        for p in 0..=j {
            next[p] -= b * prev[p] / a;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `m`-point Gauss-Hermite rule for the standard Gaussian (weights sum to 1),
/// nodes sorted ascending.
pub fn gauss_hermite_rule(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for j in 1..m {
        let b = (j as f64).sqrt();
        jac[(j - 1, j)] = b;
        jac[(j, j - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(pairs.into_iter().map(|(x, w)| (x, w / total)).unzip())
}

pub(crate) fn double_factorial_odd(m: usize) -> f64 {
    // (m-1)!! for even m, the Gaussian moment E[x^m]
    if m % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut i = m as i64 - 1;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_degree_closed_forms() {
        let s2 = 2f64.sqrt();
        let s6 = 6f64.sqrt();
        for &x in &[-2.3, -0.4, 0.0, 0.7, 1.9] {
            assert_abs_diff_eq!(hermite_1d(0, x), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(hermite_1d(1, x), x, epsilon = 1e-14);
            assert_abs_diff_eq!(hermite_1d(2, x), (x * x - 1.0) / s2, epsilon = 1e-13);
            assert_abs_diff_eq!(hermite_1d(3, x), (x.powi(3) - 3.0 * x) / s6, epsilon = 1e-13);
            assert_abs_diff_eq!(
                hermite_1d(4, x),
                (x.powi(4) - 6.0 * x * x + 3.0) / (2.0 * s6),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn all_matches_single() {
        let mut buf = [0.0; 10];
        hermite_1d_all(1.3, &mut buf);
        for (j, v) in buf.iter().enumerate() {
            assert_abs_diff_eq!(*v, hermite_1d(j, 1.3), epsilon = 1e-12);
        }
    }

    #[test]
    fn monomial_table_reproduces_values() {
        for j in 0..=12 {
            let c = hermite_monomial_coeffs(j);
            for &x in &[-1.7, 0.3, 2.2] {
                let v: f64 = c.iter().enumerate().map(|(p, a)| a * f64::powi(x, p as i32)).sum();
                assert_abs_diff_eq!(v, hermite_1d(j, x), epsilon = 1e-9 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn small_rules_by_hand() {
        let (x, w) = gauss_hermite_rule(2).unwrap();
        assert_abs_diff_eq!(x[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-14);
        let (x, w) = gauss_hermite_rule(3).unwrap();
        assert_abs_diff_eq!(x[2], 3f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(w[1], 2.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(w[0], 1.0 / 6.0, epsilon = 1e-13);
    }

    #[test]
    fn rule_integrates_moments_exactly() {
        let (x, w) = gauss_hermite_rule(12).unwrap();
        for p in 0..=23 {
            let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(p)).sum();
            let exact = double_factorial_odd(p as usize);
            let scale = double_factorial_odd(p as usize + (p as usize % 2)).max(1.0);
            assert!((q - exact).abs() <= 1e-9 * scale, "p={p}: {q} vs {exact}");
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(16, 4), 1820);
        assert_eq!(binomial(65, 2), 2080);
        assert_eq!(binomial(3, 5), 0);
    }
}
