#![allow(dead_code)]

use std::f64::consts::PI;

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `E[g(x)]` for a standard normal by Simpson on `[-12, 12]`.
pub fn gauss_expect(g: impl Fn(f64) -> f64) -> f64 {
    simpson(|x| g(x) * phi(x), -12.0, 12.0, 24_000)
}

/// Orthonormal Hermite values by the explicit power-series formula
/// `He_j(x) = j! sum_m (-1)^m x^{j-2m} / (m! (j-2m)! 2^m)`, divided by `sqrt(j!)`.
pub fn hermite_explicit(j: usize, x: f64) -> f64 {
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut s = 0.0;
    for m in 0..=j / 2 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * x.powi((j - 2 * m) as i32) / (fact(m) * fact(j - 2 * m) * 2f64.powi(m as i32));
    }
    s * fact(j) / fact(j).sqrt()
}

/// Within `z` standard errors, with a floor for exact estimates.
pub fn within(value: f64, se: f64, target: f64, z: f64) -> bool {
    (value - target).abs() <= z * se + 1e-12
}
