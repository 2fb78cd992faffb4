use std::collections::BTreeMap;

use super::{hermite_1d_all, HermiteSeries, MultiIndex, MultiIndexTree};
use crate::error::{Error, Result};
use crate::functions::GaussFn;
use crate::geom::check_orthonormal;
use crate::rng::{chunked, fill_normal, SeedStream, CHUNK};
use crate::stats::{EstimateWithError, Moments};

/// Plain Monte Carlo estimate of `E[f(x) H_S(x)]`.
pub fn estimate_coefficient(
    f: &dyn GaussFn,
    s: &MultiIndex,
    n_samples: usize,
    stream: &SeedStream,
) -> Result<EstimateWithError> {
    let n = f.dim();
    s.check_dim(n)?;
    let parts = chunked(stream, n_samples, CHUNK, |rng, _, count| {
        let mut x = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..count {
            fill_normal(rng, &mut x);
            m.push(f.eval(&x) * s.eval_hermite(&x));
        }
        m
    });
    let mut total = Moments::default();
    parts.iter().for_each(|p| total.merge(p));
    Ok(total.estimate())
}

/// `E[f(x) f(rho x + sqrt(1 - rho^2) y)]`.
pub fn noise_stability(f: &dyn GaussFn, rho: f64, n_samples: usize, stream: &SeedStream) -> Result<EstimateWithError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("correlation {rho} outside [0, 1]")));
    }
    let n = f.dim();
    let c = (1.0 - rho * rho).sqrt();
    let parts = chunked(stream, n_samples, CHUNK, |rng, _, count| {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..count {
            fill_normal(rng, &mut x);
            fill_normal(rng, &mut y);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = rho * xi + c * *yi;
            }
            m.push(f.eval(&x) * f.eval(&y));
        }
        m
    });
    let mut total = Moments::default();
    parts.iter().for_each(|p| total.merge(p));
    Ok(total.estimate())
}

#[derive(Debug, Clone)]
pub struct LowDegreeOptions {
    pub degree: usize,
    /// Antithetic pairs `(x, -x)`; each pair costs two evaluations of `f`.
    pub pairs: usize,
    /// Refuse to estimate more coefficients than this.
    pub budget: usize,
    /// Orthonormal vectors `b_1..b_m`; estimate `g(u) = f(sum u_j b_j)` instead of `f`.
    pub basis: Option<Vec<Vec<f64>>>,
}

impl LowDegreeOptions {
    pub fn new(degree: usize, pairs: usize) -> Self {
        LowDegreeOptions { degree, pairs, budget: 1 << 16, basis: None }
    }

    pub fn with_basis(mut self, basis: Vec<Vec<f64>>) -> Self {
        self.basis = Some(basis);
        self
    }
}

#[derive(Debug, Clone)]
pub struct LowDegreeEstimate {
    /// Series in the coordinates of `basis` (ambient coordinates if none).
    pub series: HermiteSeries,
    pub std_errors: BTreeMap<MultiIndex, f64>,
    pub basis: Option<Vec<Vec<f64>>>,
    pub pairs: u64,
}

/// Estimates every Hermite coefficient of degree at most `d` from one shared
/// set of antithetic pairs. Odd-degree coefficients use `(f(x) - f(-x))/2` and
/// even-degree ones `(f(x) + f(-x))/2`; both are unbiased.
pub fn project_low_degree(f: &dyn GaussFn, opts: &LowDegreeOptions, stream: &SeedStream) -> Result<LowDegreeEstimate> {
    let k = f.dim();
    let basis = opts.basis.clone();
    if let Some(b) = &basis {
        for v in b {
            if v.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: v.len() });
            }
        }
        check_orthonormal(b, 1e-9)?;
    }
    let m = basis.as_ref().map_or(k, Vec::len);
    let d = opts.degree;
    let needed = MultiIndexTree::count(m, d);
    if needed > opts.budget {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    if opts.pairs < 2 {
        return Err(Error::InvalidArgument("need at least two sample pairs".into()));
    }
    let tree = MultiIndexTree::new(m, d);
    let len = tree.len();
    let odd_nodes: Vec<usize> = (0..len).filter(|&i| tree.nodes[i].degree % 2 == 1).collect();
    let even_nodes: Vec<usize> = (0..len).filter(|&i| tree.nodes[i].degree % 2 == 0).collect();

    let parts = chunked(stream, opts.pairs, CHUNK / 4, |rng, _, count| {
        let mut sum = vec![0.0; len];
        let mut sq = vec![0.0; len];
        let mut u = vec![0.0; m];
        let mut x = vec![0.0; k];
        let mut neg = vec![0.0; k];
        let mut h = vec![0.0; m * (d + 1)];
        let mut vals = vec![0.0; len];
        for _ in 0..count {
            fill_normal(rng, &mut u);
            match &basis {
                Some(b) => {
                    x.iter_mut().for_each(|v| *v = 0.0);
                    for (uj, bj) in u.iter().zip(b) {
                        for (xi, bji) in x.iter_mut().zip(bj) {
                            *xi += uj * bji;
                        }
                    }
                }
                None => x.copy_from_slice(&u),
            }
            for (n, v) in neg.iter_mut().zip(&x) {
                *n = -v;
            }
            let fp = f.eval(&x);
            let fm = f.eval(&neg);
            let odd = 0.5 * (fp - fm);
            let even = 0.5 * (fp + fm);
            for c in 0..m {
                hermite_1d_all(u[c], &mut h[c * (d + 1)..(c + 1) * (d + 1)]);
            }
            tree.evaluate(&h, &mut vals);
            for (weight, nodes) in [(odd, &odd_nodes), (even, &even_nodes)] {
                if weight == 0.0 {
                    continue;
                }
                for &i in nodes.iter() {
                    let v = weight * vals[i];
                    sum[i] += v;
                    sq[i] += v * v;
                }
            }
        }
        (sum, sq)
    });

    let mut sum = vec![0.0; len];
    let mut sq = vec![0.0; len];
    for (s, q) in &parts {
        for i in 0..len {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let p = opts.pairs as f64;
    let mut series = HermiteSeries::new(m);
    let mut std_errors = BTreeMap::new();
    for (i, mi) in tree.multi_indices().into_iter().enumerate() {
        let mean = sum[i] / p;
        let var = ((sq[i] - p * mean * mean) / (p - 1.0)).max(0.0);
        std_errors.insert(mi.clone(), (var / p).sqrt());
        series.coeffs.insert(mi, mean);
    }
    Ok(LowDegreeEstimate { series, std_errors, basis, pairs: opts.pairs as u64 })
}

/// Two estimates from disjoint sample sets, for unbiased cross products.
pub fn project_low_degree_split(
    f: &dyn GaussFn,
    opts: &LowDegreeOptions,
    stream: &SeedStream,
) -> Result<(LowDegreeEstimate, LowDegreeEstimate)> {
    Ok((
        project_low_degree(f, opts, &stream.named("first-half"))?,
        project_low_degree(f, opts, &stream.named("second-half"))?,
    ))
}
