//! Gaussian and spherical sampling, hyperplane coordinates and subspaces.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::GaussFn;
use crate::rng::{chunked, fill_normal, normal, Rng, SeedStream, CHUNK};
use crate::stats::Moments;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &[f64]) -> Result<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
    }
    Ok(a.iter().map(|v| v / n).collect())
}

pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Errors unless `basis` is orthonormal to `tol`.
pub fn check_orthonormal(basis: &[Vec<f64>], tol: f64) -> Result<()> {
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&basis[i], &basis[j]) - want).abs());
        }
    }
    if worst > tol {
        return Err(Error::NotOrthonormal { deviation: worst });
    }
    Ok(())
}

pub fn sample_gaussian(n: usize, rng: &mut Rng) -> Vec<f64> {
    let mut x = vec![0.0; n];
    fill_normal(rng, &mut x);
    x
}

/// Uniform point on the unit sphere in `R^n`.
pub fn sample_sphere(n: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let x = sample_gaussian(n, rng);
        if let Ok(u) = normalize(&x) {
            return u;
        }
    }
}

/// Uniform unit vector inside `span(basis)`.
pub fn sample_sphere_in(basis: &[Vec<f64>], rng: &mut Rng) -> Vec<f64> {
    let dim = basis.first().map_or(0, Vec::len);
    loop {
        let mut x = vec![0.0; dim];
        for b in basis {
            axpy(normal(rng), b, &mut x);
        }
        if let Ok(u) = normalize(&x) {
            return u;
        }
    }
}

/// `(x~, z~)` sharing `y`: each is `(1-beta) y + sqrt(2 beta - beta^2) x` for its own `x`.
pub fn correlated_pair(n: usize, beta: f64, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("noise rate {beta} outside (0, 1)")));
    }
    let a = 1.0 - beta;
    let b = (2.0 * beta - beta * beta).sqrt();
    let mut xt = vec![0.0; n];
    let mut zt = vec![0.0; n];
    for i in 0..n {
        let y = normal(rng);
        xt[i] = a * y + b * normal(rng);
        zt[i] = a * y + b * normal(rng);
    }
    Ok((xt, zt))
}

/// A unit normal together with an orthonormal basis of its complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl Hyperplane {
    /// Householder complement of `theta` (normalized first).
    pub fn from_normal(theta: &[f64]) -> Result<Self> {
        let t = normalize(theta)?;
        let k = t.len();
        // H = I - 2 v v^T / |v|^2 with v = t + sign(t_0) e_0 maps t to -+e_0;
        // the remaining columns of H span t^perp.
        let s = if t[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = t.clone();
        v[0] += s;
        let vv = dot(&v, &v);
        let basis = (1..k)
            .map(|j| (0..k).map(|i| if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j] / vv).collect())
            .collect();
        Ok(Hyperplane { normal: t, basis })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, v)).collect()
    }

    pub fn embed(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (c, b) in coords.iter().zip(&self.basis) {
            axpy(*c, b, &mut x);
        }
        x
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let d = dot(v, &self.normal);
        v.iter().zip(&self.normal).map(|(a, t)| a - d * t).collect()
    }

    /// Standard Gaussian on the hyperplane, written into `out`.
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for b in &self.basis {
            axpy(normal(rng), b, out);
        }
    }
}

/// `span{y_1..y_r}` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpan {
    pub generators: Vec<Vec<f64>>,
    pub basis: Vec<Vec<f64>>,
}

impl SubspaceSpan {
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        span_orthonormalize(&generators)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.generators.first().map_or(0, Vec::len)
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for b in &self.basis {
            axpy(dot(b, v), b, &mut out);
        }
        out
    }

    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for b in &self.basis {
            axpy(-dot(b, v), b, &mut out);
        }
        out
    }

    /// Largest `|<b, theta>|` over the basis; zero means the span lies in `theta^perp`.
    pub fn overlap(&self, theta: &[f64]) -> f64 {
        self.basis.iter().map(|b| dot(b, theta).abs()).fold(0.0, f64::max)
    }

    pub fn complement(&self) -> Vec<Vec<f64>> {
        orthonormal_complement(&self.basis, self.ambient())
    }
}

/// Modified Gram-Schmidt with a Gram-matrix conditioning check.
pub fn span_orthonormalize(generators: &[Vec<f64>]) -> Result<SubspaceSpan> {
    if generators.is_empty() {
        return Ok(SubspaceSpan { generators: Vec::new(), basis: Vec::new() });
    }
    let k = generators[0].len();
    for g in generators {
        if g.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: g.len() });
        }
    }
    let r = generators.len();
    let gram = DMatrix::from_fn(r, r, |i, j| dot(&generators[i], &generators[j]));
    let scale = (0..r).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let min_eig = gram.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut worst = (0, f64::INFINITY);
    for (idx, g) in generators.iter().enumerate() {
        let mut v = g.clone();
        for _ in 0..2 {
            for b in &basis {
                axpy(-dot(b, &v), b, &mut v);
            }
        }
        let res = norm(&v) / norm(g).max(f64::MIN_POSITIVE);
        if res < worst.1 {
            worst = (idx, res);
        }
        if norm(&v) > 0.0 {
            basis.push(v.iter().map(|a| a / norm(&v)).collect());
        }
    }
    if min_eig / scale <= 1e-10 || basis.len() < r {
        return Err(Error::LinearlyDependent { index: worst.0, residual: worst.1 });
    }
    Ok(SubspaceSpan { generators: generators.to_vec(), basis })
}

/// Orthonormal basis of the complement of `span(basis)` in `R^k`.
pub fn orthonormal_complement(basis: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = basis.to_vec();
    let mut out = Vec::with_capacity(k.saturating_sub(basis.len()));
    let mut candidates: Vec<usize> = (0..k).collect();
    while all.len() < k && !candidates.is_empty() {
        // pick the coordinate direction with the largest residual
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (pos, &i) in candidates.iter().enumerate() {
            let mut v = vec![0.0; k];
            v[i] = 1.0;
            for _ in 0..2 {
                for b in &all {
                    axpy(-dot(b, &v), b, &mut v);
                }
            }
            let r = norm(&v);
            if best.as_ref().map_or(true, |b| r > b.2) {
                best = Some((pos, v, r));
            }
        }
        let (pos, v, r) = best.expect("candidates not empty");
        candidates.remove(pos);
        if r < 1e-8 {
            break;
        }
        let u: Vec<f64> = v.iter().map(|a| a / r).collect();
        all.push(u.clone());
        out.push(u);
    }
    out
}

/// Orthonormal basis of the row space of `a` and of its orthogonal
/// complement, by singular value decomposition with relative rank tolerance `tol`.
pub fn row_space_split(a: &[Vec<f64>], k: usize, tol: f64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    for row in a {
        if row.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: row.len() });
        }
    }
    if a.is_empty() {
        return Ok((Vec::new(), (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()));
    }
    let rows = a.len().max(k);
    let m = DMatrix::from_fn(rows, k, |i, j| if i < a.len() { a[i][j] } else { 0.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut range = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol * smax.max(1.0) {
            range.push((0..k).map(|j| vt[(i, j)]).collect::<Vec<f64>>());
        }
    }
    let complement = orthonormal_complement(&range, k);
    Ok((range, complement))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingLemmaReport {
    pub k: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub global_mean: f64,
    pub norm: f64,
}

/// Fraction of uniform random hyperplanes `S` with `|E_S f - E f| >= eps ||f||`.
/// Means are estimated with antithetic pairs, so odd functions have exactly
/// zero restricted means.
pub fn validate_sampling_lemma(
    f: &dyn GaussFn,
    epsilon: f64,
    trials: usize,
    inner_pairs: usize,
    stream: &SeedStream,
) -> Result<SamplingLemmaReport> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let k = f.dim();
    let mean_on = |basis: Option<&Hyperplane>, s: SeedStream| -> (f64, f64) {
        let parts = chunked(&s, inner_pairs, CHUNK, |rng, _, count| {
            let mut x = vec![0.0; k];
            let mut neg = vec![0.0; k];
            let mut m = Moments::default();
            let mut sq = 0.0;
            for _ in 0..count {
                match basis {
                    Some(h) => h.sample_into(rng, &mut x),
                    None => fill_normal(rng, &mut x),
                }
                for (a, b) in neg.iter_mut().zip(&x) {
                    *a = -b;
                }
                let (p, q) = (f.eval(&x), f.eval(&neg));
                m.push(0.5 * (p + q));
                sq += 0.5 * (p * p + q * q);
            }
            (m, sq)
        });
        let mut m = Moments::default();
        let mut sq = 0.0;
        for (a, b) in &parts {
            m.merge(a);
            sq += b;
        }
        (m.mean(), sq / inner_pairs.max(1) as f64)
    };
    let (global, second) = mean_on(None, stream.named("global"));
    let fnorm = second.sqrt();
    let mut failures = 0;
    let mut rng = stream.named("hyperplanes").rng();
    for t in 0..trials {
        let theta = sample_sphere(k, &mut rng);
        let h = Hyperplane::from_normal(&theta)?;
        let (m, _) = mean_on(Some(&h), stream.named("restricted").child(t as u64));
        if (m - global).abs() >= epsilon * fnorm && fnorm > 0.0 {
            failures += 1;
        }
    }
    Ok(SamplingLemmaReport {
        k,
        epsilon,
        trials,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        global_mean: global,
        norm: fnorm,
    })
}

/// Largest `c` with `rate <= exp(-c eps k / log2(2/eps))` for every report
/// with a nonzero rate; `None` if all rates are zero.
pub fn fit_sampling_constant(reports: &[SamplingLemmaReport]) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.failure_rate > 0.0)
        .map(|r| {
            let x = r.epsilon * r.k as f64 / (2.0 / r.epsilon).log2();
            -r.failure_rate.ln() / x
        })
        .reduce(f64::min)
}
