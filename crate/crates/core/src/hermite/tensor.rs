//! Symmetric Hermite tensors in compact storage and Gaussian barycenters.
//!
//! An order-`k` symmetric tensor on `R^n` is stored once per sorted index
//! tuple `i_1 <= ... <= i_k`; each stored entry stands for `k!/prod(c_j!)`
//! dense entries.

use std::sync::Arc;

use super::{binomial, factorial, probabilist_all, HermiteSeries, MultiIndex};
use crate::error::{Error, Result};
use crate::functions::GaussFn;
use crate::geom::check_orthonormal;
use crate::rng::{chunked, fill_normal, SeedStream, CHUNK};

#[derive(Debug)]
struct Level {
    tuples: Vec<Vec<u16>>,
    multiplicity: Vec<f64>,
    // index of t[1..] one level down
    tail: Vec<usize>,
    // how often t[0] occurs in t[1..], and the index of t[1..] minus one t[0]
    repeat: Vec<u8>,
    drop: Vec<usize>,
}

/// Index tables for all orders `0..=k` in dimension `n`.
#[derive(Debug)]
pub struct TensorShape {
    pub n: usize,
    pub k: usize,
    levels: Vec<Level>,
}

fn count(values: usize, len: usize) -> usize {
    if len == 0 { 1 } else { binomial(values + len - 1, len) }
}

fn rank_of(n: usize, t: &[u16]) -> usize {
    let k = t.len();
    let mut r = 0;
    let mut lo = 0usize;
    for (m, &i) in t.iter().enumerate() {
        for v in lo..i as usize {
            r += count(n - v, k - m - 1);
        }
        lo = i as usize;
    }
    r
}

impl TensorShape {
    pub fn new(n: usize, k: usize) -> Result<Arc<Self>> {
        if n == 0 || n > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!("tensor dimension {n} out of range")));
        }
        if count(n, k) > 1 << 24 {
            return Err(Error::BudgetExceeded { needed: count(n, k), budget: 1 << 24 });
        }
        let mut levels: Vec<Level> = Vec::with_capacity(k + 1);
        for order in 0..=k {
            let mut tuples = Vec::with_capacity(count(n, order));
            let mut cur = vec![0u16; order];
            loop {
                tuples.push(cur.clone());
                // next non-decreasing tuple in lexicographic order
                let mut pos = order;
                while pos > 0 && cur[pos - 1] as usize == n - 1 {
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                let v = cur[pos - 1] + 1;
                for c in cur.iter_mut().skip(pos - 1) {
                    *c = v;
                }
            }
            let mut tail = Vec::new();
            let mut repeat = Vec::new();
            let mut drop = Vec::new();
            let mut multiplicity = Vec::with_capacity(tuples.len());
            for t in &tuples {
                let mi = MultiIndex::from_tuple(t);
                multiplicity.push(factorial(order) / mi.factorial());
                if order >= 1 {
                    tail.push(rank_of(n, &t[1..]));
                    let reps = t[1..].iter().filter(|&&c| c == t[0]).count();
                    repeat.push(reps as u8);
                    if reps > 0 {
                        let mut rest = t[1..].to_vec();
                        rest.remove(0);
                        drop.push(rank_of(n, &rest));
                    } else {
                        drop.push(0);
                    }
                }
            }
            levels.push(Level { tuples, multiplicity, tail, repeat, drop });
        }
        Ok(Arc::new(TensorShape { n, k, levels }))
    }

    pub fn len(&self) -> usize {
        self.levels[self.k].tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tuples(&self) -> &[Vec<u16>] {
        &self.levels[self.k].tuples
    }

    pub fn multiplicities(&self) -> &[f64] {
        &self.levels[self.k].multiplicity
    }

    /// Position of an arbitrary index tuple (any order) in storage.
    pub fn rank(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: indices.len() });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::DimensionMismatch { expected: self.n, got: bad + 1 });
        }
        let mut t: Vec<u16> = indices.iter().map(|&i| i as u16).collect();
        t.sort_unstable();
        Ok(rank_of(self.n, &t))
    }

    /// Fills `out` with `H^{(k)}(x)`. `scratch` holds the lower orders.
    fn hermite_into(&self, x: &[f64], scratch: &mut [Vec<f64>]) {
        scratch[0][0] = 1.0;
        for order in 1..=self.k {
            let (lower, upper) = scratch.split_at_mut(order);
            let cur = &mut upper[0];
            let lv = &self.levels[order];
            let prev = &lower[order - 1];
            for (i, t) in lv.tuples.iter().enumerate() {
                let mut v = x[t[0] as usize] * prev[lv.tail[i]];
                if lv.repeat[i] > 0 {
                    v -= lv.repeat[i] as f64 * lower[order - 2][lv.drop[i]];
                }
                cur[i] = v;
            }
        }
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.levels.iter().map(|l| vec![0.0; l.tuples.len()]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricTensor {
    pub shape: Arc<TensorShape>,
    pub values: Vec<f64>,
}

impl SymmetricTensor {
    pub fn zeros(shape: Arc<TensorShape>) -> Self {
        let len = shape.len();
        SymmetricTensor { shape, values: vec![0.0; len] }
    }

    pub fn get(&self, indices: &[usize]) -> Result<f64> {
        Ok(self.values[self.shape.rank(indices)?])
    }

    /// Frobenius (Hilbert-Schmidt) inner product of the dense tensors.
    pub fn hs_inner(&self, other: &SymmetricTensor) -> Result<f64> {
        if self.shape.n != other.shape.n || self.shape.k != other.shape.k {
            return Err(Error::DimensionMismatch { expected: self.shape.len(), got: other.shape.len() });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.shape.multiplicities())
            .map(|((a, b), m)| a * b * m)
            .sum())
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.values.iter().zip(self.shape.multiplicities()).map(|(a, m)| a * a * m).sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn axpy(&mut self, a: f64, other: &SymmetricTensor) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    pub fn sub(&self, other: &SymmetricTensor) -> SymmetricTensor {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Full contraction `T[v_1, ..., v_k]`.
    pub fn contract(&self, vectors: &[&[f64]]) -> Result<f64> {
        let (n, k) = (self.shape.n, self.shape.k);
        if vectors.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: vectors.len() });
        }
        let mut dense = self.to_dense()?;
        let mut len = dense.len();
        for v in vectors.iter().rev() {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            len /= n;
            let next: Vec<f64> = (0..len).map(|r| (0..n).map(|j| dense[r * n + j] * v[j]).sum()).collect();
            dense = next;
        }
        Ok(dense[0])
    }

    /// Row-major dense copy with `n^k` entries.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let (n, k) = (self.shape.n, self.shape.k);
        let total = n.checked_pow(k as u32).filter(|&t| t <= 1 << 24).ok_or(Error::BudgetExceeded {
            needed: usize::MAX,
            budget: 1 << 24,
        })?;
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; k];
        for (pos, slot) in out.iter_mut().enumerate() {
            let mut r = pos;
            for m in (0..k).rev() {
                idx[m] = r % n;
                r /= n;
            }
            *slot = self.get(&idx)?;
        }
        Ok(out)
    }

    fn from_dense(shape: Arc<TensorShape>, dense: &[f64]) -> SymmetricTensor {
        let n = shape.n;
        let values = shape
            .tuples()
            .iter()
            .map(|t| dense[t.iter().fold(0usize, |acc, &i| acc * n + i as usize)])
            .collect();
        SymmetricTensor { shape, values }
    }

    /// Applies the orthogonal projector onto `span(basis)` along every mode.
    pub fn project(&self, basis: &[Vec<f64>]) -> Result<SymmetricTensor> {
        let n = self.shape.n;
        check_orthonormal(basis, 1e-9)?;
        let mut p = vec![0.0; n * n];
        for b in basis {
            if b.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.len() });
            }
            for i in 0..n {
                for j in 0..n {
                    p[i * n + j] += b[i] * b[j];
                }
            }
        }
        self.apply_matrix(&p)
    }

    /// Applies `I - theta theta^T` along every mode.
    pub fn project_out(&self, theta: &[f64]) -> Result<SymmetricTensor> {
        let n = self.shape.n;
        if theta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
        }
        if self.shape.k == 1 {
            let dot: f64 = self.values.iter().zip(theta).map(|(a, b)| a * b).sum();
            let values = self.values.iter().zip(theta).map(|(a, b)| a - dot * b).collect();
            return Ok(SymmetricTensor { shape: self.shape.clone(), values });
        }
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = if i == j { 1.0 } else { 0.0 } - theta[i] * theta[j];
            }
        }
        self.apply_matrix(&p)
    }

    fn apply_matrix(&self, p: &[f64]) -> Result<SymmetricTensor> {
        let (n, k) = (self.shape.n, self.shape.k);
        let mut dense = self.to_dense()?;
        let total = dense.len();
        let mut buf = vec![0.0; total];
        // mode m has stride n^(k-1-m)
        let mut stride = 1;
        for _ in 0..k {
            let block = stride * n;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += p[i * n + j] * dense[outer + j * stride + inner];
                        }
                        buf[outer + i * stride + inner] = acc;
                    }
                }
            }
            std::mem::swap(&mut dense, &mut buf);
            stride *= n;
        }
        Ok(SymmetricTensor::from_dense(self.shape.clone(), &dense))
    }
}

/// Reusable evaluator of `H^{(k)}(x)`.
pub struct HermiteTensorEval {
    shape: Arc<TensorShape>,
    scratch: Vec<Vec<f64>>,
}

impl HermiteTensorEval {
    pub fn new(shape: Arc<TensorShape>) -> Self {
        let scratch = shape.scratch();
        HermiteTensorEval { shape, scratch }
    }

    /// `H^{(k)}(x)` in compact storage.
    pub fn eval(&mut self, x: &[f64]) -> &[f64] {
        self.shape.hermite_into(x, &mut self.scratch);
        &self.scratch[self.shape.k]
    }
}

/// The Hermite tensor `H^{(k)}(x)`, with entry `prod_i He_{alpha_i}(x_i)` at
/// the multi-index `alpha` of each index tuple.
pub fn hermite_tensor(k: usize, x: &[f64]) -> Result<SymmetricTensor> {
    let shape = TensorShape::new(x.len(), k)?;
    let mut ev = HermiteTensorEval::new(shape.clone());
    let values = ev.eval(x).to_vec();
    Ok(SymmetricTensor { shape, values })
}

/// Direct product formula for a single entry.
pub fn hermite_tensor_entry(tuple: &[u16], x: &[f64]) -> f64 {
    let mi = MultiIndex::from_tuple(tuple);
    let deg = mi.pairs().iter().map(|p| p.1 as usize).max().unwrap_or(0);
    let mut he = vec![0.0; deg + 1];
    mi.pairs()
        .iter()
        .map(|&(c, e)| {
            probabilist_all(x[c as usize], &mut he);
            he[e as usize]
        })
        .product()
}

/// `f^{=k}(x) = (1/k!) <H^{(k)}(x), b_k>`.
pub fn reconstruct_degree_part(b: &SymmetricTensor, x: &[f64]) -> Result<f64> {
    let h = hermite_tensor(b.shape.k, x)?;
    Ok(h.hs_inner(b)? / factorial(b.shape.k))
}

/// Exact barycenter of a Hermite series: entry at `alpha` is `sqrt(alpha!) c_alpha`.
pub fn barycenter_from_series(series: &HermiteSeries, k: usize) -> Result<SymmetricTensor> {
    let shape = TensorShape::new(series.dim, k)?;
    let values = shape
        .tuples()
        .iter()
        .map(|t| {
            let mi = MultiIndex::from_tuple(t);
            mi.factorial().sqrt() * series.coefficient(&mi)
        })
        .collect();
    Ok(SymmetricTensor { shape, values })
}

#[derive(Debug, Clone)]
pub struct BarycenterPair {
    pub first: SymmetricTensor,
    pub second: SymmetricTensor,
    pub samples_per_half: usize,
}

impl BarycenterPair {
    /// Unbiased estimate of `||b||^2` from the two independent halves.
    pub fn norm_sq(&self) -> Result<f64> {
        self.first.hs_inner(&self.second)
    }

    pub fn mean(&self) -> SymmetricTensor {
        let mut m = self.first.clone();
        m.axpy(1.0, &self.second);
        m.scale(0.5);
        m
    }
}

/// Monte Carlo barycenter `E[f(x) H^{(k)}(x)]` of `f` under the Gaussian on
/// `span(basis)` (the full space if `None`), as two disjoint-sample estimates
/// in ambient coordinates.
pub fn barycenter(
    f: &dyn GaussFn,
    k: usize,
    samples_per_half: usize,
    basis: Option<&[Vec<f64>]>,
    stream: &SeedStream,
) -> Result<BarycenterPair> {
    let n = f.dim();
    if let Some(b) = basis {
        check_orthonormal(b, 1e-9)?;
    }
    let shape = TensorShape::new(n, k)?;
    let half = |s: SeedStream| -> SymmetricTensor {
        let parts = chunked(&s, samples_per_half, CHUNK / 4, |rng, _, count| {
            let mut ev = HermiteTensorEval::new(shape.clone());
            let mut acc = vec![0.0; shape.len()];
            let mut g = vec![0.0; basis.map_or(n, <[Vec<f64>]>::len)];
            let mut x = vec![0.0; n];
            for _ in 0..count {
                fill_normal(rng, &mut g);
                match basis {
                    Some(b) => {
                        x.iter_mut().for_each(|v| *v = 0.0);
                        for (gj, bj) in g.iter().zip(b) {
                            for (xi, bji) in x.iter_mut().zip(bj) {
                                *xi += gj * bji;
                            }
                        }
                    }
                    None => x.copy_from_slice(&g),
                }
                let w = f.eval(&x);
                if w == 0.0 {
                    continue;
                }
                for (a, h) in acc.iter_mut().zip(ev.eval(&x)) {
                    *a += w * h;
                }
            }
            acc
        });
        let mut t = SymmetricTensor::zeros(shape.clone());
        for p in &parts {
            for (v, a) in t.values.iter_mut().zip(p) {
                *v += a;
            }
        }
        t.scale(1.0 / samples_per_half.max(1) as f64);
        t
    };
    Ok(BarycenterPair {
        first: half(stream.named("first-half")),
        second: half(stream.named("second-half")),
        samples_per_half,
    })
}

/// `b_k(f; theta)`: the barycenter under the Gaussian supported on `theta^perp`.
pub fn barycenter_on_hyperplane(
    f: &dyn GaussFn,
    k: usize,
    samples_per_half: usize,
    theta: &[f64],
    stream: &SeedStream,
) -> Result<BarycenterPair> {
    let len = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("restriction normal has length {len}, expected 1")));
    }
    let h = crate::geom::Hyperplane::from_normal(theta)?;
    barycenter(f, k, samples_per_half, Some(&h.basis), stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_matches_enumeration() {
        let shape = TensorShape::new(5, 3).unwrap();
        assert_eq!(shape.len(), 35);
        for (i, t) in shape.tuples().iter().enumerate() {
            let idx: Vec<usize> = t.iter().map(|&c| c as usize).rev().collect();
            assert_eq!(shape.rank(&idx).unwrap(), i);
        }
        let total: f64 = shape.multiplicities().iter().sum();
        assert_eq!(total, 125.0);
    }

    #[test]
    fn order_two_closed_form() {
        let x = [0.4, -1.1, 2.0];
        let h = hermite_tensor(2, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = x[i] * x[j] - if i == j { 1.0 } else { 0.0 };
                assert!((h.get(&[i, j]).unwrap() - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn recurrence_matches_product_formula() {
        let x = [0.9, -0.3, 1.7, -2.1];
        for k in 0..=5 {
            let h = hermite_tensor(k, &x).unwrap();
            for (t, v) in h.shape.tuples().iter().zip(&h.values) {
                let want = hermite_tensor_entry(t, &x);
                assert!((v - want).abs() < 1e-10 * (1.0 + want.abs()), "k={k} {t:?}");
            }
        }
    }

    #[test]
    fn projection_is_idempotent_and_kills_theta() {
        let x = [0.5, 1.5, -0.7, 0.2];
        let h = hermite_tensor(3, &x).unwrap();
        let theta = [0.5, 0.5, 0.5, 0.5];
        let p = h.project_out(&theta).unwrap();
        let pp = p.project_out(&theta).unwrap();
        for (a, b) in p.values.iter().zip(&pp.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let other = [1.0, 0.0, 0.0, 0.0];
        let c = p.contract(&[&theta, &other, &other]).unwrap();
        assert!(c.abs() < 1e-12);
    }
}
