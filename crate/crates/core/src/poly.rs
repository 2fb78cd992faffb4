//! Exact sparse multivariate polynomials in the monomial basis, with exact
//! Gaussian moments.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::check_orthonormal;
use crate::hermite::{factorial, hermite_monomial_coeffs, HermiteSeries, MultiIndex};

/// Degree cap for exact Gaussian moments.
pub const MOMENT_CAP: usize = 16;
/// Highest Hermite degree accepted by [`hermite_to_monomial`].
pub const HERMITE_TABLE_MAX: usize = 8;
/// Coefficients below this magnitude are dropped after arithmetic.
pub const PRUNE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparsePoly {
    pub dim: usize,
    pub terms: BTreeMap<MultiIndex, f64>,
}

/// `constant + sum_j coeffs[j] u_j`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

fn moment_1d(m: usize) -> f64 {
    crate::hermite::double_factorial_odd(m)
}

impl SparsePoly {
    pub fn zero(dim: usize) -> Self {
        SparsePoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = SparsePoly::zero(dim);
        if c != 0.0 {
            p.terms.insert(MultiIndex::zero(), c);
        }
        p
    }

    /// `<a, x>`
    pub fn linear(a: &[f64]) -> Self {
        let mut p = SparsePoly::zero(a.len());
        for (i, &c) in a.iter().enumerate() {
            if c != 0.0 {
                p.terms.insert(MultiIndex::unit(i), c);
            }
        }
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut p = SparsePoly::zero(dim);
        for (m, c) in terms {
            m.check_dim(dim)?;
            *p.terms.entry(m).or_insert(0.0) += c;
        }
        p.terms.retain(|_, c| *c != 0.0);
        Ok(p)
    }

    pub fn coefficient(&self, m: &MultiIndex) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval_monomial(x)).sum()
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() >= PRUNE);
        self
    }

    fn check_same(&self, other: &SparsePoly) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        Ok(out.pruned())
    }

    pub fn sub(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> SparsePoly {
        SparsePoly { dim: self.dim, terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }.pruned()
    }

    pub fn mul(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_same(other)?;
        let mut acc: HashMap<MultiIndex, f64> = HashMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                *acc.entry(a.add(b)).or_insert(0.0) += ca * cb;
            }
        }
        Ok(SparsePoly { dim: self.dim, terms: acc.into_iter().collect() }.pruned())
    }

    pub fn partial_derivative(&self, i: usize) -> SparsePoly {
        let mut out = SparsePoly::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.exponent(i);
            if e > 0 {
                let lowered = m.lower(i).expect("exponent is positive");
                *out.terms.entry(lowered).or_insert(0.0) += c * e as f64;
            }
        }
        out.pruned()
    }

    /// `<grad p, y>`
    pub fn directional_derivative(&self, y: &[f64]) -> Result<SparsePoly> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        let mut out = SparsePoly::zero(self.dim);
        for (m, c) in &self.terms {
            for &(i, e) in m.pairs() {
                let w = y[i as usize];
                if w == 0.0 {
                    continue;
                }
                let lowered = m.lower(i as usize).expect("exponent is positive");
                *out.terms.entry(lowered).or_insert(0.0) += c * e as f64 * w;
            }
        }
        Ok(out.pruned())
    }

    /// `q(u) = p(shift + sum_j u_j basis_j)` for an orthonormal basis.
    pub fn affine_substitute(&self, basis: &[Vec<f64>], shift: &[f64]) -> Result<SparsePoly> {
        check_orthonormal(basis, 1e-10)?;
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: shift.len() });
        }
        let forms: Vec<AffineForm> = (0..self.dim)
            .map(|i| AffineForm { constant: shift[i], coeffs: basis.iter().map(|b| b[i]).collect() })
            .collect();
        self.linear_substitute(&forms, basis.len())
    }

    /// Replaces each variable `x_i` by the affine form `forms[i]` in `new_dim`
    /// new variables.
    pub fn linear_substitute(&self, forms: &[AffineForm], new_dim: usize) -> Result<SparsePoly> {
        if forms.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: forms.len() });
        }
        for f in forms {
            if f.coeffs.len() != new_dim {
                return Err(Error::DimensionMismatch { expected: new_dim, got: f.coeffs.len() });
            }
        }
        let deg = self.degree();
        let index = GradedIndex::new(new_dim, deg);
        let size = index.len();
        let mut acc = vec![0.0; size];
        let mut cur: Vec<(usize, f64)> = Vec::new();
        let mut next_buf = vec![0.0; size];
        let mut touched: Vec<usize> = Vec::new();
        let sparse_forms: Vec<Vec<(usize, f64)>> = forms
            .iter()
            .map(|f| f.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, c)| (i, *c)).collect())
            .collect();
        for (m, c) in &self.terms {
            cur.clear();
            cur.push((0, *c));
            for &(var, e) in m.pairs() {
                let form = &forms[var as usize];
                let sf = &sparse_forms[var as usize];
                for _ in 0..e {
                    for &(r, v) in &cur {
                        if form.constant != 0.0 {
                            if next_buf[r] == 0.0 {
                                touched.push(r);
                            }
                            next_buf[r] += v * form.constant;
                        }
                        for &(l, a) in sf {
                            let t = index.times(r, l);
                            if next_buf[t] == 0.0 {
                                touched.push(t);
                            }
                            next_buf[t] += v * a;
                        }
                    }
                    cur.clear();
                    touched.sort_unstable();
                    touched.dedup();
                    for &t in &touched {
                        if next_buf[t] != 0.0 {
                            cur.push((t, next_buf[t]));
                        }
                        next_buf[t] = 0.0;
                    }
                    touched.clear();
                }
            }
            for &(r, v) in &cur {
                acc[r] += v;
            }
        }
        let mut out = SparsePoly::zero(new_dim);
        for (r, v) in acc.into_iter().enumerate() {
            if v.abs() >= PRUNE {
                out.terms.insert(index.monomial(r).clone(), v);
            }
        }
        Ok(out)
    }

    /// Exact `E[p(x)]` under the standard Gaussian.
    pub fn gaussian_moment(&self) -> Result<f64> {
        if self.degree() > MOMENT_CAP {
            return Err(Error::DegreeCap { degree: self.degree(), cap: MOMENT_CAP });
        }
        Ok(self.terms.iter().map(|(m, c)| c * m.pairs().iter().map(|p| moment_1d(p.1 as usize)).product::<f64>()).sum())
    }

    /// Exact `E[p(x) q(x)]` without forming the product.
    pub fn gaussian_inner(&self, other: &SparsePoly) -> Result<f64> {
        self.check_same(other)?;
        let deg = self.degree() + other.degree();
        if deg > MOMENT_CAP {
            return Err(Error::DegreeCap { degree: deg, cap: MOMENT_CAP });
        }
        let dense = |p: &SparsePoly| -> Vec<(Vec<u8>, f64)> {
            p.terms
                .iter()
                .map(|(m, c)| {
                    let mut e = vec![0u8; p.dim];
                    for &(i, x) in m.pairs() {
                        e[i as usize] = x;
                    }
                    (e, *c)
                })
                .collect()
        };
        let table: Vec<f64> = (0..=MOMENT_CAP).map(moment_1d).collect();
        let a = dense(self);
        let b = dense(other);
        let mut total = 0.0;
        for (ea, ca) in &a {
            for (eb, cb) in &b {
                let mut prod = ca * cb;
                for (x, y) in ea.iter().zip(eb) {
                    let s = (x + y) as usize;
                    if s == 0 {
                        continue;
                    }
                    if s % 2 == 1 {
                        prod = 0.0;
                        break;
                    }
                    prod *= table[s];
                }
                total += prod;
            }
        }
        Ok(total)
    }

    /// Exact `E[p^2]`.
    pub fn l2_norm_sq(&self) -> Result<f64> {
        if 2 * self.degree() > MOMENT_CAP {
            return Err(Error::DegreeCap { degree: 2 * self.degree(), cap: MOMENT_CAP });
        }
        Ok(monomial_to_hermite(self).norm_sq())
    }

    /// The Hermite degree-1 coefficients `b_i = E[p(x) x_i]`.
    pub fn degree1_part(&self) -> Result<Vec<f64>> {
        if self.degree() + 1 > MOMENT_CAP {
            return Err(Error::DegreeCap { degree: self.degree() + 1, cap: MOMENT_CAP });
        }
        let mut b = vec![0.0; self.dim];
        for (m, c) in &self.terms {
            // E[x^alpha x_i] is nonzero only if alpha + e_i has all exponents even
            let odd: Vec<usize> = m.pairs().iter().filter(|p| p.1 % 2 == 1).map(|p| p.0 as usize).collect();
            let base: f64 = m.pairs().iter().map(|p| moment_1d(p.1 as usize + (p.1 % 2) as usize)).product();
            match odd.len() {
                0 => {
                    // x_i must be a fresh coordinate with exponent 1: odd, vanishes
                }
                1 => {
                    let i = odd[0];
                    b[i] += c * base;
                }
                _ => {}
            }
        }
        Ok(b)
    }

    /// `E[|grad p|^2]`
    pub fn gradient_norm_sq(&self) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.dim {
            total += self.partial_derivative(i).l2_norm_sq()?;
        }
        Ok(total)
    }

    pub fn variance(&self) -> Result<f64> {
        let m = self.gaussian_moment()?;
        Ok(self.l2_norm_sq()? - m * m)
    }
}

/// Exact change of basis from a Hermite series to monomials.
pub fn hermite_to_monomial(series: &HermiteSeries) -> Result<SparsePoly> {
    let deg = series.degree();
    if deg > HERMITE_TABLE_MAX {
        return Err(Error::DegreeCap { degree: deg, cap: HERMITE_TABLE_MAX });
    }
    let table: Vec<Vec<f64>> = (0..=deg).map(hermite_monomial_coeffs).collect();
    let mut acc: HashMap<MultiIndex, f64> = HashMap::new();
    for (m, c) in &series.coeffs {
        if *c == 0.0 {
            continue;
        }
        let mut partial: Vec<(Vec<(usize, usize)>, f64)> = vec![(Vec::new(), *c)];
        for &(coord, e) in m.pairs() {
            let row = &table[e as usize];
            let mut next = Vec::with_capacity(partial.len() * row.len());
            for (pairs, v) in &partial {
                for (p, a) in row.iter().enumerate() {
                    if *a == 0.0 {
                        continue;
                    }
                    let mut np = pairs.clone();
                    if p > 0 {
                        np.push((coord as usize, p));
                    }
                    next.push((np, v * a));
                }
            }
            partial = next;
        }
        for (pairs, v) in partial {
            *acc.entry(MultiIndex::from_pairs(&pairs)).or_insert(0.0) += v;
        }
    }
    Ok(SparsePoly { dim: series.dim, terms: acc.into_iter().collect() }.pruned())
}

/// Exact change of basis from monomials to the orthonormal Hermite basis.
pub fn monomial_to_hermite(p: &SparsePoly) -> HermiteSeries {
    // x^n = sum_j n! / (2^j j! (n-2j)!) He_{n-2j}(x) and He_m = sqrt(m!) H_m
    let expand = |n: usize| -> Vec<(usize, f64)> {
        (0..=n / 2)
            .map(|j| {
                let m = n - 2 * j;
                let c = factorial(n) / (2f64.powi(j as i32) * factorial(j) * factorial(m));
                (m, c * factorial(m).sqrt())
            })
            .collect()
    };
    let mut acc: HashMap<MultiIndex, f64> = HashMap::new();
    for (m, c) in &p.terms {
        let mut partial: Vec<(Vec<(usize, usize)>, f64)> = vec![(Vec::new(), *c)];
        for &(coord, e) in m.pairs() {
            let row = expand(e as usize);
            let mut next = Vec::with_capacity(partial.len() * row.len());
            for (pairs, v) in &partial {
                for &(deg, a) in &row {
                    let mut np = pairs.clone();
                    if deg > 0 {
                        np.push((coord as usize, deg));
                    }
                    next.push((np, v * a));
                }
            }
            partial = next;
        }
        for (pairs, v) in partial {
            *acc.entry(MultiIndex::from_pairs(&pairs)).or_insert(0.0) += v;
        }
    }
    HermiteSeries { dim: p.dim, coeffs: acc.into_iter().filter(|(_, c)| *c != 0.0).collect() }
}

/// Dense ranking of all monomials of degree at most `max_deg` in `nvars`
/// variables, with a multiplication-by-variable table.
struct GradedIndex {
    nvars: usize,
    monos: Vec<MultiIndex>,
    times: Vec<u32>,
}

impl GradedIndex {
    fn new(nvars: usize, max_deg: usize) -> Self {
        let mut monos = vec![MultiIndex::zero()];
        let mut rank: HashMap<MultiIndex, usize> = HashMap::new();
        rank.insert(MultiIndex::zero(), 0);
        let mut frontier = vec![0usize];
        for _ in 0..max_deg {
            let mut next = Vec::new();
            for &r in &frontier {
                for v in 0..nvars {
                    let m = monos[r].add(&MultiIndex::unit(v));
                    if !rank.contains_key(&m) {
                        rank.insert(m.clone(), monos.len());
                        next.push(monos.len());
                        monos.push(m);
                    }
                }
            }
            frontier = next;
        }
        let mut times = vec![u32::MAX; monos.len() * nvars];
        for (r, m) in monos.iter().enumerate() {
            if m.degree() < max_deg {
                for v in 0..nvars {
                    times[r * nvars + v] = rank[&m.add(&MultiIndex::unit(v))] as u32;
                }
            }
        }
        GradedIndex { nvars, monos, times }
    }

    fn len(&self) -> usize {
        self.monos.len()
    }

    fn times(&self, r: usize, v: usize) -> usize {
        self.times[r * self.nvars + v] as usize
    }

    fn monomial(&self, r: usize) -> &MultiIndex {
        &self.monos[r]
    }
}
