use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MultiIndex;
use crate::error::{Error, Result};

/// A finite Hermite expansion `sum_S c_S H_S(x)` in `dim` variables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HermiteSeries {
    pub dim: usize,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl HermiteSeries {
    pub fn new(dim: usize) -> Self {
        HermiteSeries { dim, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut s = HermiteSeries::new(dim);
        for (m, c) in terms {
            m.check_dim(dim)?;
            *s.coeffs.entry(m).or_insert(0.0) += c;
        }
        Ok(s)
    }

    pub fn coefficient(&self, m: &MultiIndex) -> f64 {
        self.coeffs.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.coeffs.iter().map(|(m, c)| c * m.eval_hermite(x)).sum())
    }

    /// `f^{=k}`
    pub fn degree_part(&self, k: usize) -> HermiteSeries {
        self.filter(|m| m.degree() == k)
    }

    /// `f^{<=d}`
    pub fn low_degree(&self, d: usize) -> HermiteSeries {
        self.filter(|m| m.degree() <= d)
    }

    fn filter(&self, keep: impl Fn(&MultiIndex) -> bool) -> HermiteSeries {
        HermiteSeries {
            dim: self.dim,
            coeffs: self.coeffs.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    /// Squared L2 norm under the Gaussian measure (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    pub fn inner(&self, other: &HermiteSeries) -> f64 {
        self.coeffs.iter().map(|(m, c)| c * other.coefficient(m)).sum()
    }

    /// Weight at each degree, `w[k] = ||f^{=k}||^2`.
    pub fn degree_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.degree() + 1];
        for (m, c) in &self.coeffs {
            w[m.degree()] += c * c;
        }
        w
    }

    /// The noise operator `T_rho`, scaling each `H_S` by `rho^{|S|}`.
    pub fn apply_noise(&self, rho: f64) -> Result<HermiteSeries> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!("noise rate {rho} outside [0, 1]")));
        }
        Ok(HermiteSeries {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(m, c)| (m.clone(), c * rho.powi(m.degree() as i32))).collect(),
        })
    }

    pub fn sub(&self, other: &HermiteSeries) -> Result<HermiteSeries> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut out = self.clone();
        for (m, c) in &other.coeffs {
            *out.coeffs.entry(m.clone()).or_insert(0.0) -= c;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_scales_by_degree() {
        let s = HermiteSeries::from_terms(
            2,
            [(MultiIndex::unit(0), 1.0), (MultiIndex::from_pairs(&[(0, 1), (1, 2)]), 2.0)],
        )
        .unwrap();
        let t = s.apply_noise(0.5).unwrap();
        assert_eq!(t.coefficient(&MultiIndex::unit(0)), 0.5);
        assert_eq!(t.coefficient(&MultiIndex::from_pairs(&[(0, 1), (1, 2)])), 2.0 * 0.125);
        assert!(s.apply_noise(1.5).is_err());
        assert!(s.apply_noise(-0.1).is_err());
        assert_eq!(s.degree_weights(), vec![0.0, 1.0, 0.0, 4.0]);
    }

    #[test]
    fn rejects_out_of_range_index() {
        assert!(HermiteSeries::from_terms(2, [(MultiIndex::unit(2), 1.0)]).is_err());
    }
}
