use std::fmt;

use serde::{Deserialize, Serialize};

use super::{binomial, factorial, hermite_1d};
use crate::error::{Error, Result};

/// Sparse exponent vector: `(coordinate, exponent)` pairs with increasing
/// coordinates and nonzero exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct MultiIndex(Vec<(u16, u8)>);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn unit(coord: usize) -> Self {
        MultiIndex(vec![(coord as u16, 1)])
    }

    /// From pairs in any order; repeated coordinates add up.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        let mut v: Vec<(u16, u8)> = Vec::new();
        let mut sorted: Vec<(usize, usize)> = pairs.iter().copied().filter(|p| p.1 > 0).collect();
        sorted.sort();
        for (c, e) in sorted {
            match v.last_mut() {
                Some(last) if last.0 as usize == c => last.1 += e as u8,
                _ => v.push((c as u16, e as u8)),
            }
        }
        MultiIndex(v)
    }

    pub fn from_exponents(exps: &[usize]) -> Self {
        MultiIndex(
            exps.iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(c, e)| (c as u16, *e as u8))
                .collect(),
        )
    }

    /// Multiset of coordinates (sorted tuple) to exponent vector.
    pub fn from_tuple(tuple: &[u16]) -> Self {
        let mut v: Vec<(u16, u8)> = Vec::new();
        for &c in tuple {
            match v.last_mut() {
                Some(last) if last.0 == c => last.1 += 1,
                _ => v.push((c, 1)),
            }
        }
        MultiIndex(v)
    }

    pub fn pairs(&self) -> &[(u16, u8)] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|p| p.1 as usize).sum()
    }

    pub fn exponent(&self, coord: usize) -> usize {
        self.0
            .iter()
            .find(|p| p.0 as usize == coord)
            .map_or(0, |p| p.1 as usize)
    }

    /// Largest coordinate plus one.
    pub fn min_dim(&self) -> usize {
        self.0.last().map_or(0, |p| p.0 as usize + 1)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<usize> {
        let mut v = vec![0; dim];
        for &(c, e) in &self.0 {
            v[c as usize] = e as usize;
        }
        v
    }

    pub fn to_tuple(&self) -> Vec<u16> {
        self.0.iter().flat_map(|&(c, e)| std::iter::repeat(c).take(e as usize)).collect()
    }

    /// `prod_i alpha_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|p| factorial(p.1 as usize)).product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            match (self.0.get(i), other.0.get(j)) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    out.push(*a);
                    i += 1;
                }
                (Some(_), Some(b)) => {
                    out.push(*b);
                    j += 1;
                }
                (Some(a), None) => {
                    out.push(*a);
                    i += 1;
                }
                (None, Some(b)) => {
                    out.push(*b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        MultiIndex(out)
    }

    /// Lowers the exponent of `coord` by one; `None` if it is zero.
    pub fn lower(&self, coord: usize) -> Option<MultiIndex> {
        let pos = self.0.iter().position(|p| p.0 as usize == coord)?;
        let mut v = self.0.clone();
        if v[pos].1 == 1 {
            v.remove(pos);
        } else {
            v[pos].1 -= 1;
        }
        Some(MultiIndex(v))
    }

    /// `H_alpha(x) = prod_i H_{alpha_i}(x_i)`.
    pub fn eval_hermite(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(c, e)| hermite_1d(e as usize, x[c as usize])).product()
    }

    pub fn eval_monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(c, e)| x[c as usize].powi(e as i32)).product()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.min_dim() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.min_dim() });
        }
        Ok(())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (c, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}:{e}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeNode {
    pub parent: usize,
    pub coord: u16,
    pub exp: u8,
    pub degree: u8,
}

/// All multi-indices of total degree at most `degree` in `dim` variables,
/// in depth-first order: node 0 is the zero index and every other node extends
/// its parent by one trailing `(coord, exp)` pair.
#[derive(Debug, Clone)]
pub struct MultiIndexTree {
    pub dim: usize,
    pub degree: usize,
    pub nodes: Vec<TreeNode>,
}

impl MultiIndexTree {
    pub fn count(dim: usize, degree: usize) -> usize {
        binomial(dim + degree, degree)
    }

    pub fn new(dim: usize, degree: usize) -> Self {
        let mut nodes = vec![TreeNode { parent: 0, coord: 0, exp: 0, degree: 0 }];
        fn grow(nodes: &mut Vec<TreeNode>, parent: usize, from: usize, dim: usize, left: usize) {
            for c in from..dim {
                for e in 1..=left {
                    let id = nodes.len();
                    let degree = nodes[parent].degree + e as u8;
                    nodes.push(TreeNode { parent, coord: c as u16, exp: e as u8, degree });
                    grow(nodes, id, c + 1, dim, left - e);
                }
            }
        }
        grow(&mut nodes, 0, 0, dim, degree);
        MultiIndexTree { dim, degree, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn multi_indices(&self) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> = Vec::with_capacity(self.nodes.len());
        out.push(MultiIndex::zero());
        for node in &self.nodes[1..] {
            let mut v = out[node.parent].0.clone();
            v.push((node.coord, node.exp));
            out.push(MultiIndex(v));
        }
        out
    }

    /// `out[node] = prod H_e(x_c)` given the table `h[c * (degree+1) + e]`.
    pub fn evaluate(&self, h: &[f64], out: &mut [f64]) {
        let stride = self.degree + 1;
        out[0] = 1.0;
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            out[i] = out[node.parent] * h[node.coord as usize * stride + node.exp as usize];
        }
    }
}
