//! Functions on Gaussian space: half-spaces, folding, and adversarial candidates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot, normalize, row_space_split, sample_gaussian, span_orthonormalize};
use crate::hermite::MultiIndex;
use crate::poly::SparsePoly;
use crate::rng::{Rng, SeedStream};
use rand::Rng as _;

/// A real function on `R^dim`.
pub trait GaussFn: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;

    /// Orthonormal basis of the subspace the function depends on, if known.
    fn invariant_basis(&self) -> Option<&[Vec<f64>]> {
        None
    }
}

impl<T: GaussFn + ?Sized> GaussFn for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn invariant_basis(&self) -> Option<&[Vec<f64>]> {
        (**self).invariant_basis()
    }
}

impl<T: GaussFn + ?Sized> GaussFn for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn invariant_basis(&self) -> Option<&[Vec<f64>]> {
        (**self).invariant_basis()
    }
}

/// Adapter for closures.
pub struct FnGauss<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnGauss<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnGauss { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> GaussFn for FnGauss<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl GaussFn for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: &[f64]) -> f64 {
        self.value
    }
}

pub fn sign(v: f64) -> f64 {
    if v >= 0.0 { 1.0 } else { -1.0 }
}

/// `HS_sigma(x) = sign(<sigma, x>)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
}

impl HalfSpace {
    pub fn new(normal: &[f64]) -> Result<Self> {
        Ok(HalfSpace { normal: normalize(normal)? })
    }
}

impl GaussFn for HalfSpace {
    fn dim(&self) -> usize {
        self.normal.len()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        sign(dot(&self.normal, x))
    }
}

impl GaussFn for SparsePoly {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }
}

/// Sign of an inner function.
pub struct SignOf<F>(pub F);

impl<F: GaussFn> GaussFn for SignOf<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        sign(self.0.eval(x))
    }
}

/// A `+-1` function made anti-symmetric, 0-homogeneous and constant along the
/// row space `W` of a constraint matrix.
pub struct FoldedFunction {
    raw: Arc<dyn GaussFn>,
    constraint: Vec<Vec<f64>>,
    w_basis: Vec<Vec<f64>>,
    free_basis: Vec<Vec<f64>>,
}

impl fmt::Debug for FoldedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FoldedFunction")
            .field("dim", &self.raw.dim())
            .field("constraint_rank", &self.w_basis.len())
            .finish()
    }
}

/// Relative rank tolerance for the constraint row space.
pub const RANK_TOL: f64 = 1e-10;
/// Coordinates below this magnitude are skipped when choosing the sign.
pub const SIGN_TOL: f64 = 1e-12;

impl FoldedFunction {
    pub fn constraint(&self) -> &[Vec<f64>] {
        &self.constraint
    }

    pub fn constraint_basis(&self) -> &[Vec<f64>] {
        &self.w_basis
    }

    pub fn raw(&self) -> &Arc<dyn GaussFn> {
        &self.raw
    }

    /// The canonical representative `c` and whether `x` was flipped to reach it;
    /// `None` when `x` has no component outside `W`.
    pub fn canonical(&self, x: &[f64]) -> Option<(Vec<f64>, bool)> {
        let mut p = x.to_vec();
        for w in &self.w_basis {
            let d = dot(w, &p);
            for (pi, wi) in p.iter_mut().zip(w) {
                *pi -= d * wi;
            }
        }
        let n = dot(&p, &p).sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        p.iter_mut().for_each(|v| *v /= n);
        let lead = p.iter().find(|v| v.abs() > SIGN_TOL)?;
        let flip = *lead < 0.0;
        if flip {
            p.iter_mut().for_each(|v| *v = -*v);
        }
        Some((p, flip))
    }
}

impl GaussFn for FoldedFunction {
    fn dim(&self) -> usize {
        self.raw.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self.canonical(x) {
            None => 1.0,
            Some((c, flip)) => {
                let s = sign(self.raw.eval(&c));
                if flip { -s } else { s }
            }
        }
    }

    fn invariant_basis(&self) -> Option<&[Vec<f64>]> {
        Some(&self.free_basis)
    }
}

/// Folds `raw` against the `k x k` constraint matrix `a` (rows); an empty
/// matrix means no constraints.
pub fn fold(raw: Arc<dyn GaussFn>, a: &[Vec<f64>]) -> Result<FoldedFunction> {
    let k = raw.dim();
    let (w_basis, free_basis) = row_space_split(a, k, RANK_TOL)?;
    if free_basis.is_empty() {
        return Err(Error::InvalidFunction("constraint matrix leaves no free directions".into()));
    }
    Ok(FoldedFunction { raw, constraint: a.to_vec(), w_basis, free_basis })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdversaryKind {
    MajorityOfThreeHalfspaces,
    SignOfRandomDegree3Poly,
    RandomBalancedCell,
}

impl FromStr for AdversaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority-of-3-halfspaces" => Ok(AdversaryKind::MajorityOfThreeHalfspaces),
            "sign-of-random-degree-3-poly" => Ok(AdversaryKind::SignOfRandomDegree3Poly),
            "random-balanced-cell" => Ok(AdversaryKind::RandomBalancedCell),
            other => Err(Error::InvalidArgument(format!("unknown adversary kind '{other}'"))),
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryKind::MajorityOfThreeHalfspaces => "majority-of-3-halfspaces",
            AdversaryKind::SignOfRandomDegree3Poly => "sign-of-random-degree-3-poly",
            AdversaryKind::RandomBalancedCell => "random-balanced-cell",
        })
    }
}

#[derive(Debug, Clone)]
pub struct AdversaryParams {
    pub k: usize,
    pub constraint: Vec<Vec<f64>>,
    /// Cell side for `random-balanced-cell`.
    pub cell_size: f64,
    /// Cubic terms for `sign-of-random-degree-3-poly`.
    pub cubic_terms: usize,
}

impl AdversaryParams {
    pub fn new(k: usize) -> Self {
        AdversaryParams { k, constraint: Vec::new(), cell_size: 1e-9, cubic_terms: 12 }
    }
}

struct Majority3 {
    normals: Vec<Vec<f64>>,
}

impl GaussFn for Majority3 {
    fn dim(&self) -> usize {
        self.normals[0].len()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        sign(self.normals.iter().map(|a| sign(dot(a, x))).sum())
    }
}

/// Independent random sign per cell of a cubic grid.
pub struct RandomCells {
    dim: usize,
    cell: f64,
    salt: u64,
}

impl RandomCells {
    pub fn new(dim: usize, cell: f64, salt: u64) -> Self {
        RandomCells { dim, cell, salt }
    }
}

impl GaussFn for RandomCells {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let mut h = self.salt ^ 0x9e37_79b9_7f4a_7c15;
        for v in x {
            let q = (v / self.cell).floor() as i64 as u64;
            h ^= q.wrapping_mul(0xbf58_476d_1ce4_e5b9);
            h = h.rotate_left(27).wrapping_mul(0x94d0_49bb_1331_11eb);
        }
        h ^= h >> 31;
        if h & 1 == 0 { 1.0 } else { -1.0 }
    }
}

fn random_free_vectors(free: &[Vec<f64>], count: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let gens: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let c = sample_gaussian(free.len(), rng);
            let mut v = vec![0.0; free[0].len()];
            for (ci, b) in c.iter().zip(free) {
                crate::geom::axpy(*ci, b, &mut v);
            }
            v
        })
        .collect();
    Ok(span_orthonormalize(&gens)?.basis)
}

/// A folded member of the adversary zoo.
pub fn adversary_zoo(kind: AdversaryKind, params: &AdversaryParams, stream: &SeedStream) -> Result<FoldedFunction> {
    let k = params.k;
    let mut rng = stream.rng();
    let (_, free) = row_space_split(&params.constraint, k, RANK_TOL)?;
    let raw: Arc<dyn GaussFn> = match kind {
        AdversaryKind::MajorityOfThreeHalfspaces => {
            if free.len() < 3 {
                return Err(Error::Infeasible("majority of 3 needs three free directions".into()));
            }
            Arc::new(Majority3 { normals: random_free_vectors(&free, 3, &mut rng)? })
        }
        AdversaryKind::SignOfRandomDegree3Poly => {
            let mut terms = Vec::new();
            for i in 0..k {
                terms.push((MultiIndex::unit(i), crate::rng::normal(&mut rng)));
            }
            for _ in 0..params.cubic_terms {
                let idx = [rng.gen_range(0..k), rng.gen_range(0..k), rng.gen_range(0..k)];
                let mi = MultiIndex::from_pairs(&[(idx[0], 1), (idx[1], 1), (idx[2], 1)]);
                terms.push((mi, crate::rng::normal(&mut rng)));
            }
            Arc::new(SignOf(SparsePoly::from_terms(k, terms)?))
        }
        AdversaryKind::RandomBalancedCell => {
            if !(params.cell_size > 0.0) {
                return Err(Error::InvalidArgument("cell size must be positive".into()));
            }
            Arc::new(RandomCells::new(k, params.cell_size, rng.gen()))
        }
    };
    fold(raw, &params.constraint)
}

/// Randomized check of anti-symmetry and 0-homogeneity at `points` Gaussian points.
pub fn check_folded(f: &dyn GaussFn, points: usize, stream: &SeedStream) -> Result<()> {
    let mut rng = stream.rng();
    for _ in 0..points {
        let x = sample_gaussian(f.dim(), &mut rng);
        let v = f.eval(&x);
        if v != 1.0 && v != -1.0 {
            return Err(Error::InvalidFunction(format!("value {v} is not +-1")));
        }
        let neg: Vec<f64> = x.iter().map(|a| -a).collect();
        if f.eval(&neg) != -v {
            return Err(Error::InvalidFunction("f(-x) != -f(x)".into()));
        }
        let c = 0.5 + 3.0 * rng.gen::<f64>();
        let scaled: Vec<f64> = x.iter().map(|a| c * a).collect();
        if f.eval(&scaled) != v {
            return Err(Error::InvalidFunction("f(cx) != f(x)".into()));
        }
    }
    Ok(())
}
