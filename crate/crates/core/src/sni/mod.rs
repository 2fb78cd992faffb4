//! Subspaces near-intersection instances: unit-vector labels in the null
//! spaces of per-vertex constraint matrices, compared after projection onto
//! edge hyperplanes.

mod gap;
mod io;
mod planted;

pub use gap::{generate_gap_instance, generate_gap_instance_with, sign_search, GapConfig, GapInstance, SignSearchReport};
pub use io::{read_instance, read_instance_file, write_instance, write_instance_file};
pub use planted::{generate_planted, generate_planted_with, identity_basis, PlantedConfig, PlantedInstance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot, norm, SubspaceSpan};

/// Tolerance for unit vectors stored in an instance.
pub const UNIT_TOL: f64 = 1e-10;
/// Tolerance for `Y` lying inside an edge hyperplane.
pub const ZOOM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SniInstance {
    pub k: usize,
    pub degree: usize,
    /// Row-major `k x k` matrix `A_v` per vertex.
    pub constraints: Vec<Vec<Vec<f64>>>,
    pub edges: Vec<Edge>,
}

impl SniInstance {
    pub fn new(k: usize, degree: usize, constraints: Vec<Vec<Vec<f64>>>, edges: Vec<Edge>) -> Result<Self> {
        let inst = SniInstance { k, degree, constraints, edges };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n_vertices(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        let n = self.n_vertices();
        for (v, a) in self.constraints.iter().enumerate() {
            if a.len() != k || a.iter().any(|row| row.len() != k) {
                return Err(Error::InvalidArgument(format!("vertex {v}: constraint matrix is not {k}x{k}")));
            }
            if a.iter().flatten().any(|x| !x.is_finite() || x.abs() > 1.0) {
                return Err(Error::InvalidArgument(format!("vertex {v}: constraint entries must lie in [-1, 1]")));
            }
        }
        let mut deg = vec![0usize; n];
        for (i, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidArgument(format!("edge {i}: endpoint out of range")));
            }
            if e.u == e.v {
                return Err(Error::InvalidArgument(format!("edge {i}: self-loop at vertex {}", e.u)));
            }
            if e.theta.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: e.theta.len() });
            }
            let len = norm(&e.theta);
            if (len - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("edge {i}: theta has length {len}, expected 1")));
            }
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        if let Some((v, d)) = deg.iter().enumerate().find(|(_, d)| **d != self.degree) {
            return Err(Error::InvalidArgument(format!(
                "graph is not {}-regular: vertex {v} has degree {d}",
                self.degree
            )));
        }
        Ok(())
    }

    pub fn constraint_times(&self, v: usize, x: &[f64]) -> Vec<f64> {
        self.constraints[v].iter().map(|row| dot(row, x)).collect()
    }

    /// Edges whose hyperplane contains `Y`.
    pub fn aligned_edges(&self, y: &SubspaceSpan) -> Vec<usize> {
        (0..self.edges.len()).filter(|&i| y.overlap(&self.edges[i].theta) <= ZOOM_TOL).collect()
    }
}

/// Partial assignment of unit vectors to vertices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<Option<Vec<f64>>>,
}

impl Labeling {
    pub fn empty(n: usize) -> Self {
        Labeling { labels: vec![None; n] }
    }

    pub fn set(&mut self, v: usize, sigma: Vec<f64>) -> Result<()> {
        let len = norm(&sigma);
        if (len - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!("label of vertex {v} has length {len}")));
        }
        self.labels[v] = Some(sigma);
        Ok(())
    }

    pub fn get(&self, v: usize) -> Option<&[f64]> {
        self.labels.get(v).and_then(|l| l.as_deref())
    }

    pub fn defined(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Largest `|A_v sigma(v)|_inf` over labeled vertices.
    pub fn constraint_residual(&self, inst: &SniInstance) -> f64 {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(v, l)| l.as_ref().map(|s| (v, s)))
            .map(|(v, s)| inst.constraint_times(v, s).iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomInQuery {
    pub y: SubspaceSpan,
    pub alpha: f64,
}

impl ZoomInQuery {
    pub fn new(y: SubspaceSpan, alpha: f64) -> Result<Self> {
        if y.dim() + 2 > y.ambient() {
            return Err(Error::InvalidArgument(format!(
                "zoom subspace of dimension {} needs k >= {}",
                y.dim(),
                y.dim() + 2
            )));
        }
        if alpha < 0.0 {
            return Err(Error::InvalidArgument("alpha must be non-negative".into()));
        }
        Ok(ZoomInQuery { y, alpha })
    }
}

/// `|P(sigma(u)) - P(sigma(v))|` for `P` the projection onto `Theta_e^perp`,
/// or onto `Theta_e^perp ∩ Y^perp` under a zoom.
pub fn edge_deviation(inst: &SniInstance, lab: &Labeling, e: usize, zoom: Option<&SubspaceSpan>) -> Result<f64> {
    let edge = inst.edges.get(e).ok_or_else(|| Error::InvalidArgument(format!("no edge {e}")))?;
    let su = lab.get(edge.u).ok_or_else(|| Error::InvalidArgument(format!("vertex {} is unlabeled", edge.u)))?;
    let sv = lab.get(edge.v).ok_or_else(|| Error::InvalidArgument(format!("vertex {} is unlabeled", edge.v)))?;
    deviation(su, sv, &edge.theta, zoom, e)
}


pub(crate) fn deviation(su: &[f64], sv: &[f64], theta: &[f64], zoom: Option<&SubspaceSpan>, e: usize) -> Result<f64> {
    let mut d: Vec<f64> = su.iter().zip(sv).map(|(a, b)| a - b).collect();
    let t = dot(&d, theta);
    for (di, ti) in d.iter_mut().zip(theta) {
        *di -= t * ti;
    }
    if let Some(y) = zoom {
        let overlap = y.overlap(theta);
        if overlap > ZOOM_TOL {
            return Err(Error::ZoomMisaligned { edge: e, overlap });
        }
        d = y.project_out(&d);
    }
    Ok(norm(&d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub satisfied: usize,
    pub counted: usize,
    pub fraction: f64,
}

/// Fraction of alpha-satisfied edges. Under a zoom only edges whose
/// hyperplane contains `Y` are counted; unlabeled endpoints are unsatisfied.
pub fn instance_value(inst: &SniInstance, lab: &Labeling, alpha: f64, zoom: Option<&SubspaceSpan>) -> ValueReport {
    let mut satisfied = 0;
    let mut counted = 0;
    for (i, e) in inst.edges.iter().enumerate() {
        if let Some(y) = zoom {
            if y.overlap(&e.theta) > ZOOM_TOL {
                continue;
            }
        }
        counted += 1;
        if let (Some(su), Some(sv)) = (lab.get(e.u), lab.get(e.v)) {
            if let Ok(d) = deviation(su, sv, &e.theta, zoom, i) {
                if d <= alpha {
                    satisfied += 1;
                }
            }
        }
    }
    let fraction = if counted == 0 { 0.0 } else { satisfied as f64 / counted as f64 };
    ValueReport { satisfied, counted, fraction }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaUniformity {
    /// Mean over vertices of `|M_v - I/k|_F` with `M_v` the average of
    /// `Theta Theta^T` over incident edges.
    pub mean_discrepancy: f64,
    /// The same quantity's expectation for independent uniform normals.
    pub uniform_reference: f64,
}

pub fn theta_uniformity(inst: &SniInstance) -> ThetaUniformity {
    let k = inst.k;
    let n = inst.n_vertices();
    let mut m = vec![vec![0.0; k * k]; n];
    let mut cnt = vec![0usize; n];
    for e in &inst.edges {
        for v in [e.u, e.v] {
            cnt[v] += 1;
            for i in 0..k {
                for j in 0..k {
                    m[v][i * k + j] += e.theta[i] * e.theta[j];
                }
            }
        }
    }
    let mut total = 0.0;
    for v in 0..n {
        let c = cnt[v].max(1) as f64;
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 / k as f64 } else { 0.0 };
                s += (m[v][i * k + j] / c - want).powi(2);
            }
        }
        total += s.sqrt();
    }
    let d = inst.degree.max(1) as f64;
    ThetaUniformity {
        mean_discrepancy: total / n.max(1) as f64,
        uniform_reference: ((1.0 - 1.0 / k as f64) / d).sqrt(),
    }
}
