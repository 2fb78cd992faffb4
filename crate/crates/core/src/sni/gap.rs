use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::planted::random_regular_graph;
use super::{deviation, Edge, Labeling, SniInstance};
use crate::error::{Error, Result};
use crate::geom::{axpy, dot, normalize, sample_gaussian};
use crate::rng::{Rng, SeedStream};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub k: usize,
    pub delta: f64,
    /// Grid spacing for vertex vectors and edge normals.
    pub resolution: f64,
    pub n_vertices: usize,
    pub degree: usize,
    pub max_vertices: usize,
}

impl GapConfig {
    pub fn new(k: usize, delta: f64, resolution: f64) -> Self {
        GapConfig { k, delta, resolution, n_vertices: 64, degree: 4, max_vertices: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    pub instance: SniInstance,
    /// Defining unit vector of each vertex.
    pub vectors: Vec<Vec<f64>>,
}

impl GapInstance {
    /// Each vertex labeled with its own vector.
    pub fn prescribed_labeling(&self) -> Labeling {
        Labeling { labels: self.vectors.iter().cloned().map(Some).collect() }
    }
}

pub fn generate_gap_instance(k: usize, delta: f64, resolution: f64, seed: u64) -> Result<GapInstance> {
    generate_gap_instance_with(&GapConfig::new(k, delta, resolution), &SeedStream::new(seed))
}

pub fn generate_gap_instance_with(cfg: &GapConfig, stream: &SeedStream) -> Result<GapInstance> {
    let k = cfg.k;
    if cfg.n_vertices > cfg.max_vertices {
        return Err(Error::BudgetExceeded { needed: cfg.n_vertices, budget: cfg.max_vertices });
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {} must lie in (0, 1)", cfg.delta)));
    }
    if !(cfg.resolution > 0.0) || cfg.resolution * (k as f64).sqrt() > cfg.delta.sqrt() / 4.0 {
        return Err(Error::Infeasible(format!(
            "resolution {} is too coarse for projected distance sqrt({})",
            cfg.resolution, cfg.delta
        )));
    }
    if k < 3 {
        return Err(Error::Infeasible("gap instances need k >= 3".into()));
    }
    let mut rng = stream.named("vectors").rng();
    let vectors: Vec<Vec<f64>> = (0..cfg.n_vertices)
        .map(|_| quantized_unit(&sample_gaussian(k, &mut rng), cfg.resolution))
        .collect::<Result<_>>()?;
    let pairs = random_regular_graph(cfg.n_vertices, cfg.degree, &mut stream.named("graph").rng())?;
    let mut trng = stream.named("normals").rng();
    let mut edges = Vec::with_capacity(pairs.len());
    for &(u, v) in &pairs {
        let d: Vec<f64> = vectors[u].iter().zip(&vectors[v]).map(|(a, b)| a - b).collect();
        edges.push(Edge { u, v, theta: gap_normal(&d, cfg.delta, cfg.resolution, &mut trng)? });
    }
    let constraints = vectors
        .iter()
        .map(|v| (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 } - v[i] * v[j]).collect()).collect())
        .collect();
    let instance = SniInstance::new(k, cfg.degree, constraints, edges)?;
    Ok(GapInstance { instance, vectors })
}

fn quantized_unit(v: &[f64], res: f64) -> Result<Vec<f64>> {
    let u = normalize(v)?;
    normalize(&u.iter().map(|x| (x / res).round() * res).collect::<Vec<f64>>())
}

/// Unit normal whose hyperplane shrinks `d` to length `sqrt(delta)`.
fn gap_normal(d: &[f64], delta: f64, res: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let len2 = dot(d, d);
    if len2 <= delta {
        return Err(Error::Infeasible(format!("edge vectors are closer than sqrt(delta): |u - v|^2 = {len2}")));
    }
    let dh = normalize(d)?;
    let mut w = sample_gaussian(d.len(), rng);
    axpy(-dot(&w, &dh), &dh, &mut w);
    let w = normalize(&w)?;
    let a = (1.0 - delta / len2).sqrt();
    let b = (1.0 - a * a).sqrt();
    let theta: Vec<f64> = dh.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
    quantized_unit(&theta, res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSearchReport {
    pub vertices: Vec<usize>,
    pub edges: usize,
    /// Smallest median edge deviation over all `±v` labelings.
    pub min_median_deviation: f64,
    /// Smallest mean squared deviation over all `±v` labelings.
    pub min_mean_sq_deviation: f64,
    pub assignments: u64,
}

/// Exhaustive search over sign patterns on a breadth-first subgraph of at
/// most `max_vertices` vertices.
pub fn sign_search(gap: &GapInstance, max_vertices: usize) -> Result<SignSearchReport> {
    if !(1..=20).contains(&max_vertices) {
        return Err(Error::InvalidArgument("sign search supports 1..=20 vertices".into()));
    }
    let inst = &gap.instance;
    let mut chosen = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);
    chosen.insert(0);
    'bfs: while let Some(u) = queue.pop_front() {
        for e in &inst.edges {
            let other = if e.u == u { e.v } else if e.v == u { e.u } else { continue };
            if chosen.len() >= max_vertices {
                break 'bfs;
            }
            if chosen.insert(other) {
                queue.push_back(other);
            }
        }
    }
    let vertices: Vec<usize> = chosen.into_iter().collect();
    let local = |v: usize| vertices.binary_search(&v).ok();
    let sub: Vec<(usize, usize, usize)> = inst
        .edges
        .iter()
        .enumerate()
        .filter_map(|(i, e)| Some((i, local(e.u)?, local(e.v)?)))
        .collect();
    if sub.is_empty() {
        return Err(Error::Infeasible("subgraph has no edges".into()));
    }
    let m = vertices.len();
    let mut best_median = f64::INFINITY;
    let mut best_mean_sq = f64::INFINITY;
    let assignments = 1u64 << (m - 1);
    let mut devs = vec![0.0; sub.len()];
    let mut su = vec![0.0; inst.k];
    let mut sv = vec![0.0; inst.k];
    for mask in 0..assignments {
        // vertex 0 keeps its sign: a global flip leaves every deviation unchanged
        let sign = |i: usize| if i > 0 && (mask >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 };
        for (slot, &(e, a, b)) in devs.iter_mut().zip(&sub) {
            let (sa, sb) = (sign(a), sign(b));
            for ((x, y), (p, q)) in su.iter_mut().zip(sv.iter_mut()).zip(gap.vectors[vertices[a]].iter().zip(&gap.vectors[vertices[b]])) {
                *x = sa * p;
                *y = sb * q;
            }
            *slot = deviation(&su, &sv, &inst.edges[e].theta, None, e)?;
        }
        let mean_sq = devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64;
        best_mean_sq = best_mean_sq.min(mean_sq);
        best_median = best_median.min(median(&devs));
    }
    Ok(SignSearchReport {
        vertices,
        edges: sub.len(),
        min_median_deviation: best_median,
        min_mean_sq_deviation: best_mean_sq,
        assignments,
    })
}
