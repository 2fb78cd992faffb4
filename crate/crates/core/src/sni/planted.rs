use std::collections::{HashSet, VecDeque};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Edge, Labeling, SniInstance};
use crate::error::{Error, Result};
use crate::geom::{axpy, dot, norm, normalize, sample_gaussian, sample_sphere_in, span_orthonormalize, SubspaceSpan};
use crate::rng::{Rng, SeedStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub k: usize,
    pub n_vertices: usize,
    pub degree: usize,
    pub delta: f64,
    /// Rank of each constraint projector; `None` means `k / 4`.
    pub constraint_rank: Option<usize>,
    /// When set, every edge hyperplane contains `Y` and all labels share
    /// the same component in `Y`.
    pub zoom: Option<SubspaceSpan>,
}

impl PlantedConfig {
    pub fn new(k: usize, n_vertices: usize, degree: usize, delta: f64) -> Self {
        PlantedConfig { k, n_vertices, degree, delta, constraint_rank: None, zoom: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub instance: SniInstance,
    pub labeling: Labeling,
    /// Indices of the edges the planted labeling violates.
    pub violated: Vec<usize>,
    /// Basis of the subspace killed by `A_v`, per vertex.
    pub constraint_bases: Vec<Vec<Vec<f64>>>,
}

pub fn generate_planted(k: usize, n_vertices: usize, degree: usize, delta: f64, seed: u64) -> Result<(SniInstance, Labeling)> {
    let p = generate_planted_with(&PlantedConfig::new(k, n_vertices, degree, delta), &SeedStream::new(seed))?;
    Ok((p.instance, p.labeling))
}

pub fn generate_planted_with(cfg: &PlantedConfig, stream: &SeedStream) -> Result<PlantedInstance> {
    let k = cfg.k;
    if !(cfg.delta > 0.0 && cfg.delta < 0.5) {
        return Err(Error::Infeasible(format!("delta = {} must lie in (0, 1/2)", cfg.delta)));
    }
    let y_dim = cfg.zoom.as_ref().map_or(0, SubspaceSpan::dim);
    if let Some(y) = &cfg.zoom {
        if y.ambient() != k {
            return Err(Error::DimensionMismatch { expected: k, got: y.ambient() });
        }
    }
    if k < y_dim + 3 {
        return Err(Error::Infeasible(format!("k = {k} leaves no room for labels and perturbations")));
    }
    let rank = cfg.constraint_rank.unwrap_or(k / 4);
    if rank + y_dim + 1 > k {
        return Err(Error::Infeasible(format!("constraint rank {rank} does not fit in dimension {k}")));
    }
    if (cfg.delta / k as f64).sqrt() < 3.0 / k as f64 {
        log::warn!("sqrt(delta/k) = {:.3e} is not much larger than 1/k", (cfg.delta / k as f64).sqrt());
    }

    let mut rng = stream.named("graph").rng();
    let pairs = random_regular_graph(cfg.n_vertices, cfg.degree, &mut rng)?;
    let n = cfg.n_vertices;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, &(u, v)) in pairs.iter().enumerate() {
        adj[u].push((v, i));
        adj[v].push((u, i));
    }

    // BFS forest: (parent, child, edge) in discovery order
    let mut seen = vec![false; n];
    let mut tree: Vec<(usize, usize, usize)> = Vec::new();
    let mut roots = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        roots.push(s);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    tree.push((u, v, e));
                    queue.push_back(v);
                }
            }
        }
    }
    let n_violated = (cfg.delta * pairs.len() as f64).round() as usize;
    if n_violated > tree.len() {
        return Err(Error::Infeasible(format!(
            "{n_violated} violated edges requested but the spanning forest has {} edges",
            tree.len()
        )));
    }
    let mut lrng = stream.named("labels").rng();
    let mut violated: Vec<usize> = rand::seq::index::sample(&mut lrng, tree.len(), n_violated).into_vec();
    let violated_tree: HashSet<usize> = violated.iter().copied().collect();

    let free_y = match &cfg.zoom {
        Some(y) => y.complement(),
        None => identity_basis(k),
    };
    let project_free = |v: &[f64]| -> Vec<f64> {
        match &cfg.zoom {
            Some(y) => y.project_out(v),
            None => v.to_vec(),
        }
    };

    let mut labels: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut thetas: Vec<Option<Vec<f64>>> = vec![None; pairs.len()];
    let anchor = normalize(&sample_gaussian(k, &mut lrng))?;
    for (i, &r) in roots.iter().enumerate() {
        labels[r] = Some(if i == 0 {
            anchor.clone()
        } else {
            reflect(&anchor, &sample_sphere_in(&free_y, &mut lrng))
        });
    }
    let eps = 1.0 / (k as f64).sqrt();
    for (t, &(p, c, e)) in tree.iter().enumerate() {
        let theta = sample_sphere_in(&free_y, &mut lrng);
        let sp = labels[p].clone().expect("parent labeled first");
        let base = reflect(&sp, &theta);
        let label = if violated_tree.contains(&t) {
            let q = project_free(&base);
            let r = norm(&q);
            let w = random_orthogonal(&[&q, &theta], cfg.zoom.as_ref(), k, &mut lrng)?;
            let mut moved = q.clone();
            axpy(eps, &w, &mut moved);
            let moved = normalize(&moved)?;
            let mut out: Vec<f64> = base.iter().zip(&q).map(|(b, qi)| b - qi).collect();
            axpy(r, &moved, &mut out);
            out
        } else {
            base
        };
        labels[c] = Some(label);
        thetas[e] = Some(theta);
    }
    violated = violated.iter().map(|&t| tree[t].2).collect();
    violated.sort_unstable();

    let mut edges = Vec::with_capacity(pairs.len());
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let theta = match thetas[i].take() {
            Some(t) => t,
            None => {
                let su = labels[u].as_ref().expect("all labeled");
                let sv = labels[v].as_ref().expect("all labeled");
                let d = project_free(&su.iter().zip(sv).map(|(a, b)| a - b).collect::<Vec<f64>>());
                if norm(&d) > 1e-12 {
                    normalize(&d)?
                } else {
                    sample_sphere_in(&free_y, &mut lrng)
                }
            }
        };
        edges.push(Edge { u, v, theta });
    }

    let mut crng = stream.named("constraints").rng();
    let mut constraints = Vec::with_capacity(n);
    let mut constraint_bases = Vec::with_capacity(n);
    for label in labels.iter().take(n) {
        let sigma = label.as_ref().expect("all labeled");
        let basis = random_constraint_basis(sigma, cfg.zoom.as_ref(), rank, k, &mut crng)?;
        constraints.push(projector(&basis, k));
        constraint_bases.push(basis);
    }
    let instance = SniInstance::new(k, cfg.degree, constraints, edges)?;
    let labeling = Labeling { labels };
    Ok(PlantedInstance { instance, labeling, violated, constraint_bases })
}

pub fn identity_basis(k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn reflect(sigma: &[f64], theta: &[f64]) -> Vec<f64> {
    let t = 2.0 * dot(sigma, theta);
    sigma.iter().zip(theta).map(|(s, th)| s - t * th).collect()
}

/// Random unit vector orthogonal to each of `avoid` and to `Y`.
fn random_orthogonal(avoid: &[&[f64]], zoom: Option<&SubspaceSpan>, k: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let mut fixed: Vec<Vec<f64>> = zoom.map_or_else(Vec::new, |y| y.basis.clone());
    for a in avoid {
        let mut v = a.to_vec();
        for _ in 0..2 {
            for b in &fixed {
                axpy(-dot(b, &v), b, &mut v);
            }
        }
        if norm(&v) > 1e-9 {
            fixed.push(normalize(&v)?);
        }
    }
    for _ in 0..16 {
        let mut w = sample_gaussian(k, rng);
        for _ in 0..2 {
            for b in &fixed {
                axpy(-dot(b, &w), b, &mut w);
            }
        }
        if norm(&w) > 1e-6 {
            return normalize(&w);
        }
    }
    Err(Error::Infeasible("no direction left for the perturbation".into()))
}

fn random_constraint_basis(sigma: &[f64], zoom: Option<&SubspaceSpan>, rank: usize, k: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let mut fixed: Vec<Vec<f64>> = zoom.map_or_else(Vec::new, |y| y.basis.clone());
    let mut s = sigma.to_vec();
    for b in &fixed {
        axpy(-dot(b, &s), b, &mut s);
    }
    if norm(&s) > 1e-9 {
        fixed.push(normalize(&s)?);
    }
    let mut gens = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut g = sample_gaussian(k, rng);
        for _ in 0..2 {
            for b in &fixed {
                axpy(-dot(b, &g), b, &mut g);
            }
        }
        gens.push(g);
    }
    Ok(span_orthonormalize(&gens)?.basis)
}

fn projector(basis: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; k]; k];
    for b in basis {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    m
}

/// Uniformly paired stubs, restarting whenever the pairing gets stuck on a
/// loop or a repeated edge.
pub(crate) fn random_regular_graph(n: usize, d: usize, rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
    if d == 0 || d >= n || (n * d) % 2 != 0 {
        return Err(Error::Infeasible(format!("no simple {d}-regular graph on {n} vertices")));
    }
    'attempt: for _ in 0..1000 {
        let mut stubs: Vec<usize> = (0..n * d).map(|i| i / d).collect();
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let mut placed = false;
            for _ in 0..200 {
                let i = rng.gen_range(0..stubs.len());
                let j = rng.gen_range(0..stubs.len());
                let (u, v) = (stubs[i], stubs[j]);
                if i == j || u == v || seen.contains(&(u.min(v), u.max(v))) {
                    continue;
                }
                seen.insert((u.min(v), u.max(v)));
                edges.push((u.min(v), u.max(v)));
                let (hi, lo) = (i.max(j), i.min(j));
                stubs.swap_remove(hi);
                stubs.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                continue 'attempt;
            }
        }
        return Ok(edges);
    }
    Err(Error::Infeasible(format!("failed to sample a {d}-regular graph on {n} vertices")))
}
