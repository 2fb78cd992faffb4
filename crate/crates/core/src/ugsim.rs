//! Monte Carlo simulation of the two-test verifier over folded assignments.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{check_folded, fold, GaussFn, HalfSpace};
use crate::geom::{dot, sample_gaussian};
use crate::rng::{chunked, fill_normal, Rng, SeedStream, CHUNK};
use crate::sni::{Labeling, SniInstance};
use crate::stats::{wilson_interval, EstimateWithError};

/// Upper bound applied to `p` when the default formula exceeds 1.
pub const P_CAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifierParams {
    pub c: f64,
    pub delta: f64,
    pub beta: f64,
    /// Probability of running the noise test; 0 and 1 select a single test.
    pub p: f64,
}

impl VerifierParams {
    pub fn new(c: f64, delta: f64, beta: f64, p: f64) -> Result<Self> {
        if c < 1.0 {
            return Err(Error::InvalidArgument(format!("C = {c} must be at least 1")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("beta = {beta} must lie in (0, 1)")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p = {p} must lie in [0, 1]")));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
        }
        Ok(VerifierParams { c, delta, beta, p })
    }

    pub fn default_beta(c: f64) -> f64 {
        1.0 / (1e10 * c * c)
    }

    /// `p = delta / sqrt(beta k)`, capped at [`P_CAP`] when that exceeds 1.
    pub fn default_p(delta: f64, beta: f64, k: usize) -> f64 {
        let p = delta / (beta * k as f64).sqrt();
        if p >= 1.0 {
            log::warn!("delta / sqrt(beta k) = {p:.3} is not a probability; using p = {P_CAP}");
            P_CAP
        } else {
            p
        }
    }

    pub fn with_beta(c: f64, delta: f64, beta: f64, k: usize) -> Result<Self> {
        Self::new(c, delta, beta, Self::default_p(delta, beta, k))
    }

    pub fn defaults(c: f64, delta: f64, k: usize) -> Result<Self> {
        Self::with_beta(c, delta, Self::default_beta(c), k)
    }
}

/// Rejection probability of the noise test on a half-space.
pub fn noise_rejection_oracle(beta: f64) -> f64 {
    ((1.0 - beta) * (1.0 - beta)).clamp(-1.0, 1.0).acos() / PI
}

/// One noise test; `true` means accept.
pub fn noise_test(f: &dyn GaussFn, beta: f64, rng: &mut Rng) -> bool {
    let k = f.dim();
    let a = 1.0 - beta;
    let b = (2.0 * beta - beta * beta).sqrt();
    let mut y = vec![0.0; k];
    let mut x = vec![0.0; k];
    let mut z = vec![0.0; k];
    fill_normal(rng, &mut y);
    fill_normal(rng, &mut x);
    fill_normal(rng, &mut z);
    for i in 0..k {
        x[i] = a * y[i] + b * x[i];
        z[i] = a * y[i] + b * z[i];
    }
    f.eval(&x) == f.eval(&z)
}

/// One consistency test on a Gaussian point of `theta^perp`; `true` means accept.
pub fn consistency_test(fu: &dyn GaussFn, fv: &dyn GaussFn, theta: &[f64], rng: &mut Rng) -> bool {
    let mut x = sample_gaussian(theta.len(), rng);
    let t = dot(&x, theta);
    for (xi, ti) in x.iter_mut().zip(theta) {
        *xi -= t * ti;
    }
    fu.eval(&x) == fv.eval(&x)
}

/// One folded function per vertex.
#[derive(Clone)]
pub struct UgAssignment {
    pub functions: Vec<Arc<dyn GaussFn>>,
}

impl std::fmt::Debug for UgAssignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UgAssignment").field("vertices", &self.functions.len()).finish()
    }
}

impl UgAssignment {
    /// Checks every function for anti-symmetry and 0-homogeneity.
    pub fn new(inst: &SniInstance, functions: Vec<Arc<dyn GaussFn>>, stream: &SeedStream) -> Result<Self> {
        if functions.len() != inst.n_vertices() {
            return Err(Error::DimensionMismatch { expected: inst.n_vertices(), got: functions.len() });
        }
        for (v, f) in functions.iter().enumerate() {
            if f.dim() != inst.k {
                return Err(Error::DimensionMismatch { expected: inst.k, got: f.dim() });
            }
            check_folded(f.as_ref(), 32, &stream.child(v as u64))
                .map_err(|e| Error::InvalidFunction(format!("vertex {v}: {e}")))?;
        }
        Ok(UgAssignment { functions })
    }

    /// Folded half-space encoding of every label.
    pub fn half_spaces(inst: &SniInstance, labeling: &Labeling) -> Result<Self> {
        let functions = (0..inst.n_vertices())
            .map(|v| {
                let sigma = labeling.get(v).ok_or_else(|| Error::InvalidArgument(format!("vertex {v} is unlabeled")))?;
                let f: Arc<dyn GaussFn> = Arc::new(fold(Arc::new(HalfSpace::new(sigma)?), &inst.constraints[v])?);
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UgAssignment { functions })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestCounts {
    pub trials: u64,
    pub rejections: u64,
}

impl TestCounts {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 { 0.0 } else { self.rejections as f64 / self.trials as f64 }
    }

    pub fn estimate(&self) -> EstimateWithError {
        let r = self.rate();
        let n = self.trials.max(1) as f64;
        EstimateWithError { value: r, std_error: (r * (1.0 - r) / n).sqrt(), n_samples: self.trials }
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.rejections, self.trials, 1.96)
    }

    fn merge(self, o: TestCounts) -> TestCounts {
        TestCounts { trials: self.trials + o.trials, rejections: self.rejections + o.rejections }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameValueReport {
    pub params: VerifierParams,
    pub trials: u64,
    pub seed: u64,
    pub acceptance: EstimateWithError,
    pub acceptance_ci95: (f64, f64),
    pub rejection: f64,
    pub noise: TestCounts,
    pub consistency: TestCounts,
}

pub fn estimate_game_value(
    inst: &SniInstance,
    assignment: &UgAssignment,
    params: &VerifierParams,
    trials: usize,
    stream: &SeedStream,
) -> Result<GameValueReport> {
    if assignment.functions.len() != inst.n_vertices() {
        return Err(Error::DimensionMismatch { expected: inst.n_vertices(), got: assignment.functions.len() });
    }
    if inst.edges.is_empty() && params.p < 1.0 {
        return Err(Error::InvalidArgument("instance has no edges".into()));
    }
    let parts = chunked(stream, trials, CHUNK, |rng, _, count| {
        let mut noise = TestCounts { trials: 0, rejections: 0 };
        let mut cons = noise;
        for _ in 0..count {
            if rng.gen::<f64>() < params.p {
                let v = rng.gen_range(0..inst.n_vertices());
                noise.trials += 1;
                if !noise_test(assignment.functions[v].as_ref(), params.beta, rng) {
                    noise.rejections += 1;
                }
            } else {
                let e = &inst.edges[rng.gen_range(0..inst.edges.len())];
                cons.trials += 1;
                if !consistency_test(assignment.functions[e.u].as_ref(), assignment.functions[e.v].as_ref(), &e.theta, rng) {
                    cons.rejections += 1;
                }
            }
        }
        (noise, cons)
    });
    let zero = TestCounts { trials: 0, rejections: 0 };
    let (noise, consistency) = parts.into_iter().fold((zero, zero), |(a, b), (c, d)| (a.merge(c), b.merge(d)));
    let total = noise.merge(consistency);
    let rejection = total.rate();
    let (lo, hi) = total.wilson();
    let est = total.estimate();
    Ok(GameValueReport {
        params: *params,
        trials: trials as u64,
        seed: stream.seed(),
        acceptance: EstimateWithError { value: 1.0 - rejection, ..est },
        acceptance_ci95: (1.0 - hi, 1.0 - lo),
        rejection,
        noise,
        consistency,
    })
}

/// Noise-test rejection rate of a single function.
pub fn noise_rejection(f: &dyn GaussFn, beta: f64, trials: usize, stream: &SeedStream) -> TestCounts {
    let parts = chunked(stream, trials, CHUNK, |rng, _, count| {
        (0..count).filter(|_| !noise_test(f, beta, rng)).count() as u64
    });
    TestCounts { trials: trials as u64, rejections: parts.into_iter().sum() }
}

/// Consistency-test rejection rate of one edge.
pub fn edge_rejection(inst: &SniInstance, assignment: &UgAssignment, e: usize, trials: usize, stream: &SeedStream) -> TestCounts {
    let edge = &inst.edges[e];
    let (fu, fv) = (assignment.functions[edge.u].as_ref(), assignment.functions[edge.v].as_ref());
    let parts = chunked(stream, trials, CHUNK, |rng, _, count| {
        (0..count).filter(|_| !consistency_test(fu, fv, &edge.theta, rng)).count() as u64
    });
    TestCounts { trials: trials as u64, rejections: parts.into_iter().sum() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalityReport {
    pub vertex_threshold: f64,
    pub edge_threshold: f64,
    pub vertex_rates: Vec<f64>,
    pub edge_rates: Vec<f64>,
    pub vertex_typical: Vec<bool>,
    pub edge_typical: Vec<bool>,
    pub vertex_fraction: f64,
    pub edge_fraction: f64,
}

/// Empirical per-vertex noise rejection and per-edge consistency rejection,
/// flagged against `100 C sqrt(beta)` and `20 C delta / sqrt(k)`.
pub fn typicality_report(
    inst: &SniInstance,
    assignment: &UgAssignment,
    params: &VerifierParams,
    trials: usize,
    stream: &SeedStream,
) -> TypicalityReport {
    let vertex_threshold = 100.0 * params.c * params.beta.sqrt();
    let edge_threshold = 20.0 * params.c * params.delta / (inst.k as f64).sqrt();
    let vs = stream.named("vertices");
    let es = stream.named("edges");
    let vertex_rates: Vec<f64> = (0..inst.n_vertices())
        .map(|v| noise_rejection(assignment.functions[v].as_ref(), params.beta, trials, &vs.child(v as u64)).rate())
        .collect();
    let vertex_typical: Vec<bool> = vertex_rates.iter().map(|&r| r <= vertex_threshold).collect();
    let edge_rates: Vec<f64> = (0..inst.edges.len())
        .map(|e| edge_rejection(inst, assignment, e, trials, &es.child(e as u64)).rate())
        .collect();
    let edge_typical: Vec<bool> = inst
        .edges
        .iter()
        .zip(&edge_rates)
        .map(|(e, &r)| vertex_typical[e.u] && vertex_typical[e.v] && r <= edge_threshold)
        .collect();
    let frac = |b: &[bool]| if b.is_empty() { 0.0 } else { b.iter().filter(|x| **x).count() as f64 / b.len() as f64 };
    TypicalityReport {
        vertex_threshold,
        edge_threshold,
        vertex_fraction: frac(&vertex_typical),
        edge_fraction: frac(&edge_typical),
        vertex_rates,
        edge_rates,
        vertex_typical,
        edge_typical,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessConfig {
    pub k: usize,
    pub n_vertices: usize,
    pub degree: usize,
    pub delta: f64,
    pub beta: f64,
    pub c: f64,
    /// Overrides the default noise-test probability.
    pub p: Option<f64>,
    pub trials: usize,
    /// Consistency trials per violated edge.
    pub edge_trials: usize,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig {
            k: 16,
            n_vertices: 64,
            degree: 4,
            delta: 0.05,
            beta: 1e-4,
            c: 1.0,
            p: None,
            trials: 1 << 21,
            edge_trials: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub config: CompletenessConfig,
    pub game: GameValueReport,
    /// `10 delta / sqrt(k)`.
    pub rejection_bound: f64,
    pub noise_rate: f64,
    pub noise_se: f64,
    pub noise_oracle: f64,
    pub noise_z: f64,
    pub consistency_rate: f64,
    pub violated_edges: usize,
    /// Mean consistency rejection over violated edges.
    pub per_violated_rejection: f64,
    /// `2 delta` times the per-violated-edge rejection.
    pub consistency_bound: f64,
    /// Rejections observed on satisfied edges in the per-edge runs.
    pub satisfied_rejections: u64,
}

/// Planted instance, folded half-space assignment and a full verifier run.
pub fn completeness_experiment(cfg: &CompletenessConfig, stream: &SeedStream) -> Result<CompletenessReport> {
    let planted = crate::sni::generate_planted_with(
        &crate::sni::PlantedConfig::new(cfg.k, cfg.n_vertices, cfg.degree, cfg.delta),
        &stream.named("instance"),
    )?;
    let inst = &planted.instance;
    let assignment = UgAssignment::half_spaces(inst, &planted.labeling)?;
    let params = match cfg.p {
        Some(p) => VerifierParams::new(cfg.c, cfg.delta, cfg.beta, p)?,
        None => VerifierParams::with_beta(cfg.c, cfg.delta, cfg.beta, cfg.k)?,
    };
    let game = estimate_game_value(inst, &assignment, &params, cfg.trials, &stream.named("verifier"))?;
    let es = stream.named("edges");
    let mut viol_sum = 0.0;
    for &e in &planted.violated {
        viol_sum += edge_rejection(inst, &assignment, e, cfg.edge_trials, &es.child(e as u64)).rate();
    }
    let violated_edges = planted.violated.len();
    let per_violated_rejection = if violated_edges == 0 { 0.0 } else { viol_sum / violated_edges as f64 };
    let satisfied_rejections = (0..inst.edges.len())
        .filter(|e| planted.violated.binary_search(e).is_err())
        .take(16)
        .map(|e| edge_rejection(inst, &assignment, e, cfg.edge_trials / 16, &es.child(e as u64)).rejections)
        .sum();
    let noise = game.noise.estimate();
    let noise_oracle = noise_rejection_oracle(cfg.beta);
    let noise_z = if noise.std_error > 0.0 { (noise.value - noise_oracle) / noise.std_error } else { f64::INFINITY };
    Ok(CompletenessReport {
        config: cfg.clone(),
        rejection_bound: 10.0 * cfg.delta / (cfg.k as f64).sqrt(),
        noise_rate: noise.value,
        noise_se: noise.std_error,
        noise_oracle,
        noise_z,
        consistency_rate: game.consistency.rate(),
        violated_edges,
        per_violated_rejection,
        consistency_bound: 2.0 * cfg.delta * per_violated_rejection,
        satisfied_rejections,
        game,
    })
}
