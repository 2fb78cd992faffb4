//! Extraction of unit-vector labels from folded Boolean assignments by
//! repeated differentiation of low-degree parts along random directions.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot, norm, sample_gaussian, span_orthonormalize, SubspaceSpan};
use crate::hermite::{project_low_degree, LowDegreeOptions};
use crate::poly::{hermite_to_monomial, AffineForm, SparsePoly};
use crate::rng::SeedStream;
use crate::sni::{Labeling, SniInstance, ZOOM_TOL};
use crate::stats::median;
use crate::ugsim::UgAssignment;

/// How the shift `y` inside `Y` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum YMode {
    /// Standard Gaussian in an orthonormal basis of `Y`.
    Orthonormal,
    /// Standard Gaussian combination of the raw generators.
    Generators,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub d: usize,
    pub c0: f64,
    pub c1: f64,
    /// Antithetic pairs per vertex for the low-degree estimate.
    pub pairs: usize,
    /// Largest number of coefficients estimated per vertex.
    pub budget: usize,
    pub seed: u64,
    pub y_mode: YMode,
    /// Run the differentiation chain to `d - 1` even after stopping, for audits.
    pub full_chain: bool,
}

impl DecoderConfig {
    pub fn new(d: usize, pairs: usize, seed: u64) -> Self {
        DecoderConfig { d, c0: 0.25, c1: 0.5, pairs, budget: 1 << 16, seed, y_mode: YMode::Orthonormal, full_chain: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidArgument(format!("d = {} must be at least 2", self.d)));
        }
        if !(0.0 < self.c0 && self.c0 < self.c1 && self.c1 < 1.0) {
            return Err(Error::InvalidArgument(format!("need 0 < c0 < c1 < 1, got {} and {}", self.c0, self.c1)));
        }
        Ok(())
    }

    /// `[c0, c1] * 2^(-2 d log2 d)`
    pub fn eta_range(&self) -> (f64, f64) {
        let d = self.d as f64;
        let scale = 2f64.powf(-2.0 * d * d.log2());
        (self.c0 * scale, self.c1 * scale)
    }
}

/// Threshold `eta`, directions `y_1..y_{d-1}`, their span and the shift `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalDraws {
    pub eta: f64,
    pub y_span: SubspaceSpan,
    pub y: Vec<f64>,
    /// Orthonormal basis of `Y^perp`.
    pub complement: Vec<Vec<f64>>,
}

impl GlobalDraws {
    pub fn directions(&self) -> &[Vec<f64>] {
        &self.y_span.generators
    }
}

pub fn draw_globals(k: usize, cfg: &DecoderConfig, stream: &SeedStream) -> Result<GlobalDraws> {
    cfg.validate()?;
    if cfg.d * (cfg.d - 1) > k.saturating_sub(2) {
        return Err(Error::InvalidArgument(format!("d (d - 1) = {} exceeds k - 2 = {}", cfg.d * (cfg.d - 1), k as i64 - 2)));
    }
    let mut rng = stream.named("globals").rng();
    let (lo, hi) = cfg.eta_range();
    let eta = rng.gen_range(lo..hi);
    let mut last = None;
    for _ in 0..2 {
        let gens: Vec<Vec<f64>> = (0..cfg.d - 1).map(|_| sample_gaussian(k, &mut rng)).collect();
        match span_orthonormalize(&gens) {
            Ok(y_span) => {
                let coords = sample_gaussian(cfg.d - 1, &mut rng);
                let from = match cfg.y_mode {
                    YMode::Orthonormal => &y_span.basis,
                    YMode::Generators => &y_span.generators,
                };
                let mut y = vec![0.0; k];
                for (c, b) in coords.iter().zip(from) {
                    crate::geom::axpy(*c, b, &mut y);
                }
                let complement = y_span.complement();
                return Ok(GlobalDraws { eta, y_span, y, complement });
            }
            Err(e) => {
                log::warn!("degenerate direction draw, resampling: {e}");
                last = Some(e);
            }
        }
    }
    Err(last.expect("two failed attempts"))
}

/// A vertex's low-degree part as an exact polynomial in the coordinates of
/// an orthonormal `basis` of the subspace it depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexPolynomial {
    pub poly: SparsePoly,
    pub basis: Vec<Vec<f64>>,
}

impl VertexPolynomial {
    /// A polynomial written in ambient coordinates.
    pub fn ambient(poly: SparsePoly) -> Self {
        let basis = crate::sni::identity_basis(poly.dim);
        VertexPolynomial { poly, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.first().map_or(0, Vec::len)
    }
}

/// Estimates `f^{<=d}` in the function's invariant coordinates.
pub fn low_degree_polynomial(f: &dyn crate::functions::GaussFn, cfg: &DecoderConfig, stream: &SeedStream) -> Result<VertexPolynomial> {
    let basis = f.invariant_basis().map(<[Vec<f64>]>::to_vec).unwrap_or_else(|| crate::sni::identity_basis(f.dim()));
    let mut opts = LowDegreeOptions::new(cfg.d, cfg.pairs).with_basis(basis.clone());
    opts.budget = cfg.budget;
    let est = project_low_degree(f, &opts, stream)?;
    Ok(VertexPolynomial { poly: hermite_to_monomial(&est.series)?, basis })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub i: usize,
    /// Exact degree of `D^{(i)}`.
    pub degree: usize,
    /// Exact `|D^{(i)}|_2^2`.
    pub norm_sq: f64,
    /// Exact `E[D^{(i)}]`.
    pub mean: f64,
    /// Exact `|(D_y^{(i)})^{=1}|_2^2` of the shift onto `Y^perp`.
    pub shifted_deg1_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VertexTrace {
    pub vertex: usize,
    pub typical: bool,
    pub i_v: Option<usize>,
    pub steps: Vec<StepRecord>,
    pub vec: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderTrace {
    pub d: usize,
    pub globals: GlobalDraws,
    pub vertices: Vec<VertexTrace>,
}

impl DecoderTrace {
    pub fn defined_fraction(&self) -> f64 {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().filter(|v| v.i_v.is_some()).count() as f64 / n
    }
}

/// Runs the differentiation loop on one exact polynomial.
pub fn decode_polynomial(vp: &VertexPolynomial, globals: &GlobalDraws, d: usize, full_chain: bool) -> Result<VertexTrace> {
    let k = vp.ambient_dim();
    if globals.y.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: globals.y.len() });
    }
    let c = &globals.complement;
    // coordinates z_j = <b_j, y + C u>
    let forms: Vec<AffineForm> = vp
        .basis
        .iter()
        .map(|b| AffineForm { constant: dot(b, &globals.y), coeffs: c.iter().map(|col| dot(b, col)).collect() })
        .collect();
    let mut trace = VertexTrace { typical: true, ..Default::default() };
    let mut current = vp.poly.clone();
    for i in 0..d {
        if i > 0 {
            let dir: Vec<f64> = vp.basis.iter().map(|b| dot(b, &globals.directions()[i - 1])).collect();
            current = current.directional_derivative(&dir)?;
        }
        let shifted = current.linear_substitute(&forms, c.len())?;
        let deg1 = shifted.degree1_part()?;
        let shifted_deg1_norm_sq = dot(&deg1, &deg1);
        trace.steps.push(StepRecord {
            i,
            degree: current.degree(),
            norm_sq: current.l2_norm_sq()?,
            mean: current.gaussian_moment()?,
            shifted_deg1_norm_sq,
        });
        if trace.i_v.is_none() && shifted_deg1_norm_sq >= globals.eta {
            let mut vec = vec![0.0; k];
            for (a, col) in deg1.iter().zip(c) {
                crate::geom::axpy(*a, col, &mut vec);
            }
            let len = norm(&vec);
            trace.i_v = Some(i);
            trace.sigma = Some(vec.iter().map(|x| x / len).collect());
            trace.vec = Some(vec);
            if !full_chain {
                break;
            }
        }
    }
    Ok(trace)
}

/// Decodes precomputed vertex polynomials; atypical vertices stay undefined.
pub fn decode_polynomials(
    polys: &[VertexPolynomial],
    globals: &GlobalDraws,
    cfg: &DecoderConfig,
    typical: Option<&[bool]>,
) -> Result<(Labeling, DecoderTrace)> {
    use rayon::prelude::*;
    let traces: Vec<VertexTrace> = polys
        .par_iter()
        .enumerate()
        .map(|(v, vp)| {
            if typical.map_or(true, |t| t[v]) {
                let mut tr = decode_polynomial(vp, globals, cfg.d, cfg.full_chain)?;
                tr.vertex = v;
                Ok(tr)
            } else {
                Ok(VertexTrace { vertex: v, typical: false, ..Default::default() })
            }
        })
        .collect::<Result<_>>()?;
    let labeling = Labeling { labels: traces.iter().map(|t| t.sigma.clone()).collect() };
    Ok((labeling, DecoderTrace { d: cfg.d, globals: globals.clone(), vertices: traces }))
}

/// Low-degree estimate per vertex, one seed stream per vertex.
pub fn estimate_vertex_polynomials(assignment: &UgAssignment, cfg: &DecoderConfig, typical: Option<&[bool]>) -> Result<Vec<VertexPolynomial>> {
    let stream = SeedStream::new(cfg.seed).named("low-degree");
    assignment
        .functions
        .iter()
        .enumerate()
        .map(|(v, f)| {
            if typical.map_or(true, |t| t[v]) {
                low_degree_polynomial(f.as_ref(), cfg, &stream.child(v as u64))
            } else {
                Ok(VertexPolynomial::ambient(SparsePoly::zero(f.dim())))
            }
        })
        .collect()
}

pub fn decode(
    inst: &SniInstance,
    assignment: &UgAssignment,
    cfg: &DecoderConfig,
    typical: Option<&[bool]>,
) -> Result<(Labeling, DecoderTrace)> {
    let globals = draw_globals(inst.k, cfg, &SeedStream::new(cfg.seed))?;
    decode_with_globals(inst, assignment, cfg, &globals, typical)
}

pub fn decode_with_globals(
    inst: &SniInstance,
    assignment: &UgAssignment,
    cfg: &DecoderConfig,
    globals: &GlobalDraws,
    typical: Option<&[bool]>,
) -> Result<(Labeling, DecoderTrace)> {
    cfg.validate()?;
    if let Some(t) = typical {
        if t.len() != inst.n_vertices() {
            return Err(Error::DimensionMismatch { expected: inst.n_vertices(), got: t.len() });
        }
    }
    let polys = estimate_vertex_polynomials(assignment, cfg, typical)?;
    decode_polynomials(&polys, globals, cfg, typical)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub i: usize,
    /// Vertices whose loop executed step `i`.
    pub executed: usize,
    /// Vertices with a recorded step `i`, executed or not.
    pub recorded: usize,
    pub mean_norm_sq: f64,
    /// `0.99 - eta i`
    pub norm_bound: f64,
    /// Mean of `E[D^{(i)}]^2` over executed steps.
    pub mean_const_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLemmaAudit {
    pub eta: f64,
    /// `(vertex, i, degree)` for every step with `degree > d - i`.
    pub degree_violations: Vec<(usize, usize, usize)>,
    pub steps: Vec<StepAudit>,
}

/// Step `i` counts as executed when no earlier step met the threshold.
pub fn norm_lemma_audit(trace: &DecoderTrace) -> NormLemmaAudit {
    let d = trace.d;
    let eta = trace.globals.eta;
    let mut degree_violations = Vec::new();
    let mut steps = Vec::with_capacity(d);
    for i in 0..d {
        let mut executed = 0;
        let mut recorded = 0;
        let mut norm_sum = 0.0;
        let mut const_sum = 0.0;
        for vt in &trace.vertices {
            let Some(s) = vt.steps.get(i) else { continue };
            recorded += 1;
            norm_sum += s.norm_sq;
            if s.degree > d - i {
                degree_violations.push((vt.vertex, i, s.degree));
            }
            if vt.i_v.map_or(true, |iv| iv >= i) {
                executed += 1;
                const_sum += s.mean * s.mean;
            }
        }
        steps.push(StepAudit {
            i,
            executed,
            recorded,
            mean_norm_sq: if recorded == 0 { f64::NAN } else { norm_sum / recorded as f64 },
            norm_bound: 0.99 - eta * i as f64,
            mean_const_sq: if executed == 0 { f64::NAN } else { const_sum / executed as f64 },
        });
    }
    NormLemmaAudit { eta, degree_violations, steps }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomConsistency {
    /// Edges whose hyperplane contains `Y`.
    pub aligned_edges: usize,
    /// Aligned edges with both endpoints decoded.
    pub measured_edges: usize,
    pub distances: Vec<f64>,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
    /// Fraction of measured edges with `i_u = i_v`.
    pub index_agreement: f64,
}

/// Projected distances on `S_e = Theta_e^perp ∩ Y^perp` over edges aligned with `Y`.
pub fn zoom_consistency_metrics(inst: &SniInstance, labeling: &Labeling, trace: &DecoderTrace) -> Result<ZoomConsistency> {
    let y = &trace.globals.y_span;
    let aligned: Vec<usize> = (0..inst.edges.len()).filter(|&e| y.overlap(&inst.edges[e].theta) <= ZOOM_TOL).collect();
    if aligned.is_empty() {
        return Err(Error::Infeasible(
            "no edge hyperplane contains Y; regenerate the instance with edges aligned to the decoder's directions".into(),
        ));
    }
    let mut distances = Vec::new();
    let mut agree = 0usize;
    for &e in &aligned {
        let edge = &inst.edges[e];
        if let (Some(_), Some(_)) = (labeling.get(edge.u), labeling.get(edge.v)) {
            distances.push(crate::sni::edge_deviation(inst, labeling, e, Some(y))?);
            if trace.vertices[edge.u].i_v == trace.vertices[edge.v].i_v {
                agree += 1;
            }
        }
    }
    let measured_edges = distances.len();
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let q90 = sorted.get(((sorted.len() as f64 * 0.9).ceil() as usize).saturating_sub(1)).copied().unwrap_or(f64::NAN);
    Ok(ZoomConsistency {
        aligned_edges: aligned.len(),
        measured_edges,
        median: median(&distances),
        q90,
        max: sorted.last().copied().unwrap_or(f64::NAN),
        index_agreement: if measured_edges == 0 { 0.0 } else { agree as f64 / measured_edges as f64 },
        distances,
    })
}
