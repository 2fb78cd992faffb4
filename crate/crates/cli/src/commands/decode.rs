use clap::Args;
use gug_core::decoder::{
    decode_polynomials, draw_globals, estimate_vertex_polynomials, norm_lemma_audit, zoom_consistency_metrics, DecoderConfig, DecoderTrace,
    GlobalDraws, NormLemmaAudit, YMode, ZoomConsistency,
};
use gug_core::geom::{dot, norm};
use gug_core::rng::SeedStream;
use gug_core::sni::{generate_planted_with, PlantedConfig, PlantedInstance};
use gug_core::ugsim::UgAssignment;
use serde::{Deserialize, Serialize};

use crate::output::{num, opt, Outcome};
use crate::{Check, CliResult, Context, Table};

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Flags {
    #[arg(long)]
    pub k: Option<usize>,
    /// Decoder degree.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "n")]
    pub n_vertices: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Antithetic pairs per vertex.
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: usize,
    pub d: usize,
    pub n_vertices: usize,
    pub degree: usize,
    pub delta: f64,
    pub pairs: usize,
    pub budget: usize,
    pub c0: f64,
    pub c1: f64,
    pub y_mode: YMode,
    pub min_defined_zero: f64,
    pub min_cosine: f64,
    pub min_agreement: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            k: 16,
            d: 4,
            n_vertices: 16,
            degree: 4,
            delta: 0.05,
            pairs: 1 << 16,
            budget: 1 << 16,
            c0: 0.25,
            c1: 0.5,
            y_mode: YMode::Orthonormal,
            min_defined_zero: 0.95,
            min_cosine: 0.95,
            min_agreement: 0.9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub globals: GlobalDraws,
    pub trace: DecoderTrace,
    /// Per vertex `<sigma(v), P sigma*> / |P sigma*|` with `P` onto `Y^perp`.
    pub cosines: Vec<Option<f64>>,
    /// Fraction with `i_v = 0` and cosine at least the threshold.
    pub zero_aligned_fraction: f64,
    pub audit: NormLemmaAudit,
    pub zoom: ZoomConsistency,
    /// `5 (delta / sqrt(k) + 1 / k)`
    pub zoom_bound: f64,
}

/// Planted zoom-aligned instance, folded half-space assignment and decoder.
pub fn round_trip(p: &Params, stream: &SeedStream) -> CliResult<(PlantedInstance, RoundTrip)> {
    let mut cfg = DecoderConfig::new(p.d, p.pairs, stream.named("decoder").seed());
    cfg.budget = p.budget;
    cfg.c0 = p.c0;
    cfg.c1 = p.c1;
    cfg.y_mode = p.y_mode;
    cfg.validate()?;
    let globals = draw_globals(p.k, &cfg, &stream.named("globals"))?;
    let mut pc = PlantedConfig::new(p.k, p.n_vertices, p.degree, p.delta);
    pc.zoom = Some(globals.y_span.clone());
    let planted = generate_planted_with(&pc, &stream.named("instance"))?;
    let a = UgAssignment::half_spaces(&planted.instance, &planted.labeling)?;
    let polys = estimate_vertex_polynomials(&a, &cfg, None)?;
    let (labeling, trace) = decode_polynomials(&polys, &globals, &cfg, None)?;
    let cosines: Vec<Option<f64>> = trace
        .vertices
        .iter()
        .enumerate()
        .map(|(v, t)| {
            let star = globals.y_span.project_out(planted.labeling.get(v)?);
            t.sigma.as_ref().map(|s| dot(s, &star) / norm(&star))
        })
        .collect();
    let good = trace.vertices.iter().zip(&cosines).filter(|(t, c)| t.i_v == Some(0) && c.is_some_and(|c| c >= p.min_cosine)).count();
    let audit = norm_lemma_audit(&trace);
    let zoom = zoom_consistency_metrics(&planted.instance, &labeling, &trace)?;
    let zoom_bound = 5.0 * (p.delta / (p.k as f64).sqrt() + 1.0 / p.k as f64);
    let zero_aligned_fraction = good as f64 / trace.vertices.len() as f64;
    Ok((planted, RoundTrip { globals, trace, cosines, zero_aligned_fraction, audit, zoom, zoom_bound }))
}

pub fn run(ctx: &Context, flags: &Flags) -> CliResult<Outcome> {
    let p: Params = ctx.resolve(flags)?;
    let (_, r) = round_trip(&p, &super::stream(ctx))?;
    let mut table = Table::new(&["vertex", "i_v", "cosine", "norm_sq", "steps"]);
    for (t, c) in r.trace.vertices.iter().zip(&r.cosines) {
        let norms: Vec<String> = t.steps.iter().map(|s| num(s.shifted_deg1_norm_sq)).collect();
        table.push(vec![
            t.vertex.to_string(),
            t.i_v.map(|i| i.to_string()).unwrap_or_default(),
            opt(*c),
            opt(t.steps.first().map(|s| s.norm_sq)),
            norms.join(";"),
        ]);
    }
    let checks = vec![
        Check::new(
            "defined at step 0 and aligned",
            r.zero_aligned_fraction >= p.min_defined_zero,
            format!("{:.3} of vertices have i_v = 0 and cosine >= {} (need {})", r.zero_aligned_fraction, p.min_cosine, p.min_defined_zero),
        ),
        Check::new("degree drop", r.audit.degree_violations.is_empty(), format!("{} violations of deg D^(i) <= d - i", r.audit.degree_violations.len())),
        Check::new(
            "zoom median",
            r.zoom.median <= r.zoom_bound,
            format!("median projected distance {:.4} over {} edges vs {:.4}", r.zoom.median, r.zoom.measured_edges, r.zoom_bound),
        ),
        Check::new("index agreement", r.zoom.index_agreement >= p.min_agreement, format!("{:.3} (need {})", r.zoom.index_agreement, p.min_agreement)),
    ];
    Outcome::new(&p, table, &r, checks)
}
