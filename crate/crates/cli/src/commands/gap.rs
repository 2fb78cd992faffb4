use std::path::PathBuf;

use clap::Args;
use gug_core::sni::{edge_deviation, generate_gap_instance_with, sign_search, write_instance_file, GapConfig, GapInstance, SignSearchReport};
use serde::{Deserialize, Serialize};

use crate::output::{num, Outcome};
use crate::{Check, CliResult, Context, Table};

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Flags {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Grid spacing of vertex vectors and normals.
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long = "n")]
    pub n_vertices: Option<usize>,
    /// Vertices in the exhaustive sign search (at most 20).
    #[arg(long)]
    pub search_vertices: Option<usize>,
    /// Also write the instance in the text format.
    #[arg(long)]
    pub instance_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: usize,
    pub delta: f64,
    pub resolution: f64,
    pub n_vertices: usize,
    pub degree: usize,
    pub max_vertices: usize,
    pub search_vertices: usize,
    pub instance_out: Option<PathBuf>,
    pub relative_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        let g = GapConfig::new(16, 0.05, 1e-4);
        Params {
            k: g.k,
            delta: g.delta,
            resolution: g.resolution,
            n_vertices: g.n_vertices,
            degree: g.degree,
            max_vertices: g.max_vertices,
            search_vertices: 12,
            instance_out: None,
            relative_tol: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub mean_sq_deviation: f64,
    pub deviations: Vec<f64>,
    pub search: SignSearchReport,
    /// `0.5 sqrt(delta)`
    pub search_floor: f64,
}

pub fn gap_report(p: &Params, stream: &gug_core::rng::SeedStream) -> CliResult<(GapInstance, GapReport)> {
    let cfg = GapConfig {
        k: p.k,
        delta: p.delta,
        resolution: p.resolution,
        n_vertices: p.n_vertices,
        degree: p.degree,
        max_vertices: p.max_vertices,
    };
    let gap = generate_gap_instance_with(&cfg, stream)?;
    let lab = gap.prescribed_labeling();
    let deviations = (0..gap.instance.edges.len()).map(|e| edge_deviation(&gap.instance, &lab, e, None)).collect::<gug_core::Result<Vec<_>>>()?;
    let mean_sq_deviation = deviations.iter().map(|d| d * d).sum::<f64>() / deviations.len() as f64;
    let search = sign_search(&gap, p.search_vertices)?;
    Ok((gap, GapReport { mean_sq_deviation, deviations, search, search_floor: 0.5 * p.delta.sqrt() }))
}

pub fn run(ctx: &Context, flags: &Flags) -> CliResult<Outcome> {
    let p: Params = ctx.resolve(flags)?;
    let (gap, r) = gap_report(&p, &super::stream(ctx))?;
    if let Some(path) = &p.instance_out {
        let d = p.delta.to_string();
        write_instance_file(&gap.instance, &[("kind", "gap"), ("delta", &d), ("version", crate::ARTIFACT_VERSION)], path)?;
    }
    let mut table = Table::new(&["edge", "u", "v", "deviation"]);
    for (i, (e, d)) in gap.instance.edges.iter().zip(&r.deviations).enumerate() {
        table.push(vec![i.to_string(), e.u.to_string(), e.v.to_string(), num(*d)]);
    }
    let rel = (r.mean_sq_deviation - p.delta).abs() / p.delta;
    let checks = vec![
        Check::new(
            "prescribed value",
            rel <= p.relative_tol,
            format!("mean squared deviation {:.5} vs delta {} (relative error {:.3})", r.mean_sq_deviation, p.delta, rel),
        ),
        Check::new(
            "sign search",
            r.search.min_median_deviation >= r.search_floor,
            format!(
                "best median deviation {:.4} over {} labelings of {} vertices vs 0.5 sqrt(delta) = {:.4}",
                r.search.min_median_deviation,
                r.search.assignments,
                r.search.vertices.len(),
                r.search_floor
            ),
        ),
    ];
    Outcome::new(&p, table, &r, checks)
}
