use clap::Args;
use gug_core::ugsim::{completeness_experiment, CompletenessConfig, CompletenessReport};
use serde::{Deserialize, Serialize};

use crate::output::{num, Outcome};
use crate::{Check, CliResult, Context, Table};

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Flags {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "n")]
    pub n_vertices: Option<usize>,
    /// Graph degree.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Noise-test probability (default from delta, beta and k).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub edge_trials: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub k: usize,
    pub n_vertices: usize,
    pub degree: usize,
    pub delta: f64,
    pub beta: f64,
    pub c: f64,
    pub p: Option<f64>,
    pub trials: usize,
    pub edge_trials: usize,
    /// Largest accepted |z| of the noise rate against the arccos oracle.
    pub noise_z_max: f64,
}

impl Default for Params {
    fn default() -> Self {
        let d = CompletenessConfig::default();
        Params {
            k: d.k,
            n_vertices: d.n_vertices,
            degree: d.degree,
            delta: d.delta,
            beta: d.beta,
            c: d.c,
            p: d.p,
            trials: d.trials,
            edge_trials: d.edge_trials,
            noise_z_max: 3.0,
        }
    }
}

impl Params {
    pub fn experiment(&self) -> CompletenessConfig {
        CompletenessConfig {
            k: self.k,
            n_vertices: self.n_vertices,
            degree: self.degree,
            delta: self.delta,
            beta: self.beta,
            c: self.c,
            p: self.p,
            trials: self.trials,
            edge_trials: self.edge_trials,
        }
    }
}

pub fn checks(r: &CompletenessReport, noise_z_max: f64) -> Vec<Check> {
    vec![
        Check::new(
            "rejection",
            r.game.rejection <= r.rejection_bound,
            format!("rejection {:.4e} vs 10 delta / sqrt(k) = {:.4e}", r.game.rejection, r.rejection_bound),
        ),
        Check::new(
            "consistency component",
            r.consistency_rate <= r.consistency_bound,
            format!(
                "consistency rejection {:.4e} vs 2 delta x per-violated-edge {:.4e} = {:.4e}",
                r.consistency_rate, r.per_violated_rejection, r.consistency_bound
            ),
        ),
        Check::new(
            "noise component",
            r.noise_z.abs() <= noise_z_max,
            format!("noise rejection {:.4e} +- {:.1e} vs arccos oracle {:.4e} (z = {:.2})", r.noise_rate, r.noise_se, r.noise_oracle, r.noise_z),
        ),
    ]
}

pub fn run(ctx: &Context, flags: &Flags) -> CliResult<Outcome> {
    let p: Params = ctx.resolve(flags)?;
    let r = completeness_experiment(&p.experiment(), &super::stream(ctx))?;
    let mut table = Table::new(&["quantity", "value", "std_error", "bound"]);
    table.push(vec!["rejection".into(), num(r.game.rejection), String::new(), num(r.rejection_bound)]);
    table.push(vec!["noise".into(), num(r.noise_rate), num(r.noise_se), num(r.noise_oracle)]);
    table.push(vec!["consistency".into(), num(r.consistency_rate), String::new(), num(r.consistency_bound)]);
    table.push(vec!["per_violated_edge".into(), num(r.per_violated_rejection), String::new(), String::new()]);
    table.push(vec!["violated_edges".into(), r.violated_edges.to_string(), String::new(), String::new()]);
    table.push(vec!["satisfied_edge_rejections".into(), r.satisfied_rejections.to_string(), String::new(), "0".into()]);
    let checks = checks(&r, p.noise_z_max);
    Outcome::new(&p, table, &r, checks)
}
