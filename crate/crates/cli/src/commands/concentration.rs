use clap::{Args, ValueEnum};
use gug_core::conclab::{restricted_vs_global, scaling_fit, theta4_probe, ConcentrationConfig, ConcentrationRecord, ScalingFit, SphereProfile, Theta4Config, Theta4Report};
use gug_core::functions::{Constant, GaussFn, HalfSpace};
use serde::{Deserialize, Serialize};

use crate::output::{num, opt, Outcome};
use crate::{Check, CliError, CliResult, Context, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FnKind {
    Halfspace,
    Constant,
    /// `h(sqrt(n) x_1 / |x|)` normalized, with `h` from `--profile`.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Mean statistic per dimension and the log-log slope.
    Scaling,
    /// Statistic binned by the first coordinate of the normal.
    Theta4,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Flags {
    #[arg(long = "fn", value_enum)]
    #[serde(rename = "function")]
    pub function: Option<FnKind>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Tensor degree.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated ambient dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub theta_draws: Option<usize>,
    #[arg(long)]
    pub samples_per_half: Option<usize>,
    /// Comma-separated monomial coefficients of the profile polynomial.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub profile: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub function: FnKind,
    pub mode: Mode,
    pub k: usize,
    pub dims: Vec<usize>,
    pub theta_draws: usize,
    /// Defaults to 2^13 in scaling mode and 2^19 in theta-4 mode.
    pub samples_per_half: Option<usize>,
    pub bootstrap: usize,
    pub profile: Vec<f64>,
    /// Accepted slope window for half-spaces at `k = 1`.
    pub slope_range: (f64, f64),
    /// Theta-4 mode: bins, smallest fitted bin and normals per bin.
    pub bins: Vec<f64>,
    pub fit_min: f64,
    pub thetas_per_bin: usize,
    pub exponent_range: (f64, f64),
}

impl Default for Params {
    fn default() -> Self {
        Params {
            function: FnKind::Halfspace,
            mode: Mode::Scaling,
            k: 1,
            dims: vec![8, 16, 32, 64],
            theta_draws: 4000,
            samples_per_half: None,
            bootstrap: 1000,
            profile: vec![-1.0, 0.0, 1.0],
            slope_range: (-2.5, -1.5),
            bins: vec![0.0, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            fit_min: 0.4,
            thetas_per_bin: 4,
            exponent_range: (3.2, 4.8),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub records: Vec<RecordSummary>,
    pub fit: Option<ScalingFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordSummary {
    pub n: usize,
    pub projected_mean: f64,
    pub projected_se: f64,
    pub projected_ci95: (f64, f64),
    pub unprojected_mean: f64,
    pub unprojected_se: f64,
}

fn build(kind: FnKind, n: usize, profile: &[f64]) -> CliResult<Box<dyn GaussFn>> {
    Ok(match kind {
        FnKind::Halfspace => {
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            Box::new(HalfSpace::new(&e1)?)
        }
        FnKind::Constant => Box::new(Constant { dim: n, value: 1.0 }),
        FnKind::Profile => Box::new(SphereProfile::new(n, profile)?),
    })
}

fn tag(kind: FnKind) -> &'static str {
    match kind {
        FnKind::Halfspace => "halfspace",
        FnKind::Constant => "constant",
        FnKind::Profile => "profile",
    }
}

pub fn scaling(p: &Params, stream: &gug_core::rng::SeedStream) -> CliResult<(Vec<ConcentrationRecord>, ScalingReport)> {
    if p.dims.is_empty() {
        return Err(CliError::Usage("--dims needs at least one dimension".into()));
    }
    let mut cfg = ConcentrationConfig::new(p.k, p.theta_draws, p.samples_per_half.unwrap_or(1 << 13));
    cfg.bootstrap = p.bootstrap;
    let mut records = Vec::new();
    for &n in &p.dims {
        let f = build(p.function, n, &p.profile)?;
        records.push(restricted_vs_global(f.as_ref(), tag(p.function), &cfg, &stream.child(n as u64))?);
    }
    let points: Vec<(f64, f64, f64)> = records.iter().map(|r| (r.n as f64, r.projected.mean, r.projected.std_error)).collect();
    let (fit, fit_error) = match scaling_fit(&points) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summaries = records
        .iter()
        .map(|r| RecordSummary {
            n: r.n,
            projected_mean: r.projected.mean,
            projected_se: r.projected.std_error,
            projected_ci95: r.projected.ci95,
            unprojected_mean: r.unprojected.mean,
            unprojected_se: r.unprojected.std_error,
        })
        .collect();
    Ok((records, ScalingReport { records: summaries, fit, fit_error }))
}

fn run_scaling(ctx: &Context, p: &Params) -> CliResult<Outcome> {
    let (records, report) = scaling(p, &super::stream(ctx))?;
    let mut table = Table::new(&["row", "function", "n", "k", "theta_index", "projected", "unprojected", "mean", "std_error", "ci95_low", "ci95_high"]);
    for r in &records {
        for (i, s) in r.per_theta.iter().enumerate() {
            table.push(vec!["theta".into(), r.tag.clone(), r.n.to_string(), r.k.to_string(), i.to_string(), num(s.projected), num(s.unprojected), String::new(), String::new(), String::new(), String::new()]);
        }
        for (kind, s) in [("summary-projected", &r.projected), ("summary-unprojected", &r.unprojected)] {
            table.push(vec![kind.into(), r.tag.clone(), r.n.to_string(), r.k.to_string(), String::new(), String::new(), String::new(), num(s.mean), num(s.std_error), num(s.ci95.0), num(s.ci95.1)]);
        }
    }
    if let Some(f) = &report.fit {
        table.push(vec!["slope".into(), tag(p.function).into(), String::new(), p.k.to_string(), String::new(), String::new(), String::new(), num(f.fit.slope), num(f.fit.slope_se), num(f.fit.slope_ci95.0), num(f.fit.slope_ci95.1)]);
    }
    let mut checks = Vec::new();
    match p.function {
        FnKind::Halfspace if p.k == 1 => {
            let (lo, hi) = p.slope_range;
            match &report.fit {
                Some(f) => {
                    checks.push(Check::new("slope", (lo..=hi).contains(&f.fit.slope), format!("log-log slope {:.3} (95% CI [{:.3}, {:.3}]), window [{lo}, {hi}]", f.fit.slope, f.fit.slope_ci95.0, f.fit.slope_ci95.1)));
                    checks.push(Check::new("excludes -1", f.excludes_minus_one, format!("95% CI [{:.3}, {:.3}]", f.fit.slope_ci95.0, f.fit.slope_ci95.1)));
                }
                None => checks.push(Check::new("slope", false, report.fit_error.clone().unwrap_or_default())),
            }
        }
        FnKind::Constant => {
            let ok = records.iter().all(|r| r.per_theta.iter().all(|s| s.projected == 0.0));
            checks.push(Check::new("constant has no signal", ok && report.fit.is_none(), "projected statistic identically 0, fit refused"));
        }
        _ => {}
    }
    Outcome::new(p, table, &report, checks)
}

fn run_theta4(ctx: &Context, p: &Params) -> CliResult<Outcome> {
    let n = *p.dims.last().ok_or_else(|| CliError::Usage("--dims needs a dimension".into()))?;
    if p.function != FnKind::Profile {
        return Err(CliError::Usage("--mode theta4 needs --fn profile".into()));
    }
    let cfg = Theta4Config {
        h: p.profile.clone(),
        n,
        k: p.k.max(2),
        bins: p.bins.clone(),
        fit_min: p.fit_min,
        thetas_per_bin: p.thetas_per_bin,
        samples_per_half: p.samples_per_half.unwrap_or(1 << 19),
    };
    let rep: Theta4Report = theta4_probe(&cfg, &super::stream(ctx))?;
    let mut table = Table::new(&["theta1", "mean", "std_error", "count"]);
    for b in &rep.bins {
        table.push(vec![num(b.theta1), num(b.mean), num(b.std_error), b.count.to_string()]);
    }
    let (lo, hi) = p.exponent_range;
    let mut checks = vec![Check::new(
        "theta_1 exponent",
        rep.fit.as_ref().is_some_and(|f| (lo..=hi).contains(&f.slope)),
        format!("slope {} over bins >= {}, window [{lo}, {hi}]", opt(rep.fit.as_ref().map(|f| f.slope)), p.fit_min),
    )];
    if let Some(below) = rep.zero_bin_below {
        checks.push(Check::new("zero bin lowest", below, "theta_1 = 0 bin below all bins with theta_1 >= 0.3"));
    }
    Outcome::new(&(p, &cfg), table, &rep, checks)
}

pub fn run(ctx: &Context, flags: &Flags) -> CliResult<Outcome> {
    let p: Params = ctx.resolve(flags)?;
    match p.mode {
        Mode::Scaling => run_scaling(ctx, &p),
        Mode::Theta4 => run_theta4(ctx, &p),
    }
}
