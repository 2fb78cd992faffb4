use std::f64::consts::PI;

use clap::{Args, ValueEnum};
use gug_core::conclab::{
    validate_carbery_wright, validate_level_k, validate_lowdeg_consistency, validate_poincare, BoundCheck, CarberyWrightReport,
    ConsistencyCheck, PoincareReport,
};
use gug_core::functions::HalfSpace;
use gug_core::rng::SeedStream;
use serde::{Deserialize, Serialize};

use crate::output::{num, Outcome};
use crate::{Check, CliResult, Context, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    LevelK,
    CarberyWright,
    Poincare,
    Consistency,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Flags {
    /// Comma-separated subset of validators (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub which: Option<Vec<Which>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub which: Vec<Which>,
    pub level_alpha: f64,
    pub level_k: usize,
    pub level_pairs: usize,
    pub cw_degrees: Vec<usize>,
    pub cw_polys: usize,
    pub cw_eps: Vec<f64>,
    pub cw_samples: usize,
    pub poincare_count: usize,
    pub poincare_max_degree: usize,
    pub consistency_delta: f64,
    pub consistency_d: usize,
    pub consistency_pairs: usize,
    pub consistency_samples: usize,
    pub dim: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            which: vec![Which::LevelK, Which::CarberyWright, Which::Poincare, Which::Consistency],
            level_alpha: 0.1,
            level_k: 2,
            level_pairs: 1 << 20,
            cw_degrees: vec![1, 2, 3],
            cw_polys: 6,
            cw_eps: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2],
            cw_samples: 1 << 16,
            poincare_count: 200,
            poincare_max_degree: 6,
            consistency_delta: 0.01,
            consistency_d: 2,
            consistency_pairs: 1 << 18,
            consistency_samples: 1 << 20,
            dim: 3,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidateReport {
    pub level_k: Option<BoundCheck>,
    pub carbery_wright: Option<CarberyWrightReport>,
    pub poincare: Option<PoincareReport>,
    pub consistency: Option<ConsistencyCheck>,
}

/// Half-spaces `e_1` and `cos(a) e_1 + sin(a) e_2` with `a = pi delta`.
pub fn consistency_pair(dim: usize, delta: f64) -> gug_core::Result<(HalfSpace, HalfSpace)> {
    let mut a = vec![0.0; dim.max(2)];
    a[0] = 1.0;
    let mut b = vec![0.0; dim.max(2)];
    b[0] = (PI * delta).cos();
    b[1] = (PI * delta).sin();
    Ok((HalfSpace::new(&a)?, HalfSpace::new(&b)?))
}

pub fn validate(p: &Params, stream: &SeedStream) -> CliResult<ValidateReport> {
    let mut r = ValidateReport::default();
    for w in &p.which {
        match w {
            Which::LevelK => r.level_k = Some(validate_level_k(p.level_alpha, p.level_k, p.dim, p.level_pairs, &stream.named("level-k"))?),
            Which::CarberyWright => {
                r.carbery_wright =
                    Some(validate_carbery_wright(&p.cw_degrees, p.dim, p.cw_polys, &p.cw_eps, p.cw_samples, &stream.named("carbery-wright"))?)
            }
            Which::Poincare => r.poincare = Some(validate_poincare(p.poincare_count, p.dim, p.poincare_max_degree, &stream.named("poincare"))?),
            Which::Consistency => {
                let (f, g) = consistency_pair(p.dim, p.consistency_delta)?;
                r.consistency = Some(validate_lowdeg_consistency(
                    &f,
                    &g,
                    p.consistency_d,
                    p.consistency_pairs,
                    p.consistency_samples,
                    &stream.named("consistency"),
                )?)
            }
        }
    }
    Ok(r)
}

pub fn run(ctx: &Context, flags: &Flags) -> CliResult<Outcome> {
    let p: Params = ctx.resolve(flags)?;
    let r = validate(&p, &super::stream(ctx))?;
    let mut table = Table::new(&["validator", "case", "measured", "bound", "passed"]);
    let mut checks = Vec::new();
    if let Some(c) = &r.level_k {
        table.push(vec!["level-k".into(), format!("alpha={} k={}", p.level_alpha, p.level_k), num(c.measured), num(c.bound), c.passed.to_string()]);
        checks.push(Check::new("level-k", c.passed, format!("|chi^<=k|^2 = {:.4} +- {:.1e}, bound {:.4}, margin {:.4}", c.measured, c.std_error, c.bound, c.margin)));
    }
    if let Some(cw) = &r.carbery_wright {
        for row in &cw.rows {
            table.push(vec!["carbery-wright".into(), format!("d={} eps={}", row.d, row.epsilon), num(row.probability), num(row.envelope), row.within.to_string()]);
        }
        let bad = cw.rows.iter().filter(|r| !r.within).count();
        checks.push(Check::new("carbery-wright", bad == 0, format!("{bad} of {} grid points above C d eps^(1/d) with C = {:.3}", cw.rows.len(), cw.c)));
    }
    if let Some(pc) = &r.poincare {
        table.push(vec!["poincare".into(), format!("{} polynomials", pc.polynomials), num(pc.min_margin), "0".into(), (pc.violations == 0).to_string()]);
        checks.push(Check::new("poincare", pc.violations == 0, format!("{} violations, min margin {:.3e}", pc.violations, pc.min_margin)));
    }
    if let Some(c) = &r.consistency {
        table.push(vec!["consistency".into(), format!("delta={:.4} d={}", c.disagreement, p.consistency_d), num(c.distance), num(c.bound), c.passed.to_string()]);
        checks.push(Check::new("low-degree consistency", c.passed, format!("distance {:.4} vs bound {:.4} at disagreement {:.4}", c.distance, c.bound, c.disagreement)));
    }
    Outcome::new(&p, table, &r, checks)
}
