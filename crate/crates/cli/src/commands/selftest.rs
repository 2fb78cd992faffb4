use clap::Args;
use gug_core::hermite::{gauss_hermite_rule, hermite_1d, HermiteSeries, MultiIndex};
use gug_core::poly::{hermite_to_monomial, monomial_to_hermite};
use gug_core::rng::{normal, SeedStream};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::{num, Outcome};
use crate::{Check, CliResult, Context, Table};

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Flags {
    /// Highest one-dimensional degree in the orthonormality table.
    #[arg(long)]
    pub max_degree: Option<usize>,
    /// Number of random series in the Parseval and polynomial suites.
    #[arg(long)]
    pub series: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub max_degree: usize,
    pub quadrature_nodes: usize,
    pub series: usize,
    pub orthonormal_tol: f64,
    pub parseval_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { max_degree: 8, quadrature_nodes: 24, series: 200, orthonormal_tol: 1e-8, parseval_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub orthonormal_max_error: f64,
    pub parseval_max_error: f64,
    pub round_trip_max_error: f64,
    pub poincare_min_margin: f64,
    pub ibp_max_error: f64,
}

/// Random series in dimension 1..=3 with total degree at most 6.
pub fn random_series(stream: &SeedStream) -> HermiteSeries {
    let mut rng = stream.rng();
    let dim = rng.gen_range(1..=3);
    let terms: Vec<(MultiIndex, f64)> = (0..rng.gen_range(1..8))
        .map(|_| {
            let mut e = vec![0usize; dim];
            let mut budget = 6;
            for x in e.iter_mut() {
                *x = rng.gen_range(0..=budget.min(3));
                budget -= *x;
            }
            (MultiIndex::from_exponents(&e), normal(&mut rng))
        })
        .collect();
    HermiteSeries::from_terms(dim, terms).expect("valid series")
}

/// `E[s(x)^2]` by a tensor Gauss-Hermite rule.
fn quadrature_norm_sq(s: &HermiteSeries, nodes: &[f64], weights: &[f64]) -> f64 {
    let m = nodes.len();
    let total = m.pow(s.dim as u32);
    let mut x = vec![0.0; s.dim];
    let mut acc = 0.0;
    for idx in 0..total {
        let mut r = idx;
        let mut w = 1.0;
        for xi in x.iter_mut() {
            *xi = nodes[r % m];
            w *= weights[r % m];
            r /= m;
        }
        acc += w * s.eval(&x).expect("dimension matches").powi(2);
    }
    acc
}

pub fn selftest(p: &Params, stream: &SeedStream) -> CliResult<(SelftestReport, Table)> {
    let mut table = Table::new(&["suite", "case", "value", "error"]);
    let (nodes, weights) = gauss_hermite_rule(p.quadrature_nodes)?;
    let mut orth = 0.0f64;
    for i in 0..=p.max_degree {
        for j in 0..=p.max_degree {
            let q: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * hermite_1d(i, *x) * hermite_1d(j, *x)).sum();
            let err = (q - if i == j { 1.0 } else { 0.0 }).abs();
            orth = orth.max(err);
            table.push(vec!["orthonormality".into(), format!("{i},{j}"), num(q), num(err)]);
        }
    }
    let (qn, qw) = gauss_hermite_rule(8)?;
    let mut parseval = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut poincare = f64::INFINITY;
    let mut ibp = 0.0f64;
    for c in 0..p.series {
        let s = random_series(&stream.child(c as u64));
        let exact = s.norm_sq();
        let quad = quadrature_norm_sq(&s, &qn, &qw);
        let perr = (quad - exact).abs() / (1.0 + exact);
        parseval = parseval.max(perr);
        let poly = hermite_to_monomial(&s)?;
        let back = monomial_to_hermite(&poly).sub(&s)?.norm_sq().sqrt();
        round_trip = round_trip.max(back);
        let margin = poly.gradient_norm_sq()? - poly.variance()?;
        poincare = poincare.min(margin);
        let deg1 = poly.degree1_part()?;
        for (i, e) in deg1.iter().enumerate() {
            ibp = ibp.max((e - poly.partial_derivative(i).gaussian_moment()?).abs());
        }
        table.push(vec!["parseval".into(), c.to_string(), num(exact), num(perr)]);
    }
    Ok((
        SelftestReport {
            orthonormal_max_error: orth,
            parseval_max_error: parseval,
            round_trip_max_error: round_trip,
            poincare_min_margin: poincare,
            ibp_max_error: ibp,
        },
        table,
    ))
}

pub fn run(ctx: &Context, flags: &Flags) -> CliResult<Outcome> {
    let p: Params = ctx.resolve(flags)?;
    let (r, table) = selftest(&p, &super::stream(ctx))?;
    let checks = vec![
        Check::new(
            "hermite orthonormality",
            r.orthonormal_max_error < p.orthonormal_tol,
            format!("max |<H_i,H_j> - delta_ij| = {:.3e} over i,j <= {} (tol {:e})", r.orthonormal_max_error, p.max_degree, p.orthonormal_tol),
        ),
        Check::new(
            "parseval",
            r.parseval_max_error < p.parseval_tol,
            format!("max relative error {:.3e} on {} random series (tol {:e})", r.parseval_max_error, p.series, p.parseval_tol),
        ),
        Check::new("basis round trip", r.round_trip_max_error < 1e-10, format!("max error {:.3e}", r.round_trip_max_error)),
        Check::new("poincare", r.poincare_min_margin >= -1e-12, format!("min E|grad p|^2 - Var p = {:.3e}", r.poincare_min_margin)),
        Check::new("integration by parts", r.ibp_max_error < 1e-10, format!("max error {:.3e}", r.ibp_max_error)),
    ];
    Outcome::new(&p, table, &r, checks)
}
