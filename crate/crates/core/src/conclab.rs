//! Concentration of restricted barycenters and numerical checks of the
//! classical Gaussian inequalities.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::functions::GaussFn;
use crate::geom::{normalize, sample_gaussian, sample_sphere, Hyperplane};
use crate::hermite::tensor::{HermiteTensorEval, SymmetricTensor, TensorShape};
use crate::hermite::{project_low_degree_split, HermiteSeries, LowDegreeOptions, MultiIndex, MultiIndexTree};
use crate::poly::{hermite_to_monomial, monomial_to_hermite, SparsePoly};
use crate::rng::{chunked, fill_normal, SeedStream, CHUNK};
use crate::stats::{bootstrap_mean_ci, weighted_line_fit, LineFit, Moments};

/// Randomized check of `f(cx) = f(x)` for `c` in `{1/2, 2}`.
pub fn check_homogeneous(f: &dyn GaussFn, points: usize, stream: &SeedStream) -> Result<()> {
    let mut rng = stream.rng();
    for _ in 0..points {
        let x = sample_gaussian(f.dim(), &mut rng);
        let v = f.eval(&x);
        for c in [0.5, 2.0] {
            let y: Vec<f64> = x.iter().map(|a| c * a).collect();
            let w = f.eval(&y);
            if (w - v).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(Error::InvalidFunction(format!("f is not 0-homogeneous: f(x) = {v}, f({c}x) = {w}")));
            }
        }
    }
    Ok(())
}

/// Split-sample estimates for one restriction normal `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaStatistic {
    /// `|P(b_k(f; theta) - b_k(f))|_HS^2` with `P` the projector onto `theta^perp`.
    pub projected: f64,
    /// `|b_k(f; theta) - b_k(f)|_HS^2`.
    pub unprojected: f64,
}

/// Couples both barycenters through `x` and `Px`: since `P H(Px) = P H(x)`,
/// the projected difference is the mean of `P H(x) (f(Px) - f(x))`.
pub fn theta_statistic(f: &dyn GaussFn, k: usize, theta: &[f64], samples_per_half: usize, stream: &SeedStream) -> Result<ThetaStatistic> {
    let n = f.dim();
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
    }
    if samples_per_half == 0 {
        return Err(Error::InvalidArgument("need at least one sample per half".into()));
    }
    let shape = TensorShape::new(n, k)?;
    let half = |s: SeedStream| -> Result<(SymmetricTensor, SymmetricTensor)> {
        let parts = chunked(&s, samples_per_half, CHUNK / 4, |rng, _, count| {
            let mut ev = HermiteTensorEval::new(shape.clone());
            let mut diff = vec![0.0; shape.len()];
            let mut glob = vec![0.0; shape.len()];
            let mut x = vec![0.0; n];
            let mut px = vec![0.0; n];
            for _ in 0..count {
                fill_normal(rng, &mut x);
                let t: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
                for ((p, a), b) in px.iter_mut().zip(&x).zip(theta) {
                    *p = a - t * b;
                }
                let fx = f.eval(&x);
                let fp = f.eval(&px);
                let h = ev.eval(&x);
                let dw = fp - fx;
                for ((d, g), hv) in diff.iter_mut().zip(glob.iter_mut()).zip(h) {
                    *d += dw * hv;
                    *g += fx * hv;
                }
            }
            (diff, glob)
        });
        let mut d = SymmetricTensor::zeros(shape.clone());
        let mut g = SymmetricTensor::zeros(shape.clone());
        for (pd, pg) in &parts {
            d.values.iter_mut().zip(pd).for_each(|(a, b)| *a += b);
            g.values.iter_mut().zip(pg).for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / samples_per_half as f64;
        d.scale(inv);
        g.scale(inv);
        let pd = d.project_out(theta)?;
        let off = g.sub(&g.project_out(theta)?);
        Ok((pd, off))
    };
    let (d1, o1) = half(stream.named("first-half"))?;
    let (d2, o2) = half(stream.named("second-half"))?;
    let projected = d1.hs_inner(&d2)?;
    // b_k(f; theta) lies in the range of P, so the rest of b_k(f) adds on
    Ok(ThetaStatistic { projected, unprojected: projected + o1.hs_inner(&o2)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
}

impl Summary {
    pub fn of(values: &[f64], bootstrap: usize, stream: &SeedStream) -> Summary {
        let m: Moments = values.iter().copied().collect();
        let est = m.estimate();
        Summary { mean: est.value, std_error: est.std_error, ci95: bootstrap_mean_ci(values, bootstrap, stream) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub k: usize,
    pub theta_draws: usize,
    pub samples_per_half: usize,
    pub bootstrap: usize,
}

impl ConcentrationConfig {
    pub fn new(k: usize, theta_draws: usize, samples_per_half: usize) -> Self {
        ConcentrationConfig { k, theta_draws, samples_per_half, bootstrap: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRecord {
    pub tag: String,
    pub n: usize,
    pub k: usize,
    pub samples_per_half: usize,
    pub per_theta: Vec<ThetaStatistic>,
    pub projected: Summary,
    pub unprojected: Summary,
}

/// Averages the per-`theta` statistics over uniform restriction normals.
pub fn restricted_vs_global(f: &dyn GaussFn, tag: &str, cfg: &ConcentrationConfig, stream: &SeedStream) -> Result<ConcentrationRecord> {
    check_homogeneous(f, 64, &stream.named("homogeneity"))?;
    if cfg.theta_draws == 0 {
        return Err(Error::InvalidArgument("need at least one theta draw".into()));
    }
    let n = f.dim();
    let mut rng = stream.named("theta").rng();
    let thetas: Vec<Vec<f64>> = (0..cfg.theta_draws).map(|_| sample_sphere(n, &mut rng)).collect();
    let per = stream.named("per-theta");
    let per_theta = thetas
        .iter()
        .enumerate()
        .map(|(i, t)| theta_statistic(f, cfg.k, t, cfg.samples_per_half, &per.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let proj: Vec<f64> = per_theta.iter().map(|s| s.projected).collect();
    let unproj: Vec<f64> = per_theta.iter().map(|s| s.unprojected).collect();
    Ok(ConcentrationRecord {
        tag: tag.to_string(),
        n,
        k: cfg.k,
        samples_per_half: cfg.samples_per_half,
        projected: Summary::of(&proj, cfg.bootstrap, &stream.named("bootstrap-projected")),
        unprojected: Summary::of(&unproj, cfg.bootstrap, &stream.named("bootstrap-unprojected")),
        per_theta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub fit: LineFit,
    pub points_used: usize,
    /// Set when non-positive means had to be dropped.
    pub dropped_nonpositive: bool,
    /// The 95% slope interval excludes -1.
    pub excludes_minus_one: bool,
}

/// Weighted least squares of `log(mean)` against `log(n)`, with weights from
/// the delta-method variance `(se / mean)^2`.
pub fn scaling_fit(points: &[(f64, f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::FitRefused(format!("need at least 3 dimensions, got {}", points.len())));
    }
    let usable: Vec<&(f64, f64, f64)> = points.iter().filter(|p| p.1 > 0.0 && p.0 > 0.0).collect();
    if usable.len() < 2 {
        return Err(Error::FitRefused("no positive signal to fit".into()));
    }
    let x: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let w: Vec<f64> = usable
        .iter()
        .map(|p| {
            let rel = p.2 / p.1;
            if rel > 0.0 { 1.0 / (rel * rel) } else { 1e12 }
        })
        .collect();
    let fit = weighted_line_fit(&x, &y, &w)?;
    Ok(ScalingFit {
        points_used: usable.len(),
        dropped_nonpositive: usable.len() < points.len(),
        excludes_minus_one: fit.slope_ci95.1 < -1.0 || fit.slope_ci95.0 > -1.0,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowDegDistance {
    /// Unbiased estimate of the squared distance.
    pub distance_sq: f64,
    pub coefficients: usize,
}

/// `|(f|theta^perp)^{<=d} - (f^{<=d})|theta^perp|_2^2` in `theta^perp` coordinates,
/// from two disjoint sample halves for each series.
pub fn lowdeg_function_distance(
    f: &dyn GaussFn,
    d: usize,
    theta: &[f64],
    pairs: usize,
    budget: usize,
    stream: &SeedStream,
) -> Result<LowDegDistance> {
    check_homogeneous(f, 32, &stream.named("homogeneity"))?;
    let n = f.dim();
    let needed = MultiIndexTree::count(n, d);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let h = Hyperplane::from_normal(theta)?;
    let mut opts = LowDegreeOptions::new(d, pairs);
    opts.budget = budget;
    let (g1, g2) = project_low_degree_split(f, &opts, &stream.named("global"))?;
    let restricted_opts = opts.clone().with_basis(h.basis.clone());
    let (r1, r2) = project_low_degree_split(f, &restricted_opts, &stream.named("restricted"))?;
    let restrict = |s: &HermiteSeries| -> Result<HermiteSeries> {
        let p = hermite_to_monomial(s)?;
        Ok(monomial_to_hermite(&p.affine_substitute(&h.basis, &vec![0.0; n])?))
    };
    let a = r1.series.sub(&restrict(&g1.series)?)?;
    let b = r2.series.sub(&restrict(&g2.series)?)?;
    Ok(LowDegDistance { distance_sq: a.inner(&b), coefficients: needed })
}

/// The same distance for an exact polynomial.
pub fn exact_restriction_distance(p: &SparsePoly, d: usize, theta: &[f64]) -> Result<f64> {
    let h = Hyperplane::from_normal(theta)?;
    let zero = vec![0.0; p.dim];
    let restricted_low = monomial_to_hermite(&p.affine_substitute(&h.basis, &zero)?).low_degree(d);
    let low = hermite_to_monomial(&monomial_to_hermite(p).low_degree(d))?;
    let low_restricted = monomial_to_hermite(&low.affine_substitute(&h.basis, &zero)?);
    Ok(restricted_low.sub(&low_restricted)?.norm_sq())
}

/// `E[u_1^p]` for `u` uniform on the unit sphere of `R^m`.
pub fn sphere_moment(m: usize, p: usize) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    (0..p / 2).map(|i| (2 * i + 1) as f64 / (m + 2 * i) as f64).product()
}

/// `f(x) = h(sqrt(n) x_1 / |x|) / |h(sqrt(n) x_1 / |x|)|_2` for a polynomial `h`
/// given by monomial coefficients.
#[derive(Debug, Clone)]
pub struct SphereProfile {
    pub n: usize,
    pub coeffs: Vec<f64>,
    pub norm: f64,
}

impl SphereProfile {
    pub fn new(n: usize, h: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("need n >= 2".into()));
        }
        let s = (n as f64).sqrt();
        let mut norm_sq = 0.0;
        for (i, a) in h.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                norm_sq += a * b * s.powi((i + j) as i32) * sphere_moment(n, i + j);
            }
        }
        if !(norm_sq > 0.0) {
            return Err(Error::InvalidFunction("profile has zero norm".into()));
        }
        Ok(SphereProfile { n, coeffs: h.to_vec(), norm: norm_sq.sqrt() })
    }
}

impl GaussFn for SphereProfile {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let t = if r > 0.0 { (self.n as f64).sqrt() * x[0] / r } else { 0.0 };
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c) / self.norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta4Config {
    /// Monomial coefficients of the profile `h`.
    pub h: Vec<f64>,
    pub n: usize,
    pub k: usize,
    /// Values of `theta_1` probed.
    pub bins: Vec<f64>,
    /// Smallest `theta_1` used in the slope fit.
    pub fit_min: f64,
    pub thetas_per_bin: usize,
    pub samples_per_half: usize,
}

impl Theta4Config {
    pub fn new(h: Vec<f64>, n: usize) -> Self {
        Theta4Config {
            h,
            n,
            k: 2,
            bins: vec![0.0, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            fit_min: 0.4,
            thetas_per_bin: 4,
            samples_per_half: 1 << 19,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub theta1: f64,
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta4Report {
    pub bins: Vec<BinRecord>,
    /// Slope of `log(mean)` against `log(theta_1)` over bins at or above `fit_min`.
    pub fit: Option<LineFit>,
    /// The same after subtracting the `theta_1 = 0` bin.
    pub floor_subtracted_fit: Option<LineFit>,
    /// The `theta_1 = 0` bin lies below every bin with `theta_1 >= 0.3`.
    pub zero_bin_below: Option<bool>,
    /// Bins whose mean is not positive and were left out of the fits.
    pub flagged_bins: Vec<f64>,
}

/// Per-`theta` statistic at prescribed `theta_1 = <theta, e_1>`.
pub fn theta4_probe(cfg: &Theta4Config, stream: &SeedStream) -> Result<Theta4Report> {
    let f = SphereProfile::new(cfg.n, &cfg.h)?;
    if cfg.h.len() > 8 * cfg.k + 1 {
        return Err(Error::InvalidArgument(format!("profile degree exceeds 8k = {}", 8 * cfg.k)));
    }
    if cfg.thetas_per_bin == 0 {
        return Err(Error::InvalidArgument("need at least one theta per bin".into()));
    }
    let n = cfg.n;
    let mut bins = Vec::with_capacity(cfg.bins.len());
    for (b, &t1) in cfg.bins.iter().enumerate() {
        if !(0.0..1.0).contains(&t1) {
            return Err(Error::InvalidArgument(format!("theta_1 = {t1} must lie in [0, 1)")));
        }
        let bs = stream.child(b as u64);
        let mut rng = bs.named("theta").rng();
        let mut m = Moments::default();
        for j in 0..cfg.thetas_per_bin {
            let mut w = sample_gaussian(n, &mut rng);
            w[0] = 0.0;
            let w = normalize(&w)?;
            let mut theta: Vec<f64> = w.iter().map(|v| (1.0 - t1 * t1).sqrt() * v).collect();
            theta[0] = t1;
            let s = theta_statistic(&f, cfg.k, &theta, cfg.samples_per_half, &bs.child(j as u64))?;
            m.push(s.projected);
        }
        let est = m.estimate();
        bins.push(BinRecord { theta1: t1, mean: est.value, std_error: est.std_error, count: cfg.thetas_per_bin });
    }
    let flagged_bins: Vec<f64> = bins.iter().filter(|b| b.mean <= 0.0).map(|b| b.theta1).collect();
    let fit_on = |vals: &[(f64, f64, f64)]| -> Option<LineFit> {
        let pts: Vec<&(f64, f64, f64)> = vals.iter().filter(|p| p.0 >= cfg.fit_min && p.1 > 0.0).collect();
        if pts.len() < 2 {
            return None;
        }
        let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let w: Vec<f64> = pts.iter().map(|p| if p.2 > 0.0 { (p.1 / p.2).powi(2) } else { 1e12 }).collect();
        weighted_line_fit(&x, &y, &w).ok()
    };
    let raw: Vec<(f64, f64, f64)> = bins.iter().map(|b| (b.theta1, b.mean, b.std_error)).collect();
    let zero = bins.iter().find(|b| b.theta1 == 0.0).copied();
    let floor_subtracted_fit = zero.and_then(|z| {
        let sub: Vec<(f64, f64, f64)> = bins
            .iter()
            .filter(|b| b.theta1 > 0.0)
            .map(|b| (b.theta1, b.mean - z.mean, (b.std_error.powi(2) + z.std_error.powi(2)).sqrt()))
            .collect();
        fit_on(&sub)
    });
    let zero_bin_below = zero.map(|z| bins.iter().filter(|b| b.theta1 >= 0.3).all(|b| z.mean < b.mean));
    Ok(Theta4Report { fit: fit_on(&raw), floor_subtracted_fit, zero_bin_below, flagged_bins, bins })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub measured: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `bound - measured`
    pub margin: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn new(measured: f64, std_error: f64, bound: f64) -> Self {
        BoundCheck { measured, std_error, bound, margin: bound - measured, passed: measured <= bound }
    }
}

/// Unbiased `|g^{<=d}|^2` and its standard error from two split estimates.
fn split_norm_sq(a: &HermiteSeries, b: &HermiteSeries, se: &std::collections::BTreeMap<MultiIndex, f64>) -> (f64, f64) {
    let value = a.inner(b);
    let var: f64 = a
        .coeffs
        .iter()
        .map(|(m, c)| {
            let s = se.get(m).copied().unwrap_or(0.0);
            let c2 = b.coefficient(m);
            0.5 * (c * c + c2 * c2) * s * s
        })
        .sum();
    (value, var.sqrt())
}

/// `|chi_A^{<=k}|^2` against `(2e/k ln(1/alpha))^k alpha^2` for the half-space
/// tail `A = {x_1 > t}` of mass `alpha`; `alpha = 0` is the empty set.
pub fn validate_level_k(alpha: f64, k_level: usize, dim: usize, pairs: usize, stream: &SeedStream) -> Result<BoundCheck> {
    if !(0.0..1.0).contains(&alpha) || k_level == 0 || dim == 0 {
        return Err(Error::InvalidArgument("need alpha in [0, 1), k >= 1 and dim >= 1".into()));
    }
    if alpha == 0.0 {
        return Ok(BoundCheck::new(0.0, 0.0, 0.0));
    }
    if k_level as f64 > 2.0 * (1.0 / alpha).ln() {
        return Err(Error::InvalidArgument(format!("k = {k_level} exceeds 2 ln(1/alpha) = {:.3}", 2.0 * (1.0 / alpha).ln())));
    }
    let t = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - alpha);
    let chi = crate::functions::FnGauss::new(dim, move |x: &[f64]| if x[0] > t { 1.0 } else { 0.0 });
    let (a, b) = project_low_degree_split(&chi, &LowDegreeOptions::new(k_level, pairs), stream)?;
    let (measured, se) = split_norm_sq(&a.series, &b.series, &a.std_errors);
    let kf = k_level as f64;
    let bound = (2.0 * std::f64::consts::E / kf * (1.0 / alpha).ln()).powf(kf) * alpha * alpha;
    Ok(BoundCheck::new(measured, se, bound))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallRow {
    pub d: usize,
    pub epsilon: f64,
    /// Largest measured `P[|p(x) - t| <= epsilon]` over the polynomials and shifts.
    pub probability: f64,
    /// `C d epsilon^(1/d)`
    pub envelope: f64,
    pub within: bool,
}

/// Random polynomial of degree exactly `d` with unit Gaussian norm.
pub fn random_unit_polynomial(dim: usize, d: usize, stream: &SeedStream) -> Result<SparsePoly> {
    let mut rng = stream.rng();
    let tree = MultiIndexTree::new(dim, d);
    let mut series = HermiteSeries::new(dim);
    for m in tree.multi_indices() {
        let mut c = crate::rng::normal(&mut rng);
        if m.degree() == d && c.abs() < 0.1 {
            c = c.signum() * 0.1 + c;
        }
        series.coeffs.insert(m, c);
    }
    let norm = series.norm_sq().sqrt();
    series.coeffs.values_mut().for_each(|c| *c /= norm);
    hermite_to_monomial(&series)
}

/// Monte Carlo `P[|p(x) - t| <= epsilon]`.
pub fn small_ball_probability(p: &SparsePoly, t: f64, eps: f64, samples: usize, stream: &SeedStream) -> f64 {
    let hits: usize = chunked(stream, samples, CHUNK, |rng, _, count| {
        let mut x = vec![0.0; p.dim];
        let mut h = 0;
        for _ in 0..count {
            fill_normal(rng, &mut x);
            if (p.eval(&x).unwrap_or(f64::NAN) - t).abs() <= eps {
                h += 1;
            }
        }
        h
    })
    .into_iter()
    .sum();
    hits as f64 / samples as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarberyWrightReport {
    /// Constant fitted on degree 1 and held fixed.
    pub c: f64,
    pub rows: Vec<SmallBallRow>,
}

pub const CW_SHIFTS: [f64; 2] = [0.0, 0.5];

/// Small-ball probabilities of random unit-norm polynomials against
/// `C d epsilon^(1/d)`, with `C` fitted on `d = 1`.
pub fn validate_carbery_wright(
    degrees: &[usize],
    dim: usize,
    polys: usize,
    eps_grid: &[f64],
    samples: usize,
    stream: &SeedStream,
) -> Result<CarberyWrightReport> {
    let measure = |d: usize| -> Result<Vec<f64>> {
        let ds = stream.child(d as u64);
        let ps: Vec<SparsePoly> = (0..polys).map(|i| random_unit_polynomial(dim, d, &ds.named("poly").child(i as u64))).collect::<Result<_>>()?;
        Ok(eps_grid
            .iter()
            .enumerate()
            .map(|(e, &eps)| {
                let mut worst = 0.0f64;
                for (i, p) in ps.iter().enumerate() {
                    for (j, &t) in CW_SHIFTS.iter().enumerate() {
                        let s = ds.named("ball").child((e * 1000 + i * 10 + j) as u64);
                        worst = worst.max(if eps == 0.0 { 0.0 } else { small_ball_probability(p, t, eps, samples, &s) });
                    }
                }
                worst
            })
            .collect())
    };
    let base = measure(1)?;
    let c = eps_grid.iter().zip(&base).filter(|(e, _)| **e > 0.0).map(|(e, p)| p / e).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &d in degrees {
        let probs = if d == 1 { base.clone() } else { measure(d)? };
        for (&eps, &p) in eps_grid.iter().zip(&probs) {
            let envelope = c * d as f64 * eps.powf(1.0 / d as f64);
            rows.push(SmallBallRow { d, epsilon: eps, probability: p, envelope, within: p <= envelope });
        }
    }
    Ok(CarberyWrightReport { c, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub polynomials: usize,
    pub violations: usize,
    /// Smallest `E|grad p|^2 - Var p`.
    pub min_margin: f64,
}

/// Exact `Var p <= E|grad p|^2` on random polynomials.
pub fn validate_poincare(count: usize, dim: usize, max_degree: usize, stream: &SeedStream) -> Result<PoincareReport> {
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for i in 0..count {
        let d = 1 + i % max_degree.max(1);
        let p = random_unit_polynomial(dim, d, &stream.child(i as u64))?;
        let margin = p.gradient_norm_sq()? - p.variance()?;
        if margin < -1e-12 {
            violations += 1;
        }
        min_margin = min_margin.min(margin);
    }
    Ok(PoincareReport { polynomials: count, violations, min_margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub disagreement: f64,
    pub distance: f64,
    pub distance_sq: f64,
    pub bound: f64,
    pub passed: bool,
}

/// `|f^{<=d} - g^{<=d}|_2` against `2 (2e/d ln(2/delta))^(d/2) delta`, with
/// `delta` the measured disagreement of two `+-1` functions.
pub fn validate_lowdeg_consistency(
    f: &dyn GaussFn,
    g: &dyn GaussFn,
    d: usize,
    pairs: usize,
    disagreement_samples: usize,
    stream: &SeedStream,
) -> Result<ConsistencyCheck> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    let n = f.dim();
    let bad: usize = chunked(&stream.named("disagreement"), disagreement_samples, CHUNK, |rng, _, count| {
        let mut x = vec![0.0; n];
        (0..count)
            .filter(|_| {
                fill_normal(rng, &mut x);
                f.eval(&x) != g.eval(&x)
            })
            .count()
    })
    .into_iter()
    .sum();
    let delta = bad as f64 / disagreement_samples.max(1) as f64;
    if delta > 0.0 && d as f64 > 2.0 * (1.0 / delta).ln() {
        return Err(Error::InvalidArgument(format!("d = {d} exceeds 2 ln(1/delta) = {:.3}", 2.0 * (1.0 / delta).ln())));
    }
    let diff = crate::functions::FnGauss::new(n, |x: &[f64]| f.eval(x) - g.eval(x));
    let (a, b) = project_low_degree_split(&diff, &LowDegreeOptions::new(d, pairs), &stream.named("series"))?;
    let distance_sq = a.series.inner(&b.series);
    let bound = if delta == 0.0 {
        0.0
    } else {
        2.0 * (2.0 * std::f64::consts::E / d as f64 * (2.0 / delta).ln()).powf(d as f64 / 2.0) * delta
    };
    let distance = distance_sq.max(0.0).sqrt();
    Ok(ConsistencyCheck { disagreement: delta, distance, distance_sq, bound, passed: distance <= bound })
}
