mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{gauss_expect, hermite_explicit, within};
use gug_core::functions::{Constant, FnGauss, GaussFn, HalfSpace};
use gug_core::geom::{dot, norm, Hyperplane};
use gug_core::hermite::tensor::{
    barycenter, barycenter_from_series, barycenter_on_hyperplane, hermite_tensor, reconstruct_degree_part,
    SymmetricTensor, TensorShape,
};
use gug_core::hermite::{
    estimate_coefficient, gauss_hermite_rule, hermite_1d, noise_stability, project_low_degree, HermiteSeries,
    LowDegreeOptions, MultiIndex,
};
use gug_core::poly::hermite_to_monomial;
use gug_core::rng::SeedStream;
use gug_core::Error;
use proptest::prelude::*;

// E|g| for a standard normal, frozen from the Simpson oracle below.
const E_ABS_GAUSS: f64 = 0.797_884_560_802_865_4;

#[test]
fn frozen_abs_moment_matches_oracle() {
    let oracle = gauss_expect(f64::abs);
    assert!((oracle - E_ABS_GAUSS).abs() < 1e-10, "{oracle}");
}

#[test]
fn one_dimensional_values() {
    assert!((hermite_1d(2, 0.0) + 1.0 / 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(hermite_1d(0, 7.3), 1.0);
    assert!((hermite_1d(4, 0.0) - 3.0 / (2.0 * 6f64.sqrt())).abs() < 1e-15);
    for j in 0..=10 {
        for &x in &[-3.1, -0.2, 0.0, 1.4, 2.9] {
            let want = hermite_explicit(j, x);
            assert!((hermite_1d(j, x) - want).abs() < 1e-10 * (1.0 + want.abs()), "j={j} x={x}");
        }
    }
}

#[test]
fn multi_index_values() {
    assert_eq!(MultiIndex::from_exponents(&[1, 1]).eval_hermite(&[2.0, 3.0]), 6.0);
    assert_eq!(MultiIndex::zero().eval_hermite(&[4.0, -1.0, 2.0]), 1.0);
    let v = MultiIndex::from_exponents(&[2, 1]).eval_hermite(&[0.0, 5.0]);
    assert!((v + 5.0 / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn orthonormality_by_quadrature_and_simpson() {
    let (x, w) = gauss_hermite_rule(20).unwrap();
    for i in 0..=8 {
        for j in 0..=8 {
            let q: f64 = x.iter().zip(&w).map(|(a, b)| b * hermite_1d(i, *a) * hermite_1d(j, *a)).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((q - want).abs() < 1e-8, "quadrature {i},{j}: {q}");
            let s = gauss_expect(|t| hermite_explicit(i, t) * hermite_explicit(j, t));
            assert!((s - want).abs() < 1e-8, "simpson {i},{j}: {s}");
        }
    }
}

fn series_strategy() -> impl Strategy<Value = HermiteSeries> {
    (1usize..=3).prop_flat_map(|dim| {
        proptest::collection::vec((proptest::collection::vec(0usize..=3, dim), -2.0f64..2.0), 1..8).prop_map(
            move |terms| {
                HermiteSeries::from_terms(dim, terms.into_iter().map(|(e, c)| (MultiIndex::from_exponents(&e), c)))
                    .unwrap()
            },
        )
    })
    .prop_filter("degree within table", |s| s.degree() <= 8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parseval_is_exact(s in series_strategy()) {
        let exact = hermite_to_monomial(&s).unwrap().l2_norm_sq().unwrap();
        prop_assert!((exact - s.norm_sq()).abs() < 1e-10 * (1.0 + exact));
    }

    #[test]
    fn noise_eigenrelation(e in proptest::collection::vec(0usize..=4, 1..4), rho in 0.0f64..=1.0) {
        let m = MultiIndex::from_exponents(&e);
        let s = HermiteSeries::from_terms(e.len(), [(m.clone(), 1.0)]).unwrap();
        let t = s.apply_noise(rho).unwrap();
        prop_assert_eq!(t.coefficient(&m), rho.powi(m.degree() as i32));
    }

    #[test]
    fn reconstruction_matches_coefficient_form(
        s in series_strategy(),
        pts in proptest::collection::vec(proptest::collection::vec(-2.5f64..2.5, 3), 100),
    ) {
        for k in 1..=3 {
            let b = barycenter_from_series(&s, k).unwrap();
            let part = s.degree_part(k);
            for p in &pts {
                let x = &p[..s.dim];
                let want = part.eval(x).unwrap();
                let got = reconstruct_degree_part(&b, x).unwrap();
                prop_assert!((want - got).abs() < 1e-8 * (1.0 + want.abs()), "k={} {} vs {}", k, want, got);
            }
        }
    }
}

#[test]
fn noise_operator_examples() {
    let s = HermiteSeries::from_terms(1, [(MultiIndex::unit(0), 2.0), (MultiIndex::from_exponents(&[3]), 4.0)])
        .unwrap();
    assert_eq!(s.apply_noise(1.0).unwrap(), s);
    let t = s.apply_noise(0.5).unwrap();
    assert_eq!(t.coefficient(&MultiIndex::unit(0)), 1.0);
    assert_eq!(t.coefficient(&MultiIndex::from_exponents(&[3])), 0.5);
    let z = s.apply_noise(0.0).unwrap();
    assert_eq!(z.coefficient(&MultiIndex::unit(0)), 0.0);
}

#[test]
fn coefficient_estimates() {
    let hs = HalfSpace::new(&[1.0, 0.0, 0.0]).unwrap();
    let s = SeedStream::new(101);
    let e = estimate_coefficient(&hs, &MultiIndex::unit(0), 200_000, &s).unwrap();
    assert!(within(e.value, e.std_error, E_ABS_GAUSS, 4.0), "{e:?}");
    let e2 = estimate_coefficient(&hs, &MultiIndex::from_exponents(&[2]), 200_000, &s).unwrap();
    assert!(within(e2.value, e2.std_error, 0.0, 4.0), "{e2:?}");
    let one = Constant { dim: 2, value: 1.0 };
    let e3 = estimate_coefficient(&one, &MultiIndex::from_exponents(&[2]), 200_000, &s).unwrap();
    assert!(within(e3.value, e3.std_error, 0.0, 4.0), "{e3:?}");
    // standard error shrinks like 1/sqrt(n)
    let small = estimate_coefficient(&hs, &MultiIndex::unit(0), 50_000, &s).unwrap();
    let ratio = small.std_error / e.std_error;
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}

#[test]
fn low_degree_projection_examples() {
    let hs = HalfSpace::new(&[1.0, 0.0]).unwrap();
    let s = SeedStream::new(5);
    let est = project_low_degree(&hs, &LowDegreeOptions::new(1, 100_000), &s).unwrap();
    let c10 = MultiIndex::unit(0);
    let c01 = MultiIndex::unit(1);
    assert!(within(est.series.coefficient(&c10), est.std_errors[&c10], E_ABS_GAUSS, 4.0));
    assert!(within(est.series.coefficient(&c01), est.std_errors[&c01], 0.0, 4.0));
    assert_eq!(est.series.coefficient(&MultiIndex::zero()), 0.0);

    let h21 = MultiIndex::from_exponents(&[2, 1]);
    let target = h21.clone();
    let f = FnGauss::new(2, move |x: &[f64]| target.eval_hermite(x));
    let est = project_low_degree(&f, &LowDegreeOptions::new(3, 100_000), &s).unwrap();
    for (m, c) in &est.series.coeffs {
        let want = if *m == h21 { 1.0 } else { 0.0 };
        assert!(within(*c, est.std_errors[m], want, 4.5), "{m}: {c}");
    }
    let est = project_low_degree(&f, &LowDegreeOptions::new(2, 100_000), &s).unwrap();
    for (m, c) in &est.series.coeffs {
        assert!(within(*c, est.std_errors[m], 0.0, 4.5), "{m}: {c}");
    }
}

#[test]
fn low_degree_budget_is_enforced() {
    let hs = HalfSpace::new(&[1.0; 40]).unwrap();
    let mut opts = LowDegreeOptions::new(4, 10);
    opts.budget = 10_000;
    match project_low_degree(&hs, &opts, &SeedStream::new(1)) {
        Err(Error::BudgetExceeded { needed, budget }) => {
            assert_eq!(needed, 135_751);
            assert_eq!(budget, 10_000);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn noise_stability_examples() {
    let hs = HalfSpace::new(&[0.0, 1.0]).unwrap();
    let s = SeedStream::new(77);
    for rho in [0.0, 0.5, 0.9] {
        let e = noise_stability(&hs, rho, 200_000, &s).unwrap();
        let want = 1.0 - 2.0 * rho.acos() / PI;
        assert!(within(e.value, e.std_error, want, 4.0), "rho={rho}: {e:?}");
    }
    let one = Constant { dim: 2, value: 1.0 };
    assert_eq!(noise_stability(&one, 0.3, 1000, &s).unwrap().value, 1.0);
    assert!(noise_stability(&hs, 1.2, 10, &s).is_err());
}

#[test]
fn tensor_closed_forms() {
    let x = [0.3, -1.2, 0.7, 2.0];
    let h1 = hermite_tensor(1, &x).unwrap();
    assert_eq!(h1.values, x.to_vec());
    let h2 = hermite_tensor(2, &[0.0; 4]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(h2.get(&[i, j]).unwrap(), if i == j { -1.0 } else { 0.0 });
        }
    }
    let mut rng = SeedStream::new(9).rng();
    let h3 = hermite_tensor(3, &x).unwrap();
    for _ in 0..20 {
        let y = gug_core::geom::sample_gaussian(4, &mut rng);
        let z = gug_core::geom::sample_gaussian(4, &mut rng);
        let w = gug_core::geom::sample_gaussian(4, &mut rng);
        let want = dot(&x, &y) * dot(&x, &z) * dot(&x, &w)
            - dot(&x, &y) * dot(&z, &w)
            - dot(&x, &z) * dot(&y, &w)
            - dot(&x, &w) * dot(&y, &z);
        let got = h3.contract(&[&y, &z, &w]).unwrap();
        assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()));
    }
}

#[test]
fn hs_inner_examples() {
    let shape = TensorShape::new(3, 2).unwrap();
    let mut e11 = SymmetricTensor::zeros(shape.clone());
    e11.values[shape.rank(&[0, 0]).unwrap()] = 1.0;
    assert_eq!(e11.hs_inner(&e11).unwrap(), 1.0);
    let mut id = SymmetricTensor::zeros(shape.clone());
    for i in 0..3 {
        id.values[shape.rank(&[i, i]).unwrap()] = 1.0;
    }
    assert_eq!(id.hs_inner(&id).unwrap(), 3.0);
    let mut rng = SeedStream::new(4).rng();
    for _ in 0..20 {
        let x = gug_core::geom::sample_gaussian(5, &mut rng);
        let y = gug_core::geom::sample_gaussian(5, &mut rng);
        let a = hermite_tensor(2, &x).unwrap();
        let b = hermite_tensor(2, &y).unwrap();
        let want = dot(&x, &y).powi(2) - dot(&x, &x) - dot(&y, &y) + 5.0;
        assert!((a.hs_inner(&b).unwrap() - want).abs() < 1e-10 * (1.0 + want.abs()));
        let ha = hermite_tensor(1, &x).unwrap();
        assert!(ha.hs_inner(&b).is_err());
    }
}

#[test]
fn hs_inner_matches_dense_frobenius() {
    let mut rng = SeedStream::new(12).rng();
    let shape = TensorShape::new(4, 3).unwrap();
    let mut a = SymmetricTensor::zeros(shape.clone());
    let mut b = SymmetricTensor::zeros(shape.clone());
    for v in a.values.iter_mut().chain(b.values.iter_mut()) {
        *v = gug_core::rng::normal(&mut rng);
    }
    let da = a.to_dense().unwrap();
    let db = b.to_dense().unwrap();
    let dense: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
    assert!((a.hs_inner(&b).unwrap() - dense).abs() < 1e-10);
    // any ordering of the same indices reads the same entry
    assert_eq!(a.get(&[2, 0, 1]).unwrap(), a.get(&[1, 2, 0]).unwrap());
}

#[test]
fn projection_examples() {
    let x = [1.0, 2.0, -0.5];
    let h1 = hermite_tensor(1, &x).unwrap();
    let eye: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    assert_eq!(h1.project(&eye).unwrap().values, h1.values);
    let e1 = hermite_tensor(1, &[1.0, 0.0, 0.0]).unwrap();
    let off = e1.project(&eye[1..]).unwrap();
    assert!(off.values.iter().all(|v| v.abs() < 1e-15));
    let theta = [0.6, 0.0, 0.8];
    let p = h1.project(&Hyperplane::from_normal(&theta).unwrap().basis).unwrap();
    let d = dot(&x, &theta);
    for i in 0..3 {
        assert!((p.values[i] - (x[i] - d * theta[i])).abs() < 1e-12);
    }
    assert!(h1.project(&[vec![1.0, 1.0, 0.0]]).is_err());
}

#[test]
fn reconstruction_examples() {
    let sigma = [0.6, 0.8];
    let series = HermiteSeries::from_terms(2, [(MultiIndex::unit(0), 0.6 * E_ABS_GAUSS), (MultiIndex::unit(1), 0.8 * E_ABS_GAUSS)])
        .unwrap();
    let b1 = barycenter_from_series(&series, 1).unwrap();
    let x = [0.4, -1.3];
    assert!((reconstruct_degree_part(&b1, &x).unwrap() - E_ABS_GAUSS * dot(&sigma, &x)).abs() < 1e-14);
    let zero = SymmetricTensor::zeros(TensorShape::new(2, 2).unwrap());
    assert_eq!(reconstruct_degree_part(&zero, &x).unwrap(), 0.0);
    let h20 = HermiteSeries::from_terms(2, [(MultiIndex::from_exponents(&[2]), 1.0)]).unwrap();
    let b2 = barycenter_from_series(&h20, 2).unwrap();
    for i in -10..=10 {
        let t = i as f64 * 0.3;
        let got = reconstruct_degree_part(&b2, &[t, 0.7]).unwrap();
        assert!((got - hermite_1d(2, t)).abs() < 1e-12);
    }
}

#[test]
fn barycenter_examples() {
    let sigma = [0.0, 0.6, 0.8];
    let hs = HalfSpace::new(&sigma).unwrap();
    let s = SeedStream::new(31);
    let pair = barycenter(&hs, 1, 200_000, None, &s).unwrap();
    let m = pair.mean();
    for i in 0..3 {
        assert!((m.values[i] - E_ABS_GAUSS * sigma[i]).abs() < 0.01, "{:?}", m.values);
    }
    let theta = [0.0, 1.0, 0.0];
    let r = barycenter_on_hyperplane(&hs, 1, 200_000, &theta, &s).unwrap().mean();
    let p = Hyperplane::from_normal(&theta).unwrap().project(&sigma);
    let pn = norm(&p);
    for i in 0..3 {
        assert!((r.values[i] - E_ABS_GAUSS * p[i] / pn).abs() < 0.01, "{:?}", r.values);
    }
    let one = Constant { dim: 3, value: 1.0 };
    let c = barycenter(&one, 1, 100_000, None, &s).unwrap().mean();
    assert!(c.values.iter().all(|v| v.abs() < 0.015));
    assert!(barycenter_on_hyperplane(&hs, 1, 10, &[0.0, 2.0, 0.0], &s).is_err());
}

#[test]
fn split_cross_product_is_unbiased() {
    let hs: Arc<dyn GaussFn> = Arc::new(HalfSpace::new(&[1.0, 0.0, 0.0, 0.0]).unwrap());
    let s = SeedStream::new(8);
    let vals: Vec<f64> =
        (0..200).map(|r| barycenter(&hs, 1, 400, None, &s.child(r)).unwrap().norm_sq().unwrap()).collect();
    let m: gug_core::stats::Moments = vals.iter().copied().collect();
    let e = m.estimate();
    assert!(within(e.value, e.std_error, 2.0 / PI, 3.0), "{e:?}");
    // the naive squared norm of one replica is biased upward by about dim/n
    let naive: f64 = (0..200)
        .map(|r| barycenter(&hs, 1, 400, None, &s.child(r)).unwrap().first.hs_norm_sq())
        .sum::<f64>()
        / 200.0;
    assert!(naive > 2.0 / PI + 0.004);
}
