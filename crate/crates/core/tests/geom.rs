use gug_core::functions::{Constant, FnGauss, HalfSpace};
use gug_core::geom::{
    check_orthonormal, correlated_pair, dot, fit_sampling_constant, norm, sample_gaussian, sample_sphere,
    span_orthonormalize, validate_sampling_lemma, Hyperplane,
};
use gug_core::rng::SeedStream;
use gug_core::stats::Moments;

#[test]
fn gaussian_coordinates() {
    let mut rng = SeedStream::new(1).rng();
    let mut m0 = Moments::default();
    let mut m1 = Moments::default();
    let mut cross = Moments::default();
    for _ in 0..1_000_000 {
        let x = sample_gaussian(2, &mut rng);
        m0.push(x[0]);
        m1.push(x[1]);
        cross.push(x[0] * x[1]);
    }
    assert!(m0.mean().abs() < 3e-3 && m1.mean().abs() < 3e-3);
    assert!((m0.variance() - 1.0).abs() < 5e-3 && (m1.variance() - 1.0).abs() < 5e-3);
    assert!(cross.mean().abs() < 3e-3);
}

#[test]
fn sphere_moments() {
    let n = 6;
    // theta_1^2 ~ Beta(1/2, (n-1)/2): E = a/(a+b), E^2 = a(a+1)/((a+b)(a+b+1))
    let (a, b) = (0.5, (n as f64 - 1.0) / 2.0);
    let m2_oracle = a / (a + b);
    let m4_oracle = a * (a + 1.0) / ((a + b) * (a + b + 1.0));
    assert!((m2_oracle - 1.0 / n as f64).abs() < 1e-15);
    assert!((m4_oracle - 3.0 / (n * (n + 2)) as f64).abs() < 1e-15);
    let mut rng = SeedStream::new(2).rng();
    let mut m2 = Moments::default();
    let mut m4 = Moments::default();
    for _ in 0..400_000 {
        let t = sample_sphere(n, &mut rng);
        assert!((norm(&t) - 1.0).abs() < 1e-12);
        m2.push(t[0] * t[0]);
        m4.push(t[0].powi(4));
    }
    let (e2, e4) = (m2.estimate(), m4.estimate());
    assert!((e2.value - m2_oracle).abs() < 4.0 * e2.std_error);
    assert!((e4.value - m4_oracle).abs() < 4.0 * e4.std_error);
}

#[test]
fn correlated_pairs() {
    let mut rng = SeedStream::new(3).rng();
    let beta = 0.1;
    let mut cov = Moments::default();
    let mut var = Moments::default();
    for _ in 0..200_000 {
        let (x, z) = correlated_pair(3, beta, &mut rng).unwrap();
        cov.push(x[1] * z[1]);
        var.push(x[2] * x[2]);
    }
    let c = cov.estimate();
    assert!((c.value - 0.81).abs() < 4.0 * c.std_error, "{c:?}");
    let v = var.estimate();
    assert!((v.value - 1.0).abs() < 4.0 * v.std_error, "{v:?}");
    let beta = 1e-3;
    let mut diff = Moments::default();
    for _ in 0..100_000 {
        let (x, z) = correlated_pair(2, beta, &mut rng).unwrap();
        diff.push((x[0] - z[0]).powi(2));
    }
    let want = 2.0 - 2.0 * (1.0 - beta) * (1.0 - beta);
    let d = diff.estimate();
    assert!((d.value - want).abs() < 4.0 * d.std_error, "{d:?} vs {want}");
    assert!(correlated_pair(2, 0.0, &mut rng).is_err());
    assert!(correlated_pair(2, 1.0, &mut rng).is_err());
}

#[test]
fn hyperplane_samples_lie_in_plane() {
    let mut rng = SeedStream::new(4).rng();
    let theta = sample_sphere(9, &mut rng);
    let h = Hyperplane::from_normal(&theta).unwrap();
    let e1 = Hyperplane::from_normal(&[1.0, 0.0, 0.0]).unwrap();
    for b in &e1.basis {
        assert!(b[0].abs() < 1e-12);
    }
    let mut x = vec![0.0; 9];
    for _ in 0..1000 {
        h.sample_into(&mut rng, &mut x);
        assert!(dot(&x, &theta).abs() < 1e-12);
    }
}

#[test]
fn span_examples() {
    let eye: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    assert_eq!(span_orthonormalize(&eye).unwrap().basis, eye);
    let mut rng = SeedStream::new(5).rng();
    let gens: Vec<Vec<f64>> = (0..7).map(|_| sample_gaussian(20, &mut rng)).collect();
    let s = span_orthonormalize(&gens).unwrap();
    check_orthonormal(&s.basis, 1e-10).unwrap();
    for g in &gens {
        let r = s.project_out(g);
        assert!(norm(&r) < 1e-10 * norm(g));
    }
    let c = s.complement();
    assert_eq!(c.len(), 13);
    let mut all = s.basis.clone();
    all.extend(c);
    check_orthonormal(&all, 1e-10).unwrap();
}

#[test]
fn sampling_lemma_examples() {
    let s = SeedStream::new(6);
    let one = Constant { dim: 8, value: 1.0 };
    let r = validate_sampling_lemma(&one, 0.2, 20, 1000, &s).unwrap();
    assert_eq!(r.failures, 0);
    let hs = HalfSpace::new(&{
        let mut v = vec![0.0; 32];
        v[0] = 1.0;
        v
    })
    .unwrap();
    let r = validate_sampling_lemma(&hs, 0.2, 50, 2000, &s).unwrap();
    assert!(r.failure_rate < 0.05, "{r:?}");

    let rates: Vec<_> = [8usize, 16, 32]
        .iter()
        .map(|&k| {
            let f = FnGauss::new(k, move |x: &[f64]| if dot(x, x) >= k as f64 { 1.0 } else { 0.0 });
            validate_sampling_lemma(&f, 0.1, 30, 20_000, &s.child(k as u64)).unwrap()
        })
        .collect();
    assert!(rates[0].failure_rate >= rates[1].failure_rate, "{rates:?}");
    assert!(rates[1].failure_rate >= rates[2].failure_rate, "{rates:?}");
    assert!(rates[0].failure_rate > rates[2].failure_rate, "{rates:?}");
    let c = fit_sampling_constant(&rates);
    if let Some(c) = c {
        for r in &rates {
            let x = r.epsilon * r.k as f64 / (2.0 / r.epsilon).log2();
            assert!(r.failure_rate <= (-c * x).exp() + 1e-12);
        }
    }
}
