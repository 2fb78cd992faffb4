use std::f64::consts::PI;
use std::sync::Arc;

use gug_core::functions::{
    adversary_zoo, check_folded, fold, AdversaryKind, AdversaryParams, FoldedFunction, GaussFn, HalfSpace,
};
use gug_core::geom::{dot, sample_gaussian, sample_sphere, span_orthonormalize};
use gug_core::hermite::{noise_stability, project_low_degree_split, LowDegreeOptions};
use gug_core::rng::SeedStream;

/// Random projector (entries in [-1, 1]) onto a `rank`-dimensional subspace of `sigma^perp`.
fn constraint_killing(sigma: &[f64], rank: usize, seed: u64) -> Vec<Vec<f64>> {
    let k = sigma.len();
    let mut rng = SeedStream::new(seed).rng();
    let gens: Vec<Vec<f64>> = (0..rank)
        .map(|_| {
            let g = sample_gaussian(k, &mut rng);
            let d = dot(&g, sigma);
            g.iter().zip(sigma).map(|(a, s)| a - d * s).collect()
        })
        .collect();
    let w = span_orthonormalize(&gens).unwrap().basis;
    (0..k).map(|i| (0..k).map(|j| w.iter().map(|b| b[i] * b[j]).sum()).collect()).collect()
}

#[test]
fn halfspace_is_zero_homogeneous() {
    let mut rng = SeedStream::new(1).rng();
    let sigma = sample_sphere(6, &mut rng);
    let h = HalfSpace::new(&sigma).unwrap();
    for _ in 0..1000 {
        let x = sample_gaussian(6, &mut rng);
        let y: Vec<f64> = x.iter().map(|v| 5.0 * v).collect();
        assert_eq!(h.eval(&x), h.eval(&y));
    }
    let mut e1 = vec![0.0; 6];
    e1[0] = 1.0;
    let e = HalfSpace::new(&e1).unwrap();
    assert_eq!(e.eval(&[3.0, 1.0, 1.0, 1.0, 1.0, 1.0]), 1.0);
    assert_eq!(e.eval(&[-3.0, 1.0, 1.0, 1.0, 1.0, 1.0]), -1.0);
}

#[test]
fn folded_halfspace_is_a_fixed_point() {
    let mut rng = SeedStream::new(2).rng();
    let sigma = sample_sphere(12, &mut rng);
    let a = constraint_killing(&sigma, 4, 3);
    let hs = HalfSpace::new(&sigma).unwrap();
    let f = fold(Arc::new(hs.clone()), &a).unwrap();
    assert_eq!(f.constraint_basis().len(), 4);
    for _ in 0..1000 {
        let x = sample_gaussian(12, &mut rng);
        assert_eq!(f.eval(&x), hs.eval(&x));
    }
}

fn check_invariants(f: &FoldedFunction, seed: u64) {
    let k = f.dim();
    let mut rng = SeedStream::new(seed).rng();
    check_folded(f, 1000, &SeedStream::new(seed + 1)).unwrap();
    let a = f.constraint().to_vec();
    for _ in 0..1000 {
        let x = sample_gaussian(k, &mut rng);
        let u = sample_gaussian(k, &mut rng);
        let mut y = x.clone();
        // x + A^T u
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (0..a.len()).map(|r| a[r][i] * u[r]).sum::<f64>();
        }
        assert_eq!(f.eval(&x), f.eval(&y));
    }
}

#[test]
fn folding_invariants_and_idempotence() {
    let mut rng = SeedStream::new(4).rng();
    let k = 10;
    let sigma = sample_sphere(k, &mut rng);
    let a = constraint_killing(&sigma, 3, 5);
    let raw = Arc::new(HalfSpace::new(&sample_sphere(k, &mut rng)).unwrap());
    let f = Arc::new(fold(raw, &a).unwrap());
    check_invariants(&f, 6);
    let ff = fold(f.clone(), &a).unwrap();
    for _ in 0..1000 {
        let x = sample_gaussian(k, &mut rng);
        assert_eq!(ff.eval(&x), f.eval(&x));
    }
}

#[test]
fn zoo_members_are_folded() {
    let k = 8;
    let mut rng = SeedStream::new(7).rng();
    let sigma = sample_sphere(k, &mut rng);
    let mut params = AdversaryParams::new(k);
    params.constraint = constraint_killing(&sigma, 2, 8);
    params.cell_size = 0.05;
    for (i, kind) in [
        AdversaryKind::MajorityOfThreeHalfspaces,
        AdversaryKind::SignOfRandomDegree3Poly,
        AdversaryKind::RandomBalancedCell,
    ]
    .into_iter()
    .enumerate()
    {
        let f = adversary_zoo(kind, &params, &SeedStream::new(10 + i as u64)).unwrap();
        check_invariants(&f, 20 + i as u64);
    }
}

#[test]
fn noise_stable_low_degree_bound() {
    // ||f^{<=d}||^2 >= <f, T_rho f> - rho^d for (beta, d) = (0.1, 10)
    let (beta, d) = (0.1f64, 10usize);
    let rho = 1.0 - beta;
    let hs = HalfSpace::new(&[1.0, 0.0]).unwrap();
    let s = SeedStream::new(9);
    let (a, b) = project_low_degree_split(&hs, &LowDegreeOptions::new(d, 100_000), &s).unwrap();
    let weight = a.series.inner(&b.series);
    let stab = noise_stability(&hs, rho, 400_000, &s).unwrap();
    let oracle = 1.0 - 2.0 * rho.acos() / PI;
    assert!((stab.value - oracle).abs() < 4.0 * stab.std_error);
    assert!(weight >= stab.value - rho.powi(d as i32) - 3.0 * stab.std_error, "{weight}");
}
