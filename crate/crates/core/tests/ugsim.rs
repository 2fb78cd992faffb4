use std::sync::Arc;

use gug_core::functions::{fold, Constant, GaussFn, HalfSpace, RandomCells};
use gug_core::rng::SeedStream;
use gug_core::sni::{generate_planted, generate_planted_with, PlantedConfig};
use gug_core::ugsim::*;
use gug_core::Error;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn hs(v: &[f64]) -> HalfSpace {
    HalfSpace::new(v).unwrap()
}

/// Sign disagreement of a standard bivariate normal pair with correlation `rho`.
fn bivariate_disagreement(rho: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let s = (1.0 - rho * rho).sqrt();
    let mut bad = 0usize;
    for _ in 0..n {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        if (a >= 0.0) != (rho * a + s * b >= 0.0) {
            bad += 1;
        }
    }
    let p = bad as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[test]
fn noise_oracle_value() {
    let beta = 0.01;
    let closed = noise_rejection_oracle(beta);
    let (mc, se) = bivariate_disagreement((1.0 - beta) * (1.0 - beta), 1 << 21, 99);
    assert!((closed - mc).abs() < 3.0 * se, "closed {closed} vs 2-D MC {mc} +- {se}");
    assert!((closed - 0.0635).abs() < 5e-4);
}

#[test]
fn noise_test_on_half_space_matches_oracle() {
    let f = fold(Arc::new(hs(&[0.3, -0.2, 0.9, 0.1])), &[]).unwrap();
    for (i, beta) in [1e-4, 1e-3, 1e-2].into_iter().enumerate() {
        let counts = noise_rejection(&f, beta, 1 << 20, &SeedStream::new(10 + i as u64));
        let est = counts.estimate();
        let oracle = noise_rejection_oracle(beta);
        assert!((est.value - oracle).abs() <= 3.0 * est.std_error, "beta {beta}: {est:?} vs {oracle}");
    }
}

#[test]
fn noise_test_controls() {
    let c = Constant { dim: 5, value: 1.0 };
    assert_eq!(noise_rejection(&c, 0.1, 10_000, &SeedStream::new(1)).rejections, 0);
    let cells = fold(Arc::new(RandomCells::new(5, 1e-9, 7)), &[]).unwrap();
    let est = noise_rejection(&cells, 0.01, 100_000, &SeedStream::new(2)).estimate();
    assert!((est.value - 0.5).abs() < 4.0 * est.std_error, "{est:?}");
}

#[test]
fn consistency_test_controls() {
    let mut rng = SeedStream::new(3).rng();
    let theta = [0.0, 0.0, 1.0, 0.0];
    let f = fold(Arc::new(hs(&[1.0, 2.0, 3.0, 4.0])), &[]).unwrap();
    assert!((0..10_000).all(|_| consistency_test(&f, &f, &theta, &mut rng)));

    // sigma and sigma' differ only along theta
    let g = fold(Arc::new(hs(&[1.0, 2.0, -5.0, 4.0])), &[]).unwrap();
    assert!((0..10_000).all(|_| consistency_test(&f, &g, &theta, &mut rng)));

    let e1 = fold(Arc::new(hs(&[1.0, 0.0, 0.0, 0.0])), &[]).unwrap();
    let e2 = fold(Arc::new(hs(&[0.0, 1.0, 0.0, 0.0])), &[]).unwrap();
    let n = 200_000;
    let rej = (0..n).filter(|_| !consistency_test(&e1, &e2, &theta, &mut rng)).count() as f64 / n as f64;
    assert!((rej - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{rej}");
}

#[test]
fn verifier_params() {
    assert!((VerifierParams::default_beta(2.0) - 2.5e-11).abs() < 1e-24);
    let p = VerifierParams::with_beta(1.0, 0.05, 1e-2, 16).unwrap();
    assert!((p.p - 0.125).abs() < 1e-15);
    assert_eq!(VerifierParams::with_beta(1.0, 0.05, 1e-4, 16).unwrap().p, P_CAP);
    assert!(VerifierParams::new(0.5, 0.05, 1e-3, 0.2).is_err());
    assert!(VerifierParams::new(1.0, 0.05, 1.0, 0.2).is_err());
    assert!(VerifierParams::new(1.0, 0.05, 1e-3, 1.2).is_err());
}

#[test]
fn game_value_single_test_modes_and_reproducibility() {
    let (inst, lab) = generate_planted(8, 16, 3, 0.2, 4).unwrap();
    let a = UgAssignment::half_spaces(&inst, &lab).unwrap();
    let only_cons = VerifierParams::new(1.0, 0.2, 1e-3, 0.0).unwrap();
    let r = estimate_game_value(&inst, &a, &only_cons, 20_000, &SeedStream::new(5)).unwrap();
    assert_eq!(r.noise.trials, 0);
    assert_eq!(r.consistency.trials, 20_000);
    let only_noise = VerifierParams::new(1.0, 0.2, 1e-3, 1.0).unwrap();
    let r = estimate_game_value(&inst, &a, &only_noise, 20_000, &SeedStream::new(5)).unwrap();
    assert_eq!(r.consistency.trials, 0);

    let mixed = VerifierParams::new(1.0, 0.2, 1e-3, 0.3).unwrap();
    let r1 = estimate_game_value(&inst, &a, &mixed, 50_000, &SeedStream::new(6)).unwrap();
    let r2 = estimate_game_value(&inst, &a, &mixed, 50_000, &SeedStream::new(6)).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.rejection.to_bits(), r2.rejection.to_bits());
    let (lo, hi) = r1.acceptance_ci95;
    assert!(lo <= r1.acceptance.value && r1.acceptance.value <= hi);
}

#[test]
fn exact_edges_reject_only_in_noise_test() {
    let p = generate_planted_with(&PlantedConfig::new(16, 32, 4, 0.001), &SeedStream::new(7)).unwrap();
    assert!(p.violated.is_empty());
    let a = UgAssignment::half_spaces(&p.instance, &p.labeling).unwrap();
    let params = VerifierParams::new(1.0, 0.05, 1e-3, 0.3).unwrap();
    let r = estimate_game_value(&p.instance, &a, &params, 200_000, &SeedStream::new(8)).unwrap();
    assert_eq!(r.consistency.rejections, 0);
    let est = r.noise.estimate();
    assert!((est.value - noise_rejection_oracle(1e-3)).abs() <= 3.0 * est.std_error);
}

#[test]
fn completeness_small_run() {
    let cfg = CompletenessConfig { trials: 200_000, edge_trials: 20_000, ..Default::default() };
    let r = completeness_experiment(&cfg, &SeedStream::new(9)).unwrap();
    assert!(r.game.rejection <= r.rejection_bound, "{r:?}");
    assert_eq!(r.satisfied_rejections, 0);
    assert!(r.per_violated_rejection > 0.0);
}

#[test]
fn constant_assignment_is_rejected() {
    let (inst, _) = generate_planted(6, 8, 3, 0.2, 1).unwrap();
    let fs: Vec<Arc<dyn GaussFn>> = (0..8).map(|_| Arc::new(Constant { dim: 6, value: 1.0 }) as Arc<dyn GaussFn>).collect();
    assert!(matches!(UgAssignment::new(&inst, fs, &SeedStream::new(0)), Err(Error::InvalidFunction(_))));
}

#[test]
fn typicality_planted_and_adversarial() {
    let (inst, lab) = generate_planted(16, 32, 4, 0.05, 12).unwrap();
    let params = VerifierParams::new(1.0, 0.05, 1e-6, 0.5).unwrap();
    let a = UgAssignment::half_spaces(&inst, &lab).unwrap();
    let rep = typicality_report(&inst, &a, &params, 4096, &SeedStream::new(13));
    assert!(rep.vertex_fraction >= 0.9, "{}", rep.vertex_fraction);
    assert!(rep.edge_fraction >= 0.7, "{}", rep.edge_fraction);

    let fs: Vec<Arc<dyn GaussFn>> = (0..32)
        .map(|v| Arc::new(fold(Arc::new(RandomCells::new(16, 1e-9, v)), &inst.constraints[v as usize]).unwrap()) as Arc<dyn GaussFn>)
        .collect();
    let adv = UgAssignment::new(&inst, fs, &SeedStream::new(14)).unwrap();
    let rep = typicality_report(&inst, &adv, &params, 1024, &SeedStream::new(15));
    assert!(rep.vertex_fraction <= 0.05, "{}", rep.vertex_fraction);
    assert!(rep.edge_fraction <= 0.05);
}
