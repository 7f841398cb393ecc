use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Gamma};
use simpson_core::contingency::detect_simpson;
use simpson_core::frequency::{aggregation_ks, estimate_frequency, ks_statistic, sample_paradox_tables, DirichletSpec};
use simpson_core::parallel::chunk_rng;

/// Paradox check written directly on the eight cells, `i*4 + k*2 + m`.
fn oracle_paradox(q: &[f64; 8]) -> bool {
    let p = |i: usize, k: usize, m: usize| q[i * 4 + k * 2 + m];
    let fine = |k: usize, m: usize| p(0, k, m) / (p(0, k, m) + p(1, k, m));
    let agg = |k: usize| (p(0, k, 0) + p(0, k, 1)) / (p(0, k, 0) + p(0, k, 1) + p(1, k, 0) + p(1, k, 1));
    let d = agg(0) - agg(1);
    d * (fine(0, 0) - fine(1, 0)) < 0.0 && d * (fine(0, 1) - fine(1, 1)) < 0.0
}

#[test]
fn frequency_agrees_with_independent_gamma_sampler() {
    let n = 1_000_000u64;
    let alpha = 0.125;
    let gamma = Gamma::new(alpha, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(99);
    let mut hits = 0u64;
    for _ in 0..n {
        let mut q = [0.0; 8];
        q.iter_mut().for_each(|v| *v = gamma.sample(&mut rng));
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= s);
        hits += oracle_paradox(&q) as u64;
    }
    let oracle = hits as f64 / n as f64;
    let est = estimate_frequency(alpha, n, 5, None).unwrap();
    let se = (est.stderr.powi(2) + oracle * (1.0 - oracle) / n as f64).sqrt();
    assert!((est.fraction - oracle).abs() < 5.0 * se, "{} vs {oracle}", est.fraction);
}

#[test]
fn frequency_decreases_with_alpha() {
    let f: Vec<f64> = [0.125, 0.5, 1.0]
        .iter()
        .map(|&a| estimate_frequency(a, 1_000_000, 1, None).unwrap().fraction)
        .collect();
    assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
}

#[test]
fn estimate_is_thread_count_independent() {
    let a = estimate_frequency(0.125, 300_000, 42, Some(1)).unwrap();
    let b = estimate_frequency(0.125, 300_000, 42, Some(7)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.fraction.to_bits(), b.fraction.to_bits());
    let expected = (a.fraction * (1.0 - a.fraction) / a.n_samples as f64).sqrt();
    assert_eq!(a.stderr, expected);
}

#[test]
fn single_sample_gives_zero_stderr() {
    for seed in 0..20 {
        let e = estimate_frequency(0.125, 1, seed, None).unwrap();
        assert!(e.fraction == 0.0 || e.fraction == 1.0);
        assert_eq!(e.stderr, 0.0);
    }
    assert!(estimate_frequency(0.125, 0, 0, None).is_err());
    assert!(estimate_frequency(0.0, 10, 0, None).is_err());
}

#[test]
fn uniform_two_dim_mean_is_half() {
    let spec = DirichletSpec::symmetric(1.0, 2).unwrap();
    let mut rng = chunk_rng(3, 0);
    let n = 1_000_000;
    let mean = (0..n).map(|_| spec.sample(&mut rng)[0]).sum::<f64>() / n as f64;
    assert!((mean - 0.5).abs() < 0.002, "{mean}");
}

#[test]
fn eight_dim_components_are_exchangeable() {
    let spec = DirichletSpec::non_informative(8).unwrap();
    let mut rng = chunk_rng(4, 0);
    let n = 200_000;
    let mut sum = [0.0; 8];
    let mut sq = [0.0; 8];
    for _ in 0..n {
        let q = spec.sample(&mut rng);
        assert!(q.iter().all(|v| *v >= 0.0));
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..8 {
            sum[k] += q[k];
            sq[k] += q[k] * q[k];
        }
    }
    for k in 0..8 {
        let mean = sum[k] / n as f64;
        let se = ((sq[k] / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 0.125).abs() < 3.0 * se, "component {k}: {mean} ± {se}");
    }
}

#[test]
fn pairwise_aggregation_matches_doubled_alpha() {
    for alpha in [0.125, 0.5, 1.0] {
        let d = aggregation_ks(alpha, 100_000, 8, None).unwrap();
        assert!(d < 0.01, "alpha {alpha}: KS {d}");
    }
}

#[test]
fn ks_statistic_on_known_samples() {
    assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
    assert_eq!(ks_statistic(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
    assert!((ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[3.5]) - 0.75).abs() < 1e-15);
}

#[test]
fn rejection_sampler_returns_paradoxes() {
    let s = sample_paradox_tables(0.125, 2000, 9).unwrap();
    assert_eq!(s.tables.len(), 2000);
    for t in &s.tables {
        assert!(detect_simpson(t).unwrap().status.is_paradox());
        assert!(oracle_paradox(&t.to_flat()));
    }
    // the strict classifier accepts slightly fewer than the sign-product count of about 4.3%
    let rate = s.acceptance_rate();
    assert!((rate - 0.043).abs() < 0.004, "{rate}");
    let empty = sample_paradox_tables(0.125, 0, 9).unwrap();
    assert!(empty.tables.is_empty());
    assert_eq!(empty.draws, 0);
}
