use approx::assert_relative_eq;
use boltzmann_sampler::*;
use ising_model::{chain_problem, classical_energy, IsingProblem, SpinConfiguration};
use proptest::prelude::*;

/// Independent brute-force weights `exp(-β E)` normalized.
fn enumerate(p: &IsingProblem, beta: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..p.dim())
        .map(|x| (-beta * classical_energy(p, &SpinConfiguration::from_index(x, p.n)).unwrap()).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

fn empirical<F: FnMut(u64) -> SpinConfiguration>(dim: usize, draws: usize, mut f: F) -> Vec<f64> {
    let mut counts = vec![0usize; dim];
    for k in 0..draws {
        counts[f(k as u64).index()] += 1;
    }
    counts.into_iter().map(|c| c as f64 / draws as f64).collect()
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn partition_function_examples() {
    let p2 = chain_problem(2).unwrap();
    assert_relative_eq!(partition_function_chain(&p2, 0.0).unwrap(), 4.0, epsilon = 1e-14);
    let e = std::f64::consts::E;
    let z = partition_function_chain(&p2, 1.0).unwrap();
    assert_relative_eq!(z, 2.0 * e + 2.0 / e, epsilon = 1e-12);
    assert_relative_eq!(z, 6.1723, epsilon = 1e-4);
    let p10 = chain_problem(10).unwrap();
    let brute: f64 = (0..1024)
        .map(|x| (-3.25 * classical_energy(&p10, &SpinConfiguration::from_index(x, 10)).unwrap()).exp())
        .sum();
    assert_relative_eq!(partition_function_chain(&p10, 3.25).unwrap(), brute, max_relative = 1e-9);
}

#[test]
fn long_chain_log_partition_function_is_finite() {
    let p = chain_problem(300).unwrap();
    let lz = log_partition_function_chain(&p, 3.25).unwrap();
    // Z = 2 (2 cosh β)^(l-1) for the open zero-field chain
    let want = 2f64.ln() + 299.0 * (2.0 * 3.25f64.cosh()).ln();
    assert_relative_eq!(lz, want, max_relative = 1e-12);
}

#[test]
fn non_chain_rejected() {
    let tri = IsingProblem::new(3, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], vec![0.0; 3], 1.0).unwrap();
    assert!(matches!(partition_function_chain(&tri, 1.0), Err(SamplerError::Topology(_))));
    let mut rng = stream_rng(1, 0);
    assert!(sample_chain_exact(&tri, 1.0, &mut rng).is_err());
}

#[test]
fn exact_sampler_uniform_at_infinite_temperature() {
    let p = chain_problem(4).unwrap();
    let n = 100_000;
    let freq = empirical(16, n, |k| sample_chain_exact(&p, 0.0, &mut stream_rng(7, k)).unwrap());
    let expected = n as f64 / 16.0;
    let chi2: f64 = freq.iter().map(|f| (f * n as f64 - expected).powi(2) / expected).sum();
    // 15 degrees of freedom, 99.9% quantile 37.7
    assert!(chi2 < 37.7, "chi2 = {chi2}");
}

#[test]
fn exact_sampler_low_temperature_limit() {
    let p = chain_problem(4).unwrap();
    let draws = 20_000;
    let freq = empirical(16, draws, |k| sample_chain_exact(&p, 50.0, &mut stream_rng(3, k)).unwrap());
    let neel = SpinConfiguration::neel(4);
    let a = freq[neel.index()];
    let b = freq[neel.flipped().index()];
    assert_relative_eq!(a + b, 1.0, epsilon = 1e-12);
    assert!((a - 0.5).abs() < 0.02);
}

#[test]
fn exact_sampler_two_spin_ratio() {
    let p = chain_problem(2).unwrap();
    let e = std::f64::consts::E;
    let want = e / (2.0 * e + 2.0 / e);
    assert_relative_eq!(want, 0.4404, epsilon = 1e-4);
    assert_relative_eq!(boltzmann_distribution(&p, 1.0).unwrap()[SpinConfiguration::new(vec![1, -1]).unwrap().index()], want, epsilon = 1e-12);
    let draws = 200_000;
    let freq = empirical(4, draws, |k| sample_chain_exact(&p, 1.0, &mut stream_rng(11, k)).unwrap());
    let pm = freq[SpinConfiguration::new(vec![1, -1]).unwrap().index()];
    assert!((pm - want).abs() < 4.0 * (want * (1.0 - want) / draws as f64).sqrt());
}

#[test]
fn exact_sampler_total_variation() {
    for (l, beta) in [(6usize, 0.4), (8, 1.0), (10, 3.25)] {
        let p = chain_problem(l).unwrap();
        let freq = empirical(p.dim(), 100_000, |k| sample_chain_exact(&p, beta, &mut stream_rng(5, k)).unwrap());
        let d = tv(&freq, &enumerate(&p, beta));
        assert!(d < 0.02, "l = {l}, beta = {beta}, tv = {d}");
    }
}

#[test]
fn metropolis_matches_enumeration() {
    let p4 = chain_problem(4).unwrap();
    let freq = empirical(16, 100_000, |k| sample_mcmc(&p4, 0.0, &mut stream_rng(2, k), Some(5), Some(1)));
    assert!(tv(&freq, &enumerate(&p4, 0.0)) < 0.01);
    let mut rng = stream_rng(9, 0);
    let mut chain = MetropolisChain::new(&p4, 1.0, &mut rng, None, None);
    let freq = empirical(16, 100_000, |_| chain.next_sample(&mut rng));
    assert!(tv(&freq, &enumerate(&p4, 1.0)) < 0.01);
    let tri = IsingProblem::new(3, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], vec![0.0; 3], 1.0).unwrap();
    let mut rng = stream_rng(10, 0);
    let mut chain = MetropolisChain::new(&tri, 2.0, &mut rng, None, None);
    let freq = empirical(8, 100_000, |_| chain.next_sample(&mut rng));
    assert!(tv(&freq, &enumerate(&tri, 2.0)) < 0.01);
}

#[test]
fn fields_use_metropolis_fallback() {
    let p = IsingProblem::new(3, vec![(0, 1, 1.0), (1, 2, -0.5)], vec![0.3, 0.0, -0.7], 1.0).unwrap();
    let freq = empirical(8, 50_000, |k| sample_chain_exact(&p, 1.0, &mut stream_rng(4, k)).unwrap());
    assert!(tv(&freq, &enumerate(&p, 1.0)) < 0.02);
    assert_relative_eq!(
        log_partition_function_chain(&p, 1.3).unwrap(),
        log_partition_function_enumeration(&p, 1.3).unwrap(),
        epsilon = 1e-12
    );
}

#[test]
fn initial_configs_are_deterministic() {
    let p = chain_problem(8).unwrap();
    let prep = PreparationSpec { beta1: 0.5, seed: 42, n_configs: 50, repeats_per_config: 2 };
    let a = draw_initial_configs(&p, &prep).unwrap();
    let b = draw_initial_configs(&p, &prep).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 50);
    assert_eq!(prep.total_runs(), 100);
    // stream k is independent of how many other draws are made
    let short = draw_initial_configs(&p, &PreparationSpec { n_configs: 10, ..prep.clone() }).unwrap();
    assert_eq!(&a[..10], &short[..]);
    assert!(draw_initial_configs(&p, &PreparationSpec { beta1: -1.0, ..prep.clone() }).is_err());
    assert!(draw_initial_configs(&p, &PreparationSpec { n_configs: 0, ..prep }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chain_partition_function_matches_enumeration(
        js in proptest::collection::vec(-2.0f64..2.0, 1..10),
        beta in 0.0f64..4.0,
    ) {
        let n = js.len() + 1;
        let couplings = js.iter().enumerate().map(|(i, &v)| (i, i + 1, v)).collect();
        let p = IsingProblem::new(n, couplings, vec![0.0; n], 1.0).unwrap();
        let a = log_partition_function_chain(&p, beta).unwrap();
        let b = log_partition_function_enumeration(&p, beta).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn log_partition_function_is_convex(l in 2usize..30, beta in 0.0f64..5.0) {
        let p = chain_problem(l).unwrap();
        let h = 1e-3;
        let f = |b: f64| log_partition_function_chain(&p, b).unwrap();
        let second = f(beta + 2.0 * h) - 2.0 * f(beta + h) + f(beta);
        prop_assert!(second >= -1e-10);
    }

    #[test]
    fn seeded_draws_repeat(seed in 0u64..1000, k in 0u64..1000, beta in 0.0f64..4.0) {
        let p = chain_problem(6).unwrap();
        let a = sample_chain_exact(&p, beta, &mut stream_rng(seed, k)).unwrap();
        let b = sample_chain_exact(&p, beta, &mut stream_rng(seed, k)).unwrap();
        prop_assert_eq!(a, b);
    }
}
