use approx::assert_relative_eq;
use boltzmann_sampler::{stream_rng, PreparationSpec};
use ising_model::{chain_problem, dense_hamiltonian, IsingProblem, SpinConfiguration};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use open_dynamics::*;
use proptest::prelude::*;
use schedule::{constant_schedule, forward_schedule, reverse_schedule, Schedule};

type CM = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn bath(beta2: f64, gamma: f64) -> BathSpec {
    BathSpec::new(beta2, gamma, BathModel::DaviesInstantaneous).unwrap()
}

fn max_abs(m: &CM) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Full master-equation right-hand side from the dense reference dissipator.
fn rhs(p: &IsingProblem, s: f64, b: &BathSpec, rho: &CM) -> (CM, CM) {
    let h = dense_hamiltonian(p, s).unwrap().map(c);
    let d = dissipator(p, s, b).unwrap().apply(rho);
    let i = Complex64::new(0.0, 1.0);
    let comm = (&h * rho - rho * &h) * (-i);
    (comm + &d, d)
}

/// RK4 of the reference master equation with fine steps, accumulating
/// `∫ tr(ρ ∂H/∂t)` and `∫ tr(D(ρ) H)` by the trapezoid rule.
fn rk4_reference(p: &IsingProblem, sch: &Schedule, b: &BathSpec, rho0: &CM, steps: usize) -> (CM, f64, f64) {
    let h0 = dense_hamiltonian(p, 0.0).unwrap();
    let h1 = dense_hamiltonian(p, 1.0).unwrap();
    let dh = &h1 - &h0;
    let dt = sch.tau / steps as f64;
    let slope = |t: f64| {
        let e = 1e-7;
        (sch.eval_clamped((t + e).min(sch.tau)) - sch.eval_clamped((t - e).max(0.0)))
            / ((t + e).min(sch.tau) - (t - e).max(0.0))
    };
    let tr = |rho: &CM, m: &DMatrix<f64>| -> f64 { (rho * m.map(c)).trace().re };
    let mut rho = rho0.clone();
    let (mut work, mut heat) = (0.0, 0.0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let s_at = |t: f64| sch.eval_clamped(t);
        let (k1, d1) = rhs(p, s_at(t), b, &rho);
        let (k2, _) = rhs(p, s_at(t + dt / 2.0), b, &(&rho + &k1 * c(dt / 2.0)));
        let (k3, _) = rhs(p, s_at(t + dt / 2.0), b, &(&rho + &k2 * c(dt / 2.0)));
        let (k4, _) = rhs(p, s_at(t + dt), b, &(&rho + &k3 * c(dt)));
        let next = &rho + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
        let (_, d2) = rhs(p, s_at(t + dt), b, &next);
        let hs = |s: f64| &h0 * (1.0 - s) + &h1 * s;
        // midpoint-sampled slope keeps the kink of piecewise schedules inside one step
        let ts = t + dt / 2.0;
        work += 0.5 * dt * slope(ts) * (tr(&rho, &dh) + tr(&next, &dh));
        heat += 0.5 * dt * (tr(&d1, &hs(s_at(t))) + tr(&d2, &hs(s_at(t + dt))));
        rho = next;
    }
    (rho, work, heat)
}

#[test]
fn rate_detailed_balance() {
    for &w in &[0.0, 0.3, 2.0, 7.5] {
        let up = ohmic_rate(-w, 0.7, 3.25);
        let down = ohmic_rate(w, 0.7, 3.25);
        assert_relative_eq!(down / up, (3.25 * w).exp(), max_relative = 1e-12);
    }
    assert_relative_eq!(ohmic_rate(0.0, 0.7, 3.25), 0.7 / 3.25, epsilon = 1e-15);
    assert_relative_eq!(ohmic_rate(1e-14, 0.7, 3.25), 0.7 / 3.25, max_relative = 1e-12);
    assert_eq!(ohmic_rate(5.0, 0.0, 3.25), 0.0);
}

#[test]
fn bath_validation() {
    assert!(BathSpec::new(0.0, 1.0, BathModel::LocalFlip).is_err());
    assert!(BathSpec::new(1.0, -1.0, BathModel::LocalFlip).is_err());
    assert!(BathSpec::new(f64::INFINITY, 1.0, BathModel::LocalFlip).is_err());
    assert_eq!(bath(1.0, 1.0).coupling_operators(3).len(), 6);
}

#[test]
fn zero_rate_gives_zero_dissipator() {
    let p = chain_problem(3).unwrap();
    let d = dissipator(&p, 0.4, &bath(2.0, 0.0)).unwrap();
    let rho = gibbs_state(&p, 0.1, 1.0).unwrap().matrix;
    assert_eq!(max_abs(&d.apply(&rho)), 0.0);
}

#[test]
fn gibbs_state_is_fixed_point() {
    let chain = chain_problem(4).unwrap();
    let fields = IsingProblem::new(3, vec![(0, 1, 1.0), (1, 2, -0.6), (0, 2, 0.3)], vec![0.2, -0.4, 0.0], 0.8).unwrap();
    for p in [&chain, &fields] {
        for &s in &[0.0, 0.3, 0.5, 0.77, 1.0] {
            for model in [BathModel::DaviesInstantaneous, BathModel::LocalFlip] {
                let b = BathSpec::new(3.25, 0.8, model).unwrap();
                let g = gibbs_state(p, s, 3.25).unwrap();
                let out = dissipator(p, s, &b).unwrap().apply(&g.matrix);
                assert!(max_abs(&out) < 1e-9, "s = {s}, {model:?}: {}", max_abs(&out));
            }
        }
    }
}

#[test]
fn two_spin_pauli_rates_at_s_one() {
    let p = chain_problem(2).unwrap();
    let (g, beta) = (0.6, 1.3);
    let b = bath(beta, g);
    let d = dissipator(&p, 1.0, &b).unwrap();
    // E(x) = s0 s1: aligned states 0, 3 at +1, antialigned 1, 2 at -1
    let e = [1.0, -1.0, -1.0, 1.0];
    let r = |from: usize, to: usize| X_COUPLING_WEIGHT * ohmic_rate(e[from] - e[to], g, beta);
    let mut rates = DMatrix::<f64>::zeros(4, 4);
    for x in 0..4 {
        for i in 0..2 {
            let y = x ^ (1 << i);
            rates[(y, x)] += r(x, y);
            rates[(x, x)] -= r(x, y);
        }
    }
    let pops = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
    let rho = DensityOperator::from_populations(pops.as_slice());
    let out = d.apply(&rho.matrix);
    let want = &rates * &pops;
    for x in 0..4 {
        assert_relative_eq!(out[(x, x)].re, want[x], epsilon = 1e-12);
    }
    // the classical process at s = 1 is the same Pauli equation
    let sch = constant_schedule(2.0, 1.0).unwrap();
    let (fin, _) = evolve(&p, &sch, &rho, &b, 0.5).unwrap();
    let exact = (rates * 2.0).exp() * pops;
    for x in 0..4 {
        assert_relative_eq!(fin.matrix[(x, x)].re, exact[x], epsilon = 1e-10);
    }
}

#[test]
fn superoperator_matches_apply() {
    let p = chain_problem(2).unwrap();
    let d = dissipator(&p, 0.4, &bath(2.0, 0.5)).unwrap();
    let sup = d.matrix().unwrap();
    let g = gibbs_state(&p, 0.2, 0.7).unwrap().matrix;
    let v = DVector::from_iterator(16, g.iter().copied());
    let out = &sup * v;
    let direct = d.apply(&g);
    for (a, b) in out.iter().zip(direct.iter()) {
        assert!((a - b).norm() < 1e-13);
    }
    // trace preservation: the row for tr(.) annihilates the superoperator
    for col in 0..16 {
        let t: Complex64 = (0..4).map(|i| sup[(i + 4 * i, col)]).sum();
        assert!(t.norm() < 1e-12);
    }
}

#[test]
fn closed_static_system_is_stationary() {
    let p = chain_problem(3).unwrap();
    let sch = constant_schedule(5.0, 1.0).unwrap();
    let rho0 = DensityOperator::pure_basis_state(5, 3);
    let (rho, rec) = evolve(&p, &sch, &rho0, &bath(1.0, 0.0), 0.5).unwrap();
    assert!(max_abs(&(&rho.matrix - &rho0.matrix)) < 1e-13);
    assert_eq!((rec.avg_work, rec.avg_heat_in), (0.0, 0.0));
    let mut rng = stream_rng(1, 0);
    let s = two_point_run(&p, &sch, &SpinConfiguration::from_index(5, 3), &bath(1.0, 0.0), &mut rng, 0.5).unwrap();
    assert_eq!(s.delta_e1, 0.0);
}

/// Schrödinger RK4 for a pure state.
fn schrodinger(p: &IsingProblem, sch: &Schedule, psi0: &DVector<Complex64>, steps: usize) -> DVector<Complex64> {
    let h0 = dense_hamiltonian(p, 0.0).unwrap().map(c);
    let h1 = dense_hamiltonian(p, 1.0).unwrap().map(c);
    let i = Complex64::new(0.0, 1.0);
    let f = |t: f64, v: &DVector<Complex64>| {
        let s = sch.eval_clamped(t);
        (&h0 * c(1.0 - s) + &h1 * c(s)) * v * (-i)
    };
    let dt = sch.tau / steps as f64;
    let mut psi = psi0.clone();
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = f(t, &psi);
        let k2 = f(t + dt / 2.0, &(&psi + &k1 * c(dt / 2.0)));
        let k3 = f(t + dt / 2.0, &(&psi + &k2 * c(dt / 2.0)));
        let k4 = f(t + dt, &(&psi + &k3 * c(dt)));
        psi += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
    }
    psi
}

#[test]
fn unitary_limit_matches_schrodinger() {
    for (p, sch) in [
        (chain_problem(4).unwrap(), reverse_schedule(3.0, 0.3).unwrap()),
        (chain_problem(5).unwrap(), forward_schedule(2.0).unwrap()),
        (
            IsingProblem::new(3, vec![(0, 1, 1.0), (1, 2, -0.5)], vec![0.3, 0.0, -0.2], 1.0).unwrap(),
            reverse_schedule(2.5, 0.5).unwrap(),
        ),
    ] {
        let idx = 1usize;
        let mut psi0 = DVector::zeros(p.dim());
        psi0[idx] = c(1.0);
        let psi = schrodinger(&p, &sch, &psi0, 20_000);
        let rho0 = DensityOperator::pure_basis_state(idx, p.n);
        let (rho, rec) = evolve(&p, &sch, &rho0, &bath(1.0, 0.0), 0.002).unwrap();
        let fid = rho.fidelity_with_pure(&psi);
        assert!(fid > 1.0 - 1e-8, "n = {}, fidelity {fid}", p.n);
        assert_eq!(rec.avg_heat_in, 0.0);
        // unitary first law: W = tr(ρ(τ) H(s_τ)) - tr(ρ₀ H(s_0))
        let h_end = dense_hamiltonian(&p, sch.end()).unwrap();
        let h_start = dense_hamiltonian(&p, sch.start()).unwrap();
        let w = rho.expectation(&h_end) - rho0.expectation(&h_start);
        assert_relative_eq!(rec.avg_work, w, epsilon = 1e-10);
    }
}

#[test]
fn matches_reference_master_equation() {
    let cases = [
        (chain_problem(3).unwrap(), reverse_schedule(4.0, 0.4).unwrap(), BathModel::DaviesInstantaneous),
        (chain_problem(3).unwrap(), forward_schedule(3.0).unwrap(), BathModel::LocalFlip),
        (
            IsingProblem::new(3, vec![(0, 1, 0.8), (1, 2, 1.0)], vec![0.25, 0.0, -0.3], 1.0).unwrap(),
            reverse_schedule(3.0, 0.3).unwrap(),
            BathModel::DaviesInstantaneous,
        ),
    ];
    for (p, sch, model) in cases {
        let b = BathSpec::new(1.5, 0.4, model).unwrap();
        let mut m = gibbs_state(&p, 0.6, 0.8).unwrap().matrix;
        m[(0, 3)] += Complex64::new(0.01, 0.02);
        m[(3, 0)] += Complex64::new(0.01, -0.02);
        let rho0 = DensityOperator::new(m).unwrap();
        let (want, w_ref, q_ref) = rk4_reference(&p, &sch, &b, &rho0.matrix, 4000);
        let (got, rec) = evolve(&p, &sch, &rho0, &b, 0.01).unwrap();
        let dist = got.trace_norm_distance(&DensityOperator { matrix: want });
        assert!(dist < 2e-3, "{model:?}: distance {dist}");
        assert!((rec.avg_work - w_ref).abs() < 5e-3, "work {} vs {}", rec.avg_work, w_ref);
        assert!((rec.avg_heat_in - q_ref).abs() < 5e-3, "heat {} vs {}", rec.avg_heat_in, q_ref);
        assert!(rec.first_law_residual().abs() < 1e-12);
    }
}

#[test]
fn long_time_limit_is_gibbs() {
    let p = chain_problem(4).unwrap();
    for &s in &[0.6, 1.0] {
        let b = bath(1.0, 1.0);
        let sch = constant_schedule(200.0, s).unwrap();
        let (rho, _) = evolve(&p, &sch, &DensityOperator::pure_basis_state(3, 4), &b, 0.5).unwrap();
        let g = gibbs_state(&p, s, 1.0).unwrap();
        let d = rho.trace_norm_distance(&g);
        assert!(d < 1e-3, "s = {s}: {d}");
    }
}

#[test]
fn relaxation_energy_decreases_monotonically() {
    let p = chain_problem(6).unwrap();
    let b = bath(3.25, 0.2);
    let mut last = f64::INFINITY;
    let hz = dense_hamiltonian(&p, 1.0).unwrap();
    for &t in &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let (rho, _) = evolve(&p, &constant_schedule(t, 1.0).unwrap(), &DensityOperator::maximally_mixed(6), &b, 0.5).unwrap();
        let e = rho.expectation(&hz);
        assert!(e < last);
        last = e;
    }
    let g = gibbs_state(&p, 1.0, 3.25).unwrap().expectation(&hz);
    assert!(last > g);
}

#[test]
fn protocol_and_size_errors() {
    let p = chain_problem(3).unwrap();
    let b = bath(1.0, 0.1);
    let mut rng = stream_rng(0, 0);
    let fwd = forward_schedule(1.0).unwrap();
    assert!(matches!(
        two_point_run(&p, &fwd, &SpinConfiguration::all_up(3), &b, &mut rng, 0.1),
        Err(DynamicsError::Protocol(_))
    ));
    let prep = PreparationSpec { beta1: 0.0, seed: 1, n_configs: 2, repeats_per_config: 1 };
    assert!(run_ensemble(&p, &constant_schedule(1.0, 0.5).unwrap(), &prep, &b, 0.1).is_err());
    let big = chain_problem(11).unwrap();
    assert!(matches!(gibbs_state(&big, 1.0, 1.0), Err(DynamicsError::Size(_))));
    let rho = DensityOperator::maximally_mixed(3);
    assert!(evolve(&p, &fwd, &rho, &b, 0.0).is_err());
    assert!(DensityOperator::new(DMatrix::identity(4, 4)).is_err());
}

#[test]
fn low_temperature_reverse_anneal_reaches_neel() {
    let p = chain_problem(4).unwrap();
    let b = bath(20.0, 5.0);
    let sch = reverse_schedule(40.0, 0.3).unwrap();
    let prep = PreparationSpec { beta1: 0.0, seed: 3, n_configs: 40, repeats_per_config: 1 };
    let res = run_ensemble(&p, &sch, &prep, &b, 0.5).unwrap();
    let neel = [SpinConfiguration::neel(4), SpinConfiguration::neel(4).flipped()];
    let hits = res.samples.iter().filter(|s| neel.contains(&s.final_config)).count();
    assert!(hits >= 38, "{hits}");
    for s in &res.samples {
        assert_eq!(s.delta_e1, s.e_final - s.e_initial);
    }
}

#[test]
fn ensemble_matches_density_matrix_average() {
    let p = chain_problem(4).unwrap();
    let b = bath(3.25, 0.3);
    let sch = reverse_schedule(8.0, 0.4).unwrap();
    let prep = PreparationSpec { beta1: 0.0, seed: 8, n_configs: 2000, repeats_per_config: 2 };
    let res = run_ensemble(&p, &sch, &prep, &b, 0.5).unwrap();
    assert_eq!(res.samples.len(), 4000);
    let de: Vec<f64> = res.samples.iter().map(|s| s.delta_e1).collect();
    let mean = de.iter().sum::<f64>() / de.len() as f64;
    let var = de.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / de.len() as f64;
    let se = (var / de.len() as f64).sqrt();
    assert!((mean - res.record.avg_delta_e1).abs() < 4.0 * se + 1e-12);
    assert!((mean - res.record.avg_work - res.record.avg_heat_in).abs() < (3.0 * se).max(1e-3) + se);

    // β₁ = 0: average over all basis states of the evolved energy change
    let hz = dense_hamiltonian(&p, 1.0).unwrap();
    let mixed = DensityOperator::maximally_mixed(4);
    let (rho, rec) = evolve(&p, &sch, &mixed, &b, 0.5).unwrap();
    let exact = rho.expectation(&hz) - mixed.expectation(&hz);
    assert_relative_eq!(rec.avg_delta_e1, exact, epsilon = 1e-10);
    assert!((mean - exact).abs() < 4.0 * se);

    let again = run_ensemble(&p, &sch, &prep, &b, 0.5).unwrap();
    assert_eq!(res.samples, again.samples);
    let single = run_ensemble(&p, &sch, &PreparationSpec { n_configs: 1, repeats_per_config: 1, ..prep }, &b, 0.5).unwrap();
    assert_eq!(single.samples.len(), 1);
}

#[test]
fn two_point_run_agrees_with_level_evolution() {
    // a single configuration evolved alone against the uniform level mixture
    let p = chain_problem(3).unwrap();
    let b = bath(2.0, 0.5);
    let sch = reverse_schedule(4.0, 0.5).unwrap();
    let hz = dense_hamiltonian(&p, 1.0).unwrap();
    let level: Vec<usize> = (0..8).filter(|&x| ising_model::energy_of_index(&p, x) == -2.0).collect();
    let mut avg = 0.0;
    for &x in &level {
        let (rho, _) = evolve(&p, &sch, &DensityOperator::pure_basis_state(x, 3), &b, 0.1).unwrap();
        avg += rho.expectation(&hz) / level.len() as f64;
    }
    let mut pops = vec![0.0; 8];
    for &x in &level {
        pops[x] = 1.0 / level.len() as f64;
    }
    let (rho, _) = evolve(&p, &sch, &DensityOperator::from_populations(&pops), &b, 0.1).unwrap();
    assert_relative_eq!(rho.expectation(&hz), avg, epsilon = 1e-10);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn level_transitions_obey_detailed_balance() {
    let p = chain_problem(4).unwrap();
    let beta = 1.2;
    let b = bath(beta, 0.4);
    let sch = constant_schedule(1.5, 1.0).unwrap();
    let diag = ising_model::diagonal_energies(&p).unwrap();
    let levels = [-3.0, -1.0, 1.0, 3.0];
    // P(M | L) from the uniform state on level L
    let mut trans = [[0.0; 4]; 4];
    for (li, &el) in levels.iter().enumerate() {
        let members: Vec<f64> = diag.iter().map(|&e| if e == el { 1.0 } else { 0.0 }).collect();
        let k: f64 = members.iter().sum();
        let pops: Vec<f64> = members.iter().map(|m| m / k).collect();
        let (rho, _) = evolve(&p, &sch, &DensityOperator::from_populations(&pops), &b, 0.5).unwrap();
        for (x, q) in rho.populations().iter().enumerate() {
            let mi = levels.iter().position(|&e| e == diag[x]).unwrap();
            trans[li][mi] += q;
        }
    }
    let pi = |l: usize| diag.iter().filter(|&&e| e == levels[l]).count() as f64 * (-beta * levels[l]).exp();
    for l in 0..4 {
        for m in 0..4 {
            let lhs = pi(l) * trans[l][m];
            let rhs = pi(m) * trans[m][l];
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{l} {m}: {lhs} {rhs}");
        }
    }

    // sampled transition counts against the same ratio
    let mut rng = stream_rng(17, 0);
    let start = [SpinConfiguration::neel(4), SpinConfiguration::new(vec![1, 1, -1, 1]).unwrap()];
    let e0 = ising_model::classical_energy(&p, &start[0]).unwrap();
    let e1 = ising_model::classical_energy(&p, &start[1]).unwrap();
    assert_eq!((e0, e1), (-3.0, -1.0));
    let runs = 1500;
    let mut up = 0usize;
    let mut down = 0usize;
    for k in 0..runs {
        let a = two_point_run(&p, &sch, &start[0], &b, &mut rng, 0.5).unwrap();
        up += (a.e_final == -1.0) as usize;
        let d = two_point_run(&p, &sch, &start[1], &b, &mut rng, 0.5).unwrap();
        down += (d.e_final == -3.0) as usize;
        let _ = k;
    }
    let (pu, pd) = (up as f64 / runs as f64, down as f64 / runs as f64);
    // P(-3 → -1) and P(-1 → -3) from single states differ from the level
    // averages only through the starting configuration; compare with the
    // exact single-state values instead
    let single = |c: &SpinConfiguration, target: f64| {
        let (rho, _) = evolve(&p, &sch, &DensityOperator::from_configuration(c), &b, 0.5).unwrap();
        rho.populations().iter().enumerate().filter(|(x, _)| diag[*x] == target).map(|(_, q)| q).sum::<f64>()
    };
    let (qu, qd) = (single(&start[0], -1.0), single(&start[1], -3.0));
    assert!((pu - qu).abs() < 4.0 * (qu * (1.0 - qu) / runs as f64).sqrt());
    assert!((pd - qd).abs() < 4.0 * (qd * (1.0 - qd) / runs as f64).sqrt());
}

fn random_problem(n: usize, seed: u64, fields: bool) -> IsingProblem {
    use rand::Rng;
    let mut rng = stream_rng(seed, 99);
    let couplings = (0..n - 1).map(|i| (i, i + 1, rng.gen_range(-1.5..1.5))).collect();
    let h = (0..n).map(|_| if fields { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
    IsingProblem::new(n, couplings, h, rng.gen_range(0.5..1.5)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_preserves_density_operator(
        n in 2usize..5,
        seed in 0u64..1000,
        fields in any::<bool>(),
        s_bar in 0.0f64..1.0,
        tau in 0.5f64..6.0,
        gamma in 0.0f64..2.0,
        beta2 in 0.2f64..6.0,
        local in any::<bool>(),
    ) {
        let p = random_problem(n, seed, fields);
        let model = if local { BathModel::LocalFlip } else { BathModel::DaviesInstantaneous };
        let b = BathSpec::new(beta2, gamma, model).unwrap();
        let sch = reverse_schedule(tau, s_bar).unwrap();
        let rho0 = DensityOperator::pure_basis_state((seed as usize) % p.dim(), n);
        let (rho, rec) = evolve(&p, &sch, &rho0, &b, 0.25).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-9);
        prop_assert!(rho.hermiticity_error() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-9);
        prop_assert!(rec.first_law_residual().abs() < 1e-9);
    }

    #[test]
    fn dissipator_is_trace_free_and_hermitian(n in 2usize..4, seed in 0u64..1000, s in 0.0f64..=1.0, fields in any::<bool>()) {
        let p = random_problem(n, seed, fields);
        let b = bath(1.7, 0.9);
        let d = dissipator(&p, s, &b).unwrap();
        let rho = gibbs_state(&p, (s + 0.3) % 1.0, 0.5).unwrap().matrix;
        let out = d.apply(&rho);
        prop_assert!(out.trace().norm() < 1e-12);
        prop_assert!(max_abs(&(&out - out.adjoint())) < 1e-12);
    }
}
