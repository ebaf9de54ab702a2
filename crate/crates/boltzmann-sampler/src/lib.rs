//! Classical Boltzmann preparation of initial configurations.

use ising_model::{energy_of_index, IsingProblem, SpinConfiguration, MAX_OPERATOR_SPINS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("unsupported topology: {0}")]
    Topology(String),
    #[error("unsupported size: {0}")]
    Size(String),
    #[error("invalid preparation: {0}")]
    Preparation(String),
}

pub type Result<T> = std::result::Result<T, SamplerError>;

/// How the initial ensemble is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationSpec {
    pub beta1: f64,
    pub seed: u64,
    pub n_configs: usize,
    pub repeats_per_config: usize,
}

impl PreparationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 >= 0.0) || !self.beta1.is_finite() {
            return Err(SamplerError::Preparation(format!("beta1 = {} must be finite and >= 0", self.beta1)));
        }
        if self.n_configs == 0 || self.repeats_per_config == 0 {
            return Err(SamplerError::Preparation("counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn total_runs(&self) -> usize {
        self.n_configs * self.repeats_per_config
    }
}

/// RNG for draw `index` of a run seeded with `seed`; streams are independent
/// of the order in which draws are made.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn require_chain(p: &IsingProblem) -> Result<()> {
    if p.is_chain() {
        Ok(())
    } else {
        Err(SamplerError::Topology("couplings must join consecutive spins only".into()))
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln Z(β)` of a chain by a transfer-matrix recursion in log space.
pub fn log_partition_function_chain(p: &IsingProblem, beta: f64) -> Result<f64> {
    require_chain(p)?;
    // w[s] = ln Σ over spins 0..=i with spin i = s
    let mut w = [-beta * p.fields[0], beta * p.fields[0]];
    for i in 1..p.n {
        let j = p.bond(i - 1);
        let h = p.fields[i];
        let step = |s: f64| -> f64 {
            let from_up = w[0] - beta * (j * s + h * s);
            let from_dn = w[1] - beta * (-j * s + h * s);
            log_add_exp(from_up, from_dn)
        };
        w = [step(1.0), step(-1.0)];
    }
    Ok(log_add_exp(w[0], w[1]))
}

/// `Z(β) = Σ_c exp(-β E_z(c))` for a chain.
pub fn partition_function_chain(p: &IsingProblem, beta: f64) -> Result<f64> {
    Ok(log_partition_function_chain(p, beta)?.exp())
}

/// `ln Z(β)` by enumeration, any topology with `n <= 20`.
pub fn log_partition_function_enumeration(p: &IsingProblem, beta: f64) -> Result<f64> {
    if p.n > MAX_OPERATOR_SPINS {
        return Err(SamplerError::Size(format!("enumeration needs n <= {MAX_OPERATOR_SPINS}")));
    }
    let logs: Vec<f64> = (0..p.dim()).map(|x| -beta * energy_of_index(p, x)).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln())
}

/// Exact Boltzmann probabilities of every basis state, `n <= 20`.
pub fn boltzmann_distribution(p: &IsingProblem, beta: f64) -> Result<Vec<f64>> {
    let lz = log_partition_function_enumeration(p, beta)?;
    Ok((0..p.dim()).map(|x| (-beta * energy_of_index(p, x) - lz).exp()).collect())
}

/// Exact sequential sampler for zero-field chains; falls back to Metropolis
/// when fields are present.
pub fn sample_chain_exact<R: Rng + ?Sized>(p: &IsingProblem, beta: f64, rng: &mut R) -> Result<SpinConfiguration> {
    require_chain(p)?;
    if p.has_fields() {
        return Ok(sample_mcmc(p, beta, rng, None, None));
    }
    let mut spins = Vec::with_capacity(p.n);
    spins.push(if rng.gen::<bool>() { 1i8 } else { -1 });
    for i in 1..p.n {
        let j = p.bond(i - 1);
        let prev = spins[i - 1] as f64;
        // P(aligned) = e^{-βJ} / (e^{-βJ} + e^{βJ})
        let p_aligned = 1.0 / (1.0 + (2.0 * beta * j).exp());
        let aligned = rng.gen::<f64>() < p_aligned;
        spins.push(if aligned { prev as i8 } else { -prev as i8 });
    }
    Ok(SpinConfiguration { spins })
}

/// Single-flip Metropolis chain over classical configurations.
pub struct MetropolisChain<'a> {
    problem: &'a IsingProblem,
    adjacency: Vec<Vec<(usize, f64)>>,
    beta: f64,
    spins: Vec<i8>,
    thin: usize,
}

impl<'a> MetropolisChain<'a> {
    /// Starts from a uniform random configuration and runs `burn_in` sweeps
    /// (default `100 n`). Successive samples are `thin` sweeps apart
    /// (default 10).
    pub fn new<R: Rng + ?Sized>(
        problem: &'a IsingProblem,
        beta: f64,
        rng: &mut R,
        burn_in: Option<usize>,
        thin: Option<usize>,
    ) -> Self {
        let spins = (0..problem.n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let mut chain = MetropolisChain {
            problem,
            adjacency: problem.adjacency(),
            beta,
            spins,
            thin: thin.unwrap_or(10).max(1),
        };
        for _ in 0..burn_in.unwrap_or(100 * problem.n) {
            chain.sweep(rng);
        }
        chain
    }

    /// `n` single-flip attempts at uniformly chosen sites.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for _ in 0..self.problem.n {
            let i = rng.gen_range(0..self.problem.n);
            let f = self.problem.local_field(&self.adjacency, &self.spins, i);
            let delta = -2.0 * self.spins[i] as f64 * f;
            if delta <= 0.0 || rng.gen::<f64>() < (-self.beta * delta).exp() {
                self.spins[i] = -self.spins[i];
            }
        }
    }

    pub fn current(&self) -> SpinConfiguration {
        SpinConfiguration { spins: self.spins.clone() }
    }

    /// Advances `thin` sweeps and returns the state.
    pub fn next_sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SpinConfiguration {
        for _ in 0..self.thin {
            self.sweep(rng);
        }
        self.current()
    }
}

/// One Metropolis draw after burn-in, for arbitrary graphs.
pub fn sample_mcmc<R: Rng + ?Sized>(
    p: &IsingProblem,
    beta: f64,
    rng: &mut R,
    burn_in: Option<usize>,
    thin: Option<usize>,
) -> SpinConfiguration {
    let mut chain = MetropolisChain::new(p, beta, rng, burn_in, thin);
    chain.next_sample(rng)
}

/// One Boltzmann draw using the exact sampler when applicable.
pub fn sample_boltzmann<R: Rng + ?Sized>(p: &IsingProblem, beta: f64, rng: &mut R) -> SpinConfiguration {
    if p.is_chain() && !p.has_fields() {
        sample_chain_exact(p, beta, rng).expect("zero-field chain")
    } else {
        sample_mcmc(p, beta, rng, None, None)
    }
}

/// Draws `prep.n_configs` initial configurations; draw `k` uses stream `k`.
pub fn draw_initial_configs(p: &IsingProblem, prep: &PreparationSpec) -> Result<Vec<SpinConfiguration>> {
    prep.validate()?;
    Ok((0..prep.n_configs)
        .map(|k| {
            let mut rng = stream_rng(prep.seed, k as u64);
            sample_boltzmann(p, prep.beta1, &mut rng)
        })
        .collect())
}
