//! Inverse temperature of spin-configuration samples by pseudo-likelihood
//! maximization.

use ising_model::{IsingProblem, SpinConfiguration};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("sample set is empty")]
    Empty,
    #[error("sample {index} has {got} spins, problem has {expected}")]
    Size { index: usize, expected: usize, got: usize },
    #[error("every local field vanishes; the likelihood does not depend on beta")]
    Degenerate,
    #[error("invalid search interval [{0}, {1}]")]
    Interval(f64, f64),
    #[error("no s_bar values in the plateau set")]
    EmptyPlateau,
}

pub type Result<T> = std::result::Result<T, EstimateError>;

/// A set of configurations together with the model that scores them.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub configurations: Vec<SpinConfiguration>,
    pub problem: IsingProblem,
    /// Distinct values of `s_i (h_i + Σ_j J_ij s_j)` with multiplicities.
    terms: Vec<(f64, usize)>,
}

impl SampleSet {
    pub fn new(problem: IsingProblem, configurations: Vec<SpinConfiguration>) -> Result<Self> {
        if configurations.is_empty() {
            return Err(EstimateError::Empty);
        }
        let adj = problem.adjacency();
        let mut xs = Vec::with_capacity(configurations.len() * problem.n);
        for (d, c) in configurations.iter().enumerate() {
            if c.spins.len() != problem.n {
                return Err(EstimateError::Size { index: d, expected: problem.n, got: c.spins.len() });
            }
            for i in 0..problem.n {
                xs.push(c.spins[i] as f64 * problem.local_field(&adj, &c.spins, i));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        let mut terms: Vec<(f64, usize)> = Vec::new();
        for x in xs {
            match terms.last_mut() {
                Some((v, k)) if *v == x => *k += 1,
                _ => terms.push((x, 1)),
            }
        }
        Ok(SampleSet { configurations, problem, terms })
    }

    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    fn total_terms(&self) -> f64 {
        (self.configurations.len() * self.problem.n) as f64
    }

    fn is_degenerate(&self) -> bool {
        self.terms.iter().all(|&(x, _)| x == 0.0)
    }

    /// Derivative of the average pseudo-likelihood in `beta`.
    pub fn d_lambda(&self, beta: f64) -> f64 {
        let s: f64 = self.terms.iter().map(|&(x, k)| k as f64 * 2.0 * x * logistic(2.0 * beta * x)).sum();
        -s / self.total_terms()
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Average pseudo-log-likelihood
/// `Λ(β) = -(1/ND) Σ_d Σ_i ln(1 + exp(2β s_i f_i))` with local field
/// `f_i = h_i + Σ_j J_ij s_j`.
pub fn pseudo_log_likelihood(ss: &SampleSet, beta: f64) -> f64 {
    if beta == 0.0 {
        return -std::f64::consts::LN_2;
    }
    let s: f64 = ss.terms.iter().map(|&(x, k)| k as f64 * softplus(2.0 * beta * x)).sum();
    -s / ss.total_terms()
}

/// `(β, Λ(β))` pairs over a grid.
pub fn likelihood_curve(ss: &SampleSet, betas: &[f64]) -> Vec<(f64, f64)> {
    betas.iter().map(|&b| (b, pseudo_log_likelihood(ss, b))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchInterval {
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for SearchInterval {
    fn default() -> Self {
        SearchInterval { beta_min: 0.0, beta_max: 20.0 }
    }
}

/// Which end of the search interval the maximizer landed on, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEstimate {
    pub beta: f64,
    pub lambda: f64,
    pub edge: Option<Edge>,
}

impl BetaEstimate {
    pub fn at_edge(&self) -> bool {
        self.edge.is_some()
    }
}

const BETA_TOL: f64 = 1e-6;

/// Maximizer of `Λ` on the interval: golden-section search followed by
/// bisection on the derivative.
pub fn estimate_beta(ss: &SampleSet, interval: SearchInterval) -> Result<BetaEstimate> {
    let SearchInterval { beta_min: a0, beta_max: b0 } = interval;
    if !(a0.is_finite() && b0.is_finite() && a0 < b0) {
        return Err(EstimateError::Interval(a0, b0));
    }
    if ss.is_degenerate() {
        return Err(EstimateError::Degenerate);
    }
    let f = |b: f64| pseudo_log_likelihood(ss, b);

    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a0, b0);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-3 * (b0 - a0) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }

    // Λ is concave, so its derivative decreases through the maximizer.
    let (mut lo, mut hi) = (a, b);
    if ss.d_lambda(lo) < 0.0 {
        lo = a0;
    }
    if ss.d_lambda(hi) > 0.0 {
        hi = b0;
    }
    let edge = if ss.d_lambda(b0) >= 0.0 {
        Some(Edge::Upper)
    } else if ss.d_lambda(a0) <= 0.0 {
        Some(Edge::Lower)
    } else {
        None
    };
    let beta = match edge {
        Some(Edge::Upper) => b0,
        Some(Edge::Lower) => a0,
        None => {
            while hi - lo > BETA_TOL {
                let m = 0.5 * (lo + hi);
                if ss.d_lambda(m) > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            0.5 * (lo + hi)
        }
    };
    Ok(BetaEstimate { beta, lambda: f(beta), edge })
}

/// Mean of the per-`s̄` estimates over the plateau `s̄ <= s_cut`.
pub fn plateau_estimate(per_s_bar: &[(f64, f64)], s_cut: f64) -> Result<f64> {
    let on: Vec<f64> = per_s_bar.iter().filter(|(s, _)| *s <= s_cut + 1e-12).map(|&(_, b)| b).collect();
    if on.is_empty() {
        return Err(EstimateError::EmptyPlateau);
    }
    Ok(on.iter().sum::<f64>() / on.len() as f64)
}
