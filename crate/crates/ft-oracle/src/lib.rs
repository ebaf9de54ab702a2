//! Exact two-point-measurement statistics of a small driven system coupled to
//! a finite bath, and checks of the fluctuation theorem and the bounds built
//! on it.
//!
//! The composite Hamiltonian is
//! `H(t) = H₁(s_t) ⊗ 1 + 1 ⊗ H₂ + w(t) V` with `H₁(s) = (1 - s) A + s B` and
//! the switching window `w(t) = sin²(πt/τ)`. Joint indices put the system
//! first: `index = a_sys · d_bath + a_bath`.
//!
//! All operators are real symmetric and the drive must be time symmetric.
//! The propagator is a palindromic product of real symmetric step
//! exponentials, so `Uᵀ = U` and the forward transition matrix is symmetric.

use ising_model::{symmetric_eigen, IsingProblem};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schedule::Schedule;
use thermo_analysis::{g_func, h_func, h_inverse, EnergyStatistics, MomentConvention};

/// Largest total qubit count.
pub const MAX_QUBITS: usize = 8;
/// Tolerance for grouping degenerate energies and energy differences.
pub const BIN_TOL: f64 = 1e-9;
/// Outcomes below this probability are not used in ratio checks.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FtError {
    #[error("unsupported size: {0}")]
    Size(String),
    #[error("invalid operator: {0}")]
    Operator(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, FtError>;

/// Driven system plus finite bath.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    pub n_sys: usize,
    pub n_bath: usize,
    /// `A` in `H₁(s) = (1 - s) A + s B`.
    pub h_sys_a: DMatrix<f64>,
    /// `B` in `H₁(s) = (1 - s) A + s B`.
    pub h_sys_b: DMatrix<f64>,
    pub h_bath: DMatrix<f64>,
    /// Interaction on the joint space, scaled by the switching window.
    pub coupling: DMatrix<f64>,
    pub schedule: Schedule,
    pub beta1: f64,
    pub beta2: f64,
    /// Target step length of the propagator.
    pub dt: f64,
}

fn check_symmetric(name: &str, m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(FtError::Operator(format!("{name} is {}x{}, expected {dim}x{dim}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(FtError::Operator(format!("{name} has non-finite entries")));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * (1.0 + m.amax()) {
        return Err(FtError::Operator(format!("{name} is not symmetric (error {asym:e})")));
    }
    Ok(())
}

impl CompositeModel {
    /// System part taken from an Ising problem: `A = H(0)`, `B = H(1)`.
    pub fn ising_system(
        p: &IsingProblem,
        h_bath: DMatrix<f64>,
        n_bath: usize,
        coupling: DMatrix<f64>,
        schedule: Schedule,
        beta1: f64,
        beta2: f64,
    ) -> Result<Self> {
        if p.n + n_bath > MAX_QUBITS {
            return Err(FtError::Size(format!("{} + {n_bath} qubits exceeds {MAX_QUBITS}", p.n)));
        }
        let a = ising_model::dense_hamiltonian(p, 0.0).map_err(|e| FtError::Operator(e.to_string()))?;
        let b = ising_model::dense_hamiltonian(p, 1.0).map_err(|e| FtError::Operator(e.to_string()))?;
        let m = CompositeModel {
            n_sys: p.n,
            n_bath,
            h_sys_a: a,
            h_sys_b: b,
            h_bath,
            coupling,
            schedule,
            beta1,
            beta2,
            dt: 0.01,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn dim_sys(&self) -> usize {
        1 << self.n_sys
    }

    pub fn dim_bath(&self) -> usize {
        1 << self.n_bath
    }

    pub fn dim(&self) -> usize {
        self.dim_sys() * self.dim_bath()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sys == 0 || self.n_bath == 0 {
            return Err(FtError::Size("system and bath need at least one qubit each".into()));
        }
        if self.n_sys + self.n_bath > MAX_QUBITS {
            return Err(FtError::Size(format!("{} + {} qubits exceeds {MAX_QUBITS}", self.n_sys, self.n_bath)));
        }
        check_symmetric("h_sys_a", &self.h_sys_a, self.dim_sys())?;
        check_symmetric("h_sys_b", &self.h_sys_b, self.dim_sys())?;
        check_symmetric("h_bath", &self.h_bath, self.dim_bath())?;
        check_symmetric("coupling", &self.coupling, self.dim())?;
        if !(self.beta1 >= 0.0 && self.beta1.is_finite() && self.beta2 >= 0.0 && self.beta2.is_finite()) {
            return Err(FtError::Parameter(format!("inverse temperatures ({}, {}) must be finite and >= 0", self.beta1, self.beta2)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FtError::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.schedule.is_cyclic() {
            return Err(FtError::Protocol(format!(
                "schedule is not cyclic (s_0 = {}, s_tau = {})",
                self.schedule.start(),
                self.schedule.end()
            )));
        }
        if !self.schedule.is_time_symmetric(1e-12) {
            return Err(FtError::Protocol("schedule is not time symmetric".into()));
        }
        Ok(())
    }

    /// `H₁(s)`.
    pub fn h_sys_at(&self, s: f64) -> DMatrix<f64> {
        &self.h_sys_a * (1.0 - s) + &self.h_sys_b * s
    }

    /// `H₁` at the endpoints, the measured system energy.
    pub fn h_sys(&self) -> DMatrix<f64> {
        self.h_sys_at(self.schedule.start())
    }

    /// `sin²(πt/τ)`.
    pub fn window(&self, t: f64) -> f64 {
        (std::f64::consts::PI * t / self.schedule.tau).sin().powi(2)
    }

    /// `H₁ ⊗ 1 + 1 ⊗ H₂`.
    pub fn local_hamiltonian(&self) -> DMatrix<f64> {
        self.embed(&self.h_sys())
    }

    fn embed(&self, h_sys: &DMatrix<f64>) -> DMatrix<f64> {
        let is = DMatrix::<f64>::identity(self.dim_sys(), self.dim_sys());
        let ib = DMatrix::<f64>::identity(self.dim_bath(), self.dim_bath());
        h_sys.kronecker(&ib) + is.kronecker(&self.h_bath)
    }

    /// Full `H(t)`.
    pub fn hamiltonian(&self, t: f64) -> DMatrix<f64> {
        let s = self.schedule.eval_clamped(t);
        self.embed(&self.h_sys_at(s)) + &self.coupling * self.window(t)
    }

    /// Propagator over `[0, τ]`.
    pub fn propagator(&self) -> Result<DMatrix<Complex64>> {
        self.validate()?;
        let tau = self.schedule.tau;
        let steps = (tau / self.dt).ceil().max(1.0) as usize;
        let h = tau / steps as f64;
        let d = self.dim();
        let step = |k: usize| -> DMatrix<Complex64> {
            let (vals, vecs) = symmetric_eigen(&self.hamiltonian((k as f64 + 0.5) * h));
            let vc = vecs.map(|x| Complex64::new(x, 0.0));
            let phase = DMatrix::from_fn(d, d, |i, j| if i == j { Complex64::from_polar(1.0, -vals[i] * h) } else { Complex64::new(0.0, 0.0) });
            &vc * phase * vc.transpose()
        };
        // steps k and steps-1-k share a midpoint Hamiltonian, so
        // U = Pᵀ M P with P the first half and M the middle step if any.
        let mut half = DMatrix::<Complex64>::identity(d, d);
        for k in 0..steps / 2 {
            half = step(k) * half;
        }
        let u = if steps % 2 == 1 {
            half.transpose() * step(steps / 2) * &half
        } else {
            half.transpose() * &half
        };
        Ok(u)
    }
}

/// One outcome of the joint two-point measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSample {
    pub delta_e1: f64,
    pub delta_e2: f64,
    pub probability: f64,
}

/// Eigenlevels of a local Hamiltonian: level energy per eigenvector.
fn local_levels(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (vals, vecs) = symmetric_eigen(h);
    let groups = ising_model::group_levels(&vals, BIN_TOL);
    let mut level_e = Vec::with_capacity(vals.len());
    let mut k = 0;
    for (_, mult) in groups {
        let mean = vals[k..k + mult].iter().sum::<f64>() / mult as f64;
        level_e.extend(std::iter::repeat_n(mean, mult));
        k += mult;
    }
    (level_e, vecs)
}

fn gibbs_weights(e: &[f64], beta: f64) -> Vec<f64> {
    let e0 = e.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Merges outcomes whose coordinates agree within `BIN_TOL`.
fn bin_outcomes(mut raw: Vec<JointSample>) -> Vec<JointSample> {
    raw.sort_by(|a, b| a.delta_e1.total_cmp(&b.delta_e1));
    let mut out: Vec<JointSample> = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let start = raw[i].delta_e1;
        let mut j = i;
        while j < raw.len() && raw[j].delta_e1 - start <= BIN_TOL {
            j += 1;
        }
        let mut group = raw[i..j].to_vec();
        group.sort_by(|a, b| a.delta_e2.total_cmp(&b.delta_e2));
        let mut k = 0;
        while k < group.len() {
            let s2 = group[k].delta_e2;
            let mut acc = JointSample { delta_e1: group[k].delta_e1, delta_e2: s2, probability: 0.0 };
            while k < group.len() && group[k].delta_e2 - s2 <= BIN_TOL {
                acc.probability += group[k].probability;
                k += 1;
            }
            out.push(acc);
        }
        i = j;
    }
    out
}

/// Exact joint distribution of `(ΔE₁, ΔE₂)`.
pub fn joint_tpm_distribution(m: &CompositeModel) -> Result<Vec<JointSample>> {
    let u = m.propagator()?;
    let (e1, v1) = local_levels(&m.h_sys());
    let (e2, v2) = local_levels(&m.h_bath);
    let p1 = gibbs_weights(&e1, m.beta1);
    let p2 = gibbs_weights(&e2, m.beta2);
    let basis = v1.kronecker(&v2).map(|x| Complex64::new(x, 0.0));
    let t = basis.transpose() * u * &basis;
    let db = m.dim_bath();
    let d = m.dim();
    let mut raw = Vec::with_capacity(d * d);
    for a in 0..d {
        let (a1, a2) = (a / db, a % db);
        let w = p1[a1] * p2[a2];
        if w == 0.0 {
            continue;
        }
        for b in 0..d {
            let amp = t[(b, a)].norm_sqr();
            if amp == 0.0 {
                continue;
            }
            let (b1, b2) = (b / db, b % db);
            raw.push(JointSample { delta_e1: e1[b1] - e1[a1], delta_e2: e2[b2] - e2[a2], probability: w * amp });
        }
    }
    Ok(bin_outcomes(raw))
}

/// `(⟨ΔE₁⟩, ⟨ΔE₂⟩)`.
pub fn mean_changes(dist: &[JointSample]) -> (f64, f64) {
    dist.iter().fold((0.0, 0.0), |(a, b), x| (a + x.probability * x.delta_e1, b + x.probability * x.delta_e2))
}

/// Averages computed directly from `ρ(τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub mean_de1: f64,
    pub mean_de2: f64,
    /// `tr(ρ(τ) H_loc) - tr(ρ₀ H_loc)`.
    pub work: f64,
}

/// Energy changes from the evolved state, independent of the outcome table.
pub fn energy_balance(m: &CompositeModel) -> Result<EnergyBalance> {
    let u = m.propagator()?;
    let (e1, v1) = local_levels(&m.h_sys());
    let (e2, v2) = local_levels(&m.h_bath);
    let p1 = gibbs_weights(&e1, m.beta1);
    let p2 = gibbs_weights(&e2, m.beta2);
    let rho1 = &v1 * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p1)) * v1.transpose();
    let rho2 = &v2 * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p2)) * v2.transpose();
    let rho0 = rho1.kronecker(&rho2).map(|x| Complex64::new(x, 0.0));
    let rho_t = &u * &rho0 * u.adjoint();
    let ib = DMatrix::<f64>::identity(m.dim_bath(), m.dim_bath());
    let is = DMatrix::<f64>::identity(m.dim_sys(), m.dim_sys());
    let h1 = m.h_sys().kronecker(&ib);
    let h2 = is.kronecker(&m.h_bath);
    let tr = |rho: &DMatrix<Complex64>, h: &DMatrix<f64>| -> f64 {
        rho.iter().zip(h.transpose().iter()).map(|(z, v)| z.re * v).sum()
    };
    let mean_de1 = tr(&rho_t, &h1) - tr(&rho0, &h1);
    let mean_de2 = tr(&rho_t, &h2) - tr(&rho0, &h2);
    let hl = h1 + h2;
    Ok(EnergyBalance { mean_de1, mean_de2, work: tr(&rho_t, &hl) - tr(&rho0, &hl) })
}

fn find_mirror(dist: &[JointSample], x: &JointSample) -> Option<usize> {
    let tol = 10.0 * BIN_TOL;
    dist.iter().position(|y| (y.delta_e1 + x.delta_e1).abs() <= tol && (y.delta_e2 + x.delta_e2).abs() <= tol)
}

/// Result of checking `p(Δ)/p(-Δ) = exp(β₁ΔE₁ + β₂ΔE₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvftReport {
    pub total_probability: f64,
    pub pairs_checked: usize,
    /// Largest `|ln(p/p̃) - (β₁ΔE₁ + β₂ΔE₂)|` over checked pairs.
    pub max_violation: f64,
    /// Largest probability of an outcome whose mirror outcome is absent.
    pub max_unmatched_probability: f64,
    /// Same check on the `(Σ, ΔE₁)` distribution against `e^Σ`.
    pub max_sigma_form_violation: f64,
    pub mean_de1: f64,
    pub mean_de2: f64,
    pub mean_sigma: f64,
}

impl MvftReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation < tol
            && self.max_sigma_form_violation < tol
            && self.max_unmatched_probability <= PROB_FLOOR
            && (self.total_probability - 1.0).abs() < 1e-10
    }

    /// Clausius inequality `⟨Σ⟩ >= -tol`.
    pub fn clausius_holds(&self, tol: f64) -> bool {
        self.mean_sigma >= -tol
    }
}

pub fn verify_mvft(dist: &[JointSample], beta1: f64, beta2: f64) -> MvftReport {
    let total_probability = dist.iter().map(|x| x.probability).sum();
    let mut max_violation: f64 = 0.0;
    let mut max_unmatched: f64 = 0.0;
    let mut pairs = 0;
    for x in dist {
        if x.probability <= PROB_FLOOR {
            continue;
        }
        match find_mirror(dist, x) {
            Some(j) if dist[j].probability <= PROB_FLOOR => {}
            Some(j) => {
                let lhs = (x.probability / dist[j].probability).ln();
                let rhs = beta1 * x.delta_e1 + beta2 * x.delta_e2;
                max_violation = max_violation.max((lhs - rhs).abs());
                pairs += 1;
            }
            None => max_unmatched = max_unmatched.max(x.probability),
        }
    }

    // (Σ, ΔE₁) marginal after the change of variables ΔE₂ -> Σ
    let sigma_dist: Vec<JointSample> = bin_outcomes(
        dist.iter()
            .map(|x| JointSample {
                delta_e1: x.delta_e1,
                delta_e2: beta1 * x.delta_e1 + beta2 * x.delta_e2,
                probability: x.probability,
            })
            .collect(),
    );
    let mut max_sigma: f64 = 0.0;
    let tol = 10.0 * BIN_TOL * (1.0 + beta1 + beta2);
    for x in &sigma_dist {
        if x.probability <= PROB_FLOOR {
            continue;
        }
        let mirror = sigma_dist
            .iter()
            .find(|y| (y.delta_e1 + x.delta_e1).abs() <= tol && (y.delta_e2 + x.delta_e2).abs() <= tol);
        match mirror {
            Some(y) if y.probability <= PROB_FLOOR => {}
            Some(y) => {
                max_sigma = max_sigma.max(((x.probability / y.probability).ln() - x.delta_e2).abs());
            }
            None => max_unmatched = max_unmatched.max(x.probability),
        }
    }

    let (mean_de1, mean_de2) = mean_changes(dist);
    MvftReport {
        total_probability,
        pairs_checked: pairs,
        max_violation,
        max_unmatched_probability: max_unmatched,
        max_sigma_form_violation: max_sigma,
        mean_de1,
        mean_de2,
        mean_sigma: thermo_analysis::clausius_sigma(mean_de1, mean_de2, beta1, beta2),
    }
}

/// Both forms of the uncertainty relation with `φ = ΔE₁`, `σ = Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TurReport {
    pub mean_phi: f64,
    pub second_moment_phi: f64,
    pub mean_sigma: f64,
    /// `⟨φ⟩/√⟨φ²⟩`, zero when `⟨φ²⟩ = 0`.
    pub ratio: f64,
    /// `2g(ratio)`.
    pub sigma_lower: f64,
    /// `⟨Σ⟩ - 2g(ratio)`.
    pub slack: f64,
    /// `⟨φ²⟩ f(h⁻¹(⟨Σ⟩)) - ⟨φ⟩²`.
    pub f_form_slack: f64,
    /// `|2g(r) - h(x*)|` with `tanh(x*/2) = |r|`.
    pub consistency_residual: f64,
}

impl TurReport {
    pub fn g_form_holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }

    pub fn f_form_holds(&self, tol: f64) -> bool {
        self.f_form_slack >= -tol
    }

    pub fn forms_consistent(&self, tol: f64) -> bool {
        self.consistency_residual <= tol && self.g_form_holds(tol) == self.f_form_holds(tol)
    }
}

pub fn tur_check(dist: &[JointSample], beta1: f64, beta2: f64) -> TurReport {
    let mean_phi: f64 = dist.iter().map(|x| x.probability * x.delta_e1).sum();
    let second_moment_phi: f64 = dist.iter().map(|x| x.probability * x.delta_e1 * x.delta_e1).sum();
    let mean_sigma: f64 = dist.iter().map(|x| x.probability * (beta1 * x.delta_e1 + beta2 * x.delta_e2)).sum();
    let ratio = if second_moment_phi > 0.0 { (mean_phi / second_moment_phi.sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
    let sigma_lower = 2.0 * g_func(ratio).unwrap_or(f64::INFINITY);
    let slack = mean_sigma - sigma_lower;
    let x = h_inverse(mean_sigma.max(0.0)).unwrap_or(0.0);
    let f_form_slack = second_moment_phi * thermo_analysis::f_func(x) - mean_phi * mean_phi;
    let consistency_residual = if ratio.abs() < 1.0 {
        let x_star = 2.0 * ratio.abs().atanh();
        (sigma_lower - h_func(x_star)).abs()
    } else {
        0.0
    };
    TurReport { mean_phi, second_moment_phi, mean_sigma, ratio, sigma_lower, slack, f_form_slack, consistency_residual }
}

/// Heat and work lower bounds against the exact averages.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundChainReport {
    pub heat_out_lower: f64,
    pub exact_de2: f64,
    pub work_lower: f64,
    pub exact_work: f64,
    pub mean_de1: f64,
}

impl BoundChainReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.heat_out_lower <= self.exact_de2 + tol && self.work_lower <= self.exact_work + tol
    }

    /// `work_lower - heat_out_lower - ⟨ΔE₁⟩`.
    pub fn identity_residual(&self) -> f64 {
        self.work_lower - self.heat_out_lower - self.mean_de1
    }
}

pub fn bound_chain(dist: &[JointSample], beta1: f64, beta2: f64) -> thermo_analysis::Result<BoundChainReport> {
    let outcomes: Vec<(f64, f64)> = dist.iter().map(|x| (x.delta_e1, x.probability)).collect();
    let st = EnergyStatistics::from_distribution(&outcomes, 2, 1);
    let b = thermo_analysis::heat_work_bounds(&st, beta1, beta2, MomentConvention::SecondMoment)?;
    let (de1, de2) = mean_changes(dist);
    Ok(BoundChainReport {
        heat_out_lower: b.heat_out_lower,
        exact_de2: de2,
        work_lower: b.work_lower,
        exact_work: thermo_analysis::first_law_work(de1, de2),
        mean_de1: st.mean,
    })
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * (0.5 * scale)
}

/// Random composite with a reverse-anneal-shaped drive.
///
/// `A` and `V` are random real symmetric, `B` and `H₂` random diagonal plus a
/// weaker random real symmetric part, `τ ∈ [1, 3]`, `s̄ ∈ [0, 1]`.
pub fn random_model(n_sys: usize, n_bath: usize, beta1: f64, beta2: f64, seed: u64) -> Result<CompositeModel> {
    if n_sys == 0 || n_bath == 0 || n_sys + n_bath > MAX_QUBITS {
        return Err(FtError::Size(format!("{n_sys} + {n_bath} qubits not in 2..={MAX_QUBITS}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ds, db) = (1usize << n_sys, 1usize << n_bath);
    let h_sys_a = random_symmetric(&mut rng, ds, 1.0);
    let mut h_sys_b = random_symmetric(&mut rng, ds, 0.3);
    for i in 0..ds {
        h_sys_b[(i, i)] += rng.gen_range(-2.0..2.0);
    }
    let mut h_bath = random_symmetric(&mut rng, db, 0.3);
    for i in 0..db {
        h_bath[(i, i)] += rng.gen_range(-2.0..2.0);
    }
    let strength = rng.gen_range(0.2..1.5);
    let coupling = random_symmetric(&mut rng, ds * db, strength);
    let tau = rng.gen_range(1.0..3.0);
    let s_bar = rng.gen_range(0.0..1.0);
    let schedule = schedule::reverse_schedule(tau, s_bar).map_err(|e| FtError::Protocol(e.to_string()))?;
    let m = CompositeModel { n_sys, n_bath, h_sys_a, h_sys_b, h_bath, coupling, schedule, beta1, beta2, dt: 0.02 };
    m.validate()?;
    Ok(m)
}
