//! Driven open-system dynamics of an annealed Ising register coupled to a
//! thermal bath, with two-point energy measurements.
//!
//! The dissipator is a Davies-type generator in the instantaneous eigenbasis
//! of `H(s)`: for every coupling operator `A` and every ordered pair of
//! levels `(M → L)` there is a jump `√r(E_M - E_L) Π_L A Π_M` with the rate
//! `r(ω) = γ ω / (1 - e^{-β₂ ω})`.

mod propagator;
mod reference;
mod sectors;

use boltzmann_sampler::{draw_initial_configs, stream_rng, PreparationSpec, SamplerError};
use ising_model::{classical_energy, IsingError, IsingProblem, SparseSymmetric, SpinConfiguration};
use ising_model::{symmetric_eigen, symmetric_eigenvalues};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use schedule::{Schedule, ScheduleError};

pub use propagator::LEVEL_TOL;
pub use reference::{dissipator, Dissipator};

/// Largest register handled by the density-matrix propagator.
pub const MAX_DYNAMICS_SPINS: usize = 10;

/// Relative weight of the transverse coupling operators in the Davies model.
pub const X_COUPLING_WEIGHT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("unsupported size: {0}")]
    Size(String),
    #[error("invalid bath: {0}")]
    Bath(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("integrator failure at step {step}: trace drift {drift:e}; use a smaller dt")]
    Integrator { step: usize, drift: f64 },
    #[error("invalid density operator: {0}")]
    Density(String),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Microscopic coupling to the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BathModel {
    /// Local `σz_i` couplings plus local `σx_i` couplings of weight
    /// [`X_COUPLING_WEIGHT`].
    #[default]
    DaviesInstantaneous,
    /// Local `σx_i` couplings only.
    LocalFlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub beta2: f64,
    pub gamma_rate: f64,
    pub model: BathModel,
}

impl BathSpec {
    pub fn new(beta2: f64, gamma_rate: f64, model: BathModel) -> Result<Self> {
        let b = BathSpec { beta2, gamma_rate, model };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta2 > 0.0) || !self.beta2.is_finite() {
            return Err(DynamicsError::Bath(format!("beta2 = {} must be finite and positive", self.beta2)));
        }
        if !(self.gamma_rate >= 0.0) || !self.gamma_rate.is_finite() {
            return Err(DynamicsError::Bath(format!("gamma_rate = {} must be finite and >= 0", self.gamma_rate)));
        }
        Ok(())
    }

    /// Weighted coupling operators in the computational basis.
    pub fn coupling_operators(&self, n: usize) -> Vec<(f64, SparseSymmetric)> {
        let dim = 1usize << n;
        let sz = |i: usize| {
            let rows = (0..dim).map(|x| vec![(x, if x >> i & 1 == 0 { 1.0 } else { -1.0 })]).collect();
            SparseSymmetric::from_rows(dim, rows)
        };
        let sx = |i: usize| SparseSymmetric::from_rows(dim, (0..dim).map(|x| vec![(x ^ (1 << i), 1.0)]).collect());
        let mut ops = Vec::new();
        match self.model {
            BathModel::DaviesInstantaneous => {
                for i in 0..n {
                    ops.push((1.0, sz(i)));
                }
                for i in 0..n {
                    ops.push((X_COUPLING_WEIGHT, sx(i)));
                }
            }
            BathModel::LocalFlip => {
                for i in 0..n {
                    ops.push((1.0, sx(i)));
                }
            }
        }
        ops
    }
}

/// `r(ω) = γ ω / (1 - e^{-βω})` for a transition releasing energy `ω`,
/// with `r(0) = γ/β`.
pub fn ohmic_rate(omega: f64, gamma: f64, beta: f64) -> f64 {
    let x = beta * omega;
    if x.abs() < 1e-12 {
        return gamma / beta * (1.0 + 0.5 * x);
    }
    if x < -700.0 {
        return 0.0;
    }
    gamma / beta * x / -(-x).exp_m1()
}

/// Pair of real matrices holding a complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { re: DMatrix::zeros(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        CMat { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    pub fn hermitize(&mut self) {
        self.re = (&self.re + self.re.transpose()) * 0.5;
        self.im = (&self.im - self.im.transpose()) * 0.5;
    }
}

/// Dense density operator in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_power_of_two() {
            return Err(DynamicsError::Density(format!("{}x{} is not a register operator", matrix.nrows(), matrix.ncols())));
        }
        let rho = DensityOperator { matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn pure_basis_state(index: usize, n: usize) -> Self {
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        DensityOperator { matrix: m }
    }

    pub fn from_configuration(c: &SpinConfiguration) -> Self {
        Self::pure_basis_state(c.index(), c.len())
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        DensityOperator { matrix: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0) }
    }

    pub fn from_populations(p: &[f64]) -> Self {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::new(x, 0.0))));
        DensityOperator { matrix: d }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Checks trace, Hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::Density(format!("trace {tr}")));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(DynamicsError::Density(format!("hermiticity error {herm:e}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(DynamicsError::Density(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `tr(ρ H)` for a real symmetric `H`.
    pub fn expectation(&self, h: &DMatrix<f64>) -> f64 {
        self.matrix.iter().zip(h.transpose().iter()).map(|(z, v)| z.re * v).sum()
    }

    /// `‖ρ - σ‖₁`, the sum of absolute eigenvalues of the difference.
    pub fn trace_norm_distance(&self, other: &DensityOperator) -> f64 {
        hermitian_eigenvalues(&(&self.matrix - &other.matrix)).iter().map(|x| x.abs()).sum()
    }

    /// `|<ψ|ρ|ψ>|` for a normalized vector.
    pub fn fidelity_with_pure(&self, psi: &nalgebra::DVector<Complex64>) -> f64 {
        (psi.adjoint() * &self.matrix * psi)[(0, 0)].re
    }
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
///
/// Uses the real embedding `[[X, -Y], [Y, X]]` of `X + iY`, whose spectrum is
/// that of `m` with every value doubled.
fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    symmetric_eigenvalues(&big).into_iter().step_by(2).collect()
}

fn check_size(p: &IsingProblem) -> Result<()> {
    if p.n > MAX_DYNAMICS_SPINS {
        return Err(DynamicsError::Size(format!("density-matrix dynamics needs n <= {MAX_DYNAMICS_SPINS}, got {}", p.n)));
    }
    Ok(())
}

/// `e^{-βH(s)}/Z` in the computational basis.
pub fn gibbs_state(p: &IsingProblem, s: f64, beta: f64) -> Result<DensityOperator> {
    check_size(p)?;
    let h = ising_model::dense_hamiltonian(p, s)?;
    let (energies, vecs) = symmetric_eigen(&h);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - energies[0])).exp()).collect();
    let z: f64 = w.iter().sum();
    let m = &vecs * DMatrix::from_fn(w.len(), w.len(), |i, j| if i == j { w[i] / z } else { 0.0 }) * vecs.transpose();
    Ok(DensityOperator { matrix: m.map(|x| Complex64::new(x, 0.0)) })
}

/// Average energy balance of a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorkHeatRecord {
    pub avg_work: f64,
    /// Heat received by the register; the bath energy changes by `-avg_heat_in`.
    pub avg_heat_in: f64,
    pub avg_delta_e1: f64,
}

impl WorkHeatRecord {
    pub fn first_law_residual(&self) -> f64 {
        self.avg_delta_e1 - self.avg_work - self.avg_heat_in
    }
}

/// One two-point-measurement record.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySample {
    pub initial_config: SpinConfiguration,
    pub final_config: SpinConfiguration,
    pub e_initial: f64,
    pub e_final: f64,
    pub delta_e1: f64,
}

impl EnergySample {
    pub fn new(p: &IsingProblem, initial: SpinConfiguration, fin: SpinConfiguration) -> Result<Self> {
        let e_initial = classical_energy(p, &initial)?;
        let e_final = classical_energy(p, &fin)?;
        Ok(EnergySample { initial_config: initial, final_config: fin, e_initial, e_final, delta_e1: e_final - e_initial })
    }
}

fn tracked(rho: CMat, block_diagonal: bool) -> propagator::Tracked {
    propagator::Tracked { rho, block_diagonal, work: 0.0, heat: 0.0, e_initial: 0.0, e_final: 0.0 }
}

/// Integrates the master equation from `rho0` over the schedule. Returns
/// the final state and the average work and heat.
pub fn evolve(
    p: &IsingProblem,
    sch: &Schedule,
    rho0: &DensityOperator,
    bath: &BathSpec,
    dt: f64,
) -> Result<(DensityOperator, WorkHeatRecord)> {
    check_size(p)?;
    bath.validate()?;
    if rho0.dim() != p.dim() {
        return Err(DynamicsError::Density(format!("state dimension {} for {} spins", rho0.dim(), p.n)));
    }
    let model = propagator::Model::new(p, bath)?;
    let rho_s = model.basis.to_sector(&CMat::from_complex(&rho0.matrix));
    let mut st = [tracked(rho_s, false)];
    propagator::propagate(&model, sch, &mut st, dt)?;
    let st = &st[0];
    let out = DensityOperator { matrix: model.basis.from_sector(&st.rho).to_complex() };
    let rec = WorkHeatRecord { avg_work: st.work, avg_heat_in: st.heat, avg_delta_e1: st.e_final - st.e_initial };
    Ok((out, rec))
}

fn check_protocol(sch: &Schedule) -> Result<()> {
    if sch.start() != 1.0 || sch.end() != 1.0 {
        return Err(DynamicsError::Protocol(format!(
            "two-point measurement needs s = 1 at both ends, got s0 = {}, s_tau = {}",
            sch.start(),
            sch.end()
        )));
    }
    Ok(())
}

fn draw_final<R: Rng + ?Sized>(pops: &[f64], n: usize, rng: &mut R) -> Result<SpinConfiguration> {
    let w: Vec<f64> = pops.iter().map(|&x| x.max(0.0)).collect();
    let dist = WeightedIndex::new(&w).map_err(|e| DynamicsError::Density(format!("final populations: {e}")))?;
    Ok(SpinConfiguration::from_index(dist.sample(rng), n))
}

/// Evolves one basis state and samples the final measurement.
pub fn two_point_run<R: Rng + ?Sized>(
    p: &IsingProblem,
    sch: &Schedule,
    initial: &SpinConfiguration,
    bath: &BathSpec,
    rng: &mut R,
    dt: f64,
) -> Result<EnergySample> {
    check_protocol(sch)?;
    if initial.len() != p.n {
        return Err(IsingError::Dimension { expected: p.n, got: initial.len() }.into());
    }
    let (rho, _) = evolve(p, sch, &DensityOperator::from_configuration(initial), bath, dt)?;
    let fin = draw_final(&rho.populations(), p.n, rng)?;
    EnergySample::new(p, initial.clone(), fin)
}

/// Samples and averages of an ensemble of protocol runs.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub samples: Vec<EnergySample>,
    pub record: WorkHeatRecord,
}

/// Offset separating the final-measurement streams from the preparation streams.
const MEASUREMENT_SEED_OFFSET: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Runs `prep.n_configs × prep.repeats_per_config` protocols.
///
/// Runs are grouped by the classical energy of their initial configuration.
/// The preparation weights depend on the configuration only through that
/// energy, so each group is propagated once from the uniform mixture over
/// its level and every run's final configuration is drawn from the evolved
/// level state using its own random stream.
pub fn run_ensemble(
    p: &IsingProblem,
    sch: &Schedule,
    prep: &PreparationSpec,
    bath: &BathSpec,
    dt: f64,
) -> Result<EnsembleResult> {
    check_size(p)?;
    check_protocol(sch)?;
    bath.validate()?;
    let configs = draw_initial_configs(p, prep)?;
    let diag = ising_model::diagonal_energies(p)?;
    let mut level_e: Vec<f64> = Vec::new();
    let mut config_level = Vec::with_capacity(configs.len());
    for c in &configs {
        let e = classical_energy(p, c)?;
        let l = match level_e.iter().position(|&x| (x - e).abs() <= LEVEL_TOL) {
            Some(l) => l,
            None => {
                level_e.push(e);
                level_e.len() - 1
            }
        };
        config_level.push(l);
    }
    let model = propagator::Model::new(p, bath)?;
    let mut states: Vec<propagator::Tracked> = level_e
        .iter()
        .map(|&e| {
            let members: Vec<bool> = diag.iter().map(|&x| (x - e).abs() <= LEVEL_TOL).collect();
            let count = members.iter().filter(|&&m| m).count() as f64;
            let pops: Vec<f64> = members.iter().map(|&m| if m { 1.0 / count } else { 0.0 }).collect();
            tracked(model.basis.diagonal_to_sector(&pops), true)
        })
        .collect();
    propagator::propagate(&model, sch, &mut states, dt)?;
    let finals: Vec<Vec<f64>> = states.iter().map(|st| model.basis.comp_populations(&st.rho)).collect();

    let reps = prep.repeats_per_config;
    let total = prep.total_runs() as f64;
    let mut samples = Vec::with_capacity(prep.total_runs());
    let mut record = WorkHeatRecord::default();
    for (k, c) in configs.iter().enumerate() {
        let l = config_level[k];
        for r in 0..reps {
            let run_id = (k * reps + r) as u64;
            let mut rng = stream_rng(prep.seed ^ MEASUREMENT_SEED_OFFSET, run_id);
            let fin = draw_final(&finals[l], p.n, &mut rng)?;
            samples.push(EnergySample::new(p, c.clone(), fin)?);
            let st = &states[l];
            record.avg_work += st.work / total;
            record.avg_heat_in += st.heat / total;
            record.avg_delta_e1 += (st.e_final - st.e_initial) / total;
        }
    }
    Ok(EnsembleResult { samples, record })
}
