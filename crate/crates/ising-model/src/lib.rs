//! Transverse-field Ising problems.
//!
//! `H(s) = (1 - s) Γ Σ σx_i + s (Σ h_i σz_i + Σ J_ij σz_i σz_j)`.
//!
//! Basis convention: spin `i` is bit `i` of the basis index and a clear bit
//! means `σz = +1`.

mod eigen;
mod lanczos;
mod sparse;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues};
pub use lanczos::{lowest_eigenvalues, LanczosOptions};
pub use sparse::SparseSymmetric;

/// Largest spin count for which operators on the full Hilbert space are built.
pub const MAX_OPERATOR_SPINS: usize = 20;
/// Largest spin count for dense diagonalization.
pub const MAX_DENSE_SPINS: usize = 12;
/// Largest spin count for brute-force classical enumeration.
pub const MAX_ENUMERATION_SPINS: usize = 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IsingError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("dimension mismatch: expected {expected} spins, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("annealing parameter s = {0} outside [0, 1]")]
    ParameterRange(f64),
    #[error("invalid spin configuration: {0}")]
    InvalidConfiguration(String),
}

pub type Result<T> = std::result::Result<T, IsingError>;

/// An Ising instance with transverse scale `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingProblem {
    pub n: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    pub fields: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_gamma() -> f64 {
    1.0
}

impl IsingProblem {
    /// Validated constructor.
    pub fn new(n: usize, couplings: Vec<(usize, usize, f64)>, fields: Vec<f64>, gamma: f64) -> Result<Self> {
        let p = IsingProblem { n, couplings, fields, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(IsingError::InvalidSize("n must be at least 1".into()));
        }
        if self.fields.len() != self.n {
            return Err(IsingError::InvalidProblem(format!(
                "{} fields for {} spins",
                self.fields.len(),
                self.n
            )));
        }
        if !self.gamma.is_finite() {
            return Err(IsingError::InvalidProblem("gamma is not finite".into()));
        }
        if let Some(h) = self.fields.iter().find(|h| !h.is_finite()) {
            return Err(IsingError::InvalidProblem(format!("field {h} is not finite")));
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j, v) in &self.couplings {
            if !(i < j && j < self.n) {
                return Err(IsingError::InvalidProblem(format!(
                    "coupling ({i}, {j}) must satisfy 0 <= i < j < n"
                )));
            }
            if !v.is_finite() {
                return Err(IsingError::InvalidProblem(format!("coupling ({i}, {j}) is not finite")));
            }
            if !seen.insert((i, j)) {
                return Err(IsingError::InvalidProblem(format!("duplicate coupling ({i}, {j})")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    /// True when every coupling joins consecutive spins.
    pub fn is_chain(&self) -> bool {
        self.couplings.iter().all(|&(i, j, _)| j == i + 1)
    }

    /// Coupling on bond `(i, i + 1)`, zero when absent.
    pub fn bond(&self, i: usize) -> f64 {
        self.couplings
            .iter()
            .find(|&&(a, b, _)| a == i && b == i + 1)
            .map(|c| c.2)
            .unwrap_or(0.0)
    }

    /// Neighbor lists, each undirected edge listed from both ends.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }

    /// Local field `h_i + Σ_j J_ij s_j` acting on spin `i`.
    pub fn local_field(&self, adj: &[Vec<(usize, f64)>], spins: &[i8], i: usize) -> f64 {
        self.fields[i] + adj[i].iter().map(|&(j, v)| v * spins[j] as f64).sum::<f64>()
    }
}

/// Antiferromagnetic chain with unit couplings, no fields and `Γ = 1`.
pub fn chain_problem(l: usize) -> Result<IsingProblem> {
    if l < 2 {
        return Err(IsingError::InvalidSize(format!("chain length {l} < 2")));
    }
    let couplings = (0..l - 1).map(|i| (i, i + 1, 1.0)).collect();
    IsingProblem::new(l, couplings, vec![0.0; l], 1.0)
}

/// A classical configuration of `σz` eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    pub spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(IsingError::InvalidConfiguration(format!("spin value {s}")));
        }
        Ok(SpinConfiguration { spins })
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfiguration { spins: vec![1; n] }
    }

    /// Alternating configuration starting with `+1`.
    pub fn neel(n: usize) -> Self {
        SpinConfiguration { spins: (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect() }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        SpinConfiguration { spins: (0..n).map(|i| if (index >> i) & 1 == 0 { 1 } else { -1 }).collect() }
    }

    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| if s < 0 { acc | (1 << i) } else { acc })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn flipped(&self) -> Self {
        SpinConfiguration { spins: self.spins.iter().map(|s| -s).collect() }
    }

    /// `+`/`-` string, one character per spin.
    pub fn to_bits(&self) -> String {
        self.spins.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }

    pub fn from_bits(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(IsingError::InvalidConfiguration(format!("character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(|spins| SpinConfiguration { spins })
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bits())
    }
}

fn energy_of_spins(p: &IsingProblem, spins: &[i8]) -> f64 {
    let field: f64 = p.fields.iter().zip(spins).map(|(h, &s)| h * s as f64).sum();
    let bonds: f64 = p
        .couplings
        .iter()
        .map(|&(i, j, v)| v * (spins[i] * spins[j]) as f64)
        .sum();
    field + bonds
}

/// `E_z(c) = Σ h_i c_i + Σ J_ij c_i c_j`, each edge counted once.
pub fn classical_energy(p: &IsingProblem, c: &SpinConfiguration) -> Result<f64> {
    if c.len() != p.n {
        return Err(IsingError::Dimension { expected: p.n, got: c.len() });
    }
    Ok(energy_of_spins(p, &c.spins))
}

/// Classical energy of basis state `index`.
pub fn energy_of_index(p: &IsingProblem, index: usize) -> f64 {
    let spins = SpinConfiguration::from_index(index, p.n);
    energy_of_spins(p, &spins.spins)
}

/// Diagonal of the problem Hamiltonian over all basis states.
pub fn diagonal_energies(p: &IsingProblem) -> Result<Vec<f64>> {
    if p.n > MAX_OPERATOR_SPINS {
        return Err(IsingError::UnsupportedSize(format!("n = {} > {MAX_OPERATOR_SPINS}", p.n)));
    }
    Ok((0..p.dim()).map(|x| energy_of_index(p, x)).collect())
}

/// Minimum of `E_z`. Chains use a linear-time recursion, other problems
/// brute force up to 24 spins.
pub fn ground_energy_classical(p: &IsingProblem) -> Result<f64> {
    if p.is_chain() {
        // best[s] = lowest energy of spins 0..=i with spin i equal to s
        let mut best = [p.fields[0], -p.fields[0]];
        for i in 1..p.n {
            let j = p.bond(i - 1);
            let h = p.fields[i];
            let next = |s: f64| {
                let up = best[0] + j * s + h * s;
                let down = best[1] - j * s + h * s;
                up.min(down)
            };
            best = [next(1.0), next(-1.0)];
        }
        return Ok(best[0].min(best[1]));
    }
    if p.n > MAX_ENUMERATION_SPINS {
        return Err(IsingError::UnsupportedSize(format!(
            "brute-force ground energy needs n <= {MAX_ENUMERATION_SPINS}, got {}",
            p.n
        )));
    }
    Ok((0..p.dim()).map(|x| energy_of_index(p, x)).fold(f64::INFINITY, f64::min))
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(IsingError::ParameterRange(s))
    }
}

/// Sparse `H(s)` in the computational basis.
pub fn hamiltonian(p: &IsingProblem, s: f64) -> Result<SparseSymmetric> {
    check_s(s)?;
    let diag = diagonal_energies(p)?;
    let dim = p.dim();
    let x = (1.0 - s) * p.gamma;
    let mut rows = Vec::with_capacity(dim);
    for (idx, e) in diag.iter().enumerate() {
        let mut row = Vec::with_capacity(p.n + 1);
        row.push((idx, s * e));
        if x != 0.0 {
            for i in 0..p.n {
                row.push((idx ^ (1 << i), x));
            }
        }
        row.sort_by_key(|e| e.0);
        rows.push(row);
    }
    Ok(SparseSymmetric::from_rows(dim, rows))
}

/// Dense `H(s)`, for `n <= 12`.
pub fn dense_hamiltonian(p: &IsingProblem, s: f64) -> Result<DMatrix<f64>> {
    if p.n > MAX_DENSE_SPINS {
        return Err(IsingError::UnsupportedSize(format!("dense operator needs n <= {MAX_DENSE_SPINS}")));
    }
    Ok(hamiltonian(p, s)?.to_dense())
}

/// Eigenvalues of `H(s)` at one value of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub s: f64,
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// `E_1 - E_0`, or zero for a one-level spectrum.
    pub fn gap(&self) -> f64 {
        if self.eigenvalues.len() < 2 {
            0.0
        } else {
            self.eigenvalues[1] - self.eigenvalues[0]
        }
    }

    /// Distinct levels and their multiplicities, grouping within `tol`.
    pub fn multiplets(&self, tol: f64) -> Vec<(f64, usize)> {
        group_levels(&self.eigenvalues, tol)
    }
}

/// Groups sorted values into `(representative, multiplicity)` runs.
pub fn group_levels(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &e in sorted {
        match out.last_mut() {
            Some(g) if e - last <= tol => g.1 += 1,
            _ => out.push((e, 1)),
        }
        last = e;
    }
    out
}

/// Full spectra over a grid of `s` values (dense, `n <= 12`).
pub fn spectrum(p: &IsingProblem, s_grid: &[f64]) -> Result<Vec<Spectrum>> {
    if p.n > MAX_DENSE_SPINS {
        return Err(IsingError::UnsupportedSize(format!(
            "full spectrum needs n <= {MAX_DENSE_SPINS}; use spectrum_lowest"
        )));
    }
    s_grid
        .iter()
        .map(|&s| {
            let h = dense_hamiltonian(p, s)?;
            Ok(Spectrum { s, eigenvalues: symmetric_eigenvalues(&h) })
        })
        .collect()
}

/// Lowest `k` eigenvalues over a grid, for `n <= 20`.
pub fn spectrum_lowest(p: &IsingProblem, s_grid: &[f64], k: usize, opts: &LanczosOptions) -> Result<Vec<Spectrum>> {
    if p.n > MAX_OPERATOR_SPINS {
        return Err(IsingError::UnsupportedSize(format!("n = {} > {MAX_OPERATOR_SPINS}", p.n)));
    }
    s_grid
        .iter()
        .map(|&s| {
            let h = hamiltonian(p, s)?;
            let eigenvalues = if p.n <= MAX_DENSE_SPINS {
                let mut all = symmetric_eigenvalues(&h.to_dense());
                all.truncate(k);
                all
            } else {
                lowest_eigenvalues(&h, k, opts)
            };
            Ok(Spectrum { s, eigenvalues })
        })
        .collect()
}

/// Orthonormal basis adapted to the global spin flip `F = Π σx_i`.
///
/// When all fields vanish `H(s)` commutes with `F`, so it is block diagonal
/// in the two parity sectors. Sector 0 holds the even combinations
/// `(|x> + |x̄>)/√2`, sector 1 the odd ones, with `x` ranging over indices
/// whose top bit is clear.
#[derive(Debug, Clone)]
pub struct ParityBasis {
    pub n: usize,
    /// For each basis index: the local index it contributes to and the sign
    /// it carries in the odd sector.
    pub members: Vec<(usize, f64)>,
}

impl ParityBasis {
    pub fn new(n: usize) -> Self {
        let dim = 1usize << n;
        let mask = dim - 1;
        let half = dim / 2;
        let members = (0..dim)
            .map(|x| if x < half { (x, 1.0) } else { (x ^ mask, -1.0) })
            .collect();
        ParityBasis { n, members }
    }

    pub fn sector_dim(&self) -> usize {
        1usize << (self.n - 1)
    }

    /// Sector blocks `S_kᵀ A S_k` of an operator given by sparse rows.
    pub fn project(&self, op: &SparseSymmetric) -> [[DMatrix<f64>; 2]; 2] {
        let d = self.sector_dim();
        let mut blocks = [
            [DMatrix::zeros(d, d), DMatrix::zeros(d, d)],
            [DMatrix::zeros(d, d), DMatrix::zeros(d, d)],
        ];
        let c = std::f64::consts::FRAC_1_SQRT_2;
        for (x, row) in op.rows().enumerate() {
            let (kx, sx) = self.members[x];
            for (y, v) in row {
                let (ky, sy) = self.members[y];
                // <y|A|x> with |x> = c(|k,+> + sx|k,->)
                let coeff = [[c * c, c * c * sx], [c * c * sy, c * c * sx * sy]];
                for (a, row_c) in coeff.iter().enumerate() {
                    for (b, &w) in row_c.iter().enumerate() {
                        blocks[a][b][(ky, kx)] += w * v;
                    }
                }
            }
        }
        blocks
    }

    /// Column `k` of sector `sector` expressed in the computational basis.
    pub fn vector_support(&self, sector: usize, k: usize) -> [(usize, f64); 2] {
        let mask = (1usize << self.n) - 1;
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if sector == 0 { 1.0 } else { -1.0 };
        [(k, c), (k ^ mask, c * sign)]
    }
}

/// Spectral gap of `H(s)` inside the symmetry sector of the ground state.
///
/// With zero fields the parity sectors decouple and the gap is taken in the
/// sector holding the ground state. Otherwise it is `E_1 - E_0`.
pub fn sector_gap(p: &IsingProblem, s: f64) -> Result<f64> {
    if p.n > MAX_DENSE_SPINS {
        return Err(IsingError::UnsupportedSize(format!("sector gap needs n <= {MAX_DENSE_SPINS}")));
    }
    let h = hamiltonian(p, s)?;
    if p.has_fields() || p.n < 2 {
        let e = symmetric_eigenvalues(&h.to_dense());
        return Ok(if e.len() > 1 { e[1] - e[0] } else { 0.0 });
    }
    let basis = ParityBasis::new(p.n);
    let blocks = basis.project(&h);
    let even = symmetric_eigenvalues(&blocks[0][0]);
    let odd = symmetric_eigenvalues(&blocks[1][1]);
    let sector = if even[0] <= odd[0] { &even } else { &odd };
    Ok(sector[1] - sector[0])
}
