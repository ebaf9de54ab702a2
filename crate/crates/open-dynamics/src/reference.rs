//! Dense Davies dissipator in the computational basis.

use ising_model::IsingProblem;
use ising_model::symmetric_eigen;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::propagator::LEVEL_TOL;
use crate::{check_size, ohmic_rate, BathSpec, DynamicsError, Result};

/// Davies generator frozen at one value of `s`.
#[derive(Debug, Clone)]
pub struct Dissipator {
    dim: usize,
    vecs: DMatrix<f64>,
    levels: Vec<Vec<usize>>,
    /// `(target level, source level, rate, Π_L A Π_M restricted to the levels)`.
    jumps: Vec<(usize, usize, f64, DMatrix<f64>)>,
    k_levels: Vec<DMatrix<f64>>,
}

/// Builds the dissipator of `bath` at `H(s)`.
pub fn dissipator(p: &IsingProblem, s: f64, bath: &BathSpec) -> Result<Dissipator> {
    check_size(p)?;
    bath.validate()?;
    let h = ising_model::dense_hamiltonian(p, s)?;
    let dim = h.nrows();
    let (energies, vecs) = symmetric_eigen(&h);

    let mut levels: Vec<Vec<usize>> = Vec::new();
    for (g, &e) in energies.iter().enumerate() {
        match levels.last_mut() {
            Some(l) if e - energies[g - 1] <= LEVEL_TOL => l.push(g),
            _ => levels.push(vec![g]),
        }
    }
    let level_e: Vec<f64> = levels.iter().map(|l| l.iter().map(|&g| energies[g]).sum::<f64>() / l.len() as f64).collect();

    let mut jumps = Vec::new();
    let mut k_levels: Vec<DMatrix<f64>> = levels.iter().map(|l| DMatrix::zeros(l.len(), l.len())).collect();
    if bath.gamma_rate > 0.0 {
        for (kappa, op) in bath.coupling_operators(p.n) {
            let a = vecs.transpose() * op.to_dense() * &vecs;
            for (li, l) in levels.iter().enumerate() {
                for (mi, m) in levels.iter().enumerate() {
                    let j = DMatrix::from_fn(l.len(), m.len(), |r, c| a[(l[r], m[c])]);
                    if j.amax() <= 1e-13 {
                        continue;
                    }
                    let rate = kappa * ohmic_rate(level_e[mi] - level_e[li], bath.gamma_rate, bath.beta2);
                    k_levels[mi] += j.transpose() * &j * rate;
                    jumps.push((li, mi, rate, j));
                }
            }
        }
    }
    Ok(Dissipator { dim, vecs, levels, jumps, k_levels })
}

fn gather(m: &DMatrix<Complex64>, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

fn real(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

impl Dissipator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `D(ρ)` for a matrix in the computational basis.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let v = real(&self.vecs);
        let re = v.adjoint() * rho * &v;
        let mut out = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (l, m, rate, j) in &self.jumps {
            let (sl, sm) = (&self.levels[*l], &self.levels[*m]);
            let jc = real(j);
            let add = &jc * gather(&re, sm, sm) * jc.adjoint() * Complex64::new(*rate, 0.0);
            for (r, &a) in sl.iter().enumerate() {
                for (c, &b) in sl.iter().enumerate() {
                    out[(a, b)] += add[(r, c)];
                }
            }
        }
        let all: Vec<usize> = (0..self.dim).collect();
        for (mi, sm) in self.levels.iter().enumerate() {
            let k = real(&self.k_levels[mi]);
            let left = &k * gather(&re, sm, &all) * Complex64::new(0.5, 0.0);
            let right = gather(&re, &all, sm) * &k * Complex64::new(0.5, 0.0);
            for (r, &a) in sm.iter().enumerate() {
                for b in 0..self.dim {
                    out[(a, b)] -= left[(r, b)];
                    out[(b, a)] -= right[(b, r)];
                }
            }
        }
        &v * out * v.adjoint()
    }

    /// Superoperator on column-stacked matrices, for `dim <= 64`.
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.dim > 64 {
            return Err(DynamicsError::Size(format!("superoperator of dimension {}² is too large", self.dim)));
        }
        let d = self.dim;
        let mut sup = DMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let mut e = DMatrix::zeros(d, d);
                e[(i, j)] = Complex64::new(1.0, 0.0);
                let col = self.apply(&e);
                for b in 0..d {
                    for a in 0..d {
                        sup[(a + d * b, i + d * j)] = col[(a, b)];
                    }
                }
            }
        }
        Ok(sup)
    }
}
