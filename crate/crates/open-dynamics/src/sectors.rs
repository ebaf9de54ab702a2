//! Symmetry-adapted orthonormal basis used by the propagator.

use ising_model::{IsingProblem, SparseSymmetric};
use nalgebra::DMatrix;

use crate::CMat;

/// Orthonormal basis whose vectors are grouped into sectors that the
/// Hamiltonian never mixes. With zero fields these are the two parity
/// sectors of the global spin flip; otherwise a single sector equal to the
/// computational basis.
#[derive(Debug, Clone)]
pub(crate) struct SectorBasis {
    pub dims: Vec<usize>,
    pub offsets: Vec<usize>,
    /// Column `g` of the basis change as `(computational index, coefficient)`.
    pub cols: Vec<Vec<(usize, f64)>>,
    /// Row `x` of the basis change as `(sector-ordered index, coefficient)`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SectorBasis {
    pub fn for_problem(p: &IsingProblem) -> Self {
        let dim = p.dim();
        if p.has_fields() || p.n < 2 {
            let cols = (0..dim).map(|x| vec![(x, 1.0)]).collect::<Vec<_>>();
            return SectorBasis { dims: vec![dim], offsets: vec![0], rows: cols.clone(), cols };
        }
        let half = dim / 2;
        let mask = dim - 1;
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let mut cols = Vec::with_capacity(dim);
        for sector in 0..2 {
            let sign = if sector == 0 { 1.0 } else { -1.0 };
            for k in 0..half {
                cols.push(vec![(k, c), (k ^ mask, c * sign)]);
            }
        }
        let mut rows = vec![Vec::with_capacity(2); dim];
        for (g, col) in cols.iter().enumerate() {
            for &(x, v) in col {
                rows[x].push((g, v));
            }
        }
        SectorBasis { dims: vec![half, half], offsets: vec![0, half], cols, rows }
    }

    pub fn nsec(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.cols.len()
    }

    /// `Sᵀ A S` as a dense sector-ordered matrix.
    pub fn project_dense(&self, op: &SparseSymmetric) -> DMatrix<f64> {
        let n = self.total();
        let mut out = DMatrix::zeros(n, n);
        for (x, row) in op.rows().enumerate() {
            for (y, v) in row {
                for &(g, cy) in &self.rows[y] {
                    for &(h, cx) in &self.rows[x] {
                        out[(g, h)] += cy * v * cx;
                    }
                }
            }
        }
        out
    }

    /// Nonzero entries of `Sᵀ A S`.
    pub fn project_sparse(&self, op: &SparseSymmetric) -> Vec<(usize, usize, f64)> {
        let dense = self.project_dense(op);
        let mut out = Vec::new();
        for h in 0..dense.ncols() {
            for g in 0..dense.nrows() {
                let v = dense[(g, h)];
                if v.abs() > 1e-14 {
                    out.push((g, h, v));
                }
            }
        }
        out
    }

    /// Computational-basis matrix into the sector-ordered basis.
    pub fn to_sector(&self, rho: &CMat) -> CMat {
        let n = self.total();
        let mut out = CMat::zeros(n);
        for h in 0..n {
            for g in 0..n {
                let (mut re, mut im) = (0.0, 0.0);
                for &(x, cx) in &self.cols[g] {
                    for &(y, cy) in &self.cols[h] {
                        re += cx * cy * rho.re[(x, y)];
                        im += cx * cy * rho.im[(x, y)];
                    }
                }
                out.re[(g, h)] = re;
                out.im[(g, h)] = im;
            }
        }
        out
    }

    #[allow(clippy::wrong_self_convention)]
    pub fn from_sector(&self, rho: &CMat) -> CMat {
        let n = self.total();
        let mut out = CMat::zeros(n);
        for y in 0..n {
            for x in 0..n {
                let (mut re, mut im) = (0.0, 0.0);
                for &(g, cx) in &self.rows[x] {
                    for &(h, cy) in &self.rows[y] {
                        re += cx * cy * rho.re[(g, h)];
                        im += cx * cy * rho.im[(g, h)];
                    }
                }
                out.re[(x, y)] = re;
                out.im[(x, y)] = im;
            }
        }
        out
    }

    /// Diagonal of a sector-ordered state in the computational basis.
    pub fn comp_populations(&self, rho: &CMat) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                let mut p = 0.0;
                for &(g, cg) in row {
                    for &(h, ch) in row {
                        p += cg * ch * rho.re[(g, h)];
                    }
                }
                p
            })
            .collect()
    }

    /// Sector-ordered image of a state diagonal in the computational basis.
    pub fn diagonal_to_sector(&self, diag: &[f64]) -> CMat {
        let n = self.total();
        let mut out = CMat::zeros(n);
        for (x, &w) in diag.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(g, cg) in &self.rows[x] {
                for &(h, ch) in &self.rows[x] {
                    out.re[(g, h)] += w * cg * ch;
                }
            }
        }
        out
    }
}
