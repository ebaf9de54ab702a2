//! Lanczos with full reorthogonalization and locking.
//!
//! Converged Ritz vectors are locked and projected out of later Krylov
//! spaces, so each copy of a degenerate eigenvalue is eventually found.

use crate::SparseSymmetric;
use nalgebra::DMatrix;

use crate::symmetric_eigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Krylov basis size per round; bounds memory at `max_basis * dim` reals.
    pub max_basis: usize,
    /// Relative residual needed to lock a Ritz pair.
    pub tol: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_basis: 60, tol: 1e-10, max_rounds: 500, seed: 0x5eed }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

struct Round {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

fn lanczos_round(h: &SparseSymmetric, start: Vec<f64>, locked: &[Vec<f64>], m: usize) -> Round {
    let dim = h.dim();
    let mut q = vec![start];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_beta = 0.0;
    for j in 0..m {
        h.matvec(&q[j], &mut w);
        let a = dot(&w, &q[j]);
        alpha.push(a);
        axpy(-a, &q[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &q[j - 1], &mut w);
        }
        project_out(&mut w, locked);
        project_out(&mut w, &q);
        let b = normalize(&mut w);
        last_beta = b;
        if j + 1 == m || b < 1e-12 {
            break;
        }
        beta.push(b);
        q.push(w.clone());
    }
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (evals, evecs) = symmetric_eigen(&t);
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (c, &e) in evals.iter().enumerate() {
        values.push(e);
        residuals.push((last_beta * evecs[(k - 1, c)]).abs());
        let mut v = vec![0.0; dim];
        for (i, qi) in q.iter().enumerate() {
            axpy(evecs[(i, c)], qi, &mut v);
        }
        vectors.push(v);
    }
    Round { values, vectors, residuals }
}

/// Lowest `k` eigenvalues of `h` in ascending order, multiplicities included.
pub fn lowest_eigenvalues(h: &SparseSymmetric, k: usize, opts: &LanczosOptions) -> Vec<f64> {
    let dim = h.dim();
    let k = k.min(dim);
    let scale = h.norm_inf().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut restart: Option<Vec<f64>> = None;
    for _ in 0..opts.max_rounds {
        if locked.len() >= dim {
            break;
        }
        let mut start = restart
            .take()
            .unwrap_or_else(|| (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect());
        project_out(&mut start, &locked);
        if normalize(&mut start) < 1e-12 {
            start = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            project_out(&mut start, &locked);
            normalize(&mut start);
        }
        let m = opts.max_basis.min(dim - locked.len()).max(1);
        let round = lanczos_round(h, start, &locked, m);
        let mut accepted = 0;
        for (i, (&val, &res)) in round.values.iter().zip(&round.residuals).enumerate() {
            if res > opts.tol * scale {
                break;
            }
            let mut v = round.vectors[i].clone();
            project_out(&mut v, &locked);
            if normalize(&mut v) < 0.5 {
                continue;
            }
            locked.push(v);
            locked_vals.push(val);
            accepted += 1;
        }
        let mut sorted = locked_vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if accepted == 0 {
            restart = round.vectors.into_iter().next();
            continue;
        }
        if sorted.len() >= k {
            // the complement must hold nothing below the k-th locked value
            let kth = sorted[k - 1];
            let lowest_new = round.values.get(accepted).copied().unwrap_or(f64::INFINITY);
            let complement_min = if accepted < round.values.len()
                && round.residuals[accepted] <= opts.tol * scale
            {
                lowest_new
            } else {
                f64::INFINITY
            };
            if complement_min >= kth - opts.tol * scale && verify_complement(h, &locked, kth, opts, &mut rng) {
                sorted.truncate(k);
                return sorted;
            }
        }
    }
    let mut sorted = locked_vals;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.truncate(k);
    sorted
}

/// Runs a fresh Krylov space orthogonal to the locked set and checks that
/// its lowest Ritz value does not fall below `kth`.
fn verify_complement(
    h: &SparseSymmetric,
    locked: &[Vec<f64>],
    kth: f64,
    opts: &LanczosOptions,
    rng: &mut ChaCha8Rng,
) -> bool {
    let dim = h.dim();
    if locked.len() >= dim {
        return true;
    }
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    project_out(&mut start, locked);
    if normalize(&mut start) < 1e-12 {
        return true;
    }
    let m = opts.max_basis.min(dim - locked.len()).max(1);
    let round = lanczos_round(h, start, locked, m);
    // Ritz values bound the true minimum from above, so only a value clearly
    // below kth proves a missed eigenvalue.
    round.values.first().is_none_or(|&v| v >= kth - 1e-8 * h.norm_inf().max(1.0))
}
