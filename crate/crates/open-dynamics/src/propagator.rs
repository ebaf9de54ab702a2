//! Exponential-midpoint propagation in the instantaneous eigenbasis.
//!
//! Within a step the Hamiltonian and dissipator are frozen at the midpoint
//! value of `s`. The frozen generator maps coherences between distinct
//! levels onto themselves, where it acts as a phase times a two-sided decay,
//! and maps the within-level blocks onto each other through a sparse real
//! generator handled by a truncated Taylor series.

use std::collections::VecDeque;

use ising_model::IsingProblem;
use ising_model::symmetric_eigen;
use nalgebra::DMatrix;
use schedule::Schedule;

use crate::sectors::SectorBasis;
use crate::{ohmic_rate, BathSpec, CMat, DynamicsError, Result};

/// Eigenvalues closer than this are treated as one level.
pub const LEVEL_TOL: f64 = 1e-9;
/// Matrix elements of coupling operators below this are dropped.
const ELEMENT_TOL: f64 = 1e-13;
const TRACE_TOL: f64 = 1e-6;

/// Weighted coupling operator as sector-basis triplets.
type Coupling = (f64, Vec<(usize, usize, f64)>);

/// Static data for a problem and bath.
pub(crate) struct Model {
    pub basis: SectorBasis,
    hx: DMatrix<f64>,
    hz: DMatrix<f64>,
    ops: Vec<Coupling>,
    bath: BathSpec,
}

impl Model {
    pub fn new(p: &IsingProblem, bath: &BathSpec) -> Result<Self> {
        let basis = SectorBasis::for_problem(p);
        let hx = basis.project_dense(&ising_model::hamiltonian(p, 0.0)?);
        let hz = basis.project_dense(&ising_model::hamiltonian(p, 1.0)?);
        let ops = bath
            .coupling_operators(p.n)
            .into_iter()
            .map(|(k, op)| (k, basis.project_sparse(&op)))
            .collect();
        Ok(Model { basis, hx, hz, ops, bath: bath.clone() })
    }

    fn block(&self, m: &DMatrix<f64>, sector: usize) -> DMatrix<f64> {
        let (o, d) = (self.basis.offsets[sector], self.basis.dims[sector]);
        m.view((o, o), (d, d)).into_owned()
    }

    /// `H(s)` in the sector-ordered basis.
    pub fn hamiltonian(&self, s: f64) -> DMatrix<f64> {
        &self.hx * (1.0 - s) + &self.hz * s
    }

    pub fn frame(&self, s: f64) -> Frame {
        let mut energies = Vec::with_capacity(self.basis.total());
        let mut vecs = Vec::with_capacity(self.basis.nsec());
        for sector in 0..self.basis.nsec() {
            let h = self.block(&self.hx, sector) * (1.0 - s) + self.block(&self.hz, sector) * s;
            let d = h.nrows();
            let off_diag = (0..d).any(|j| (0..d).any(|i| i != j && h[(i, j)] != 0.0));
            let (vals, v) = if off_diag {
                symmetric_eigen(&h)
            } else {
                ((0..d).map(|i| h[(i, i)]).collect(), DMatrix::identity(d, d))
            };
            energies.extend(vals);
            vecs.push(v);
        }
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let mut levels: Vec<Vec<usize>> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for &g in &order {
            let e = energies[g];
            match levels.last_mut() {
                Some(l) if e - last <= LEVEL_TOL => l.push(g),
                _ => levels.push(vec![g]),
            }
            last = e;
        }
        for l in levels.iter_mut() {
            l.sort_unstable();
        }
        let mut level_of = vec![0; energies.len()];
        let mut pos = vec![0; energies.len()];
        for (li, l) in levels.iter().enumerate() {
            for (k, &g) in l.iter().enumerate() {
                level_of[g] = li;
                pos[g] = k;
            }
        }
        let level_energy = levels.iter().map(|l| l.iter().map(|&g| energies[g]).sum::<f64>() / l.len() as f64).collect();
        Frame { energies, vecs, levels, level_of, pos, level_energy }
    }

    /// Coupling operator `op` in the eigenbasis of `frame`.
    fn eigen_op(&self, frame: &Frame, op: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let b = &self.basis;
        let n = b.total();
        let mut out = DMatrix::zeros(n, n);
        for sa in 0..b.nsec() {
            for sb in 0..b.nsec() {
                let (oa, da) = (b.offsets[sa], b.dims[sa]);
                let (ob, db) = (b.offsets[sb], b.dims[sb]);
                // A^{ab} V_b, built row by row from the sparse entries
                let mut av = DMatrix::<f64>::zeros(da, db);
                let mut any = false;
                for &(g, h, v) in op {
                    if g >= oa && g < oa + da && h >= ob && h < ob + db {
                        any = true;
                        for c in 0..db {
                            av[(g - oa, c)] += v * frame.vecs[sb][(h - ob, c)];
                        }
                    }
                }
                if any {
                    let block = frame.vecs[sa].transpose() * av;
                    out.view_mut((oa, ob), (da, db)).copy_from(&block);
                }
            }
        }
        out
    }

    /// Frozen generator for the within-level blocks and the level decay
    /// matrices at `frame`.
    pub fn generator(&self, frame: &Frame) -> Generator {
        let nlev = frame.levels.len();
        let mut level_off = Vec::with_capacity(nlev + 1);
        let mut acc = 0;
        for l in &frame.levels {
            level_off.push(acc);
            acc += l.len() * l.len();
        }
        level_off.push(acc);
        let ldx = |a: usize, b: usize| {
            let l = frame.level_of[a];
            level_off[l] + frame.pos[a] * frame.levels[l].len() + frame.pos[b]
        };
        let mut k_levels: Vec<DMatrix<f64>> = frame.levels.iter().map(|l| DMatrix::zeros(l.len(), l.len())).collect();
        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        let n = frame.energies.len();
        let (gamma, beta) = (self.bath.gamma_rate, self.bath.beta2);
        if gamma > 0.0 {
            for (kappa, op) in &self.ops {
                let a_op = self.eigen_op(frame, op);
                for c in 0..n {
                    let m = frame.level_of[c];
                    let sm = &frame.levels[m];
                    for a in 0..n {
                        let v = a_op[(a, c)];
                        if v.abs() <= ELEMENT_TOL {
                            continue;
                        }
                        let l = frame.level_of[a];
                        let sl = &frame.levels[l];
                        let rate = kappa * ohmic_rate(frame.level_energy[m] - frame.level_energy[l], gamma, beta);
                        if rate == 0.0 {
                            continue;
                        }
                        trip.push((ldx(a, a), ldx(c, c), rate * v * v));
                        for &d in sm {
                            let w = a_op[(a, d)];
                            if w.abs() > ELEMENT_TOL {
                                k_levels[m][(frame.pos[c], frame.pos[d])] += rate * v * w;
                            }
                        }
                        if sl.len() > 1 || sm.len() > 1 {
                            for &b in sl {
                                for &d in sm {
                                    if b == a && d == c {
                                        continue;
                                    }
                                    let w = a_op[(b, d)];
                                    if w.abs() > ELEMENT_TOL {
                                        trip.push((ldx(a, b), ldx(c, d), rate * v * w));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        // -½ {K_L, ρ_LL}
        for (li, k) in k_levels.iter().enumerate() {
            let d = k.nrows();
            let off = level_off[li];
            for i in 0..d {
                for j in 0..d {
                    let row = off + i * d + j;
                    for q in 0..d {
                        let kiq = k[(i, q)];
                        if kiq != 0.0 {
                            trip.push((row, off + q * d + j, -0.5 * kiq));
                        }
                        let kqj = k[(q, j)];
                        if kqj != 0.0 {
                            trip.push((row, off + i * d + q, -0.5 * kqj));
                        }
                    }
                }
            }
        }
        Generator { level_off, matrix: Csr::from_triplets(acc, trip), k_levels }
    }
}

/// Eigen-decomposition of `H(s)` with its levels.
pub(crate) struct Frame {
    pub energies: Vec<f64>,
    pub vecs: Vec<DMatrix<f64>>,
    pub levels: Vec<Vec<usize>>,
    pub level_of: Vec<usize>,
    pub pos: Vec<usize>,
    pub level_energy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { dim, row_ptr, cols, vals }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.dim) {
            *yr = (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum();
        }
    }

    /// Largest absolute column sum.
    fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.dim];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            col[*c] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Indices reachable from `seed` by repeated application.
    fn closure(&self, seed: &[usize]) -> Vec<usize> {
        let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); self.dim];
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != 0.0 {
                    by_col[self.cols[k]].push(r);
                }
            }
        }
        let mut seen = vec![false; self.dim];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seed {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(c) = queue.pop_front() {
            for &r in &by_col[c] {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        (0..self.dim).filter(|&i| seen[i]).collect()
    }

    fn restrict(&self, keep: &[usize]) -> Csr {
        let mut map = vec![usize::MAX; self.dim];
        for (i, &k) in keep.iter().enumerate() {
            map[k] = i;
        }
        let mut trip = Vec::new();
        for (i, &r) in keep.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = map[self.cols[k]];
                if c != usize::MAX {
                    trip.push((i, c, self.vals[k]));
                }
            }
        }
        Csr::from_triplets(keep.len(), trip)
    }
}

pub(crate) struct Generator {
    level_off: Vec<usize>,
    matrix: Csr,
    k_levels: Vec<DMatrix<f64>>,
}

impl Generator {
    /// `exp(t M)` applied to the real and imaginary parts of `y`.
    fn expmv(&self, re: &mut [f64], im: &mut [f64], t: f64) {
        let seed: Vec<usize> = (0..re.len()).filter(|&i| re[i] != 0.0 || im[i] != 0.0).collect();
        if seed.is_empty() {
            return;
        }
        let keep = self.matrix.closure(&seed);
        let local;
        let m = if keep.len() == self.matrix.dim {
            &self.matrix
        } else {
            local = self.matrix.restrict(&keep);
            &local
        };
        let mut xr: Vec<f64> = keep.iter().map(|&i| re[i]).collect();
        let mut xi: Vec<f64> = keep.iter().map(|&i| im[i]).collect();
        let lambda = m.norm1() * t;
        let substeps = lambda.ceil().max(1.0) as usize;
        let h = t / substeps as f64;
        let dim = keep.len();
        let mut tr = vec![0.0; dim];
        let mut ti = vec![0.0; dim];
        let mut nr = vec![0.0; dim];
        let mut ni = vec![0.0; dim];
        for _ in 0..substeps {
            tr.copy_from_slice(&xr);
            ti.copy_from_slice(&xi);
            for k in 1..=60 {
                m.matvec(&tr, &mut nr);
                m.matvec(&ti, &mut ni);
                let f = h / k as f64;
                let mut term = 0.0f64;
                let mut size = 0.0f64;
                for i in 0..dim {
                    tr[i] = nr[i] * f;
                    ti[i] = ni[i] * f;
                    xr[i] += tr[i];
                    xi[i] += ti[i];
                    term = term.max(tr[i].abs()).max(ti[i].abs());
                    size = size.max(xr[i].abs()).max(xi[i].abs());
                }
                if term <= 1e-17 * size {
                    break;
                }
            }
        }
        for (j, &i) in keep.iter().enumerate() {
            re[i] = xr[j];
            im[i] = xi[j];
        }
    }

    /// `exp(-K_L t / 2)` for every level.
    fn decay_factors(&self, t: f64) -> Vec<DMatrix<f64>> {
        self.k_levels
            .iter()
            .map(|k| {
                if k.nrows() == 1 {
                    DMatrix::from_element(1, 1, (-0.5 * k[(0, 0)] * t).exp())
                } else {
                    let sym = (k + k.transpose()) * 0.5;
                    let (vals, vecs) = symmetric_eigen(&sym);
                    let d = DMatrix::from_fn(vals.len(), vals.len(), |i, j| if i == j { (-0.5 * vals[i] * t).exp() } else { 0.0 });
                    &vecs * d * vecs.transpose()
                }
            })
            .collect()
    }
}

/// A density operator in the current frame together with its energy
/// bookkeeping.
pub(crate) struct Tracked {
    pub rho: CMat,
    /// Off-sector blocks are known to vanish.
    pub block_diagonal: bool,
    pub work: f64,
    pub heat: f64,
    pub e_initial: f64,
    pub e_final: f64,
}

fn active_blocks(basis: &SectorBasis, block_diagonal: bool) -> Vec<(usize, usize)> {
    let ns = basis.nsec();
    let mut out = Vec::new();
    for a in 0..ns {
        for b in 0..ns {
            if a == b || !block_diagonal {
                out.push((a, b));
            }
        }
    }
    out
}

/// `ρ ← Wᵀ ρ W` block by block.
fn change_basis(basis: &SectorBasis, st: &mut Tracked, w: &[DMatrix<f64>]) {
    let blocks = active_blocks(basis, st.block_diagonal);
    let n = basis.total();
    let mut out = CMat::zeros(n);
    for (a, b) in blocks {
        let (oa, da) = (basis.offsets[a], basis.dims[a]);
        let (ob, db) = (basis.offsets[b], basis.dims[b]);
        let wat = w[a].transpose();
        for (src, dst) in [(&st.rho.re, &mut out.re), (&st.rho.im, &mut out.im)] {
            let x = src.view((oa, ob), (da, db));
            let y = &wat * x * &w[b];
            dst.view_mut((oa, ob), (da, db)).copy_from(&y);
        }
    }
    st.rho = out;
}

fn frame_energy(frame: &Frame, rho: &CMat) -> f64 {
    frame.energies.iter().enumerate().map(|(a, e)| e * rho.re[(a, a)]).sum()
}

fn trace_with(rho: &CMat, h: &DMatrix<f64>) -> f64 {
    rho.re.component_mul(h).sum()
}

/// One frozen-generator step of length `dt` in the eigenbasis of `frame`.
fn step(basis: &SectorBasis, frame: &Frame, gen: &Generator, decay: &[DMatrix<f64>], st: &mut Tracked, dt: f64) {
    let n = frame.energies.len();
    let dim = *gen.level_off.last().expect("offsets");
    let mut yr = vec![0.0; dim];
    let mut yi = vec![0.0; dim];
    for (li, l) in frame.levels.iter().enumerate() {
        let d = l.len();
        for (i, &a) in l.iter().enumerate() {
            for (j, &b) in l.iter().enumerate() {
                yr[gen.level_off[li] + i * d + j] = st.rho.re[(a, b)];
                yi[gen.level_off[li] + i * d + j] = st.rho.im[(a, b)];
            }
        }
    }
    let before: Vec<f64> = (0..n).map(|a| st.rho.re[(a, a)]).collect();

    let blocks = active_blocks(basis, st.block_diagonal);
    // two-sided decay, diagonal part
    let mut diag = vec![1.0; n];
    for (li, l) in frame.levels.iter().enumerate() {
        if l.len() == 1 {
            diag[l[0]] = decay[li][(0, 0)];
        }
    }
    for &(sa, sb) in &blocks {
        let (oa, da) = (basis.offsets[sa], basis.dims[sa]);
        let (ob, db) = (basis.offsets[sb], basis.dims[sb]);
        for b in ob..ob + db {
            for a in oa..oa + da {
                let f = diag[a] * diag[b];
                let phase = -(frame.energies[a] - frame.energies[b]) * dt;
                let (sn, cs) = phase.sin_cos();
                let (x, y) = (st.rho.re[(a, b)] * f, st.rho.im[(a, b)] * f);
                st.rho.re[(a, b)] = x * cs - y * sn;
                st.rho.im[(a, b)] = x * sn + y * cs;
            }
        }
    }
    // degenerate levels: rows and columns mixed by the level factor; the
    // phase is common within a level so the order does not matter
    for (li, l) in frame.levels.iter().enumerate() {
        if l.len() == 1 {
            continue;
        }
        let dl = &decay[li];
        for m in [&mut st.rho.re, &mut st.rho.im] {
            let rows: Vec<_> = l.iter().map(|&a| m.row(a).into_owned()).collect();
            for (i, &a) in l.iter().enumerate() {
                let mut acc = rows[0].clone() * dl[(i, 0)];
                for (k, r) in rows.iter().enumerate().skip(1) {
                    acc += r * dl[(i, k)];
                }
                m.row_mut(a).copy_from(&acc);
            }
            let cols: Vec<_> = l.iter().map(|&b| m.column(b).into_owned()).collect();
            for (j, &b) in l.iter().enumerate() {
                let mut acc = cols[0].clone() * dl[(0, j)];
                for (k, c) in cols.iter().enumerate().skip(1) {
                    acc += c * dl[(k, j)];
                }
                m.column_mut(b).copy_from(&acc);
            }
        }
    }

    gen.expmv(&mut yr, &mut yi, dt);
    for (li, l) in frame.levels.iter().enumerate() {
        let d = l.len();
        for (i, &a) in l.iter().enumerate() {
            for (j, &b) in l.iter().enumerate() {
                st.rho.re[(a, b)] = yr[gen.level_off[li] + i * d + j];
                st.rho.im[(a, b)] = yi[gen.level_off[li] + i * d + j];
            }
        }
    }
    st.heat += (0..n).map(|a| frame.energies[a] * (st.rho.re[(a, a)] - before[a])).sum::<f64>();
}

/// Midpoints and lengths of the integration steps for `sch`.
pub(crate) fn step_plan(sch: &Schedule, dt: f64) -> Vec<(f64, f64)> {
    let mut plan = Vec::new();
    for w in sch.breakpoints.windows(2) {
        let ((t0, s0), (t1, s1)) = (w[0], w[1]);
        let len = t1 - t0;
        if len <= 0.0 {
            continue;
        }
        let k = if s0 == s1 { 1 } else { (len / dt).ceil().max(1.0) as usize };
        let h = len / k as f64;
        for j in 0..k {
            let u = (j as f64 + 0.5) / k as f64;
            plan.push((s0 * (1.0 - u) + s1 * u, h));
        }
    }
    plan
}

/// Propagates several states under the same schedule. States are given
/// and returned in the sector-ordered basis.
pub(crate) fn propagate(model: &Model, sch: &Schedule, states: &mut [Tracked], dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::Parameter(format!("dt must be positive, got {dt}")));
    }
    let basis = &model.basis;
    let h0 = model.hamiltonian(sch.start());
    let traces: Vec<f64> = states.iter().map(|st| st.rho.re.trace()).collect();
    for st in states.iter_mut() {
        st.e_initial = trace_with(&st.rho, &h0);
        st.work = -st.e_initial;
        st.heat = 0.0;
    }
    let mut prev: Option<Frame> = None;
    for (k, (s, h)) in step_plan(sch, dt).into_iter().enumerate() {
        let frame = model.frame(s);
        let w: Vec<DMatrix<f64>> = match &prev {
            None => frame.vecs.clone(),
            Some(old) => old.vecs.iter().zip(&frame.vecs).map(|(a, b)| a.transpose() * b).collect(),
        };
        let gen = model.generator(&frame);
        let decay = gen.decay_factors(h);
        for (st, tr0) in states.iter_mut().zip(&traces) {
            if let Some(old) = &prev {
                st.work -= frame_energy(old, &st.rho);
            }
            change_basis(basis, st, &w);
            st.work += frame_energy(&frame, &st.rho);
            step(basis, &frame, &gen, &decay, st, h);
            let drift = (st.rho.re.trace() - tr0).abs();
            if !(drift <= TRACE_TOL) {
                return Err(DynamicsError::Integrator { step: k, drift });
            }
        }
        prev = Some(frame);
    }
    let h1 = model.hamiltonian(sch.end());
    for st in states.iter_mut() {
        if let Some(old) = &prev {
            st.work -= frame_energy(old, &st.rho);
            let back: Vec<DMatrix<f64>> = old.vecs.iter().map(|v| v.transpose()).collect();
            change_basis(basis, st, &back);
        }
        st.e_final = trace_with(&st.rho, &h1);
        st.work += st.e_final;
        st.rho.hermitize();
    }
    Ok(())
}
