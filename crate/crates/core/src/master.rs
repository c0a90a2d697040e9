//! Finite-N master equation in the Dicke basis: Liouvillian assembly, steady
//! state, time evolution and spin moments.
//!
//! Density matrices are vectorized row-major, `vec[m * d + n] = ρ[m, n]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::params::EffectiveParams;
use crate::sparse::{self, Csr, SparseLu};
use crate::spin::{build_spin_operators, lmg_hamiltonian, PureState, SparseOp, SpinOperatorSet};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    n_atoms: u64,
}

impl DensityMatrix {
    /// Checked constructor: Hermitian, unit trace, positive semidefinite.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix)?;
        rho.check()?;
        Ok(rho)
    }

    pub fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() < 2 {
            return domain(format!("density matrix must be square with dimension ≥ 2, got {}×{}", matrix.nrows(), matrix.ncols()));
        }
        let n_atoms = matrix.nrows() as u64 - 1;
        Ok(Self { matrix, n_atoms })
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self { matrix: state.projector(), n_atoms: state.n_atoms() }
    }

    pub fn maximally_mixed(n_atoms: u64) -> Self {
        let d = n_atoms as usize + 1;
        Self { matrix: DMatrix::identity(d, d) / Complex64::new(d as f64, 0.0), n_atoms }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn n_atoms(&self) -> u64 {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let d = m.nrows();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.matrix);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return domain(format!("density matrix not Hermitian (deviation {herm:e})"));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return domain(format!("density matrix trace {tr} differs from 1"));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return domain(format!("density matrix has negative eigenvalue {min:e}"));
        }
        Ok(())
    }

    /// `½ tr|ρ − σ|`
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return domain("trace distance between density matrices of different dimension");
        }
        let diff = hermitian_part(&(&self.matrix - &other.matrix));
        Ok(0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn expectation(&self, op: &SparseOp) -> Complex64 {
        op.entries().iter().map(|&(r, c, v)| v * self.matrix[(c, r)]).sum()
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        let d = self.dim();
        (0..d * d).map(|k| self.matrix[(k / d, k % d)]).collect()
    }

    fn from_vec(v: &[Complex64], n_atoms: u64) -> Self {
        let d = n_atoms as usize + 1;
        Self { matrix: DMatrix::from_fn(d, d, |r, c| v[r * d + c]), n_atoms }
    }

    fn hermitize(&mut self) {
        self.matrix = hermitian_part(&self.matrix);
    }

    fn normalize_trace(&mut self) {
        let tr = self.trace().re;
        self.matrix /= Complex64::new(tr, 0.0);
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Generator of the master equation acting on row-major vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    superop: Csr,
    params: EffectiveParams,
    n_atoms: u64,
    hamiltonian: SparseOp,
    norm_inf: f64,
}

impl Liouvillian {
    pub fn params(&self) -> &EffectiveParams {
        &self.params
    }

    pub fn n_atoms(&self) -> u64 {
        self.n_atoms
    }

    /// Hilbert-space dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.n_atoms as usize + 1
    }

    pub fn hamiltonian(&self) -> &SparseOp {
        &self.hamiltonian
    }

    pub fn nnz(&self) -> usize {
        self.superop.nnz()
    }

    pub fn norm_inf(&self) -> f64 {
        self.norm_inf
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DMatrix<Complex64> {
        let v = self.superop.mul_vec(&rho.to_vec());
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| v[r * d + c])
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.superop.mul_vec(v)
    }

    /// `‖L†(I)‖∞`, zero for a trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim();
        let mut identity = vec![ZERO; d * d];
        for i in 0..d {
            identity[i * d + i] = ONE;
        }
        sparse::norm_inf(&self.superop.adjoint_mul_vec(&identity))
    }

    /// Scaled residual `‖L ρ‖∞ / (‖L‖∞ ‖ρ‖∞)`.
    pub fn scaled_residual(&self, rho: &DensityMatrix) -> f64 {
        let v = rho.to_vec();
        sparse::norm_inf(&self.superop.mul_vec(&v)) / (self.norm_inf * sparse::norm_inf(&v))
    }

    /// Dense superoperator, for small systems and tests.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.superop.n;
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.superop.entries() {
            m[(r, c)] = v;
        }
        m
    }
}

pub fn build_liouvillian(params: &EffectiveParams, n_atoms: u64) -> Result<Liouvillian> {
    params.validate()?;
    let ops = build_spin_operators(n_atoms)?;
    build_liouvillian_with(params, &ops)
}

pub fn build_liouvillian_with(params: &EffectiveParams, ops: &SpinOperatorSet) -> Result<Liouvillian> {
    params.validate()?;
    let n = ops.n_atoms as f64;
    let h_op = lmg_hamiltonian(ops, params.h, params.lambda, 0.0)?;
    let mut entries = Vec::new();
    // -i (H ⊗ I - I ⊗ Hᵀ)
    push_left(&mut entries, &h_op, -I, ops.dim());
    push_right(&mut entries, &h_op, I, ops.dim());
    // D[2Jx] = 4 D[Jx]
    let channels = [(4.0 * params.gamma_a / n, &ops.jx), (params.gamma_b / n, &ops.jplus)];
    for (rate, a) in channels {
        if rate == 0.0 {
            continue;
        }
        push_dissipator(&mut entries, a, rate, ops.dim());
    }
    let superop = Csr::from_entries(ops.dim() * ops.dim(), entries);
    let norm_inf = superop.norm_inf();
    Ok(Liouvillian { superop, params: params.with_n(ops.n_atoms), n_atoms: ops.n_atoms, hamiltonian: h_op, norm_inf })
}

/// `A ρ` contributes `A[m,k]` at ((m,n),(k,n)).
fn push_left(out: &mut Vec<(usize, usize, Complex64)>, a: &SparseOp, s: Complex64, d: usize) {
    for &(m, k, v) in a.entries() {
        for n in 0..d {
            out.push((m * d + n, k * d + n, s * v));
        }
    }
}

/// `ρ B` contributes `B[k,n]` at ((m,n),(m,k)).
fn push_right(out: &mut Vec<(usize, usize, Complex64)>, b: &SparseOp, s: Complex64, d: usize) {
    for &(k, n, v) in b.entries() {
        for m in 0..d {
            out.push((m * d + n, m * d + k, s * v));
        }
    }
}

/// `rate (2AρA† − A†Aρ − ρA†A)`
fn push_dissipator(out: &mut Vec<(usize, usize, Complex64)>, a: &SparseOp, rate: f64, d: usize) {
    let r = Complex64::new(rate, 0.0);
    for &(m, k, amk) in a.entries() {
        for &(n, l, anl) in a.entries() {
            out.push((m * d + n, k * d + l, 2.0 * r * amk * anl.conj()));
        }
    }
    let ada = a.adjoint().matmul(a);
    push_left(out, &ada, -r, d);
    push_right(out, &ada, -r, d);
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions {
    /// Acceptance bound on `‖Lρ‖∞ / (‖L‖∞ ‖ρ‖∞)`.
    pub residual_tol: f64,
    /// Ritz values with `|θ| ≤ null_tol ‖L‖∞` count towards the null space.
    /// Round-off puts an exact zero near `1e-17 ‖L‖∞`, while the Z₂ tunnelling
    /// rate deep in the broken phase falls to `~4e-14 ‖L‖∞` at N = 100.
    pub null_tol: f64,
    pub refinement_steps: usize,
    pub probe_block: usize,
    pub probe_iterations: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-10, null_tol: 1e-15, refinement_steps: 3, probe_block: 4, probe_iterations: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub residual: f64,
    pub null_space_dim: usize,
    /// Smallest nonzero `|θ|` among the probed Ritz values: an estimate of the Liouvillian gap.
    pub gap_estimate: Option<f64>,
    pub min_eigenvalue: f64,
    /// Diagonal element whose equation row was replaced by the trace constraint.
    pub replaced_index: usize,
}

pub fn steady_state(liou: &Liouvillian) -> Result<SteadyState> {
    steady_state_with(liou, &SteadyStateOptions::default())
}

pub fn steady_state_with(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyState> {
    let probe = probe_null_space(liou, opts)?;
    if probe.dim > 1 {
        return Err(Error::NonUniqueSteadyState { dim: probe.dim });
    }
    let d = liou.dim();
    let candidates = [0, d - 1, d / 2];
    let mut last_residual = f64::NAN;
    for (attempt, &i) in candidates.iter().enumerate() {
        match solve_bordered(liou, i * d + i, opts) {
            Ok(mut rho) => {
                rho.hermitize();
                rho.normalize_trace();
                let residual = liou.scaled_residual(&rho);
                if residual <= opts.residual_tol {
                    let min_eigenvalue = rho.min_eigenvalue();
                    if min_eigenvalue < -POSITIVITY_TOL {
                        log::warn!("steady state has negative eigenvalue {min_eigenvalue:e}");
                    }
                    return Ok(SteadyState {
                        rho,
                        residual,
                        null_space_dim: probe.dim,
                        gap_estimate: probe.gap,
                        min_eigenvalue,
                        replaced_index: i,
                    });
                }
                log::debug!("attempt {attempt}: scaled residual {residual:e} above tolerance");
                last_residual = residual;
            }
            Err(e) => log::debug!("attempt {attempt}: {e}"),
        }
    }
    Err(Error::SolverBreakdown(format!("scaled residual {last_residual:e} after {} row choices", candidates.len())))
}

fn solve_bordered(liou: &Liouvillian, row: usize, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let d = liou.dim();
    let n = d * d;
    let trace_row = (0..d).map(|i| (row, i * d + i, ONE));
    let entries: Vec<_> = liou.superop.entries().filter(|&(r, _, _)| r != row).chain(trace_row).collect();
    let a = Csr::from_entries(n, entries.iter().copied());
    let lu = SparseLu::factor(n, entries)?;
    let mut b = vec![ZERO; n];
    b[row] = ONE;
    let mut x = lu.solve(&b);
    for _ in 0..opts.refinement_steps {
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        if sparse::norm_inf(&r) <= f64::EPSILON {
            break;
        }
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SolverBreakdown("non-finite solution".into()));
    }
    Ok(DensityMatrix::from_vec(&x, liou.n_atoms))
}

struct NullProbe {
    dim: usize,
    gap: Option<f64>,
}

/// Block inverse iteration on `L − σ` followed by Rayleigh–Ritz on `L`.
fn probe_null_space(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<NullProbe> {
    let n = liou.superop.n;
    let norm = liou.norm_inf.max(f64::MIN_POSITIVE);
    let sigma = Complex64::new(1e-7 * norm, 0.0);
    let shifted = liou.superop.entries().chain((0..n).map(|i| (i, i, -sigma)));
    let lu = SparseLu::factor(n, shifted)?;

    let p = opts.probe_block.min(n);
    let mut seed = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut q: Vec<Vec<Complex64>> = (0..p).map(|_| (0..n).map(|_| Complex64::new(next(), next())).collect()).collect();
    orthonormalize(&mut q);
    for _ in 0..opts.probe_iterations {
        q = q.iter().map(|v| lu.solve(v)).collect();
        orthonormalize(&mut q);
    }
    let p = q.len();
    let lq: Vec<Vec<Complex64>> = q.iter().map(|v| liou.superop.mul_vec(v)).collect();
    let b = DMatrix::from_fn(p, p, |r, c| sparse::dot(&q[r], &lq[c]));
    let ritz: Vec<f64> = b.eigenvalues().map(|ev| ev.iter().map(|z| z.norm()).collect()).unwrap_or_else(|| {
        b.schur().eigenvalues().map(|ev| ev.iter().map(|z| z.norm()).collect()).unwrap_or_default()
    });
    let threshold = opts.null_tol * norm;
    let dim = ritz.iter().filter(|&&t| t <= threshold).count();
    let gap = ritz.iter().copied().filter(|&t| t > threshold).reduce(f64::min);
    log::debug!("null-space probe: |ritz| = {ritz:?}, threshold {threshold:e}, dim {dim}");
    Ok(NullProbe { dim, gap })
}

/// Modified Gram–Schmidt, twice; drops vectors that become numerically dependent.
fn orthonormalize(q: &mut Vec<Vec<Complex64>>) {
    for _ in 0..2 {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(q.len());
        for mut v in q.drain(..) {
            for b in &basis {
                let c = sparse::dot(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
            let norm = sparse::norm2(&v);
            if norm > 1e-300 {
                let inv = Complex64::new(1.0 / norm, 0.0);
                v.iter_mut().for_each(|z| *z *= inv);
                basis.push(v);
            }
        }
        *q = basis;
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub rho: DensityMatrix,
    /// Largest `|tr ρ − 1|` seen before the final renormalization.
    pub trace_drift: f64,
    pub stats: OdeStats,
}

/// Adaptive Dormand–Prince integration of the master equation up to `t_final`.
pub fn evolve(liou: &Liouvillian, rho0: &DensityMatrix, t_final: f64, tol: f64) -> Result<Evolution> {
    evolve_observed(liou, rho0, t_final, tol, |_, _| {})
}

/// As [`evolve`], calling `observer(t, ρ)` after every accepted step.
pub fn evolve_observed<F>(liou: &Liouvillian, rho0: &DensityMatrix, t_final: f64, tol: f64, mut observer: F) -> Result<Evolution>
where
    F: FnMut(f64, &DensityMatrix),
{
    if rho0.dim() != liou.dim() {
        return domain(format!("initial state dimension {} does not match generator dimension {}", rho0.dim(), liou.dim()));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return domain(format!("t_final must be finite and non-negative, got {t_final}"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if t_final == 0.0 {
        return Ok(Evolution { rho: rho0.clone(), trace_drift: 0.0, stats: OdeStats::default() });
    }
    let d = liou.dim();
    let n = d * d;
    let y0: Vec<f64> = rho0.to_vec().iter().flat_map(|z| [z.re, z.im]).collect();
    let mut x = vec![ZERO; n];
    let mut lx = vec![ZERO; n];
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = Complex64::new(y[2 * k], y[2 * k + 1]);
        }
        liou.superop.mul_vec_into(&x, &mut lx);
        for (k, z) in lx.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };
    let mut trace_drift = 0.0f64;
    let on_step = |t: f64, y: &mut [f64]| {
        // (ρ + ρ†)/2
        for r in 0..d {
            for c in r..d {
                let (a, b) = (r * d + c, c * d + r);
                let re = 0.5 * (y[2 * a] + y[2 * b]);
                let im = 0.5 * (y[2 * a + 1] - y[2 * b + 1]);
                y[2 * a] = re;
                y[2 * a + 1] = im;
                y[2 * b] = re;
                y[2 * b + 1] = -im;
            }
        }
        let tr: f64 = (0..d).map(|i| y[2 * (i * d + i)]).sum();
        trace_drift = trace_drift.max((tr - 1.0).abs());
        let v: Vec<Complex64> = (0..n).map(|k| Complex64::new(y[2 * k], y[2 * k + 1])).collect();
        observer(t, &DensityMatrix::from_vec(&v, liou.n_atoms));
    };
    let (y, stats) = ode::integrate(rhs, 0.0, &y0, t_final, &OdeOptions::with_tol(tol), on_step)?;
    let v: Vec<Complex64> = (0..n).map(|k| Complex64::new(y[2 * k], y[2 * k + 1])).collect();
    let mut rho = DensityMatrix::from_vec(&v, liou.n_atoms);
    if trace_drift > 10.0 * tol {
        log::warn!("trace drift {trace_drift:e} exceeds 10·tol = {:e}", 10.0 * tol);
    }
    if trace_drift > 0.0 {
        log::info!("renormalizing trace after evolution (drift {trace_drift:e})");
        rho.normalize_trace();
    }
    Ok(Evolution { rho, trace_drift, stats })
}

/// Density matrices at each of the increasing `times`, starting from `rho0` at t = 0.
pub fn evolve_sampled(liou: &Liouvillian, rho0: &DensityMatrix, times: &[f64], tol: f64) -> Result<Vec<(f64, Evolution)>> {
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut rho = rho0.clone();
    for &ti in times {
        if ti < t {
            return domain("sample times must be non-decreasing and non-negative");
        }
        let step = evolve(liou, &rho, ti - t, tol)?;
        rho = step.rho.clone();
        t = ti;
        out.push((ti, step));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub n_atoms: u64,
    pub jx_mean: f64,
    pub jy_mean: f64,
    pub jz_mean: f64,
    pub jx2: f64,
    pub jy2: f64,
    pub jz2: f64,
    /// ⟨JxJy + JyJx⟩/2
    pub jxjy_sym: f64,
    pub jxjz_sym: f64,
    pub jyjz_sym: f64,
}

impl MomentSet {
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn casimir(&self) -> f64 {
        self.jx2 + self.jy2 + self.jz2
    }

    pub fn check(&self) -> Result<()> {
        let j = self.j();
        if self.jx2 < 0.0 || self.jy2 < 0.0 || self.jz2 < 0.0 {
            return domain("negative second moment");
        }
        let err = (self.casimir() - j * (j + 1.0)).abs();
        if err > 1e-8 * (j * (j + 1.0)).max(1.0) {
            return domain(format!("Casimir violated by {err:e}"));
        }
        Ok(())
    }
}

pub fn expectations(rho: &DensityMatrix, ops: &SpinOperatorSet) -> Result<MomentSet> {
    if rho.dim() != ops.dim() {
        return domain(format!("density matrix dimension {} does not match operator dimension {}", rho.dim(), ops.dim()));
    }
    let ev = |op: &SparseOp| rho.expectation(op).re;
    let sym = |a: &SparseOp, b: &SparseOp| 0.5 * (ev(&a.matmul(b)) + ev(&b.matmul(a)));
    Ok(MomentSet {
        n_atoms: ops.n_atoms,
        jx_mean: ev(&ops.jx),
        jy_mean: ev(&ops.jy),
        jz_mean: ev(&ops.jz),
        jx2: ev(&ops.jx.matmul(&ops.jx)),
        jy2: ev(&ops.jy.matmul(&ops.jy)),
        jz2: ev(&ops.jz.matmul(&ops.jz)),
        jxjy_sym: sym(&ops.jx, &ops.jy),
        jxjz_sym: sym(&ops.jx, &ops.jz),
        jyjz_sym: sym(&ops.jy, &ops.jz),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::coherent_spin_state;

    fn params(h: f64, ga: f64, gb: f64, n: u64) -> EffectiveParams {
        EffectiveParams::dimensionless(h, ga, gb, n).unwrap()
    }

    #[test]
    fn hamiltonian_only_generator_is_commutator() {
        let n = 4;
        let p = params(0.7, 0.0, 0.0, n);
        let liou = build_liouvillian(&p, n).unwrap();
        let h = liou.hamiltonian().to_dense();
        let d = n as usize + 1;
        let id = DMatrix::<Complex64>::identity(d, d);
        let expect = (h.kronecker(&id) - id.kronecker(&h.transpose())) * (-I);
        assert!((liou.to_dense() - expect).iter().all(|z| z.norm() < 1e-13));
        let mixed = DensityMatrix::maximally_mixed(n);
        assert!(liou.apply(&mixed).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn generator_matches_dense_lindblad_form() {
        let n = 3;
        let p = params(0.4, 0.3, 0.2, n);
        let liou = build_liouvillian(&p, n).unwrap();
        let ops = build_spin_operators(n).unwrap();
        let h = liou.hamiltonian().to_dense();
        let jx2 = ops.jx.to_dense() * Complex64::new(2.0, 0.0);
        let jp = ops.jplus.to_dense();
        let diss = |a: &DMatrix<Complex64>, rho: &DMatrix<Complex64>| {
            let ad = a.adjoint();
            a * rho * &ad * Complex64::new(2.0, 0.0) - &ad * a * rho - rho * &ad * a
        };
        let psi = coherent_spin_state(1.1, 0.4, n);
        let other = coherent_spin_state(2.0, -1.0, n);
        let rho = (psi.projector() * Complex64::new(0.3, 0.0)) + other.projector() * Complex64::new(0.7, 0.0);
        let nf = n as f64;
        let expect = (&h * &rho - &rho * &h) * (-I)
            + diss(&jx2, &rho) * Complex64::new(0.3 / nf, 0.0)
            + diss(&jp, &rho) * Complex64::new(0.2 / nf, 0.0);
        let got = liou.apply(&DensityMatrix::from_matrix_unchecked(rho).unwrap());
        assert!((got - expect).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn trace_preserving() {
        for (h, ga, gb, n) in [(0.5, 0.01, 0.2, 10), (-0.3, 0.2, 0.0, 7), (1.4, 0.0, 0.9, 25)] {
            let liou = build_liouvillian(&params(h, ga, gb, n), n).unwrap();
            assert!(liou.trace_preservation_error() < 1e-10);
        }
    }

    #[test]
    fn collective_raising_pumps_to_top() {
        // for N = 1, Jx² = 1/4 is a multiple of the identity, so λ drops out of the generator
        let liou = build_liouvillian(&EffectiveParams::new(0.0, 1.0, 0.0, 0.5, 1).unwrap(), 1).unwrap();
        let ss = steady_state(&liou).unwrap();
        let m = ss.rho.matrix();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(m[(1, 1)].norm() < 1e-12 && m[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn operator_factors_are_banded() {
        let ops = build_spin_operators(25).unwrap();
        let h = lmg_hamiltonian(&ops, 0.5, 1.0, 0.0).unwrap();
        assert!(ops.jx.matmul(&ops.jx).bandwidth() <= 5);
        assert!(h.bandwidth() <= 5);
        assert!(ops.jplus.adjoint().matmul(&ops.jplus).bandwidth() <= 5);
    }

    #[test]
    fn hamiltonian_only_steady_state_is_degenerate() {
        let liou = build_liouvillian(&params(0.8, 0.0, 0.0, 6), 6).unwrap();
        match steady_state(&liou) {
            Err(Error::NonUniqueSteadyState { dim }) => assert!(dim > 1),
            other => panic!("expected degenerate null space, got {other:?}"),
        }
    }

    #[test]
    fn pole_steady_state_in_normal_phase() {
        let n = 25;
        let liou = build_liouvillian(&params(1.5, 0.01, 0.2, n), n).unwrap();
        let ss = steady_state(&liou).unwrap();
        assert_eq!(ss.null_space_dim, 1);
        assert!(ss.residual <= 1e-10);
        ss.rho.check().unwrap();
        let ops = build_spin_operators(n).unwrap();
        let m = expectations(&ss.rho, &ops).unwrap();
        assert!((m.jz_mean / m.j() - 1.0).abs() < 0.05, "{}", m.jz_mean / m.j());
    }

    #[test]
    fn zero_time_evolution_is_identity() {
        let liou = build_liouvillian(&params(0.5, 0.01, 0.2, 5), 5).unwrap();
        let rho0 = DensityMatrix::from_pure(&coherent_spin_state(0.3, 0.2, 5));
        let ev = evolve(&liou, &rho0, 0.0, 1e-8).unwrap();
        assert_eq!(ev.rho, rho0);
    }

    #[test]
    fn unitary_evolution_conserves_purity() {
        let tol = 1e-9;
        let liou = build_liouvillian(&params(0.6, 0.0, 0.0, 8), 8).unwrap();
        let rho0 = DensityMatrix::from_pure(&coherent_spin_state(1.0, 0.5, 8));
        let mut worst = 0.0f64;
        let ev = evolve_observed(&liou, &rho0, 5.0, tol, |_, rho| worst = worst.max((rho.purity() - 1.0).abs())).unwrap();
        assert!(worst <= 10.0 * tol, "purity drift {worst:e}");
        assert!((ev.rho.purity() - 1.0).abs() <= 10.0 * tol);
    }

    #[test]
    fn moments_of_pole_and_mixed_states() {
        let n = 6;
        let ops = build_spin_operators(n).unwrap();
        let top = DensityMatrix::from_pure(&PureState::basis(n, 0));
        let m = expectations(&top, &ops).unwrap();
        assert!((m.jz_mean - 3.0).abs() < 1e-14);
        assert!((m.jx2 - 1.5).abs() < 1e-14 && (m.jy2 - 1.5).abs() < 1e-14);
        assert!(m.jxjy_sym.abs() < 1e-14);
        m.check().unwrap();

        let ops2 = build_spin_operators(2).unwrap();
        let mixed = expectations(&DensityMatrix::maximally_mixed(2), &ops2).unwrap();
        assert!(mixed.jz_mean.abs() < 1e-15);
        for v in [mixed.jx2, mixed.jy2, mixed.jz2] {
            assert!((v - 2.0 / 3.0).abs() < 1e-14);
        }
        assert!(expectations(&mixed_dim_mismatch(), &ops2).is_err());
    }

    fn mixed_dim_mismatch() -> DensityMatrix {
        DensityMatrix::maximally_mixed(3)
    }

    #[test]
    fn density_matrix_checks() {
        let bad = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::new(1.2, 0.0), Complex64::new(-0.2, 0.0)]));
        assert!(DensityMatrix::new(bad).is_err());
        let a = DensityMatrix::from_pure(&PureState::basis(1, 0));
        let b = DensityMatrix::from_pure(&PureState::basis(1, 1));
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
    }
}
