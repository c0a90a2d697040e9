//! Collective spin operators in the symmetric (Dicke) subspace `j = N/2`.
//!
//! Basis ordering is fixed: index `i` holds `|j, m = j - i⟩`, so index 0 is the
//! fully polarized state `|j, +j⟩` and `Jz` has a descending diagonal.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Result};

/// Largest atom number accepted by [`build_spin_operators`].
pub const DEFAULT_MAX_ATOMS: u64 = 2000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square operator stored as sorted `(row, col, value)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *map.entry((r, c)).or_default() += v;
        }
        let entries = map.into_iter().filter(|(_, v)| *v != ZERO).map(|((r, c), v)| (r, c, v)).collect();
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_entries(dim, (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn transpose(&self) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, s * v)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_entries(self.dim, self.entries.iter().chain(other.entries.iter()).copied())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        let products = self
            .entries
            .iter()
            .flat_map(|&(r, k, a)| rows[k].iter().map(move |&(c, b)| (r, c, a * b)));
        Self::from_entries(self.dim, products.collect::<Vec<_>>())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Number of distinct diagonals `col - row` carrying entries.
    pub fn bandwidth(&self) -> usize {
        let mut offsets: Vec<i64> = self.entries.iter().map(|&(r, c, _)| c as i64 - r as i64).collect();
        offsets.sort_unstable();
        offsets.dedup();
        offsets.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }
}

/// `Jx, Jy, Jz, J±` for `N` spin-1/2 particles in the symmetric subspace.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub n_atoms: u64,
    pub j: f64,
    pub jx: SparseOp,
    pub jy: SparseOp,
    pub jz: SparseOp,
    pub jplus: SparseOp,
    pub jminus: SparseOp,
}

impl SpinOperatorSet {
    pub fn dim(&self) -> usize {
        self.n_atoms as usize + 1
    }

    /// `m` value of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        self.j - i as f64
    }
}

pub fn build_spin_operators(n_atoms: u64) -> Result<SpinOperatorSet> {
    build_spin_operators_capped(n_atoms, DEFAULT_MAX_ATOMS)
}

pub fn build_spin_operators_capped(n_atoms: u64, max_atoms: u64) -> Result<SpinOperatorSet> {
    if n_atoms == 0 {
        return domain("n_atoms must be at least 1");
    }
    if n_atoms > max_atoms {
        return domain(format!("n_atoms = {n_atoms} exceeds the cap {max_atoms}"));
    }
    let dim = n_atoms as usize + 1;
    let j = n_atoms as f64 / 2.0;
    let jz = SparseOp::from_entries(dim, (0..dim).map(|i| (i, i, Complex64::new(j - i as f64, 0.0))));
    // J+|j,m⟩ = sqrt(j(j+1) - m(m+1)) |j,m+1⟩, and m+1 sits at index i-1
    let jplus = SparseOp::from_entries(
        dim,
        (1..dim).map(|i| {
            let m = j - i as f64;
            (i - 1, i, Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0))
        }),
    );
    let jminus = jplus.adjoint();
    let jx = jplus.add(&jminus).scale(Complex64::new(0.5, 0.0));
    let jy = jplus.sub(&jminus).scale(Complex64::new(0.0, -0.5));
    Ok(SpinOperatorSet { n_atoms, j, jx, jy, jz, jplus, jminus })
}

/// `-2h Jz - (2λ/N)(Jx² + γ Jy²)`, anisotropy `γ ∈ [-1, 1]`.
pub fn build_lmg_hamiltonian(h: f64, lambda: f64, gamma_aniso: f64, n_atoms: u64) -> Result<SparseOp> {
    let ops = build_spin_operators(n_atoms)?;
    lmg_hamiltonian(&ops, h, lambda, gamma_aniso)
}

pub fn lmg_hamiltonian(ops: &SpinOperatorSet, h: f64, lambda: f64, gamma_aniso: f64) -> Result<SparseOp> {
    if !(-1.0..=1.0).contains(&gamma_aniso) {
        return domain(format!("anisotropy must lie in [-1, 1], got {gamma_aniso}"));
    }
    let n = ops.n_atoms as f64;
    let mut h_op = ops.jz.scale((-2.0 * h).into());
    let mut interaction = ops.jx.matmul(&ops.jx);
    if gamma_aniso != 0.0 {
        interaction = interaction.add(&ops.jy.matmul(&ops.jy).scale(gamma_aniso.into()));
    }
    h_op = h_op.add(&interaction.scale((-2.0 * lambda / n).into()));
    Ok(h_op)
}

/// Normalized state vector in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return domain("state vector must have finite nonzero norm");
        }
        Ok(Self { amplitudes: amplitudes / Complex64::new(norm, 0.0) })
    }

    /// Dicke state `|j, m⟩` for `m = j - index`.
    pub fn basis(n_atoms: u64, index: usize) -> Self {
        let mut v = DVector::zeros(n_atoms as usize + 1);
        v[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn n_atoms(&self) -> u64 {
        self.amplitudes.len() as u64 - 1
    }

    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn expectation(&self, op: &SparseOp) -> Complex64 {
        let a = &self.amplitudes;
        op.entries().iter().map(|&(r, c, v)| a[r].conj() * v * a[c]).sum()
    }
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    let ln_fact = |m: u64| (1..=m).map(|x| (x as f64).ln()).sum::<f64>();
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// Spin coherent state: `|j, +j⟩` rotated by `theta` about `(-sin φ, cos φ, 0)`,
/// so that `⟨J⟩/j = (sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn coherent_spin_state(theta: f64, phi: f64, n_atoms: u64) -> PureState {
    let n = n_atoms;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let amplitudes = DVector::from_iterator(
        n as usize + 1,
        (0..=n).map(|i| {
            // index i holds m = j - i, i.e. k = N - i spins up
            let k = n - i;
            let down = i;
            if (c == 0.0 && k > 0) || (s == 0.0 && down > 0) {
                return ZERO;
            }
            let mut ln_mag = 0.5 * ln_binomial(n, k);
            if k > 0 {
                ln_mag += k as f64 * c.abs().ln();
            }
            if down > 0 {
                ln_mag += down as f64 * s.abs().ln();
            }
            let sign = c.signum().powi(k as i32) * s.signum().powi(down as i32);
            sign * ln_mag.exp() * (I * (down as f64 * phi)).exp()
        }),
    );
    PureState::new(amplitudes).expect("coherent state has unit norm up to rounding")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let ops = build_spin_operators(1).unwrap();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let sx = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]);
        let sz = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(max_abs_diff(&ops.jx.to_dense(), &sx) < 1e-15);
        assert!(max_abs_diff(&ops.jy.to_dense(), &sy) < 1e-15);
        assert!(max_abs_diff(&ops.jz.to_dense(), &sz) < 1e-15);
    }

    #[test]
    fn spin_one_raising_entries() {
        let ops = build_spin_operators(2).unwrap();
        let entries = ops.jplus.entries();
        assert_eq!(entries.len(), 2);
        for &(r, c, v) in entries {
            assert_eq!(c, r + 1);
            assert!((v.re - 2f64.sqrt()).abs() < 1e-15 && v.im == 0.0);
        }
    }

    #[test]
    fn operator_identities() {
        for n in [1u64, 2, 3, 10, 50, 100] {
            let ops = build_spin_operators(n).unwrap();
            let j = ops.j;
            // [Jx, Jy] = i Jz
            let comm = ops.jx.commutator(&ops.jy).sub(&ops.jz.scale(I));
            assert!(comm.max_abs() < 1e-12, "N={n}: {}", comm.max_abs());
            assert_eq!(ops.jplus, ops.jminus.adjoint());
            let casimir = ops.jx.matmul(&ops.jx).add(&ops.jy.matmul(&ops.jy)).add(&ops.jz.matmul(&ops.jz));
            let target = SparseOp::identity(ops.dim()).scale((j * (j + 1.0)).into());
            let diff = casimir.sub(&target);
            assert!(diff.max_abs() < 1e-10 * j.max(1.0).powi(2), "N={n}: {}", diff.max_abs());
            // Jz real diagonal with entries m
            for &(r, c, v) in ops.jz.entries() {
                assert_eq!(r, c);
                assert_eq!(v, Complex64::new(ops.m(r), 0.0));
            }
        }
    }

    #[test]
    fn casimir_n100() {
        let ops = build_spin_operators(100).unwrap();
        let casimir = ops.jx.matmul(&ops.jx).add(&ops.jy.matmul(&ops.jy)).add(&ops.jz.matmul(&ops.jz));
        for i in 0..ops.dim() {
            let state = PureState::basis(100, i);
            assert!((state.expectation(&casimir).re - 2550.0).abs() < 1e-9);
        }
    }

    #[test]
    fn atom_number_bounds() {
        assert!(build_spin_operators(0).is_err());
        assert!(build_spin_operators(2001).is_err());
        assert!(build_spin_operators_capped(2001, 3000).is_ok());
    }

    #[test]
    fn hamiltonian_without_interaction_is_zeeman_ladder() {
        let h = build_lmg_hamiltonian(0.7, 0.0, 0.0, 6).unwrap();
        let ev = h.to_dense().symmetric_eigenvalues();
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let mut expect: Vec<f64> = (0..=6).map(|i| -2.0 * 0.7 * (3.0 - i as f64)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_one_interaction_spectrum() {
        // Jx² on j=1 has eigenvalues {0, 1, 1}; 2λ/N = λ
        let lambda = 1.3;
        let h = build_lmg_hamiltonian(0.0, lambda, 0.0, 2).unwrap();
        let mut ev: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + lambda).abs() < 1e-12);
        assert!((ev[1] + lambda).abs() < 1e-12);
        assert!(ev[2].abs() < 1e-12);
    }

    #[test]
    fn isotropic_hamiltonian_commutes_with_jz() {
        let ops = build_spin_operators(12).unwrap();
        let h = lmg_hamiltonian(&ops, 0.4, 1.1, 1.0).unwrap();
        assert!(h.commutator(&ops.jz).max_abs() < 1e-10);
        let herm = h.sub(&h.adjoint());
        assert!(herm.max_abs() < 1e-12);
        assert!(lmg_hamiltonian(&ops, 0.4, 1.1, 1.5).is_err());
    }

    #[test]
    fn coherent_state_poles() {
        let ops = build_spin_operators(8).unwrap();
        let north = coherent_spin_state(0.0, 0.3, 8);
        assert!((north.amplitudes[0].norm() - 1.0).abs() < 1e-14);
        assert!((north.expectation(&ops.jz).re - 4.0).abs() < 1e-12);
        let south = coherent_spin_state(std::f64::consts::PI, 0.0, 8);
        assert!((south.expectation(&ops.jz).re + 4.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_equator_variance() {
        let n = 20;
        let ops = build_spin_operators(n).unwrap();
        let css = coherent_spin_state(std::f64::consts::FRAC_PI_2, 0.0, n);
        let j = ops.j;
        assert!((css.expectation(&ops.jx).re / j - 1.0).abs() < 1e-10);
        let jy = css.expectation(&ops.jy).re;
        let jy2 = css.expectation(&ops.jy.matmul(&ops.jy)).re;
        assert!((jy2 - jy * jy - n as f64 / 4.0).abs() < 1e-10);
    }

    proptest::proptest! {
        #[test]
        fn coherent_state_points_along_bloch_vector(theta in 0.0f64..std::f64::consts::PI, phi in -3.2f64..3.2, n in 1u64..60) {
            let ops = build_spin_operators(n).unwrap();
            let css = coherent_spin_state(theta, phi, n);
            let j = ops.j;
            let v = [css.expectation(&ops.jx).re / j, css.expectation(&ops.jy).re / j, css.expectation(&ops.jz).re / j];
            let expect = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            for k in 0..3 {
                proptest::prop_assert!((v[k] - expect[k]).abs() < 1e-10);
            }
            let len2: f64 = v.iter().map(|x| x * x).sum();
            proptest::prop_assert!((len2 - 1.0).abs() < 1e-12);
            proptest::prop_assert!((css.amplitudes.norm() - 1.0).abs() < 1e-12);
        }
    }
}
