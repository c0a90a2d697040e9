//! Planar spin-squeezing entanglement measure and a two-spin concurrence oracle.
//!
//! `C_φ = 1 − (4/N)⟨ΔJ_φ²⟩ − (4/N²)⟨J_φ⟩²` with `J_φ = sin φ Jx + cos φ Jy`;
//! `C_R = max_φ C_φ`, clamped at zero.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::master::{DensityMatrix, MomentSet};

pub const MAX_ORACLE_ATOMS: u64 = 6;

/// The quadratic form `C_φ = 1 − uᵀ Q u`, `u = (sin φ, cos φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarMoments {
    pub n_atoms: u64,
    pub q_xx: f64,
    pub q_yy: f64,
    pub q_xy: f64,
}

impl PlanarMoments {
    pub fn new(n_atoms: u64, q_xx: f64, q_yy: f64, q_xy: f64) -> Self {
        Self { n_atoms, q_xx, q_yy, q_xy }
    }

    pub fn c_phi(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        1.0 - (self.q_xx * s * s + 2.0 * self.q_xy * s * c + self.q_yy * c * c)
    }

    pub fn c_r(&self) -> EntanglementResult {
        let (a, b, c) = (self.q_xx, self.q_xy, self.q_yy);
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let lmin = mid - rad;
        // eigenvector of the smaller eigenvalue, from whichever row is better conditioned
        let (u0, u1) = if rad == 0.0 {
            (0.0, 1.0)
        } else if (lmin - a).abs() >= (lmin - c).abs() {
            (b, lmin - a)
        } else {
            (lmin - c, b)
        };
        let mut phi = u0.atan2(u1).rem_euclid(PI);
        if phi >= PI {
            phi = 0.0;
        }
        let raw = 1.0 - lmin;
        EntanglementResult { c_r: raw.max(0.0), c_r_raw: raw, phi_star: phi, n_atoms: self.n_atoms }
    }
}

impl From<&MomentSet> for PlanarMoments {
    fn from(m: &MomentSet) -> Self {
        let n = m.n_atoms as f64;
        let cov_xx = m.jx2 - m.jx_mean * m.jx_mean;
        let cov_yy = m.jy2 - m.jy_mean * m.jy_mean;
        let cov_xy = m.jxjy_sym - m.jx_mean * m.jy_mean;
        let s1 = 4.0 / n;
        let s2 = 4.0 / (n * n);
        Self {
            n_atoms: m.n_atoms,
            q_xx: s1 * cov_xx + s2 * m.jx_mean * m.jx_mean,
            q_yy: s1 * cov_yy + s2 * m.jy_mean * m.jy_mean,
            q_xy: s1 * cov_xy + s2 * m.jx_mean * m.jy_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementResult {
    pub c_r: f64,
    pub c_r_raw: f64,
    /// Optimal quadrature angle in `[0, π)`.
    pub phi_star: f64,
    pub n_atoms: u64,
}

pub fn c_phi(moments: &MomentSet, phi: f64) -> f64 {
    PlanarMoments::from(moments).c_phi(phi)
}

pub fn c_r(moments: &MomentSet) -> EntanglementResult {
    PlanarMoments::from(moments).c_r()
}

fn binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return 0.0;
    }
    let k = k as u64;
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Reduced state of two spins out of a permutation-symmetric `N`-spin state,
/// in the basis `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.
pub fn two_spin_reduced(rho: &DensityMatrix) -> Result<Matrix4<Complex64>> {
    let n = rho.n_atoms();
    if n < 2 {
        return domain("two-spin reduction needs at least two atoms");
    }
    if rho.hermiticity_error() > 1e-8 {
        return domain("density matrix is not Hermitian");
    }
    let m = rho.matrix();
    let d = n as usize + 1;
    // number of up spins in each two-spin basis state
    let ups = [2i64, 1, 1, 0];
    let mut out = Matrix4::<Complex64>::zeros();
    for (a, &ua) in ups.iter().enumerate() {
        for (b, &ub) in ups.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                let k = (n as usize - i) as i64;
                let rest = k - ua;
                let kp = rest + ub;
                if rest < 0 || rest > n as i64 - 2 || kp < 0 || kp > n as i64 {
                    continue;
                }
                let ip = n as usize - kp as usize;
                let w = binomial(n - 2, rest) / (binomial(n, k) * binomial(n, kp)).sqrt();
                acc += m[(i, ip)] * w;
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn two_qubit_concurrence(rho: &Matrix4<Complex64>) -> f64 {
    let sy = [[0.0, -1.0], [1.0, 0.0]];
    // σy⊗σy with σy = i·sy: (i)² sy⊗sy = −sy⊗sy
    let yy = Matrix4::<Complex64>::from_fn(|r, c| Complex64::new(-sy[r / 2][c / 2] * sy[r % 2][c % 2], 0.0));
    let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tilde = yy * rho.conjugate() * yy;
    let eig = nalgebra::SymmetricEigen::new(rho);
    let sqrt_vals = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    let sqrt_rho = &eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let r = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let mut l: Vec<f64> = r.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Two-spin concurrence of a symmetric `N ≤ 6` state.
pub fn concurrence_oracle(rho: &DensityMatrix, n_atoms: u64) -> Result<f64> {
    if n_atoms > MAX_ORACLE_ATOMS {
        return Err(Error::Unsupported(format!("concurrence oracle limited to N ≤ {MAX_ORACLE_ATOMS}, got {n_atoms}")));
    }
    if rho.n_atoms() != n_atoms {
        return domain(format!("density matrix describes {} atoms, not {n_atoms}", rho.n_atoms()));
    }
    Ok(two_qubit_concurrence(&two_spin_reduced(rho)?))
}

/// Dense φ scan followed by golden-section polishing of the best grid point;
/// an independent check on the closed form. Returns `(max C_φ, φ)`.
pub fn c_r_by_scan(moments: &PlanarMoments, points: usize) -> (f64, f64) {
    let step = PI / points as f64;
    let (_, best) = (0..points)
        .map(|i| {
            let phi = step * i as f64;
            (moments.c_phi(phi), phi)
        })
        .fold((f64::NEG_INFINITY, 0.0), |best, p| if p.0 > best.0 { p } else { best });
    let (mut a, mut b) = (best - step, best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if moments.c_phi(c) > moments.c_phi(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let phi = 0.5 * (a + b);
    (moments.c_phi(phi), phi.rem_euclid(PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::expectations;
    use crate::spin::{build_spin_operators, coherent_spin_state, PureState};
    use nalgebra::DVector;

    fn bell_n2() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        let psi = PureState::new(DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(0.0, 0.0), Complex64::new(s, 0.0)])).unwrap();
        DensityMatrix::from_pure(&psi)
    }

    #[test]
    fn pole_state_has_zero_measure() {
        let ops = build_spin_operators(10).unwrap();
        let m = expectations(&DensityMatrix::from_pure(&PureState::basis(10, 0)), &ops).unwrap();
        for phi in [0.0, 0.4, 1.3, 2.9] {
            assert!(c_phi(&m, phi).abs() < 1e-14);
        }
        assert!(c_r(&m).c_r.abs() < 1e-14);
    }

    #[test]
    fn bell_state_is_maximal() {
        let ops = build_spin_operators(2).unwrap();
        let rho = bell_n2();
        let m = expectations(&rho, &ops).unwrap();
        assert!((c_phi(&m, 0.0) - 1.0).abs() < 1e-14);
        let r = c_r(&m);
        assert!((r.c_r - 1.0).abs() < 1e-14);
        assert!((concurrence_oracle(&rho, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_concurrence_zero() {
        let rho = DensityMatrix::from_pure(&PureState::basis(2, 0));
        assert!(concurrence_oracle(&rho, 2).unwrap().abs() < 1e-12);
        assert!(matches!(concurrence_oracle(&DensityMatrix::maximally_mixed(7), 7), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reduced_state_is_a_state() {
        let rho = DensityMatrix::from_pure(&coherent_spin_state(1.0, 0.3, 5));
        let r = two_spin_reduced(&rho).unwrap();
        assert!((r.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // product of two single-spin coherent states: zero concurrence
        assert!(two_qubit_concurrence(&r) < 1e-7);
    }

    #[test]
    fn w_state_concurrence() {
        // |W3⟩ has pairwise concurrence 2/3
        let psi = PureState::basis(3, 2);
        let c = concurrence_oracle(&DensityMatrix::from_pure(&psi), 3).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-12, "{c}");
    }

    #[test]
    fn closed_form_matches_scan() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let (a, c) = (2.0 * next(), 2.0 * next());
            let b = (next() - 0.5) * (a * c).sqrt();
            let pm = PlanarMoments::new(10, a, c, b);
            let exact = pm.c_r();
            let (scan, _) = c_r_by_scan(&pm, 10_000);
            assert!((exact.c_r_raw - scan).abs() < 1e-10);
            assert!((pm.c_phi(exact.phi_star) - exact.c_r_raw).abs() < 1e-12);
        }
    }
}
