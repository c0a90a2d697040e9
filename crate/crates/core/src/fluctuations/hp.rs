//! Holstein–Primakoff expansion of the master equation about a mean-field state.
//!
//! In a frame whose z' axis is the mean Bloch vector `n`, the scaled spin
//! `s = J/N` is `s' = ẑ/2 + ε q + ε² (0, 0, −c†c)` with `ε = N^{-1/2}` and
//! `q = ((c + c†)/2, (c − c†)/(2i), 0)`. Back in the lab frame
//! `s_a = n_a/2 + ε L_a + ε² Q_a` with `L_a = u_a c + u_a* c†`.
//!
//! The generator is `N { −i[h_s, ·] + 4Γa D[s_x] + Γb D[s₊] }` with
//! `h_s = −2h s_z − 2λ s_x²`. Writing each jump operator as
//! `A = a₀ + εA₁ + ε²A₂` and using `D[a₀ + B] = D[B] + [a₀*B − a₀B†, ·]`, the
//! `O(√N)` part must vanish at a fixed point and the `O(1)` part is the
//! quadratic bosonic master equation
//!
//! ```text
//! dρ/dt = −i[ω c†c + ξ cc + ξ* c†c†, ρ] + Σ r D[u c + v c†] ρ
//! ```
//!
//! from which `Γ₋ = Σ r|u|²`, `Γ₊ = Σ r|v|²`, `Υ = Σ r u v*`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::entanglement::PlanarMoments;
use crate::error::{Error, Result};
use crate::params::EffectiveParams;
use crate::semiclassical::{self, tangent_basis, SteadyStateBranch};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative bound on the net linear term of the expansion.
pub const LINEAR_TERM_TOL: f64 = 1e-10;
/// Relative bound on drift real parts treated as marginal rather than unstable.
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Channel {
    pub rate: f64,
    /// Mean value `a₀` of the scaled jump operator.
    pub a0: Complex64,
    /// Coefficient of `c` in the linear part.
    pub u: Complex64,
    /// Coefficient of `c†` in the linear part.
    pub v: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizedModel {
    pub branch: SteadyStateBranch,
    pub params: EffectiveParams,
    /// Orthogonal, takes the mean Bloch vector to +z.
    pub rotation: Matrix3<f64>,
    /// `H_HP = ω c†c + ξ cc + ξ* c†c†`
    pub omega: f64,
    pub xi: Complex64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub upsilon: Complex64,
    /// `d/dt (⟨c⟩, ⟨c†⟩) = drift · (⟨c⟩, ⟨c†⟩)`
    pub drift: Matrix2<Complex64>,
    /// `d/dt ⟨x_i x_j⟩ = (drift S + S driftᵀ + noise)_ij` for `x = (c, c†)`.
    pub noise: Matrix2<Complex64>,
    pub channels: Vec<Channel>,
    /// Magnitude of the residual linear term, relative to the largest rate.
    pub linear_residual: f64,
}

impl LinearizedModel {
    /// Ordered by decreasing real part.
    pub fn drift_eigenvalues(&self) -> [Complex64; 2] {
        let m = &self.drift;
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (tr * tr / 4.0 - det).sqrt();
        let mut ev = [tr / 2.0 + disc, tr / 2.0 - disc];
        semiclassical::sort_eigenvalues(&mut ev);
        ev
    }

    pub fn max_re(&self) -> f64 {
        self.drift_eigenvalues()[0].re
    }

    pub fn g(&self) -> f64 {
        self.gamma_minus - self.gamma_plus
    }

    fn rate_scale(&self) -> f64 {
        rate_scale(&self.params)
    }
}

fn rate_scale(p: &EffectiveParams) -> f64 {
    p.h.abs().max(p.lambda).max(p.gamma_a).max(p.gamma_b)
}

/// Expands about `branch.state` without checking stability.
pub fn expand(params: &EffectiveParams, branch: &SteadyStateBranch) -> Result<LinearizedModel> {
    let n = branch.state.vector().normalize();
    let (e1, e2) = tangent_basis(&n);
    // columns (e1, e2, n): primed → lab
    let m = Matrix3::from_columns(&[e1, e2, n]);
    let u_lab: [Complex64; 3] = std::array::from_fn(|a| Complex64::new(m[(a, 0)] / 2.0, -m[(a, 1)] / 2.0));
    let (h, lambda) = (params.h, params.lambda);

    let channels = vec![
        Channel { rate: 4.0 * params.gamma_a, a0: Complex64::new(n[0] / 2.0, 0.0), u: u_lab[0], v: u_lab[0].conj() },
        Channel {
            rate: params.gamma_b,
            a0: Complex64::new(n[0] / 2.0, n[1] / 2.0),
            u: u_lab[0] + I * u_lab[1],
            v: u_lab[0].conj() + I * u_lab[1].conj(),
        },
    ];

    // coefficient of c in the O(√N) operator; the c† coefficient is its conjugate
    let mut kappa = -2.0 * h * u_lab[2] - 2.0 * lambda * n[0] * u_lab[0];
    for ch in &channels {
        kappa += ch.rate * I * (ch.a0.conj() * ch.u - ch.a0 * ch.v.conj());
    }
    let linear_residual = kappa.norm() / rate_scale(params);
    if linear_residual > LINEAR_TERM_TOL {
        return Err(Error::InconsistentExpansion(linear_residual));
    }

    // A₂ ∝ c†c with a real-proportional prefactor in both channels, so the
    // offset term i(a₀*A₂ − a₀A₂†) vanishes and H_HP comes from h_s alone.
    let ux = u_lab[0];
    let omega = 2.0 * h * n[2] - 4.0 * lambda * ux.norm_sqr() + 2.0 * lambda * n[0] * n[0];
    let xi = -2.0 * lambda * ux * ux;

    let gamma_minus: f64 = channels.iter().map(|c| c.rate * c.u.norm_sqr()).sum();
    let gamma_plus: f64 = channels.iter().map(|c| c.rate * c.v.norm_sqr()).sum();
    let upsilon: Complex64 = channels.iter().map(|c| c.rate * c.u * c.v.conj()).sum();
    let g = gamma_minus - gamma_plus;
    let drift = Matrix2::new(
        -I * omega - g,
        -2.0 * I * xi.conj(),
        2.0 * I * xi,
        I * omega - g,
    );
    let noise = Matrix2::new(-2.0 * upsilon.conj(), Complex64::new(2.0 * gamma_minus, 0.0), Complex64::new(2.0 * gamma_plus, 0.0), -2.0 * upsilon);

    Ok(LinearizedModel {
        branch: *branch,
        params: params.clone(),
        rotation: m.transpose(),
        omega,
        xi,
        gamma_plus,
        gamma_minus,
        upsilon,
        drift,
        noise,
        channels,
        linear_residual,
    })
}

/// Expansion about a stable or marginal branch.
pub fn linearize(params: &EffectiveParams, branch: &SteadyStateBranch) -> Result<LinearizedModel> {
    let model = expand(params, branch)?;
    let max_re = model.max_re();
    if max_re > MARGINAL_TOL * model.rate_scale() {
        return Err(Error::UnstableExpansion { max_re });
    }
    Ok(model)
}

/// Stationary Gaussian moments of the fluctuation mode and their lab-frame image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceSet {
    /// ⟨c†c⟩
    pub n_c: f64,
    /// ⟨cc⟩
    pub m_c: Complex64,
    /// Mean Bloch vector `n`.
    pub mean: Vector3<f64>,
    /// Symmetrized quadrature moments ⟨q_k q_l⟩, `k, l ∈ {x', y'}`.
    pub quadratures: Matrix2<f64>,
    /// `(4/N) Cov(J_a, J_b)` at leading order.
    pub lab_covariance: Matrix3<f64>,
    /// `F` in `(4/N²)⟨J_a J_b⟩_sym = n_a n_b + F_ab / N`.
    pub lab_second_order: Matrix3<f64>,
}

impl CovarianceSet {
    /// `(4/N²)⟨J_a J_b⟩_sym` through order `1/N`.
    pub fn scaled_second_moments(&self, n_atoms: u64) -> Matrix3<f64> {
        self.mean * self.mean.transpose() + self.lab_second_order / n_atoms as f64
    }

    /// Planar form of the entanglement measure at leading order.
    pub fn planar_moments(&self, n_atoms: u64) -> PlanarMoments {
        let g = &self.lab_covariance;
        let n = &self.mean;
        PlanarMoments::new(n_atoms, g[(0, 0)] + n[0] * n[0], g[(1, 1)] + n[1] * n[1], g[(0, 1)] + n[0] * n[1])
    }

    /// `⟨c†c⟩` of a bosonic Gaussian state bounds `|⟨cc⟩|²` by `n(n+1)`.
    pub fn is_physical(&self) -> bool {
        self.n_c >= 0.0 && self.m_c.norm_sqr() <= self.n_c * (self.n_c + 1.0) * (1.0 + 1e-12) + 1e-15
    }
}

pub fn steady_covariance(model: &LinearizedModel) -> Result<CovarianceSet> {
    let max_re = model.max_re();
    if max_re >= -MARGINAL_TOL * model.rate_scale() {
        return Err(Error::Diverged { max_re });
    }
    let g = model.g();
    let (w, xr, xi) = (model.omega, model.xi.re, model.xi.im);
    let (ur, ui) = (model.upsilon.re, model.upsilon.im);
    // unknowns (n, Re m, Im m)
    //   dn/dt = 2iξm − 2iξ*m* − 2gn + 2Γ₊
    //   dm/dt = −2iωm − iξ*(4n + 2) − 2gm − 2Υ*
    let a = Matrix3::new(
        -2.0 * g, -4.0 * xi, -4.0 * xr,
        -4.0 * xi, -2.0 * g, 2.0 * w,
        -4.0 * xr, -2.0 * w, -2.0 * g,
    );
    let b = Vector3::new(-2.0 * model.gamma_plus, 2.0 * xi + 2.0 * ur, 2.0 * xr - 2.0 * ui);
    let sol = a.lu().solve(&b).ok_or(Error::Diverged { max_re })?;
    let (n_c, m_c) = (sol[0], Complex64::new(sol[1], sol[2]));

    let quadratures = Matrix2::new(
        (2.0 * n_c + 1.0 + 2.0 * m_c.re) / 4.0,
        m_c.im / 2.0,
        m_c.im / 2.0,
        (2.0 * n_c + 1.0 - 2.0 * m_c.re) / 4.0,
    );
    let m = model.rotation.transpose();
    let mean = m.column(2).into_owned();
    let planar = m.fixed_columns::<2>(0).into_owned();
    let lab_covariance = 4.0 * planar * quadratures * planar.transpose();
    let lab_second_order = lab_covariance - 4.0 * n_c * mean * mean.transpose();
    Ok(CovarianceSet { n_c, m_c, mean, quadratures, lab_covariance, lab_second_order })
}

/// Expansion about the stable branch at each `h` (pole outside the critical window, `broken_plus` inside).
pub fn linearize_physical(params: &EffectiveParams) -> Result<LinearizedModel> {
    let branch = semiclassical::physical_branch(params.h, params.lambda, params.gamma_b)?;
    linearize(params, &branch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::critical_fields;
    use crate::semiclassical::{fixed_points, BranchId};
    use nalgebra::DMatrix;

    fn params(h: f64, gamma_a: f64, gamma_b: f64) -> EffectiveParams {
        EffectiveParams::dimensionless(h, gamma_a, gamma_b, 100).unwrap()
    }

    #[test]
    fn pole_coefficients() {
        let p = params(1.5, 0.01, 0.2);
        let m = linearize_physical(&p).unwrap();
        assert_eq!(m.branch.branch_id, BranchId::Pole);
        assert!((m.omega - (2.0 * 1.5 - 1.0)).abs() < 1e-14);
        assert!((m.xi.norm() - 0.5).abs() < 1e-14);
        assert!((m.gamma_minus - 0.21).abs() < 1e-14);
        assert!((m.gamma_plus - 0.01).abs() < 1e-14);
        assert!((m.upsilon.norm() - 0.01).abs() < 1e-14);
        assert!(m.linear_residual < 1e-15);
    }

    #[test]
    fn drift_matches_tangent_jacobian() {
        let mut seed = 0x5eed_u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut broken = 0;
        for _ in 0..50 {
            let h = -1.0 + 3.0 * next();
            let gamma_b = 0.9 * next();
            let gamma_a = 0.05 * next();
            let p = params(h, gamma_a, gamma_b);
            for b in fixed_points(h, 1.0, gamma_b).unwrap() {
                broken += usize::from(b.branch_id == BranchId::BrokenPlus);
                let m = expand(&p, &b).unwrap();
                let d = m.drift_eigenvalues();
                for k in 0..2 {
                    assert!((d[k] - b.jacobian_eigenvalues[k]).norm() < 1e-8, "h={h} Γb={gamma_b} {:?} {:?}", d, b.jacobian_eigenvalues);
                }
            }
        }
        assert!(broken > 5);
    }

    #[test]
    fn off_fixed_point_is_inconsistent() {
        let p = params(0.5, 0.01, 0.2);
        let b = semiclassical::physical_branch(0.5, 1.0, 0.2).unwrap();
        let mut moved = b;
        moved.state = crate::semiclassical::BlochState::from_angles(0.9, 0.2);
        assert!(matches!(expand(&p, &moved), Err(Error::InconsistentExpansion(_))));
    }

    #[test]
    fn unstable_branch_rejected() {
        let p = params(0.5, 0.01, 0.2);
        let pole = fixed_points(0.5, 1.0, 0.2).unwrap().into_iter().find(|b| b.branch_id == BranchId::Pole).unwrap();
        assert!(matches!(linearize(&p, &pole), Err(Error::UnstableExpansion { .. })));
    }

    #[test]
    fn slowing_down_at_critical_fields() {
        let cf = critical_fields(1.0, 0.2).unwrap();
        for h in [cf.h_minus, cf.h_plus] {
            let m = expand(&params(h, 0.01, 0.2), &semiclassical::physical_branch(h, 1.0, 0.2).unwrap()).unwrap();
            assert!(m.drift_eigenvalues().iter().map(|e| e.re.abs()).fold(f64::INFINITY, f64::min) < 1e-6);
            assert!(matches!(steady_covariance(&m), Err(Error::Diverged { .. })));
        }
        for h in [0.5, 1.2] {
            assert!(linearize_physical(&params(h, 0.01, 0.2)).unwrap().max_re() < -1e-3);
        }
    }

    #[test]
    fn occupation_grows_towards_upper_critical_field() {
        let cf = critical_fields(1.0, 0.2).unwrap();
        let occ: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|d| steady_covariance(&linearize_physical(&params(cf.h_plus - d, 0.01, 0.2)).unwrap()).unwrap().n_c)
            .collect();
        assert!(occ.windows(2).all(|w| w[1] > w[0]), "{occ:?}");
        assert!(occ[3] > 10.0 * occ[0]);
    }

    #[test]
    fn covariances_are_physical() {
        for k in 0..60 {
            let h = -0.6 + 2.0 * k as f64 / 59.0;
            let p = params(h, 0.01, 0.2);
            if let Ok(m) = linearize_physical(&p) {
                if let Ok(c) = steady_covariance(&m) {
                    assert!(c.is_physical(), "h={h} {c:?}");
                    let g = c.lab_covariance;
                    // the mean direction carries no fluctuation at this order
                    assert!((g * c.mean).norm() < 1e-10);
                }
            }
        }
    }

    /// Stationary state of the quadratic master equation in a truncated Fock space.
    fn fock_moments(m: &LinearizedModel, dim: usize) -> (f64, Complex64) {
        let c = DMatrix::<Complex64>::from_fn(dim, dim, |r, k| {
            if k == r + 1 {
                Complex64::new((k as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let cd = c.adjoint();
        let ham = &cd * &c * Complex64::new(m.omega, 0.0) + &c * &c * m.xi + &cd * &cd * m.xi.conj();
        let eye = DMatrix::<Complex64>::identity(dim, dim);
        // row-major vec: vec(AρB) = (A ⊗ Bᵀ) vec(ρ)
        let kron = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a.kronecker(&b.transpose());
        let mut l = (kron(&ham, &eye) - kron(&eye, &ham)) * Complex64::new(0.0, -1.0);
        for ch in &m.channels {
            let jump = &c * ch.u + &cd * ch.v;
            let jd = jump.adjoint();
            let jdj = &jd * &jump;
            l += (kron(&jump, &jd) * Complex64::new(2.0, 0.0) - kron(&jdj, &eye) - kron(&eye, &jdj)) * Complex64::new(ch.rate, 0.0);
        }
        let d2 = dim * dim;
        let mut b = nalgebra::DVector::<Complex64>::zeros(d2);
        for k in 0..dim {
            l[(0, k * dim + k)] = Complex64::new(1.0, 0.0);
        }
        for col in 0..d2 {
            if col % (dim + 1) != 0 {
                l[(0, col)] = Complex64::new(0.0, 0.0);
            }
        }
        b[0] = Complex64::new(1.0, 0.0);
        let rho = DMatrix::from_row_slice(dim, dim, l.lu().solve(&b).unwrap().as_slice());
        let n = (&rho * &cd * &c).trace().re;
        let mm = (&rho * &c * &c).trace();
        (n, mm)
    }

    #[test]
    fn moments_match_truncated_fock_space() {
        for (h, ga, gb) in [(2.0, 0.01, 0.2), (1.5, 0.05, 0.3), (0.5, 0.01, 0.2), (0.3, 0.02, 0.4)] {
            let m = linearize_physical(&params(h, ga, gb)).unwrap();
            let cov = steady_covariance(&m).unwrap();
            let (n, mm) = fock_moments(&m, 30);
            assert!((n - cov.n_c).abs() < 1e-6 * (1.0 + cov.n_c), "h={h}: {n} vs {}", cov.n_c);
            assert!((mm - cov.m_c).norm() < 1e-6 * (1.0 + cov.m_c.norm()), "h={h}: {mm} vs {}", cov.m_c);
        }
    }
}
