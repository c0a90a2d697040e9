//! Mean-field flow of the normalized Bloch vector `(X, Y, Z) = ⟨J⟩/j`.
//!
//! `Γa` does not enter the flow; it only shows up at finite N and in the
//! fluctuations.

use std::fmt;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ode::{self, OdeOptions};
use crate::params::critical_fields;

pub const SPHERE_TOL: f64 = 1e-9;
/// `‖rhs‖` above which a state is not accepted as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-8;
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub const NORTH: Self = Self { x: 0.0, y: 0.0, z: 1.0 };
    pub const SOUTH: Self = Self { x: 0.0, y: 0.0, z: -1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self { x: theta.sin() * phi.cos(), y: theta.sin() * phi.sin(), z: theta.cos() }
    }

    pub fn on_sphere(x: f64, y: f64, z: f64) -> Result<Self> {
        let s = Self { x, y, z };
        if s.sphere_error() > SPHERE_TOL {
            return domain(format!("({x}, {y}, {z}) is off the unit sphere by {:e}", s.sphere_error()));
        }
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.vector().norm()
    }

    pub fn sphere_error(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z - 1.0).abs()
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self { x: v[0], y: v[1], z: v[2] }
    }

    pub fn normalized(&self) -> Self {
        Self::from_vector(&(self.vector() / self.norm()))
    }

    /// Image under the π rotation about z.
    pub fn mirrored(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: self.z }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.vector() - other.vector()).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchId {
    Pole,
    SouthPole,
    BrokenPlus,
    BrokenMinus,
}

impl BranchId {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchId::Pole => "pole",
            BranchId::SouthPole => "south_pole",
            BranchId::BrokenPlus => "broken_plus",
            BranchId::BrokenMinus => "broken_minus",
        }
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateBranch {
    pub state: BlochState,
    pub branch_id: BranchId,
    pub stable: bool,
    /// Largest tangent eigenvalue real part within [`MARGINAL_TOL`] of zero.
    pub marginal: bool,
    /// Tangent-plane Jacobian eigenvalues, ordered by decreasing real part.
    pub jacobian_eigenvalues: [Complex64; 2],
}

impl SteadyStateBranch {
    pub fn max_re(&self) -> f64 {
        self.jacobian_eigenvalues[0].re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub h: f64,
    pub lambda: f64,
    pub gamma_b: f64,
}

pub fn rhs(s: &BlochState, h: f64, lambda: f64, gamma_b: f64) -> [f64; 3] {
    let BlochState { x, y, z } = *s;
    [
        2.0 * h * y - gamma_b * z * x,
        -2.0 * h * x + 2.0 * lambda * z * x - gamma_b * z * y,
        -2.0 * lambda * x * y + gamma_b * (x * x + y * y),
    ]
}

pub fn jacobian(s: &BlochState, h: f64, lambda: f64, gamma_b: f64) -> Matrix3<f64> {
    let BlochState { x, y, z } = *s;
    Matrix3::new(
        -gamma_b * z,
        2.0 * h,
        -gamma_b * x,
        -2.0 * h + 2.0 * lambda * z,
        -gamma_b * z,
        2.0 * lambda * x - gamma_b * y,
        -2.0 * lambda * y + 2.0 * gamma_b * x,
        -2.0 * lambda * x + 2.0 * gamma_b * y,
        0.0,
    )
}

/// Orthonormal `(e1, e2)` with `e1 × e2 = n̂`.
pub fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let n = n.normalize();
    let axis = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        Vector3::x()
    } else if n[1].abs() <= n[2].abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (axis - n * n.dot(&axis)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// The Jacobian restricted to the tangent plane at `s`, in the basis of [`tangent_basis`].
pub fn tangent_jacobian(s: &BlochState, h: f64, lambda: f64, gamma_b: f64) -> Matrix2<f64> {
    let j = jacobian(s, h, lambda, gamma_b);
    let (e1, e2) = tangent_basis(&s.vector());
    let basis = [e1, e2];
    Matrix2::from_fn(|r, c| basis[r].dot(&(j * basis[c])))
}

pub(crate) fn eig2(m: &Matrix2<f64>) -> [Complex64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let half = tr / 2.0;
    let disc = Complex64::new(half * half - det, 0.0).sqrt();
    let mut ev = [half + disc, half - disc];
    sort_eigenvalues(&mut ev);
    ev
}

/// Decreasing real part, then decreasing imaginary part.
pub(crate) fn sort_eigenvalues(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Classifies a fixed point from its tangent-plane Jacobian.
pub fn stability(state: &BlochState, branch_id: BranchId, h: f64, lambda: f64, gamma_b: f64) -> Result<SteadyStateBranch> {
    let f = rhs(state, h, lambda, gamma_b);
    let res = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if res > FIXED_POINT_TOL {
        return domain(format!("state is not a fixed point (‖rhs‖ = {res:e})"));
    }
    let ev = eig2(&tangent_jacobian(state, h, lambda, gamma_b));
    let max_re = ev[0].re;
    Ok(SteadyStateBranch {
        state: *state,
        branch_id,
        stable: max_re < 0.0 && max_re.abs() > MARGINAL_TOL,
        marginal: max_re.abs() <= MARGINAL_TOL,
        jacobian_eigenvalues: ev,
    })
}

/// Closed-form broken branch `(+X, +Y, Z)` for `h` strictly inside the critical window.
pub fn broken_branch(h: f64, lambda: f64, gamma_b: f64) -> Option<BlochState> {
    let cf = critical_fields(lambda, gamma_b).ok()?;
    if !cf.exists || !(h > cf.h_minus && h < cf.h_plus) {
        return None;
    }
    let big_lambda = lambda + (lambda * lambda - gamma_b * gamma_b).sqrt();
    let x2 = (big_lambda * big_lambda - 4.0 * h * h) / (2.0 * lambda * big_lambda);
    if x2 <= 0.0 {
        return None;
    }
    let x = x2.sqrt();
    Some(BlochState { x, y: gamma_b / big_lambda * x, z: 2.0 * h / big_lambda })
}

/// All equilibria of the flow with their stability: both poles always, and the
/// broken pair strictly inside `(h₋ᶜ, h₊ᶜ)`.
pub fn fixed_points(h: f64, lambda: f64, gamma_b: f64) -> Result<Vec<SteadyStateBranch>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(gamma_b >= 0.0) || !gamma_b.is_finite() || !h.is_finite() {
        return domain("gamma_b must be non-negative and h finite");
    }
    let mut out = vec![
        stability(&BlochState::NORTH, BranchId::Pole, h, lambda, gamma_b)?,
        stability(&BlochState::SOUTH, BranchId::SouthPole, h, lambda, gamma_b)?,
    ];
    if let Some(b) = broken_branch(h, lambda, gamma_b) {
        out.push(stability(&b, BranchId::BrokenPlus, h, lambda, gamma_b)?);
        out.push(stability(&b.mirrored(), BranchId::BrokenMinus, h, lambda, gamma_b)?);
    }
    Ok(out)
}

/// The branch a physical sweep settles on: the pole outside the window,
/// `broken_plus` inside.
pub fn physical_branch(h: f64, lambda: f64, gamma_b: f64) -> Result<SteadyStateBranch> {
    let branches = fixed_points(h, lambda, gamma_b)?;
    let pick = |id| branches.iter().find(|b| b.branch_id == id).copied();
    Ok(pick(BranchId::BrokenPlus).or_else(|| pick(BranchId::Pole)).expect("pole is always present"))
}

pub fn stable_branch_count(h: f64, lambda: f64, gamma_b: f64) -> Result<usize> {
    Ok(fixed_points(h, lambda, gamma_b)?.iter().filter(|b| b.stable).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityChange {
    pub h: f64,
    pub count_below: usize,
    pub count_above: usize,
}

/// Locates changes in the number of stable branches on a uniform grid, refining
/// each by bisection to `h_tol`.
pub fn stability_changes(h_start: f64, h_stop: f64, count: usize, lambda: f64, gamma_b: f64, h_tol: f64) -> Result<Vec<StabilityChange>> {
    if count < 2 || !(h_stop > h_start) {
        return domain("scan needs count ≥ 2 and h_stop > h_start");
    }
    let grid: Vec<f64> = (0..count).map(|i| h_start + (h_stop - h_start) * i as f64 / (count - 1) as f64).collect();
    let counts = grid.iter().map(|&h| stable_branch_count(h, lambda, gamma_b)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 1..count {
        if counts[i] == counts[i - 1] {
            continue;
        }
        let (mut lo, mut hi) = (grid[i - 1], grid[i]);
        let c_lo = counts[i - 1];
        while hi - lo > h_tol {
            let mid = 0.5 * (lo + hi);
            if stable_branch_count(mid, lambda, gamma_b)? == c_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(StabilityChange { h: 0.5 * (lo + hi), count_below: c_lo, count_above: counts[i] });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    /// Largest `| |r|² − 1 |` seen before any renormalization.
    pub max_sphere_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> BlochState {
        *self.states.last().expect("trajectory holds the initial state")
    }
}

pub fn integrate(state0: &BlochState, h: f64, lambda: f64, gamma_b: f64, t_final: f64, tol: f64) -> Result<Trajectory> {
    if state0.sphere_error() > SPHERE_TOL {
        return domain("initial state must lie on the unit sphere");
    }
    let mut times = vec![0.0];
    let mut states = vec![*state0];
    let mut drift = 0.0f64;
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let d = rhs(&BlochState::new(y[0], y[1], y[2]), h, lambda, gamma_b);
        dy.copy_from_slice(&d);
    };
    let on_step = |t: f64, y: &mut [f64]| {
        let s = BlochState::new(y[0], y[1], y[2]);
        let err = s.sphere_error();
        drift = drift.max(err);
        let s = if err > 10.0 * tol {
            log::warn!("sphere drift {err:e} at t = {t}; renormalizing");
            let s = s.normalized();
            y.copy_from_slice(&[s.x, s.y, s.z]);
            s
        } else {
            s
        };
        times.push(t);
        states.push(s);
    };
    // keep steps inside the explicit stability region near attracting fixed points
    let opts = OdeOptions { h_max: 1.0 / (h.abs() + lambda + gamma_b), ..OdeOptions::with_tol(tol) };
    ode::integrate(f, 0.0, &[state0.x, state0.y, state0.z], t_final, &opts, on_step)?;
    Ok(Trajectory { times, states, max_sphere_drift: drift })
}
