//! Gaussian fluctuations about the mean-field state.
//!
//! [`hp`] holds the quadratic Holstein–Primakoff theory of the collective
//! spin alone; [`spectrum`] keeps both cavity modes and computes the linear
//! response to a weak probe on mode b.

pub mod hp;
pub mod spectrum;

use num_complex::Complex64;
use serde::Serialize;

use crate::params::EffectiveParams;
use crate::semiclassical::{self, BranchId};

pub use hp::{expand, linearize, linearize_physical, steady_covariance, CovarianceSet, LinearizedModel};
pub use spectrum::{transmission_spectrum, SpectrumResult};

/// One row of an eigenvalue scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueRow {
    pub h: f64,
    pub branch_id: BranchId,
    /// Ordered by decreasing real part.
    pub eigenvalues: [Complex64; 2],
    /// `ok`, `diverged` (marginal drift) or `singular` (expansion failed).
    pub status: &'static str,
}

/// Drift eigenvalues about the physical branch at each `h`. Marginal points
/// are reported with status `diverged` rather than as errors.
pub fn fluctuation_eigenvalues(params: &EffectiveParams, h_grid: &[f64]) -> Vec<EigenvalueRow> {
    h_grid
        .iter()
        .map(|&h| {
            let p = params.with_h(h);
            let nan = [Complex64::new(f64::NAN, f64::NAN); 2];
            let branch = match semiclassical::physical_branch(h, p.lambda, p.gamma_b) {
                Ok(b) => b,
                Err(_) => return EigenvalueRow { h, branch_id: BranchId::Pole, eigenvalues: nan, status: "singular" },
            };
            match hp::expand(&p, &branch) {
                Ok(model) => {
                    let eigenvalues = model.drift_eigenvalues();
                    let scale = p.h.abs().max(p.lambda).max(p.gamma_a).max(p.gamma_b);
                    let status = if eigenvalues[0].re < -hp::MARGINAL_TOL * scale { "ok" } else { "diverged" };
                    EigenvalueRow { h, branch_id: branch.branch_id, eigenvalues, status }
                }
                Err(_) => EigenvalueRow { h, branch_id: branch.branch_id, eigenvalues: nan, status: "singular" },
            }
        })
        .collect()
}
