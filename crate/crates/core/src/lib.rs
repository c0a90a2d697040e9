//! Numerics for the dissipative Lipkin-Meshkov-Glick (LMG) model.
//!
//! The collective spin of `N` two-level atoms evolves under
//!
//! ```text
//! dρ/dt = -i[H, ρ] + (Γa/N) D[2Jx]ρ + (Γb/N) D[J+]ρ,   H = -2h Jz - (2λ/N) Jx²
//! ```
//!
//! with `D[A]ρ = 2AρA† - A†Aρ - ρA†A`. The crate covers the chain from
//! microscopic cavity-QED parameters ([`params`]) to finite-N steady states and
//! dynamics in the Dicke basis ([`spin`], [`master`]), the mean-field flow and
//! its bifurcations ([`semiclassical`]), Holstein-Primakoff fluctuations and
//! probe transmission spectra ([`fluctuations`]), and the planar spin-squeezing
//! entanglement measure ([`entanglement`]). [`scan`] drives parameter sweeps and
//! writes CSV/JSON output.
//!
//! All rates are angular frequencies in whatever unit the caller chooses; the
//! scans work in units of λ.

pub mod entanglement;
pub mod error;
pub mod fluctuations;
pub mod master;
pub mod ode;
pub mod params;
pub mod scan;
pub mod semiclassical;
pub mod spin;

mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use entanglement::{c_phi, c_r, concurrence_oracle, EntanglementResult, PlanarMoments};
pub use master::{
    build_liouvillian, evolve, expectations, steady_state, DensityMatrix, Liouvillian, MomentSet,
    SteadyState,
};
pub use params::{critical_fields, derive_effective, validity_report, CriticalFields, EffectiveParams, MicroParams};
pub use semiclassical::{fixed_points, BlochState, BranchId, SteadyStateBranch};
pub use spin::{build_lmg_hamiltonian, build_spin_operators, coherent_spin_state, SpinOperatorSet};
