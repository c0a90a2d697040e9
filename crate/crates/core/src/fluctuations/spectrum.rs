//! Probe transmission of the linearized two-mode atom–cavity model.
//!
//! Mean fields are scaled as `s = ⟨J⟩/N`, `α = ⟨a⟩/√N`, `β = ⟨b⟩/√N`, so that
//! with the coupling `(λa/√N)·2Jx(a + a†) + (λb/√N)(J₋b + J₊b†)` all of `N`
//! is absorbed in λa, λb except through the dispersive terms `2δ⁻ N s_z`:
//!
//! ```text
//! dα/dt = −(κa + iδa + 2iδa⁻N s_z) α − 2iλa s_x
//! dβ/dt = −(κb + iδb + 2iδb⁻N s_z) β − iλb s₊
//! ds/dt = Ω × s,   Ω = (4λa Re α + 2λb Re β,  2λb Im β,  ω₀ + 2Nδa⁻|α|² + 2Nδb⁻|β|²)
//! ```
//!
//! Fluctuation first moments obey the same equations linearized about the
//! fixed point. A probe `ε e^{−iνt}` added to `dβ/dt` produces a coherent
//! response `A_b e^{−iνt}` in mode b, and `T_p(ν) = |A_b|² / |ε/κb|²`, the
//! denominator being the empty-cavity maximum (reached at `ν = δb`).

use nalgebra::{SMatrix, SVector, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::{CavityParams, MicroParams};
use crate::semiclassical::{self, tangent_basis, BlochState, BranchId, SteadyStateBranch};

type Mat7 = SMatrix<f64, 7, 7>;
type Mat6 = SMatrix<f64, 6, 6>;
type Vec7 = SVector<f64, 7>;

const NEWTON_TOL: f64 = 1e-13;
const MAX_NEWTON: usize = 60;
/// A probe within this distance (relative to the largest rate) of an undamped
/// drift eigenvalue is reported as a divergence.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Self-consistent mean fields of the atom–cavity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanField {
    pub alpha: Complex64,
    pub beta: Complex64,
    /// `⟨J⟩/N`, of length 1/2.
    pub spin: Vector3<f64>,
    pub residual: f64,
}

impl MeanField {
    fn to_vec(self) -> Vec7 {
        Vec7::from_column_slice(&[
            self.alpha.re,
            self.alpha.im,
            self.beta.re,
            self.beta.im,
            self.spin[0],
            self.spin[1],
            self.spin[2],
        ])
    }

    /// Bloch vector `2s`.
    pub fn bloch(&self) -> BlochState {
        BlochState::from_vector(&(2.0 * self.spin))
    }
}

fn rhs7(c: &CavityParams, x: &Vec7) -> Vec7 {
    let n = c.n_atoms as f64;
    let (ar, ai, br, bi) = (x[0], x[1], x[2], x[3]);
    let s = Vector3::new(x[4], x[5], x[6]);
    let da = c.delta_a + 2.0 * c.delta_a_minus * n * s[2];
    let db = c.delta_b + 2.0 * c.delta_b_minus * n * s[2];
    let omega = omega_vec(c, x);
    let ds = omega.cross(&s);
    Vec7::from_column_slice(&[
        -c.kappa_a * ar + da * ai,
        -da * ar - c.kappa_a * ai - 2.0 * c.lambda_a * s[0],
        -c.kappa_b * br + db * bi + c.lambda_b * s[1],
        -db * br - c.kappa_b * bi - c.lambda_b * s[0],
        ds[0],
        ds[1],
        ds[2],
    ])
}

fn omega_vec(c: &CavityParams, x: &Vec7) -> Vector3<f64> {
    let n = c.n_atoms as f64;
    Vector3::new(
        4.0 * c.lambda_a * x[0] + 2.0 * c.lambda_b * x[2],
        2.0 * c.lambda_b * x[3],
        c.omega_0
            + 2.0 * c.delta_a_minus * n * (x[0] * x[0] + x[1] * x[1])
            + 2.0 * c.delta_b_minus * n * (x[2] * x[2] + x[3] * x[3]),
    )
}

/// Jacobian of the 7-component mean-field flow in `(Re α, Im α, Re β, Im β, s)`.
pub fn jacobian7(c: &CavityParams, x: &[f64; 7]) -> Mat7 {
    let x = Vec7::from_column_slice(x);
    let n = c.n_atoms as f64;
    let (ar, ai, br, bi) = (x[0], x[1], x[2], x[3]);
    let s = Vector3::new(x[4], x[5], x[6]);
    let da = c.delta_a + 2.0 * c.delta_a_minus * n * s[2];
    let db = c.delta_b + 2.0 * c.delta_b_minus * n * s[2];
    let (dan, dbn) = (2.0 * c.delta_a_minus * n, 2.0 * c.delta_b_minus * n);
    let mut j = Mat7::zeros();

    j[(0, 0)] = -c.kappa_a;
    j[(0, 1)] = da;
    j[(0, 6)] = dan * ai;
    j[(1, 0)] = -da;
    j[(1, 1)] = -c.kappa_a;
    j[(1, 4)] = -2.0 * c.lambda_a;
    j[(1, 6)] = -dan * ar;

    j[(2, 2)] = -c.kappa_b;
    j[(2, 3)] = db;
    j[(2, 5)] = c.lambda_b;
    j[(2, 6)] = dbn * bi;
    j[(3, 2)] = -db;
    j[(3, 3)] = -c.kappa_b;
    j[(3, 4)] = -c.lambda_b;
    j[(3, 6)] = -dbn * br;

    let omega = omega_vec(c, &x);
    let d_omega = [
        Vector3::new(4.0 * c.lambda_a, 0.0, 2.0 * dan * ar),
        Vector3::new(0.0, 0.0, 2.0 * dan * ai),
        Vector3::new(2.0 * c.lambda_b, 0.0, 2.0 * dbn * br),
        Vector3::new(0.0, 2.0 * c.lambda_b, 2.0 * dbn * bi),
    ];
    for (k, dw) in d_omega.iter().enumerate() {
        let col = dw.cross(&s);
        for r in 0..3 {
            j[(4 + r, k)] = col[r];
        }
    }
    for k in 0..3 {
        let col = omega.cross(&Vector3::ith(k, 1.0));
        for r in 0..3 {
            j[(4 + r, 4 + k)] = col[r];
        }
    }
    j
}

/// Columns: the four cavity quadratures, then the tangent basis at `s`.
fn embedding(s: &Vector3<f64>) -> SMatrix<f64, 7, 6> {
    let (e1, e2) = tangent_basis(s);
    let mut p = SMatrix::<f64, 7, 6>::zeros();
    for k in 0..4 {
        p[(k, k)] = 1.0;
    }
    for r in 0..3 {
        p[(4 + r, 4)] = e1[r];
        p[(4 + r, 5)] = e2[r];
    }
    p
}

fn rate_scale(c: &CavityParams) -> f64 {
    [c.omega_0, c.lambda_a, c.lambda_b, c.kappa_a, c.kappa_b, c.delta_a, c.delta_b]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Cavity fields enslaved to a fixed spin.
fn adiabatic_fields(c: &CavityParams, s: &Vector3<f64>) -> (Complex64, Complex64) {
    let n = c.n_atoms as f64;
    let i = Complex64::i();
    let za = Complex64::new(c.kappa_a, c.delta_a + 2.0 * c.delta_a_minus * n * s[2]);
    let zb = Complex64::new(c.kappa_b, c.delta_b + 2.0 * c.delta_b_minus * n * s[2]);
    let alpha = -2.0 * i * c.lambda_a * s[0] / za;
    let beta = -i * c.lambda_b * Complex64::new(s[0], s[1]) / zb;
    (alpha, beta)
}

/// Newton iteration on the cavity fields and the spin sphere, seeded by `seed`
/// with the cavity fields adiabatically slaved to it.
pub fn mean_field(c: &CavityParams, seed: &BlochState) -> Result<MeanField> {
    c.validate()?;
    let mut s = seed.vector().normalize() * 0.5;
    let (alpha, beta) = adiabatic_fields(c, &s);
    let mut x = MeanField { alpha, beta, spin: s, residual: f64::INFINITY }.to_vec();
    let scale = rate_scale(c).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_NEWTON {
        let r = rhs7(c, &x);
        let res = r.amax() / scale;
        if res <= NEWTON_TOL {
            return Ok(MeanField {
                alpha: Complex64::new(x[0], x[1]),
                beta: Complex64::new(x[2], x[3]),
                spin: s,
                residual: res,
            });
        }
        let p = embedding(&s);
        let j6 = p.transpose() * jacobian7(c, &array7(&x)) * p;
        let step = j6.lu().solve(&(-(p.transpose() * r))).ok_or_else(|| {
            Error::SolverBreakdown("singular Jacobian in the atom–cavity mean-field solve".into())
        })?;
        x += p * step;
        s = Vector3::new(x[4], x[5], x[6]).normalize() * 0.5;
        x.fixed_rows_mut::<3>(4).copy_from(&s);
    }
    let res = rhs7(c, &x).amax() / scale;
    Err(Error::SolverBreakdown(format!("atom–cavity mean field did not converge (residual {res:e})")))
}

fn array7(x: &Vec7) -> [f64; 7] {
    std::array::from_fn(|k| x[k])
}

/// The linearized atom–cavity model about a mean-field fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub cavity: CavityParams,
    pub mean_field: MeanField,
    /// Drift of `(δRe α, δIm α, δRe β, δIm β, tangent₁, tangent₂)`.
    pub drift: Mat6,
    /// Drift eigenvalues, decreasing real part.
    pub eigenvalues: Vec<Complex64>,
}

impl ProbeModel {
    pub fn new(cavity: &CavityParams, branch: &SteadyStateBranch) -> Result<Self> {
        let mf = mean_field(cavity, &branch.state)?;
        let p = embedding(&mf.spin);
        let drift = p.transpose() * jacobian7(cavity, &array7(&mf.to_vec())) * p;
        let mut eigenvalues: Vec<Complex64> = drift.complex_eigenvalues().iter().copied().collect();
        semiclassical::sort_eigenvalues(&mut eigenvalues);
        Ok(Self { cavity: cavity.clone(), mean_field: mf, drift, eigenvalues })
    }

    /// Complex amplitude of mode b at the probe frequency, or `None` on an
    /// undamped resonance.
    pub fn response(&self, nu: f64, probe_amplitude: f64) -> Option<Complex64> {
        let i = Complex64::i();
        let tol = RESONANCE_TOL * rate_scale(&self.cavity).max(nu.abs());
        if self.eigenvalues.iter().any(|mu| (mu - i * nu).norm() <= tol) {
            return None;
        }
        let m = self.drift.map(|v| Complex64::new(-v, 0.0)) - SMatrix::<Complex64, 6, 6>::identity() * (i * nu);
        let mut g = SVector::<Complex64, 6>::zeros();
        g[2] = Complex64::new(probe_amplitude / 2.0, 0.0);
        g[3] = Complex64::new(0.0, -probe_amplitude / 2.0);
        let y = m.lu().solve(&g)?;
        let a = y[2] + i * y[3];
        (a.re.is_finite() && a.im.is_finite()).then_some(a)
    }

    pub fn transmission(&self, nu: f64, probe_amplitude: f64) -> f64 {
        let norm = (probe_amplitude / self.cavity.kappa_b).powi(2);
        match self.response(nu, probe_amplitude) {
            Some(a) if norm > 0.0 => {
                let t = a.norm_sqr() / norm;
                if t.is_finite() {
                    t
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    }
}

/// Transmission of the cavity with no atoms, on the same normalization.
pub fn empty_cavity_transmission(cavity: &CavityParams, nu: f64) -> f64 {
    let k = cavity.kappa_b;
    k * k / (k * k + (nu - cavity.delta_b).powi(2))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub probe_frequencies: Vec<f64>,
    /// Normalized by the empty-cavity maximum; `inf` marks a divergence.
    pub transmission: Vec<f64>,
    pub h: f64,
    pub lambda: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub branch_id: BranchId,
    pub probe_amplitude: f64,
    pub cavity: CavityParams,
    pub mean_field: MeanField,
}

impl SpectrumResult {
    /// `T_p` divided by the empty-cavity response at each frequency.
    pub fn relative(&self) -> Vec<f64> {
        self.probe_frequencies
            .iter()
            .zip(&self.transmission)
            .map(|(&nu, &t)| t / empty_cavity_transmission(&self.cavity, nu))
            .collect()
    }

    /// Transmission at `nu`, linearly interpolated.
    pub fn at(&self, nu: f64) -> f64 {
        let f = &self.probe_frequencies;
        match f.binary_search_by(|v| v.total_cmp(&nu)) {
            Ok(k) => self.transmission[k],
            Err(0) => self.transmission[0],
            Err(k) if k == f.len() => self.transmission[k - 1],
            Err(k) => {
                let w = (nu - f[k - 1]) / (f[k] - f[k - 1]);
                (1.0 - w) * self.transmission[k - 1] + w * self.transmission[k]
            }
        }
    }
}

/// `T_p` on `nu_grid` about the given branch, which serves as the seed of the
/// self-consistent mean-field solve.
pub fn transmission_spectrum(
    cavity: &CavityParams,
    branch: &SteadyStateBranch,
    probe_amplitude: f64,
    nu_grid: &[f64],
) -> Result<SpectrumResult> {
    if !(probe_amplitude > 0.0) || !probe_amplitude.is_finite() {
        return domain("probe amplitude must be positive and finite");
    }
    if nu_grid.iter().any(|v| !v.is_finite()) {
        return domain("probe frequencies must be finite");
    }
    if !branch.stable && !branch.marginal {
        return domain(format!("branch {} is unstable", branch.branch_id));
    }
    let model = ProbeModel::new(cavity, branch)?;
    let transmission = nu_grid.iter().map(|&nu| model.transmission(nu, probe_amplitude)).collect();
    Ok(SpectrumResult {
        probe_frequencies: nu_grid.to_vec(),
        transmission,
        h: cavity.h(),
        lambda: cavity.lambda(),
        gamma_a: cavity.gamma_a(),
        gamma_b: cavity.gamma_b(),
        branch_id: branch.branch_id,
        probe_amplitude,
        cavity: cavity.clone(),
        mean_field: model.mean_field,
    })
}

pub fn transmission_spectrum_from_micro(
    micro: &MicroParams,
    branch: &SteadyStateBranch,
    probe_amplitude: f64,
    nu_grid: &[f64],
) -> Result<SpectrumResult> {
    transmission_spectrum(&CavityParams::from_micro(micro)?, branch, probe_amplitude, nu_grid)
}

/// The eliminated-model branch the spectrum is expanded about: the pole outside
/// the critical window, `broken_plus` inside.
pub fn default_branch(cavity: &CavityParams) -> Result<SteadyStateBranch> {
    semiclassical::physical_branch(cavity.h(), cavity.lambda(), cavity.gamma_b())
}

pub fn uniform_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|k| if k == count - 1 { stop } else { start + step * k as f64 }).collect()
}

/// 2001 points on `[−3λ, 3λ]`.
pub fn default_grid(lambda: f64) -> Vec<f64> {
    uniform_grid(-3.0 * lambda, 3.0 * lambda, 2001)
}

/// Adds points where the spectrum has structure: a fine window around each
/// drift resonance inside the grid range, then `levels` rounds of bisection
/// next to every local extremum of `T_p / T_empty`.
pub fn refined_spectrum(
    cavity: &CavityParams,
    branch: &SteadyStateBranch,
    probe_amplitude: f64,
    base_grid: &[f64],
    levels: usize,
) -> Result<SpectrumResult> {
    if base_grid.len() < 2 {
        return transmission_spectrum(cavity, branch, probe_amplitude, base_grid);
    }
    let model = ProbeModel::new(cavity, branch)?;
    let (lo, hi) = base_grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut grid: Vec<f64> = base_grid.to_vec();
    for mu in &model.eigenvalues {
        let centre = -mu.im;
        let width = mu.re.abs().max(1e-9 * (hi - lo));
        for k in -100..=100 {
            let nu = centre + width * k as f64 / 10.0;
            if nu >= lo && nu <= hi {
                grid.push(nu);
            }
        }
    }
    sort_dedup(&mut grid);
    for _ in 0..levels {
        let rel: Vec<f64> =
            grid.iter().map(|&nu| model.transmission(nu, probe_amplitude) / empty_cavity_transmission(cavity, nu)).collect();
        let mut extra = Vec::new();
        for k in 1..grid.len() - 1 {
            let is_max = rel[k] >= rel[k - 1] && rel[k] >= rel[k + 1];
            let is_min = rel[k] <= rel[k - 1] && rel[k] <= rel[k + 1];
            if (is_max || is_min) && !(rel[k] == rel[k - 1] && rel[k] == rel[k + 1]) {
                extra.push(0.5 * (grid[k - 1] + grid[k]));
                extra.push(0.5 * (grid[k] + grid[k + 1]));
            }
        }
        if extra.is_empty() {
            break;
        }
        grid.extend(extra);
        sort_dedup(&mut grid);
    }
    transmission_spectrum(cavity, branch, probe_amplitude, &grid)
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Peak,
    Dip,
}

/// A resonance in `T_p / T_empty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feature {
    pub kind: FeatureKind,
    pub center: f64,
    /// `T_p / T_empty` at the centre.
    pub value: f64,
    /// Full width at half the deviation from 1, if both flanks are on the grid.
    pub width: Option<f64>,
}

/// Local extrema of `T_p / T_empty` deviating from 1 by more than `threshold`.
pub fn atomic_features(result: &SpectrumResult, threshold: f64) -> Vec<Feature> {
    let nu = &result.probe_frequencies;
    let r = result.relative();
    let mut out = Vec::new();
    for k in 1..nu.len().saturating_sub(1) {
        let kind = if r[k] > r[k - 1] && r[k] >= r[k + 1] && r[k] > 1.0 + threshold {
            FeatureKind::Peak
        } else if r[k] < r[k - 1] && r[k] <= r[k + 1] && r[k] < 1.0 - threshold {
            FeatureKind::Dip
        } else {
            continue;
        };
        let half = 1.0 + 0.5 * (r[k] - 1.0);
        let beyond = |v: f64| match kind {
            FeatureKind::Peak => v <= half,
            FeatureKind::Dip => v >= half,
        };
        let crossing = |a: usize, b: usize| nu[a] + (half - r[a]) / (r[b] - r[a]) * (nu[b] - nu[a]);
        let left = (0..k).rev().find(|&j| beyond(r[j])).map(|j| crossing(j, j + 1));
        let right = (k + 1..nu.len()).find(|&j| beyond(r[j])).map(|j| crossing(j - 1, j));
        let width = left.zip(right).map(|(l, rr)| rr - l);
        out.push(Feature { kind, center: nu[k], value: r[k], width });
    }
    out
}
