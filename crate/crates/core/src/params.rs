//! Microscopic cavity-QED parameters, the effective dissipative-LMG parameter
//! set derived from them, critical fields, and scale-hierarchy checks.
//!
//! Rates are angular frequencies. The numbers carry whatever unit the caller
//! picked (`Units` is only a label): every relation here is homogeneous of
//! degree one in the rates, so no conversion factor ever enters.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};

/// Relative tolerance for the two mode-a Raman rates to count as equal.
pub const RAMAN_CONSISTENCY_TOL: f64 = 1e-6;

/// Default threshold for "much greater than" in [`validity_report`].
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Ratios with λ = 1.
    #[default]
    Dimensionless,
    /// Angular frequencies written as 2π × kHz.
    TwoPiKhz,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Units::Dimensionless => write!(f, "dimensionless (lambda = 1)"),
            Units::TwoPiKhz => write!(f, "2pi x kHz"),
        }
    }
}

/// Laser, cavity and atomic parameters of the Raman scheme.
///
/// Complex fields accept either a plain number or a `[re, im]` pair in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    #[serde(with = "complex_json")]
    pub rabi_r0: Complex64,
    #[serde(with = "complex_json")]
    pub rabi_s0: Complex64,
    #[serde(with = "complex_json")]
    pub rabi_r1: Complex64,
    #[serde(with = "complex_json")]
    pub g_r0: Complex64,
    #[serde(with = "complex_json")]
    pub g_s1: Complex64,
    #[serde(with = "complex_json")]
    pub g_s0: Complex64,
    #[serde(with = "complex_json")]
    pub g_r1: Complex64,
    pub delta_r: f64,
    pub delta_s: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub omega_1: f64,
    pub omega_1p: f64,
    pub n_atoms: u64,
    #[serde(default)]
    pub gamma_at: f64,
}

impl MicroParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_a > 0.0 && self.kappa_b > 0.0) {
            return domain("cavity decay rates kappa_a, kappa_b must be positive");
        }
        if self.n_atoms == 0 {
            return domain("n_atoms must be at least 1");
        }
        if self.delta_r == 0.0 || self.delta_s == 0.0 {
            return domain("atom-light detunings delta_r, delta_s must be nonzero");
        }
        if self.gamma_at < 0.0 {
            return domain("gamma_at must be non-negative");
        }
        Ok(())
    }
}

/// Parameters of the atom–cavity Hamiltonian after eliminating the excited
/// states: mode detunings, dispersive shifts δ±, and the collective Raman
/// couplings λa, λb (magnitudes; their phases are absorbed into the modes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_0: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub kappa_a: f64,
    pub delta_a: f64,
    pub kappa_b: f64,
    pub delta_b: f64,
    #[serde(default)]
    pub delta_a_plus: f64,
    #[serde(default)]
    pub delta_a_minus: f64,
    #[serde(default)]
    pub delta_b_plus: f64,
    #[serde(default)]
    pub delta_b_minus: f64,
    pub n_atoms: u64,
}

impl CavityParams {
    /// Couplings and shifts from the microscopic scheme. The first of the two
    /// (ideally equal) mode-a Raman rates is used as λa.
    pub fn from_micro(micro: &MicroParams) -> Result<Self> {
        micro.validate()?;
        let sqrt_n = (micro.n_atoms as f64).sqrt();
        let (dr, ds) = (micro.delta_r, micro.delta_s);
        let omega_0 = micro.rabi_r1.norm_sqr() / (4.0 * dr)
            - micro.rabi_r0.norm_sqr() / (4.0 * dr)
            - micro.rabi_s0.norm_sqr() / (4.0 * ds)
            + micro.omega_1
            - micro.omega_1p;
        let lambda_a = (sqrt_n * micro.rabi_r1.conj() * micro.g_r0 / dr).norm();
        let lambda_b = (sqrt_n * micro.rabi_r0.conj() * micro.g_r1 / (2.0 * dr)).norm();
        Ok(Self {
            omega_0,
            lambda_a,
            lambda_b,
            kappa_a: micro.kappa_a,
            delta_a: micro.delta_a,
            kappa_b: micro.kappa_b,
            delta_b: micro.delta_b,
            delta_a_plus: micro.g_s1.norm_sqr() / (2.0 * ds) + micro.g_r0.norm_sqr() / (2.0 * dr),
            delta_a_minus: micro.g_s1.norm_sqr() / (2.0 * ds) - micro.g_r0.norm_sqr() / (2.0 * dr),
            delta_b_plus: micro.g_r1.norm_sqr() / (2.0 * dr) + micro.g_s0.norm_sqr() / (2.0 * ds),
            delta_b_minus: micro.g_r1.norm_sqr() / (2.0 * dr) - micro.g_s0.norm_sqr() / (2.0 * ds),
            n_atoms: micro.n_atoms,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_a > 0.0 && self.kappa_b > 0.0) {
            return domain("cavity decay rates kappa_a, kappa_b must be positive");
        }
        if self.n_atoms == 0 {
            return domain("n_atoms must be at least 1");
        }
        if !(self.lambda_a >= 0.0 && self.lambda_b >= 0.0) {
            return domain("couplings lambda_a, lambda_b are magnitudes and must be non-negative");
        }
        Ok(())
    }

    /// Effective field h = -ω₀/2.
    pub fn h(&self) -> f64 {
        -self.omega_0 / 2.0
    }

    pub fn lambda(&self) -> f64 {
        2.0 * self.lambda_a.powi(2) * self.delta_a / (self.kappa_a.powi(2) + self.delta_a.powi(2))
    }

    pub fn gamma_a(&self) -> f64 {
        self.lambda_a.powi(2) * self.kappa_a / (self.kappa_a.powi(2) + self.delta_a.powi(2))
    }

    pub fn gamma_b(&self) -> f64 {
        self.lambda_b.powi(2) * self.kappa_b / (self.kappa_b.powi(2) + self.delta_b.powi(2))
    }

    /// Same cavity with a different effective field (ω₀ = -2h).
    pub fn with_h(&self, h: f64) -> Self {
        Self { omega_0: -2.0 * h, ..self.clone() }
    }
}

/// Cavity parameters specified by ratios, normalized so that λ = 1.
///
/// `Default` is the probe-spectrum parameter set: κa/δa = 0.02,
/// λb/λa = 0.32, κb/δa = 1, δb = 0, dispersive shifts δ± = 0. The caption
/// fixes only ratios, so the absolute scale δa/λ is a free choice (default 100).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityRatios {
    pub kappa_a_over_delta_a: f64,
    pub lambda_b_over_lambda_a: f64,
    pub kappa_b_over_delta_a: f64,
    pub delta_b_over_lambda: f64,
    pub delta_a_over_lambda: f64,
}

impl Default for CavityRatios {
    fn default() -> Self {
        Self {
            kappa_a_over_delta_a: 0.02,
            lambda_b_over_lambda_a: 0.32,
            kappa_b_over_delta_a: 1.0,
            delta_b_over_lambda: 0.0,
            delta_a_over_lambda: 100.0,
        }
    }
}

impl CavityRatios {
    pub fn to_cavity(&self, h_over_lambda: f64, n_atoms: u64) -> CavityParams {
        let delta_a = self.delta_a_over_lambda;
        let kappa_a = self.kappa_a_over_delta_a * delta_a;
        // λ = 2λa²δa/(κa²+δa²) = 1
        let lambda_a = ((kappa_a * kappa_a + delta_a * delta_a) / (2.0 * delta_a)).sqrt();
        CavityParams {
            omega_0: -2.0 * h_over_lambda,
            lambda_a,
            lambda_b: self.lambda_b_over_lambda_a * lambda_a,
            kappa_a,
            delta_a,
            kappa_b: self.kappa_b_over_delta_a * delta_a,
            delta_b: self.delta_b_over_lambda,
            delta_a_plus: 0.0,
            delta_a_minus: 0.0,
            delta_b_plus: 0.0,
            delta_b_minus: 0.0,
            n_atoms,
        }
    }
}

/// The dissipative-LMG parameter set `{h, λ, Γa, Γb, N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub h: f64,
    pub lambda: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub n_atoms: u64,
    /// Intermediate quantities when derived from a cavity model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EffectiveParams {
    pub fn new(h: f64, lambda: f64, gamma_a: f64, gamma_b: f64, n_atoms: u64) -> Result<Self> {
        let p = Self { h, lambda, gamma_a, gamma_b, n_atoms, cavity: None, warnings: Vec::new() };
        p.validate()?;
        Ok(p)
    }

    /// Units of λ: `new(h, 1, Γa, Γb, N)`.
    pub fn dimensionless(h: f64, gamma_a: f64, gamma_b: f64, n_atoms: u64) -> Result<Self> {
        Self::new(h, 1.0, gamma_a, gamma_b, n_atoms)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.gamma_a >= 0.0 && self.gamma_b >= 0.0) {
            return domain("dissipation rates must be non-negative");
        }
        if !self.h.is_finite() {
            return domain("h must be finite");
        }
        if self.n_atoms == 0 {
            return domain("n_atoms must be at least 1");
        }
        Ok(())
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }

    pub fn with_n(&self, n_atoms: u64) -> Self {
        Self { n_atoms, ..self.clone() }
    }

    pub fn critical_fields(&self) -> CriticalFields {
        // lambda > 0 and gamma_b >= 0 are invariants of the type
        critical_fields(self.lambda, self.gamma_b).expect("validated parameters")
    }

    pub fn from_cavity(cavity: &CavityParams) -> Result<Self> {
        cavity.validate()?;
        let lambda = cavity.lambda();
        if !(lambda > 0.0) {
            return domain(format!(
                "derived lambda = {lambda} is not positive (the model needs delta_a > 0)"
            ));
        }
        Ok(Self {
            h: cavity.h(),
            lambda,
            gamma_a: cavity.gamma_a(),
            gamma_b: cavity.gamma_b(),
            n_atoms: cavity.n_atoms,
            cavity: Some(cavity.clone()),
            warnings: Vec::new(),
        })
    }
}

/// Effective parameters from the microscopic scheme, with a warning attached
/// when the two mode-a Raman rates differ by more than [`RAMAN_CONSISTENCY_TOL`].
pub fn derive_effective(micro: &MicroParams) -> Result<EffectiveParams> {
    let cavity = CavityParams::from_micro(micro)?;
    let mut eff = EffectiveParams::from_cavity(&cavity)?;
    let discrepancy = raman_rate_discrepancy(micro);
    if discrepancy > RAMAN_CONSISTENCY_TOL {
        eff.warnings.push(format!(
            "mode-a Raman rates differ: |sqrt(N) Ω*_r1 g_r0/Δ_r| vs |sqrt(N) Ω*_s0 g_s1/Δ_s| \
             relative discrepancy {discrepancy:.3e}; using the first"
        ));
    }
    Ok(eff)
}

/// Relative difference between the two expressions for λa.
pub fn raman_rate_discrepancy(micro: &MicroParams) -> f64 {
    let sqrt_n = (micro.n_atoms as f64).sqrt();
    let first = sqrt_n * micro.rabi_r1.conj() * micro.g_r0 / micro.delta_r;
    let second = sqrt_n * micro.rabi_s0.conj() * micro.g_s1 / micro.delta_s;
    let scale = first.norm().max(second.norm());
    if scale == 0.0 {
        0.0
    } else {
        (first - second).norm() / scale
    }
}

/// The two fields `h±ᶜ = [λ ± (λ² - Γb²)^½]/2` bounding the broken phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalFields {
    pub h_minus: f64,
    pub h_plus: f64,
    /// False when Γb > λ (no broken phase).
    pub exists: bool,
}

impl CriticalFields {
    /// Strictly inside the broken-phase window.
    pub fn contains(&self, h: f64) -> bool {
        self.exists && h > self.h_minus && h < self.h_plus
    }
}

pub fn critical_fields(lambda: f64, gamma_b: f64) -> Result<CriticalFields> {
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(gamma_b >= 0.0) {
        return domain(format!("gamma_b must be non-negative, got {gamma_b}"));
    }
    if gamma_b > lambda {
        return Ok(CriticalFields { h_minus: f64::NAN, h_plus: f64::NAN, exists: false });
    }
    let root = ((lambda - gamma_b) * (lambda + gamma_b)).sqrt();
    let h_plus = 0.5 * (lambda + root);
    // product of roots is Γb²/4; avoids cancellation in λ - root
    let h_minus = 0.25 * gamma_b * gamma_b / h_plus;
    Ok(CriticalFields { h_minus, h_plus, exists: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub name: String,
    pub description: String,
    /// Large side over small side; `inf` when the small side is zero.
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn ser_ratio<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(if x.is_nan() { "nan" } else { "inf" })
    }
}

fn check(name: &str, description: &str, big: f64, small: f64, threshold: f64) -> ValidityCheck {
    let ratio = if small == 0.0 { f64::INFINITY } else { big / small };
    ValidityCheck {
        name: name.to_string(),
        description: description.to_string(),
        ratio,
        threshold,
        pass: ratio >= threshold,
    }
}

/// Single-atom spontaneous emission rate `Γat |Ω|²/(4Δ²)`, worst case over the
/// three Raman lasers.
pub fn spontaneous_emission_rate(micro: &MicroParams) -> f64 {
    [
        (micro.rabi_r0, micro.delta_r),
        (micro.rabi_r1, micro.delta_r),
        (micro.rabi_s0, micro.delta_s),
    ]
    .iter()
    .map(|(omega, delta)| micro.gamma_at * omega.norm_sqr() / (4.0 * delta * delta))
    .fold(0.0, f64::max)
}

/// Scale-hierarchy checks behind the two adiabatic eliminations, each reported
/// as a ratio against `threshold` (pass iff ratio ≥ threshold).
pub fn validity_report(micro: &MicroParams, threshold: f64) -> Result<Vec<ValidityCheck>> {
    let cavity = CavityParams::from_micro(micro)?;
    let lambda = cavity.lambda();
    let (gamma_a, gamma_b) = (cavity.gamma_a(), cavity.gamma_b());

    let min_detuning = micro.delta_r.abs().min(micro.delta_s.abs());
    let max_single_atom = [
        micro.rabi_r0,
        micro.rabi_s0,
        micro.rabi_r1,
        micro.g_r0,
        micro.g_s1,
        micro.g_s0,
        micro.g_r1,
    ]
    .iter()
    .map(|z| z.norm())
    .chain(std::iter::once(micro.gamma_at))
    .fold(0.0, f64::max);
    let slow = cavity.lambda_a.max(cavity.lambda_b).max(cavity.omega_0.abs());
    let gamma_sp = spontaneous_emission_rate(micro);

    Ok(vec![
        check(
            "detuning_vs_couplings",
            "min |Delta_r|, |Delta_s| >> single-atom Rabi frequencies, couplings, gamma_at",
            min_detuning,
            max_single_atom,
            threshold,
        ),
        check(
            "cavity_a_elimination",
            "sqrt(kappa_a^2 + delta_a^2) >> lambda_a, lambda_b, |omega_0|",
            cavity.kappa_a.hypot(cavity.delta_a),
            slow,
            threshold,
        ),
        check(
            "cavity_b_elimination",
            "sqrt(kappa_b^2 + delta_b^2) >> lambda_a, lambda_b, |omega_0|",
            cavity.kappa_b.hypot(cavity.delta_b),
            slow,
            threshold,
        ),
        check("kappa_b_vs_delta_b", "kappa_b >> |delta_b|", cavity.kappa_b, cavity.delta_b.abs(), threshold),
        check("delta_a_vs_kappa_a", "delta_a >> kappa_a", cavity.delta_a, cavity.kappa_a, threshold),
        check("gamma_b_vs_gamma_a", "Gamma_b >> Gamma_a", gamma_b, gamma_a, threshold),
        check(
            "spontaneous_vs_lambda",
            "lambda >> gamma_at |Omega|^2 / (4 Delta^2)",
            lambda,
            gamma_sp,
            threshold,
        ),
        check(
            "spontaneous_vs_gamma_b",
            "Gamma_b >> gamma_at |Omega|^2 / (4 Delta^2)",
            gamma_b,
            gamma_sp,
            threshold,
        ),
    ])
}

/// Contents of a parameter file: either the full microscopic scheme or the
/// cavity-level couplings directly.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterSet {
    Micro(MicroParams),
    Cavity(CavityParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFile {
    pub units: Units,
    pub notes: Option<String>,
    pub params: ParameterSet,
}

#[derive(Deserialize)]
struct FileHeader {
    #[serde(default)]
    units: Units,
    #[serde(default)]
    notes: Option<String>,
}

impl ParameterFile {
    /// A document with a `rabi_r0` key is read as [`MicroParams`], anything
    /// else as [`CavityParams`].
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if !value.is_object() {
            return Err(Error::Parse("expected a JSON object at the top level".into()));
        }
        let header: FileHeader = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let params = if value.get("rabi_r0").is_some() {
            ParameterSet::Micro(serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?)
        } else {
            ParameterSet::Cavity(serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?)
        };
        Ok(Self { units: header.units, notes: header.notes, params })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn cavity(&self) -> Result<CavityParams> {
        match &self.params {
            ParameterSet::Micro(m) => CavityParams::from_micro(m),
            ParameterSet::Cavity(c) => {
                c.validate()?;
                Ok(c.clone())
            }
        }
    }

    pub fn effective(&self) -> Result<EffectiveParams> {
        match &self.params {
            ParameterSet::Micro(m) => derive_effective(m),
            ParameterSet::Cavity(c) => EffectiveParams::from_cavity(c),
        }
    }
}

/// The `params` report: effective parameters, critical fields and checks.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub units: Units,
    pub effective: EffectiveParams,
    pub critical_fields: CriticalFieldsReport,
    pub gamma_a_over_lambda: f64,
    pub gamma_b_over_lambda: f64,
    pub h_over_lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spontaneous_emission_rate: Option<f64>,
    pub validity: Vec<ValidityCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalFieldsReport {
    pub exists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_plus: Option<f64>,
}

impl From<CriticalFields> for CriticalFieldsReport {
    fn from(c: CriticalFields) -> Self {
        Self {
            exists: c.exists,
            h_minus: c.exists.then_some(c.h_minus),
            h_plus: c.exists.then_some(c.h_plus),
        }
    }
}

impl ParamsReport {
    pub fn from_file(file: &ParameterFile, threshold: f64) -> Result<Self> {
        let effective = file.effective()?;
        let (validity, spontaneous) = match &file.params {
            ParameterSet::Micro(m) => (validity_report(m, threshold)?, Some(spontaneous_emission_rate(m))),
            ParameterSet::Cavity(c) => {
                let slow = c.lambda_a.max(c.lambda_b).max(c.omega_0.abs());
                let checks = vec![
                    check(
                        "cavity_a_elimination",
                        "sqrt(kappa_a^2 + delta_a^2) >> lambda_a, lambda_b, |omega_0|",
                        c.kappa_a.hypot(c.delta_a),
                        slow,
                        threshold,
                    ),
                    check(
                        "cavity_b_elimination",
                        "sqrt(kappa_b^2 + delta_b^2) >> lambda_a, lambda_b, |omega_0|",
                        c.kappa_b.hypot(c.delta_b),
                        slow,
                        threshold,
                    ),
                    check("kappa_b_vs_delta_b", "kappa_b >> |delta_b|", c.kappa_b, c.delta_b.abs(), threshold),
                    check("delta_a_vs_kappa_a", "delta_a >> kappa_a", c.delta_a, c.kappa_a, threshold),
                    check("gamma_b_vs_gamma_a", "Gamma_b >> Gamma_a", c.gamma_b(), c.gamma_a(), threshold),
                ];
                (checks, None)
            }
        };
        Ok(Self {
            units: file.units,
            critical_fields: effective.critical_fields().into(),
            gamma_a_over_lambda: effective.gamma_a / effective.lambda,
            gamma_b_over_lambda: effective.gamma_b / effective.lambda,
            h_over_lambda: effective.h / effective.lambda,
            effective,
            spontaneous_emission_rate: spontaneous,
            validity,
            notes: file.notes.clone(),
        })
    }
}

mod complex_json {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if z.im == 0.0 {
            s.serialize_f64(z.re)
        } else {
            [z.re, z.im].serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Real(re) => Complex64::new(re, 0.0),
            Repr::Pair([re, im]) => Complex64::new(re, im),
        })
    }
}
