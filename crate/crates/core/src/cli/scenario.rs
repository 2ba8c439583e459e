//! Scenario file schema (TOML) and its translation into library objects.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::linalg2::{Complex2Matrix, Complex2Vector};
use crate::quadrature::{GridConfig, PolarRule, DEFAULT_N_PHI, DEFAULT_N_R, DEFAULT_N_THETA};
use crate::states::{self, Basis, OneParticleState, RadialProfile};
use crate::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub state: FamilySpec,
    #[serde(default)]
    pub grid: GridSpec,
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    GaussianSpinUp { tau: f64 },
    GaussianHelicityUp { tau: f64 },
    /// Isotropic Gaussian times a fixed spinor `(up, down)`, each given as `[re, im]`.
    GaussianSpinor { tau: f64, basis: Basis, up: [f64; 2], down: [f64; 2] },
    ThetaIndependentSpinUp {
        profile: ProfileSpec,
        #[serde(default)]
        phase_k: i32,
    },
    AnisotropicSpinUp { tau: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Gaussian { width: f64 },
    LinearExponential { scale: f64 },
    Shell { inner: f64, outer: f64 },
}

impl ProfileSpec {
    pub fn to_profile(self) -> RadialProfile {
        match self {
            Self::Gaussian { width } => RadialProfile::Gaussian { width },
            Self::LinearExponential { scale } => RadialProfile::LinearExponential { scale },
            Self::Shell { inner, outer } => RadialProfile::Shell { inner, outer },
        }
    }
}

impl FamilySpec {
    pub fn build(&self) -> crate::Result<OneParticleState> {
        match *self {
            Self::GaussianSpinUp { tau } => states::gaussian_spin_up(tau),
            Self::GaussianHelicityUp { tau } => states::gaussian_helicity_up(tau),
            Self::GaussianSpinor { tau, basis, up, down } => {
                let v = Complex2Vector::new(Complex64::new(up[0], up[1]), Complex64::new(down[0], down[1]));
                states::gaussian_spinor(basis, tau, v)
            }
            Self::ThetaIndependentSpinUp { profile, phase_k } => {
                states::theta_independent_spin_up(profile.to_profile(), phase_k)
            }
            Self::AnisotropicSpinUp { tau, alpha } => states::anisotropic_spin_up(tau, alpha),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::AnisotropicSpinUp { alpha, .. } => Some(alpha),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_phi: Option<usize>,
    /// Defaults to the state's support radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar_rule: Option<PolarRule>,
}

impl GridSpec {
    pub fn resolve(&self, state: &OneParticleState) -> GridConfig {
        let fallback = state.default_grid_config();
        GridConfig {
            n_r: self.n_r.unwrap_or(DEFAULT_N_R),
            n_theta: self.n_theta.unwrap_or(DEFAULT_N_THETA),
            n_phi: self.n_phi.unwrap_or(DEFAULT_N_PHI),
            r_max: self.r_max.unwrap_or(fallback.r_max),
            polar_rule: self.polar_rule.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    SpinDensity,
    HelicityDensity,
    SpinEntropy,
    HelicityEntropy,
}

impl Output {
    pub fn basis(self) -> Basis {
        match self {
            Self::SpinDensity | Self::SpinEntropy => Basis::Spin,
            Self::HelicityDensity | Self::HelicityEntropy => Basis::Helicity,
        }
    }

    pub fn is_density(self) -> bool {
        matches!(self, Self::SpinDensity | Self::HelicityDensity)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SpinDensity => "spin_density",
            Self::HelicityDensity => "helicity_density",
            Self::SpinEntropy => "spin_entropy",
            Self::HelicityEntropy => "helicity_entropy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleName {
    /// `[[1/2, −π/8], [−π/8, 1/2]]`, helicity basis.
    ThetaIndependentHelicity,
    /// `I/2`, spin basis.
    IsotropicHelicitySpin,
    /// Anisotropic helicity matrix at the scenario's `alpha`.
    AnisotropicHelicity,
    /// Entropy of the spectrum `1/2 ± π/8`.
    Eq11Entropy,
    /// Entropy of the anisotropic helicity matrix at the scenario's `alpha`.
    AnisotropicEntropy,
}

impl OracleName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ThetaIndependentHelicity => "theta_independent_helicity",
            Self::IsotropicHelicitySpin => "isotropic_helicity_spin",
            Self::AnisotropicHelicity => "anisotropic_helicity",
            Self::Eq11Entropy => "eq11_entropy",
            Self::AnisotropicEntropy => "anisotropic_entropy",
        }
    }

    fn is_matrix(self) -> bool {
        matches!(self, Self::ThetaIndependentHelicity | Self::IsotropicHelicitySpin | Self::AnisotropicHelicity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub quantity: Output,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Row-major entries as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 4]>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

fn default_sigmas() -> f64 {
    4.0
}

pub fn matrix_from_pairs(m: &[[f64; 2]; 4]) -> Complex2Matrix {
    let c = |k: usize| Complex64::new(m[k][0], m[k][1]);
    Complex2Matrix::new([[c(0), c(1)], [c(2), c(3)]])
}

impl Scenario {
    /// Parses and validates scenario text; `origin` prefixes diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        scenario.validate().map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        Ok(scenario)
    }

    pub fn from_value(value: toml::Value, origin: &str) -> Result<Self, CliError> {
        let scenario: Scenario = value.try_into().map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        scenario.validate().map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "field `schema_version`: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        if self.name.trim().is_empty() {
            return Err("field `name`: must not be empty".into());
        }
        if self.outputs.is_empty() {
            return Err("field `outputs`: at least one output is required".into());
        }
        for (i, c) in self.checks.iter().enumerate() {
            let at = format!("field `checks[{i}]`");
            if !(c.tolerance.is_finite() && c.tolerance > 0.0) {
                return Err(format!("{at}.tolerance: must be positive, got {}", c.tolerance));
            }
            if !self.outputs.contains(&c.quantity) {
                return Err(format!("{at}.quantity: `{}` is not listed in `outputs`", c.quantity.as_str()));
            }
            let given = [c.oracle.is_some(), c.value.is_some(), c.matrix.is_some()].iter().filter(|b| **b).count();
            if given != 1 {
                return Err(format!("{at}: exactly one of `oracle`, `value`, `matrix` is required"));
            }
            if let Some(o) = c.oracle {
                if o.is_matrix() != c.quantity.is_density() {
                    return Err(format!("{at}.oracle: `{}` does not apply to `{}`", o.as_str(), c.quantity.as_str()));
                }
                if matches!(o, OracleName::AnisotropicHelicity | OracleName::AnisotropicEntropy) && self.state.alpha().is_none() {
                    return Err(format!("{at}.oracle: anisotropic oracles need family `anisotropic_spin_up`"));
                }
            }
            if c.value.is_some() && c.quantity.is_density() {
                return Err(format!("{at}.value: density checks take `oracle` or `matrix`"));
            }
            if c.matrix.is_some() && !c.quantity.is_density() {
                return Err(format!("{at}.matrix: entropy checks take `oracle` or `value`"));
            }
        }
        if let Some(mc) = &self.mc {
            if !(mc.sigmas.is_finite() && mc.sigmas > 0.0) {
                return Err(format!("field `mc.sigmas`: must be positive, got {}", mc.sigmas));
            }
        }
        Ok(())
    }
}

/// Kind of a bundled input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundledKind {
    Scenario,
    Sweep,
}

pub struct Bundled {
    pub name: &'static str,
    pub kind: BundledKind,
    pub text: &'static str,
}

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "eq10_theta_independent",
        kind: BundledKind::Scenario,
        text: include_str!("../../scenarios/eq10_theta_independent.toml"),
    },
    Bundled { name: "eq11_entropy", kind: BundledKind::Scenario, text: include_str!("../../scenarios/eq11_entropy.toml") },
    Bundled { name: "eq12_tau_sweep", kind: BundledKind::Sweep, text: include_str!("../../scenarios/eq12_tau_sweep.toml") },
    Bundled {
        name: "eq15_isotropic_helicity",
        kind: BundledKind::Scenario,
        text: include_str!("../../scenarios/eq15_isotropic_helicity.toml"),
    },
    Bundled {
        name: "anisotropy_alpha1",
        kind: BundledKind::Scenario,
        text: include_str!("../../scenarios/anisotropy_alpha1.toml"),
    },
    Bundled {
        name: "anisotropy_alpha_sweep",
        kind: BundledKind::Sweep,
        text: include_str!("../../scenarios/anisotropy_alpha_sweep.toml"),
    },
];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

/// Reads `spec` as a file path, falling back to a bundled input of that name.
pub fn load_text(spec: &str, want: BundledKind) -> Result<(String, String), CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: cannot read: {e}", path.display())))?;
        return Ok((text, path.display().to_string()));
    }
    match bundled(spec) {
        Some(b) if b.kind == want => Ok((b.text.to_owned(), format!("<bundled:{}>", b.name))),
        Some(b) => Err(CliError::Input(format!("bundled input `{}` is a {:?}, not a {want:?}", b.name, b.kind))),
        None => Err(CliError::Input(format!("{spec}: no such file or bundled input"))),
    }
}
