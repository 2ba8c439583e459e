//! One-particle wave packets: a two-component amplitude over momentum space
//! tagged with the basis it is expressed in.
//!
//! States are lazy evaluators. Sampling a state on a grid fills a per-state
//! cache keyed by grid identity, so normalization followed by several
//! reductions on the same grid evaluates the amplitude once per node.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg2::{CompensatedSum, Complex2Vector};
use crate::quadrature::{non_finite_at, GridConfig, Momentum, QuadratureGrid};
use crate::su2::{change_basis, AmplitudePair};

/// Truncation radius in units of the packet width.
pub const WIDTHS_PER_RADIUS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Spin,
    Helicity,
}

impl Basis {
    pub fn other(self) -> Self {
        match self {
            Basis::Spin => Basis::Helicity,
            Basis::Helicity => Basis::Spin,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Spin => "spin",
            Basis::Helicity => "helicity",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape of `p² |ψ(p)|²` in `p`, up to normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLaw {
    /// `p² e^{−p²/τ²}`: the magnitude of a normal triple with per-axis std `τ/√2`.
    Gaussian { tau: f64 },
    /// `p^{shape−1} e^{−p/scale}`.
    Erlang { shape: u32, scale: f64 },
    /// `p²` on `(inner, outer)`.
    Shell { inner: f64, outer: f64 },
}

/// Shape of the angular density of `|ψ|²` on the sphere, up to normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularLaw {
    Isotropic,
    /// `1 + α cosθ`, uniform in φ.
    Linear { alpha: f64 },
}

/// The distribution `|ψ|² d³p / ‖ψ‖²`, factored as radial × angular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumLaw {
    pub radial: RadialLaw,
    pub angular: AngularLaw,
}

/// A closed-form amplitude over momentum space.
pub trait AmplitudeField: Send + Sync + fmt::Debug {
    fn amplitude(&self, k: &Momentum) -> Complex2Vector;

    /// The exact distribution of `|ψ|² d³p`, when known in closed form.
    fn sampling_law(&self) -> Option<MomentumLaw> {
        None
    }

    /// Momentum radius beyond which the packet is negligible.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

fn gaussian_prefactor(tau: f64) -> f64 {
    PI.powf(-0.75) * tau.powf(-1.5)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("width tau must be positive and finite, got {tau}")))
    }
}

/// `π^{−3/4} τ^{−3/2} e^{−p²/(2τ²)}` times a fixed unit spinor.
#[derive(Debug, Clone)]
pub struct IsotropicGaussian {
    tau: f64,
    prefactor: f64,
    spinor: Complex2Vector,
}

impl AmplitudeField for IsotropicGaussian {
    fn amplitude(&self, k: &Momentum) -> Complex2Vector {
        let g = self.prefactor * (-0.5 * (k.p / self.tau).powi(2)).exp();
        self.spinor.scale_real(g)
    }

    fn sampling_law(&self) -> Option<MomentumLaw> {
        Some(MomentumLaw { radial: RadialLaw::Gaussian { tau: self.tau }, angular: AngularLaw::Isotropic })
    }

    fn support_radius(&self) -> Option<f64> {
        Some(WIDTHS_PER_RADIUS * self.tau)
    }
}

/// Up-component `√(1 + α cosθ)` times the normalized Gaussian; down-component zero.
#[derive(Debug, Clone)]
pub struct AnisotropicGaussian {
    tau: f64,
    alpha: f64,
    prefactor: f64,
}

impl AmplitudeField for AnisotropicGaussian {
    fn amplitude(&self, k: &Momentum) -> Complex2Vector {
        let angular = (1.0 + self.alpha * k.theta.cos()).max(0.0).sqrt();
        let g = self.prefactor * (-0.5 * (k.p / self.tau).powi(2)).exp();
        Complex2Vector::new(Complex64::new(angular * g, 0.0), Complex64::new(0.0, 0.0))
    }

    fn sampling_law(&self) -> Option<MomentumLaw> {
        Some(MomentumLaw {
            radial: RadialLaw::Gaussian { tau: self.tau },
            angular: AngularLaw::Linear { alpha: self.alpha },
        })
    }

    fn support_radius(&self) -> Option<f64> {
        Some(WIDTHS_PER_RADIUS * self.tau)
    }
}

/// Radial profile `f(p)` of a direction-independent amplitude.
#[derive(Clone)]
pub enum RadialProfile {
    /// `e^{−p²/(2w²)}`.
    Gaussian { width: f64 },
    /// `p e^{−p/s}`.
    LinearExponential { scale: f64 },
    /// Indicator of `p ∈ (inner, outer)`.
    Shell { inner: f64, outer: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { width } => f.debug_struct("Gaussian").field("width", width).finish(),
            Self::LinearExponential { scale } => f.debug_struct("LinearExponential").field("scale", scale).finish(),
            Self::Shell { inner, outer } => f.debug_struct("Shell").field("inner", inner).field("outer", outer).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl RadialProfile {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Self::Gaussian { width } => (-0.5 * (p / width).powi(2)).exp(),
            Self::LinearExponential { scale } => p * (-p / scale).exp(),
            Self::Shell { inner, outer } => {
                if p > *inner && p < *outer {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Custom(f) => f(p),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { width } => check_tau(width),
            Self::LinearExponential { scale } => check_tau(scale),
            Self::Shell { inner, outer } => {
                if !(inner.is_finite() && outer.is_finite() && inner >= 0.0) {
                    Err(Error::Config(format!("shell bounds must be finite and non-negative, got ({inner}, {outer})")))
                } else if outer <= inner {
                    Err(Error::Degenerate(format!("empty shell ({inner}, {outer})")))
                } else {
                    Ok(())
                }
            }
            Self::Custom(_) => Ok(()),
        }
    }

    /// `∫ |f(p)|² d³p`, when available in closed form.
    pub fn analytic_norm_squared(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { width } => Some(PI.powf(1.5) * width.powi(3)),
            // 4π ∫ p⁴ e^{−2p/s} dp = 4π · 4! (s/2)⁵
            Self::LinearExponential { scale } => Some(3.0 * PI * scale.powi(5)),
            Self::Shell { inner, outer } => Some(4.0 * PI * (outer.powi(3) - inner.powi(3)) / 3.0),
            Self::Custom(_) => None,
        }
    }

    fn radial_law(&self) -> Option<RadialLaw> {
        match *self {
            Self::Gaussian { width } => Some(RadialLaw::Gaussian { tau: width }),
            Self::LinearExponential { scale } => Some(RadialLaw::Erlang { shape: 5, scale: 0.5 * scale }),
            Self::Shell { inner, outer } => Some(RadialLaw::Shell { inner, outer }),
            Self::Custom(_) => None,
        }
    }

    fn support_radius(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { width } => Some(WIDTHS_PER_RADIUS * width),
            // |f|² decays like e^{−2p/s}; the tail beyond 40 s is below 1e-25 of the norm
            Self::LinearExponential { scale } => Some(40.0 * scale),
            Self::Shell { outer, .. } => Some(outer),
            Self::Custom(_) => None,
        }
    }
}

/// Up-component `c · f(p) · e^{ikφ}`, down-component zero.
#[derive(Debug, Clone)]
pub struct ThetaIndependent {
    profile: RadialProfile,
    phase_k: i32,
    prefactor: f64,
}

impl AmplitudeField for ThetaIndependent {
    fn amplitude(&self, k: &Momentum) -> Complex2Vector {
        let r = self.prefactor * self.profile.eval(k.p);
        let up = if self.phase_k == 0 {
            Complex64::new(r, 0.0)
        } else {
            Complex64::from_polar(r, self.phase_k as f64 * k.phi)
        };
        Complex2Vector::new(up, Complex64::new(0.0, 0.0))
    }

    fn sampling_law(&self) -> Option<MomentumLaw> {
        self.profile.radial_law().map(|radial| MomentumLaw { radial, angular: AngularLaw::Isotropic })
    }

    fn support_radius(&self) -> Option<f64> {
        self.profile.support_radius()
    }
}

/// Another field re-expressed in the opposite basis, momentum by momentum.
#[derive(Debug)]
struct BasisChanged {
    inner: Arc<dyn AmplitudeField>,
    from: Basis,
    to: Basis,
}

impl AmplitudeField for BasisChanged {
    fn amplitude(&self, k: &Momentum) -> Complex2Vector {
        change_basis(&self.inner.amplitude(k), self.from, self.to, k.theta, k.phi)
    }

    // The basis change is unitary per momentum, so |ψ|² is unchanged.
    fn sampling_law(&self) -> Option<MomentumLaw> {
        self.inner.sampling_law()
    }

    fn support_radius(&self) -> Option<f64> {
        self.inner.support_radius()
    }
}

/// Raw amplitude samples per grid. Concurrent fills of the same grid compute
/// identical values; the first insert wins.
#[derive(Debug, Default)]
struct SampleCache {
    by_grid: Mutex<HashMap<u64, Arc<[Complex2Vector]>>>,
}

#[derive(Clone)]
pub struct OneParticleState {
    basis: Basis,
    field: Arc<dyn AmplitudeField>,
    label: String,
    params: BTreeMap<String, f64>,
    scale: f64,
    cache: Arc<SampleCache>,
}

impl fmt::Debug for OneParticleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OneParticleState")
            .field("basis", &self.basis)
            .field("label", &self.label)
            .field("params", &self.params)
            .field("scale", &self.scale)
            .field("field", &self.field)
            .finish()
    }
}

impl OneParticleState {
    /// Wraps an arbitrary amplitude field.
    pub fn from_field(basis: Basis, field: Arc<dyn AmplitudeField>, label: impl Into<String>) -> Self {
        Self {
            basis,
            field,
            label: label.into(),
            params: BTreeMap::new(),
            scale: 1.0,
            cache: Arc::default(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_owned(), value);
        self
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Overall real factor applied on top of the field (set by [`normalize`]).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn field(&self) -> &Arc<dyn AmplitudeField> {
        &self.field
    }

    pub fn sampling_law(&self) -> Option<MomentumLaw> {
        self.field.sampling_law()
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.field.support_radius()
    }

    /// Default grid for this state: default node counts, truncation at the
    /// state's support radius (or 8 momentum units when unknown).
    pub fn default_grid_config(&self) -> GridConfig {
        GridConfig::with_defaults(self.support_radius().unwrap_or(WIDTHS_PER_RADIUS))
    }

    pub fn amplitude(&self, k: &Momentum) -> AmplitudePair {
        AmplitudePair { basis: self.basis, amplitudes: self.field.amplitude(k).scale_real(self.scale) }
    }

    /// Unscaled field values at every node of `grid`, in node order.
    pub fn raw_samples(&self, grid: &QuadratureGrid) -> Result<Arc<[Complex2Vector]>> {
        if let Some(hit) = self.cache.by_grid.lock().expect("sample cache poisoned").get(&grid.id()) {
            return Ok(hit.clone());
        }
        let values: Vec<Complex2Vector> =
            grid.nodes().par_iter().map(|n| self.field.amplitude(&n.momentum)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(non_finite_at(&grid.nodes()[i]));
        }
        let values: Arc<[Complex2Vector]> = values.into();
        let mut map = self.cache.by_grid.lock().expect("sample cache poisoned");
        Ok(map.entry(grid.id()).or_insert(values).clone())
    }

    /// The same physical state with amplitudes expressed in `target`.
    pub fn in_basis(&self, target: Basis) -> Self {
        if target == self.basis {
            return self.clone();
        }
        Self {
            basis: target,
            field: Arc::new(BasisChanged { inner: self.field.clone(), from: self.basis, to: target }),
            label: format!("{} [{} basis]", self.label, target),
            params: self.params.clone(),
            scale: self.scale,
            cache: Arc::default(),
        }
    }

    /// Multiplies every amplitude by a positive real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { scale: self.scale * factor, ..self.clone() }
    }
}

/// `∫ d³p (|ψ₊|² + |ψ₋|²)` on `grid`.
pub fn norm_squared(s: &OneParticleState, grid: &QuadratureGrid) -> Result<f64> {
    let samples = s.raw_samples(grid)?;
    let shell = grid.shell_len();
    let partials: Vec<CompensatedSum> = grid
        .nodes()
        .par_chunks(shell)
        .zip(samples.par_chunks(shell))
        .map(|(nodes, values)| {
            let mut acc = CompensatedSum::default();
            for (n, v) in nodes.iter().zip(values) {
                acc.add(n.weight * v.norm_sqr());
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::default();
    partials.iter().for_each(|p| total.merge(p));
    Ok(total.value() * s.scale * s.scale)
}

/// Rescales `s` to unit norm on `grid`.
pub fn normalize(s: &OneParticleState, grid: &QuadratureGrid) -> Result<OneParticleState> {
    let n = norm_squared(s, grid)?;
    if !n.is_finite() {
        return Err(Error::Numerical(format!("norm of '{}' is not finite", s.label)));
    }
    if n <= f64::MIN_POSITIVE {
        return Err(Error::Degenerate(format!("state '{}' has zero norm on this grid", s.label)));
    }
    Ok(s.scaled(1.0 / n.sqrt()))
}

/// Normalized isotropic Gaussian packet times a fixed spinor in `basis`.
pub fn gaussian_spinor(basis: Basis, tau: f64, spinor: Complex2Vector) -> Result<OneParticleState> {
    check_tau(tau)?;
    spinor.ensure_finite()?;
    let n = spinor.norm_sqr();
    if n <= f64::MIN_POSITIVE {
        return Err(Error::Degenerate("spinor must be nonzero".into()));
    }
    let field = IsotropicGaussian { tau, prefactor: gaussian_prefactor(tau), spinor: spinor.scale_real(1.0 / n.sqrt()) };
    Ok(OneParticleState::from_field(basis, Arc::new(field), format!("gaussian_spinor[{basis}]")).with_param("tau", tau))
}

/// Spin-up along z with the normalized Gaussian `π^{−3/4} τ^{−3/2} e^{−p²/(2τ²)}`.
pub fn gaussian_spin_up(tau: f64) -> Result<OneParticleState> {
    let mut s = gaussian_spinor(Basis::Spin, tau, Complex2Vector::from_real(1.0, 0.0))?;
    s.label = "gaussian_spin_up".into();
    Ok(s)
}

/// Helicity `+1/2` with the same normalized Gaussian.
pub fn gaussian_helicity_up(tau: f64) -> Result<OneParticleState> {
    let mut s = gaussian_spinor(Basis::Helicity, tau, Complex2Vector::from_real(1.0, 0.0))?;
    s.label = "gaussian_helicity_up".into();
    Ok(s)
}

/// Spin-up with amplitude `f(p) e^{ikφ}` and no θ dependence.
///
/// Built-in profiles are pre-scaled by their closed-form norm; custom
/// profiles are not and must be normalized on a grid before reduction.
pub fn theta_independent_spin_up(profile: RadialProfile, phase_k: i32) -> Result<OneParticleState> {
    profile.validate()?;
    let prefactor = match profile.analytic_norm_squared() {
        Some(n) => 1.0 / n.sqrt(),
        None => 1.0,
    };
    let desc = format!("{profile:?}");
    let field = ThetaIndependent { profile, phase_k, prefactor };
    Ok(OneParticleState::from_field(Basis::Spin, Arc::new(field), format!("theta_independent_spin_up {desc}"))
        .with_param("phase_k", phase_k as f64))
}

/// Spin-up with `|ψ|² ∝ (1 + α cosθ) e^{−p²/τ²}`, normalized; `α = 0` is [`gaussian_spin_up`].
pub fn anisotropic_spin_up(tau: f64, alpha: f64) -> Result<OneParticleState> {
    check_tau(tau)?;
    if !(alpha.is_finite() && alpha.abs() <= 1.0) {
        return Err(Error::Config(format!("anisotropy alpha must lie in [-1, 1], got {alpha}")));
    }
    // ∫(1 + α cosθ) dΩ = 4π, so the isotropic prefactor still normalizes
    let field = AnisotropicGaussian { tau, alpha, prefactor: gaussian_prefactor(tau) };
    Ok(OneParticleState::from_field(Basis::Spin, Arc::new(field), "anisotropic_spin_up")
        .with_param("tau", tau)
        .with_param("alpha", alpha))
}
