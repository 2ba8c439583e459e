//! The spin-1/2 rotation carrying the z axis onto a momentum direction, and
//! the spin ↔ helicity amplitude maps it induces.
//!
//! With `p̂ = (sinθ cosφ, sinθ sinφ, cosθ)`,
//!
//! ```text
//! D(θ, φ) = diag(e^{-iφ/2}, e^{iφ/2}) · [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]
//! ```
//!
//! Rows are indexed by spin projection σ, columns by helicity λ, so
//! `|p; λ⟩ = Σ_σ D_{σλ} |p, σ⟩`. Helicity amplitudes follow as
//! `ψ'_λ = Σ_σ (D⁻¹)_{λσ} ψ_σ` with `D⁻¹ = D†`.
//!
//! At θ = 0 or π the azimuth is not determined by `p̂`; the formula is still
//! evaluated literally there and the resulting phase is a convention.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg2::{Complex2Matrix, Complex2Vector};
use crate::quadrature::{check_angles, Momentum};
use crate::states::Basis;

/// Unitary, unit-determinant 2×2 matrix `D[R(p)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix2(Complex2Matrix);

impl RotationMatrix2 {
    pub fn matrix(&self) -> &Complex2Matrix {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `D · v`.
    pub fn apply(&self, v: &Complex2Vector) -> Complex2Vector {
        self.0.apply(v)
    }

    /// `D⁻¹ · v`, via the adjoint.
    pub fn apply_inverse(&self, v: &Complex2Vector) -> Complex2Vector {
        self.0.apply_adjoint(v)
    }

    /// `D · M · D†`.
    pub fn conjugate(&self, m: &Complex2Matrix) -> Complex2Matrix {
        self.0.matmul(m).matmul(&self.0.adjoint())
    }
}

/// `D[R(p)]` for polar angle `theta ∈ [0, π]` and azimuth `phi ∈ [0, 2π)`.
pub fn wigner_rotation(theta: f64, phi: f64) -> Result<RotationMatrix2> {
    check_angles(theta, phi)?;
    Ok(rotation_unchecked(theta, phi))
}

pub(crate) fn rotation_unchecked(theta: f64, phi: f64) -> RotationMatrix2 {
    let (s, c) = (0.5 * theta).sin_cos();
    let left = Complex64::from_polar(1.0, -0.5 * phi);
    let right = Complex64::from_polar(1.0, 0.5 * phi);
    RotationMatrix2(Complex2Matrix::new([
        [left * c, -left * s],
        [right * s, right * c],
    ]))
}

/// Two amplitudes at one momentum, tagged with the basis they refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair {
    pub basis: Basis,
    pub amplitudes: Complex2Vector,
}

impl AmplitudePair {
    pub fn new(basis: Basis, up: Complex64, down: Complex64) -> Result<Self> {
        Ok(Self { basis, amplitudes: Complex2Vector::try_new(up, down)? })
    }

    pub fn spin(amplitudes: Complex2Vector) -> Self {
        Self { basis: Basis::Spin, amplitudes }
    }

    pub fn helicity(amplitudes: Complex2Vector) -> Self {
        Self { basis: Basis::Helicity, amplitudes }
    }

    pub fn up(&self) -> Complex64 {
        self.amplitudes.up
    }

    pub fn down(&self) -> Complex64 {
        self.amplitudes.down
    }
}

/// Spin amplitudes → helicity amplitudes at momentum direction `dir`.
pub fn spin_to_helicity(a: &AmplitudePair, dir: &Momentum) -> Result<AmplitudePair> {
    expect_basis(a, Basis::Spin)?;
    let d = wigner_rotation(dir.theta, dir.phi)?;
    Ok(AmplitudePair::helicity(d.apply_inverse(&a.amplitudes)))
}

/// Helicity amplitudes → spin amplitudes at momentum direction `dir`.
pub fn helicity_to_spin(a: &AmplitudePair, dir: &Momentum) -> Result<AmplitudePair> {
    expect_basis(a, Basis::Helicity)?;
    let d = wigner_rotation(dir.theta, dir.phi)?;
    Ok(AmplitudePair::spin(d.apply(&a.amplitudes)))
}

/// Re-expresses raw amplitudes in `to`, given that they are in `from`.
pub(crate) fn change_basis(v: &Complex2Vector, from: Basis, to: Basis, theta: f64, phi: f64) -> Complex2Vector {
    match (from, to) {
        (Basis::Spin, Basis::Helicity) => rotation_unchecked(theta, phi).apply_inverse(v),
        (Basis::Helicity, Basis::Spin) => rotation_unchecked(theta, phi).apply(v),
        _ => *v,
    }
}

fn expect_basis(a: &AmplitudePair, want: Basis) -> Result<()> {
    if a.basis == want {
        Ok(())
    } else {
        Err(Error::Contract(format!("expected {want} amplitudes, got {}", a.basis)))
    }
}

/// `(σx, σy, σz)`.
pub fn pauli() -> [Complex2Matrix; 3] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        Complex2Matrix::new([[z, one], [one, z]]),
        Complex2Matrix::new([[z, -i], [i, z]]),
        Complex2Matrix::new([[one, z], [z, -one]]),
    ]
}

/// `p̂ · σ⃗ / 2`, the helicity operator in the spin basis.
pub fn helicity_operator(dir: &Momentum) -> Complex2Matrix {
    let n = dir.direction();
    let [sx, sy, sz] = pauli();
    (sx.scale_real(n[0]) + sy.scale_real(n[1]) + sz.scale_real(n[2])).scale_real(0.5)
}
