//! Closed-form spectrum of 2×2 Hermitian matrices and base-2 von Neumann entropy.

use crate::density::DensityMatrix2;
use crate::error::{Error, Result};
use crate::linalg2::Complex2Matrix;

/// Slightly negative eigenvalues down to this bound are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// Descending, clamped to `[0, 1]`.
    pub eigenvalues: [f64; 2],
    pub entropy_bits: f64,
}

/// Eigenvalues of a Hermitian 2×2 matrix, descending:
/// `tr/2 ± √((Δ/2)² + |m₀₁|²)` with `Δ = m₀₀ − m₁₁`.
pub fn eigenvalues_hermitian2(m: &Complex2Matrix) -> Result<(f64, f64)> {
    m.ensure_finite()?;
    let defect = m.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::Contract(format!("matrix is not Hermitian (defect {defect:e})")));
    }
    let a = m.m[0][0].re;
    let d = m.m[1][1].re;
    let b = 0.5 * (m.m[0][1] + m.m[1][0].conj());
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b.norm());
    Ok((mean + radius, mean - radius))
}

fn h2(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// `S = −Σ λ log₂ λ`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix2) -> Result<EntropyReport> {
    let (hi, lo) = eigenvalues_hermitian2(rho.matrix())?;
    for l in [hi, lo] {
        if l < -CLAMP_TOL {
            return Err(Error::Numerical(format!("eigenvalue {l:e} is negative beyond tolerance")));
        }
    }
    let clamp = |l: f64| l.clamp(0.0, 1.0);
    let eigenvalues = [clamp(hi), clamp(lo)];
    let entropy_bits = (h2(eigenvalues[0]) + h2(eigenvalues[1])).clamp(0.0, 1.0);
    Ok(EntropyReport { eigenvalues, entropy_bits })
}

/// Binary entropy of the spectrum `(x, 1 − x)`.
pub fn binary_entropy(x: f64) -> f64 {
    h2(x) + h2(1.0 - x)
}
