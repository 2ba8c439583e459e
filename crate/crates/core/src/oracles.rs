//! Reference results independent of the quadrature path.
//!
//! The closed forms come from doing the angular integrals by hand:
//! for a θ-independent spin-up packet the helicity integrand is
//! `[[1 + cosθ, −sinθ], [−sinθ, 1 − cosθ]] / 2`, whose solid-angle average is
//! `⟨cosθ⟩ = 0`, `⟨sinθ⟩ = π/4`. Under the angular weight `1 + α cosθ` the
//! average of `cosθ` becomes `α/3` while that of `sinθ` stays `π/4`.
//!
//! [`mc_density`] estimates the same reductions by importance sampling from
//! `|ψ|² d³p`, using a counter-based random stream so that any sample can be
//! drawn independently of the others.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::density::DensityMatrix2;
use crate::entropy::binary_entropy;
use crate::error::{Error, Result};
use crate::linalg2::{outer, CompensatedSum, Complex2Matrix, MatrixAccumulator};
use crate::quadrature::Momentum;
use crate::states::{AngularLaw, Basis, MomentumLaw, OneParticleState, RadialLaw};
use crate::su2::change_basis;

pub const MIN_MC_SAMPLES: usize = 100;
/// 32-bit stream words reserved per sample (8 uniforms).
const WORDS_PER_SAMPLE: u128 = 16;
/// Fixed summation block; results do not depend on how blocks are scheduled.
const BLOCK: usize = 4096;

/// `[[1/2, −π/8], [−π/8, 1/2]]` in the helicity basis.
pub fn oracle_helicity_matrix_theta_independent() -> DensityMatrix2 {
    oracle_helicity_matrix_anisotropic(0.0).expect("alpha = 0 is valid")
}

/// Helicity density of the spin-up packet with angular weight `1 + α cosθ`:
/// `[[(1 + α/3)/2, −π/8], [−π/8, (1 − α/3)/2]]`.
pub fn oracle_helicity_matrix_anisotropic(alpha: f64) -> Result<DensityMatrix2> {
    if !(alpha.is_finite() && alpha.abs() <= 1.0) {
        return Err(Error::Config(format!("anisotropy alpha must lie in [-1, 1], got {alpha}")));
    }
    let c = alpha / 3.0;
    let off = -PI / 8.0;
    DensityMatrix2::new(Basis::Helicity, Complex2Matrix::from_real([[0.5 * (1.0 + c), off], [off, 0.5 * (1.0 - c)]]))
}

/// `I/2` in the spin basis: the isotropic helicity-up packet.
pub fn oracle_spin_matrix_isotropic_helicity() -> DensityMatrix2 {
    DensityMatrix2::new(Basis::Spin, Complex2Matrix::diag(0.5, 0.5)).expect("I/2 is a valid density matrix")
}

/// Entropy of the spectrum `1/2 ± π/8`.
pub fn oracle_entropy_eq11() -> f64 {
    let hi = 0.5 + PI / 8.0;
    let lo = 0.5 - PI / 8.0;
    -(hi * hi.log2() + lo * lo.log2())
}

/// Entropy of the anisotropic helicity oracle.
pub fn oracle_entropy_anisotropic(alpha: f64) -> Result<f64> {
    let rho = oracle_helicity_matrix_anisotropic(alpha)?;
    let m = rho.matrix();
    let (a, d, b) = (m.m[0][0].re, m.m[1][1].re, m.m[0][1].norm());
    let hi = 0.5 * (a + d) + (0.5 * (a - d)).hypot(b);
    Ok(binary_entropy(hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub basis: Basis,
    pub value: Complex2Matrix,
    /// Standard error of each complex entry: `√((Var re + Var im) / n)`.
    pub std_error: [[f64; 2]; 2],
    pub n_samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Largest entrywise `|reference − value| − sigmas · std_error`; non-positive means agreement.
    pub fn excess_over(&self, reference: &Complex2Matrix, sigmas: f64) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..2 {
            for j in 0..2 {
                let dev = (reference.m[i][j] - self.value.m[i][j]).norm();
                worst = worst.max(dev - sigmas * self.std_error[i][j]);
            }
        }
        worst
    }

    /// Entrywise `|reference − value| ≤ sigmas · std_error + floor`.
    ///
    /// `floor` covers entries whose per-sample value is constant
    /// (zero variance), where only roundoff separates the two routes.
    pub fn agrees_with(&self, reference: &Complex2Matrix, sigmas: f64, floor: f64) -> bool {
        self.excess_over(reference, sigmas) <= floor
    }
}

struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    fn at(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(index as u128 * WORDS_PER_SAMPLE);
        Self { rng }
    }

    /// Uniform on [0, 1).
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1].
    fn uniform_open(&mut self) -> f64 {
        1.0 - self.uniform()
    }
}

fn sample_radius(law: &RadialLaw, s: &mut Stream) -> f64 {
    match *law {
        RadialLaw::Gaussian { tau } => {
            let (u1, u2, u3, u4) = (s.uniform_open(), s.uniform(), s.uniform_open(), s.uniform());
            let r1 = (-2.0 * u1.ln()).sqrt();
            let r2 = (-2.0 * u3.ln()).sqrt();
            let (s2, c2) = (2.0 * PI * u2).sin_cos();
            let n = [r1 * c2, r1 * s2, r2 * (2.0 * PI * u4).cos()];
            let sigma = tau / 2f64.sqrt();
            sigma * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
        }
        RadialLaw::Erlang { shape, scale } => {
            let mut acc = 0.0;
            for _ in 0..shape {
                acc -= s.uniform_open().ln();
            }
            scale * acc
        }
        RadialLaw::Shell { inner, outer } => {
            let u = s.uniform();
            let (a3, b3) = (inner.powi(3), outer.powi(3));
            (a3 + u * (b3 - a3)).cbrt()
        }
    }
}

fn sample_cos_theta(law: &AngularLaw, u: f64) -> f64 {
    match *law {
        AngularLaw::Isotropic => 2.0 * u - 1.0,
        AngularLaw::Linear { alpha } => {
            // CDF of (1 + αx)/2 on [−1, 1]: α x² + 2x + (2 − α − 4u) = 0
            let c = 2.0 - alpha - 4.0 * u;
            let disc = (1.0 - alpha * c).max(0.0);
            -c / (1.0 + disc.sqrt())
        }
    }
}

fn sample_momentum(law: &MomentumLaw, seed: u64, index: u64) -> Momentum {
    let mut s = Stream::at(seed, index);
    let p = sample_radius(&law.radial, &mut s);
    // angular uniforms always come from the last two of the eight reserved draws
    s.rng.set_word_pos(index as u128 * WORDS_PER_SAMPLE + 12);
    let cos_theta = sample_cos_theta(&law.angular, s.uniform()).clamp(-1.0, 1.0);
    let phi = 2.0 * PI * s.uniform();
    Momentum { p, theta: cos_theta.acos(), phi }
}

fn check_law(law: &MomentumLaw) -> Result<()> {
    if let RadialLaw::Erlang { shape, .. } = law.radial {
        if !(1..=6).contains(&shape) {
            return Err(Error::Config(format!("Erlang shape {shape} exceeds the per-sample stream budget")));
        }
    }
    Ok(())
}

#[derive(Default)]
struct BlockSums {
    sum: MatrixAccumulator,
    squares: [CompensatedSum; 8],
}

/// Importance-sampled estimate of the reduced density of `s` in `target`.
///
/// Momenta are drawn from the state's exact `|ψ|² d³p` law; each sample
/// contributes `a a† / |a|²` with `a` the amplitudes in `target`, whose
/// expectation is the normalized reduced density matrix.
pub fn mc_density(s: &OneParticleState, target: Basis, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::Config(format!("Monte-Carlo needs at least {MIN_MC_SAMPLES} samples, got {n_samples}")));
    }
    let law = s
        .sampling_law()
        .ok_or_else(|| Error::Config(format!("state '{}' has no closed-form sampling law", s.label())))?;
    check_law(&law)?;
    let field = s.field().clone();
    let from = s.basis();

    let n_blocks = n_samples.div_ceil(BLOCK);
    let blocks: Vec<Result<BlockSums>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut sums = BlockSums::default();
            let end = ((b + 1) * BLOCK).min(n_samples);
            for i in b * BLOCK..end {
                let k = sample_momentum(&law, seed, i as u64);
                let a = change_basis(&field.amplitude(&k), from, target, k.theta, k.phi);
                let w = a.norm_sqr();
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Numerical(format!(
                        "Monte-Carlo sample {i} at (p = {}, theta = {}, phi = {}) has amplitude norm {w}",
                        k.p, k.theta, k.phi
                    )));
                }
                let x = outer(&a, &a).scale_real(1.0 / w);
                sums.sum.add(&x);
                for (q, z) in x.flat().iter().enumerate() {
                    sums.squares[2 * q].add(z.re * z.re);
                    sums.squares[2 * q + 1].add(z.im * z.im);
                }
            }
            Ok(sums)
        })
        .collect();

    let mut total = BlockSums::default();
    for b in blocks {
        let b = b?;
        total.sum.merge(&b.sum);
        for (t, q) in total.squares.iter_mut().zip(b.squares.iter()) {
            t.merge(q);
        }
    }

    let n = n_samples as f64;
    let mean = total.sum.value().scale_real(1.0 / n);
    let flat_mean = mean.flat();
    let mut std_error = [[0.0; 2]; 2];
    for q in 0..4 {
        let var = |k: usize, m: f64| ((total.squares[k].value() - n * m * m) / (n - 1.0)).max(0.0);
        let v = var(2 * q, flat_mean[q].re) + var(2 * q + 1, flat_mean[q].im);
        std_error[q / 2][q % 2] = (v / n).sqrt();
    }
    Ok(McEstimate { basis: target, value: mean, std_error, n_samples, seed })
}
