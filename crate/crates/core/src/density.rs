//! Reduced 2×2 density matrices obtained by tracing out momentum.
//!
//! Both reductions share one kernel: map the state's amplitudes into the
//! target basis node by node, then accumulate `w · a a†`. For a spin-basis
//! state reduced in the helicity basis this is the `D⁻¹ (ψψ†) D` sandwich
//! applied through the amplitudes; [`reduce_by_conjugation`] keeps the
//! explicit matrix-sandwich form as an independent second route.

use rayon::prelude::*;

use crate::entropy::eigenvalues_hermitian2;
use crate::error::{Error, Result};
use crate::linalg2::{outer, Complex2Matrix, Complex2Vector, MatrixAccumulator};
use crate::quadrature::{non_finite_at, Momentum, Node, QuadratureGrid};
use crate::states::{norm_squared, Basis, OneParticleState};
use crate::su2::{change_basis, rotation_unchecked};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = 1e-10;
/// Largest `|‖ψ‖² − 1|` accepted by the reductions.
pub const NORM_TOL: f64 = 1e-6;

/// Hermitian, unit-trace, positive-semidefinite 2×2 matrix in a named basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    basis: Basis,
    matrix: Complex2Matrix,
}

impl DensityMatrix2 {
    /// Validates every invariant.
    pub fn new(basis: Basis, matrix: Complex2Matrix) -> Result<Self> {
        let rho = Self::unchecked_trace(basis, matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Contract(format!("density matrix trace {tr} differs from 1")));
        }
        Ok(rho)
    }

    /// Validates Hermiticity and positivity but not the trace.
    fn unchecked_trace(basis: Basis, matrix: Complex2Matrix) -> Result<Self> {
        matrix.ensure_finite()?;
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::Contract(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        let (_, low) = eigenvalues_hermitian2(&matrix)?;
        if low < -EIGEN_TOL {
            return Err(Error::Numerical(format!("negative eigenvalue {low:e}")));
        }
        Ok(Self { basis, matrix })
    }

    /// Symmetrizes an accumulated sum once, then validates.
    fn from_accumulated(basis: Basis, raw: Complex2Matrix, check_trace: bool) -> Result<Self> {
        let m = raw.hermitian_part();
        if check_trace {
            Self::new(basis, m)
        } else {
            Self::unchecked_trace(basis, m)
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &Complex2Matrix {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> num_complex::Complex64 {
        self.matrix.entry(row, col)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix2) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// `t · a + (1 − t) · b`.
    pub fn mix(t: f64, a: &DensityMatrix2, b: &DensityMatrix2) -> Result<DensityMatrix2> {
        if a.basis != b.basis {
            return Err(Error::Contract("cannot mix density matrices from different bases".into()));
        }
        Self::new(a.basis, a.matrix.scale_real(t) + b.matrix.scale_real(1.0 - t))
    }
}

/// One quadrature node's contribution: integrand weight is `weight · p²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub node: usize,
    pub p: f64,
    pub weight: f64,
    pub amplitudes: Complex2Vector,
}

/// `Σ weight · p² · a a†` before Hermitian symmetrization, in sample order.
pub fn accumulate_samples(samples: &[WeightedSample]) -> Result<Complex2Matrix> {
    let mut acc = MatrixAccumulator::default();
    for s in samples {
        if !s.amplitudes.is_finite() || !s.weight.is_finite() || !s.p.is_finite() {
            return Err(Error::Numerical(format!("non-finite sample at node {}", s.node)));
        }
        let a = &s.amplitudes;
        acc.add(&outer(a, a).scale_real(s.weight * s.p * s.p));
    }
    Ok(acc.value())
}

/// Shared accumulation kernel: `Σ weight · p² · a a†`, symmetrized once.
///
/// The trace is not required to be 1 here; callers reducing normalized
/// states check it.
pub fn density_from_samples(basis: Basis, samples: &[WeightedSample]) -> Result<DensityMatrix2> {
    DensityMatrix2::from_accumulated(basis, accumulate_samples(samples)?, false)
}

fn ensure_normalized(s: &OneParticleState, grid: &QuadratureGrid) -> Result<()> {
    let n = norm_squared(s, grid)?;
    if (n - 1.0).abs() > NORM_TOL {
        Err(Error::Contract(format!("state '{}' is not normalized on this grid (norm² = {n})", s.label())))
    } else {
        Ok(())
    }
}

/// Accumulates `w · a a†` with `a` mapped into `target`, shell-parallel and
/// reproducible regardless of worker count.
fn reduce_raw(s: &OneParticleState, grid: &QuadratureGrid, target: Basis) -> Result<Complex2Matrix> {
    let samples = s.raw_samples(grid)?;
    let shell = grid.shell_len();
    let scale2 = s.scale() * s.scale();
    let from = s.basis();
    let partials: Vec<Result<MatrixAccumulator>> = grid
        .nodes()
        .par_chunks(shell)
        .zip(samples.par_chunks(shell))
        .map(|(nodes, values)| {
            let mut acc = MatrixAccumulator::default();
            for (n, v) in nodes.iter().zip(values) {
                let a = change_basis(v, from, target, n.momentum.theta, n.momentum.phi);
                let contribution = outer(&a, &a).scale_real(n.weight * scale2);
                if !contribution.is_finite() {
                    return Err(non_finite_at(n));
                }
                acc.add(&contribution);
            }
            Ok(acc)
        })
        .collect();
    let mut total = MatrixAccumulator::default();
    for p in partials {
        total.merge(&p?);
    }
    Ok(total.value())
}

/// Accumulated matrix in `target` before symmetrization; exposed so the
/// residual anti-Hermitian part can be inspected.
pub fn unsymmetrized_density(s: &OneParticleState, grid: &QuadratureGrid, target: Basis) -> Result<Complex2Matrix> {
    reduce_raw(s, grid, target)
}

fn reduce(s: &OneParticleState, grid: &QuadratureGrid, target: Basis) -> Result<DensityMatrix2> {
    ensure_normalized(s, grid)?;
    let raw = reduce_raw(s, grid, target)?;
    // Trace equals the norm, which may sit anywhere within NORM_TOL of 1.
    let rho = DensityMatrix2::from_accumulated(target, raw, false)?;
    let tr = rho.matrix().trace();
    if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::Contract(format!("reduced density trace {tr} differs from 1")));
    }
    Ok(rho)
}

/// `ρ_{σσ̃} = ∫ d³p ψ(σ,p) ψ*(σ̃,p)`, converting helicity amplitudes first if needed.
pub fn reduced_spin_density(s: &OneParticleState, grid: &QuadratureGrid) -> Result<DensityMatrix2> {
    reduce(s, grid, Basis::Spin)
}

/// `ρ'_{λλ̃} = ∫ d³p ψ'(λ,p) ψ'*(λ̃,p)`, converting spin amplitudes first if needed.
pub fn reduced_helicity_density(s: &OneParticleState, grid: &QuadratureGrid) -> Result<DensityMatrix2> {
    reduce(s, grid, Basis::Helicity)
}

pub fn reduced_density(s: &OneParticleState, grid: &QuadratureGrid, target: Basis) -> Result<DensityMatrix2> {
    reduce(s, grid, target)
}

/// Second route: accumulate `ψψ†` in the state's own basis and conjugate
/// each node's outer product by `D` or `D⁻¹` as a matrix, sequentially.
pub fn reduce_by_conjugation(s: &OneParticleState, grid: &QuadratureGrid, target: Basis) -> Result<DensityMatrix2> {
    ensure_normalized(s, grid)?;
    let samples = s.raw_samples(grid)?;
    let scale2 = s.scale() * s.scale();
    let mut acc = MatrixAccumulator::default();
    for (n, v) in grid.nodes().iter().zip(samples.iter()) {
        let local = outer(v, v).scale_real(n.weight * scale2);
        let m = conjugate_into(&local, s.basis(), target, &n.momentum);
        acc.add(&m);
    }
    DensityMatrix2::from_accumulated(target, acc.value(), false)
}

fn conjugate_into(m: &Complex2Matrix, from: Basis, to: Basis, k: &Momentum) -> Complex2Matrix {
    let d = rotation_unchecked(k.theta, k.phi);
    match (from, to) {
        (Basis::Spin, Basis::Helicity) => d.inverse().conjugate(m),
        (Basis::Helicity, Basis::Spin) => d.conjugate(m),
        _ => *m,
    }
}

/// Samples of `s` on `grid` in `target`, ready for [`density_from_samples`].
pub fn weighted_samples(s: &OneParticleState, grid: &QuadratureGrid, target: Basis) -> Result<Vec<WeightedSample>> {
    let samples = s.raw_samples(grid)?;
    Ok(grid
        .nodes()
        .iter()
        .zip(samples.iter())
        .map(|(n, v): (&Node, &Complex2Vector)| {
            let a = change_basis(v, s.basis(), target, n.momentum.theta, n.momentum.phi).scale_real(s.scale());
            let p = n.momentum.p;
            WeightedSample { node: n.index, p, weight: n.weight / (p * p), amplitudes: a }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg2::Complex2Vector;
    use crate::quadrature::QuadratureGrid;
    use crate::states::{anisotropic_spin_up, gaussian_helicity_up, gaussian_spin_up, gaussian_spinor, normalize};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn grid_for(s: &OneParticleState) -> QuadratureGrid {
        QuadratureGrid::new(s.default_grid_config()).unwrap()
    }

    fn sample(node: usize, weight: f64, up: Complex64, down: Complex64) -> WeightedSample {
        WeightedSample { node, p: 1.0, weight, amplitudes: Complex2Vector::new(up, down) }
    }

    #[test]
    fn single_node_projector() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let rho = density_from_samples(Basis::Spin, &[sample(0, 1.0, one, zero)]).unwrap();
        assert_eq!(*rho.matrix(), Complex2Matrix::diag(1.0, 0.0));
    }

    #[test]
    fn two_node_classical_mixture() {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let samples = [sample(0, 1.0, a, zero), sample(1, 1.0, zero, a)];
        let rho = density_from_samples(Basis::Spin, &samples).unwrap();
        assert!(rho.matrix().max_abs_diff(&Complex2Matrix::diag(0.5, 0.5)) < 1e-15);
    }

    #[test]
    fn random_samples_match_brute_force_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let samples: Vec<WeightedSample> = (0..5)
            .map(|i| WeightedSample { node: i, p: 0.3 + i as f64 * 0.2, weight: 0.1 + 0.05 * i as f64, amplitudes: Complex2Vector::new(c(), c()) })
            .collect();
        let mut brute = [[Complex64::new(0.0, 0.0); 2]; 2];
        for s in &samples {
            let a = [s.amplitudes.up, s.amplitudes.down];
            for i in 0..2 {
                for j in 0..2 {
                    brute[i][j] += s.weight * s.p * s.p * a[i] * a[j].conj();
                }
            }
        }
        let rho = density_from_samples(Basis::Spin, &samples).unwrap();
        assert!(rho.matrix().max_abs_diff(&Complex2Matrix::new(brute)) < 1e-14);
    }

    #[test]
    fn non_finite_sample_names_node() {
        let bad = sample(7, 1.0, Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0));
        let err = density_from_samples(Basis::Spin, &[bad]).unwrap_err();
        assert!(err.to_string().contains("node 7"));
    }

    #[test]
    fn spin_up_gaussian_reduces_to_projector() {
        for tau in [0.5, 1.0, 3.0] {
            let s = gaussian_spin_up(tau).unwrap();
            let g = grid_for(&s);
            let s = normalize(&s, &g).unwrap();
            let rho = reduced_spin_density(&s, &g).unwrap();
            assert!(rho.matrix().max_abs_diff(&Complex2Matrix::diag(1.0, 0.0)) < 1e-12);
        }
    }

    #[test]
    fn equal_superposition_is_rank_one() {
        let s = gaussian_spinor(Basis::Spin, 1.0, Complex2Vector::from_real(1.0, 1.0)).unwrap();
        let g = grid_for(&s);
        let s = normalize(&s, &g).unwrap();
        let rho = reduced_spin_density(&s, &g).unwrap();
        assert!(rho.matrix().max_abs_diff(&Complex2Matrix::from_real([[0.5, 0.5], [0.5, 0.5]])) < 1e-12);
    }

    #[test]
    fn helicity_up_gaussian_is_helicity_projector_and_maximally_mixed_in_spin() {
        let s = gaussian_helicity_up(1.0).unwrap();
        let g = grid_for(&s);
        let s = normalize(&s, &g).unwrap();
        let h = reduced_helicity_density(&s, &g).unwrap();
        assert!(h.matrix().max_abs_diff(&Complex2Matrix::diag(1.0, 0.0)) < 1e-12);
        let r = reduced_spin_density(&s, &g).unwrap();
        assert!(r.matrix().max_abs_diff(&Complex2Matrix::diag(0.5, 0.5)) < 1e-8);
    }

    #[test]
    fn theta_independent_helicity_density() {
        let want = Complex2Matrix::from_real([[0.5, -PI / 8.0], [-PI / 8.0, 0.5]]);
        let mut previous: Option<DensityMatrix2> = None;
        for tau in [0.5, 2.0] {
            let s = gaussian_spin_up(tau).unwrap();
            let g = grid_for(&s);
            let s = normalize(&s, &g).unwrap();
            let h = reduced_helicity_density(&s, &g).unwrap();
            assert!(h.matrix().max_abs_diff(&want) < 1e-8);
            if let Some(prev) = previous {
                assert!(prev.max_abs_diff(&h) < 1e-10);
            }
            previous = Some(h);
        }
    }

    #[test]
    fn anisotropic_alpha_one_matches_hand_integrals() {
        let s = anisotropic_spin_up(1.0, 1.0).unwrap();
        let g = grid_for(&s);
        let s = normalize(&s, &g).unwrap();
        let h = reduced_helicity_density(&s, &g).unwrap();
        let want = Complex2Matrix::from_real([[2.0 / 3.0, -PI / 8.0], [-PI / 8.0, 1.0 / 3.0]]);
        assert!(h.matrix().max_abs_diff(&want) < 1e-8, "{:?}", h);
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let s = gaussian_spin_up(1.0).unwrap().scaled(1.1);
        let g = grid_for(&s);
        assert!(matches!(reduced_spin_density(&s, &g), Err(Error::Contract(_))));
        assert!(matches!(reduced_helicity_density(&s, &g), Err(Error::Contract(_))));
    }

    #[test]
    fn symmetrization_residual_is_tiny() {
        let s = anisotropic_spin_up(1.0, 0.6).unwrap();
        let g = grid_for(&s);
        let s = normalize(&s, &g).unwrap();
        for b in [Basis::Spin, Basis::Helicity] {
            let raw = unsymmetrized_density(&s, &g, b).unwrap();
            assert!(raw.hermiticity_defect() < 1e-11);
        }
    }

    #[test]
    fn conjugation_route_matches_amplitude_route() {
        for s in [gaussian_spin_up(1.0).unwrap(), gaussian_helicity_up(1.0).unwrap(), anisotropic_spin_up(0.7, -0.5).unwrap()] {
            let g = grid_for(&s);
            let s = normalize(&s, &g).unwrap();
            for b in [Basis::Spin, Basis::Helicity] {
                let a = reduced_density(&s, &g, b).unwrap();
                let c = reduce_by_conjugation(&s, &g, b).unwrap();
                assert!(a.max_abs_diff(&c) < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_samples_reproduce_grid_reduction() {
        let s = anisotropic_spin_up(1.0, 0.3).unwrap();
        let g = QuadratureGrid::new(crate::quadrature::GridConfig::new(16, 12, 12, 8.0)).unwrap();
        let s = normalize(&s, &g).unwrap();
        let samples = weighted_samples(&s, &g, Basis::Helicity).unwrap();
        let a = density_from_samples(Basis::Helicity, &samples).unwrap();
        let b = reduced_helicity_density(&s, &g).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let s = anisotropic_spin_up(1.0, 0.8).unwrap();
        let g = grid_for(&s);
        let s = normalize(&s, &g).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| reduced_helicity_density(&s, &g).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert!(one.max_abs_diff(&four) <= 1e-13);
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let non_hermitian = Complex2Matrix::from_real([[0.5, 0.1], [0.0, 0.5]]);
        assert!(matches!(DensityMatrix2::new(Basis::Spin, non_hermitian), Err(Error::Contract(_))));
        let bad_trace = Complex2Matrix::diag(0.5, 0.4);
        assert!(matches!(DensityMatrix2::new(Basis::Spin, bad_trace), Err(Error::Contract(_))));
        let negative = Complex2Matrix::diag(1.5, -0.5);
        assert!(matches!(DensityMatrix2::new(Basis::Spin, negative), Err(Error::Numerical(_))));
    }
}
