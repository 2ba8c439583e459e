//! Reduced spin and helicity density matrices for a massive spin-1/2 wave packet.
//!
//! A one-particle state is a two-component amplitude over momentum space,
//! expressed either in the spin basis `|p, σ⟩` (projection on the fixed z axis)
//! or in the helicity basis `|p; λ⟩` (projection on the momentum direction).
//! Tracing out momentum with a spherical quadrature gives a 2×2 density matrix
//! in either basis, whose von Neumann entropy measures how strongly the internal
//! degree of freedom is entangled with momentum.
//!
//! Module map:
//! - [`linalg2`]: fixed-size complex 2-vectors and 2×2 matrices.
//! - [`quadrature`]: Gauss-Legendre × uniform-azimuth grids over momentum space.
//! - [`su2`]: the rotation `D[R(p)]` carrying z onto `p̂` and the basis changes it induces.
//! - [`states`]: wave-packet families and normalization.
//! - [`density`]: momentum-traced density matrices.
//! - [`entropy`]: closed-form 2×2 eigenvalues and base-2 entropy.
//! - [`oracles`]: closed-form reference results and a seeded Monte-Carlo integrator.
//! - [`cli`]: scenario runner behind the `helispin` binary.

pub mod cli;
pub mod density;
pub mod entropy;
pub mod error;
pub mod linalg2;
pub mod oracles;
pub mod quadrature;
pub mod states;
pub mod su2;

pub use density::{reduced_helicity_density, reduced_spin_density, DensityMatrix2};
pub use entropy::{von_neumann_entropy, EntropyReport};
pub use error::{Error, Result};
pub use linalg2::{Complex2Matrix, Complex2Vector};
pub use quadrature::{Momentum, QuadratureGrid};
pub use states::{Basis, OneParticleState};
pub use su2::{wigner_rotation, AmplitudePair, RotationMatrix2};

pub use num_complex::Complex64;
