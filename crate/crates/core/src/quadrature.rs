//! Spherical-coordinate quadrature over momentum space.
//!
//! A grid is the tensor product of a Gauss-Legendre rule in `p` on
//! `(0, r_max)`, a Gauss-Legendre rule for the polar angle, and a uniform
//! rule in `φ`. Node weights carry the full measure `p² dp sinθ dθ dφ`.
//!
//! Two polar rules are available:
//! - [`PolarRule::Angle`] (default) places Gauss-Legendre points in `θ` on
//!   `(0, π)` and folds `sinθ` into the weight. Integrands such as `sinθ`
//!   are analytic in `θ` but have a square-root endpoint singularity in
//!   `cosθ`, so this rule converges exponentially where the cosine rule
//!   converges only algebraically.
//! - [`PolarRule::Cosine`] places Gauss-Legendre points in `cosθ` on
//!   `(−1, 1)` and is exact for polynomials in `cosθ` up to degree
//!   `2·n_theta − 1`.
//!
//! Both rules keep the poles out of the node set.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg2::CompensatedSum;

pub const DEFAULT_N_R: usize = 64;
pub const DEFAULT_N_THETA: usize = 32;
pub const DEFAULT_N_PHI: usize = 32;

/// A point of momentum space in spherical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    pub p: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Momentum {
    pub fn new(p: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::Domain(format!("momentum magnitude must be finite and >= 0, got {p}")));
        }
        check_angles(theta, phi)?;
        Ok(Self { p, theta, phi })
    }

    /// Unit direction `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

pub(crate) fn check_angles(theta: f64, phi: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("polar angle must lie in [0, pi], got {theta}")));
    }
    if !(0.0..2.0 * PI).contains(&phi) {
        return Err(Error::Domain(format!("azimuth must lie in [0, 2pi), got {phi}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarRule {
    #[default]
    Angle,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialNode {
    pub p: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarNode {
    pub cos_theta: f64,
    pub theta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthalNode {
    pub phi: f64,
    pub weight: f64,
}

/// One tensor-product node; `weight` already includes `p²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub index: usize,
    pub momentum: Momentum,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub r_max: f64,
    #[serde(default)]
    pub polar_rule: PolarRule,
}

impl GridConfig {
    pub fn new(n_r: usize, n_theta: usize, n_phi: usize, r_max: f64) -> Self {
        Self { n_r, n_theta, n_phi, r_max, polar_rule: PolarRule::Angle }
    }

    pub fn with_defaults(r_max: f64) -> Self {
        Self::new(DEFAULT_N_R, DEFAULT_N_THETA, DEFAULT_N_PHI, r_max)
    }

    /// Every node count doubled, same truncation radius and rule.
    pub fn refined(&self) -> Self {
        Self { n_r: 2 * self.n_r, n_theta: 2 * self.n_theta, n_phi: 2 * self.n_phi, ..*self }
    }
}

static NEXT_GRID_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
struct GridData {
    id: u64,
    config: GridConfig,
    radial: Vec<RadialNode>,
    polar: Vec<PolarNode>,
    azimuthal: Vec<AzimuthalNode>,
    nodes: Vec<Node>,
}

/// Immutable, cheaply clonable quadrature grid.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    data: Arc<GridData>,
}

pub fn build_grid(n_r: usize, n_theta: usize, n_phi: usize, r_max: f64) -> Result<QuadratureGrid> {
    QuadratureGrid::new(GridConfig::new(n_r, n_theta, n_phi, r_max))
}

impl QuadratureGrid {
    pub fn new(config: GridConfig) -> Result<Self> {
        let GridConfig { n_r, n_theta, n_phi, r_max, polar_rule } = config;
        for (name, n) in [("n_r", n_r), ("n_theta", n_theta), ("n_phi", n_phi)] {
            if n < 2 {
                return Err(Error::Config(format!("{name} must be at least 2, got {n}")));
            }
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Config(format!("r_max must be positive and finite, got {r_max}")));
        }

        let (x, w) = gauss_legendre(n_r);
        let half = 0.5 * r_max;
        let radial: Vec<RadialNode> = x
            .iter()
            .zip(&w)
            .map(|(&t, &wt)| RadialNode { p: half * (t + 1.0), weight: half * wt })
            .collect();

        let (x, w) = gauss_legendre(n_theta);
        let mut polar: Vec<PolarNode> = match polar_rule {
            PolarRule::Cosine => x
                .iter()
                .zip(&w)
                .map(|(&c, &wt)| PolarNode { cos_theta: c, theta: c.acos(), weight: wt })
                .collect(),
            PolarRule::Angle => x
                .iter()
                .zip(&w)
                .map(|(&t, &wt)| {
                    let theta = 0.5 * PI * (t + 1.0);
                    PolarNode { cos_theta: theta.cos(), theta, weight: 0.5 * PI * wt * theta.sin() }
                })
                .collect(),
        };
        if polar_rule == PolarRule::Angle {
            // Pin the solid-angle total to exactly 2 so constants integrate exactly.
            let mut total = CompensatedSum::default();
            polar.iter().for_each(|n| total.add(n.weight));
            let fix = 2.0 / total.value();
            polar.iter_mut().for_each(|n| n.weight *= fix);
        }

        let dphi = 2.0 * PI / n_phi as f64;
        let azimuthal: Vec<AzimuthalNode> =
            (0..n_phi).map(|k| AzimuthalNode { phi: k as f64 * dphi, weight: dphi }).collect();

        let mut nodes = Vec::with_capacity(n_r * n_theta * n_phi);
        for r in &radial {
            for t in &polar {
                for a in &azimuthal {
                    nodes.push(Node {
                        index: nodes.len(),
                        momentum: Momentum { p: r.p, theta: t.theta, phi: a.phi },
                        weight: r.weight * r.p * r.p * t.weight * a.weight,
                    });
                }
            }
        }

        Ok(Self {
            data: Arc::new(GridData {
                id: NEXT_GRID_ID.fetch_add(1, Ordering::Relaxed),
                config,
                radial,
                polar,
                azimuthal,
                nodes,
            }),
        })
    }

    /// Process-unique identity; clones share it.
    pub fn id(&self) -> u64 {
        self.data.id
    }

    pub fn config(&self) -> GridConfig {
        self.data.config
    }

    pub fn r_max(&self) -> f64 {
        self.data.config.r_max
    }

    pub fn radial_nodes(&self) -> &[RadialNode] {
        &self.data.radial
    }

    pub fn polar_nodes(&self) -> &[PolarNode] {
        &self.data.polar
    }

    pub fn azimuthal_nodes(&self) -> &[AzimuthalNode] {
        &self.data.azimuthal
    }

    /// All nodes, radial-major then polar then azimuthal.
    pub fn nodes(&self) -> &[Node] {
        &self.data.nodes
    }

    pub fn len(&self) -> usize {
        self.data.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nodes.is_empty()
    }

    /// Nodes of one radial shell, the unit of deterministic parallel work.
    pub fn shell_len(&self) -> usize {
        self.data.polar.len() * self.data.azimuthal.len()
    }

    pub fn refined(&self) -> Result<Self> {
        Self::new(self.config().refined())
    }

    /// `Σ w · f(node)` over all nodes, with `w` including `p²`.
    ///
    /// Shells are summed in parallel with compensated summation and then
    /// combined in shell order, so the result does not depend on the number
    /// of worker threads.
    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&Momentum) -> Complex64 + Sync,
    {
        let partials: Vec<Result<(CompensatedSum, CompensatedSum)>> = self
            .nodes()
            .par_chunks(self.shell_len())
            .map(|shell| {
                let mut re = CompensatedSum::default();
                let mut im = CompensatedSum::default();
                for node in shell {
                    let v = f(&node.momentum);
                    if !v.is_finite() {
                        return Err(non_finite_at(node));
                    }
                    re.add(node.weight * v.re);
                    im.add(node.weight * v.im);
                }
                Ok((re, im))
            })
            .collect();
        let mut re = CompensatedSum::default();
        let mut im = CompensatedSum::default();
        for part in partials {
            let (r, i) = part?;
            re.merge(&r);
            im.merge(&i);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }

    pub fn integrate_real<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Momentum) -> f64 + Sync,
    {
        self.integrate(|k| Complex64::new(f(k), 0.0)).map(|z| z.re)
    }
}

pub fn integrate<F>(grid: &QuadratureGrid, f: F) -> Result<Complex64>
where
    F: Fn(&Momentum) -> Complex64 + Sync,
{
    grid.integrate(f)
}

pub(crate) fn non_finite_at(node: &Node) -> Error {
    Error::NonFinite { node: node.index, p: node.momentum.p, theta: node.momentum.theta, phi: node.momentum.phi }
}

/// Gauss-Legendre nodes (ascending) and weights on `[−1, 1]`.
///
/// Newton iteration on the three-term recurrence, started from the
/// Tricomi-style estimate `cos(π(i + 3/4)/(n + 1/2))`; nodes are computed for
/// one half and mirrored so the rule is exactly symmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        // z runs from just below 1 downwards
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = wt;
        w[i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
