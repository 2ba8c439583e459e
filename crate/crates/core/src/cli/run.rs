//! Scenario execution: state → normalization → reductions → entropies → checks.

use std::collections::BTreeSet;

use super::report::{
    matrix_repr, CheckOut, DensityOut, EntropyOut, Expected, GridReport, McOut, Report, StateReport, ToolInfo,
    REPORT_SCHEMA_VERSION,
};
use super::scenario::{matrix_from_pairs, CheckSpec, McSpec, OracleName, Output, Scenario};
use super::CliError;
use crate::density::{reduced_density, DensityMatrix2};
use crate::entropy::{von_neumann_entropy, EntropyReport};
use crate::error::Error;
use crate::linalg2::Complex2Matrix;
use crate::oracles;
use crate::quadrature::{GridConfig, QuadratureGrid};
use crate::states::{norm_squared, normalize, Basis, OneParticleState};

/// Entrywise tolerance below which an MC deviation counts as roundoff on
/// zero-variance entries.
pub const MC_ROUNDOFF_FLOOR: f64 = 1e-12;

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub grid: Option<GridOverride>,
    pub mc: Option<(usize, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOverride {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub r_max: Option<f64>,
}

impl std::str::FromStr for GridOverride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected n_r,n_theta,n_phi[,r_max], got `{s}`"));
        }
        let count = |i: usize| parts[i].parse::<usize>().map_err(|e| format!("`{}`: {e}", parts[i]));
        let r_max = match parts.get(3) {
            Some(r) => Some(r.parse::<f64>().map_err(|e| format!("`{r}`: {e}"))?),
            None => None,
        };
        Ok(Self { n_r: count(0)?, n_theta: count(1)?, n_phi: count(2)?, r_max })
    }
}

pub fn parse_mc_override(s: &str) -> Result<(usize, u64), String> {
    let (n, seed) = s.split_once(',').ok_or_else(|| format!("expected n,seed, got `{s}`"))?;
    let n = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
    let seed = seed.trim().parse::<u64>().map_err(|e| format!("`{seed}`: {e}"))?;
    Ok((n, seed))
}

impl RunOptions {
    pub fn apply(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if let Some(g) = self.grid {
            s.grid.n_r = Some(g.n_r);
            s.grid.n_theta = Some(g.n_theta);
            s.grid.n_phi = Some(g.n_phi);
            if g.r_max.is_some() {
                s.grid.r_max = g.r_max;
            }
        }
        if let Some((n_samples, seed)) = self.mc {
            let sigmas = s.mc.map(|m| m.sigmas).unwrap_or(4.0);
            s.mc = Some(McSpec { n_samples, seed, sigmas });
        }
        s
    }
}

fn numerical(e: Error) -> CliError {
    CliError::from(e)
}

/// Densities and entropies for the requested bases on one grid.
struct Stage {
    densities: Vec<DensityMatrix2>,
    entropies: Vec<(Basis, EntropyReport)>,
}

impl Stage {
    fn density(&self, b: Basis) -> &DensityMatrix2 {
        self.densities.iter().find(|d| d.basis() == b).expect("requested basis was reduced")
    }

    fn entropy(&self, b: Basis) -> &EntropyReport {
        &self.entropies.iter().find(|(e, _)| *e == b).expect("requested entropy was computed").1
    }
}

fn evaluate(state: &OneParticleState, config: GridConfig, bases: &BTreeSet<Basis>, entropies: &BTreeSet<Basis>) -> Result<(Stage, f64, QuadratureGrid, OneParticleState), CliError> {
    let grid = QuadratureGrid::new(config).map_err(numerical)?;
    let raw_norm = norm_squared(state, &grid).map_err(numerical)?;
    let normalized = normalize(state, &grid).map_err(numerical)?;
    let mut densities = Vec::new();
    for &b in bases {
        densities.push(reduced_density(&normalized, &grid, b).map_err(numerical)?);
    }
    let mut ents = Vec::new();
    for &b in entropies {
        let rho = densities.iter().find(|d| d.basis() == b).expect("entropy basis is reduced");
        ents.push((b, von_neumann_entropy(rho).map_err(numerical)?));
    }
    Ok((Stage { densities, entropies: ents }, raw_norm, grid, normalized))
}

enum Target {
    Matrix(Complex2Matrix),
    Scalar(f64),
}

fn resolve_expected(check: &CheckSpec, scenario: &Scenario) -> Result<Target, CliError> {
    if let Some(v) = check.value {
        return Ok(Target::Scalar(v));
    }
    if let Some(m) = &check.matrix {
        return Ok(Target::Matrix(matrix_from_pairs(m)));
    }
    let alpha = || scenario.state.alpha().unwrap_or(0.0);
    let oracle = check.oracle.expect("validated: one expectation is present");
    Ok(match oracle {
        OracleName::ThetaIndependentHelicity => Target::Matrix(*oracles::oracle_helicity_matrix_theta_independent().matrix()),
        OracleName::IsotropicHelicitySpin => Target::Matrix(*oracles::oracle_spin_matrix_isotropic_helicity().matrix()),
        OracleName::AnisotropicHelicity => {
            Target::Matrix(*oracles::oracle_helicity_matrix_anisotropic(alpha()).map_err(numerical)?.matrix())
        }
        OracleName::Eq11Entropy => Target::Scalar(oracles::oracle_entropy_eq11()),
        OracleName::AnisotropicEntropy => Target::Scalar(oracles::oracle_entropy_anisotropic(alpha()).map_err(numerical)?),
    })
}

fn check_name(check: &CheckSpec) -> String {
    let what = match (check.oracle, check.value, check.matrix) {
        (Some(o), _, _) => format!("oracle {}", o.as_str()),
        (_, Some(v), _) => format!("value {v}"),
        _ => "matrix".to_owned(),
    };
    format!("{} vs {}", check.quantity.as_str(), what)
}

/// Runs a validated scenario end to end.
pub fn execute(scenario: &Scenario) -> Result<Report, CliError> {
    scenario.validate().map_err(CliError::Input)?;
    let state = scenario.state.build().map_err(numerical)?;
    let config = scenario.grid.resolve(&state);

    let mut bases = BTreeSet::new();
    let mut entropy_bases = BTreeSet::new();
    for o in &scenario.outputs {
        bases.insert(o.basis());
        if !o.is_density() {
            entropy_bases.insert(o.basis());
        }
    }

    let (coarse, raw_norm, grid, normalized) = evaluate(&state, config, &bases, &entropy_bases)?;
    let (fine, _, _, _) = evaluate(&state, config.refined(), &bases, &entropy_bases)?;

    let density_delta = |b: Basis| coarse.density(b).max_abs_diff(fine.density(b));
    let entropy_delta = |b: Basis| (coarse.entropy(b).entropy_bits - fine.entropy(b).entropy_bits).abs();

    let wanted = |o: Output| scenario.outputs.contains(&o);
    let densities: Vec<DensityOut> = [Output::SpinDensity, Output::HelicityDensity]
        .into_iter()
        .filter(|o| wanted(*o))
        .map(|o| {
            let rho = coarse.density(o.basis());
            DensityOut {
                basis: o.basis(),
                matrix: matrix_repr(rho.matrix()),
                trace: rho.trace(),
                convergence_delta: density_delta(o.basis()),
            }
        })
        .collect();
    let entropies: Vec<EntropyOut> = [Output::SpinEntropy, Output::HelicityEntropy]
        .into_iter()
        .filter(|o| wanted(*o))
        .map(|o| {
            let e = coarse.entropy(o.basis());
            EntropyOut {
                basis: o.basis(),
                eigenvalues: e.eigenvalues,
                entropy_bits: e.entropy_bits,
                convergence_delta: entropy_delta(o.basis()),
            }
        })
        .collect();

    let mut checks = Vec::new();
    for c in &scenario.checks {
        let b = c.quantity.basis();
        let (expected, deviation, delta) = match resolve_expected(c, scenario)? {
            Target::Matrix(m) => {
                (Expected::Matrix(matrix_repr(&m)), coarse.density(b).matrix().max_abs_diff(&m), density_delta(b))
            }
            Target::Scalar(v) => (Expected::Scalar(v), (coarse.entropy(b).entropy_bits - v).abs(), entropy_delta(b)),
        };
        checks.push(CheckOut {
            name: check_name(c),
            quantity: c.quantity.as_str().to_owned(),
            expected,
            tolerance: c.tolerance,
            deviation,
            convergence_delta: delta,
            passed: deviation <= c.tolerance && delta < c.tolerance,
        });
    }

    let mut monte_carlo = Vec::new();
    if let Some(mc) = scenario.mc {
        for o in [Output::SpinDensity, Output::HelicityDensity].into_iter().filter(|o| wanted(*o)) {
            let b = o.basis();
            let est = oracles::mc_density(&normalized, b, mc.n_samples, mc.seed).map_err(numerical)?;
            let q = coarse.density(b).matrix();
            let max_excess = est.excess_over(q, mc.sigmas);
            let agrees = est.agrees_with(q, mc.sigmas, MC_ROUNDOFF_FLOOR);
            checks.push(CheckOut {
                name: format!("mc_agreement.{}", o.as_str()),
                quantity: o.as_str().to_owned(),
                expected: Expected::Matrix(matrix_repr(&est.value)),
                tolerance: mc.sigmas,
                deviation: est.value.max_abs_diff(q),
                convergence_delta: density_delta(b),
                passed: agrees,
            });
            monte_carlo.push(McOut {
                basis: b,
                n_samples: est.n_samples,
                seed: est.seed,
                sigmas: mc.sigmas,
                value: matrix_repr(&est.value),
                std_error: est.std_error,
                max_excess,
                agrees,
            });
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        tool: ToolInfo::current(),
        scenario: scenario.clone(),
        grid: GridReport { config, nodes: grid.len(), refined: config.refined() },
        state: StateReport {
            label: state.label().to_owned(),
            basis: state.basis(),
            params: state.params().clone(),
            norm_squared_raw: raw_norm,
        },
        densities,
        entropies,
        monte_carlo,
        checks,
        passed,
    })
}
