//! TOML configuration loading and flag overrides.
//!
//! Every field is optional; omitted fields fall back to the defaults of
//! [`ExperimentConfig::base_gaussian`]. Vectors shorter than the truncation
//! dimension are zero-padded on the right, so configs stay readable when only
//! the leading coordinates matter.

use std::path::{Path, PathBuf};

use gramian::{CovarianceSpec, ExperimentConfig, SamplerSpec, TruncatedVector};
use serde::Deserialize;

use crate::CliError;

/// Default truncation dimension when neither config nor flags set one.
pub const DEFAULT_DIMENSION: usize = 64;

/// Flag overrides collected from the command line.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub d: Option<usize>,
    pub k_max: Option<usize>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
}

/// A fully resolved run: the experiment plus the affine-subspace probe setup.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub probe: ProbeSetup,
}

/// Affine subspace probed by the negligibility command.
#[derive(Debug, Clone)]
pub struct ProbeSetup {
    pub k: usize,
    pub shift: TruncatedVector,
    pub subspace: Vec<TruncatedVector>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    d: Option<usize>,
    k_max: Option<usize>,
    trials: Option<u64>,
    master_seed: Option<u64>,
    tol_dep: Option<f64>,
    t_grid: Option<Vec<f64>>,
    eps_grid: Option<Vec<f64>>,
    sampler: Option<SamplerConfig>,
    negligibility: Option<ProbeConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeConfig {
    k: Option<usize>,
    shift: Option<Vec<f64>>,
    subspace: Option<Vec<Vec<f64>>>,
}

/// Sampler description as written in TOML; resolves into a [`SamplerSpec`]
/// once the truncation dimension is known.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SamplerConfig {
    BaseGaussian {
        lambdas: Option<LambdaSpec>,
        mean: Option<Vec<f64>>,
    },
    DegenerateSubspace {
        basis: Vec<Vec<f64>>,
    },
    AffineShift {
        point: Vec<f64>,
        inner: Box<SamplerConfig>,
    },
    Mixture {
        weights: Vec<f64>,
        parts: Vec<SamplerConfig>,
    },
    IndependentSequence {
        per_index: Vec<SamplerConfig>,
    },
}

/// Either the name of a built-in spectrum or explicit per-coordinate
/// variances (which must cover all `d` coordinates).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LambdaSpec {
    Named(String),
    Explicit(Vec<f64>),
}

impl SamplerConfig {
    fn resolve(&self, d: usize) -> Result<SamplerSpec, CliError> {
        match self {
            SamplerConfig::BaseGaussian { lambdas, mean } => {
                let mut covariance = match lambdas {
                    None | Some(LambdaSpec::Named(_)) => {
                        if let Some(LambdaSpec::Named(name)) = lambdas {
                            if name != "dyadic" {
                                return Err(CliError::config(format!(
                                    "unknown spectrum name {name:?}; known: \"dyadic\""
                                )));
                            }
                        }
                        CovarianceSpec::dyadic(d)
                    }
                    Some(LambdaSpec::Explicit(values)) => {
                        if values.len() != d {
                            return Err(CliError::config(format!(
                                "lambdas lists {} variances but d = {d}",
                                values.len()
                            )));
                        }
                        let mut c = CovarianceSpec::dyadic(d);
                        c.lambdas = values.clone();
                        c
                    }
                };
                if let Some(mean) = mean {
                    covariance.mean = vector(mean, d, "mean")?;
                }
                Ok(SamplerSpec::BaseGaussian { covariance })
            }
            SamplerConfig::DegenerateSubspace { basis } => Ok(SamplerSpec::DegenerateSubspace {
                basis: basis
                    .iter()
                    .map(|row| vector(row, d, "basis vector"))
                    .collect::<Result<_, _>>()?,
            }),
            SamplerConfig::AffineShift { point, inner } => Ok(SamplerSpec::AffineShift {
                point: vector(point, d, "point")?,
                inner: Box::new(inner.resolve(d)?),
            }),
            SamplerConfig::Mixture { weights, parts } => Ok(SamplerSpec::Mixture {
                weights: weights.clone(),
                parts: parts.iter().map(|p| p.resolve(d)).collect::<Result<_, _>>()?,
            }),
            SamplerConfig::IndependentSequence { per_index } => {
                Ok(SamplerSpec::IndependentSequence {
                    per_index: per_index
                        .iter()
                        .map(|p| p.resolve(d))
                        .collect::<Result<_, _>>()?,
                })
            }
        }
    }
}

/// Zero-pads `values` up to dimension `d`; longer inputs are configuration
/// errors.
fn pad(values: &[f64], d: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if values.len() > d {
        return Err(CliError::config(format!(
            "{what} has {} coordinates but d = {d}",
            values.len()
        )));
    }
    let mut out = values.to_vec();
    out.resize(d, 0.0);
    Ok(out)
}

fn vector(values: &[f64], d: usize, what: &str) -> Result<TruncatedVector, CliError> {
    TruncatedVector::new(pad(values, d, what)?)
        .map_err(|e| CliError::config(format!("{what}: {e}")))
}

/// Loads the optional config file, applies flag overrides, and produces the
/// resolved experiment plus probe setup.
pub fn load(path: Option<&PathBuf>, overrides: Overrides) -> Result<Resolved, CliError> {
    let file = match path {
        Some(p) => Some(read_config_file(p)?),
        None => None,
    };
    let file = file.as_ref();

    let d = overrides
        .d
        .or(file.and_then(|f| f.d))
        .unwrap_or(DEFAULT_DIMENSION);
    let mut experiment = ExperimentConfig::base_gaussian(d);
    if let Some(f) = file {
        if let Some(k_max) = f.k_max {
            experiment.k_max = k_max;
        }
        if let Some(trials) = f.trials {
            experiment.trials = trials;
        }
        if let Some(seed) = f.master_seed {
            experiment.master_seed = seed;
        }
        if let Some(tol_dep) = f.tol_dep {
            experiment.tol_dep = tol_dep;
        }
        if let Some(t_grid) = &f.t_grid {
            experiment.t_grid = t_grid.clone();
        }
        if let Some(eps_grid) = &f.eps_grid {
            experiment.eps_grid = eps_grid.clone();
        }
        if let Some(sampler) = &f.sampler {
            experiment.sampler = sampler.resolve(d)?;
        }
    }
    if let Some(k_max) = overrides.k_max {
        experiment.k_max = k_max;
    }
    if let Some(trials) = overrides.trials {
        experiment.trials = trials;
    }
    if let Some(seed) = overrides.master_seed {
        experiment.master_seed = seed;
    }

    let probe = resolve_probe(file.and_then(|f| f.negligibility.as_ref()), d)?;
    Ok(Resolved { experiment, probe })
}

/// Default probe: the single point at the first basis direction, tested with
/// pairs of draws. A zero-dimensional affine subspace is strict in any
/// ambient dimension, so the default works without further configuration.
fn resolve_probe(config: Option<&ProbeConfig>, d: usize) -> Result<ProbeSetup, CliError> {
    let k = config.and_then(|c| c.k).unwrap_or(2);
    let shift = match config.and_then(|c| c.shift.as_ref()) {
        Some(values) => vector(values, d, "shift")?,
        None => TruncatedVector::standard_basis(d, 0),
    };
    let subspace = match config.and_then(|c| c.subspace.as_ref()) {
        Some(rows) => rows
            .iter()
            .map(|row| vector(row, d, "subspace vector"))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    Ok(ProbeSetup { k, shift, subspace })
}

fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config(format!("cannot read config {}: {e}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
}
