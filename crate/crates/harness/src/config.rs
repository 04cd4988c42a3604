//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model": { "a": [[1.45]], "c": [[1.0]], "q": [[1.0]], "r": [[1.0]] },
//!   "thetas": [0.8, 0.75, 0.55, 0.5],
//!   "policies": [
//!     { "kind": "epsilon_greedy", "epsilon": 0.12 },
//!     { "kind": "ts" },
//!     { "kind": "sbs" },
//!     { "kind": "fixed", "fixed_channel": 1 }
//!   ],
//!   "horizon": 1000,
//!   "runs": 20000,
//!   "seed": 7,
//!   "output_path": "out/row1"
//! }
//! ```
//!
//! Matrices are row-major nested arrays. Channel indices are zero-based.
//! Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use chansel_core::{
    ChannelBank, ChannelBankF64, Plant, PlantF64, PolicyKind, PolicySpec, PolicySpecF64, SystemModel,
    DEFAULT_TRACE_CAP,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKindConfig {
    EpsilonGreedy,
    Ts,
    Obs,
    Sbs,
    Oracle,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Believed critical probability for SBS; defaults to the plant's `θ_c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_c_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_channel: Option<usize>,
}

impl PolicyConfig {
    pub fn of_kind(kind: PolicyKindConfig) -> Self {
        Self {
            kind,
            epsilon: None,
            theta_c_hat: None,
            fixed_channel: None,
        }
    }

    pub fn epsilon_greedy(epsilon: f64) -> Self {
        Self {
            epsilon: Some(epsilon),
            ..Self::of_kind(PolicyKindConfig::EpsilonGreedy)
        }
    }

    pub fn fixed(channel: usize) -> Self {
        Self {
            fixed_channel: Some(channel),
            ..Self::of_kind(PolicyKindConfig::Fixed)
        }
    }

    /// Resolve into a core policy spec, reporting problems under `path`.
    pub fn resolve(&self, theta_c: f64, channels: usize, path: &str) -> Result<PolicySpecF64> {
        let unexpected = |field: &str| {
            HarnessError::config(
                format!("{path}.{field}"),
                format!("not allowed for kind {:?}", self.kind),
            )
        };
        let kind = self.kind;
        if self.epsilon.is_some() && kind != PolicyKindConfig::EpsilonGreedy {
            return Err(unexpected("epsilon"));
        }
        if self.theta_c_hat.is_some() && kind != PolicyKindConfig::Sbs {
            return Err(unexpected("theta_c_hat"));
        }
        if self.fixed_channel.is_some() && kind != PolicyKindConfig::Fixed {
            return Err(unexpected("fixed_channel"));
        }

        let spec = match kind {
            PolicyKindConfig::EpsilonGreedy => PolicySpec::EpsilonGreedy {
                epsilon: self.epsilon.ok_or_else(|| {
                    HarnessError::config(format!("{path}.epsilon"), "required for epsilon_greedy")
                })?,
            },
            PolicyKindConfig::Ts => PolicySpec::Thompson,
            PolicyKindConfig::Obs => PolicySpec::Optimistic,
            PolicyKindConfig::Sbs => PolicySpec::StabilityAware {
                theta_c_hat: self.theta_c_hat.unwrap_or(theta_c),
            },
            PolicyKindConfig::Oracle => PolicySpec::Oracle,
            PolicyKindConfig::Fixed => {
                let channel = self.fixed_channel.ok_or_else(|| {
                    HarnessError::config(format!("{path}.fixed_channel"), "required for fixed")
                })?;
                if channel >= channels {
                    return Err(HarnessError::config(
                        format!("{path}.fixed_channel"),
                        format!("channel {channel} out of range for {channels} channels"),
                    ));
                }
                PolicySpec::Fixed { channel }
            }
        };
        spec.validate().map_err(|e| {
            let field = match kind {
                PolicyKindConfig::EpsilonGreedy => "epsilon",
                PolicyKindConfig::Sbs => "theta_c_hat",
                _ => "kind",
            };
            HarnessError::config(format!("{path}.{field}"), e.to_string())
        })?;
        Ok(spec)
    }
}

impl From<PolicyKind> for PolicyKindConfig {
    fn from(kind: PolicyKind) -> Self {
        match kind {
            PolicyKind::EpsilonGreedy => PolicyKindConfig::EpsilonGreedy,
            PolicyKind::Thompson => PolicyKindConfig::Ts,
            PolicyKind::Optimistic => PolicyKindConfig::Obs,
            PolicyKind::StabilityAware => PolicyKindConfig::Sbs,
            PolicyKind::Oracle => PolicyKindConfig::Oracle,
            PolicyKind::Fixed => PolicyKindConfig::Fixed,
        }
    }
}

fn default_trace_cap() -> f64 {
    DEFAULT_TRACE_CAP
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub thetas: Vec<f64>,
    /// Permit equal reception probabilities among sub-optimal channels.
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_tied_channels: bool,
    pub policies: Vec<PolicyConfig>,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_trace_cap")]
    pub trace_cap: f64,
    pub output_path: PathBuf,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub plant: PlantF64,
    pub bank: ChannelBankF64,
    pub policies: Vec<PolicySpecF64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::config(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Check every field and build the plant, bank and policies.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.horizon == 0 {
            return Err(HarnessError::config("horizon", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(HarnessError::config("runs", "must be at least 1"));
        }
        if !(self.trace_cap.is_finite() && self.trace_cap > 0.0) {
            return Err(HarnessError::config("trace_cap", "must be positive and finite"));
        }

        let plant = self.model.build()?;
        if !(self.trace_cap > chansel_core::linalg::trace(plant.pbar())) {
            return Err(HarnessError::config("trace_cap", "must exceed tr(Pbar)"));
        }

        let bank = if self.allow_tied_channels {
            ChannelBank::new_allowing_ties(self.thetas.clone())
        } else {
            ChannelBank::new(self.thetas.clone())
        }
        .map_err(|e| HarnessError::config("thetas", e.to_string()))?;

        let policies = self
            .policies
            .iter()
            .enumerate()
            .map(|(i, p)| p.resolve(plant.theta_c(), bank.len(), &format!("policies[{i}]")))
            .collect::<Result<Vec<_>>>()?;

        Ok(Resolved {
            plant,
            bank,
            policies,
        })
    }
}

impl ModelConfig {
    pub fn from_matrices(a: &DMatrix<f64>, c: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Self {
        let rows = |m: &DMatrix<f64>| {
            m.row_iter()
                .map(|row| row.iter().copied().collect())
                .collect()
        };
        Self {
            a: rows(a),
            c: rows(c),
            q: rows(q),
            r: rows(r),
        }
    }

    pub fn build(&self) -> Result<PlantF64> {
        let a = matrix(&self.a, "model.a")?;
        let c = matrix(&self.c, "model.c")?;
        let q = matrix(&self.q, "model.q")?;
        let r = matrix(&self.r, "model.r")?;
        let model = SystemModel::new(a, c, q, r).map_err(|e| HarnessError::config("model", e.to_string()))?;
        Plant::new(model).map_err(|e| HarnessError::config("model", e.to_string()))
    }
}

fn matrix(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(HarnessError::config(path, "matrix must be non-empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(HarnessError::config(
            format!("{path}[{i}]"),
            format!("row has {} entries, expected {ncols}", rows[i].len()),
        ));
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().copied(),
    ))
}
