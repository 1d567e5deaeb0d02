//! Run configuration file (TOML).
//!
//! Every section and key is optional; missing values take the defaults shown
//! by `disentangle config-template`. Unknown keys are rejected, all of them
//! listed in one error.

use std::collections::BTreeSet;
use std::path::Path;

use disentangle::env::{EnvConfig, DEFAULT_MAX_BUDGET};
use disentangle::nn::Activation;
use disentangle::policy::{EncoderConfig, HeadType, PolicyConfig};
use disentangle::pqc::{CircuitConfig, Entangler};
use disentangle::trainer::TrainConfig;
use disentangle::EntanglementPattern;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvSection {
    /// Training pattern, e.g. `"RRRR"`.
    pub pattern: String,
    pub max_budget: usize,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            pattern: "RRRR".into(),
            max_budget: DEFAULT_MAX_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicySection {
    pub head: HeadType,
    pub hidden_sizes: Vec<usize>,
    pub latent_dim: usize,
    pub activation: Activation,
    pub head_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for PolicySection {
    fn default() -> Self {
        let p = PolicyConfig::new(4, HeadType::Hybrid);
        Self {
            head: p.head,
            hidden_sizes: p.encoder.hidden_sizes,
            latent_dim: p.encoder.latent_dim,
            activation: p.encoder.activation,
            head_hidden: p.head_hidden,
            critic_hidden: p.critic_hidden,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PqcSection {
    pub qubits: usize,
    pub layers: usize,
    pub entangler: Entangler,
}

impl Default for PqcSection {
    fn default() -> Self {
        Self {
            qubits: 4,
            layers: 3,
            entangler: Entangler::Chain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    /// Patterns evaluated after training; empty means the training pattern.
    pub patterns: Vec<String>,
    pub n_states: usize,
    pub refinement: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            patterns: Vec::new(),
            n_states: 500,
            refinement: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvSection,
    pub policy: PolicySection,
    pub pqc: PqcSection,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let unknown = unknown_keys(&value);
        if !unknown.is_empty() {
            return Err(ConfigError::UnknownKeys(unknown));
        }
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: disentangle::Error| ConfigError::Invalid(e.to_string());
        let pattern = self.pattern()?;
        if pattern.num_qubits() < 2 {
            return Err(ConfigError::Invalid("env.pattern needs at least two qubits".into()));
        }
        if self.env.max_budget == 0 {
            return Err(ConfigError::Invalid("env.max_budget must be positive".into()));
        }
        self.policy_config()?.validate().map_err(invalid)?;
        self.train.validate().map_err(invalid)?;
        for p in self.eval_patterns()? {
            if p.num_qubits() != pattern.num_qubits() {
                return Err(ConfigError::Invalid(format!(
                    "eval pattern {p} has {} qubits, env.pattern has {}",
                    p.num_qubits(),
                    pattern.num_qubits()
                )));
            }
        }
        Ok(())
    }

    pub fn pattern(&self) -> Result<EntanglementPattern, ConfigError> {
        parse_pattern(&self.env.pattern)
    }

    pub fn eval_patterns(&self) -> Result<Vec<EntanglementPattern>, ConfigError> {
        if self.eval.patterns.is_empty() {
            return Ok(vec![self.pattern()?]);
        }
        self.eval.patterns.iter().map(|p| parse_pattern(p)).collect()
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            max_budget: self.env.max_budget,
            record: false,
        }
    }

    pub fn circuit(&self) -> CircuitConfig {
        CircuitConfig {
            num_qubits: self.pqc.qubits,
            num_layers: self.pqc.layers,
            entangler: self.pqc.entangler,
        }
    }

    pub fn policy_config(&self) -> Result<PolicyConfig, ConfigError> {
        let p = &self.policy;
        Ok(PolicyConfig {
            num_qubits: self.pattern()?.num_qubits(),
            encoder: EncoderConfig {
                hidden_sizes: p.hidden_sizes.clone(),
                latent_dim: p.latent_dim,
                activation: p.activation,
            },
            head: p.head,
            pqc: self.circuit(),
            head_hidden: p.head_hidden.clone(),
            critic_hidden: p.critic_hidden.clone(),
        })
    }
}

pub fn parse_pattern(s: &str) -> Result<EntanglementPattern, ConfigError> {
    EntanglementPattern::parse(s).map_err(|e| ConfigError::Invalid(format!("pattern {s:?}: {e}")))
}

/// Dotted paths present in `table` but absent from the serialized defaults.
fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let known = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
    let mut out = BTreeSet::new();
    for (section, value) in table {
        match (known.get(section), value) {
            (Some(toml::Value::Table(k)), toml::Value::Table(v)) => {
                for key in v.keys() {
                    if !k.contains_key(key) {
                        out.insert(format!("{section}.{key}"));
                    }
                }
            }
            (Some(_), _) => {}
            (None, _) => {
                out.insert(section.clone());
            }
        }
    }
    out.into_iter().collect()
}
