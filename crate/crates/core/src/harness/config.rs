//! Experiment configuration files (TOML). Every constant that affects a
//! run is spelled out in the file; nothing falls back to a default.

use crate::agents::{AgentConfig, AgentKind, TreeSpec};
use crate::env::{EnvConfig, WorkloadProfile};
use crate::split::{CriterionKind, StrategyConfig};
use crate::stats::TwoSampleTest;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed_base: u64,
    pub replicates: usize,
    pub train_steps: usize,
    pub eval_steps: usize,
}

/// Grid over criteria, tests and margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub criteria: Vec<CriterionKind>,
    pub tests: Vec<TwoSampleTest>,
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedStrategy {
    pub name: String,
    pub strategy: StrategyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategiesSpec {
    pub entries: Vec<NamedStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTree {
    pub name: String,
    pub tree: TreeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSpec {
    pub trees: Vec<NamedTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareAgent {
    pub name: String,
    pub kind: AgentKind,
    pub initial_tree: TreeSpec,
}

/// Offline training on a random-action dataset, then greedy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub dataset_size: usize,
    pub eval_profile: WorkloadProfile,
    pub agents: Vec<CompareAgent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub experiment: ExperimentSpec,
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub sweep: Option<SweepSpec>,
    pub strategies: Option<StrategiesSpec>,
    pub grids: Option<GridsSpec>,
    pub compare: Option<CompareSpec>,
    pub dataset: Option<DatasetSpec>,
}

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig {
        field: field.to_string(),
        message: message.into(),
    }
}

fn distinct<T: PartialEq>(field: &str, xs: &[T]) -> Result<(), HarnessError> {
    for (i, x) in xs.iter().enumerate() {
        if xs[..i].contains(x) {
            return Err(invalid(field, "values must be distinct"));
        }
    }
    if xs.is_empty() {
        return Err(invalid(field, "at least one value is required"));
    }
    Ok(())
}

impl HarnessConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: HarnessConfig = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.experiment.replicates < 1 {
            return Err(invalid("experiment.replicates", "must be at least 1"));
        }
        self.env.validate().map_err(|m| invalid("env", m))?;
        self.agent.validate().map_err(|e| invalid("agent", e.to_string()))?;
        let space = self.env.space();
        self.agent
            .initial_tree
            .build(&space)
            .map_err(|e| invalid("agent.initial_tree", e.to_string()))?;
        if let Some(s) = &self.sweep {
            distinct("sweep.criteria", &s.criteria)?;
            distinct("sweep.tests", &s.tests)?;
            distinct("sweep.margins", &s.margins)?;
            if s.margins.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
                return Err(invalid("sweep.margins", "margins must lie in (0, 1)"));
            }
        }
        if let Some(s) = &self.strategies {
            let names: Vec<&str> = s.entries.iter().map(|e| e.name.as_str()).collect();
            distinct("strategies.entries.name", &names)?;
            for e in &s.entries {
                e.strategy.validate().map_err(|m| invalid(&format!("strategies.{}", e.name), m))?;
            }
        }
        if let Some(g) = &self.grids {
            let names: Vec<&str> = g.trees.iter().map(|e| e.name.as_str()).collect();
            distinct("grids.trees.name", &names)?;
            for t in &g.trees {
                t.tree.build(&space).map_err(|e| invalid(&format!("grids.{}", t.name), e.to_string()))?;
            }
        }
        if let Some(c) = &self.compare {
            c.eval_profile.validate().map_err(|m| invalid("compare.eval_profile", m))?;
            let names: Vec<&str> = c.agents.iter().map(|e| e.name.as_str()).collect();
            distinct("compare.agents.name", &names)?;
            for a in &c.agents {
                a.initial_tree
                    .build(&space)
                    .map_err(|e| invalid(&format!("compare.{}", a.name), e.to_string()))?;
            }
        }
        Ok(())
    }
}
