//! Splitting criteria, split execution and the splitting-strategy driver.

pub mod criteria;
mod journal;

pub use criteria::{evaluate, parameter_test, q_value_test, split_parameter_test, split_q_value_test, Scored};
pub use journal::{JournalEntry, SplitJournal};

use crate::model::{Experience, MdpModel, ModelError, UpdateAlgorithm};
use crate::stats::TwoSampleTest;
use crate::tree::{DecisionTree, StateId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    ParameterTest,
    QValueTestMedian,
    QValueTestMultipoint,
}

impl CriterionKind {
    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::ParameterTest => "parameter_test",
            CriterionKind::QValueTestMedian => "q_value_test_median",
            CriterionKind::QValueTestMultipoint => "q_value_test_multipoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    pub criterion: CriterionKind,
    pub test: TwoSampleTest,
    pub max_type_i_error: f64,
}

/// A leaf split chosen by a criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDecision {
    pub state: StateId,
    pub param: usize,
    pub point: f64,
    pub error_prob: f64,
}

/// When and where splits are attempted. `steps` and `period` count
/// experiences, starting at 1 for the first one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    /// Never split.
    None,
    /// Try to split the source state of each new experience.
    Default,
    /// Chain split after every experience.
    Chain,
    /// No splits before `steps`, default afterwards.
    Training { steps: usize },
    /// No splits before `steps`, one chain split at `steps`, default afterwards.
    TrainingChain { steps: usize },
    /// Chain split every step, resetting the tree every `period` steps.
    ResetChain { period: usize },
    /// As `ResetChain`, using the multi-point Q-value test.
    ResetChainMultipoint { period: usize },
    /// Data gathering until `steps`, then a chain split, then reset and
    /// chain split every `period` steps.
    TrainingChainReset { steps: usize, period: usize },
    /// Every `period` steps each leaf is tested once; no splits otherwise.
    TwoPhase { period: usize },
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(format!("strategy {name} must be positive"))
            } else {
                Ok(())
            }
        };
        match *self {
            StrategyConfig::None | StrategyConfig::Default | StrategyConfig::Chain => Ok(()),
            StrategyConfig::Training { steps } | StrategyConfig::TrainingChain { steps } => positive("steps", steps),
            StrategyConfig::ResetChain { period }
            | StrategyConfig::ResetChainMultipoint { period }
            | StrategyConfig::TwoPhase { period } => positive("period", period),
            StrategyConfig::TrainingChainReset { steps, period } => {
                positive("steps", steps)?;
                positive("period", period)
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            StrategyConfig::None => "none".into(),
            StrategyConfig::Default => "default".into(),
            StrategyConfig::Chain => "chain".into(),
            StrategyConfig::Training { steps } => format!("training_{steps}"),
            StrategyConfig::TrainingChain { steps } => format!("training_chain_{steps}"),
            StrategyConfig::ResetChain { period } => format!("reset_{period}_chain"),
            StrategyConfig::ResetChainMultipoint { period } => format!("reset_{period}_chain_mp"),
            StrategyConfig::TrainingChainReset { steps, period } => format!("training_{steps}_chain_reset_{period}"),
            StrategyConfig::TwoPhase { period } => format!("two_phase_{period}"),
        }
    }
}

/// Applies a decision: splits the leaf, replays the affected experiences
/// and refreshes the values of every resulting state.
pub fn perform_split(model: &mut MdpModel, d: &SplitDecision, algo: &UpdateAlgorithm) -> Result<Vec<StateId>, ModelError> {
    let ids = model.split_state(d.state, d.param, &[d.point])?;
    for &s in &ids {
        model.refresh_values(s, algo)?;
    }
    Ok(ids)
}

/// Drives splitting for one MDP model and records every split and reset.
#[derive(Debug, Clone)]
pub struct Splitter {
    pub strategy: StrategyConfig,
    pub criterion: CriterionConfig,
    pub update: UpdateAlgorithm,
    initial_tree: DecisionTree,
    journal: SplitJournal,
}

impl Splitter {
    pub fn new(strategy: StrategyConfig, criterion: CriterionConfig, update: UpdateAlgorithm, initial_tree: DecisionTree) -> Self {
        Splitter {
            strategy,
            criterion,
            update,
            initial_tree,
            journal: SplitJournal::default(),
        }
    }

    pub fn journal(&self) -> &SplitJournal {
        &self.journal
    }

    pub fn initial_tree(&self) -> &DecisionTree {
        &self.initial_tree
    }

    fn try_split(&mut self, model: &mut MdpModel, s: StateId, step: usize, cfg: &CriterionConfig) -> Result<bool, ModelError> {
        let Some(d) = evaluate(model, s, cfg)? else {
            return Ok(false);
        };
        debug_assert!(d.error_prob <= cfg.max_type_i_error);
        perform_split(model, &d, &self.update)?;
        self.journal.push(JournalEntry::Split {
            step,
            state: d.state,
            param: model.tree().space().name(d.param).to_string(),
            point: d.point,
            error_prob: d.error_prob,
            criterion: cfg.criterion,
            test: cfg.test,
        });
        Ok(true)
    }

    /// Tests every leaf once, in id order, leaves created during the pass
    /// excluded.
    fn single_pass(&mut self, model: &mut MdpModel, step: usize, cfg: &CriterionConfig) -> Result<usize, ModelError> {
        let n = model.num_states();
        let mut done = 0;
        for i in 0..n {
            if self.try_split(model, StateId(i), step, cfg)? {
                done += 1;
            }
        }
        Ok(done)
    }

    /// Full passes until one performs no split. The total is bounded by the
    /// number of experiences.
    fn chain(&mut self, model: &mut MdpModel, step: usize, cfg: &CriterionConfig) -> Result<usize, ModelError> {
        let cap = model.log().len();
        let mut total = 0;
        loop {
            let done = self.single_pass(model, step, cfg)?;
            total += done;
            if done == 0 || total >= cap {
                return Ok(total);
            }
        }
    }

    /// Restores the initial tree and rebuilds the model from the full log.
    fn reset(&mut self, model: &mut MdpModel, step: usize) -> Result<(), ModelError> {
        model.reset_tree(self.initial_tree.clone());
        model.refresh_all(&self.update)?;
        self.journal.push(JournalEntry::Reset { step });
        Ok(())
    }

    /// Called once per decision step after the model update for `last`.
    /// Returns the number of splits performed.
    pub fn apply_strategy(&mut self, model: &mut MdpModel, step: usize, last: &Experience) -> Result<usize, ModelError> {
        let cfg = self.criterion;
        match self.strategy {
            StrategyConfig::None => Ok(0),
            StrategyConfig::Default => self.default_split(model, step, last, &cfg),
            StrategyConfig::Chain => self.chain(model, step, &cfg),
            StrategyConfig::Training { steps } => {
                if step < steps {
                    Ok(0)
                } else {
                    self.default_split(model, step, last, &cfg)
                }
            }
            StrategyConfig::TrainingChain { steps } => match step.cmp(&steps) {
                std::cmp::Ordering::Less => Ok(0),
                std::cmp::Ordering::Equal => self.chain(model, step, &cfg),
                std::cmp::Ordering::Greater => self.default_split(model, step, last, &cfg),
            },
            StrategyConfig::ResetChain { period } => {
                if step % period == 0 {
                    self.reset(model, step)?;
                }
                self.chain(model, step, &cfg)
            }
            StrategyConfig::ResetChainMultipoint { period } => {
                let mp = CriterionConfig {
                    criterion: CriterionKind::QValueTestMultipoint,
                    ..cfg
                };
                if step % period == 0 {
                    self.reset(model, step)?;
                }
                self.chain(model, step, &mp)
            }
            StrategyConfig::TrainingChainReset { steps, period } => {
                if step < steps {
                    return Ok(0);
                }
                if step == steps {
                    return self.chain(model, step, &cfg);
                }
                if (step - steps) % period == 0 {
                    self.reset(model, step)?;
                    return self.chain(model, step, &cfg);
                }
                Ok(0)
            }
            StrategyConfig::TwoPhase { period } => {
                if step % period == 0 {
                    self.single_pass(model, step, &cfg)
                } else {
                    Ok(0)
                }
            }
        }
    }

    fn default_split(&mut self, model: &mut MdpModel, step: usize, last: &Experience, cfg: &CriterionConfig) -> Result<usize, ModelError> {
        let s = model.classify(&last.m)?;
        Ok(usize::from(self.try_split(model, s, step, cfg)?))
    }
}
