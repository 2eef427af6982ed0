//! Agents: the model-based MDP_DT (and its static-grid variant) and the
//! model-free QDT (and static-grid Q-learning), plus the e-greedy
//! train / greedy evaluation loop.

mod tabular;

pub use tabular::{q_learning_update, QdtAgent};

use crate::env::{ClusterEnv, RELEVANT_PARAMS};
use crate::model::{ActionId, Experience, MdpModel, ModelError, UpdateAlgorithm};
use crate::split::{CriterionConfig, SplitJournal, Splitter, StrategyConfig};
use crate::tree::{DecisionTree, Measurement, ParameterSpace, TreeDoc, TreeError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("invalid agent configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    MdpDt,
    StaticMdp,
    Qdt,
    QLearning,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::MdpDt, AgentKind::StaticMdp, AgentKind::Qdt, AgentKind::QLearning];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::MdpDt => "mdp_dt",
            AgentKind::StaticMdp => "mdp",
            AgentKind::Qdt => "qdt",
            AgentKind::QLearning => "q_learning",
        }
    }

    /// Static agents never split.
    pub fn splits(self) -> bool {
        matches!(self, AgentKind::MdpDt | AgentKind::Qdt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDim {
    pub param: String,
    pub points: Vec<f64>,
}

/// Starting tree of an agent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeSpec {
    #[default]
    SingleRoot,
    Grid { dims: Vec<GridDim> },
}

impl TreeSpec {
    pub fn build(&self, space: &ParameterSpace) -> Result<DecisionTree, TreeError> {
        match self {
            TreeSpec::SingleRoot => Ok(DecisionTree::new(space.clone())),
            TreeSpec::Grid { dims } => {
                let spec: Vec<(String, Vec<f64>)> = dims.iter().map(|d| (d.param.clone(), d.points.clone())).collect();
                DecisionTree::build_grid(space.clone(), &spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub update: UpdateAlgorithm,
    pub criterion: CriterionConfig,
    pub strategy: StrategyConfig,
    pub initial_tree: TreeSpec,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.criterion.max_type_i_error > 0.0 && self.criterion.max_type_i_error < 1.0) {
            return bad("max_type_i_error must lie in (0, 1)");
        }
        self.strategy.validate().map_err(AgentError::Config)
    }
}

/// Anything that can act in and learn from the simulator.
pub trait Agent: Send {
    fn kind(&self) -> AgentKind;
    fn num_actions(&self) -> usize;
    fn num_states(&self) -> usize;
    /// Current best action for `m`, `None` when nothing is known yet.
    fn greedy_action(&self, m: &Measurement) -> Result<Option<ActionId>, AgentError>;
    /// Learns from one experience; returns the number of splits performed.
    fn learn(&mut self, e: Experience) -> Result<usize, AgentError>;
    fn journal(&self) -> &SplitJournal;
}

/// e-greedy choice; falls back to a random action when nothing is known.
pub fn select_action<R: Rng + ?Sized>(agent: &dyn Agent, m: &Measurement, epsilon: f64, rng: &mut R) -> Result<ActionId, AgentError> {
    let n = agent.num_actions();
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..n));
    }
    Ok(match agent.greedy_action(m)? {
        Some(a) => a,
        None => rng.gen_range(0..n),
    })
}

/// MDP_DT, or the static-grid MDP when built with strategy `none`.
#[derive(Debug, Clone)]
pub struct MdpDtAgent {
    kind: AgentKind,
    model: MdpModel,
    splitter: Splitter,
    step: usize,
}

impl MdpDtAgent {
    pub fn new(kind: AgentKind, cfg: &AgentConfig, space: &ParameterSpace, num_actions: usize) -> Result<Self, AgentError> {
        cfg.validate()?;
        let tree = cfg.initial_tree.build(space)?;
        let strategy = if kind == AgentKind::StaticMdp {
            StrategyConfig::None
        } else {
            cfg.strategy
        };
        Ok(MdpDtAgent {
            kind,
            model: MdpModel::new(tree.clone(), num_actions, cfg.gamma)?,
            splitter: Splitter::new(strategy, cfg.criterion, cfg.update, tree),
            step: 0,
        })
    }

    pub fn model(&self) -> &MdpModel {
        &self.model
    }

    pub fn splitter(&self) -> &Splitter {
        &self.splitter
    }

    pub fn update_algorithm(&self) -> &UpdateAlgorithm {
        &self.splitter.update
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            tree: self.model.tree().to_doc(),
            num_actions: self.model.num_actions(),
            gamma: self.model.gamma(),
            experiences: self.model.log().to_vec(),
            tallies: self.model.all_stats().to_vec(),
            values: self.model.values().to_vec(),
            q: self.model.q_table().to_vec(),
        }
    }
}

impl Agent for MdpDtAgent {
    fn kind(&self) -> AgentKind {
        self.kind
    }

    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn num_states(&self) -> usize {
        self.model.num_states()
    }

    fn greedy_action(&self, m: &Measurement) -> Result<Option<ActionId>, AgentError> {
        let s = self.model.classify(m)?;
        match self.model.optimal_action(s) {
            Ok(a) => Ok(Some(a)),
            Err(ModelError::NoData(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn learn(&mut self, e: Experience) -> Result<usize, AgentError> {
        self.step += 1;
        let last = e.clone();
        let (s, _) = self.model.update_mdp_model(e)?;
        self.model.refresh_values(s, &self.splitter.update)?;
        Ok(self.splitter.apply_strategy(&mut self.model, self.step, &last)?)
    }

    fn journal(&self) -> &SplitJournal {
        self.splitter.journal()
    }
}

/// Tree, raw experiences, tallies and value tables of a model-based agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub tree: TreeDoc,
    pub num_actions: usize,
    pub gamma: f64,
    pub experiences: Vec<Experience>,
    pub tallies: Vec<Vec<crate::model::QStats>>,
    pub values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl AgentCheckpoint {
    /// Rebuilds the model; the stored tallies must match the replayed log.
    pub fn restore(&self) -> Result<MdpModel, AgentError> {
        let tree = DecisionTree::from_doc(&self.tree)?;
        let mut model = MdpModel::rebuild(tree, self.num_actions, self.gamma, &self.experiences)?;
        if model.all_stats() != self.tallies.as_slice() {
            return Err(AgentError::Config("checkpoint tallies disagree with its experiences".into()));
        }
        model.load_values(self.values.clone(), self.q.clone())?;
        Ok(model)
    }
}

pub fn build_agent(kind: AgentKind, cfg: &AgentConfig, space: &ParameterSpace, num_actions: usize) -> Result<Box<dyn Agent>, AgentError> {
    Ok(match kind {
        AgentKind::MdpDt | AgentKind::StaticMdp => Box::new(MdpDtAgent::new(kind, cfg, space, num_actions)?),
        AgentKind::Qdt | AgentKind::QLearning => Box::new(QdtAgent::new(kind, cfg, space, num_actions)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Train { epsilon: f64 },
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RunMetrics {
    pub steps: usize,
    pub total_reward: f64,
    /// Splits over the agent's life, counted from its journal.
    pub splits_total: usize,
    pub splits_correct: usize,
    pub final_states: usize,
}

impl RunMetrics {
    pub fn accuracy(&self) -> Option<f64> {
        (self.splits_total > 0).then(|| self.splits_correct as f64 / self.splits_total as f64)
    }
}

/// Split totals of a journal against the simulator's relevant parameters.
pub fn split_counts(journal: &SplitJournal) -> (usize, usize) {
    let total = journal.total_splits();
    let correct = journal
        .entries()
        .iter()
        .filter(|e| matches!(e, crate::split::JournalEntry::Split { param, .. } if RELEVANT_PARAMS.contains(&param.as_str())))
        .count();
    (total, correct)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: u64,
    pub load: f64,
    pub vms: i64,
    pub action: ActionId,
    pub reward: f64,
}

/// Sense-act-learn loop. In evaluation mode only greedy actions are taken
/// and nothing is learned.
pub fn run_episode<R: Rng + ?Sized>(
    agent: &mut dyn Agent,
    env: &mut ClusterEnv,
    steps: usize,
    mode: Mode,
    rng: &mut R,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> Result<RunMetrics, AgentError> {
    let mut total = 0.0;
    for _ in 0..steps {
        let m = env.observe().clone();
        let epsilon = match mode {
            Mode::Train { epsilon } => epsilon,
            Mode::Eval => 0.0,
        };
        let a = select_action(agent, &m, epsilon, rng)?;
        let e = env.step_experience(a);
        total += e.reward;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TracePoint {
                t: env.time(),
                load: env.config().load(env.time()),
                vms: env.vms(),
                action: a,
                reward: e.reward,
            });
        }
        if matches!(mode, Mode::Train { .. }) {
            agent.learn(e)?;
        }
    }
    let (splits_total, splits_correct) = split_counts(agent.journal());
    Ok(RunMetrics {
        steps,
        total_reward: total,
        splits_total,
        splits_correct,
        final_states: agent.num_states(),
    })
}

/// Replays a recorded log through the agent's learning machinery.
pub fn train_offline(agent: &mut dyn Agent, log: &[Experience]) -> Result<usize, AgentError> {
    let mut splits = 0;
    for e in log {
        splits += agent.learn(e.clone())?;
    }
    Ok(splits)
}

/// Total reward of uniformly random actions over `steps`, for reference.
pub fn random_policy_reward<R: Rng + ?Sized>(env: &mut ClusterEnv, steps: usize, rng: &mut R) -> f64 {
    (0..steps)
        .map(|_| {
            let a = rng.gen_range(0..env.num_actions());
            env.step(a).1
        })
        .sum()
}
