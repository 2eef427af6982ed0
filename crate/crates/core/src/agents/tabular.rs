use super::{Agent, AgentConfig, AgentError, AgentKind};
use crate::model::{ActionId, Experience};
use crate::split::{criteria, CriterionConfig, CriterionKind, JournalEntry, Scored, SplitJournal, StrategyConfig};
use crate::tree::{DecisionTree, Measurement, ParameterSpace, StateId};

/// `Q(s,a) ← (1−α)·Q(s,a) + α·(r + γ·max_a' Q(s',a'))`. Returns the new value.
pub fn q_learning_update(q: &mut [Vec<f64>], s: StateId, a: ActionId, r: f64, s_next: StateId, alpha: f64, gamma: f64) -> f64 {
    let target = r + gamma * max_q(&q[s_next.0]);
    let cell = &mut q[s.0][a];
    *cell = (1.0 - alpha) * *cell + alpha * target;
    *cell
}

fn max_q(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Lowest id among the maximal entries.
fn argmax(row: &[f64]) -> ActionId {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = a;
        }
    }
    best
}

/// Tabular Q-learning over a decision tree. As QDT it keeps the
/// experiences of each leaf, splits with the configured criterion and
/// throws those experiences away afterwards; children start from the
/// parent's Q-values. With strategy `none` it is plain Q-learning over the
/// initial tree.
#[derive(Debug, Clone)]
pub struct QdtAgent {
    kind: AgentKind,
    tree: DecisionTree,
    q: Vec<Vec<f64>>,
    buffer: Vec<Vec<Experience>>,
    alpha: f64,
    gamma: f64,
    criterion: CriterionConfig,
    strategy: StrategyConfig,
    journal: SplitJournal,
    step: usize,
}

impl QdtAgent {
    pub fn new(kind: AgentKind, cfg: &AgentConfig, space: &ParameterSpace, num_actions: usize) -> Result<Self, AgentError> {
        cfg.validate()?;
        let strategy = if kind == AgentKind::QLearning {
            StrategyConfig::None
        } else {
            cfg.strategy
        };
        if !matches!(strategy, StrategyConfig::None | StrategyConfig::Default | StrategyConfig::Training { .. }) {
            return Err(AgentError::Config(format!(
                "the tabular agent supports strategies none, default and training, got {}",
                strategy.label()
            )));
        }
        let tree = cfg.initial_tree.build(space)?;
        let n = tree.num_states();
        Ok(QdtAgent {
            kind,
            tree,
            q: vec![vec![0.0; num_actions]; n],
            buffer: vec![Vec::new(); n],
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            criterion: cfg.criterion,
            strategy,
            journal: SplitJournal::default(),
            step: 0,
        })
    }

    pub fn tree(&self) -> &DecisionTree {
        &self.tree
    }

    pub fn q_table(&self) -> &[Vec<f64>] {
        &self.q
    }

    fn splitting_now(&self) -> bool {
        match self.strategy {
            StrategyConfig::None => false,
            StrategyConfig::Training { steps } => self.step >= steps,
            _ => true,
        }
    }

    fn try_split(&mut self, s: StateId) -> Result<bool, AgentError> {
        let a = argmax(&self.q[s.0]);
        let mut samples = Vec::new();
        for e in self.buffer[s.0].iter().filter(|e| e.action == a) {
            let s2 = self.tree.classify(&e.m_next)?;
            samples.push(Scored {
                m: &e.m,
                q: e.reward + self.gamma * max_q(&self.q[s2.0]),
            });
        }
        let cfg = &self.criterion;
        let decision = match cfg.criterion {
            CriterionKind::ParameterTest => criteria::parameter_test(&self.tree, s, &samples, self.q[s.0][a], cfg),
            CriterionKind::QValueTestMedian => criteria::q_value_test(&self.tree, s, &samples, false, cfg),
            CriterionKind::QValueTestMultipoint => criteria::q_value_test(&self.tree, s, &samples, true, cfg),
        };
        let Some(d) = decision else {
            return Ok(false);
        };
        self.tree.split_leaf(s, d.param, d.point)?;
        let parent = self.q[s.0].clone();
        self.q.push(parent);
        self.buffer[s.0].clear();
        self.buffer.push(Vec::new());
        self.journal.push(JournalEntry::Split {
            step: self.step,
            state: s,
            param: self.tree.space().name(d.param).to_string(),
            point: d.point,
            error_prob: d.error_prob,
            criterion: cfg.criterion,
            test: cfg.test,
        });
        Ok(true)
    }
}

impl Agent for QdtAgent {
    fn kind(&self) -> AgentKind {
        self.kind
    }

    fn num_actions(&self) -> usize {
        self.q.first().map_or(0, Vec::len)
    }

    fn num_states(&self) -> usize {
        self.tree.num_states()
    }

    fn greedy_action(&self, m: &Measurement) -> Result<Option<ActionId>, AgentError> {
        let s = self.tree.classify(m)?;
        Ok(Some(argmax(&self.q[s.0])))
    }

    fn learn(&mut self, e: Experience) -> Result<usize, AgentError> {
        self.step += 1;
        let s = self.tree.classify(&e.m)?;
        let s2 = self.tree.classify(&e.m_next)?;
        q_learning_update(&mut self.q, s, e.action, e.reward, s2, self.alpha, self.gamma);
        if self.strategy == StrategyConfig::None {
            return Ok(0);
        }
        self.buffer[s.0].push(e);
        if !self.splitting_now() {
            return Ok(0);
        }
        Ok(usize::from(self.try_split(s)?))
    }

    fn journal(&self) -> &SplitJournal {
        &self.journal
    }
}
