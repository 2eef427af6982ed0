//! Full MDP model over the states of a decision tree.
//!
//! The model keeps every experience it has seen in arrival order. Tallies
//! (transition counts and reward sums) and the placement of experiences per
//! `(source, destination)` pair are always derivable from that log through
//! the current tree; splits rebuild the affected part by replaying the
//! experiences in log order, so the floating-point reward sums come out
//! bit-identical to a from-scratch rebuild.

pub mod log;
mod solve;

use crate::tree::{DecisionTree, Measurement, StateId, TreeError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub use solve::UpdateAlgorithm;

pub type ActionId = usize;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("action {action} was never tried from state {state}")]
    NeverTried { state: StateId, action: ActionId },
    #[error("no action has been tried from state {0}")]
    NoData(StateId),
    #[error("action {0} is outside the action set")]
    ActionOutOfRange(ActionId),
    #[error("discount factor must lie in [0, 1), got {0}")]
    InvalidDiscount(f64),
    #[error("value iteration did not converge within {0} sweeps")]
    NonConvergence(usize),
    #[error("experience log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One observed transition, stored as raw measurements so it survives
/// re-partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub m: Measurement,
    pub action: ActionId,
    pub m_next: Measurement,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub count: u64,
    pub reward_sum: f64,
}

/// Tallies of one `(state, action)` pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QStats {
    pub count: u64,
    pub dest: BTreeMap<StateId, Transition>,
}

impl QStats {
    /// Empirical transition probability towards `to`.
    pub fn probability(&self, to: StateId) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.dest.get(&to).map_or(0.0, |t| t.count as f64 / self.count as f64)
    }
}

/// Log indices of experiences per destination, for one source state.
pub type Placement = BTreeMap<StateId, Vec<usize>>;

#[derive(Debug, Clone)]
pub struct MdpModel {
    tree: DecisionTree,
    num_actions: usize,
    gamma: f64,
    log: Vec<Experience>,
    stats: Vec<Vec<QStats>>,
    placement: Vec<Placement>,
    inbound: Vec<BTreeSet<StateId>>,
    values: Vec<f64>,
    q: Vec<Vec<f64>>,
}

impl MdpModel {
    pub fn new(tree: DecisionTree, num_actions: usize, gamma: f64) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::InvalidDiscount(gamma));
        }
        let n = tree.num_states();
        Ok(MdpModel {
            tree,
            num_actions,
            gamma,
            log: Vec::new(),
            stats: vec![vec![QStats::default(); num_actions]; n],
            placement: vec![Placement::new(); n],
            inbound: vec![BTreeSet::new(); n],
            values: vec![0.0; n],
            q: vec![vec![0.0; num_actions]; n],
        })
    }

    /// Fresh model over `tree` fed with `log` in order. Values are left at 0.
    pub fn rebuild(tree: DecisionTree, num_actions: usize, gamma: f64, log: &[Experience]) -> Result<Self, ModelError> {
        let mut model = MdpModel::new(tree, num_actions, gamma)?;
        for e in log {
            model.update_mdp_model(e.clone())?;
        }
        Ok(model)
    }

    pub fn tree(&self) -> &DecisionTree {
        &self.tree
    }

    pub fn num_states(&self) -> usize {
        self.tree.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log(&self) -> &[Experience] {
        &self.log
    }

    pub fn classify(&self, m: &Measurement) -> Result<StateId, ModelError> {
        Ok(self.tree.classify(m)?)
    }

    pub fn stats(&self, s: StateId, a: ActionId) -> &QStats {
        &self.stats[s.0][a]
    }

    pub fn all_stats(&self) -> &[Vec<QStats>] {
        &self.stats
    }

    pub fn placement(&self) -> &[Placement] {
        &self.placement
    }

    pub fn value(&self, s: StateId) -> f64 {
        self.values[s.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored Q-value of `(s, a)` as of the last backup of `s`.
    pub fn stored_q(&self, s: StateId, a: ActionId) -> f64 {
        self.q[s.0][a]
    }

    pub fn tried(&self, s: StateId, a: ActionId) -> bool {
        self.stats[s.0][a].count > 0
    }

    /// Records an experience: appends it to the log, files it under its
    /// `(s, s')` pair and bumps the tallies.
    pub fn update_mdp_model(&mut self, e: Experience) -> Result<(StateId, StateId), ModelError> {
        if e.action >= self.num_actions {
            return Err(ModelError::ActionOutOfRange(e.action));
        }
        let s = self.tree.classify(&e.m)?;
        let s_next = self.tree.classify(&e.m_next)?;
        let idx = self.log.len();
        self.log.push(e);
        self.file(idx, s, s_next);
        Ok((s, s_next))
    }

    fn file(&mut self, idx: usize, s: StateId, s_next: StateId) {
        let e = &self.log[idx];
        self.placement[s.0].entry(s_next).or_default().push(idx);
        self.inbound[s_next.0].insert(s);
        let qs = &mut self.stats[s.0][e.action];
        qs.count += 1;
        let t = qs.dest.entry(s_next).or_default();
        t.count += 1;
        t.reward_sum += e.reward;
    }

    /// Q(s, a) from the tallies and the current state values.
    pub fn q_value(&self, s: StateId, a: ActionId) -> Result<f64, ModelError> {
        let qs = &self.stats[s.0][a];
        if qs.count == 0 {
            return Err(ModelError::NeverTried { state: s, action: a });
        }
        let count = qs.count as f64;
        Ok(qs
            .dest
            .iter()
            .map(|(to, t)| {
                let tr = t.count as f64;
                (tr / count) * (t.reward_sum / tr + self.gamma * self.values[to.0])
            })
            .sum())
    }

    /// `r + γ·V(s')` with `s'` found through the current tree.
    pub fn q_value_of_experience(&self, e: &Experience) -> Result<f64, ModelError> {
        let s_next = self.tree.classify(&e.m_next)?;
        Ok(e.reward + self.gamma * self.values[s_next.0])
    }

    /// Best tried action of `s`; ties go to the lowest action id.
    pub fn optimal_action(&self, s: StateId) -> Result<ActionId, ModelError> {
        let mut best: Option<(ActionId, f64)> = None;
        for a in 0..self.num_actions {
            if !self.tried(s, a) {
                continue;
            }
            let q = self.q[s.0][a];
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((a, q));
            }
        }
        best.map(|(a, _)| a).ok_or(ModelError::NoData(s))
    }

    /// Log indices of all experiences starting in `s`, in log order.
    pub fn experiences_from(&self, s: StateId) -> Vec<usize> {
        let mut idx: Vec<usize> = self.placement[s.0].values().flatten().copied().collect();
        idx.sort_unstable();
        idx
    }

    /// Splits leaf `s` at `points` and re-files every experience that
    /// started or ended in `s` under the new tree. Values of the new states
    /// start from the value `s` had; the caller refreshes them.
    pub fn split_state(&mut self, s: StateId, param: usize, points: &[f64]) -> Result<Vec<StateId>, ModelError> {
        self.tree.check_split(s, param, points)?;
        let mut drained: Vec<usize> = Vec::new();

        // experiences(s, *)
        for (to, list) in std::mem::take(&mut self.placement[s.0]) {
            self.inbound[to.0].remove(&s);
            drained.extend(list);
        }
        // experiences(*, s)
        for from in std::mem::take(&mut self.inbound[s.0]) {
            if let Some(list) = self.placement[from.0].remove(&s) {
                drained.extend(list);
            }
            for qs in &mut self.stats[from.0] {
                if let Some(t) = qs.dest.remove(&s) {
                    qs.count -= t.count;
                }
            }
        }
        for qs in &mut self.stats[s.0] {
            *qs = QStats::default();
        }
        drained.sort_unstable();
        drained.dedup();

        let ids = self.tree.split_leaf_multi(s, param, points)?;
        let n = self.tree.num_states();
        let inherited = self.values[s.0];
        let inherited_q = self.q[s.0].clone();
        self.stats.resize(n, vec![QStats::default(); self.num_actions]);
        self.placement.resize(n, Placement::new());
        self.inbound.resize(n, BTreeSet::new());
        self.values.resize(n, inherited);
        self.q.resize(n, inherited_q);

        for idx in drained {
            let e = &self.log[idx];
            let from = self.tree.classify_unchecked(&e.m);
            let to = self.tree.classify_unchecked(&e.m_next);
            self.file(idx, from, to);
        }
        Ok(ids)
    }

    /// Swaps in a new tree and re-files the whole log under it. Values are
    /// reset to zero.
    pub fn reset_tree(&mut self, tree: DecisionTree) {
        let n = tree.num_states();
        self.tree = tree;
        self.stats = vec![vec![QStats::default(); self.num_actions]; n];
        self.placement = vec![Placement::new(); n];
        self.inbound = vec![BTreeSet::new(); n];
        self.values = vec![0.0; n];
        self.q = vec![vec![0.0; self.num_actions]; n];
        for idx in 0..self.log.len() {
            let e = &self.log[idx];
            let from = self.tree.classify_unchecked(&e.m);
            let to = self.tree.classify_unchecked(&e.m_next);
            self.file(idx, from, to);
        }
    }

    /// Tallies and placement equal those of `other` exactly.
    pub fn same_tallies(&self, other: &MdpModel) -> bool {
        self.stats == other.stats && self.placement == other.placement
    }

    pub(crate) fn inbound(&self, s: StateId) -> &BTreeSet<StateId> {
        &self.inbound[s.0]
    }

    pub(crate) fn set_backup(&mut self, s: StateId, q: Vec<f64>, v: f64) {
        self.q[s.0] = q;
        self.values[s.0] = v;
    }

    pub(crate) fn set_values(&mut self, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.values.len());
        self.values = values;
    }

    /// Restores value tables, e.g. from a checkpoint.
    pub fn load_values(&mut self, values: Vec<f64>, q: Vec<Vec<f64>>) -> Result<(), ModelError> {
        if values.len() != self.num_states() || q.len() != self.num_states() || q.iter().any(|r| r.len() != self.num_actions) {
            return Err(ModelError::Parse {
                line: 0,
                message: "value table does not match the tree".into(),
            });
        }
        self.values = values;
        self.q = q;
        Ok(())
    }

    pub fn q_table(&self) -> &[Vec<f64>] {
        &self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::ParameterSpace;

    fn line_tree() -> DecisionTree {
        let mut t = DecisionTree::new(ParameterSpace::continuous(&["x"]).unwrap());
        t.split_leaf_multi(StateId(0), 0, &[1.0, 2.0]).unwrap();
        t
    }

    fn exp(x: f64, a: ActionId, x2: f64, r: f64) -> Experience {
        Experience {
            m: Measurement(vec![x]),
            action: a,
            m_next: Measurement(vec![x2]),
            reward: r,
        }
    }

    #[test]
    fn single_experience() {
        let mut m = MdpModel::new(line_tree(), 2, 0.5).unwrap();
        m.update_mdp_model(exp(0.5, 1, 1.5, 7.0)).unwrap();
        let qs = m.stats(StateId(0), 1);
        assert_eq!(qs.probability(StateId(1)), 1.0);
        assert_eq!(m.q_value(StateId(0), 1).unwrap(), 7.0);
        assert!(matches!(m.q_value(StateId(0), 0), Err(ModelError::NeverTried { .. })));
    }

    #[test]
    fn two_destinations_split_probability() {
        let mut m = MdpModel::new(line_tree(), 1, 0.5).unwrap();
        m.update_mdp_model(exp(0.5, 0, 1.5, 0.0)).unwrap();
        m.update_mdp_model(exp(0.5, 0, 2.5, 0.0)).unwrap();
        let qs = m.stats(StateId(0), 0);
        assert_eq!(qs.probability(StateId(1)), 0.5);
        assert_eq!(qs.probability(StateId(2)), 0.5);
    }

    #[test]
    fn q_of_experience_uses_current_values() {
        let mut m = MdpModel::new(line_tree(), 1, 0.85).unwrap();
        let e = exp(0.5, 0, 1.5, 10.0);
        m.set_values(vec![0.0, 20.0, 0.0]);
        assert!((m.q_value_of_experience(&e).unwrap() - 27.0).abs() < 1e-12);
        let m0 = MdpModel::new(line_tree(), 1, 0.0).unwrap();
        assert_eq!(m0.q_value_of_experience(&e).unwrap(), 10.0);
    }

    #[test]
    fn deterministic_self_loop_q() {
        let t = DecisionTree::new(ParameterSpace::continuous(&["x"]).unwrap());
        let mut m = MdpModel::new(t, 1, 0.5).unwrap();
        m.update_mdp_model(exp(0.0, 0, 0.0, 1.0)).unwrap();
        m.set_values(vec![2.0]);
        assert_eq!(m.q_value(StateId(0), 0).unwrap(), 2.0);
    }

    #[test]
    fn zero_discount_gives_mean_reward() {
        let mut m = MdpModel::new(line_tree(), 1, 0.0).unwrap();
        for (x2, r) in [(0.2, 1.0), (1.2, 2.0), (2.2, 6.0)] {
            m.update_mdp_model(exp(0.5, 0, x2, r)).unwrap();
        }
        m.set_values(vec![100.0, 100.0, 100.0]);
        assert!((m.q_value(StateId(0), 0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_action_ties_and_nodata() {
        let mut m = MdpModel::new(line_tree(), 3, 0.5).unwrap();
        assert!(matches!(m.optimal_action(StateId(0)), Err(ModelError::NoData(_))));
        m.update_mdp_model(exp(0.5, 2, 0.5, 3.0)).unwrap();
        m.single_update(StateId(0));
        assert_eq!(m.optimal_action(StateId(0)).unwrap(), 2);
        m.update_mdp_model(exp(0.5, 1, 0.5, 3.0)).unwrap();
        m.single_update(StateId(0));
        assert_eq!(m.optimal_action(StateId(0)).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_discount_and_action() {
        assert!(matches!(
            MdpModel::new(line_tree(), 1, 1.0),
            Err(ModelError::InvalidDiscount(_))
        ));
        let mut m = MdpModel::new(line_tree(), 1, 0.5).unwrap();
        assert!(matches!(
            m.update_mdp_model(exp(0.5, 4, 0.5, 0.0)),
            Err(ModelError::ActionOutOfRange(4))
        ));
        assert!(m.log().is_empty());
    }

    #[test]
    fn split_with_no_experiences() {
        let mut m = MdpModel::new(DecisionTree::new(ParameterSpace::continuous(&["x"]).unwrap()), 2, 0.5).unwrap();
        let ids = m.split_state(StateId(0), 0, &[0.0]).unwrap();
        assert_eq!(ids, vec![StateId(0), StateId(1)]);
        assert!(m.all_stats().iter().flatten().all(|q| q.count == 0));
    }

    #[test]
    fn self_loop_experience_moves_to_children() {
        let t = DecisionTree::new(ParameterSpace::continuous(&["x"]).unwrap());
        let mut m = MdpModel::new(t, 1, 0.5).unwrap();
        m.update_mdp_model(exp(-1.0, 0, 1.0, 4.0)).unwrap();
        m.split_state(StateId(0), 0, &[0.0]).unwrap();
        assert_eq!(m.stats(StateId(0), 0).count, 1);
        assert_eq!(m.stats(StateId(0), 0).dest[&StateId(1)].count, 1);
        assert_eq!(m.stats(StateId(1), 0).count, 0);
        assert_eq!(m.placement()[0][&StateId(1)], vec![0]);
    }

    #[test]
    fn failed_split_leaves_model_untouched() {
        let mut m = MdpModel::new(line_tree(), 1, 0.5).unwrap();
        m.update_mdp_model(exp(0.5, 0, 1.5, 1.0)).unwrap();
        m.update_mdp_model(exp(1.5, 0, 0.5, 2.0)).unwrap();
        let before = m.clone();
        assert!(m.split_state(StateId(0), 0, &[5.0]).is_err());
        assert!(m.same_tallies(&before));
    }
}
