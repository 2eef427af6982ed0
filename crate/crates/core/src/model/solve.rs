//! Value updates: single backups, value iteration and prioritized sweeping.

use super::{MdpModel, ModelError};
use crate::tree::StateId;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// How state values are refreshed after each model update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateAlgorithm {
    /// Recompute Q(s, ·) and V(s) of the updated state only.
    Single,
    /// Full value iteration until the largest change is below `tolerance`.
    ValueIteration { tolerance: f64, max_sweeps: usize },
    /// Prioritized sweeping from the updated state.
    PrioritizedSweeping { threshold: f64, max_backups: usize },
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    priority: f64,
    state: StateId,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on priority, lower state id first on ties
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl MdpModel {
    /// Bellman backup of one state. Returns `|ΔV(s)|`.
    fn backup(&mut self, s: StateId) -> f64 {
        let mut q = self.q[s.0].clone();
        let mut best: Option<f64> = None;
        for (a, slot) in q.iter_mut().enumerate() {
            if let Ok(v) = self.q_value(s, a) {
                *slot = v;
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        let v = best.unwrap_or(0.0);
        let delta = (v - self.values[s.0]).abs();
        self.set_backup(s, q, v);
        delta
    }

    /// Recomputes Q(s, ·) from the tallies and sets V(s) to their maximum.
    pub fn single_update(&mut self, s: StateId) {
        self.backup(s);
    }

    /// Synchronous value iteration until `max |ΔV| < tolerance`. Returns the
    /// number of sweeps.
    pub fn value_iteration(&mut self, tolerance: f64, max_sweeps: usize) -> Result<usize, ModelError> {
        let n = self.num_states();
        for sweep in 1..=max_sweeps {
            let mut next = vec![0.0; n];
            let mut delta: f64 = 0.0;
            for (i, slot) in next.iter_mut().enumerate() {
                let s = StateId(i);
                let best = (0..self.num_actions)
                    .filter_map(|a| self.q_value(s, a).ok())
                    .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |b| b.max(v))));
                *slot = best.unwrap_or(0.0);
                delta = delta.max((*slot - self.values[i]).abs());
            }
            self.set_values(next);
            if delta < tolerance {
                self.refresh_q();
                return Ok(sweep);
            }
        }
        self.refresh_q();
        Err(ModelError::NonConvergence(max_sweeps))
    }

    /// Recomputes every stored Q-value against the current V, leaving V as is.
    fn refresh_q(&mut self) {
        for i in 0..self.num_states() {
            let s = StateId(i);
            for a in 0..self.num_actions {
                if let Ok(v) = self.q_value(s, a) {
                    self.q[i][a] = v;
                }
            }
        }
    }

    /// Prioritized sweeping starting from `s`.
    ///
    /// Each predecessor `x` of a backed-up state accumulates
    /// `γ · max_a T(x, a, s) · |ΔV(s)|`, an upper bound on how far its own
    /// backup is out of date. States whose accumulated priority exceeds
    /// `threshold` are queued; the sweep stops when the queue empties or
    /// after `max_backups` backups. Returns the number of backups done.
    pub fn prioritized_sweeping(&mut self, s: StateId, threshold: f64, max_backups: usize) -> usize {
        self.sweep(&[s], threshold, max_backups)
    }

    /// Prioritized sweeping seeded with every state.
    pub fn sweep_all(&mut self, threshold: f64, max_backups: usize) -> usize {
        let all: Vec<StateId> = (0..self.num_states()).map(StateId).collect();
        self.sweep(&all, threshold, max_backups)
    }

    fn sweep(&mut self, seeds: &[StateId], threshold: f64, max_backups: usize) -> usize {
        let n = self.num_states();
        let mut priority = vec![0.0f64; n];
        let mut heap = BinaryHeap::new();
        for &s in seeds {
            priority[s.0] = f64::INFINITY;
            heap.push(Queued {
                priority: f64::INFINITY,
                state: s,
            });
        }
        let mut backups = 0;
        while let Some(Queued { priority: p, state }) = heap.pop() {
            if p != priority[state.0] {
                continue; // stale entry
            }
            priority[state.0] = 0.0;
            let delta = self.backup(state);
            backups += 1;
            if backups >= max_backups {
                break;
            }
            if delta == 0.0 {
                continue;
            }
            let preds: Vec<StateId> = self.inbound(state).iter().copied().collect();
            for x in preds {
                let t_max = (0..self.num_actions)
                    .map(|a| self.stats[x.0][a].probability(state))
                    .fold(0.0, f64::max);
                let bump = self.gamma * t_max * delta;
                if bump == 0.0 || priority[x.0].is_infinite() {
                    continue;
                }
                priority[x.0] += bump;
                if priority[x.0] > threshold {
                    heap.push(Queued {
                        priority: priority[x.0],
                        state: x,
                    });
                }
            }
        }
        backups
    }

    /// Applies `algo` after an update that touched `s`.
    pub fn refresh_values(&mut self, s: StateId, algo: &UpdateAlgorithm) -> Result<(), ModelError> {
        match *algo {
            UpdateAlgorithm::Single => self.single_update(s),
            UpdateAlgorithm::ValueIteration {
                tolerance,
                max_sweeps,
            } => {
                self.value_iteration(tolerance, max_sweeps)?;
            }
            UpdateAlgorithm::PrioritizedSweeping {
                threshold,
                max_backups,
            } => {
                self.prioritized_sweeping(s, threshold, max_backups);
            }
        }
        Ok(())
    }

    /// Refreshes all states after a bulk change such as a tree reset.
    pub fn refresh_all(&mut self, algo: &UpdateAlgorithm) -> Result<(), ModelError> {
        match *algo {
            UpdateAlgorithm::Single => {
                for i in 0..self.num_states() {
                    self.single_update(StateId(i));
                }
            }
            UpdateAlgorithm::ValueIteration {
                tolerance,
                max_sweeps,
            } => {
                self.value_iteration(tolerance, max_sweeps)?;
            }
            UpdateAlgorithm::PrioritizedSweeping {
                threshold,
                max_backups,
            } => {
                let budget = max_backups.max(self.num_states());
                self.sweep_all(threshold, budget);
            }
        }
        Ok(())
    }
}
