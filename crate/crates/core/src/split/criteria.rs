//! Splitting criteria.
//!
//! Both criteria look at the experiences of a leaf whose action is the
//! leaf's current optimal action, each paired with its Q-value
//! `r + γ·V(s')` under the current tree.

use super::{CriterionConfig, CriterionKind, SplitDecision};
use crate::model::{MdpModel, ModelError};
use crate::stats::TwoSampleTest;
use crate::tree::{snap_split_point, DecisionTree, Measurement, StateId};

/// One experience as seen by a criterion.
#[derive(Debug, Clone, Copy)]
pub struct Scored<'a> {
    pub m: &'a Measurement,
    pub q: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    param: usize,
    point: f64,
    error_prob: f64,
}

fn test_groups(test: TwoSampleTest, a: &[f64], b: &[f64]) -> Option<f64> {
    let need = test.min_group_size();
    if a.len() < need || b.len() < need {
        return None;
    }
    test.run(a, b).ok().map(|o| o.p_value)
}

/// Lowest error probability wins; ties keep the earlier candidate.
fn pick(candidates: impl IntoIterator<Item = Candidate>, cfg: &CriterionConfig, s: StateId) -> Option<SplitDecision> {
    let mut best: Option<Candidate> = None;
    for c in candidates {
        if best.is_none_or(|b| c.error_prob < b.error_prob) {
            best = Some(c);
        }
    }
    best.filter(|b| b.error_prob <= cfg.max_type_i_error)
        .map(|b| SplitDecision {
            state: s,
            param: b.param,
            point: b.point,
            error_prob: b.error_prob,
        })
}

/// Split point adjusted for the parameter kind, or `None` when it does not
/// fall strictly inside the leaf.
fn legal_point(tree: &DecisionTree, s: StateId, param: usize, raw: f64) -> Option<f64> {
    let point = snap_split_point(tree.space().kind(param), raw);
    let interval = tree.leaf_interval(s, param).ok()?;
    interval.strictly_inside(point).then_some(point)
}

/// Parameter test: partition by `q >= value`, then test each parameter's
/// values between the two groups. The split point is the midpoint of the
/// two group means.
pub fn parameter_test(
    tree: &DecisionTree,
    s: StateId,
    samples: &[Scored<'_>],
    value: f64,
    cfg: &CriterionConfig,
) -> Option<SplitDecision> {
    let (plus, minus): (Vec<&Scored>, Vec<&Scored>) = samples.iter().partition(|e| e.q >= value);
    if plus.is_empty() || minus.is_empty() {
        return None;
    }
    let mut candidates = Vec::new();
    let mut p_minus = Vec::with_capacity(minus.len());
    let mut p_plus = Vec::with_capacity(plus.len());
    for param in 0..tree.space().len() {
        p_minus.clear();
        p_plus.clear();
        p_minus.extend(minus.iter().map(|e| e.m.get(param)));
        p_plus.extend(plus.iter().map(|e| e.m.get(param)));
        let Some(error_prob) = test_groups(cfg.test, &p_minus, &p_plus) else {
            continue;
        };
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let raw = (mean(&p_minus) + mean(&p_plus)) / 2.0;
        if let Some(point) = legal_point(tree, s, param, raw) {
            candidates.push(Candidate {
                param,
                point,
                error_prob,
            });
        }
    }
    pick(candidates, cfg, s)
}

/// Q-value test: sort by each parameter and test the Q-values on either
/// side of a cut between consecutive unequal values. `all_points` tries
/// every such cut; otherwise only the cut closest to the median.
pub fn q_value_test(
    tree: &DecisionTree,
    s: StateId,
    samples: &[Scored<'_>],
    all_points: bool,
    cfg: &CriterionConfig,
) -> Option<SplitDecision> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mut candidates = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for param in 0..tree.space().len() {
        // stable sort keeps log order among equal values
        order.sort_by(|&i, &j| samples[i].m.get(param).total_cmp(&samples[j].m.get(param)));
        let value_at = |k: usize| samples[order[k]].m.get(param);
        // cut k puts order[..k] on the left
        let cuts: Vec<usize> = (1..n).filter(|&k| value_at(k - 1) != value_at(k)).collect();
        if cuts.is_empty() {
            continue;
        }
        let chosen: Vec<usize> = if all_points {
            cuts
        } else {
            let half = n as f64 / 2.0;
            let best = cuts
                .iter()
                .copied()
                .min_by(|&a, &b| (a as f64 - half).abs().total_cmp(&(b as f64 - half).abs()))
                .expect("cuts is non-empty");
            vec![best]
        };
        let qs: Vec<f64> = order.iter().map(|&i| samples[i].q).collect();
        let mut best_here: Option<Candidate> = None;
        for k in chosen {
            let Some(error_prob) = test_groups(cfg.test, &qs[..k], &qs[k..]) else {
                continue;
            };
            let raw = (value_at(k - 1) + value_at(k)) / 2.0;
            let Some(point) = legal_point(tree, s, param, raw) else {
                continue;
            };
            if best_here.is_none_or(|b| error_prob < b.error_prob) {
                best_here = Some(Candidate {
                    param,
                    point,
                    error_prob,
                });
            }
        }
        candidates.extend(best_here);
    }
    pick(candidates, cfg, s)
}

/// Experiences of `s` taken with its optimal action, scored against the
/// current values, together with that action's current Q-value.
pub fn scored_optimal_experiences(model: &MdpModel, s: StateId) -> Result<Option<(Vec<Scored<'_>>, f64)>, ModelError> {
    let a = match model.optimal_action(s) {
        Ok(a) => a,
        Err(ModelError::NoData(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let log = model.log();
    let mut out = Vec::new();
    for idx in model.experiences_from(s) {
        let e = &log[idx];
        if e.action == a {
            out.push(Scored {
                m: &e.m,
                q: model.q_value_of_experience(e)?,
            });
        }
    }
    Ok(Some((out, model.stored_q(s, a))))
}

/// Runs the configured criterion against leaf `s` of the model.
pub fn evaluate(model: &MdpModel, s: StateId, cfg: &CriterionConfig) -> Result<Option<SplitDecision>, ModelError> {
    let Some((samples, value)) = scored_optimal_experiences(model, s)? else {
        return Ok(None);
    };
    Ok(match cfg.criterion {
        CriterionKind::ParameterTest => parameter_test(model.tree(), s, &samples, value, cfg),
        CriterionKind::QValueTestMedian => q_value_test(model.tree(), s, &samples, false, cfg),
        CriterionKind::QValueTestMultipoint => q_value_test(model.tree(), s, &samples, true, cfg),
    })
}

pub fn split_parameter_test(model: &MdpModel, s: StateId, cfg: &CriterionConfig) -> Result<Option<SplitDecision>, ModelError> {
    let cfg = CriterionConfig {
        criterion: CriterionKind::ParameterTest,
        ..*cfg
    };
    evaluate(model, s, &cfg)
}

pub fn split_q_value_test(
    model: &MdpModel,
    s: StateId,
    cfg: &CriterionConfig,
    all_points: bool,
) -> Result<Option<SplitDecision>, ModelError> {
    let cfg = CriterionConfig {
        criterion: if all_points {
            CriterionKind::QValueTestMultipoint
        } else {
            CriterionKind::QValueTestMedian
        },
        ..*cfg
    };
    evaluate(model, s, &cfg)
}
