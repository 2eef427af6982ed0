//! Randomized invariant checks. Each returns `Err` with the failing case.

use super::{line_tree, random_experiences, rng};
use mdpdt::agents::{build_agent, AgentConfig, AgentKind, Mode};
use mdpdt::env::{action_rng, ClusterEnv, EnvConfig};
use mdpdt::model::MdpModel;
use mdpdt::split::{CriterionKind, StrategyConfig};
use mdpdt::stats::{mann_whitney_u_test, mwu_u_statistics, TwoSampleTest};
use mdpdt::tree::{snap_split_point, DecisionTree, Measurement, ParamKind, Parameter, ParameterSpace, StateId};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

const WINDOW: f64 = 50.0;

type SplitPlan = (u32, u32, f64, usize);

/// Applies a random sequence of (multi-)splits. Infeasible ones are skipped.
fn grow(kinds: &[bool], plan: &[SplitPlan]) -> DecisionTree {
    let params = kinds
        .iter()
        .enumerate()
        .map(|(i, &d)| Parameter {
            name: format!("p{i}"),
            kind: if d { ParamKind::DiscreteInteger } else { ParamKind::Continuous },
        })
        .collect();
    let mut tree = DecisionTree::new(ParameterSpace::new(params).unwrap());
    for &(leaf, param, frac, k) in plan {
        let s = StateId(leaf as usize % tree.num_states());
        let p = param as usize % kinds.len();
        let iv = tree.leaf_interval(s, p).unwrap();
        let (lo, hi) = (iv.lo.max(-WINDOW + 1.0), iv.hi.min(WINDOW - 1.0));
        if lo >= hi {
            continue;
        }
        let kind = tree.space().kind(p);
        let mut points: Vec<f64> = (0..k)
            .map(|i| snap_split_point(kind, lo + (hi - lo) * (i as f64 + frac) / k as f64))
            .collect();
        points.dedup();
        if tree.check_split(s, p, &points).is_ok() {
            tree.split_leaf_multi(s, p, &points).unwrap();
        }
    }
    tree
}

fn disjoint(a: &[mdpdt::tree::Interval], b: &[mdpdt::tree::Interval]) -> bool {
    a.iter().zip(b).any(|(x, y)| x.hi <= y.lo || y.hi <= x.lo)
}

fn clipped_volume(bx: &[mdpdt::tree::Interval]) -> f64 {
    bx.iter()
        .map(|iv| (iv.hi.min(WINDOW) - iv.lo.max(-WINDOW)).max(0.0))
        .product()
}

/// Totality and partition: every probe lands in exactly one leaf box, boxes
/// are pairwise disjoint and their volumes tile a bounded window.
pub fn tree_partition(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::vec(any::<bool>(), 1..=3),
        prop::collection::vec((any::<u32>(), any::<u32>(), 0.01f64..0.99, 1usize..=3), 0..16),
        prop::collection::vec(prop::collection::vec(-WINDOW..WINDOW, 3), 16),
    );
    runner(cases)
        .run(&strategy, |(kinds, plan, probes)| {
            let tree = grow(&kinds, &plan);
            let boxes: Vec<_> = (0..tree.num_states()).map(|i| tree.leaf_box(StateId(i)).unwrap()).collect();
            for raw in &probes {
                let m = Measurement(
                    kinds
                        .iter()
                        .zip(raw)
                        .map(|(&d, &v)| if d { v.round() } else { v })
                        .collect(),
                );
                let s = tree.classify(&m).map_err(|e| fail(e.to_string()))?;
                let holders: Vec<usize> = boxes
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.iter().zip(&m.0).all(|(iv, &v)| iv.contains(v)))
                    .map(|(i, _)| i)
                    .collect();
                if holders != vec![s.0] {
                    return Err(fail(format!("{m:?} classified {s:?}, boxes {holders:?}")));
                }
            }
            for i in 0..boxes.len() {
                for j in i + 1..boxes.len() {
                    if !disjoint(&boxes[i], &boxes[j]) {
                        return Err(fail(format!("leaves {i} and {j} overlap")));
                    }
                }
            }
            let total: f64 = boxes.iter().map(|b| clipped_volume(b)).sum();
            let whole = (2.0 * WINDOW).powi(kinds.len() as i32);
            if (total - whole).abs() > 1e-9 * whole {
                return Err(fail(format!("volumes sum to {total}, window is {whole}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec((0i32..12).prop_map(f64::from), 1..30),
        prop::collection::vec(-1e3f64..1e3, 1..30),
    ]
}

/// `U1 + U2 = n1·n2`, the statistic is `min(U1, U2)`, and swapping the
/// samples leaves the outcome unchanged.
pub fn u_identity(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(sample(), sample()), |(a, b)| {
            let (u1, u2) = mwu_u_statistics(&a, &b).unwrap();
            let n = (a.len() * b.len()) as f64;
            if u1 + u2 != n {
                return Err(fail(format!("U1 + U2 = {} != {n}", u1 + u2)));
            }
            let ab = mann_whitney_u_test(&a, &b).unwrap();
            let ba = mann_whitney_u_test(&b, &a).unwrap();
            if ab.statistic != u1.min(u2) || ab.statistic != ba.statistic || ab.p_value != ba.p_value {
                return Err(fail(format!("{ab:?} vs {ba:?}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every tried (s, a) has outgoing probabilities summing to one, before and
/// after random splits; untried ones have none.
pub fn transition_normalization(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 1usize..15, 1usize..5, 0usize..200, prop::collection::vec((any::<u32>(), 0.01f64..0.99), 0..6));
    runner(cases)
        .run(&strategy, |(seed, n, na, count, splits)| {
            let mut r = rng(seed);
            let log = random_experiences(&mut r, n, na, count);
            let mut model = MdpModel::rebuild(line_tree(n), na, 0.9, &log).unwrap();
            check_normalized(&model)?;
            for (leaf, frac) in splits {
                let s = StateId(leaf as usize % model.num_states());
                let iv = model.tree().leaf_interval(s, 0).unwrap();
                let (lo, hi) = (iv.lo.max(-1.0), iv.hi.min(n as f64));
                let point = lo + (hi - lo) * frac;
                if iv.strictly_inside(point) {
                    model.split_state(s, 0, &[point]).map_err(|e| fail(e.to_string()))?;
                    check_normalized(&model)?;
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn check_normalized(model: &MdpModel) -> Result<(), TestCaseError> {
    for s in 0..model.num_states() {
        for a in 0..model.num_actions() {
            let st = model.stats(StateId(s), a);
            let sum: f64 = (0..model.num_states()).map(|sp| st.probability(StateId(sp))).sum();
            let counted: u64 = st.dest.values().map(|t| t.count).sum();
            let ok = if st.count == 0 { sum == 0.0 } else { (sum - 1.0).abs() < 1e-12 };
            if !ok || counted != st.count {
                return Err(fail(format!("(s{s}, a{a}): sum {sum}, count {} vs {counted}", st.count)));
            }
        }
    }
    Ok(())
}

const STRATEGIES: [StrategyConfig; 6] = [
    StrategyConfig::Default,
    StrategyConfig::None,
    StrategyConfig::Training { steps: 30 },
    StrategyConfig::Chain,
    StrategyConfig::TwoPhase { period: 10 },
    StrategyConfig::ResetChain { period: 25 },
];

/// Serialized metrics, eval trace and journal of one short run.
fn run_bytes(env_cfg: &EnvConfig, cfg: &AgentConfig, kind: AgentKind, seed: u64, train: usize) -> Vec<u8> {
    let mut env = ClusterEnv::new(env_cfg.clone(), seed);
    let mut rng = action_rng(seed);
    let mut agent = build_agent(kind, cfg, env.space(), env.num_actions()).unwrap();
    let mut out = Vec::new();
    let m = mdpdt::agents::run_episode(agent.as_mut(), &mut env, train, Mode::Train { epsilon: cfg.epsilon }, &mut rng, None).unwrap();
    out.extend(serde_json::to_vec(&m).unwrap());
    let mut trace = Vec::new();
    let m = mdpdt::agents::run_episode(agent.as_mut(), &mut env, 20, Mode::Eval, &mut rng, Some(&mut trace)).unwrap();
    out.extend(serde_json::to_vec(&m).unwrap());
    out.extend(serde_json::to_vec(&trace).unwrap());
    agent.journal().write(&mut out).unwrap();
    out
}

/// Two runs from the same seed and configuration produce identical bytes.
pub fn determinism(cases: u32, env_cfg: &EnvConfig, base: &AgentConfig) -> Result<(), String> {
    let strategy = (any::<u64>(), 0usize..4, 0usize..3, 0usize..4, 0usize..STRATEGIES.len(), prop::bool::ANY, 20usize..120);
    runner(cases)
        .run(&strategy, |(seed, kind, crit, test, strat, loose, train)| {
            let kind = AgentKind::ALL[kind];
            let mut cfg = base.clone();
            cfg.criterion.criterion = [CriterionKind::ParameterTest, CriterionKind::QValueTestMedian, CriterionKind::QValueTestMultipoint][crit];
            cfg.criterion.test = TwoSampleTest::ALL[test];
            cfg.criterion.max_type_i_error = if loose { 0.2 } else { 0.002 };
            cfg.strategy = STRATEGIES[strat];
            if kind == AgentKind::Qdt && strat > 2 {
                cfg.strategy = StrategyConfig::Default;
            }
            let a = run_bytes(env_cfg, &cfg, kind, seed, train);
            let b = run_bytes(env_cfg, &cfg, kind, seed, train);
            if a != b {
                return Err(fail(format!("{kind:?} seed {seed} diverged")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}
